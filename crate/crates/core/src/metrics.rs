//! Transition diagnostics for single trajectories and order statistics over
//! replicate ensembles.
//!
//! "Full adoption" and "full rejection" are operationalized with thresholds.
//! A run has fully adopted when the mean adoption rate over its trailing
//! window is at least `adopt_threshold`; the transition time is the first
//! step reaching the threshold after the run was last at or below the
//! midpoint between the two thresholds. Rejection is symmetric.
//!
//! Saturation is judged on the trailing window rather than step by step:
//! near saturation the stationary rate can sit within a few agents of the
//! threshold (at beta = 5 every agent still abstains with probability
//! 1 - sigmoid(5) = 0.0067), so single-step dips are routine.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};
use crate::population::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    FullAdoption,
    FullRejection,
    Stalemate,
    NoiseDominated,
}

impl Regime {
    pub const ALL: [Regime; 4] = [
        Regime::FullAdoption,
        Regime::FullRejection,
        Regime::Stalemate,
        Regime::NoiseDominated,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::FullAdoption => "full_adoption",
            Regime::FullRejection => "full_rejection",
            Regime::Stalemate => "stalemate",
            Regime::NoiseDominated => "noise_dominated",
        }
    }

    pub fn is_transition(self) -> bool {
        matches!(self, Regime::FullAdoption | Regime::FullRejection)
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionParams {
    pub adopt_threshold: f64,
    pub reject_threshold: f64,
    /// Length of the trailing window used for the fluctuation band.
    pub window: usize,
    /// Standard deviation above which an undecided run counts as noise.
    pub noise_floor: f64,
}

impl Default for DetectionParams {
    fn default() -> Self {
        DetectionParams {
            adopt_threshold: 0.98,
            reject_threshold: 0.02,
            window: 50,
            noise_floor: 0.015,
        }
    }
}

impl DetectionParams {
    pub fn validate(&self) -> Result<()> {
        check_unit("adopt_threshold", self.adopt_threshold)?;
        check_unit("reject_threshold", self.reject_threshold)?;
        if self.reject_threshold >= self.adopt_threshold {
            return Err(Error::invalid(format!(
                "reject_threshold ({}) must be below adopt_threshold ({})",
                self.reject_threshold, self.adopt_threshold
            )));
        }
        if self.window == 0 {
            return Err(Error::invalid("window must be at least 1"));
        }
        if !(self.noise_floor >= 0.0 && self.noise_floor.is_finite()) {
            return Err(Error::invalid("noise_floor must be a non-negative number"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionOutcome {
    pub regime: Regime,
    /// Start of the final saturated stretch; set only for transitions.
    pub transition_time: Option<usize>,
    pub terminal_rate: f64,
    /// `(mean, stddev)` of the adoption rate over the trailing window.
    pub fluctuation_band: (f64, f64),
}

/// Classifies an adoption-rate series.
pub fn detect_transition(series: &[f64], det: &DetectionParams) -> Result<TransitionOutcome> {
    det.validate()?;
    if series.is_empty() {
        return Err(Error::invalid("cannot classify an empty series"));
    }
    if det.window > series.len() {
        return Err(Error::invalid(format!(
            "window ({}) exceeds trajectory length ({})",
            det.window,
            series.len()
        )));
    }
    let terminal_rate = series[series.len() - 1];
    let tail = &series[series.len() - det.window..];
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let var = tail.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / tail.len() as f64;
    let band = (mean, var.sqrt());

    let midpoint = 0.5 * (det.reject_threshold + det.adopt_threshold);
    // Start of the final saturated stretch: the first step at or beyond the
    // threshold since the series was last on the far side of the midpoint.
    let settled_at = |reached: &dyn Fn(f64) -> bool, far_side: &dyn Fn(f64) -> bool| {
        let start = series.iter().rposition(|&v| far_side(v)).map_or(0, |k| k + 1);
        series[start..].iter().position(|&v| reached(v)).map(|i| start + i)
    };

    let adopted = (band.0 >= det.adopt_threshold)
        .then(|| settled_at(&|v| v >= det.adopt_threshold, &|v| v <= midpoint))
        .flatten();
    let rejected = (band.0 <= det.reject_threshold)
        .then(|| settled_at(&|v| v <= det.reject_threshold, &|v| v >= midpoint))
        .flatten();

    let (regime, transition_time) = if let Some(t) = adopted {
        (Regime::FullAdoption, Some(t))
    } else if let Some(t) = rejected {
        (Regime::FullRejection, Some(t))
    } else if band.1 > det.noise_floor
        && band.0 > det.reject_threshold
        && band.0 < det.adopt_threshold
    {
        (Regime::NoiseDominated, None)
    } else {
        (Regime::Stalemate, None)
    };

    Ok(TransitionOutcome {
        regime,
        transition_time,
        terminal_rate,
        fluctuation_band: band,
    })
}

/// Fraction of ones in a list of binary actions.
pub fn adoption_rate(actions: &[u8]) -> Result<f64> {
    if actions.is_empty() {
        return Err(Error::invalid("adoption rate of an empty population"));
    }
    let ones = actions.iter().filter(|&&y| y == 1).count();
    Ok(ones as f64 / actions.len() as f64)
}

/// Lower-nearest-rank quantile of sorted data at `pct` percent:
/// element `floor(pct * (len - 1) / 100)`. Never interpolates.
pub fn lower_rank<T: Copy>(sorted: &[T], pct: usize) -> T {
    assert!(!sorted.is_empty() && pct <= 100);
    sorted[pct * (sorted.len() - 1) / 100]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepQuantiles {
    pub q10: f64,
    pub median: f64,
    pub q90: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeCounts {
    pub full_adoption: usize,
    pub full_rejection: usize,
    pub stalemate: usize,
    pub noise_dominated: usize,
}

impl RegimeCounts {
    pub fn get(&self, regime: Regime) -> usize {
        match regime {
            Regime::FullAdoption => self.full_adoption,
            Regime::FullRejection => self.full_rejection,
            Regime::Stalemate => self.stalemate,
            Regime::NoiseDominated => self.noise_dominated,
        }
    }

    fn bump(&mut self, regime: Regime) {
        let slot = match regime {
            Regime::FullAdoption => &mut self.full_adoption,
            Regime::FullRejection => &mut self.full_rejection,
            Regime::Stalemate => &mut self.stalemate,
            Regime::NoiseDominated => &mut self.noise_dominated,
        };
        *slot += 1;
    }

    pub fn total(&self) -> usize {
        Regime::ALL.iter().map(|&r| self.get(r)).sum()
    }

    pub fn fraction(&self, regime: Regime) -> f64 {
        self.get(regime) as f64 / self.total().max(1) as f64
    }
}

/// Median and interquartile range of transition times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeStats {
    pub median: usize,
    pub q25: usize,
    pub q75: usize,
    /// Number of replicates that transitioned.
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub replicates: usize,
    pub per_step_quantiles: Vec<StepQuantiles>,
    pub regime_counts: RegimeCounts,
    pub median_transition_time: Option<TimeStats>,
}

impl EnsembleSummary {
    pub fn median_series(&self) -> Vec<f64> {
        self.per_step_quantiles.iter().map(|q| q.median).collect()
    }

    pub fn terminal_median(&self) -> f64 {
        self.per_step_quantiles
            .last()
            .expect("summary covers at least one step")
            .median
    }
}

/// Per-step quantiles, regime counts and transition-time statistics over
/// replicates sharing the same parameters and horizon.
pub fn summarize_ensemble(trajs: &[Trajectory], det: &DetectionParams) -> Result<EnsembleSummary> {
    let first = trajs
        .first()
        .ok_or_else(|| Error::invalid("cannot summarize an empty ensemble"))?;
    let steps = first.y_avg_series.len();
    for (r, traj) in trajs.iter().enumerate() {
        if traj.y_avg_series.len() != steps {
            return Err(Error::invalid(format!(
                "replicate {r} has {} steps, expected {steps}",
                traj.y_avg_series.len()
            )));
        }
        if traj.params != first.params {
            return Err(Error::invalid(format!(
                "replicate {r} was run with different model parameters"
            )));
        }
    }

    let mut column = Vec::with_capacity(trajs.len());
    let per_step_quantiles = (0..steps)
        .map(|t| {
            column.clear();
            column.extend(trajs.iter().map(|tr| tr.y_avg_series[t]));
            column.sort_by(f64::total_cmp);
            StepQuantiles {
                q10: lower_rank(&column, 10),
                median: lower_rank(&column, 50),
                q90: lower_rank(&column, 90),
            }
        })
        .collect();

    let mut regime_counts = RegimeCounts::default();
    let mut times = Vec::new();
    for traj in trajs {
        let outcome = detect_transition(&traj.y_avg_series, det)?;
        regime_counts.bump(outcome.regime);
        times.extend(outcome.transition_time);
    }
    times.sort_unstable();
    let median_transition_time = (!times.is_empty()).then(|| TimeStats {
        median: lower_rank(&times, 50),
        q25: lower_rank(&times, 25),
        q75: lower_rank(&times, 75),
        count: times.len(),
    });

    Ok(EnsembleSummary {
        replicates: trajs.len(),
        per_step_quantiles,
        regime_counts,
        median_transition_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BehaviorType, ModelParams};
    use crate::population::PopulationConfig;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn traj(series: Vec<f64>) -> Trajectory {
        Trajectory {
            params: ModelParams::new(BehaviorType::Beneficial, 0.7, 5.0, 1.0).unwrap(),
            config: PopulationConfig::new(BehaviorType::Beneficial),
            y_avg_series: series,
            state_snapshots: None,
        }
    }

    fn det() -> DetectionParams {
        DetectionParams::default()
    }

    #[test]
    fn saturated_series() {
        let out = detect_transition(&[1.0; 100], &det()).unwrap();
        assert_eq!(out.regime, Regime::FullAdoption);
        assert_eq!(out.transition_time, Some(0));
        assert_eq!(out.terminal_rate, 1.0);
        let out = detect_transition(&[0.0; 100], &det()).unwrap();
        assert_eq!(out.regime, Regime::FullRejection);
        assert_eq!(out.transition_time, Some(0));
    }

    #[test]
    fn transition_time_is_start_of_final_stretch() {
        let mut s = vec![0.1; 60];
        s.extend([0.9, 0.99, 0.97, 0.99]);
        s.extend(vec![1.0; 60]);
        let out = detect_transition(&s, &det()).unwrap();
        assert_eq!(out.regime, Regime::FullAdoption);
        assert_eq!(out.transition_time, Some(61));

        // an early spike that collapses does not count
        let mut s = vec![0.1; 20];
        s.extend([0.99; 5]);
        s.extend([0.1; 30]);
        s.extend([0.99; 60]);
        assert_eq!(detect_transition(&s, &det()).unwrap().transition_time, Some(55));
    }

    #[test]
    fn dips_near_saturation_are_tolerated() {
        // stationary rate ~0.993 with occasional dips below 0.98
        let mut s = vec![0.1; 40];
        s.extend((0..260).map(|t| if t % 37 == 36 { 0.9766667 } else { 0.9933333 }));
        let out = detect_transition(&s, &det()).unwrap();
        assert_eq!(out.regime, Regime::FullAdoption);
        assert_eq!(out.transition_time, Some(40));
    }

    #[test]
    fn unsettled_tail_is_not_a_transition() {
        let mut s = vec![0.5; 60];
        s.push(1.0);
        assert_ne!(detect_transition(&s, &det()).unwrap().regime, Regime::FullAdoption);
        // settled just below the threshold
        let out = detect_transition(&[0.973; 100], &det()).unwrap();
        assert_eq!(out.regime, Regime::Stalemate);
        // window mean saturated but final step on the far side
        let mut s = vec![1.0; 49];
        s.push(0.0);
        let w = DetectionParams { window: 50, ..det() };
        let out = detect_transition(&s, &w).unwrap();
        assert_eq!(out.regime, Regime::Stalemate);
    }

    #[test]
    fn binomial_noise_is_noise_dominated() {
        // i.i.d. Binomial(300, 0.5) / 300: stddev sqrt(0.25 / 300) ~ 0.0289.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let series: Vec<f64> = (0..301)
            .map(|_| (0..300).filter(|_| rng.random::<f64>() < 0.5).count() as f64 / 300.0)
            .collect();
        let out = detect_transition(&series, &det()).unwrap();
        assert_eq!(out.regime, Regime::NoiseDominated);
        assert!((out.fluctuation_band.0 - 0.5).abs() < 0.02);
        assert!(out.transition_time.is_none());
    }

    #[test]
    fn flat_intermediate_is_stalemate() {
        let out = detect_transition(&[0.1; 80], &det()).unwrap();
        assert_eq!(out.regime, Regime::Stalemate);
        assert!((out.fluctuation_band.0 - 0.1).abs() < 1e-12);
        assert!(out.fluctuation_band.1 < 1e-12);
    }

    #[test]
    fn detection_errors() {
        let bad = DetectionParams {
            adopt_threshold: 0.2,
            reject_threshold: 0.3,
            ..det()
        };
        assert!(detect_transition(&[0.5; 100], &bad).is_err());
        assert!(detect_transition(&[0.5; 10], &det()).is_err());
        let zero = DetectionParams { window: 0, ..det() };
        assert!(detect_transition(&[0.5; 10], &zero).is_err());
    }

    #[test]
    fn adoption_rate_examples() {
        assert_eq!(adoption_rate(&[1, 1, 1, 1]).unwrap(), 1.0);
        assert_eq!(adoption_rate(&[0, 0, 0, 0]).unwrap(), 0.0);
        let mut v = vec![0u8; 270];
        v.extend([1u8; 30]);
        assert_eq!(adoption_rate(&v).unwrap(), 0.1);
        assert!(adoption_rate(&[]).is_err());
    }

    #[test]
    fn summary_examples() {
        let single = summarize_ensemble(&[traj(vec![0.1, 0.2, 0.3])], &DetectionParams { window: 2, ..det() })
            .unwrap();
        assert_eq!(single.median_series(), vec![0.1, 0.2, 0.3]);

        let two = [traj(vec![0.2; 60]), traj(vec![0.4; 60])];
        let s = summarize_ensemble(&two, &det()).unwrap();
        assert!(s.per_step_quantiles.iter().all(|q| q.median == 0.2));
        assert_eq!(s.regime_counts.total(), 2);
    }

    #[test]
    fn summary_errors() {
        assert!(summarize_ensemble(&[], &det()).is_err());
        let mismatched = [traj(vec![0.2; 60]), traj(vec![0.4; 61])];
        assert!(summarize_ensemble(&mismatched, &det()).is_err());
        let mut other = traj(vec![0.2; 60]);
        other.params.phi = 0.3;
        assert!(summarize_ensemble(&[traj(vec![0.2; 60]), other], &det()).is_err());
    }

    #[test]
    fn lower_rank_rule() {
        let v: Vec<usize> = (0..50).collect();
        assert_eq!(lower_rank(&v, 10), 4);
        assert_eq!(lower_rank(&v, 50), 24);
        assert_eq!(lower_rank(&v, 90), 44);
        assert_eq!(lower_rank(&[7], 90), 7);
    }

    fn series_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec((0u32..=30).prop_map(|k| f64::from(k) / 30.0), 50..120)
    }

    proptest! {
        #[test]
        fn appending_saturation_keeps_time(s in series_strategy(), extra in 1usize..50) {
            let out = detect_transition(&s, &det()).unwrap();
            if out.regime == Regime::FullAdoption {
                let mut longer = s.clone();
                longer.extend(std::iter::repeat_n(1.0, extra));
                let again = detect_transition(&longer, &det()).unwrap();
                prop_assert_eq!(again.regime, Regime::FullAdoption);
                prop_assert_eq!(again.transition_time, out.transition_time);
            }
            prop_assert_eq!(out.transition_time.is_some(), out.regime.is_transition());
            prop_assert_eq!(out.terminal_rate, *s.last().unwrap());
        }

        #[test]
        fn summary_is_permutation_invariant(
            rows in prop::collection::vec(prop::collection::vec((0u32..=10).prop_map(|k| f64::from(k) / 10.0), 60), 1..12),
            rotate in 0usize..12,
        ) {
            let trajs: Vec<_> = rows.into_iter().map(traj).collect();
            let mut shuffled = trajs.clone();
            let k = rotate % shuffled.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
            let a = summarize_ensemble(&trajs, &det()).unwrap();
            let b = summarize_ensemble(&shuffled, &det()).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(a.regime_counts.total(), trajs.len());
            for q in &a.per_step_quantiles {
                prop_assert!(q.q10 <= q.median && q.median <= q.q90);
            }
        }
    }
}
