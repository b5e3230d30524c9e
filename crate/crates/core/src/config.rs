//! Scenario and grid files.
//!
//! Configs are TOML documents. `behavior`, `phi` and `beta` are required;
//! everything else has a default. Giving any of `phi`, `beta`, `lambda` or
//! `alpha` as an array turns the document into a grid over those axes.
//!
//! ```toml
//! behavior = "beneficial"      # or "harmful"
//! phi = [0.3, 0.7]             # attitude weight, in [0,1]
//! beta = [5, 10]               # logit rationality, >= 0
//! lambda = 1.0                 # attitude sensitivity, > 0
//! alpha = 0.9                  # majority fraction, in [0.5,1]
//! n = 300
//! horizon = 300
//! replicates = 50
//! seed = 0                     # integer, or a decimal string above 2^63
//! majority_range = [0.0, 0.4]  # defaults depend on behavior
//! minority_range = [0.6, 0.7]
//! max_cells = 10000            # grids only
//!
//! [detection]
//! adopt_threshold = 0.98
//! reject_threshold = 0.02
//! window = 50
//! noise_floor = 0.015
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::DetectionParams;
use crate::model::{BehaviorType, ModelParams};
use crate::population::{default_ranges, InitRange, PopulationConfig, DEFAULT_ALPHA, DEFAULT_HORIZON, DEFAULT_N};
use crate::sweep::{Axis, GridSpec, Scenario, DEFAULT_MAX_CELLS, DEFAULT_REPLICATES};

/// Example configurations shipped with the tool, addressable by name.
pub const BUNDLED: [(&str, &str); 4] = [
    ("fig3_baseline", include_str!("../configs/fig3_baseline.toml")),
    ("fig3_grid", include_str!("../configs/fig3_grid.toml")),
    ("fig4_extremes", include_str!("../configs/fig4_extremes.toml")),
    ("fig5_grid", include_str!("../configs/fig5_grid.toml")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    let name = name.strip_suffix(".toml").unwrap_or(name);
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Config {
    Scenario(Scenario),
    Grid(GridSpec),
}

impl Config {
    pub fn base(&self) -> &Scenario {
        match self {
            Config::Scenario(s) => s,
            Config::Grid(g) => &g.base,
        }
    }

    pub fn base_mut(&mut self) -> &mut Scenario {
        match self {
            Config::Scenario(s) => s,
            Config::Grid(g) => &mut g.base,
        }
    }

    /// Fully materialized TOML; `parse_config` reads it back unchanged.
    pub fn to_toml(&self) -> String {
        let (base, axes, max_cells) = match self {
            Config::Scenario(s) => (s, &[][..], None),
            Config::Grid(g) => (&g.base, &g.axes[..], Some(g.max_cells as u64)),
        };
        let value = |axis: Axis| match axes.iter().find(|(a, _)| *a == axis) {
            Some((_, values)) => OneOrMany::Many(values.clone()),
            None => OneOrMany::One(axis.get(base)),
        };
        let raw = RawConfig {
            behavior: base.params.behavior,
            phi: value(Axis::Phi),
            beta: value(Axis::Beta),
            lambda: Some(value(Axis::Lambda)),
            alpha: Some(value(Axis::Alpha)),
            n: Some(base.population.n as u64),
            horizon: Some(base.horizon as u64),
            replicates: Some(base.replicates as u64),
            seed: Some(SeedRepr::from_u64(base.base_seed)),
            majority_range: Some([base.population.majority_range.lo, base.population.majority_range.hi]),
            minority_range: Some([base.population.minority_range.lo, base.population.minority_range.hi]),
            max_cells,
            detection: Some(base.detection),
        };
        toml::to_string(&raw).expect("config is always representable as TOML")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum SeedRepr {
    Int(i64),
    Text(String),
}

impl SeedRepr {
    fn from_u64(seed: u64) -> Self {
        i64::try_from(seed).map_or_else(|_| SeedRepr::Text(seed.to_string()), SeedRepr::Int)
    }

    fn to_u64(&self) -> Result<u64> {
        match self {
            SeedRepr::Int(v) => u64::try_from(*v)
                .map_err(|_| Error::invalid(format!("seed must be non-negative (got {v})"))),
            SeedRepr::Text(s) => s
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("seed must be an unsigned 64-bit integer (got {s:?})"))),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    behavior: BehaviorType,
    phi: OneOrMany,
    beta: OneOrMany,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lambda: Option<OneOrMany>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<OneOrMany>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    horizon: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    replicates: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<SeedRepr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    majority_range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    minority_range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_cells: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    detection: Option<DetectionParams>,
}

fn to_usize(field: &str, v: u64) -> Result<usize> {
    usize::try_from(v).map_err(|_| Error::invalid(format!("{field} is too large ({v})")))
}

/// Parses and validates a scenario or grid document, applying defaults.
pub fn parse_config(text: &str) -> Result<Config> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string().trim_end().to_string()))?;
    let behavior = raw.behavior;

    let mut axes = Vec::new();
    let mut scalar = |axis: Axis, value: Option<OneOrMany>, default: f64| -> f64 {
        match value {
            None => default,
            Some(OneOrMany::One(v)) => v,
            Some(OneOrMany::Many(values)) => {
                let first = values.first().copied().unwrap_or(default);
                axes.push((axis, values));
                first
            }
        }
    };
    let phi = scalar(Axis::Phi, Some(raw.phi), 0.0);
    let beta = scalar(Axis::Beta, Some(raw.beta), 0.0);
    let lambda = scalar(Axis::Lambda, raw.lambda, 1.0);
    let alpha = scalar(Axis::Alpha, raw.alpha, DEFAULT_ALPHA);

    let (default_major, default_minor) = default_ranges(behavior);
    let range = |r: Option<[f64; 2]>, default: InitRange| {
        r.map_or(default, |[lo, hi]| InitRange { lo, hi })
    };
    let population = PopulationConfig {
        n: to_usize("n", raw.n.unwrap_or(DEFAULT_N as u64))?,
        alpha,
        behavior,
        majority_range: range(raw.majority_range, default_major),
        minority_range: range(raw.minority_range, default_minor),
        seed: 0,
    };
    let base = Scenario {
        params: ModelParams {
            phi,
            beta,
            lambda,
            behavior,
        },
        population,
        horizon: to_usize("horizon", raw.horizon.unwrap_or(DEFAULT_HORIZON as u64))?,
        replicates: to_usize("replicates", raw.replicates.unwrap_or(DEFAULT_REPLICATES as u64))?,
        base_seed: raw.seed.as_ref().map_or(Ok(0), SeedRepr::to_u64)?,
        detection: raw.detection.unwrap_or_default(),
    };

    if axes.is_empty() {
        if raw.max_cells.is_some() {
            return Err(Error::invalid("max_cells only applies to grid configs"));
        }
        base.validate()?;
        return Ok(Config::Scenario(base));
    }

    let grid = GridSpec {
        axes,
        base,
        max_cells: to_usize("max_cells", raw.max_cells.unwrap_or(DEFAULT_MAX_CELLS as u64))?,
    };
    // validates every cell, which covers every axis value
    grid.cells()?;
    Ok(Config::Grid(grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config("behavior = \"beneficial\"\nphi = 0.7\nbeta = 5\n").unwrap();
        let Config::Scenario(s) = cfg else { panic!("expected a scenario") };
        assert_eq!(s.params, ModelParams::new(BehaviorType::Beneficial, 0.7, 5.0, 1.0).unwrap());
        assert_eq!(s.population, PopulationConfig::new(BehaviorType::Beneficial));
        assert_eq!(s.horizon, 300);
        assert_eq!(s.replicates, 50);
        assert_eq!(s.detection, DetectionParams::default());
    }

    #[test]
    fn harmful_defaults_use_harmful_ranges() {
        let Config::Scenario(s) = parse_config("behavior = \"harmful\"\nphi = 0.3\nbeta = 10.0").unwrap() else {
            panic!()
        };
        assert_eq!(s.population.majority_range, InitRange { lo: 0.6, hi: 1.0 });
    }

    #[test]
    fn out_of_range_phi_names_the_field() {
        let err = parse_config("behavior = \"beneficial\"\nphi = 1.5\nbeta = 5").unwrap_err();
        assert!(err.to_string().starts_with("phi must lie in [0,1]"), "{err}");
        let err = parse_config("behavior = \"beneficial\"\nphi = [0.2, 1.5]\nbeta = 5").unwrap_err();
        assert!(err.to_string().starts_with("phi must lie in [0,1]"), "{err}");
    }

    #[test]
    fn grid_config() {
        let cfg = parse_config("behavior = \"beneficial\"\nphi = [0.3, 0.7]\nbeta = [5, 10]").unwrap();
        let Config::Grid(g) = cfg else { panic!("expected a grid") };
        assert_eq!(g.cell_count(), 4);
        assert_eq!(g.axes[0], (Axis::Phi, vec![0.3, 0.7]));
        assert_eq!(g.axes[1], (Axis::Beta, vec![5.0, 10.0]));
    }

    #[test]
    fn parse_errors_carry_location() {
        let err = parse_config("behavior = \"beneficial\"\nphi = 0.7\nbeta = = 5").unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = parse_config("behavior = \"beneficial\"\nphi = 0.7\nbeta = 5\ngamma = 1").unwrap_err();
        assert!(err.to_string().contains("gamma"), "{err}");
        assert!(parse_config("phi = 0.7\nbeta = 5").is_err());
        assert!(parse_config("behavior = \"neutral\"\nphi = 0.7\nbeta = 5").is_err());
    }

    #[test]
    fn seed_forms() {
        let text = "behavior = \"beneficial\"\nphi = 0.7\nbeta = 5\nseed = \"18446744073709551615\"";
        assert_eq!(parse_config(text).unwrap().base().base_seed, u64::MAX);
        assert!(parse_config("behavior = \"beneficial\"\nphi = 0.7\nbeta = 5\nseed = -3").is_err());
    }

    #[test]
    fn bundled_configs_parse() {
        for (name, text) in BUNDLED {
            parse_config(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert!(matches!(parse_config(bundled("fig3_grid").unwrap()).unwrap(), Config::Grid(g) if g.cell_count() == 4));
        assert!(bundled("fig3_baseline.toml").is_some());
        assert!(bundled("nope").is_none());
    }

    fn arb_config() -> impl Strategy<Value = Config> {
        let unit = 0.0..=1.0f64;
        (
            any::<bool>(),
            (unit.clone(), 0.0..100.0f64, 0.01..10.0f64, 0.5..=1.0f64),
            (1usize..1000, 1usize..1000, 1usize..100, any::<u64>()),
            prop::option::of(prop::collection::vec(unit.clone(), 1..4)),
            prop::option::of(prop::collection::vec(0.01..10.0f64, 1..4)),
            (0.0..0.5f64, 0.5..1.0f64),
        )
            .prop_map(|(harmful, (phi, beta, lambda, alpha), (n, horizon, replicates, seed), phis, lambdas, (lo, hi))| {
                let behavior = if harmful { BehaviorType::Harmful } else { BehaviorType::Beneficial };
                let mut s = Scenario::new(ModelParams { phi, beta, lambda, behavior });
                s.population.alpha = alpha;
                s.population.n = n;
                s.population.minority_range = InitRange { lo, hi };
                s.horizon = horizon.max(60);
                s.replicates = replicates;
                s.base_seed = seed;
                if phis.is_none() && lambdas.is_none() {
                    return Config::Scenario(s);
                }
                let mut g = GridSpec::new(s);
                if let Some(v) = phis {
                    g = g.with_axis(Axis::Phi, v);
                }
                if let Some(v) = lambdas {
                    g = g.with_axis(Axis::Lambda, v);
                }
                Config::Grid(g)
            })
    }

    proptest! {
        #[test]
        fn toml_round_trip(cfg in arb_config()) {
            let text = cfg.to_toml();
            let back = parse_config(&text).unwrap();
            match (&cfg, &back) {
                (Config::Grid(a), Config::Grid(b)) => {
                    prop_assert_eq!(&a.axes, &b.axes);
                    prop_assert_eq!(a.max_cells, b.max_cells);
                    // swept fields in the base are placeholders; compare the cells
                    prop_assert_eq!(a.cells().unwrap(), b.cells().unwrap());
                }
                _ => prop_assert_eq!(&cfg, &back),
            }
            prop_assert_eq!(back.to_toml(), text);
        }
    }
}
