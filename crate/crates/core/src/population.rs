//! Population initialization and the synchronous update loop.
//!
//! Within a step every agent reads the same norm (the adoption rate at the
//! start of the step) and updates attitude, intention, choice probability and
//! action in that order.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_closed, Error, Result};
use crate::model::{
    attitude_unchecked, choice_probability_unchecked, cumulative_count_update,
    intention_unchecked, sample_action_unchecked, AgentState, BehaviorType, ModelParams,
};
use crate::rng::{self, SimRng};

pub const DEFAULT_N: usize = 300;
pub const DEFAULT_ALPHA: f64 = 0.9;
pub const DEFAULT_HORIZON: usize = 300;

/// Interval `[lo, hi]` from which initial attitudes are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitRange {
    pub lo: f64,
    pub hi: f64,
}

impl InitRange {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        let range = InitRange { lo, hi };
        range.validate("range")?;
        Ok(range)
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.lo >= 0.0 && self.hi <= 1.0 && self.lo <= self.hi) {
            return Err(Error::invalid(format!(
                "{name} must satisfy 0 <= lo <= hi <= 1 (got [{}, {}])",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    /// Uniform draw on `[lo, hi)`; returns `lo` for a degenerate range.
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        (self.lo + (self.hi - self.lo) * u).clamp(self.lo, self.hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }
}

/// Initial attitude ranges `(majority, minority)` for each behavior type.
///
/// Beneficial behavior starts unpopular: most agents hold a low attitude.
/// Harmful behavior starts entrenched: most agents hold a high one.
pub fn default_ranges(behavior: BehaviorType) -> (InitRange, InitRange) {
    match behavior {
        BehaviorType::Beneficial => (
            InitRange { lo: 0.0, hi: 0.4 },
            InitRange { lo: 0.6, hi: 0.7 },
        ),
        BehaviorType::Harmful => (
            InitRange { lo: 0.6, hi: 1.0 },
            InitRange { lo: 0.3, hi: 0.4 },
        ),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationConfig {
    pub n: usize,
    /// Fraction of agents in the majority group.
    pub alpha: f64,
    pub behavior: BehaviorType,
    pub majority_range: InitRange,
    pub minority_range: InitRange,
    pub seed: u64,
}

impl PopulationConfig {
    /// 300 agents, 90% majority, default ranges for `behavior`.
    pub fn new(behavior: BehaviorType) -> Self {
        let (majority_range, minority_range) = default_ranges(behavior);
        PopulationConfig {
            n: DEFAULT_N,
            alpha: DEFAULT_ALPHA,
            behavior,
            majority_range,
            minority_range,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("n must be at least 1"));
        }
        check_closed("alpha", self.alpha, 0.5, 1.0, "[0.5,1]")?;
        self.majority_range.validate("majority_range")?;
        self.minority_range.validate("minority_range")
    }

    /// `floor(alpha * n)`, tolerant of representation error in `alpha`
    /// (0.57 * 100 evaluates to 56.99999999999999).
    pub fn majority_size(&self) -> usize {
        let exact = self.alpha * self.n as f64;
        ((exact + 1e-9 * exact.max(1.0)).floor() as usize).min(self.n)
    }
}

#[derive(Debug, Clone)]
pub struct Population {
    agents: Vec<AgentState>,
    streams: Vec<SimRng>,
    t: u64,
    adopters: usize,
}

impl Population {
    /// Draws initial attitudes (majority first, then minority) from the
    /// initialization stream, sets intention equal to attitude, and samples
    /// the initial actions from each agent's own stream.
    pub fn init(config: &PopulationConfig, params: &ModelParams) -> Result<Self> {
        config.validate()?;
        params.validate()?;
        let majority = config.majority_size();
        let mut init_rng = rng::stream(config.seed, rng::INIT_STREAM);
        let mut agents = Vec::with_capacity(config.n);
        let mut streams = Vec::with_capacity(config.n);
        for i in 0..config.n {
            let range = if i < majority {
                &config.majority_range
            } else {
                &config.minority_range
            };
            let x0 = range.sample(&mut init_rng);
            let mut stream = rng::agent_stream(config.seed, i);
            let p = choice_probability_unchecked(x0, params.beta);
            let y = sample_action_unchecked(p, &mut stream);
            agents.push(AgentState {
                x0,
                x: x0,
                z: x0,
                p,
                y,
                h: u64::from(y),
            });
            streams.push(stream);
        }
        let adopters = count_adopters(&agents);
        Ok(Population {
            agents,
            streams,
            t: 0,
            adopters,
        })
    }

    /// Advances every agent by one time step against the current norm.
    pub fn step(&mut self, params: &ModelParams) -> Result<()> {
        params.validate()?;
        let norm = self.y_avg();
        for (agent, stream) in self.agents.iter_mut().zip(&mut self.streams) {
            let x = attitude_unchecked(agent.x0, params.lambda, agent.h, params.behavior);
            let z = intention_unchecked(x, norm, params.phi);
            let p = choice_probability_unchecked(z, params.beta);
            let y = sample_action_unchecked(p, stream);
            agent.x = x;
            agent.z = z;
            agent.p = p;
            agent.y = y;
            agent.h = cumulative_count_update(agent.h, y);
        }
        self.adopters = count_adopters(&self.agents);
        self.t += 1;
        Ok(())
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    /// Number of agents with `y = 1`.
    pub fn adopters(&self) -> usize {
        self.adopters
    }

    /// Fraction of agents currently performing the behavior, the norm every
    /// agent reads on the next step.
    pub fn y_avg(&self) -> f64 {
        self.adopters as f64 / self.agents.len() as f64
    }
}

fn count_adopters(agents: &[AgentState]) -> usize {
    agents.iter().filter(|a| a.y == 1).count()
}

/// Record of one simulated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub params: ModelParams,
    pub config: PopulationConfig,
    /// Adoption rate at `t = 0..=T`.
    pub y_avg_series: Vec<f64>,
    /// Full agent states per step, when requested.
    pub state_snapshots: Option<Vec<Vec<AgentState>>>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.y_avg_series.len() - 1
    }

    pub fn terminal_rate(&self) -> f64 {
        *self.y_avg_series.last().expect("trajectory is never empty")
    }
}

/// Initializes a population from `config.seed` and runs it for `horizon` steps.
pub fn run(config: &PopulationConfig, params: &ModelParams, horizon: usize) -> Result<Trajectory> {
    run_inner(config, params, horizon, false)
}

/// Like [`run`], additionally keeping every agent's state at every step.
pub fn run_recording_states(
    config: &PopulationConfig,
    params: &ModelParams,
    horizon: usize,
) -> Result<Trajectory> {
    run_inner(config, params, horizon, true)
}

fn run_inner(
    config: &PopulationConfig,
    params: &ModelParams,
    horizon: usize,
    record_states: bool,
) -> Result<Trajectory> {
    if horizon == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    if config.behavior != params.behavior {
        return Err(Error::invalid(format!(
            "population initialized for {} behavior but parameters are for {}",
            config.behavior, params.behavior
        )));
    }
    let mut pop = Population::init(config, params)?;
    let mut series = Vec::with_capacity(horizon + 1);
    let mut snapshots = record_states.then(|| Vec::with_capacity(horizon + 1));
    series.push(pop.y_avg());
    if let Some(s) = snapshots.as_mut() {
        s.push(pop.agents().to_vec());
    }
    for _ in 0..horizon {
        pop.step(params)?;
        series.push(pop.y_avg());
        if let Some(s) = snapshots.as_mut() {
            s.push(pop.agents().to_vec());
        }
    }
    Ok(Trajectory {
        params: *params,
        config: config.clone(),
        y_avg_series: series,
        state_snapshots: snapshots,
    })
}
