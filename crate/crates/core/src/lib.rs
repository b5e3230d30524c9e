//! Agent-based simulation of behavior adoption driven by attitude,
//! a population-wide descriptive norm and bounded-rational choice, with
//! feedback from repeated behavior into attitude.
//!
//! Each agent holds an attitude `x`, an intention `z`, a choice probability
//! `p` and a binary action `y`. Every step, attitude is recomputed from the
//! initial attitude and the number of times the agent has acted, intention
//! blends attitude with last step's adoption rate, a binary logit maps
//! intention to a probability, and the action is a Bernoulli draw.
//!
//! Modules, bottom up:
//! * [`model`]: the per-agent update rules;
//! * [`population`]: initialization and the synchronous update loop;
//! * [`metrics`]: transition detection and ensemble statistics;
//! * [`sweep`]: replicate ensembles and parameter grids;
//! * [`config`], [`output`], [`svg`], [`manifest`], [`cli`]: file formats
//!   and the command-line tool.

pub mod cli;
pub mod config;
pub mod error;
pub mod manifest;
pub mod metrics;
pub mod model;
pub mod output;
pub mod population;
pub mod rng;
pub mod svg;
pub mod sweep;

pub use config::{parse_config, Config};
pub use error::{Error, Result};
pub use metrics::{
    adoption_rate, detect_transition, summarize_ensemble, DetectionParams, EnsembleSummary,
    Regime, RegimeCounts, TransitionOutcome,
};
pub use model::{
    attitude_update, choice_probability, cumulative_count_update, intention_update,
    sample_action, AgentState, BehaviorType, ModelParams,
};
pub use population::{default_ranges, run, InitRange, Population, PopulationConfig, Trajectory};
pub use sweep::{classify_regime, run_ensemble, sweep_grid, Axis, GridSpec, Scenario};
