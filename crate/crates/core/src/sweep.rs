//! Replicate ensembles and parameter grids.
//!
//! Replicates and grid cells run in parallel on the current rayon pool and
//! are collected by key, so output never depends on the worker count.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{summarize_ensemble, DetectionParams, EnsembleSummary, Regime};
use crate::model::ModelParams;
use crate::population::{self, PopulationConfig, Trajectory, DEFAULT_HORIZON};
use crate::rng::{derive_seed, seed_for_key};

pub const DEFAULT_REPLICATES: usize = 50;
pub const DEFAULT_MAX_CELLS: usize = 10_000;

/// One parameter setting run as an ensemble of replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub params: ModelParams,
    /// Population layout; its `seed` is replaced per replicate.
    pub population: PopulationConfig,
    pub horizon: usize,
    pub replicates: usize,
    pub base_seed: u64,
    pub detection: DetectionParams,
}

impl Scenario {
    /// Scenario with the default population for `params.behavior`, a
    /// 300-step horizon and 50 replicates.
    pub fn new(params: ModelParams) -> Self {
        Scenario {
            params,
            population: PopulationConfig::new(params.behavior),
            horizon: DEFAULT_HORIZON,
            replicates: DEFAULT_REPLICATES,
            base_seed: 0,
            detection: DetectionParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.population.validate()?;
        self.detection.validate()?;
        if self.params.behavior != self.population.behavior {
            return Err(Error::invalid("population and parameters disagree on behavior type"));
        }
        if self.horizon == 0 {
            return Err(Error::invalid("horizon must be at least 1"));
        }
        if self.replicates == 0 {
            return Err(Error::invalid("replicates must be at least 1"));
        }
        if self.detection.window > self.horizon + 1 {
            return Err(Error::invalid(format!(
                "detection window ({}) exceeds trajectory length ({})",
                self.detection.window,
                self.horizon + 1
            )));
        }
        Ok(())
    }

    pub fn replicate_seed(&self, replicate: usize) -> u64 {
        derive_seed(self.base_seed, replicate as u64)
    }

    pub fn replicate_config(&self, replicate: usize) -> PopulationConfig {
        self.population
            .clone()
            .with_seed(self.replicate_seed(replicate))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    /// Ordered by replicate index.
    pub trajectories: Vec<Trajectory>,
    pub summary: EnsembleSummary,
}

pub fn run_ensemble(scenario: &Scenario) -> Result<Ensemble> {
    scenario.validate()?;
    let trajectories = (0..scenario.replicates)
        .into_par_iter()
        .map(|r| {
            population::run(
                &scenario.replicate_config(r),
                &scenario.params,
                scenario.horizon,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize_ensemble(&trajectories, &scenario.detection)?;
    Ok(Ensemble {
        trajectories,
        summary,
    })
}

/// The modal regime across replicates.
///
/// Falls back to [`Regime::Stalemate`] when the top count is shared or when
/// the modal regime holds less than `majority_fraction` of the replicates.
pub fn classify_regime(summary: &EnsembleSummary, majority_fraction: f64) -> Regime {
    let counts = &summary.regime_counts;
    let best = Regime::ALL.iter().map(|&r| counts.get(r)).max().unwrap_or(0);
    let mut leaders = Regime::ALL.iter().filter(|&&r| counts.get(r) == best);
    match (leaders.next(), leaders.next()) {
        (Some(&regime), None)
            if best as f64 >= majority_fraction * counts.total() as f64 =>
        {
            regime
        }
        _ => Regime::Stalemate,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Phi,
    Beta,
    Lambda,
    Alpha,
}

impl Axis {
    /// Canonical order; also the column order of phase tables.
    pub const ALL: [Axis; 4] = [Axis::Phi, Axis::Beta, Axis::Lambda, Axis::Alpha];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Phi => "phi",
            Axis::Beta => "beta",
            Axis::Lambda => "lambda",
            Axis::Alpha => "alpha",
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Axis::Phi => "φ",
            Axis::Beta => "β",
            Axis::Lambda => "λ",
            Axis::Alpha => "α",
        }
    }

    pub fn get(self, scenario: &Scenario) -> f64 {
        match self {
            Axis::Phi => scenario.params.phi,
            Axis::Beta => scenario.params.beta,
            Axis::Lambda => scenario.params.lambda,
            Axis::Alpha => scenario.population.alpha,
        }
    }

    fn set(self, scenario: &mut Scenario, value: f64) {
        match self {
            Axis::Phi => scenario.params.phi = value,
            Axis::Beta => scenario.params.beta = value,
            Axis::Lambda => scenario.params.lambda = value,
            Axis::Alpha => scenario.population.alpha = value,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Cross product of parameter axes around a base scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Swept axes, outermost first.
    pub axes: Vec<(Axis, Vec<f64>)>,
    /// Fixed values and defaults; swept fields are overwritten per cell.
    pub base: Scenario,
    pub max_cells: usize,
}

impl GridSpec {
    pub fn new(base: Scenario) -> Self {
        GridSpec {
            axes: Vec::new(),
            base,
            max_cells: DEFAULT_MAX_CELLS,
        }
    }

    pub fn with_axis(mut self, axis: Axis, values: Vec<f64>) -> Self {
        self.axes.push((axis, values));
        self
    }

    pub fn cell_count(&self) -> usize {
        self.axes
            .iter()
            .map(|(_, v)| v.len())
            .fold(1usize, usize::saturating_mul)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, (axis, values)) in self.axes.iter().enumerate() {
            if values.is_empty() {
                return Err(Error::invalid(format!("grid axis {axis} has no values")));
            }
            if self.axes[..i].iter().any(|(a, _)| a == axis) {
                return Err(Error::invalid(format!("grid axis {axis} appears twice")));
            }
        }
        let cells = self.cell_count();
        if cells > self.max_cells {
            return Err(Error::invalid(format!(
                "grid has {cells} cells, more than the cap of {}; raise max_cells to run it",
                self.max_cells
            )));
        }
        Ok(())
    }

    /// Expands the grid into one scenario per cell, last axis varying fastest.
    ///
    /// Each cell's base seed hashes the grid seed with the cell's full
    /// parameter tuple, so a cell's results do not depend on which other
    /// cells exist or on the order of the axes.
    pub fn cells(&self) -> Result<Vec<Scenario>> {
        self.validate()?;
        let mut cells = vec![self.base.clone()];
        for (axis, values) in &self.axes {
            cells = cells
                .iter()
                .flat_map(|cell| {
                    values.iter().map(move |&v| {
                        let mut next = cell.clone();
                        axis.set(&mut next, v);
                        next
                    })
                })
                .collect();
        }
        for cell in &mut cells {
            cell.base_seed = cell_seed(self.base.base_seed, cell);
            cell.validate()?;
        }
        Ok(cells)
    }

    /// Axis values of `cell`, for labels and tables.
    pub fn label(&self, cell: &Scenario) -> String {
        let parts: Vec<String> = self
            .axes
            .iter()
            .map(|(axis, _)| format!("{}={}", axis.symbol(), axis.get(cell)))
            .collect();
        format!("({})", parts.join(", "))
    }
}

fn cell_seed(grid_seed: u64, cell: &Scenario) -> u64 {
    // +0.0 folds -0.0 into 0.0
    let words = Axis::ALL.map(|axis| (axis.get(cell) + 0.0).to_bits());
    seed_for_key(grid_seed, &words)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub scenario: Scenario,
    pub summary: EnsembleSummary,
    pub regime: Regime,
}

impl CellResult {
    pub fn median_transition_time(&self) -> Option<usize> {
        self.summary.median_transition_time.map(|t| t.median)
    }

    pub fn terminal_median(&self) -> f64 {
        self.summary.terminal_median()
    }
}

/// Runs every cell of the grid as an independent ensemble.
pub fn sweep_grid(grid: &GridSpec) -> Result<Vec<CellResult>> {
    grid.cells()?
        .into_par_iter()
        .map(|scenario| {
            let ensemble = run_ensemble(&scenario)?;
            let regime = classify_regime(&ensemble.summary, 0.5);
            Ok(CellResult {
                scenario,
                summary: ensemble.summary,
                regime,
            })
        })
        .collect()
}
