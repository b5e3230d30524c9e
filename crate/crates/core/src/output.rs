//! CSV writers. All numbers are printed with seven decimals, enough to
//! recover `k / n` exactly for populations up to a few thousand agents.
//! Files use LF line endings.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::EnsembleSummary;
use crate::population::Trajectory;
use crate::sweep::{Axis, CellResult, GridSpec};

pub fn fmt_value(v: f64) -> String {
    format!("{v:.7}")
}

/// `t,y_avg` rows for a single run.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,y_avg\n");
    for (t, v) in traj.y_avg_series.iter().enumerate() {
        let _ = writeln!(out, "{t},{}", fmt_value(*v));
    }
    out
}

/// `t,q10,median,q90` rows for an ensemble.
pub fn ensemble_csv(summary: &EnsembleSummary) -> String {
    let mut out = String::from("t,q10,median,q90\n");
    for (t, q) in summary.per_step_quantiles.iter().enumerate() {
        let _ = writeln!(
            out,
            "{t},{},{},{}",
            fmt_value(q.q10),
            fmt_value(q.median),
            fmt_value(q.q90)
        );
    }
    out
}

/// Every agent at every step; requires a trajectory recorded with states.
pub fn states_csv(traj: &Trajectory) -> Result<String> {
    let snaps = traj
        .state_snapshots
        .as_ref()
        .ok_or_else(|| Error::invalid("trajectory was recorded without agent states"))?;
    let mut out = String::from("t,agent,x0,x,z,p,y,h\n");
    for (t, agents) in snaps.iter().enumerate() {
        for (i, a) in agents.iter().enumerate() {
            let _ = writeln!(
                out,
                "{t},{i},{},{},{},{},{},{}",
                fmt_value(a.x0),
                fmt_value(a.x),
                fmt_value(a.z),
                fmt_value(a.p),
                a.y,
                a.h
            );
        }
    }
    Ok(out)
}

/// One row per grid cell.
pub fn phase_table_csv(cells: &[CellResult]) -> String {
    let mut out = String::new();
    let axis_cols: Vec<&str> = Axis::ALL.iter().map(|a| a.name()).collect();
    let _ = writeln!(
        out,
        "behavior,{},replicates,full_adoption,full_rejection,stalemate,noise_dominated,regime,median_transition_time,transition_q25,transition_q75,terminal_median",
        axis_cols.join(",")
    );
    for cell in cells {
        let s = &cell.scenario;
        let axes: Vec<String> = Axis::ALL.iter().map(|a| a.get(s).to_string()).collect();
        let c = &cell.summary.regime_counts;
        let (median, q25, q75) = match cell.summary.median_transition_time {
            Some(t) => (t.median.to_string(), t.q25.to_string(), t.q75.to_string()),
            None => Default::default(),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            s.params.behavior,
            axes.join(","),
            s.replicates,
            c.full_adoption,
            c.full_rejection,
            c.stalemate,
            c.noise_dominated,
            cell.regime,
            median,
            q25,
            q75,
            fmt_value(cell.terminal_median())
        );
    }
    out
}

/// Per-step ensemble medians, one column per grid cell.
pub fn medians_csv(grid: &GridSpec, cells: &[CellResult]) -> String {
    let mut out = String::from("t");
    for cell in cells {
        let _ = write!(out, ",\"{}\"", grid.label(&cell.scenario));
    }
    out.push('\n');
    let steps = cells.first().map_or(0, |c| c.summary.per_step_quantiles.len());
    for t in 0..steps {
        let _ = write!(out, "{t}");
        for cell in cells {
            let _ = write!(out, ",{}", fmt_value(cell.summary.per_step_quantiles[t].median));
        }
        out.push('\n');
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn write_trajectory_csv(traj: &Trajectory, path: &Path) -> Result<()> {
    write_file(path, &trajectory_csv(traj))
}

pub fn write_ensemble_csv(summary: &EnsembleSummary, path: &Path) -> Result<()> {
    write_file(path, &ensemble_csv(summary))
}
