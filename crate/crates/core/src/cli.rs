//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage, validation or replay-verification
//! errors, 2 on I/O errors.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{bundled, parse_config, Config};
use crate::error::{Error, Result};
use crate::manifest::{digest_outputs, CommandKind, RunManifest, MANIFEST_FILE, TOOL_NAME, TOOL_VERSION};
use crate::metrics::{RegimeCounts, TimeStats};
use crate::output;
use crate::population;
use crate::svg::render_plot_svg;
use crate::sweep::{classify_regime, run_ensemble, sweep_grid, GridSpec, Scenario};

#[derive(Debug, Parser)]
#[command(name = "tpbsim", version, about = "Simulate collective adoption and rejection of behaviors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario as a replicate ensemble.
    Run(RunArgs),
    /// Run every cell of a parameter grid and write a phase table.
    Sweep(SweepArgs),
    /// Regenerate the outputs of a manifest and verify their digests.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Config file, or the name of a bundled config (fig3_baseline, fig3_grid,
    /// fig4_extremes, fig5_grid).
    #[arg(long)]
    config: String,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Override the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of replicates.
    #[arg(long)]
    replicates: Option<usize>,
    #[command(flatten)]
    threads: ThreadArgs,
    /// Write an SVG plot (default).
    #[arg(long, overrides_with = "no_svg")]
    svg: bool,
    #[arg(long = "no-svg")]
    no_svg: bool,
}

#[derive(Debug, Args)]
struct ThreadArgs {
    /// Worker threads; results do not depend on this.
    #[arg(long, env = "TPB_SIM_THREADS")]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Also write every agent's state at every step for replicate 0.
    #[arg(long)]
    snapshot_states: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Raise the cap on the number of grid cells.
    #[arg(long)]
    max_cells: Option<usize>,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Where to write regenerated outputs [default: <manifest dir>/replay].
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    threads: ThreadArgs,
}

/// Output switches that change which files are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutputOptions {
    pub svg: bool,
    pub snapshot_states: bool,
}

/// In-memory output files as `(file name, contents)`.
pub type Outputs = Vec<(String, String)>;

#[derive(Serialize)]
struct RunSummary {
    regime: String,
    replicates: usize,
    regime_counts: RegimeCounts,
    median_transition_time: Option<TimeStats>,
    terminal_median: f64,
}

fn scenario_label(s: &Scenario) -> String {
    format!("(φ={}, β={})", s.params.phi, s.params.beta)
}

/// Outputs of `run`: replicate-0 trajectory, ensemble quantiles, a summary,
/// and optionally a plot and the replicate-0 agent states.
pub fn produce_run(scenario: &Scenario, opts: OutputOptions) -> Result<Outputs> {
    let ensemble = run_ensemble(scenario)?;
    let summary = &ensemble.summary;
    let mut outputs = vec![
        ("trajectory.csv".to_string(), output::trajectory_csv(&ensemble.trajectories[0])),
        ("ensemble.csv".to_string(), output::ensemble_csv(summary)),
    ];
    let report = RunSummary {
        regime: classify_regime(summary, 0.5).to_string(),
        replicates: summary.replicates,
        regime_counts: summary.regime_counts,
        median_transition_time: summary.median_transition_time,
        terminal_median: summary.terminal_median(),
    };
    let mut json = serde_json::to_string_pretty(&report).expect("summary serializes");
    json.push('\n');
    outputs.push(("summary.json".to_string(), json));
    if opts.svg {
        let series = [(scenario_label(scenario), summary.median_series())];
        outputs.push(("plot.svg".to_string(), render_plot_svg(&series)?));
    }
    if opts.snapshot_states {
        let traj = population::run_recording_states(
            &scenario.replicate_config(0),
            &scenario.params,
            scenario.horizon,
        )?;
        outputs.push(("states.csv".to_string(), output::states_csv(&traj)?));
    }
    Ok(outputs)
}

/// Outputs of `sweep`: the phase table, per-cell median series and
/// optionally a plot with one line per cell.
pub fn produce_sweep(grid: &GridSpec, opts: OutputOptions) -> Result<Outputs> {
    let cells = sweep_grid(grid)?;
    let mut outputs = vec![
        ("phase_table.csv".to_string(), output::phase_table_csv(&cells)),
        ("medians.csv".to_string(), output::medians_csv(grid, &cells)),
    ];
    if opts.svg {
        let series: Vec<(String, Vec<f64>)> = cells
            .iter()
            .map(|c| {
                let label = if grid.axes.is_empty() {
                    scenario_label(&c.scenario)
                } else {
                    grid.label(&c.scenario)
                };
                (label, c.summary.median_series())
            })
            .collect();
        outputs.push(("plot.svg".to_string(), render_plot_svg(&series)?));
    }
    Ok(outputs)
}

pub fn produce(command: CommandKind, config: &Config, opts: OutputOptions) -> Result<Outputs> {
    match (command, config) {
        (CommandKind::Run, Config::Scenario(s)) => produce_run(s, opts),
        (CommandKind::Run, Config::Grid(_)) => Err(Error::invalid(
            "config describes a grid (an axis is given as an array); use `sweep`",
        )),
        (CommandKind::Sweep, Config::Grid(g)) => produce_sweep(g, opts),
        (CommandKind::Sweep, Config::Scenario(s)) => produce_sweep(&GridSpec::new(s.clone()), opts),
    }
}

fn write_outputs(dir: &Path, outputs: &Outputs) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, contents) in outputs {
        output::write_file(&dir.join(name), contents)?;
    }
    Ok(())
}

/// Reads a config from a file, falling back to the bundled configs by name.
pub fn load_config(spec: &str) -> Result<Config> {
    let path = Path::new(spec);
    let text = match fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) => match bundled(spec) {
            Some(text) if !path.exists() => text.to_string(),
            _ => return Err(Error::io(path, e)),
        },
    };
    parse_config(&text)
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        None => f(),
        Some(0) => Err(Error::invalid("--threads must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::invalid(format!("cannot start {n} worker threads: {e}")))?
            .install(f),
    }
}

fn execute(
    command: CommandKind,
    common: &CommonArgs,
    snapshot_states: bool,
    max_cells: Option<usize>,
) -> Result<()> {
    let mut config = load_config(&common.config)?;
    {
        let base = config.base_mut();
        if let Some(seed) = common.seed {
            base.base_seed = seed;
        }
        if let Some(r) = common.replicates {
            base.replicates = r;
        }
    }
    if let (Some(cap), Config::Grid(g)) = (max_cells, &mut config) {
        g.max_cells = cap;
    }
    // re-validate after overrides
    let resolved = config.to_toml();
    let config = parse_config(&resolved)?;
    let opts = OutputOptions {
        svg: !common.no_svg,
        snapshot_states,
    };
    let outputs = with_threads(common.threads.threads, || produce(command, &config, opts))?;
    write_outputs(&common.out, &outputs)?;
    let manifest = RunManifest {
        tool: TOOL_NAME.to_string(),
        version: TOOL_VERSION.to_string(),
        command,
        config: resolved,
        base_seed: config.base().base_seed,
        svg: opts.svg,
        snapshot_states,
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        outputs: digest_outputs(&outputs),
    };
    let manifest_path = common.out.join(MANIFEST_FILE);
    output::write_file(&manifest_path, &manifest.to_json())?;
    for (name, _) in &outputs {
        println!("wrote {}", common.out.join(name).display());
    }
    println!("wrote {}", manifest_path.display());
    Ok(())
}

fn replay(args: &ReplayArgs) -> Result<()> {
    let manifest = RunManifest::read(&args.manifest)?;
    let config = parse_config(&manifest.config)?;
    let opts = OutputOptions {
        svg: manifest.svg,
        snapshot_states: manifest.snapshot_states,
    };
    let outputs = with_threads(args.threads.threads, || produce(manifest.command, &config, opts))?;
    let out = args.out.clone().unwrap_or_else(|| {
        args.manifest
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join("replay")
    });
    write_outputs(&out, &outputs)?;
    manifest.verify(&digest_outputs(&outputs))?;
    println!(
        "replayed {} outputs into {}; all digests match",
        outputs.len(),
        out.display()
    );
    Ok(())
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Run(a) => execute(CommandKind::Run, &a.common, a.snapshot_states, None),
        Command::Sweep(a) => execute(CommandKind::Sweep, &a.common, false, a.max_cells),
        Command::Replay(a) => replay(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
