//! `ilms`: drive ring-network incremental LMS experiments from JSON configs.
//!
//! Four subcommands cover the two engines and their combinations:
//! `simulate` (Monte Carlo), `theory` (closed-form predictions), `compare`
//! (both, side by side), and `sweep` (theory and optionally simulation over a
//! parameter grid). Every invocation writes `resolved_config.json` — the
//! fully resolved experiment echo — next to its CSV outputs, so any result
//! can be reproduced from the output directory alone. Output files are
//! byte-identical across repeated runs with the same config and seed.
//!
//! Exit codes: 0 success, 2 configuration error, 3 instability or
//! approximation-domain error, 4 simulated divergence, 1 anything else.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ilms_core::config::{
    apply_sweep_value, load_experiment, ConfigOverrides, LoadedExperiment, SweepPlan,
};
use ilms_core::engine::{estimate_steady_state, run_monte_carlo, LinkMode};
use ilms_core::report::{
    write_compare_csv, write_prediction_csv, write_series_csv, write_stability_csv,
    write_steady_csv, write_sweep_csv, ReportMeta, SweepRow, SweepSource,
};
use ilms_core::theory::TheoryWorkspace;
use ilms_core::{IlmsError, Result};

#[derive(Parser)]
#[command(name = "ilms", version, about = "Incremental LMS over fading links: simulation and steady-state theory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo engine; writes series.csv and steady.csv.
    Simulate(CommonArgs),
    /// Evaluate the closed-form engine; writes stability.csv and, when the
    /// configuration is stable, prediction.csv.
    Theory(CommonArgs),
    /// Run both engines and tabulate per-node dB gaps; writes compare.csv.
    Compare(CommonArgs),
    /// Evaluate the config's sweep block point by point; writes sweep.csv.
    Sweep(CommonArgs),
}

impl Command {
    fn args(&self) -> &CommonArgs {
        match self {
            Command::Simulate(a) | Command::Theory(a) | Command::Compare(a) | Command::Sweep(a) => {
                a
            }
        }
    }
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the config's seed (applies before ranged values resolve).
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of Monte Carlo runs.
    #[arg(long)]
    runs: Option<usize>,
    /// Override the iteration count per run.
    #[arg(long)]
    iterations: Option<usize>,
    /// Override the steady-state tail window.
    #[arg(long)]
    tail: Option<usize>,
    /// Override the link mode: ideal, fading, or fading_zf.
    #[arg(long, value_parser = parse_link_mode)]
    mode: Option<LinkMode>,
    /// Worker threads for Monte Carlo runs (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
}

fn parse_link_mode(text: &str) -> std::result::Result<LinkMode, String> {
    text.parse::<LinkMode>().map_err(|e| e.to_string())
}

fn main() {
    let cli = Cli::parse();
    if let Err(error) = run(&cli) {
        eprintln!("error: {error}");
        std::process::exit(error.exit_code());
    }
}

fn run(cli: &Cli) -> Result<()> {
    let args = cli.command.args();
    let overrides = ConfigOverrides {
        seed: args.seed,
        runs: args.runs,
        iterations: args.iterations,
        tail: args.tail,
        mode: args.mode,
        workers: args.workers,
    };
    let experiment = load_experiment(&args.config, &overrides)?;
    std::fs::create_dir_all(&args.out)?;
    // Stale outputs from a previous invocation would be indistinguishable
    // from fresh ones (no timestamps by design), so each command clears the
    // files it owns before computing anything.
    let owned: &[&str] = match cli.command {
        Command::Simulate(_) => &["series.csv", "steady.csv"],
        Command::Theory(_) => &["stability.csv", "prediction.csv"],
        Command::Compare(_) => &["compare.csv"],
        Command::Sweep(_) => &["sweep.csv"],
    };
    for name in owned {
        let path = args.out.join(name);
        if path.exists() {
            std::fs::remove_file(&path)?;
        }
    }
    std::fs::write(args.out.join("resolved_config.json"), &experiment.resolved_json)?;

    match cli.command {
        Command::Simulate(_) => cmd_simulate(args, &experiment),
        Command::Theory(_) => cmd_theory(args, &experiment),
        Command::Compare(_) => cmd_compare(args, &experiment),
        Command::Sweep(_) => cmd_sweep(args, &experiment),
    }
}

fn meta(experiment: &LoadedExperiment) -> ReportMeta<'_> {
    ReportMeta {
        config_sha256: &experiment.config_sha256,
        seed: experiment.network.seed,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn cmd_simulate(args: &CommonArgs, experiment: &LoadedExperiment) -> Result<()> {
    let output = run_monte_carlo(&experiment.network, &experiment.plan)?;
    let estimate = estimate_steady_state(&output, experiment.plan.tail)?;
    let meta = meta(experiment);

    let mut series = create(&args.out.join("series.csv"))?;
    write_series_csv(&mut series, &meta, &output.series)?;
    series.flush()?;
    let mut steady = create(&args.out.join("steady.csv"))?;
    write_steady_csv(&mut steady, &meta, &estimate)?;
    steady.flush()?;

    println!(
        "simulate: {} nodes, {} runs x {} iterations ({} mode), tail {}",
        experiment.network.n_nodes,
        experiment.plan.runs,
        experiment.plan.iterations,
        experiment.plan.mode.as_str(),
        experiment.plan.tail,
    );
    if output.outages > 0 {
        println!("simulate: {} deep-fade equalizer skips", output.outages);
    }
    println!("simulate: wrote {}", args.out.join("series.csv").display());
    println!("simulate: wrote {}", args.out.join("steady.csv").display());
    Ok(())
}

fn cmd_theory(args: &CommonArgs, experiment: &LoadedExperiment) -> Result<()> {
    let workspace = TheoryWorkspace::build(&experiment.network)?;
    let stability = workspace.stability()?;
    let meta = meta(experiment);

    let mut out = create(&args.out.join("stability.csv"))?;
    write_stability_csv(&mut out, &meta, &stability)?;
    out.flush()?;
    println!("theory: wrote {}", args.out.join("stability.csv").display());

    // An unstable configuration still gets its stability diagnostics; only
    // the steady-state prediction is refused.
    let prediction = workspace.steady_state()?;
    let mut out = create(&args.out.join("prediction.csv"))?;
    write_prediction_csv(&mut out, &meta, &prediction)?;
    out.flush()?;
    for warning in &prediction.condition_warnings {
        eprintln!(
            "warning: node {} steady-state system condition {:.3e}",
            warning.node + 1,
            warning.condition
        );
    }
    println!("theory: wrote {}", args.out.join("prediction.csv").display());
    Ok(())
}

fn cmd_compare(args: &CommonArgs, experiment: &LoadedExperiment) -> Result<()> {
    // Theory goes first: an unstable configuration fails fast, before any
    // Monte Carlo time is spent, and no partial compare.csv appears.
    let workspace = TheoryWorkspace::build(&experiment.network)?;
    let predicted = workspace.steady_state()?;
    let output = run_monte_carlo(&experiment.network, &experiment.plan)?;
    let simulated = estimate_steady_state(&output, experiment.plan.tail)?;

    let mut buffer = Vec::new();
    let max_gap = write_compare_csv(&mut buffer, &meta(experiment), &simulated, &predicted)?;
    std::fs::write(args.out.join("compare.csv"), &buffer)?;

    println!(
        "compare: max |gap| {:.4} dB over {} nodes ({} runs x {} iterations)",
        max_gap,
        experiment.network.n_nodes,
        experiment.plan.runs,
        experiment.plan.iterations,
    );
    println!("compare: wrote {}", args.out.join("compare.csv").display());
    Ok(())
}

fn cmd_sweep(args: &CommonArgs, experiment: &LoadedExperiment) -> Result<()> {
    let sweep = experiment.sweep.clone().ok_or_else(|| {
        IlmsError::Config("plan.sweep: the sweep command needs a sweep block".into())
    })?;

    let mut rows: Vec<SweepRow> = Vec::new();
    let mut unstable_points = 0usize;
    for &value in &sweep.values {
        let network = apply_sweep_value(&experiment.network, sweep.parameter, value)?;
        match sweep_point(&network, experiment, &sweep, value) {
            Ok(mut point_rows) => rows.append(&mut point_rows),
            // A point past a stability boundary (or whose simulation blows
            // up) is recorded and the sweep moves on.
            Err(IlmsError::Instability(_)) | Err(IlmsError::Divergence { .. }) => {
                unstable_points += 1;
                rows.push(SweepRow {
                    value,
                    node: 0,
                    eta_db: None,
                    zeta_db: None,
                    xi_db: None,
                    source: SweepSource::Unstable,
                });
            }
            Err(other) => return Err(other),
        }
    }

    let mut out = create(&args.out.join("sweep.csv"))?;
    write_sweep_csv(&mut out, &meta(experiment), &rows)?;
    out.flush()?;

    println!(
        "sweep: {} points ({} unstable), {} rows",
        sweep.values.len(),
        unstable_points,
        rows.len(),
    );
    println!("sweep: wrote {}", args.out.join("sweep.csv").display());
    Ok(())
}

/// All rows for one sweep value, or the instability/divergence that makes
/// the point unusable.
fn sweep_point(
    network: &ilms_core::model::NetworkConfig,
    experiment: &LoadedExperiment,
    sweep: &SweepPlan,
    value: f64,
) -> Result<Vec<SweepRow>> {
    let focus: Vec<usize> = match sweep.node_focus {
        Some(k) => vec![k],
        None => (0..network.n_nodes).collect(),
    };
    let mut rows = Vec::new();

    let workspace = TheoryWorkspace::build(network)?;
    let predicted = workspace.steady_state()?;
    for &k in &focus {
        rows.push(SweepRow {
            value,
            node: k + 1,
            eta_db: Some(predicted.nodes[k].eta_db),
            zeta_db: Some(predicted.nodes[k].zeta_db),
            xi_db: Some(predicted.nodes[k].xi_db),
            source: SweepSource::Predicted,
        });
    }

    if sweep.simulate {
        let output = run_monte_carlo(network, &experiment.plan)?;
        let estimate = estimate_steady_state(&output, experiment.plan.tail)?;
        for &k in &focus {
            rows.push(SweepRow {
                value,
                node: k + 1,
                eta_db: Some(estimate.nodes[k].eta_db),
                zeta_db: Some(estimate.nodes[k].zeta_db),
                xi_db: Some(estimate.nodes[k].xi_db),
                source: SweepSource::Simulated,
            });
        }
    }
    Ok(rows)
}
