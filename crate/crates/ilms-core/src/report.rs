//! CSV emission. Every file starts with the same comment preamble (tool
//! version, configuration hash, seed) so outputs are traceable to the exact
//! resolved experiment; no timestamps, so identical inputs give identical
//! bytes. Linear power values use exponent notation; decibel columns are
//! fixed to 4 decimals.

use std::io::Write;

use crate::engine::{MetricSeries, SteadyStateEstimate};
use crate::error::Result;
use crate::theory::{StabilityReport, SteadyStatePrediction};

/// Provenance recorded at the top of every output file.
#[derive(Debug, Clone, Copy)]
pub struct ReportMeta<'a> {
    pub config_sha256: &'a str,
    pub seed: u64,
}

fn preamble(out: &mut impl Write, meta: &ReportMeta) -> Result<()> {
    writeln!(out, "# ilms {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "# config_sha256={}", meta.config_sha256)?;
    writeln!(out, "# seed={}", meta.seed)?;
    Ok(())
}

fn linear(x: f64) -> String {
    format!("{x:.10e}")
}

fn db(x: f64) -> String {
    format!("{x:.4}")
}

/// Per-iteration run-averaged metrics: `iter,node,msd,emse,mse` (iteration
/// and node 1-based).
pub fn write_series_csv(
    out: &mut impl Write,
    meta: &ReportMeta,
    series: &MetricSeries,
) -> Result<()> {
    preamble(out, meta)?;
    writeln!(out, "iter,node,msd,emse,mse")?;
    for i in 0..series.iterations {
        for k in 0..series.n_nodes {
            writeln!(
                out,
                "{},{},{},{},{}",
                i + 1,
                k + 1,
                linear(series.msd[k][i]),
                linear(series.emse[k][i]),
                linear(series.mse[k][i])
            )?;
        }
    }
    Ok(())
}

/// Empirical steady state: `node,eta,zeta,xi,eta_db,zeta_db,xi_db,bias_norm`.
pub fn write_steady_csv(
    out: &mut impl Write,
    meta: &ReportMeta,
    estimate: &SteadyStateEstimate,
) -> Result<()> {
    preamble(out, meta)?;
    writeln!(out, "node,eta,zeta,xi,eta_db,zeta_db,xi_db,bias_norm")?;
    for (k, node) in estimate.nodes.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            k + 1,
            linear(node.eta),
            linear(node.zeta),
            linear(node.xi),
            db(node.eta_db),
            db(node.zeta_db),
            db(node.xi_db),
            linear(node.bias_norm)
        )?;
    }
    Ok(())
}

/// Predicted steady state, same schema as the empirical file. The analysis
/// yields one limiting bias vector for the whole ring, so `bias_norm`
/// repeats it on every row.
pub fn write_prediction_csv(
    out: &mut impl Write,
    meta: &ReportMeta,
    prediction: &SteadyStatePrediction,
) -> Result<()> {
    preamble(out, meta)?;
    for warning in &prediction.condition_warnings {
        writeln!(
            out,
            "# warning: node {} steady-state system condition {:.3e} (results may be inaccurate)",
            warning.node + 1,
            warning.condition
        )?;
    }
    writeln!(out, "node,eta,zeta,xi,eta_db,zeta_db,xi_db,bias_norm")?;
    for (k, node) in prediction.nodes.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            k + 1,
            linear(node.eta),
            linear(node.zeta),
            linear(node.xi),
            db(node.eta_db),
            db(node.zeta_db),
            db(node.xi_db),
            linear(prediction.bias_norm)
        )?;
    }
    Ok(())
}

/// Stability diagnostics: network scalars as comments, then per-node rows
/// `node,mu_lo,mu_hi,ms_margin`.
pub fn write_stability_csv(
    out: &mut impl Write,
    meta: &ReportMeta,
    report: &StabilityReport,
) -> Result<()> {
    preamble(out, meta)?;
    writeln!(out, "# rho_mean={:.10}", report.rho_mean)?;
    writeln!(out, "# mean_stable={}", report.mean_stable)?;
    writeln!(out, "# ms_stable={}", report.ms_stable)?;
    writeln!(out, "node,mu_lo,mu_hi,ms_margin")?;
    for (k, node) in report.nodes.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{}",
            k + 1,
            linear(node.mu_range.0),
            linear(node.mu_range.1),
            linear(node.ms_margin)
        )?;
    }
    Ok(())
}

/// Side-by-side engines in dB with per-metric gaps (simulated minus
/// predicted); returns the largest absolute gap, which is also recorded as a
/// trailing comment.
pub fn write_compare_csv(
    out: &mut impl Write,
    meta: &ReportMeta,
    simulated: &SteadyStateEstimate,
    predicted: &SteadyStatePrediction,
) -> Result<f64> {
    preamble(out, meta)?;
    writeln!(
        out,
        "node,eta_db_sim,eta_db_pred,eta_gap_db,zeta_db_sim,zeta_db_pred,zeta_gap_db,\
         xi_db_sim,xi_db_pred,xi_gap_db"
    )?;
    let mut max_gap = 0.0f64;
    for (k, (sim, pred)) in simulated
        .nodes
        .iter()
        .zip(&predicted.nodes)
        .enumerate()
    {
        let gaps = [
            sim.eta_db - pred.eta_db,
            sim.zeta_db - pred.zeta_db,
            sim.xi_db - pred.xi_db,
        ];
        for gap in gaps {
            max_gap = max_gap.max(gap.abs());
        }
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            k + 1,
            db(sim.eta_db),
            db(pred.eta_db),
            db(gaps[0]),
            db(sim.zeta_db),
            db(pred.zeta_db),
            db(gaps[1]),
            db(sim.xi_db),
            db(pred.xi_db),
            db(gaps[2])
        )?;
    }
    writeln!(out, "# max_abs_gap_db={}", db(max_gap))?;
    Ok(max_gap)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepSource {
    Predicted,
    Simulated,
    /// The point failed the stability tests; metric columns carry `nan`.
    Unstable,
}

impl SweepSource {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepSource::Predicted => "predicted",
            SweepSource::Simulated => "simulated",
            SweepSource::Unstable => "unstable",
        }
    }
}

/// One output row of a parameter sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub value: f64,
    /// 1-based node; 0 for rows not tied to a node (unstable points).
    pub node: usize,
    pub eta_db: Option<f64>,
    pub zeta_db: Option<f64>,
    pub xi_db: Option<f64>,
    pub source: SweepSource,
}

/// Sweep results: `value,node,eta_db,zeta_db,xi_db,source`.
pub fn write_sweep_csv(out: &mut impl Write, meta: &ReportMeta, rows: &[SweepRow]) -> Result<()> {
    preamble(out, meta)?;
    writeln!(out, "value,node,eta_db,zeta_db,xi_db,source")?;
    let cell = |x: Option<f64>| x.map(db).unwrap_or_else(|| "nan".to_owned());
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            row.value,
            row.node,
            cell(row.eta_db),
            cell(row.zeta_db),
            cell(row.xi_db),
            row.source.as_str()
        )?;
    }
    Ok(())
}
