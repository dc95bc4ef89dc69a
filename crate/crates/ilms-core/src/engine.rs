//! Monte Carlo simulation of the incremental LMS ring.
//!
//! One estimate travels the ring: node `k` receives node `k-1`'s latest
//! estimate (possibly through a fading link), measures, adapts, and passes
//! its update on; the last node's output seeds the next iteration. Metrics
//! are always taken against the clean pre-channel estimate, which the
//! simulator — unlike a real node — can see.
//!
//! All randomness is counter-based (keyed by seed, run, node, iteration, and
//! purpose), so runs are independent, trajectories are reproducible, and
//! results never depend on worker count or execution order.

use nalgebra::DVector;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::decibels;
use crate::error::{IlmsError, Result};
use crate::model::{
    sample_channel, sample_measurement, sample_regressor, NetworkConfig, RegressorState,
};
use crate::rng::{substream, Purpose};

/// Gain-estimate magnitudes at or below this are treated as deep fades: the
/// hop passes through unequalized and an outage is counted.
pub const EPSILON_ZF: f64 = 1e-6;

/// Any weight component beyond this magnitude (or non-finite) aborts the run
/// as divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e9;

/// How inter-node links are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkMode {
    /// Estimates arrive exactly as sent.
    Ideal,
    /// Estimates arrive scaled by the fading gain plus link noise; the
    /// receiver adapts the received signal as-is.
    Fading,
    /// As `Fading`, but the receiver first divides by its gain estimate.
    FadingZf,
}

impl LinkMode {
    pub fn as_str(self) -> &'static str {
        match self {
            LinkMode::Ideal => "ideal",
            LinkMode::Fading => "fading",
            LinkMode::FadingZf => "fading_zf",
        }
    }
}

impl std::str::FromStr for LinkMode {
    type Err = IlmsError;

    fn from_str(text: &str) -> Result<Self> {
        match text {
            "ideal" => Ok(LinkMode::Ideal),
            "fading" => Ok(LinkMode::Fading),
            "fading_zf" => Ok(LinkMode::FadingZf),
            other => Err(IlmsError::Config(format!(
                "unknown link mode {other:?}; expected ideal, fading, or fading_zf"
            ))),
        }
    }
}

/// Execution parameters for one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExperimentPlan {
    pub mode: LinkMode,
    pub iterations: usize,
    pub runs: usize,
    /// Trailing window (in iterations) averaged for steady-state estimates.
    pub tail: usize,
    /// Worker threads for the run loop; `None` lets the pool decide.
    pub workers: Option<usize>,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        ExperimentPlan {
            mode: LinkMode::Fading,
            iterations: 2000,
            runs: 100,
            tail: 200,
            workers: None,
        }
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(IlmsError::Config("plan.iterations must be >= 1".into()));
        }
        if self.runs == 0 {
            return Err(IlmsError::Config("plan.runs must be >= 1".into()));
        }
        if self.tail == 0 {
            return Err(IlmsError::Config("plan.tail must be >= 1".into()));
        }
        if self.tail > self.iterations {
            return Err(IlmsError::Config(format!(
                "plan.tail ({}) must not exceed plan.iterations ({})",
                self.tail, self.iterations
            )));
        }
        Ok(())
    }
}

/// One LMS adaptation of `basis` toward the measurement:
/// `basis + mu·uᵀ(d − u·basis)`. Both the ideal-link update (applied to the
/// neighbor's estimate) and the fading-link update (applied to the received
/// signal) are this step on different inputs.
pub fn lms_step(basis: &DVector<f64>, u: &DVector<f64>, d: f64, mu: f64) -> DVector<f64> {
    basis + u * (mu * (d - u.dot(basis)))
}

/// Flat-fading link distortion: `gain·w_sent + noise`.
pub fn apply_channel(w_sent: &DVector<f64>, gain: f64, noise: &DVector<f64>) -> DVector<f64> {
    w_sent * gain + noise
}

/// Zero-forcing equalization of a received estimate. Returns `None` inside
/// the deep-fade guard band, in which case the hop must pass through
/// unequalized.
pub fn zf_equalize(received: &DVector<f64>, gain_estimate: f64) -> Option<DVector<f64>> {
    if gain_estimate.abs() <= EPSILON_ZF {
        None
    } else {
        Some(received / gain_estimate)
    }
}

/// Per-node simulator state.
#[derive(Debug, Clone)]
pub struct NodeState {
    /// Local estimate after this node's most recent update.
    pub w: DVector<f64>,
    pub regressor: RegressorState,
}

/// State for one running realization of the whole ring.
#[derive(Debug, Clone)]
pub struct RingState {
    pub nodes: Vec<NodeState>,
    /// Deep-fade hops skipped by the equalizer so far.
    pub outages: u64,
}

impl RingState {
    /// All estimates start at zero.
    pub fn new(config: &NetworkConfig) -> Self {
        RingState {
            nodes: (0..config.n_nodes)
                .map(|_| NodeState {
                    w: DVector::zeros(config.dim),
                    regressor: RegressorState::new(config.dim),
                })
                .collect(),
            outages: 0,
        }
    }
}

/// Instantaneous per-node squared metrics for one iteration.
#[derive(Debug, Clone)]
pub struct CycleMetrics {
    pub msd: Vec<f64>,
    pub emse: Vec<f64>,
    pub mse: Vec<f64>,
}

/// Advance every node once, in ring order, for iteration `iteration` of run
/// `run` (both 0-based). Returns the instantaneous metrics, each computed
/// against the pre-channel incoming estimate with the same regressor and
/// measurement the update then consumes.
pub fn run_cycle(
    config: &NetworkConfig,
    mode: LinkMode,
    state: &mut RingState,
    run: usize,
    iteration: usize,
) -> Result<CycleMetrics> {
    let n = config.n_nodes;
    let mut msd = Vec::with_capacity(n);
    let mut emse = Vec::with_capacity(n);
    let mut mse = Vec::with_capacity(n);
    for k in 0..n {
        let profile = &config.profiles[k];
        let channel = &config.channels[k];
        let key = (config.seed, run as u64, k as u64, iteration as u64);
        // The first node consumes the last node's estimate from the
        // previous iteration; every state starts at zero, so iteration 0
        // needs no special case.
        let incoming = state.nodes[(k + n - 1) % n].w.clone();

        let draw = if mode == LinkMode::Ideal {
            None
        } else {
            let mut gain_rng = substream(key.0, key.1, key.2, key.3, Purpose::ChannelGain);
            let mut noise_rng = substream(key.0, key.1, key.2, key.3, Purpose::ChannelNoise);
            let mut estimate_rng = substream(key.0, key.1, key.2, key.3, Purpose::ChannelEstimate);
            Some(sample_channel(
                channel,
                profile.q_factor(),
                &mut gain_rng,
                &mut noise_rng,
                &mut estimate_rng,
            ))
        };
        let mut regressor_rng = substream(key.0, key.1, key.2, key.3, Purpose::Regressor);
        let u = sample_regressor(profile, &mut state.nodes[k].regressor, &mut regressor_rng);
        let mut measurement_rng = substream(key.0, key.1, key.2, key.3, Purpose::Measurement);
        let d = sample_measurement(&u, &config.w_true, profile.sigma_v2, &mut measurement_rng);

        let err = &config.w_true - &incoming;
        msd.push(err.norm_squared());
        emse.push((&profile.ru * &err).dot(&err));
        let innovation = d - u.dot(&incoming);
        mse.push(innovation * innovation);

        let basis = match (mode, &draw) {
            (LinkMode::Ideal, _) => incoming,
            (LinkMode::Fading, Some(c)) => apply_channel(&incoming, c.gain, &c.noise),
            (LinkMode::FadingZf, Some(c)) => {
                let received = apply_channel(&incoming, c.gain, &c.noise);
                match zf_equalize(&received, c.gain_estimate) {
                    Some(equalized) => equalized,
                    None => {
                        state.outages += 1;
                        received
                    }
                }
            }
            _ => unreachable!("fading modes always carry a channel draw"),
        };
        let updated = lms_step(&basis, &u, d, profile.mu);
        if !updated
            .iter()
            .all(|x| x.is_finite() && x.abs() <= DIVERGENCE_LIMIT)
        {
            return Err(IlmsError::Divergence {
                run: run + 1,
                node: k + 1,
                iteration: iteration + 1,
            });
        }
        state.nodes[k].w = updated;
    }
    Ok(CycleMetrics { msd, emse, mse })
}

/// Everything one independent run produces. Kept per-run (not yet averaged)
/// so callers can also form across-run error bars.
#[derive(Debug, Clone)]
pub struct RunOutput {
    /// `msd[k][i]`: squared deviation at node `k`, iteration `i`.
    pub msd: Vec<Vec<f64>>,
    pub emse: Vec<Vec<f64>>,
    pub mse: Vec<Vec<f64>>,
    /// Sum over the tail window of the post-update weight error per node;
    /// divide by the tail length for this run's bias estimate.
    pub bias_tail_sum: Vec<DVector<f64>>,
    pub outages: u64,
}

/// Execute a single run (0-based index) of the plan.
pub fn simulate_run(config: &NetworkConfig, plan: &ExperimentPlan, run: usize) -> Result<RunOutput> {
    let n = config.n_nodes;
    let mut state = RingState::new(config);
    let mut msd = vec![Vec::with_capacity(plan.iterations); n];
    let mut emse = vec![Vec::with_capacity(plan.iterations); n];
    let mut mse = vec![Vec::with_capacity(plan.iterations); n];
    let mut bias_tail_sum = vec![DVector::zeros(config.dim); n];
    let tail_start = plan.iterations - plan.tail;
    for iteration in 0..plan.iterations {
        let metrics = run_cycle(config, plan.mode, &mut state, run, iteration)?;
        for k in 0..n {
            msd[k].push(metrics.msd[k]);
            emse[k].push(metrics.emse[k]);
            mse[k].push(metrics.mse[k]);
        }
        if iteration >= tail_start {
            for k in 0..n {
                bias_tail_sum[k] += &config.w_true - &state.nodes[k].w;
            }
        }
    }
    Ok(RunOutput {
        msd,
        emse,
        mse,
        bias_tail_sum,
        outages: state.outages,
    })
}

/// Run-averaged per-iteration metrics.
#[derive(Debug, Clone)]
pub struct MetricSeries {
    pub n_nodes: usize,
    pub iterations: usize,
    pub runs: usize,
    /// `msd[k][i]`, averaged over runs.
    pub msd: Vec<Vec<f64>>,
    pub emse: Vec<Vec<f64>>,
    pub mse: Vec<Vec<f64>>,
}

/// Aggregated simulation result.
#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub series: MetricSeries,
    /// Mean post-update weight error per node, averaged over runs and the
    /// plan's tail window.
    pub bias: Vec<DVector<f64>>,
    /// Total deep-fade equalizer skips across all runs.
    pub outages: u64,
}

fn execute_runs(config: &NetworkConfig, plan: &ExperimentPlan) -> Result<Vec<RunOutput>> {
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(plan.workers.unwrap_or(0))
            .build()
            .map_err(|e| IlmsError::Config(format!("worker pool: {e}")))?;
        // Collect every run's result first, then surface the earliest
        // failure by run order so errors don't depend on scheduling.
        let results: Vec<Result<RunOutput>> = pool.install(|| {
            (0..plan.runs)
                .into_par_iter()
                .map(|run| simulate_run(config, plan, run))
                .collect()
        });
        results.into_iter().collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = plan.workers;
        (0..plan.runs)
            .map(|run| simulate_run(config, plan, run))
            .collect()
    }
}

/// Run the full Monte Carlo plan. Deterministic in the config seed: worker
/// count and scheduling cannot change a single bit of the output.
pub fn run_monte_carlo(config: &NetworkConfig, plan: &ExperimentPlan) -> Result<SimulationOutput> {
    config.validate()?;
    plan.validate()?;
    let runs = execute_runs(config, plan)?;

    let n = config.n_nodes;
    let scale = 1.0 / plan.runs as f64;
    let mut msd = vec![vec![0.0; plan.iterations]; n];
    let mut emse = vec![vec![0.0; plan.iterations]; n];
    let mut mse = vec![vec![0.0; plan.iterations]; n];
    let mut bias = vec![DVector::zeros(config.dim); n];
    let mut outages = 0u64;
    for run in &runs {
        for k in 0..n {
            for i in 0..plan.iterations {
                msd[k][i] += run.msd[k][i];
                emse[k][i] += run.emse[k][i];
                mse[k][i] += run.mse[k][i];
            }
            bias[k] += &run.bias_tail_sum[k];
        }
        outages += run.outages;
    }
    for k in 0..n {
        for i in 0..plan.iterations {
            msd[k][i] *= scale;
            emse[k][i] *= scale;
            mse[k][i] *= scale;
        }
        bias[k] *= scale / plan.tail as f64;
    }
    Ok(SimulationOutput {
        series: MetricSeries {
            n_nodes: n,
            iterations: plan.iterations,
            runs: plan.runs,
            msd,
            emse,
            mse,
        },
        bias,
        outages,
    })
}

/// Mean of the last `tail` entries.
pub fn tail_average(values: &[f64], tail: usize) -> Result<f64> {
    if tail == 0 {
        return Err(IlmsError::Config("tail window must be >= 1".into()));
    }
    if tail > values.len() {
        return Err(IlmsError::Config(format!(
            "tail window ({tail}) exceeds the series length ({})",
            values.len()
        )));
    }
    let window = &values[values.len() - tail..];
    Ok(window.iter().sum::<f64>() / tail as f64)
}

/// Empirical steady-state metrics for one node.
#[derive(Debug, Clone)]
pub struct NodeSteadyState {
    pub eta: f64,
    pub zeta: f64,
    pub xi: f64,
    pub eta_db: f64,
    pub zeta_db: f64,
    pub xi_db: f64,
    pub bias: DVector<f64>,
    pub bias_norm: f64,
}

/// Tail-averaged steady-state estimates per node.
#[derive(Debug, Clone)]
pub struct SteadyStateEstimate {
    pub nodes: Vec<NodeSteadyState>,
    pub tail: usize,
}

/// Average the last `tail` iterations of each metric per node. The bias
/// vectors are carried over from the simulation's own tail accumulation.
pub fn estimate_steady_state(output: &SimulationOutput, tail: usize) -> Result<SteadyStateEstimate> {
    let mut nodes = Vec::with_capacity(output.series.n_nodes);
    for k in 0..output.series.n_nodes {
        let eta = tail_average(&output.series.msd[k], tail)?;
        let zeta = tail_average(&output.series.emse[k], tail)?;
        let xi = tail_average(&output.series.mse[k], tail)?;
        let bias = output.bias[k].clone();
        nodes.push(NodeSteadyState {
            eta,
            zeta,
            xi,
            eta_db: decibels(eta),
            zeta_db: decibels(zeta),
            xi_db: decibels(xi),
            bias_norm: bias.norm(),
            bias,
        });
    }
    Ok(SteadyStateEstimate { nodes, tail })
}
