//! Browser bindings for the toolkit: three interactive views, each taking
//! and returning JSON strings so the demo page stays framework-free. All
//! networks here are scalar (one tap, unit regressor power) to keep the
//! in-browser runs instant; the native CLI covers the general case.

use ilms_core::engine::{estimate_steady_state, run_monte_carlo, ExperimentPlan, LinkMode};
use ilms_core::model::{ChannelLaw, ChannelModel, NetworkConfig, NodeProfile};
use ilms_core::theory::TheoryWorkspace;
use ilms_core::{decibels, IlmsError, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

fn scalar_ring(
    n: usize,
    mu: f64,
    sigma_v2: f64,
    sigma_c2: f64,
    channel: ChannelModel,
    w_true: f64,
    seed: u64,
) -> Result<NetworkConfig> {
    let profiles = (0..n)
        .map(|k| {
            NodeProfile::iid(
                k,
                mu,
                sigma_v2,
                DMatrix::from_element(1, 1, 1.0),
                DMatrix::from_element(1, 1, sigma_c2),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    NetworkConfig::new(
        DVector::from_element(1, w_true),
        seed,
        profiles,
        vec![channel; n],
    )
}

fn to_js<T: Serialize>(value: &T) -> std::result::Result<String, JsError> {
    serde_json::to_string(value).map_err(|e| JsError::new(&e.to_string()))
}

fn bad(err: IlmsError) -> JsError {
    JsError::new(&err.to_string())
}

// ---------------------------------------------------------------------------
// 1. Learning curves: simulate a small ring and overlay the predicted
//    steady state per node.

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RingParams {
    n: usize,
    mu: f64,
    sigma_v2: f64,
    sigma_c2: f64,
    /// "ideal", "constant", or "rayleigh".
    law: String,
    /// Constant gain h, or the Rayleigh mean gain.
    gain: f64,
    iterations: usize,
    runs: usize,
    seed: u64,
}

impl Default for RingParams {
    fn default() -> Self {
        RingParams {
            n: 10,
            mu: 0.05,
            sigma_v2: 5e-3,
            sigma_c2: 1e-4,
            law: "rayleigh".to_owned(),
            gain: 0.9,
            iterations: 600,
            runs: 12,
            seed: 1,
        }
    }
}

#[derive(Serialize)]
struct LearningCurves {
    /// Network-average simulated MSD per iteration, in dB.
    msd_db: Vec<f64>,
    /// Per-node simulated steady-state MSD, in dB.
    steady_sim_db: Vec<f64>,
    /// Per-node predicted steady-state MSD, in dB; absent if refused.
    steady_pred_db: Option<Vec<f64>>,
    /// Why the prediction was refused, if it was.
    refusal: Option<String>,
    /// Iteration at which the simulation hit the divergence guard, if any.
    diverged_at: Option<usize>,
}

#[wasm_bindgen]
pub fn learning_curves(params: &str) -> std::result::Result<String, JsError> {
    let p: RingParams =
        serde_json::from_str(params).map_err(|e| JsError::new(&e.to_string()))?;
    let (mode, channel, sigma_c2) = match p.law.as_str() {
        // Ideal links never traverse a channel, so the link noise is forced
        // to zero to keep the prediction aligned with what is simulated.
        "ideal" => (LinkMode::Ideal, ChannelModel::ideal(), 0.0),
        "constant" => (
            LinkMode::Fading,
            ChannelModel::new(ChannelLaw::Constant { h: p.gain }, 0.0).map_err(bad)?,
            p.sigma_c2,
        ),
        "rayleigh" => (
            LinkMode::Fading,
            ChannelModel::new(
                ChannelLaw::Rayleigh {
                    sigma_r: p.gain * (2.0 / std::f64::consts::PI).sqrt(),
                },
                0.0,
            )
            .map_err(bad)?,
            p.sigma_c2,
        ),
        other => return Err(JsError::new(&format!("unknown channel law {other:?}"))),
    };
    let iterations = p.iterations.clamp(10, 5000);
    let tail = (iterations / 5).max(1);
    let plan = ExperimentPlan {
        mode,
        iterations,
        runs: p.runs.clamp(1, 100),
        tail,
        workers: None,
    };
    let cfg = scalar_ring(p.n, p.mu, p.sigma_v2, sigma_c2, channel, 1.0, p.seed).map_err(bad)?;

    let (steady_pred_db, refusal) = match TheoryWorkspace::build(&cfg)
        .and_then(|ws| ws.steady_state())
    {
        Ok(pred) => (
            Some(pred.nodes.iter().map(|node| node.eta_db).collect()),
            None,
        ),
        Err(err) => (None, Some(err.to_string())),
    };

    let out = match run_monte_carlo(&cfg, &plan) {
        Ok(output) => {
            let msd_db = (0..iterations)
                .map(|i| {
                    let mean = (0..cfg.n_nodes)
                        .map(|k| output.series.msd[k][i])
                        .sum::<f64>()
                        / cfg.n_nodes as f64;
                    decibels(mean)
                })
                .collect();
            let steady = estimate_steady_state(&output, tail).map_err(bad)?;
            LearningCurves {
                msd_db,
                steady_sim_db: steady.nodes.iter().map(|node| node.eta_db).collect(),
                steady_pred_db,
                refusal,
                diverged_at: None,
            }
        }
        Err(IlmsError::Divergence { iteration, .. }) => LearningCurves {
            msd_db: Vec::new(),
            steady_sim_db: Vec::new(),
            steady_pred_db,
            refusal,
            diverged_at: Some(iteration),
        },
        Err(err) => return Err(bad(err)),
    };
    to_js(&out)
}

// ---------------------------------------------------------------------------
// 2. Severity curve: predicted EMSE against the gain second moment at unit
//    mean gain, with the refusal boundary made visible.

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SeverityParams {
    n: usize,
    mu: f64,
    sigma_v2: f64,
    sigma_c2: f64,
    s_max: f64,
    points: usize,
}

impl Default for SeverityParams {
    fn default() -> Self {
        SeverityParams {
            n: 5,
            mu: 0.05,
            sigma_v2: 1e-3,
            sigma_c2: 1e-4,
            s_max: 1.35,
            points: 60,
        }
    }
}

#[derive(Serialize)]
struct SeverityCurve {
    s: Vec<f64>,
    /// Predicted EMSE at node 1 in dB; null where the prediction is refused.
    emse_db: Vec<Option<f64>>,
    /// Largest admissible second moment 1 / (1 - 2 mu + 2 mu^2).
    boundary: f64,
}

#[wasm_bindgen]
pub fn severity_curve(params: &str) -> std::result::Result<String, JsError> {
    let p: SeverityParams =
        serde_json::from_str(params).map_err(|e| JsError::new(&e.to_string()))?;
    let points = p.points.clamp(2, 400);
    let s_max = p.s_max.max(1.0 + 1e-6);
    let mut s_values = Vec::with_capacity(points);
    let mut emse_db = Vec::with_capacity(points);
    for i in 0..points {
        let s = 1.0 + (s_max - 1.0) * i as f64 / (points - 1) as f64;
        let law = ChannelLaw::unit_mean_two_point(s).map_err(bad)?;
        let channel = ChannelModel::new(law, 0.0).map_err(bad)?;
        let cfg = scalar_ring(p.n, p.mu, p.sigma_v2, p.sigma_c2, channel, 1.0, 1).map_err(bad)?;
        let value = TheoryWorkspace::build(&cfg)
            .and_then(|ws| ws.steady_state())
            .ok()
            .map(|pred| pred.nodes[0].zeta_db);
        s_values.push(s);
        emse_db.push(value);
    }
    let f = 1.0 - 2.0 * p.mu + 2.0 * p.mu * p.mu;
    to_js(&SeverityCurve {
        s: s_values,
        emse_db,
        boundary: 1.0 / f,
    })
}

// ---------------------------------------------------------------------------
// 3. Step-size explorer: the admissible mean-stability interval for a
//    constant-gain ring and how the spectral radius and bias move across it.

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct StepSizeParams {
    n: usize,
    /// Constant channel gain.
    h: f64,
    points: usize,
}

impl Default for StepSizeParams {
    fn default() -> Self {
        StepSizeParams {
            n: 3,
            h: 1.2,
            points: 80,
        }
    }
}

#[derive(Serialize)]
struct StepSizeView {
    /// Admissible interval ((m-1)/m, (m+1)/m) at unit regressor power.
    lo: f64,
    hi: f64,
    mu: Vec<f64>,
    rho_mean: Vec<f64>,
    /// Norm of the limiting mean bias; null where the mean recursion is
    /// unstable.
    bias_norm: Vec<Option<f64>>,
}

#[wasm_bindgen]
pub fn step_size_explorer(params: &str) -> std::result::Result<String, JsError> {
    let p: StepSizeParams =
        serde_json::from_str(params).map_err(|e| JsError::new(&e.to_string()))?;
    let points = p.points.clamp(2, 400);
    let channel = ChannelModel::new(ChannelLaw::Constant { h: p.h }, 0.0).map_err(bad)?;
    let probe = scalar_ring(p.n, 0.1, 1e-3, 0.0, channel, 1.0, 1).map_err(bad)?;
    let (lo, hi) = TheoryWorkspace::build(&probe)
        .map_err(bad)?
        .mean_step_size_range(0)
        .map_err(bad)?;

    // Span past both edges: for gains above 1 the interval has a positive
    // lower edge, and the view should show instability on both sides.
    let mu_max = hi * 1.25;
    let mu_min = mu_max / points as f64;
    let mut mu_values = Vec::with_capacity(points);
    let mut rho_mean = Vec::with_capacity(points);
    let mut bias_norm = Vec::with_capacity(points);
    for i in 0..points {
        let mu = mu_min + (mu_max - mu_min) * i as f64 / (points - 1) as f64;
        let cfg = scalar_ring(p.n, mu, 1e-3, 0.0, channel, 1.0, 1).map_err(bad)?;
        let ws = TheoryWorkspace::build(&cfg).map_err(bad)?;
        let (_, rho) = ws.mean_stability();
        mu_values.push(mu);
        rho_mean.push(rho);
        bias_norm.push(ws.asymptotic_bias().ok().map(|b| b.norm()));
    }
    to_js(&StepSizeView {
        lo,
        hi,
        mu: mu_values,
        rho_mean,
        bias_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn learning_curves_default_params() {
        let out: Value = serde_json::from_str(&learning_curves("{}").unwrap()).unwrap();
        assert_eq!(out["msd_db"].as_array().unwrap().len(), 600);
        assert_eq!(out["steady_sim_db"].as_array().unwrap().len(), 10);
        assert_eq!(out["steady_pred_db"].as_array().unwrap().len(), 10);
        assert!(out["refusal"].is_null());
        assert!(out["diverged_at"].is_null());
    }

    #[test]
    fn learning_curves_reports_refusal_and_divergence() {
        let out: Value = serde_json::from_str(
            &learning_curves(r#"{ "law": "constant", "gain": 1.3, "mu": 0.1 }"#).unwrap(),
        )
        .unwrap();
        assert!(out["refusal"].is_string());
        assert!(out["diverged_at"].is_u64());
        assert!(out["msd_db"].as_array().unwrap().is_empty());
    }

    #[test]
    fn severity_curve_shows_the_boundary() {
        let out: Value = serde_json::from_str(&severity_curve("{}").unwrap()).unwrap();
        let emse = out["emse_db"].as_array().unwrap();
        assert_eq!(emse.len(), 60);
        assert!(emse.first().unwrap().is_f64());
        assert!(emse.last().unwrap().is_null());
        let boundary = out["boundary"].as_f64().unwrap();
        assert!((boundary - 1.0 / 0.905).abs() < 1e-12);
    }

    #[test]
    fn step_size_explorer_brackets_the_interval() {
        let out: Value = serde_json::from_str(&step_size_explorer("{}").unwrap()).unwrap();
        assert!((out["lo"].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-12);
        assert!((out["hi"].as_f64().unwrap() - 11.0 / 6.0).abs() < 1e-12);
        // With gain 1.2 both edges of the interval are inside the grid:
        // unstable (null bias) at the ends, stable in the middle.
        let bias = out["bias_norm"].as_array().unwrap();
        assert!(bias.first().unwrap().is_null());
        assert!(bias.last().unwrap().is_null());
        assert!(bias.iter().any(|b| b.is_f64()));
    }
}
