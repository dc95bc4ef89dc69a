//! JSON experiment files and their resolution into a concrete network.
//!
//! A file describes the ring (`network`), per-node statistics (`profiles`),
//! per-link fading laws (`channels`), and the execution plan (`plan`).
//! Numeric parameters may be given either as literals or as
//! `{"uniform": [lo, hi]}` ranges; ranges are drawn from dedicated,
//! seed-keyed resolution streams so a file plus a seed always yields the
//! same experiment. Single-entry `profiles`/`channels` lists are templates:
//! they replicate across all nodes, with each node drawing its own ranged
//! values.
//!
//! Loading also produces a fully resolved echo of the configuration (every
//! range replaced by its drawn value) plus its SHA-256; re-parsing the echo
//! reproduces the experiment exactly.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::engine::{ExperimentPlan, LinkMode};
use crate::error::{IlmsError, Result};
use crate::model::{
    build_covariance, rayleigh_from_mean, ChannelLaw, ChannelModel, NetworkConfig, NodeProfile,
};
use crate::rng::{substream, Purpose};

/// AR(1) memory above this needs `allow_wide_alpha` (the analysis assumes
/// nearly independent regressors; the conventional validation range stops at
/// one half).
const ALPHA_SOFT_LIMIT: f64 = 0.5;

/// Command-line overrides applied before resolution (so an overriding seed
/// re-draws every ranged parameter).
#[derive(Debug, Clone, Copy, Default)]
pub struct ConfigOverrides {
    pub seed: Option<u64>,
    pub runs: Option<usize>,
    pub iterations: Option<usize>,
    pub tail: Option<usize>,
    pub mode: Option<LinkMode>,
    pub workers: Option<usize>,
}

/// Which knob a sweep turns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    /// Every node's step size is set to the sweep value.
    StepSize,
    /// Every link becomes a unit-mean two-point law with second moment equal
    /// to the sweep value.
    GainSecondMoment,
}

/// Resolved sweep description.
#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    /// 0-based node whose rows are reported; `None` reports every node.
    pub node_focus: Option<usize>,
    /// Also run the Monte Carlo engine at each sweep point.
    pub simulate: bool,
}

/// A fully loaded experiment.
#[derive(Debug, Clone)]
pub struct LoadedExperiment {
    pub network: NetworkConfig,
    pub plan: ExperimentPlan,
    pub sweep: Option<SweepPlan>,
    /// Canonical resolved-config JSON; parsing it again reproduces this
    /// experiment bit for bit.
    pub resolved_json: String,
    /// Hex SHA-256 of `resolved_json`.
    pub config_sha256: String,
}

// ---------------------------------------------------------------------------
// Raw (serde) schema

/// A literal or a uniform range to be drawn at load time.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NumOrRange {
    Number(f64),
    Uniform { uniform: [f64; 2] },
}

impl NumOrRange {
    fn resolve(self, field: &str, rng: &mut impl rand::Rng) -> Result<f64> {
        match self {
            NumOrRange::Number(x) => {
                if !x.is_finite() {
                    return Err(IlmsError::Config(format!("{field}: must be finite, got {x}")));
                }
                Ok(x)
            }
            NumOrRange::Uniform { uniform: [lo, hi] } => {
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return Err(IlmsError::Config(format!(
                        "{field}: uniform range needs finite lo <= hi, got [{lo}, {hi}]"
                    )));
                }
                Ok(lo + (hi - lo) * rng.random::<f64>())
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    network: RawNetwork,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    profiles: Vec<RawProfile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    channels: Vec<RawChannel>,
    #[serde(default)]
    plan: RawPlan,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    /// Node count.
    n: usize,
    /// Filter length.
    m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    w_true: Option<WTrue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum WTrue {
    Scalar(f64),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawProfile {
    #[serde(skip_serializing_if = "Option::is_none")]
    mu: Option<NumOrRange>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_v2: Option<NumOrRange>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ru: Option<RawRu>,
    #[serde(skip_serializing_if = "Option::is_none")]
    q: Option<RawQ>,
    #[serde(skip_serializing_if = "Option::is_none")]
    regressor: Option<RawRegressor>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum RawRu {
    Synthetic { spread: f64, trace: NumOrRange },
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum RawQ {
    Isotropic { sigma_c2: NumOrRange },
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode")]
enum RawRegressor {
    #[serde(rename = "iid_gaussian")]
    IidGaussian,
    #[serde(rename = "ar1_shift")]
    Ar1Shift {
        alpha: NumOrRange,
        #[serde(skip_serializing_if = "Option::is_none")]
        sigma_u2: Option<NumOrRange>,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        allow_wide_alpha: bool,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    law: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    h: Option<NumOrRange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigma_r: Option<NumOrRange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mean: Option<NumOrRange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    h1: Option<NumOrRange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    h2: Option<NumOrRange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<NumOrRange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    estimation_error_var: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawPlan {
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    runs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tail: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<RawSweep>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    parameter: String,
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    node_focus: Option<usize>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    simulate: bool,
}

// ---------------------------------------------------------------------------
// Resolution

fn expand_template<T: Clone>(entries: &[T], default: T, n: usize, what: &str) -> Result<Vec<T>> {
    match entries.len() {
        0 => Ok(vec![default; n]),
        1 => Ok(vec![entries[0].clone(); n]),
        len if len == n => Ok(entries.to_vec()),
        len => Err(IlmsError::Config(format!(
            "{what}: expected 1 entry (template) or {n} entries, got {len}"
        ))),
    }
}

fn matrix_from_rows(rows: &[Vec<f64>], dim: usize, field: &str) -> Result<DMatrix<f64>> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(IlmsError::Config(format!(
            "{field}: matrix must be {dim}x{dim} (row-major rows)"
        )));
    }
    Ok(DMatrix::from_fn(dim, dim, |a, b| rows[a][b]))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|a| (0..m.ncols()).map(|b| m[(a, b)]).collect())
        .collect()
}

/// Resolve one node's profile. `resolution` drives ranged scalars and
/// `basis` the random orthogonal basis of a synthesized covariance; both are
/// node-keyed substreams.
fn resolve_profile(
    raw: &RawProfile,
    k: usize,
    dim: usize,
    resolution: &mut impl rand::Rng,
    basis: &mut impl rand::Rng,
) -> Result<(NodeProfile, RawProfile)> {
    let at = |field: &str| format!("profiles[{k}].{field}");
    let mu = raw
        .mu
        .unwrap_or(NumOrRange::Number(0.02))
        .resolve(&at("mu"), resolution)?;
    if !(mu > 0.0) {
        return Err(IlmsError::Config(format!(
            "{}: step size must be positive, got {mu}",
            at("mu")
        )));
    }
    let sigma_v2 = raw
        .sigma_v2
        .unwrap_or(NumOrRange::Uniform {
            uniform: [0.001, 0.01],
        })
        .resolve(&at("sigma_v2"), resolution)?;

    // Regressor mode decides whether `ru` may appear at all: AR(1) regressors
    // imply their own stationary covariance.
    let regressor = raw.regressor.clone().unwrap_or(RawRegressor::IidGaussian);
    let resolved_ru;
    let ru = match (&regressor, &raw.ru) {
        (RawRegressor::Ar1Shift { .. }, Some(_)) => {
            return Err(IlmsError::Config(format!(
                "{}: ar1_shift regressors derive their covariance; drop the ru field",
                at("ru")
            )));
        }
        (RawRegressor::Ar1Shift { .. }, None) => None,
        (RawRegressor::IidGaussian, spec) => {
            // A 1-dimensional covariance has a single eigenvalue, so the
            // default spread collapses to 1 there.
            let spec = spec.clone().unwrap_or(RawRu::Synthetic {
                spread: if dim == 1 { 1.0 } else { 4.0 },
                trace: NumOrRange::Uniform { uniform: [1.0, 2.0] },
            });
            Some(match spec {
                RawRu::Synthetic { spread, trace } => {
                    let trace = trace.resolve(&at("ru.trace"), resolution)?;
                    build_covariance(dim, spread, trace, basis)
                        .map_err(|e| IlmsError::Config(format!("{}: {e}", at("ru"))))?
                }
                RawRu::Matrix(rows) => matrix_from_rows(&rows, dim, &at("ru"))?,
            })
        }
    };

    let q = match raw.q.clone().unwrap_or(RawQ::Isotropic {
        sigma_c2: NumOrRange::Uniform {
            uniform: [0.0001, 0.001],
        },
    }) {
        RawQ::Isotropic { sigma_c2 } => {
            let sigma_c2 = sigma_c2.resolve(&at("q.sigma_c2"), resolution)?;
            if sigma_c2 < 0.0 {
                return Err(IlmsError::Config(format!(
                    "{}: sigma_c2 must be nonnegative",
                    at("q.sigma_c2")
                )));
            }
            DMatrix::identity(dim, dim) * sigma_c2
        }
        RawQ::Matrix(rows) => matrix_from_rows(&rows, dim, &at("q"))?,
    };

    let (profile, resolved_regressor) = match regressor {
        RawRegressor::IidGaussian => {
            let ru = ru.expect("iid regressors always carry a covariance");
            resolved_ru = Some(RawRu::Matrix(matrix_to_rows(&ru)));
            (
                NodeProfile::iid(k, mu, sigma_v2, ru, q.clone())?,
                RawRegressor::IidGaussian,
            )
        }
        RawRegressor::Ar1Shift {
            alpha,
            sigma_u2,
            allow_wide_alpha,
        } => {
            let alpha = alpha.resolve(&at("regressor.alpha"), resolution)?;
            let sigma_u2 = sigma_u2
                .unwrap_or(NumOrRange::Number(1.0))
                .resolve(&at("regressor.sigma_u2"), resolution)?;
            if !allow_wide_alpha && !(alpha > 0.0 && alpha <= ALPHA_SOFT_LIMIT) {
                return Err(IlmsError::Config(format!(
                    "{}: alpha {alpha} outside (0, {ALPHA_SOFT_LIMIT}]; set \
                     allow_wide_alpha to accept any alpha in (0, 1)",
                    at("regressor.alpha")
                )));
            }
            resolved_ru = None;
            (
                NodeProfile::ar1(k, mu, sigma_v2, alpha, sigma_u2, dim, q.clone())?,
                RawRegressor::Ar1Shift {
                    alpha: NumOrRange::Number(alpha),
                    sigma_u2: Some(NumOrRange::Number(sigma_u2)),
                    allow_wide_alpha,
                },
            )
        }
    };

    let echo = RawProfile {
        mu: Some(NumOrRange::Number(mu)),
        sigma_v2: Some(NumOrRange::Number(sigma_v2)),
        ru: resolved_ru,
        q: Some(RawQ::Matrix(matrix_to_rows(&q))),
        regressor: Some(resolved_regressor),
    };
    Ok((profile, echo))
}

fn require_fields(
    k: usize,
    law: &str,
    given: &[(&str, bool)],
    wanted: &[&str],
) -> Result<()> {
    for (name, present) in given {
        let should = wanted.contains(name);
        if *present && !should {
            return Err(IlmsError::Config(format!(
                "channels[{k}]: field {name:?} does not apply to law {law:?}"
            )));
        }
    }
    Ok(())
}

fn resolve_channel(
    raw: &RawChannel,
    k: usize,
    resolution: &mut impl rand::Rng,
) -> Result<(ChannelModel, RawChannel)> {
    let at = |field: &str| format!("channels[{k}].{field}");
    let given = [
        ("h", raw.h.is_some()),
        ("sigma_r", raw.sigma_r.is_some()),
        ("mean", raw.mean.is_some()),
        ("h1", raw.h1.is_some()),
        ("h2", raw.h2.is_some()),
        ("p", raw.p.is_some()),
    ];
    let mut echo = RawChannel {
        law: raw.law.clone(),
        h: None,
        sigma_r: None,
        mean: None,
        h1: None,
        h2: None,
        p: None,
        estimation_error_var: Some(raw.estimation_error_var.unwrap_or(0.0)),
    };
    let law = match raw.law.as_str() {
        "ideal" => {
            require_fields(k, "ideal", &given, &[])?;
            ChannelLaw::Ideal
        }
        "constant" => {
            require_fields(k, "constant", &given, &["h"])?;
            let h = raw
                .h
                .ok_or_else(|| IlmsError::Config(format!("{}: required", at("h"))))?
                .resolve(&at("h"), resolution)?;
            echo.h = Some(NumOrRange::Number(h));
            ChannelLaw::Constant { h }
        }
        "rayleigh" => {
            require_fields(k, "rayleigh", &given, &["sigma_r", "mean"])?;
            let sigma_r = match (raw.sigma_r, raw.mean) {
                (Some(s), None) => s.resolve(&at("sigma_r"), resolution)?,
                (None, Some(m)) => {
                    let mean = m.resolve(&at("mean"), resolution)?;
                    rayleigh_from_mean(mean)
                        .map_err(|e| IlmsError::Config(format!("{}: {e}", at("mean"))))?
                        .0
                }
                _ => {
                    return Err(IlmsError::Config(format!(
                        "channels[{k}]: rayleigh needs exactly one of sigma_r or mean"
                    )));
                }
            };
            echo.sigma_r = Some(NumOrRange::Number(sigma_r));
            ChannelLaw::Rayleigh { sigma_r }
        }
        "two_point" => {
            require_fields(k, "two_point", &given, &["h1", "h2", "p"])?;
            let field = |opt: Option<NumOrRange>, name: &str| {
                opt.ok_or_else(|| IlmsError::Config(format!("{}: required", at(name))))
            };
            let h1 = field(raw.h1, "h1")?.resolve(&at("h1"), resolution)?;
            let h2 = field(raw.h2, "h2")?.resolve(&at("h2"), resolution)?;
            let p = field(raw.p, "p")?.resolve(&at("p"), resolution)?;
            echo.h1 = Some(NumOrRange::Number(h1));
            echo.h2 = Some(NumOrRange::Number(h2));
            echo.p = Some(NumOrRange::Number(p));
            ChannelLaw::TwoPoint { h1, h2, p }
        }
        other => {
            return Err(IlmsError::Config(format!(
                "channels[{k}].law: unknown law {other:?}; expected ideal, constant, \
                 rayleigh, or two_point"
            )));
        }
    };
    let estimation_error_var = raw.estimation_error_var.unwrap_or(0.0);
    let model = ChannelModel::new(law, estimation_error_var)
        .map_err(|e| IlmsError::Config(format!("channels[{k}]: {e}")))?;
    Ok((model, echo))
}

fn resolve_plan(raw: &RawPlan, overrides: &ConfigOverrides) -> Result<(ExperimentPlan, RawPlan)> {
    let defaults = ExperimentPlan::default();
    let mode = match (&overrides.mode, &raw.mode) {
        (Some(mode), _) => *mode,
        (None, Some(text)) => text.parse()?,
        (None, None) => defaults.mode,
    };
    let plan = ExperimentPlan {
        mode,
        iterations: overrides
            .iterations
            .or(raw.iterations)
            .unwrap_or(defaults.iterations),
        runs: overrides.runs.or(raw.runs).unwrap_or(defaults.runs),
        tail: overrides.tail.or(raw.tail).unwrap_or(defaults.tail),
        workers: overrides.workers.or(raw.workers),
    };
    plan.validate()?;
    let echo = RawPlan {
        mode: Some(plan.mode.as_str().to_owned()),
        iterations: Some(plan.iterations),
        runs: Some(plan.runs),
        tail: Some(plan.tail),
        workers: plan.workers,
        sweep: raw.sweep.clone(),
    };
    Ok((plan, echo))
}

fn resolve_sweep(raw: &RawSweep, n_nodes: usize) -> Result<SweepPlan> {
    let parameter = match raw.parameter.as_str() {
        "mu" => SweepParameter::StepSize,
        "s" => SweepParameter::GainSecondMoment,
        other => {
            return Err(IlmsError::Config(format!(
                "plan.sweep.parameter: unknown parameter {other:?}; expected mu or s"
            )));
        }
    };
    if raw.values.is_empty() {
        return Err(IlmsError::Config("plan.sweep.values: must not be empty".into()));
    }
    for value in &raw.values {
        if !(value.is_finite() && *value > 0.0) {
            return Err(IlmsError::Config(format!(
                "plan.sweep.values: entries must be finite and positive, got {value}"
            )));
        }
    }
    let node_focus = match raw.node_focus {
        None => None,
        Some(node) => {
            if node < 1 || node > n_nodes {
                return Err(IlmsError::Config(format!(
                    "plan.sweep.node_focus: node {node} outside 1..={n_nodes}"
                )));
            }
            Some(node - 1)
        }
    };
    Ok(SweepPlan {
        parameter,
        values: raw.values.clone(),
        node_focus,
        simulate: raw.simulate,
    })
}

/// Parse and resolve an experiment from JSON text.
pub fn parse_experiment(text: &str, overrides: &ConfigOverrides) -> Result<LoadedExperiment> {
    let raw: RawConfig = serde_json::from_str(text)?;
    let n = raw.network.n;
    let dim = raw.network.m;
    if n < 2 {
        return Err(IlmsError::Config(format!(
            "network.n: need at least 2 nodes, got {n}"
        )));
    }
    if dim < 1 {
        return Err(IlmsError::Config("network.m: filter length must be >= 1".into()));
    }
    let seed = overrides.seed.or(raw.network.seed).unwrap_or(0);
    let w_true = match &raw.network.w_true {
        None => DVector::from_element(dim, 0.5),
        Some(WTrue::Scalar(x)) => DVector::from_element(dim, *x),
        Some(WTrue::Vector(v)) => {
            if v.len() != dim {
                return Err(IlmsError::Config(format!(
                    "network.w_true: expected {dim} entries, got {}",
                    v.len()
                )));
            }
            DVector::from_row_slice(v)
        }
    };
    if w_true.iter().any(|x| !x.is_finite()) {
        return Err(IlmsError::Config("network.w_true: entries must be finite".into()));
    }

    let profile_templates = expand_template(&raw.profiles, RawProfile::default(), n, "profiles")?;
    let default_channel = RawChannel {
        law: "rayleigh".to_owned(),
        h: None,
        sigma_r: None,
        mean: Some(NumOrRange::Number(std::f64::consts::FRAC_1_SQRT_2)),
        h1: None,
        h2: None,
        p: None,
        estimation_error_var: None,
    };
    let channel_templates = expand_template(&raw.channels, default_channel, n, "channels")?;

    let mut profiles = Vec::with_capacity(n);
    let mut profile_echoes = Vec::with_capacity(n);
    for (k, template) in profile_templates.iter().enumerate() {
        let mut resolution = substream(seed, 0, k as u64, 0, Purpose::ProfileResolution);
        let mut basis = substream(seed, 0, k as u64, 0, Purpose::CovarianceBasis);
        let (profile, echo) = resolve_profile(template, k, dim, &mut resolution, &mut basis)?;
        profiles.push(profile);
        profile_echoes.push(echo);
    }
    let mut channels = Vec::with_capacity(n);
    let mut channel_echoes = Vec::with_capacity(n);
    for (k, template) in channel_templates.iter().enumerate() {
        let mut resolution = substream(seed, 0, k as u64, 0, Purpose::ChannelResolution);
        let (channel, echo) = resolve_channel(template, k, &mut resolution)?;
        channels.push(channel);
        channel_echoes.push(echo);
    }

    let (plan, plan_echo) = resolve_plan(&raw.plan, overrides)?;
    let sweep = raw
        .plan
        .sweep
        .as_ref()
        .map(|raw_sweep| resolve_sweep(raw_sweep, n))
        .transpose()?;

    let network = NetworkConfig::new(w_true.clone(), seed, profiles, channels)?;

    let echo = RawConfig {
        network: RawNetwork {
            n,
            m: dim,
            w_true: Some(WTrue::Vector(w_true.iter().copied().collect())),
            seed: Some(seed),
        },
        profiles: profile_echoes,
        channels: channel_echoes,
        plan: plan_echo,
    };
    let resolved_json =
        serde_json::to_string_pretty(&echo).expect("resolved config always serializes") + "\n";
    let config_sha256 = sha256_hex(resolved_json.as_bytes());

    Ok(LoadedExperiment {
        network,
        plan,
        sweep,
        resolved_json,
        config_sha256,
    })
}

/// Load an experiment from a file.
pub fn load_experiment(path: &Path, overrides: &ConfigOverrides) -> Result<LoadedExperiment> {
    let text = std::fs::read_to_string(path)?;
    parse_experiment(&text, overrides)
}

/// Derive the network for one sweep point from the base network.
pub fn apply_sweep_value(
    base: &NetworkConfig,
    parameter: SweepParameter,
    value: f64,
) -> Result<NetworkConfig> {
    match parameter {
        SweepParameter::StepSize => {
            let profiles = base
                .profiles
                .iter()
                .map(|p| p.with_mu(value))
                .collect::<Result<Vec<_>>>()?;
            NetworkConfig::new(base.w_true.clone(), base.seed, profiles, base.channels.clone())
        }
        SweepParameter::GainSecondMoment => {
            let law = ChannelLaw::unit_mean_two_point(value)?;
            let channels = base
                .channels
                .iter()
                .map(|c| ChannelModel::new(law, c.estimation_error_var))
                .collect::<Result<Vec<_>>>()?;
            NetworkConfig::new(
                base.w_true.clone(),
                base.seed,
                base.profiles.clone(),
                channels,
            )
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
