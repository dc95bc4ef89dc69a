//! Experiment data model and stochastic input generation.
//!
//! A ring of `n` nodes estimates a common parameter vector `w_true` of length
//! `dim`. Node `k` observes regressors with covariance `ru` and measurements
//! `d = u·w_true + v`. The estimate travels the ring over links modeled as
//! flat-fading channels: a scalar gain `h` (mean `m`, second moment `s`) plus
//! additive noise with covariance `q`. Everything random is drawn from
//! counter-based substreams (see [`crate::rng`]), so sampling is a pure
//! function of the stream key.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{IlmsError, Result};
use crate::linalg;

/// Relative tolerance for symmetry checks and stored-vs-analytic channel
/// moment consistency.
pub const MOMENT_TOL: f64 = 1e-12;

pub fn standard_normal_vector(dim: usize, rng: &mut impl Rng) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.sample(StandardNormal))
}

/// How a node's regression vectors are generated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegressorMode {
    /// Independent Gaussian vectors with covariance `ru` each iteration.
    IidGaussian,
    /// Scalar AR(1) process `u(i) = alpha·u(i-1) + beta·tau(i)` feeding a
    /// shift window; the regressor is the last `dim` samples, newest first.
    /// `beta = sqrt(sigma_u2·(1-alpha²))` keeps the stationary variance at
    /// `sigma_u2`.
    Ar1Shift { alpha: f64, sigma_u2: f64 },
}

/// Per-node statistics: step size, regressor covariance, observation-noise
/// variance, and the noise covariance of the incoming link.
#[derive(Debug, Clone)]
pub struct NodeProfile {
    /// 0-based position in the ring.
    pub index: usize,
    pub mu: f64,
    pub sigma_v2: f64,
    /// Regressor covariance (derived from the AR(1) parameters in
    /// `Ar1Shift` mode).
    pub ru: DMatrix<f64>,
    /// Covariance of the additive noise on the link into this node.
    pub q: DMatrix<f64>,
    pub regressor: RegressorMode,
    ru_factor: DMatrix<f64>,
    q_factor: DMatrix<f64>,
}

impl NodeProfile {
    fn build(
        index: usize,
        mu: f64,
        sigma_v2: f64,
        ru: DMatrix<f64>,
        q: DMatrix<f64>,
        regressor: RegressorMode,
    ) -> Result<Self> {
        let dim = ru.nrows();
        let err = |msg: String| Err(IlmsError::Config(msg));
        // Zero step size is admitted so boundary cases (no adaptation) can be
        // analyzed; config files reject it separately.
        if !(mu.is_finite() && mu >= 0.0) {
            return err(format!("node {index}: mu must be finite and nonnegative, got {mu}"));
        }
        if !(sigma_v2.is_finite() && sigma_v2 >= 0.0) {
            return err(format!("node {index}: sigma_v2 must be finite and nonnegative"));
        }
        if ru.ncols() != dim || dim == 0 {
            return err(format!("node {index}: ru must be square and nonempty"));
        }
        if q.nrows() != dim || q.ncols() != dim {
            return err(format!("node {index}: q must be {dim}x{dim} to match ru"));
        }
        if !linalg::is_symmetric(&ru, MOMENT_TOL) {
            return err(format!("node {index}: ru must be symmetric"));
        }
        if !linalg::is_symmetric(&q, MOMENT_TOL) {
            return err(format!("node {index}: q must be symmetric"));
        }
        let ru_factor = linalg::symmetrize(&ru)
            .cholesky()
            .ok_or_else(|| {
                IlmsError::Config(format!("node {index}: ru must be positive definite"))
            })?
            .l();
        let q_factor = linalg::psd_sqrt(&q).map_err(|_| {
            IlmsError::Config(format!("node {index}: q must be positive semidefinite"))
        })?;
        Ok(NodeProfile {
            index,
            mu,
            sigma_v2,
            ru,
            q,
            regressor,
            ru_factor,
            q_factor,
        })
    }

    /// Profile with iid Gaussian regressors of covariance `ru`.
    pub fn iid(
        index: usize,
        mu: f64,
        sigma_v2: f64,
        ru: DMatrix<f64>,
        q: DMatrix<f64>,
    ) -> Result<Self> {
        Self::build(index, mu, sigma_v2, ru, q, RegressorMode::IidGaussian)
    }

    /// Profile with AR(1) shift-structure regressors. `ru` is derived: the
    /// stationary covariance is Toeplitz with entries
    /// `sigma_u2·alpha^|a-b|`. Accepts any `alpha` in (0, 1); callers that
    /// want the narrower conventional range (0, 0.5] enforce it themselves.
    pub fn ar1(
        index: usize,
        mu: f64,
        sigma_v2: f64,
        alpha: f64,
        sigma_u2: f64,
        dim: usize,
        q: DMatrix<f64>,
    ) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0 && alpha < 1.0) {
            return Err(IlmsError::Config(format!(
                "node {index}: ar1 alpha must lie in (0, 1), got {alpha}"
            )));
        }
        if !(sigma_u2.is_finite() && sigma_u2 > 0.0) {
            return Err(IlmsError::Config(format!(
                "node {index}: ar1 sigma_u2 must be positive"
            )));
        }
        let ru = ar1_toeplitz(dim, alpha, sigma_u2);
        Self::build(
            index,
            mu,
            sigma_v2,
            ru,
            q,
            RegressorMode::Ar1Shift { alpha, sigma_u2 },
        )
    }

    /// Same profile with a different step size (used by parameter sweeps).
    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        Self::build(
            self.index,
            mu,
            self.sigma_v2,
            self.ru.clone(),
            self.q.clone(),
            self.regressor,
        )
    }

    /// Lower Cholesky factor of `ru` (for iid regressor sampling).
    pub fn ru_factor(&self) -> &DMatrix<f64> {
        &self.ru_factor
    }

    /// Symmetric PSD square root of `q` (for channel-noise sampling).
    pub fn q_factor(&self) -> &DMatrix<f64> {
        &self.q_factor
    }

    pub fn dim(&self) -> usize {
        self.ru.nrows()
    }
}

/// Stationary AR(1) covariance: entries `sigma_u2 · alpha^|a-b|`.
pub fn ar1_toeplitz(dim: usize, alpha: f64, sigma_u2: f64) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |a, b| {
        sigma_u2 * alpha.powi((a as i32 - b as i32).abs())
    })
}

/// Distribution of a link's scalar fading gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelLaw {
    /// Deterministic unit gain.
    Ideal,
    /// Deterministic gain `h`.
    Constant { h: f64 },
    /// Rayleigh gain with scale `sigma_r`.
    Rayleigh { sigma_r: f64 },
    /// Two-point gain: `h1` with probability `p`, else `h2`.
    TwoPoint { h1: f64, h2: f64, p: f64 },
}

impl ChannelLaw {
    /// Two-point law with mean 1 and second moment `s` (used when sweeping
    /// the fading severity at fixed average gain). For `s ≤ 2` a symmetric
    /// pair `1 ± sqrt(s-1)` is used; beyond that a zero/spike pair keeps the
    /// gains nonnegative.
    pub fn unit_mean_two_point(s: f64) -> Result<Self> {
        if !(s.is_finite() && s >= 1.0) {
            return Err(IlmsError::Config(format!(
                "unit-mean two-point law needs second moment >= 1, got {s}"
            )));
        }
        if s <= 2.0 {
            let delta = (s - 1.0).sqrt();
            Ok(ChannelLaw::TwoPoint {
                h1: 1.0 - delta,
                h2: 1.0 + delta,
                p: 0.5,
            })
        } else {
            Ok(ChannelLaw::TwoPoint {
                h1: 0.0,
                h2: s,
                p: 1.0 - 1.0 / s,
            })
        }
    }
}

/// Exact mean and second moment of a channel law, validating its parameters.
pub fn channel_moments(law: &ChannelLaw) -> Result<(f64, f64)> {
    match *law {
        ChannelLaw::Ideal => Ok((1.0, 1.0)),
        ChannelLaw::Constant { h } => {
            if !(h.is_finite() && h >= 0.0) {
                return Err(IlmsError::Config(format!(
                    "constant channel gain must be nonnegative, got {h}"
                )));
            }
            Ok((h, h * h))
        }
        ChannelLaw::Rayleigh { sigma_r } => {
            if !(sigma_r.is_finite() && sigma_r > 0.0) {
                return Err(IlmsError::Config(format!(
                    "rayleigh sigma_r must be positive, got {sigma_r}"
                )));
            }
            Ok((
                sigma_r * (std::f64::consts::PI / 2.0).sqrt(),
                2.0 * sigma_r * sigma_r,
            ))
        }
        ChannelLaw::TwoPoint { h1, h2, p } => {
            if !(h1.is_finite() && h1 >= 0.0 && h2.is_finite() && h2 >= 0.0) {
                return Err(IlmsError::Config(
                    "two-point channel gains must be nonnegative".into(),
                ));
            }
            if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
                return Err(IlmsError::Config(format!(
                    "two-point probability must lie in [0, 1], got {p}"
                )));
            }
            Ok((p * h1 + (1.0 - p) * h2, p * h1 * h1 + (1.0 - p) * h2 * h2))
        }
    }
}

/// Rayleigh scale and second moment matching a target mean gain `m`:
/// `sigma_r = m·sqrt(2/pi)`, `s = 2·sigma_r² = 4m²/pi`.
pub fn rayleigh_from_mean(m: f64) -> Result<(f64, f64)> {
    if !(m.is_finite() && m > 0.0) {
        return Err(IlmsError::Config(format!(
            "rayleigh mean gain must be positive, got {m}"
        )));
    }
    let sigma_r = m * (2.0 / std::f64::consts::PI).sqrt();
    Ok((sigma_r, 2.0 * sigma_r * sigma_r))
}

/// A link's fading law together with its moments and the variance of the
/// channel-estimation error used by zero-forcing equalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    pub law: ChannelLaw,
    /// m = E[h].
    pub mean_gain: f64,
    /// s = E[h²].
    pub second_moment: f64,
    /// Variance of the additive Gaussian error in the gain estimate
    /// (0 = perfect channel knowledge).
    pub estimation_error_var: f64,
}

impl ChannelModel {
    pub fn new(law: ChannelLaw, estimation_error_var: f64) -> Result<Self> {
        if !(estimation_error_var.is_finite() && estimation_error_var >= 0.0) {
            return Err(IlmsError::Config(
                "estimation_error_var must be finite and nonnegative".into(),
            ));
        }
        let (mean_gain, second_moment) = channel_moments(&law)?;
        Ok(ChannelModel {
            law,
            mean_gain,
            second_moment,
            estimation_error_var,
        })
    }

    pub fn ideal() -> Self {
        ChannelModel::new(ChannelLaw::Ideal, 0.0).expect("ideal law is always valid")
    }

    /// Re-check that the stored moments match the law analytically (guards
    /// hand-built or deserialized values).
    pub fn verify_moments(&self) -> Result<()> {
        let (m, s) = channel_moments(&self.law)?;
        let scale = m.abs().max(s.abs()).max(1.0);
        if (m - self.mean_gain).abs() > MOMENT_TOL * scale
            || (s - self.second_moment).abs() > MOMENT_TOL * scale
        {
            return Err(IlmsError::Config(format!(
                "channel moments ({}, {}) disagree with law-implied ({m}, {s})",
                self.mean_gain, self.second_moment
            )));
        }
        if self.second_moment + MOMENT_TOL < self.mean_gain * self.mean_gain {
            return Err(IlmsError::Config(
                "channel second moment below squared mean".into(),
            ));
        }
        Ok(())
    }

    /// Draw one gain realization. Ideal and constant laws consume no
    /// randomness.
    pub fn sample_gain(&self, rng: &mut impl Rng) -> f64 {
        match self.law {
            ChannelLaw::Ideal => 1.0,
            ChannelLaw::Constant { h } => h,
            ChannelLaw::Rayleigh { sigma_r } => {
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                sigma_r * (z1 * z1 + z2 * z2).sqrt()
            }
            ChannelLaw::TwoPoint { h1, h2, p } => {
                if rng.random::<f64>() < p {
                    h1
                } else {
                    h2
                }
            }
        }
    }
}

/// One realization of a link: gain, additive noise, and the receiver's gain
/// estimate `h + eps`.
#[derive(Debug, Clone)]
pub struct ChannelDraw {
    pub gain: f64,
    pub noise: DVector<f64>,
    pub gain_estimate: f64,
}

/// Sample a full channel realization. The three generators are separate
/// purpose substreams so that, e.g., switching estimation on or off never
/// shifts the gain or noise sequences.
pub fn sample_channel(
    model: &ChannelModel,
    q_factor: &DMatrix<f64>,
    gain_rng: &mut impl Rng,
    noise_rng: &mut impl Rng,
    estimate_rng: &mut impl Rng,
) -> ChannelDraw {
    let gain = model.sample_gain(gain_rng);
    let noise = q_factor * standard_normal_vector(q_factor.nrows(), noise_rng);
    let eps: f64 = estimate_rng.sample(StandardNormal);
    ChannelDraw {
        gain,
        noise,
        gain_estimate: gain + model.estimation_error_var.sqrt() * eps,
    }
}

/// Shift window for AR(1) regressors, newest sample first.
#[derive(Debug, Clone)]
pub struct RegressorState {
    window: DVector<f64>,
}

impl RegressorState {
    pub fn new(dim: usize) -> Self {
        RegressorState {
            window: DVector::zeros(dim),
        }
    }

    pub fn reset(&mut self) {
        self.window.fill(0.0);
    }

    fn push(&mut self, value: f64) {
        let m = self.window.len();
        for i in (1..m).rev() {
            self.window[i] = self.window[i - 1];
        }
        self.window[0] = value;
    }
}

/// Draw the next regression vector for a node (as a column; the data model
/// treats it as a row acting by dot products).
pub fn sample_regressor(
    profile: &NodeProfile,
    state: &mut RegressorState,
    rng: &mut impl Rng,
) -> DVector<f64> {
    match profile.regressor {
        RegressorMode::IidGaussian => {
            profile.ru_factor() * standard_normal_vector(profile.dim(), rng)
        }
        RegressorMode::Ar1Shift { alpha, sigma_u2 } => {
            let beta = (sigma_u2 * (1.0 - alpha * alpha)).sqrt();
            let tau: f64 = rng.sample(StandardNormal);
            state.push(alpha * state.window[0] + beta * tau);
            state.window.clone()
        }
    }
}

/// Measurement `d = u·w_true + v` with `v ~ N(0, sigma_v2)`.
pub fn sample_measurement(
    u: &DVector<f64>,
    w_true: &DVector<f64>,
    sigma_v2: f64,
    rng: &mut impl Rng,
) -> f64 {
    let v: f64 = rng.sample(StandardNormal);
    u.dot(w_true) + sigma_v2.sqrt() * v
}

/// Synthesize a symmetric PD covariance with prescribed eigenvalue spread
/// (`lambda_max/lambda_min`) and trace: eigenvalues are linearly spaced and a
/// Haar-random orthogonal basis is drawn from `rng`. `dim = 1` forces
/// `spread = 1` (a single eigenvalue carries the whole trace).
pub fn build_covariance(
    dim: usize,
    spread: f64,
    trace: f64,
    rng: &mut impl Rng,
) -> Result<DMatrix<f64>> {
    if dim == 0 {
        return Err(IlmsError::Config("covariance dimension must be >= 1".into()));
    }
    if !(trace.is_finite() && trace > 0.0) {
        return Err(IlmsError::Config(format!(
            "covariance trace must be positive, got {trace}"
        )));
    }
    if !(spread.is_finite() && spread >= 1.0) {
        return Err(IlmsError::Config(format!(
            "eigenvalue spread must be >= 1, got {spread}"
        )));
    }
    if dim == 1 {
        if spread != 1.0 {
            return Err(IlmsError::Config(
                "eigenvalue spread must be 1 when the dimension is 1".into(),
            ));
        }
        return Ok(DMatrix::from_element(1, 1, trace));
    }
    // Linear spacing from lambda_min to spread*lambda_min sums to
    // dim·lambda_min·(spread+1)/2, which pins lambda_min given the trace.
    let lambda_min = 2.0 * trace / (dim as f64 * (spread + 1.0));
    let lambda_max = spread * lambda_min;
    let step = (lambda_max - lambda_min) / (dim as f64 - 1.0);
    let eigenvalues = DVector::from_fn(dim, |i, _| lambda_min + step * i as f64);
    let basis = haar_orthogonal(dim, rng);
    Ok(linalg::symmetrize(
        &(&basis * DMatrix::from_diagonal(&eigenvalues) * basis.transpose()),
    ))
}

/// Haar-distributed random orthogonal matrix: QR of a Gaussian matrix with
/// the sign ambiguity fixed by the diagonal of R.
fn haar_orthogonal(dim: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let z = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = z.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            for i in 0..dim {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Network-wide least-squares solution `(sum ru)^-1 (sum rdu)`; with
/// model-consistent cross-covariances `rdu = ru·w_true` this recovers
/// `w_true`.
pub fn normal_equation_solution(
    rus: &[DMatrix<f64>],
    rdus: &[DVector<f64>],
) -> Result<DVector<f64>> {
    if rus.is_empty() || rus.len() != rdus.len() {
        return Err(IlmsError::Config(
            "normal equation needs matching, nonempty covariance lists".into(),
        ));
    }
    let dim = rus[0].nrows();
    let mut ru_sum = DMatrix::<f64>::zeros(dim, dim);
    let mut rdu_sum = DVector::<f64>::zeros(dim);
    for (ru, rdu) in rus.iter().zip(rdus) {
        if ru.nrows() != dim || ru.ncols() != dim || rdu.len() != dim {
            return Err(IlmsError::Config(
                "normal equation inputs have inconsistent dimensions".into(),
            ));
        }
        ru_sum += ru;
        rdu_sum += rdu;
    }
    ru_sum
        .lu()
        .solve(&rdu_sum)
        .ok_or_else(|| IlmsError::Numerical("normal-equation system is singular".into()))
}

/// Complete experiment description: ring size, data model, per-node profiles,
/// and per-link channels. Channel `k` carries the estimate from node `k-1`
/// into node `k` (indices mod `n`).
#[derive(Debug, Clone)]
pub struct NetworkConfig {
    pub n_nodes: usize,
    pub dim: usize,
    pub w_true: DVector<f64>,
    pub seed: u64,
    pub profiles: Vec<NodeProfile>,
    pub channels: Vec<ChannelModel>,
}

impl NetworkConfig {
    pub fn new(
        w_true: DVector<f64>,
        seed: u64,
        profiles: Vec<NodeProfile>,
        channels: Vec<ChannelModel>,
    ) -> Result<Self> {
        let cfg = NetworkConfig {
            n_nodes: profiles.len(),
            dim: w_true.len(),
            w_true,
            seed,
            profiles,
            channels,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_nodes < 2 {
            return Err(IlmsError::Config(format!(
                "network needs at least 2 nodes, got {}",
                self.n_nodes
            )));
        }
        if self.dim == 0 {
            return Err(IlmsError::Config("filter length must be >= 1".into()));
        }
        if self.profiles.len() != self.n_nodes || self.channels.len() != self.n_nodes {
            return Err(IlmsError::Config(format!(
                "expected {} profiles and channels, got {} and {}",
                self.n_nodes,
                self.profiles.len(),
                self.channels.len()
            )));
        }
        if self.w_true.len() != self.dim {
            return Err(IlmsError::Config(
                "w_true length disagrees with filter length".into(),
            ));
        }
        for (k, profile) in self.profiles.iter().enumerate() {
            if profile.index != k {
                return Err(IlmsError::Config(format!(
                    "profile at position {k} carries index {}",
                    profile.index
                )));
            }
            if profile.dim() != self.dim {
                return Err(IlmsError::Config(format!(
                    "node {k}: covariance dimension {} disagrees with filter length {}",
                    profile.dim(),
                    self.dim
                )));
            }
        }
        for channel in &self.channels {
            channel.verify_moments()?;
        }
        Ok(())
    }
}
