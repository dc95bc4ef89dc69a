//! Closed-form steady-state analysis.
//!
//! From a [`NetworkConfig`] this module derives everything the mean and
//! mean-square recursions need: per-node mean transitions `J = I - mu·Ru`,
//! the around-the-ring mean cycle map and its forcing term (which yield the
//! stability test and the asymptotic bias), and — in each node's eigenbasis —
//! the variance transition `F̄`, the noise/fading injection row `g`, the
//! chained weight transitions `Π`, and their accumulated sums `a` that give
//! steady-state MSD/EMSE/MSE. A small-step-size approximation and a
//! brute-force scalar fixed point (used as an independent cross-check of the
//! closed forms) live here too.
//!
//! Conventions: node indices are 0-based in this API and 1-based in emitted
//! reports; ring products compose with later nodes on the left, which is the
//! order the update chain actually applies them in.

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::decibels;
use crate::error::{IlmsError, Result};
use crate::linalg;
use crate::model::NetworkConfig;

/// Condition numbers above this attach a warning to predictions.
pub const CONDITION_WARN: f64 = 1e12;

/// Derived per-node quantities, all in the node's own regressor eigenbasis
/// where applicable.
#[derive(Debug, Clone)]
pub struct NodeTheory {
    /// J = I - mu·Ru, the per-node mean-error transition over an ideal link.
    pub mean_transition: DMatrix<f64>,
    /// Orthonormal eigenvectors of Ru (columns, ascending eigenvalues).
    pub basis: DMatrix<f64>,
    /// Eigenvalues of Ru, ascending.
    pub eigenvalues: DVector<f64>,
    /// Variance transition F̄ = I - 2·mu·Λ + mu²(Λ² + λλᵀ).
    pub f_bar: DMatrix<f64>,
    /// Diagonal of the link-noise covariance in the eigenbasis.
    pub q_bar_diag: DVector<f64>,
    /// Squared entries of the eigenbasis image of w_true (diagonal of the
    /// rank-one true-weight outer product).
    pub d_diag: DVector<f64>,
    pub mu: f64,
    pub sigma_v2: f64,
    /// Mean gain m of the link into this node.
    pub mean_gain: f64,
    /// Second moment s of the link into this node.
    pub second_moment: f64,
}

/// Stability diagnostics for one node.
#[derive(Debug, Clone, Copy)]
pub struct NodeStability {
    /// Open interval of step sizes guaranteeing mean stability at this node.
    pub mu_range: (f64, f64),
    /// Mean-square margin s·rho(F̄); stability requires < 1.
    pub ms_margin: f64,
}

/// Network-level stability summary.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    /// Spectral radius of the ring mean cycle map.
    pub rho_mean: f64,
    pub mean_stable: bool,
    /// All per-node mean-square margins < 1.
    pub ms_stable: bool,
    /// Largest spectral radius of the full-cycle weight transition, the
    /// matrix the predictions actually invert (diagnostic only).
    pub rho_network: f64,
    pub nodes: Vec<NodeStability>,
}

/// Steady-state metric triple in linear power units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricPoint {
    pub eta: f64,
    pub zeta: f64,
    pub xi: f64,
}

/// Per-node steady-state prediction.
#[derive(Debug, Clone, Copy)]
pub struct NodePrediction {
    pub eta: f64,
    pub zeta: f64,
    pub xi: f64,
    pub eta_db: f64,
    pub zeta_db: f64,
    pub xi_db: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ConditionWarning {
    /// 0-based node index.
    pub node: usize,
    pub condition: f64,
}

/// Closed-form steady-state output: per-node metrics plus the common
/// asymptotic bias vector.
#[derive(Debug, Clone)]
pub struct SteadyStatePrediction {
    pub nodes: Vec<NodePrediction>,
    /// Limiting mean weight error (the analysis yields one vector for the
    /// whole ring).
    pub bias: DVector<f64>,
    pub bias_norm: f64,
    pub condition_warnings: Vec<ConditionWarning>,
}

/// All derived matrices for one configuration; immutable once built.
#[derive(Debug, Clone)]
pub struct TheoryWorkspace {
    pub dim: usize,
    pub n_nodes: usize,
    pub w_true: DVector<f64>,
    pub nodes: Vec<NodeTheory>,
    /// Product of m·J around the ring, later nodes on the left.
    pub cycle_mean: DMatrix<f64>,
    /// Sum over nodes of (later-node tail product)·(1-m)·J; together with
    /// `cycle_mean` this drives the per-cycle mean recursion
    /// `E[err] <- cycle_mean·E[err] + mean_forcing·w_true`.
    pub mean_forcing: DMatrix<f64>,
    pub rho_mean: f64,
    /// Product of all per-link second moments.
    pub gain_power_product: f64,
}

fn row_dot(row: &RowDVector<f64>, col: &DVector<f64>) -> f64 {
    (row * col)[(0, 0)]
}

impl TheoryWorkspace {
    pub fn build(config: &NetworkConfig) -> Result<Self> {
        let dim = config.dim;
        let mut nodes = Vec::with_capacity(config.n_nodes);
        for (profile, channel) in config.profiles.iter().zip(&config.channels) {
            let (eigenvalues, basis) = linalg::sorted_symmetric_eigen(&profile.ru);
            if eigenvalues[0] <= 0.0 {
                return Err(IlmsError::Numerical(format!(
                    "node {}: regressor covariance is not positive definite",
                    profile.index
                )));
            }
            let mu = profile.mu;
            let lambda_diag = DMatrix::from_diagonal(&eigenvalues);
            let mean_transition = DMatrix::identity(dim, dim) - mu * &profile.ru;
            let fourth_moment =
                &lambda_diag * &lambda_diag + &eigenvalues * eigenvalues.transpose();
            let f_bar =
                DMatrix::identity(dim, dim) - 2.0 * mu * &lambda_diag + mu * mu * fourth_moment;
            let q_bar = basis.transpose() * &profile.q * &basis;
            let w_bar = basis.transpose() * &config.w_true;
            nodes.push(NodeTheory {
                mean_transition,
                basis,
                eigenvalues,
                f_bar,
                q_bar_diag: q_bar.diagonal(),
                d_diag: w_bar.map(|x| x * x),
                mu,
                sigma_v2: profile.sigma_v2,
                mean_gain: channel.mean_gain,
                second_moment: channel.second_moment,
            });
        }

        // One reverse pass builds the cycle map and the forcing sum: when
        // node n is visited, `tail` holds the product of all later nodes'
        // m·J factors (identity for the last node).
        let mut tail = DMatrix::identity(dim, dim);
        let mut forcing = DMatrix::zeros(dim, dim);
        for node in nodes.iter().rev() {
            forcing += &tail * ((1.0 - node.mean_gain) * &node.mean_transition);
            tail = &tail * (node.mean_gain * &node.mean_transition);
        }
        let rho_mean = linalg::spectral_radius(&tail);
        let gain_power_product = nodes.iter().map(|n| n.second_moment).product();

        Ok(TheoryWorkspace {
            dim,
            n_nodes: config.n_nodes,
            w_true: config.w_true.clone(),
            nodes,
            cycle_mean: tail,
            mean_forcing: forcing,
            rho_mean,
            gain_power_product,
        })
    }

    /// Open interval of step sizes that guarantees mean stability at node
    /// `k`: (max{0, (m-1)/(m·λ_min)}, (m+1)/(m·λ_max)).
    pub fn mean_step_size_range(&self, k: usize) -> Result<(f64, f64)> {
        let node = &self.nodes[k];
        let m = node.mean_gain;
        if m <= 0.0 {
            return Err(IlmsError::Config(format!(
                "node {}: mean step-size range needs a positive mean channel gain, got {m}",
                k + 1
            )));
        }
        let lo = ((m - 1.0) / (m * node.eigenvalues[0])).max(0.0);
        let hi = (m + 1.0) / (m * node.eigenvalues[self.dim - 1]);
        Ok((lo, hi))
    }

    /// Exact mean-stability test: spectral radius of the cycle map < 1.
    pub fn mean_stability(&self) -> (bool, f64) {
        (self.rho_mean < 1.0, self.rho_mean)
    }

    /// (I - cycle_mean)⁻¹ · mean_forcing: maps w_true to the limiting mean
    /// weight error.
    pub fn bias_operator(&self) -> Result<DMatrix<f64>> {
        if self.rho_mean >= 1.0 {
            return Err(IlmsError::Instability(format!(
                "mean recursion is not stable (rho = {:.6}); no limiting bias exists",
                self.rho_mean
            )));
        }
        let lhs = DMatrix::identity(self.dim, self.dim) - &self.cycle_mean;
        lhs.lu()
            .solve(&self.mean_forcing)
            .ok_or_else(|| IlmsError::Instability("mean cycle map is at the unit circle".into()))
    }

    /// Limiting mean weight error; zero when every link has unit mean gain.
    pub fn asymptotic_bias(&self) -> Result<DVector<f64>> {
        Ok(self.bias_operator()? * &self.w_true)
    }

    /// Run the per-cycle mean recursion forward from `w0_err`, returning the
    /// trajectory including the initial point (`cycles + 1` entries).
    pub fn iterate_mean_recursion(&self, w0_err: &DVector<f64>, cycles: usize) -> Vec<DVector<f64>> {
        let drive = &self.mean_forcing * &self.w_true;
        let mut trajectory = Vec::with_capacity(cycles + 1);
        trajectory.push(w0_err.clone());
        let mut current = w0_err.clone();
        for _ in 0..cycles {
            current = &self.cycle_mean * current + &drive;
            trajectory.push(current.clone());
        }
        trajectory
    }

    /// Bias operator expressed in node `k`'s eigenbasis (the form consumed by
    /// the injection row).
    pub fn transformed_bias_map(&self, k: usize) -> Result<DMatrix<f64>> {
        let basis = &self.nodes[k].basis;
        Ok(basis.transpose() * self.bias_operator()? * basis)
    }

    /// Injection row g for node `k`: measurement-noise, link-noise, and
    /// fading (true-weight and bias cross) contributions per eigendirection.
    pub fn injection_row(&self, k: usize) -> Result<RowDVector<f64>> {
        let node = &self.nodes[k];
        let (m, s) = (node.mean_gain, node.second_moment);
        let mut g = node.eigenvalues.transpose() * (node.mu * node.mu * node.sigma_v2);
        g += node.q_bar_diag.transpose() * &node.f_bar;
        g += node.d_diag.transpose() * &node.f_bar * (1.0 - 2.0 * m + s);
        // The bias cross term vanishes when m = s or w_true = 0; skipping it
        // then also keeps ideal-link configs evaluable without mean-bias
        // machinery.
        let cross = 2.0 * (m - s);
        if cross != 0.0 && node.d_diag.iter().any(|d| *d != 0.0) {
            g += node.d_diag.transpose() * self.transformed_bias_map(k)? * &node.f_bar * cross;
        }
        Ok(g)
    }

    /// Chained weight transition Π for node `k` at depth `l` in 1..=n: the
    /// ordered product of s·F̄ over nodes k+l-1, ..., k-1 (cyclic), leftmost
    /// factor first; depth 1 covers the whole ring.
    pub fn weight_transition(&self, k: usize, l: usize) -> Result<DMatrix<f64>> {
        if l < 1 || l > self.n_nodes {
            return Err(IlmsError::Config(format!(
                "weight-transition depth {l} outside 1..={}",
                self.n_nodes
            )));
        }
        let mut product = DMatrix::identity(self.dim, self.dim);
        for offset in (l - 1)..self.n_nodes {
            let node = &self.nodes[(k + offset) % self.n_nodes];
            product = product * (node.second_moment * &node.f_bar);
        }
        Ok(product)
    }

    /// Accumulated injection row a for node `k` plus the full-cycle
    /// transition Π at depth 1 (both needed by the steady-state solve).
    fn accumulate(&self, k: usize) -> Result<(RowDVector<f64>, DMatrix<f64>)> {
        let n = self.n_nodes;
        // Walk depths from the shallowest product up, prepending one factor
        // at a time: after the step for depth l, `acc` equals Π at depth l.
        let mut acc = DMatrix::identity(self.dim, self.dim);
        let mut a = self.injection_row((k + n - 1) % n)?;
        for l in (2..=n).rev() {
            let node = &self.nodes[(k + l - 1) % n];
            acc = (node.second_moment * &node.f_bar) * acc;
            a += self.injection_row((k + l - 2) % n)? * &acc;
        }
        let head = &self.nodes[k];
        let pi_full = (head.second_moment * &head.f_bar) * acc;
        Ok((a, pi_full))
    }

    /// Accumulated injection row a for node `k`.
    pub fn injection_sum(&self, k: usize) -> Result<RowDVector<f64>> {
        Ok(self.accumulate(k)?.0)
    }

    /// Per-node step-size intervals and mean-square margins, plus the
    /// network-level radii.
    pub fn stability(&self) -> Result<StabilityReport> {
        let mut nodes = Vec::with_capacity(self.n_nodes);
        let mut ms_stable = true;
        for k in 0..self.n_nodes {
            let mu_range = self.mean_step_size_range(k)?;
            let ms_margin =
                self.nodes[k].second_moment * linalg::spectral_radius(&self.nodes[k].f_bar);
            ms_stable &= ms_margin < 1.0;
            nodes.push(NodeStability { mu_range, ms_margin });
        }
        let mut rho_network = 0.0f64;
        for k in 0..self.n_nodes {
            rho_network = rho_network.max(linalg::spectral_radius(&self.weight_transition(k, 1)?));
        }
        Ok(StabilityReport {
            rho_mean: self.rho_mean,
            mean_stable: self.rho_mean < 1.0,
            ms_stable,
            rho_network,
            nodes,
        })
    }

    /// Closed-form steady-state MSD/EMSE/MSE per node plus the common bias.
    /// Refuses (strictly) at or beyond either stability boundary.
    pub fn steady_state(&self) -> Result<SteadyStatePrediction> {
        if self.rho_mean >= 1.0 {
            return Err(IlmsError::Instability(format!(
                "mean recursion is not stable (rho = {:.6})",
                self.rho_mean
            )));
        }
        for (k, node) in self.nodes.iter().enumerate() {
            let margin = node.second_moment * linalg::spectral_radius(&node.f_bar);
            if margin >= 1.0 {
                return Err(IlmsError::Instability(format!(
                    "mean-square margin {margin:.6} >= 1 at node {} (second moment {} times \
                     variance-transition radius)",
                    k + 1,
                    node.second_moment
                )));
            }
        }
        let bias = self.asymptotic_bias()?;
        let identity = DMatrix::<f64>::identity(self.dim, self.dim);
        let ones = DVector::from_element(self.dim, 1.0);
        let mut rows = Vec::with_capacity(self.n_nodes);
        let mut condition_warnings = Vec::new();
        for k in 0..self.n_nodes {
            let (a, pi_full) = self.accumulate(k)?;
            let lhs = &identity - pi_full;
            let condition = linalg::condition_number(&lhs);
            if condition > CONDITION_WARN {
                condition_warnings.push(ConditionWarning { node: k, condition });
            }
            let lu = lhs.lu();
            let singular = || {
                IlmsError::Instability(format!(
                    "full-cycle weight transition is at the unit circle at node {}",
                    k + 1
                ))
            };
            let msd_weight = lu.solve(&ones).ok_or_else(singular)?;
            let emse_weight = lu.solve(&self.nodes[k].eigenvalues).ok_or_else(singular)?;
            let eta = row_dot(&a, &msd_weight);
            let zeta = row_dot(&a, &emse_weight);
            let xi = zeta + self.nodes[k].sigma_v2;
            rows.push(NodePrediction {
                eta,
                zeta,
                xi,
                eta_db: decibels(eta),
                zeta_db: decibels(zeta),
                xi_db: decibels(xi),
            });
        }
        Ok(SteadyStatePrediction {
            nodes: rows,
            bias_norm: bias.norm(),
            bias,
            condition_warnings,
        })
    }
}

/// Inputs for the simplified small-step-size approximation: unit mean gains,
/// isotropic regressors (`Ru = lambda·I`), isotropic link noise, one shared
/// step size. The filter length enters only through `w_norm2 = ‖w_true‖²`.
#[derive(Debug, Clone)]
pub struct SimplifiedAssumptions {
    pub n_nodes: usize,
    pub lambda: f64,
    pub mu: f64,
    /// Per-link gain second moments (>= 1 since means are 1).
    pub s: Vec<f64>,
    pub sigma_v2: Vec<f64>,
    pub sigma_c2: Vec<f64>,
    pub w_norm2: f64,
}

/// Small-step-size approximation of the steady-state metrics. The variance
/// transition collapses to the scalar contraction `1 - 2·mu·lambda`, making
/// the dependence on the gain second moments explicit.
pub fn approx_prediction(inputs: &SimplifiedAssumptions) -> Result<Vec<MetricPoint>> {
    let n = inputs.n_nodes;
    if n < 2 {
        return Err(IlmsError::Config("approximation needs at least 2 nodes".into()));
    }
    if inputs.s.len() != n || inputs.sigma_v2.len() != n || inputs.sigma_c2.len() != n {
        return Err(IlmsError::Config(
            "per-node parameter lists must all match the node count".into(),
        ));
    }
    if !(inputs.lambda > 0.0 && inputs.mu > 0.0 && inputs.w_norm2 >= 0.0) {
        return Err(IlmsError::Config(
            "approximation needs lambda > 0, mu > 0, and a nonnegative w_norm2".into(),
        ));
    }
    if inputs.s.iter().any(|s| *s < 1.0) {
        return Err(IlmsError::ApproximationDomain(
            "unit-mean gains force second moments >= 1".into(),
        ));
    }
    let contraction = 1.0 - 2.0 * inputs.mu * inputs.lambda;
    if !(contraction > 0.0 && contraction < 1.0) {
        return Err(IlmsError::ApproximationDomain(format!(
            "per-node contraction 1 - 2·mu·lambda = {contraction} outside (0, 1)"
        )));
    }
    let s_p: f64 = inputs.s.iter().product();
    let cycle_gain = s_p * contraction.powi(n as i32);
    if cycle_gain >= 1.0 {
        return Err(IlmsError::ApproximationDomain(format!(
            "cycle gain {cycle_gain:.6} >= 1: outside the mean-square stable regime"
        )));
    }

    let per_node_injection: Vec<f64> = (0..n)
        .map(|k| {
            inputs.mu * inputs.mu * inputs.sigma_v2[k] * inputs.lambda
                + inputs.sigma_c2[k] * contraction
                + s_p * (inputs.s[k] - 1.0) * contraction * inputs.w_norm2
        })
        .collect();
    let total: f64 = per_node_injection.iter().sum();
    let recirculation = 1.0 / (1.0 - cycle_gain) - 1.0;

    Ok((0..n)
        .map(|k| {
            let eta = recirculation * total + per_node_injection[(k + n - 1) % n];
            let zeta = inputs.lambda * eta;
            MetricPoint {
                eta,
                zeta,
                xi: zeta + inputs.sigma_v2[k],
            }
        })
        .collect())
}

/// Maximum cycles for the scalar fixed-point iteration.
const SCALAR_MAX_CYCLES: usize = 1_000_000;
/// Per-cycle relative-change threshold for convergence.
const SCALAR_TOL: f64 = 1e-13;

/// Brute-force steady state for scalar (dim = 1) configurations: jointly
/// iterates the exact per-node mean-coefficient and second-moment recursions
/// until they reach their fixed point. Shares no machinery with
/// [`TheoryWorkspace::steady_state`] beyond the moment model itself, so it
/// serves as an independent cross-check of the closed forms.
pub fn scalar_fixed_point(config: &NetworkConfig) -> Result<Vec<MetricPoint>> {
    if config.dim != 1 {
        return Err(IlmsError::Config(
            "scalar fixed point is defined for filter length 1 only".into(),
        ));
    }
    let n = config.n_nodes;
    let w_true = config.w_true[0];
    let d = w_true * w_true;

    struct ScalarNode {
        mu: f64,
        lambda: f64,
        sigma_v2: f64,
        q: f64,
        m: f64,
        s: f64,
        j: f64,
        f: f64,
    }
    let nodes: Vec<ScalarNode> = config
        .profiles
        .iter()
        .zip(&config.channels)
        .map(|(p, c)| {
            let lambda = p.ru[(0, 0)];
            let mu = p.mu;
            ScalarNode {
                mu,
                lambda,
                sigma_v2: p.sigma_v2,
                q: p.q[(0, 0)],
                m: c.mean_gain,
                s: c.second_moment,
                j: 1.0 - mu * lambda,
                f: 1.0 - 2.0 * mu * lambda + 2.0 * mu * mu * lambda * lambda,
            }
        })
        .collect();

    for (k, node) in nodes.iter().enumerate() {
        if node.s * node.f.abs() >= 1.0 {
            return Err(IlmsError::Instability(format!(
                "scalar mean-square margin >= 1 at node {}",
                k + 1
            )));
        }
    }
    let rho_mean: f64 = nodes.iter().map(|n| (n.m * n.j).abs()).product();
    if rho_mean >= 1.0 {
        return Err(IlmsError::Instability(format!(
            "scalar mean recursion is not stable (rho = {rho_mean:.6})"
        )));
    }

    // State after each node: mean coefficient c (E[err] = c·w_true) and
    // second moment p = E[err²]. Start from the zero-initialized filter:
    // c = 1, p = w_true².
    let mut mean_coeff = vec![1.0f64; n];
    let mut power = vec![d.max(1.0); n];
    let mut carry_c = 1.0;
    let mut carry_p = d;
    for _ in 0..SCALAR_MAX_CYCLES {
        let mut max_change = 0.0f64;
        for (k, node) in nodes.iter().enumerate() {
            let injection = node.mu * node.mu * node.sigma_v2 * node.lambda
                + node.q * node.f
                + (1.0 - 2.0 * node.m + node.s) * d * node.f
                + 2.0 * (node.m - node.s) * d * carry_c * node.f;
            let new_c = node.m * node.j * carry_c + (1.0 - node.m) * node.j;
            let new_p = node.s * node.f * carry_p + injection;
            let scale = new_p.abs().max(new_c.abs()).max(1e-300);
            max_change = max_change
                .max((new_c - mean_coeff[k]).abs() / scale)
                .max((new_p - power[k]).abs() / scale);
            mean_coeff[k] = new_c;
            power[k] = new_p;
            carry_c = new_c;
            carry_p = new_p;
        }
        if max_change < SCALAR_TOL {
            return Ok((0..n)
                .map(|k| {
                    let incoming = power[(k + n - 1) % n];
                    let zeta = nodes[k].lambda * incoming;
                    MetricPoint {
                        eta: incoming,
                        zeta,
                        xi: zeta + nodes[k].sigma_v2,
                    }
                })
                .collect());
        }
    }
    Err(IlmsError::NonConvergence(format!(
        "scalar fixed point did not settle within {SCALAR_MAX_CYCLES} cycles"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        build_covariance, ChannelLaw, ChannelModel, NetworkConfig, NodeProfile,
    };
    use crate::rng::{substream, Purpose};
    use approx::assert_relative_eq;

    /// Scalar ring with per-node (mu, lambda, sigma_v2, q) and given links.
    fn scalar_network(
        params: &[(f64, f64, f64, f64)],
        channels: Vec<ChannelModel>,
        w_true: f64,
    ) -> NetworkConfig {
        let profiles = params
            .iter()
            .enumerate()
            .map(|(k, &(mu, lambda, sigma_v2, q))| {
                NodeProfile::iid(
                    k,
                    mu,
                    sigma_v2,
                    DMatrix::from_element(1, 1, lambda),
                    DMatrix::from_element(1, 1, q),
                )
                .unwrap()
            })
            .collect();
        NetworkConfig::new(DVector::from_element(1, w_true), 7, profiles, channels).unwrap()
    }

    fn constant_channel(h: f64) -> ChannelModel {
        ChannelModel::new(ChannelLaw::Constant { h }, 0.0).unwrap()
    }

    fn unit_mean_channel(s: f64) -> ChannelModel {
        ChannelModel::new(ChannelLaw::unit_mean_two_point(s).unwrap(), 0.0).unwrap()
    }

    #[test]
    fn step_size_ranges() {
        // Unit mean gain, identity covariance: the classical (0, 2).
        let cfg = scalar_network(
            &[(0.1, 1.0, 0.01, 0.0), (0.1, 1.0, 0.01, 0.0)],
            vec![ChannelModel::ideal(), ChannelModel::ideal()],
            1.0,
        );
        let ws = TheoryWorkspace::build(&cfg).unwrap();
        let (lo, hi) = ws.mean_step_size_range(0).unwrap();
        assert_eq!(lo, 0.0);
        assert_relative_eq!(hi, 2.0, max_relative = 1e-14);

        // Mean gain 2 at unit eigenvalue: (0.5, 1.5).
        let cfg = scalar_network(
            &[(0.7, 1.0, 0.01, 0.0), (0.7, 1.0, 0.01, 0.0)],
            vec![constant_channel(2.0), constant_channel(2.0)],
            1.0,
        );
        let ws = TheoryWorkspace::build(&cfg).unwrap();
        let (lo, hi) = ws.mean_step_size_range(0).unwrap();
        assert_relative_eq!(lo, 0.5, max_relative = 1e-14);
        assert_relative_eq!(hi, 1.5, max_relative = 1e-14);

        // Mean gain 0.5: lower bound clamps at zero, upper bound 3.
        let cfg = scalar_network(
            &[(0.1, 1.0, 0.01, 0.0), (0.1, 1.0, 0.01, 0.0)],
            vec![constant_channel(0.5), constant_channel(0.5)],
            1.0,
        );
        let ws = TheoryWorkspace::build(&cfg).unwrap();
        let (lo, hi) = ws.mean_step_size_range(0).unwrap();
        assert_eq!(lo, 0.0);
        assert_relative_eq!(hi, 3.0, max_relative = 1e-14);

        // Zero mean gain is degenerate.
        let cfg = scalar_network(
            &[(0.1, 1.0, 0.01, 0.0), (0.1, 1.0, 0.01, 0.0)],
            vec![constant_channel(0.0), constant_channel(0.0)],
            1.0,
        );
        let ws = TheoryWorkspace::build(&cfg).unwrap();
        assert!(ws.mean_step_size_range(0).is_err());
    }

    #[test]
    fn mean_stability_boundary_and_product() {
        // mu = 0, unit mean gains: the cycle map is the identity, which is
        // not strictly stable.
        let cfg = scalar_network(
            &[(0.0, 1.0, 0.01, 0.0), (0.0, 1.0, 0.01, 0.0)],
            vec![ChannelModel::ideal(), ChannelModel::ideal()],
            1.0,
        );
        let ws = TheoryWorkspace::build(&cfg).unwrap();
        let (stable, rho) = ws.mean_stability();
        assert!(!stable);
        assert_relative_eq!(rho, 1.0, max_relative = 1e-12);

        // Scalar product: rho = (1.2·0.9)² = 1.1664.
        let cfg = scalar_network(
            &[(0.1, 1.0, 0.01, 0.0), (0.1, 1.0, 0.01, 0.0)],
            vec![constant_channel(1.2), constant_channel(1.2)],
            1.0,
        );
        let ws = TheoryWorkspace::build(&cfg).unwrap();
        let (stable, rho) = ws.mean_stability();
        assert!(!stable);
        assert_relative_eq!(rho, 1.1664, max_relative = 1e-12);
    }

    #[test]
    fn step_sizes_inside_the_box_imply_stability() {
        // Property: any step size inside every node's interval yields a
        // stable mean cycle map.
        let mut rng = substream(42, 0, 0, 0, Purpose::CovarianceBasis);
        for trial in 0..25u64 {
            let gains = [0.6 + 0.05 * (trial % 10) as f64, 1.1, 0.9];
            let lambdas = [0.5, 1.0, 1.7];
            let probe: Vec<(f64, f64, f64, f64)> = lambdas
                .iter()
                .map(|&l| (1e-6, l, 0.01, 0.0))
                .collect();
            let channels: Vec<ChannelModel> =
                gains.iter().map(|&h| constant_channel(h)).collect();
            let probe_cfg = scalar_network(&probe, channels.clone(), 1.0);
            let probe_ws = TheoryWorkspace::build(&probe_cfg).unwrap();
            let params: Vec<(f64, f64, f64, f64)> = (0..3)
                .map(|k| {
                    let (lo, hi) = probe_ws.mean_step_size_range(k).unwrap();
                    assert!(lo < hi, "interval must be nonempty here");
                    let frac: f64 = 0.05 + 0.9 * rand::Rng::random::<f64>(&mut rng);
                    (lo + frac * (hi - lo), lambdas[k], 0.01, 0.0)
                })
                .collect();
            let ws = TheoryWorkspace::build(&scalar_network(&params, channels, 1.0)).unwrap();
            let (stable, rho) = ws.mean_stability();
            assert!(stable, "trial {trial}: rho = {rho}");
        }
    }

    #[test]
    fn bias_closed_form_matches_fixed_point_iteration() {
        // Two nodes, constant gain 0.9, lambda = 1, mu = 0.1, w_true = 1.
        let cfg = scalar_network(
            &[(0.1, 1.0, 0.01, 0.0), (0.1, 1.0, 0.01, 0.0)],
            vec![constant_channel(0.9), constant_channel(0.9)],
            1.0,
        );
        let ws = TheoryWorkspace::build(&cfg).unwrap();
        let bias = ws.asymptotic_bias().unwrap()[0];

        // Independent oracle: iterate b <- M·b + S·w_true directly.
        let m_cycle = ws.cycle_mean[(0, 0)];
        let drive = ws.mean_forcing[(0, 0)];
        assert_relative_eq!(m_cycle, 0.6561, max_relative = 1e-12);
        assert_relative_eq!(drive, 0.1629, max_relative = 1e-12);
        let mut b = 0.0f64;
        for _ in 0..2000 {
            b = m_cycle * b + drive;
        }
        assert_relative_eq!(bias, b, max_relative = 1e-12);
        // Which is exactly 9/19: the per-node fixed point
        // (1-m)J/(1-mJ) = 0.09/0.19.
        assert_relative_eq!(bias, 9.0 / 19.0, max_relative = 1e-12);
    }

    #[test]
    fn bias_vanishes_for_unit_mean_or_zero_target() {
        let cfg = scalar_network(
            &[(0.1, 1.0, 0.01, 0.0), (0.1, 1.0, 0.01, 0.0)],
            vec![unit_mean_channel(1.2), unit_mean_channel(1.2)],
            1.0,
        );
        let ws = TheoryWorkspace::build(&cfg).unwrap();
        assert_relative_eq!(
            ws.asymptotic_bias().unwrap().norm(),
            0.0,
            epsilon = 1e-15
        );

        let cfg = scalar_network(
            &[(0.1, 1.0, 0.01, 0.0), (0.1, 1.0, 0.01, 0.0)],
            vec![constant_channel(0.9), constant_channel(0.9)],
            0.0,
        );
        let ws = TheoryWorkspace::build(&cfg).unwrap();
        assert_eq!(ws.asymptotic_bias().unwrap()[0], 0.0);
    }

    #[test]
    fn mean_recursion_trajectory() {
        let cfg = scalar_network(
            &[(0.1, 1.0, 0.01, 0.0), (0.1, 1.0, 0.01, 0.0)],
            vec![constant_channel(0.9), constant_channel(0.9)],
            1.0,
        );
        let ws = TheoryWorkspace::build(&cfg).unwrap();
        let start = DVector::from_element(1, 1.0);

        assert_eq!(ws.iterate_mean_recursion(&start, 0), vec![start.clone()]);

        let trajectory = ws.iterate_mean_recursion(&start, 400);
        let bias = ws.asymptotic_bias().unwrap();
        assert_relative_eq!(trajectory.last().unwrap()[0], bias[0], epsilon = 1e-10);

        // Unit mean gains: pure geometric decay at rate rho.
        let cfg = scalar_network(
            &[(0.1, 1.0, 0.01, 0.0), (0.1, 1.0, 0.01, 0.0)],
            vec![ChannelModel::ideal(), ChannelModel::ideal()],
            1.0,
        );
        let ws = TheoryWorkspace::build(&cfg).unwrap();
        let (_, rho) = ws.mean_stability();
        let trajectory = ws.iterate_mean_recursion(&start, 10);
        for step in trajectory.windows(2) {
            assert_relative_eq!(step[1][0] / step[0][0], rho, max_relative = 1e-12);
        }
    }

    #[test]
    fn variance_transition_values() {
        // mu = 0 leaves the identity.
        let cfg = scalar_network(
            &[(0.0, 1.0, 0.01, 0.0), (0.0, 1.0, 0.01, 0.0)],
            vec![ChannelModel::ideal(), ChannelModel::ideal()],
            1.0,
        );
        let ws = TheoryWorkspace::build(&cfg).unwrap();
        assert_eq!(ws.nodes[0].f_bar, DMatrix::identity(1, 1));

        // Scalar: 1 - 0.2 + 0.02 = 0.82.
        let cfg = scalar_network(
            &[(0.1, 1.0, 0.01, 0.0), (0.1, 1.0, 0.01, 0.0)],
            vec![ChannelModel::ideal(), ChannelModel::ideal()],
            1.0,
        );
        let ws = TheoryWorkspace::build(&cfg).unwrap();
        assert_relative_eq!(ws.nodes[0].f_bar[(0, 0)], 0.82, max_relative = 1e-14);

        // Two eigendirections {1, 2} at mu = 0.1: entrywise evaluation of
        // I - 2·mu·Λ + mu²(Λ² + λλᵀ); the result must be symmetric.
        let ru = DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0, 2.0]));
        let profiles = vec![
            NodeProfile::iid(0, 0.1, 0.01, ru.clone(), DMatrix::zeros(2, 2)).unwrap(),
            NodeProfile::iid(1, 0.1, 0.01, ru, DMatrix::zeros(2, 2)).unwrap(),
        ];
        let cfg = NetworkConfig::new(
            DVector::from_row_slice(&[1.0, 1.0]),
            7,
            profiles,
            vec![ChannelModel::ideal(), ChannelModel::ideal()],
        )
        .unwrap();
        let ws = TheoryWorkspace::build(&cfg).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.82, 0.02, 0.02, 0.68]);
        assert_relative_eq!(ws.nodes[0].f_bar, expected, epsilon = 1e-14);
        assert!(linalg::is_symmetric(&ws.nodes[0].f_bar, 1e-14));
    }

    #[test]
    fn ms_margins() {
        // s = 1.3 against rho(F̄) = 0.82: margin 1.066, unstable.
        let cfg = scalar_network(
            &[(0.1, 1.0, 0.01, 0.0), (0.1, 1.0, 0.01, 0.0)],
            vec![unit_mean_channel(1.3), unit_mean_channel(1.3)],
            1.0,
        );
        let ws = TheoryWorkspace::build(&cfg).unwrap();
        let report = ws.stability().unwrap();
        assert_relative_eq!(report.nodes[0].ms_margin, 1.066, max_relative = 1e-12);
        assert!(!report.ms_stable);
        assert!(ws.steady_state().is_err());

        // Margin just below one still counts as stable (strict inequality).
        let s_edge = (1.0 - 1e-9) / 0.82;
        let cfg = scalar_network(
            &[(0.1, 1.0, 0.01, 0.0), (0.1, 1.0, 0.01, 0.0)],
            vec![unit_mean_channel(s_edge), unit_mean_channel(s_edge)],
            1.0,
        );
        let ws = TheoryWorkspace::build(&cfg).unwrap();
        let report = ws.stability().unwrap();
        assert!(report.nodes[0].ms_margin < 1.0);
        assert!(report.ms_stable);

        // Ideal links with a small step size are comfortably stable.
        let cfg = scalar_network(
            &[(0.02, 1.0, 0.01, 0.0), (0.02, 1.0, 0.01, 0.0)],
            vec![ChannelModel::ideal(), ChannelModel::ideal()],
            1.0,
        );
        let report = TheoryWorkspace::build(&cfg).unwrap().stability().unwrap();
        assert!(report.ms_stable && report.mean_stable);
    }

    /// Iterate the per-node mean-coefficient matrix recursion around the
    /// ring until it settles; returns the full-cycle fixed point.
    fn iterated_bias_operator(ws: &TheoryWorkspace) -> DMatrix<f64> {
        let dim = ws.dim;
        let mut c = DMatrix::<f64>::identity(dim, dim);
        for _ in 0..20_000 {
            for node in &ws.nodes {
                c = node.mean_gain * &node.mean_transition * c
                    + (1.0 - node.mean_gain) * &node.mean_transition;
            }
        }
        c
    }

    #[test]
    fn bias_operator_matches_iterated_recursion() {
        let mut rng = substream(99, 0, 0, 0, Purpose::CovarianceBasis);
        for trial in 0..5u64 {
            let gains = [0.85, 1.05, 0.95];
            let profiles: Vec<NodeProfile> = (0..3)
                .map(|k| {
                    let ru = build_covariance(2, 3.0, 1.5 + 0.2 * trial as f64, &mut rng).unwrap();
                    NodeProfile::iid(k, 0.05, 0.01, ru, DMatrix::zeros(2, 2)).unwrap()
                })
                .collect();
            let channels: Vec<ChannelModel> =
                gains.iter().map(|&h| constant_channel(h)).collect();
            let cfg = NetworkConfig::new(
                DVector::from_row_slice(&[0.5, -0.3]),
                7,
                profiles,
                channels,
            )
            .unwrap();
            let ws = TheoryWorkspace::build(&cfg).unwrap();
            let closed = ws.bias_operator().unwrap();
            let iterated = iterated_bias_operator(&ws);
            assert_relative_eq!(closed, iterated, epsilon = 1e-9);

            // And in a node's eigenbasis the transformed map agrees too.
            let local = ws.transformed_bias_map(1).unwrap();
            let u = &ws.nodes[1].basis;
            assert_relative_eq!(local, u.transpose() * iterated * u, epsilon = 1e-9);
        }
    }

    #[test]
    fn bias_operator_zero_for_unit_means() {
        let cfg = scalar_network(
            &[(0.1, 1.0, 0.01, 0.0), (0.1, 1.0, 0.01, 0.0)],
            vec![ChannelModel::ideal(), ChannelModel::ideal()],
            1.0,
        );
        let ws = TheoryWorkspace::build(&cfg).unwrap();
        assert_eq!(ws.bias_operator().unwrap(), DMatrix::zeros(1, 1));
    }

    #[test]
    fn injection_row_scalar_example() {
        // lambda = 1, mu = 0.1, sigma_v2 = 0.01, link-noise 0.001, unit mean
        // gain with s = 1.1, w_true = 0.5: term-by-term this is
        // 1e-4 + 0.001·0.82 + 0.1·0.25·0.82 = 0.02142 (the bias cross term
        // vanishes at m = 1).
        let cfg = scalar_network(
            &[(0.1, 1.0, 0.01, 0.001), (0.1, 1.0, 0.01, 0.001)],
            vec![unit_mean_channel(1.1), unit_mean_channel(1.1)],
            0.5,
        );
        let ws = TheoryWorkspace::build(&cfg).unwrap();
        let g = ws.injection_row(0).unwrap();
        assert_relative_eq!(g[0], 0.02142, max_relative = 1e-12);
    }

    #[test]
    fn injection_row_reduces_to_ideal_form() {
        // m = s = 1 and no link noise: g = mu²·sigma_v²·lambdaᵀ exactly.
        let mut rng = substream(123, 0, 0, 0, Purpose::CovarianceBasis);
        let profiles: Vec<NodeProfile> = (0..2)
            .map(|k| {
                let ru = build_covariance(3, 4.0, 2.0, &mut rng).unwrap();
                NodeProfile::iid(k, 0.07, 0.004, ru, DMatrix::zeros(3, 3)).unwrap()
            })
            .collect();
        let cfg = NetworkConfig::new(
            DVector::from_row_slice(&[0.5, 0.5, 0.5]),
            7,
            profiles,
            vec![ChannelModel::ideal(), ChannelModel::ideal()],
        )
        .unwrap();
        let ws = TheoryWorkspace::build(&cfg).unwrap();
        for k in 0..2 {
            let g = ws.injection_row(k).unwrap();
            let node = &ws.nodes[k];
            let ideal = node.eigenvalues.transpose() * (node.mu * node.mu * node.sigma_v2);
            assert_relative_eq!(g, ideal, max_relative = 1e-14);
        }
    }

    #[test]
    fn weight_transition_products() {
        // Depth 1 with mu = 0 and unit second moments: identity.
        let cfg = scalar_network(
            &[(0.0, 1.0, 0.01, 0.0), (0.0, 1.0, 0.01, 0.0)],
            vec![ChannelModel::ideal(), ChannelModel::ideal()],
            1.0,
        );
        let ws = TheoryWorkspace::build(&cfg).unwrap();
        assert_eq!(ws.weight_transition(0, 1).unwrap(), DMatrix::identity(1, 1));
        assert!(ws.weight_transition(0, 0).is_err());
        assert!(ws.weight_transition(0, 3).is_err());

        // Two nodes, depth 2 at node 1: the single factor s₂·F̄₂.
        let cfg = scalar_network(
            &[(0.1, 1.0, 0.01, 0.0), (0.1, 1.0, 0.01, 0.0)],
            vec![unit_mean_channel(1.05), unit_mean_channel(1.15)],
            1.0,
        );
        let ws = TheoryWorkspace::build(&cfg).unwrap();
        let pi = ws.weight_transition(0, 2).unwrap();
        // Only the included factor's second moment scales the product (the
        // chain of coupled equalities attaches one s per applied F̄).
        assert_relative_eq!(pi[(0, 0)], 1.15 * 0.82, max_relative = 1e-14);
        let full = ws.weight_transition(0, 1).unwrap();
        assert_relative_eq!(
            full[(0, 0)],
            1.05 * 0.82 * 1.15 * 0.82,
            max_relative = 1e-14
        );
    }

    #[test]
    fn weight_transition_ordering_with_noncommuting_factors() {
        let mut rng = substream(321, 0, 0, 0, Purpose::CovarianceBasis);
        let profiles: Vec<NodeProfile> = (0..3)
            .map(|k| {
                let ru = build_covariance(2, 4.0, 1.0 + k as f64, &mut rng).unwrap();
                NodeProfile::iid(k, 0.08, 0.01, ru, DMatrix::zeros(2, 2)).unwrap()
            })
            .collect();
        let channels = vec![
            unit_mean_channel(1.1),
            unit_mean_channel(1.2),
            unit_mean_channel(1.05),
        ];
        let cfg = NetworkConfig::new(
            DVector::from_row_slice(&[0.5, 0.5]),
            7,
            profiles,
            channels,
        )
        .unwrap();
        let ws = TheoryWorkspace::build(&cfg).unwrap();
        let t = |k: usize| ws.nodes[k].second_moment * &ws.nodes[k].f_bar;

        // Node 1 (0-based 0), depth 2 over three nodes: factors for nodes
        // 2 then 3, in that order.
        let expected = t(1) * t(2);
        assert_relative_eq!(ws.weight_transition(0, 2).unwrap(), expected, epsilon = 1e-13);
        // Node 2 (0-based 1), full depth: factors 2, 3, 1.
        let expected = t(1) * t(2) * t(0);
        assert_relative_eq!(ws.weight_transition(1, 1).unwrap(), expected, epsilon = 1e-13);
    }

    #[test]
    fn injection_sum_two_node_expansion() {
        let cfg = scalar_network(
            &[(0.1, 1.0, 0.01, 0.0), (0.1, 1.0, 0.01, 0.0)],
            vec![ChannelModel::ideal(), ChannelModel::ideal()],
            1.0,
        );
        let ws = TheoryWorkspace::build(&cfg).unwrap();
        let a = ws.injection_sum(0).unwrap();
        let g0 = ws.injection_row(0).unwrap();
        let g1 = ws.injection_row(1).unwrap();
        let pi = ws.weight_transition(0, 2).unwrap();
        let manual = g0 * pi + g1;
        assert_relative_eq!(a, manual, max_relative = 1e-14);
        // Numerically: g = 1e-4 each, Π = 0.82, so a = 1.82e-4.
        assert_relative_eq!(a[0], 1.82e-4, max_relative = 1e-12);
    }

    #[test]
    fn steady_state_two_node_ideal_values() {
        let cfg = scalar_network(
            &[(0.1, 1.0, 0.01, 0.0), (0.1, 1.0, 0.01, 0.0)],
            vec![ChannelModel::ideal(), ChannelModel::ideal()],
            1.0,
        );
        let ws = TheoryWorkspace::build(&cfg).unwrap();
        let prediction = ws.steady_state().unwrap();
        // a/(1 - Π₁) = 1.82e-4/0.3276 = 1/1800 exactly.
        for node in &prediction.nodes {
            assert_relative_eq!(node.eta, 1.0 / 1800.0, max_relative = 1e-12);
            assert_relative_eq!(node.zeta, 1.0 / 1800.0, max_relative = 1e-12);
            assert_relative_eq!(node.xi, 1.0 / 1800.0 + 0.01, max_relative = 1e-12);
        }
        assert_eq!(prediction.bias_norm, 0.0);
        assert!(prediction.condition_warnings.is_empty());
    }

    #[test]
    fn steady_state_refuses_zero_step_size() {
        // mu = 0: the full-cycle weight transition is the identity and no
        // steady state exists.
        let cfg = scalar_network(
            &[(0.0, 1.0, 0.01, 0.0), (0.0, 1.0, 0.01, 0.0)],
            vec![ChannelModel::ideal(), ChannelModel::ideal()],
            1.0,
        );
        let ws = TheoryWorkspace::build(&cfg).unwrap();
        match ws.steady_state() {
            Err(IlmsError::Instability(_)) => {}
            other => panic!("expected an instability error, got {other:?}"),
        }
    }

    #[test]
    fn steady_state_flags_near_singular_systems() {
        // Mean-square margin a hair below 1: the prediction is still
        // evaluated, but it carries a condition warning. The profile must be
        // multi-dimensional for the warning to be reachable at all — a 1x1
        // system always has condition number 1. With identity covariance and
        // mu = 0.1 the variance transition is [[0.82, 0.01], [0.01, 0.82]]
        // with spectral radius 0.83; one ring direction is pushed within
        // 1e-14 of the unit circle while the other stays well damped, which
        // is what makes `I - pi` ill-conditioned.
        let ru = DMatrix::identity(2, 2);
        let profiles = vec![
            NodeProfile::iid(0, 0.1, 0.01, ru.clone(), DMatrix::zeros(2, 2)).unwrap(),
            NodeProfile::iid(1, 0.1, 0.01, ru, DMatrix::zeros(2, 2)).unwrap(),
        ];
        let s_edge = (1.0 - 1e-14) / 0.83;
        let cfg = NetworkConfig::new(
            DVector::zeros(2),
            7,
            profiles,
            vec![unit_mean_channel(s_edge), unit_mean_channel(s_edge)],
        )
        .unwrap();
        let ws = TheoryWorkspace::build(&cfg).unwrap();
        let prediction = ws.steady_state().unwrap();
        assert!(!prediction.condition_warnings.is_empty());
        for node in &prediction.nodes {
            assert!(node.eta.is_finite() && node.eta > 0.0);
        }
    }

    #[test]
    fn predictions_positive_and_mse_identity_exact() {
        let mut rng = substream(555, 0, 0, 0, Purpose::CovarianceBasis);
        for trial in 0..5u64 {
            // The step size is large enough that the damping 2·mu·lambda
            // leaves room for gain second moments slightly above 1.
            let profiles: Vec<NodeProfile> = (0..3)
                .map(|k| {
                    let ru = build_covariance(2, 4.0, 1.0 + 0.3 * trial as f64, &mut rng).unwrap();
                    NodeProfile::iid(
                        k,
                        0.2,
                        0.002 + 0.001 * k as f64,
                        ru,
                        DMatrix::identity(2, 2) * 2e-4,
                    )
                    .unwrap()
                })
                .collect();
            let (sigma_r, _) = crate::model::rayleigh_from_mean(0.9).unwrap();
            let channels = vec![
                ChannelModel::new(ChannelLaw::Rayleigh { sigma_r }, 0.0).unwrap(),
                unit_mean_channel(1.05),
                constant_channel(0.95),
            ];
            let cfg = NetworkConfig::new(
                DVector::from_row_slice(&[0.5, -0.5]),
                7,
                profiles,
                channels,
            )
            .unwrap();
            let ws = TheoryWorkspace::build(&cfg).unwrap();
            let prediction = ws.steady_state().unwrap();
            for (node, profile) in prediction.nodes.iter().zip(&cfg.profiles) {
                assert!(node.eta > 0.0 && node.zeta > 0.0 && node.xi > 0.0);
                assert_eq!(node.xi, node.zeta + profile.sigma_v2);
            }
        }
    }

    #[test]
    fn eigenbasis_round_trip() {
        let mut rng = substream(777, 0, 0, 0, Purpose::CovarianceBasis);
        let profiles: Vec<NodeProfile> = (0..2)
            .map(|k| {
                let ru = build_covariance(4, 4.0, 2.0, &mut rng).unwrap();
                NodeProfile::iid(k, 0.02, 0.01, ru, DMatrix::zeros(4, 4)).unwrap()
            })
            .collect();
        let cfg = NetworkConfig::new(
            DVector::from_element(4, 0.5),
            7,
            profiles,
            vec![ChannelModel::ideal(), ChannelModel::ideal()],
        )
        .unwrap();
        let ws = TheoryWorkspace::build(&cfg).unwrap();
        for (node, profile) in ws.nodes.iter().zip(&cfg.profiles) {
            let rebuilt = &node.basis
                * DMatrix::from_diagonal(&node.eigenvalues)
                * node.basis.transpose();
            assert_relative_eq!(rebuilt, profile.ru, epsilon = 1e-10);
            let gram = node.basis.transpose() * &node.basis;
            assert_relative_eq!(gram, DMatrix::identity(4, 4), epsilon = 1e-10);
        }
    }

    #[test]
    fn scalar_fixed_point_matches_closed_form() {
        // The two-node ideal example first.
        let cfg = scalar_network(
            &[(0.1, 1.0, 0.01, 0.0), (0.1, 1.0, 0.01, 0.0)],
            vec![ChannelModel::ideal(), ChannelModel::ideal()],
            1.0,
        );
        let oracle = scalar_fixed_point(&cfg).unwrap();
        assert_relative_eq!(oracle[0].eta, 1.0 / 1800.0, max_relative = 1e-9);

        // Noiseless, distortion-free ring settles at zero error.
        let cfg = scalar_network(
            &[(0.1, 1.0, 0.0, 0.0), (0.1, 1.0, 0.0, 0.0)],
            vec![ChannelModel::ideal(), ChannelModel::ideal()],
            1.0,
        );
        let oracle = scalar_fixed_point(&cfg).unwrap();
        assert!(oracle[0].eta.abs() < 1e-250);

        // A fading, heterogeneous-gain config (homogeneous nodes): oracle vs
        // closed form.
        let cfg = scalar_network(
            &[
                (0.05, 1.3, 0.004, 2e-4),
                (0.05, 1.3, 0.004, 2e-4),
                (0.05, 1.3, 0.004, 2e-4),
            ],
            vec![
                constant_channel(0.9),
                constant_channel(0.9),
                constant_channel(0.9),
            ],
            0.5,
        );
        let oracle = scalar_fixed_point(&cfg).unwrap();
        let prediction = TheoryWorkspace::build(&cfg).unwrap().steady_state().unwrap();
        for (o, p) in oracle.iter().zip(&prediction.nodes) {
            assert_relative_eq!(o.eta, p.eta, max_relative = 1e-9);
            assert_relative_eq!(o.zeta, p.zeta, max_relative = 1e-9);
            assert_relative_eq!(o.xi, p.xi, max_relative = 1e-9);
        }

        // Fully heterogeneous ring at unit mean gains: every node differs, so
        // any off-by-one in ring indexing would separate the two engines.
        let cfg = scalar_network(
            &[
                (0.04, 1.0, 0.003, 1e-4),
                (0.07, 1.4, 0.006, 3e-4),
                (0.02, 0.8, 0.009, 2e-4),
                (0.05, 1.1, 0.002, 5e-4),
            ],
            vec![
                unit_mean_channel(1.05),
                unit_mean_channel(1.15),
                unit_mean_channel(1.0),
                unit_mean_channel(1.08),
            ],
            0.7,
        );
        let oracle = scalar_fixed_point(&cfg).unwrap();
        let prediction = TheoryWorkspace::build(&cfg).unwrap().steady_state().unwrap();
        let mut distinct = std::collections::BTreeSet::new();
        for (o, p) in oracle.iter().zip(&prediction.nodes) {
            assert_relative_eq!(o.eta, p.eta, max_relative = 1e-9);
            assert_relative_eq!(o.zeta, p.zeta, max_relative = 1e-9);
            distinct.insert(format!("{:.15e}", o.eta));
        }
        // The per-node values really are distinct (the check has teeth).
        assert_eq!(distinct.len(), 4);
    }

    #[test]
    fn scalar_fixed_point_guards() {
        let cfg = scalar_network(
            &[(0.1, 1.0, 0.01, 0.0), (0.1, 1.0, 0.01, 0.0)],
            vec![unit_mean_channel(1.3), unit_mean_channel(1.3)],
            1.0,
        );
        assert!(matches!(
            scalar_fixed_point(&cfg),
            Err(IlmsError::Instability(_))
        ));

        let ru = DMatrix::identity(2, 2);
        let profiles = vec![
            NodeProfile::iid(0, 0.1, 0.01, ru.clone(), DMatrix::zeros(2, 2)).unwrap(),
            NodeProfile::iid(1, 0.1, 0.01, ru, DMatrix::zeros(2, 2)).unwrap(),
        ];
        let cfg = NetworkConfig::new(
            DVector::from_element(2, 0.5),
            7,
            profiles,
            vec![ChannelModel::ideal(), ChannelModel::ideal()],
        )
        .unwrap();
        assert!(matches!(
            scalar_fixed_point(&cfg),
            Err(IlmsError::Config(_))
        ));
    }

    #[test]
    fn approximation_reduces_and_tracks_exact_form() {
        // s = 1, no link noise: the ideal-link small-step form.
        let inputs = SimplifiedAssumptions {
            n_nodes: 4,
            lambda: 1.0,
            mu: 0.01,
            s: vec![1.0; 4],
            sigma_v2: vec![0.005; 4],
            sigma_c2: vec![0.0; 4],
            w_norm2: 1.0,
        };
        let approx = approx_prediction(&inputs).unwrap();
        let g_hat = 0.01f64 * 0.01 * 0.005;
        let c: f64 = 1.0 - 2.0 * 0.01;
        let expect = (1.0 / (1.0 - c.powi(4)) - 1.0) * 4.0 * g_hat + g_hat;
        assert_relative_eq!(approx[0].eta, expect, max_relative = 1e-12);

        // Under the simplifying assumptions with a small step size the
        // approximation tracks the exact prediction within 10%. The gain
        // second moment must stay within the mean-square margin, which for
        // small steps means s below roughly 1 + 2·mu·lambda.
        let n = 4usize;
        let (lambda, mu, sigma_v2, sigma_c2, s) = (1.0, 0.005, 0.004, 2e-4, 1.002);
        let params: Vec<(f64, f64, f64, f64)> =
            (0..n).map(|_| (mu, lambda, sigma_v2, sigma_c2)).collect();
        let channels: Vec<ChannelModel> = (0..n).map(|_| unit_mean_channel(s)).collect();
        let cfg = scalar_network(&params, channels, 0.5);
        let exact = TheoryWorkspace::build(&cfg).unwrap().steady_state().unwrap();
        let approx = approx_prediction(&SimplifiedAssumptions {
            n_nodes: n,
            lambda,
            mu,
            s: vec![s; n],
            sigma_v2: vec![sigma_v2; n],
            sigma_c2: vec![sigma_c2; n],
            w_norm2: 0.25,
        })
        .unwrap();
        for (a, e) in approx.iter().zip(&exact.nodes) {
            assert_relative_eq!(a.zeta, e.zeta, max_relative = 0.10);
            assert_relative_eq!(a.eta, e.eta, max_relative = 0.10);
        }
    }

    #[test]
    fn approximation_monotone_in_gain_second_moment() {
        let base = SimplifiedAssumptions {
            n_nodes: 5,
            lambda: 1.0,
            mu: 0.02,
            s: vec![1.0; 5],
            sigma_v2: vec![0.005; 5],
            sigma_c2: vec![2e-4; 5],
            w_norm2: 1.0,
        };
        let mut previous = approx_prediction(&base).unwrap();
        for step in 1..=5 {
            let mut inputs = base.clone();
            // Raise one link's second moment and leave the rest alone.
            inputs.s[2] = 1.0 + 0.01 * step as f64;
            let current = approx_prediction(&inputs).unwrap();
            for (now, before) in current.iter().zip(&previous) {
                assert!(now.eta >= before.eta - 1e-15);
                assert!(now.zeta >= before.zeta - 1e-15);
                assert!(now.xi >= before.xi - 1e-15);
            }
            previous = current;
        }
    }

    #[test]
    fn approximation_domain_errors() {
        let mut inputs = SimplifiedAssumptions {
            n_nodes: 3,
            lambda: 1.0,
            mu: 0.02,
            s: vec![1.5; 3],
            sigma_v2: vec![0.005; 3],
            sigma_c2: vec![2e-4; 3],
            w_norm2: 1.0,
        };
        // s_p·(1-2·mu·lambda)^N = 1.5³·0.96³ > 1.
        assert!(matches!(
            approx_prediction(&inputs),
            Err(IlmsError::ApproximationDomain(_))
        ));
        inputs.s = vec![1.0; 3];
        inputs.mu = 0.6;
        assert!(matches!(
            approx_prediction(&inputs),
            Err(IlmsError::ApproximationDomain(_))
        ));
        inputs.mu = 0.02;
        inputs.s = vec![0.9; 3];
        assert!(matches!(
            approx_prediction(&inputs),
            Err(IlmsError::ApproximationDomain(_))
        ));
    }
}
