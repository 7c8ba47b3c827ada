//! Closed-form power control for one sharing pattern: V2I link `m` on RB `f`
//! together with every V2V link of one cluster.
//!
//! The V2V outage constraint `Pr{SINR_k <= gamma0} <= p0` under Rayleigh
//! fading is replaced by the deterministic requirement that the large-scale
//! SINR of every V2V link reach `gamma_bar = gamma0 / -ln(1 - p0)`. Stacking
//! those requirements gives `Phi * P_d >= gamma_bar (P_c alpha_m + sigma2)`
//! with `Phi[i][i] = alpha_i` and `Phi[i][j] = -gamma_bar alpha_{j,i}`.
//! At the optimum every row holds with equality and the V2I power is the
//! largest value for which no V2V power exceeds its cap.

use crate::channel::ChannelState;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::real::{db_to_linear, dbm_to_mw, Real};
use crate::scenario::ScenarioConfig;

/// `gamma0 / -ln(1 - p0)`, with `gamma0` in linear units.
pub fn effective_threshold<T: Real>(gamma0: T, p0: T) -> Result<T> {
    if !(gamma0 > T::zero() && gamma0.is_finite() && p0 > T::zero() && p0 < T::one()) {
        return Err(Error::BadThreshold { gamma0: gamma0.to_f64_lossy(), p0: p0.to_f64_lossy() });
    }
    Ok(gamma0 / -(-p0).ln_1p())
}

/// Scenario-wide constants shared by every power problem of a drop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerParams<T> {
    /// SINR target in linear units.
    pub gamma0: T,
    /// Effective target `gamma_bar` the large-scale SINR must reach.
    pub gamma_bar: T,
    pub pmax_c: T,
    pub pmax_d: T,
}

impl<T: Real> PowerParams<T> {
    pub fn from_config(config: &ScenarioConfig) -> Result<Self> {
        let gamma0 = db_to_linear(T::lit(config.gamma0_db));
        Ok(PowerParams {
            gamma0,
            gamma_bar: effective_threshold(gamma0, T::lit(config.p0))?,
            pmax_c: dbm_to_mw(T::lit(config.pmax_c_dbm)),
            pmax_d: dbm_to_mw(T::lit(config.pmax_d_dbm)),
        })
    }
}

/// Inputs of one sharing pattern, with V2V quantities indexed by position in
/// `cluster`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerProblem<T> {
    pub m: usize,
    pub f: usize,
    /// Global V2V link ids of the cluster.
    pub cluster: Vec<usize>,
    /// Gain from the V2I transmitter to each V2V receiver.
    pub alpha_m: Vec<T>,
    /// Direct gain of each V2V link.
    pub alpha_diag: Vec<T>,
    /// `alpha_cross[j][i]`: gain from V2V transmitter `j` to receiver `i`.
    pub alpha_cross: Vec<Vec<T>>,
    pub g_mb: T,
    pub g_kb: Vec<T>,
    pub sigma2_bs: T,
    pub sigma2_veh: T,
    pub gamma_bar: T,
    pub pmax_c: T,
    pub pmax_d: T,
}

impl<T: Real> PowerProblem<T> {
    /// Extracts the pattern `(m, f, cluster)` from a drop. BS-side gains use
    /// the current fading realization, mobile links their large-scale value.
    pub fn from_channel(cs: &ChannelState<T>, m: usize, f: usize, cluster: &[usize], params: &PowerParams<T>) -> Self {
        assert!(!cluster.is_empty(), "cluster must be non-empty");
        PowerProblem {
            m,
            f,
            cluster: cluster.to_vec(),
            alpha_m: cluster.iter().map(|&k| cs.alpha_mk[m][k]).collect(),
            alpha_diag: cluster.iter().map(|&k| cs.alpha_k[k]).collect(),
            alpha_cross: cluster.iter().map(|&j| cluster.iter().map(|&i| cs.alpha_kk[j][i]).collect()).collect(),
            g_mb: cs.g_mb[m][f],
            g_kb: cluster.iter().map(|&k| cs.g_kb[k][f]).collect(),
            sigma2_bs: cs.sigma2_bs,
            sigma2_veh: cs.sigma2_veh,
            gamma_bar: params.gamma_bar,
            pmax_c: params.pmax_c,
            pmax_d: params.pmax_d,
        }
    }

    pub fn size(&self) -> usize {
        self.alpha_diag.len()
    }

    /// V2I capacity in bit/s/Hz for the given powers.
    pub fn capacity(&self, p_c: T, p_d: &[T]) -> T {
        let interference: T = p_d.iter().zip(&self.g_kb).map(|(&p, &g)| p * g).sum();
        (T::one() + p_c * self.g_mb / (self.sigma2_bs + interference)).log2()
    }

    /// Large-scale SINR of each V2V link (left side of the reliability constraint).
    pub fn v2v_sinr(&self, p_c: T, p_d: &[T]) -> Vec<T> {
        let s = self.size();
        (0..s)
            .map(|i| {
                let cross: T = (0..s).filter(|&j| j != i).map(|j| p_d[j] * self.alpha_cross[j][i]).sum();
                p_d[i] * self.alpha_diag[i] / (self.sigma2_veh + p_c * self.alpha_m[i] + cross)
            })
            .collect()
    }
}

pub fn build_phi<T: Real>(problem: &PowerProblem<T>) -> DenseMatrix<T> {
    let s = problem.size();
    let mut phi = DenseMatrix::zeros(s, s);
    for i in 0..s {
        for j in 0..s {
            phi[(i, j)] = if i == j { problem.alpha_diag[i] } else { -problem.gamma_bar * problem.alpha_cross[j][i] };
        }
    }
    phi
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation<T> {
    pub p_c: T,
    /// V2V powers in cluster order.
    pub p_d: Vec<T>,
    /// V2I capacity in bit/s/Hz.
    pub capacity: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Infeasibility {
    /// `Phi` is numerically singular.
    SingularMatrix,
    /// The V2I power from the cap analysis is negative.
    NegativeV2iPower,
    /// Some V2V power is negative: the SINR targets cannot be met jointly.
    NegativeV2vPower,
    NonFinite,
}

/// Outcome of one pattern. An infeasible pattern has capacity "minus
/// infinity" and is never matched.
#[derive(Debug, Clone, PartialEq)]
pub enum PowerSolution<T> {
    Feasible(PowerAllocation<T>),
    Infeasible(Infeasibility),
}

impl<T: Real> PowerSolution<T> {
    pub fn is_feasible(&self) -> bool {
        matches!(self, PowerSolution::Feasible(_))
    }

    pub fn capacity(&self) -> Option<T> {
        self.allocation().map(|a| a.capacity)
    }

    pub fn allocation(&self) -> Option<&PowerAllocation<T>> {
        match self {
            PowerSolution::Feasible(a) => Some(a),
            PowerSolution::Infeasible(_) => None,
        }
    }
}

pub fn optimal_powers<T: Real>(problem: &PowerProblem<T>) -> PowerSolution<T> {
    use PowerSolution::Infeasible;

    let s = problem.size();
    let phi = build_phi(problem);
    let Some(inv) = phi.inverse() else {
        return Infeasible(Infeasibility::SingularMatrix);
    };
    let gb = problem.gamma_bar;
    let sigma2 = problem.sigma2_veh;

    let mut p_c = problem.pmax_c;
    for i in 0..s {
        let row = inv.row(i);
        let row_ones: T = row.iter().copied().sum();
        let row_alpha: T = row.iter().zip(&problem.alpha_m).map(|(&a, &b)| a * b).sum();
        let candidate = (problem.pmax_d - gb * sigma2 * row_ones) / (gb * row_alpha);
        if candidate.is_nan() {
            return Infeasible(Infeasibility::NonFinite);
        }
        if candidate < p_c {
            p_c = candidate;
        }
    }
    if p_c < T::zero() {
        return Infeasible(Infeasibility::NegativeV2iPower);
    }

    let rhs: Vec<T> = problem.alpha_m.iter().map(|&a| gb * (p_c * a + sigma2)).collect();
    let mut p_d = inv.mul_vec(&rhs);
    // one step of iterative refinement keeps the SINR rows tight to ~1e-15
    let resid: Vec<T> = phi.mul_vec(&p_d).iter().zip(&rhs).map(|(&lhs, &r)| r - lhs).collect();
    for (p, c) in p_d.iter_mut().zip(inv.mul_vec(&resid)) {
        *p += c;
    }
    if p_d.iter().any(|p| !p.is_finite()) || !p_c.is_finite() {
        return Infeasible(Infeasibility::NonFinite);
    }
    if p_d.iter().any(|&p| p < T::zero()) {
        return Infeasible(Infeasibility::NegativeV2vPower);
    }
    for p in p_d.iter_mut() {
        *p = p.min(problem.pmax_d);
    }
    let capacity = problem.capacity(p_c, &p_d);
    PowerSolution::Feasible(PowerAllocation { p_c, p_d, capacity })
}

/// Largest relative deviation of a V2V large-scale SINR from `gamma_bar`.
pub fn verify_tightness<T: Real>(problem: &PowerProblem<T>, solution: &PowerAllocation<T>) -> T {
    problem
        .v2v_sinr(solution.p_c, &solution.p_d)
        .into_iter()
        .map(|sinr| (sinr / problem.gamma_bar - T::one()).abs())
        .fold(T::zero(), T::max)
}
