//! Closed-form safety filters: classical CBF-QP, perception-gated QP,
//! smooth penalty (single and multi obstacle), plus the Sherman-Morrison
//! utility and the barrier-rate diagnostic.

use serde::{Deserialize, Serialize};

use crate::error::FilterError;
use crate::linalg;
use crate::model::{sigma_eval, LieData, A_TOL};
use crate::scalar::Scalar;
use crate::scalarfuncs::{
    classk_eval, gate_eval, penalty_blend, psi_eval, ClassK, GateParams, PenaltyParams,
};

/// Symmetric positive-definite weighting matrix with its cached inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    mat: Vec<Vec<f64>>,
    inv: Vec<Vec<f64>>,
}

impl WeightMatrix {
    pub fn new(mat: Vec<Vec<f64>>) -> Result<Self, FilterError> {
        let m = mat.len();
        let invalid = || FilterError::InvalidParams {
            name: "WeightMatrix",
            constraint: "requires a square symmetric positive-definite matrix",
        };
        if m == 0 || mat.iter().any(|r| r.len() != m) {
            return Err(invalid());
        }
        let scale = mat
            .iter()
            .flatten()
            .fold(1.0f64, |acc, &v| acc.max(v.abs()));
        for i in 0..m {
            for j in 0..m {
                if !mat[i][j].is_finite() || (mat[i][j] - mat[j][i]).abs() > 1e-12 * scale {
                    return Err(invalid());
                }
            }
        }
        let inv = linalg::invert_spd(&mat).map_err(|_| invalid())?;
        // cached inverse must reproduce the identity
        let prod = linalg::mat_mul_f64(&mat, &inv);
        for i in 0..m {
            for j in 0..m {
                let want = if i == j { 1.0 } else { 0.0 };
                if (prod[i][j] - want).abs() > 1e-10 {
                    return Err(invalid());
                }
            }
        }
        Ok(WeightMatrix { mat, inv })
    }

    pub fn identity(m: usize) -> Self {
        WeightMatrix { mat: linalg::identity(m), inv: linalg::identity(m) }
    }

    pub fn diag(d: &[f64]) -> Result<Self, FilterError> {
        let m = d.len();
        let mut mat = vec![vec![0.0; m]; m];
        for i in 0..m {
            mat[i][i] = d[i];
        }
        WeightMatrix::new(mat)
    }

    pub fn dim(&self) -> usize {
        self.mat.len()
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.mat
    }

    pub fn inverse(&self) -> &[Vec<f64>] {
        &self.inv
    }
}

/// Which closed-form filter to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FilterKind {
    #[serde(rename = "ClassicalQP", alias = "ClassicalQp")]
    ClassicalQp,
    #[serde(rename = "GatedQP", alias = "GatedQp")]
    GatedQp,
    Penalty,
    StabilizedPenalty,
}

impl FilterKind {
    pub fn is_smooth(self) -> bool {
        matches!(self, FilterKind::Penalty | FilterKind::StabilizedPenalty)
    }

    pub fn name(self) -> &'static str {
        match self {
            FilterKind::ClassicalQp => "ClassicalQP",
            FilterKind::GatedQp => "GatedQP",
            FilterKind::Penalty => "Penalty",
            FilterKind::StabilizedPenalty => "StabilizedPenalty",
        }
    }
}

impl std::str::FromStr for FilterKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ClassicalQP" | "ClassicalQp" => Ok(FilterKind::ClassicalQp),
            "GatedQP" | "GatedQp" => Ok(FilterKind::GatedQp),
            "Penalty" => Ok(FilterKind::Penalty),
            "StabilizedPenalty" => Ok(FilterKind::StabilizedPenalty),
            other => Err(format!("unknown filter kind `{other}`")),
        }
    }
}

/// Immutable bundle of everything a filter evaluation needs besides the
/// state-derived data.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    pub kind: FilterKind,
    pub weight: WeightMatrix,
    pub gate: GateParams,
    pub classk: ClassK,
    pub penalty: PenaltyParams,
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), FilterError> {
        self.gate.validate()?;
        self.classk.validate()?;
        self.penalty.validate()
    }
}

/// Filtered control with diagnostics. `u_star = u0 + correction` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutput<T> {
    pub u_star: Vec<T>,
    pub h: T,
    pub sigma: T,
    /// Gate value for the QP kinds, penalty weight for the penalty kinds.
    pub gate_or_psi: T,
    pub correction: Vec<T>,
    pub constraint_active: bool,
}

impl<T: Scalar> FilterOutput<T> {
    fn assemble(u0: &[T], correction: Vec<T>, h: T, sigma: T, gate_or_psi: T) -> Self {
        let u_star = linalg::add(u0, &correction);
        let constraint_active = linalg::norm(&correction).primal() > 0.0;
        FilterOutput { u_star, h, sigma, gate_or_psi, correction, constraint_active }
    }
}

fn check_a_row<T: Scalar>(a_row: &[T]) -> Result<(), FilterError> {
    let n = linalg::norm(a_row).primal();
    if n < A_TOL {
        return Err(FilterError::RelativeDegreeViolation { norm: n });
    }
    Ok(())
}

/// Quadratic form `a W^-1 a^T` (the `||a||_{W^-1}` of the closed forms).
pub fn wnorm<T: Scalar>(a_row: &[T], w: &WeightMatrix) -> Result<T, FilterError> {
    check_a_row(a_row)?;
    let wa = linalg::mat_vec_f64(w.inverse(), a_row);
    Ok(linalg::dot(a_row, &wa))
}

/// `nu = W^-1 a^T`; satisfies `a . nu = wnorm(a, W)` exactly.
pub fn nu<T: Scalar>(a_row: &[T], w: &WeightMatrix) -> Result<Vec<T>, FilterError> {
    check_a_row(a_row)?;
    Ok(linalg::mat_vec_f64(w.inverse(), a_row))
}

/// Gated CBF-QP closed form: nominal when `gamma(h) sigma >= 0`, otherwise
/// the minimal correction `-(sigma / wnorm) nu`. `ClassicalQP` is the
/// `gamma = 1` specialization.
pub fn gated_filter<T: Scalar>(
    cfg: &FilterConfig,
    lie: &LieData<T>,
    h: T,
    u0: &[T],
) -> Result<FilterOutput<T>, FilterError> {
    let gamma = match cfg.kind {
        FilterKind::ClassicalQp => T::one(),
        _ => gate_eval(h, &cfg.gate),
    };
    let sigma = sigma_eval(lie, u0, classk_eval(h, &cfg.classk));
    let m = u0.len();
    let active = gamma.primal() * sigma.primal() < 0.0;
    let correction = if active {
        let wn = wnorm(&lie.a_row, &cfg.weight)?;
        let dir = nu(&lie.a_row, &cfg.weight)?;
        linalg::scale(&dir, -sigma / wn)
    } else {
        check_a_row(&lie.a_row)?;
        vec![T::zero(); m]
    };
    Ok(FilterOutput::assemble(u0, correction, h, sigma, gamma))
}

/// Smooth penalty filter: `u0 - psi sigma / (1 + psi wnorm) nu`, with the
/// penalty weight frozen at the nominal `sigma(x, u0)`.
pub fn penalty_filter<T: Scalar>(
    cfg: &FilterConfig,
    lie: &LieData<T>,
    h: T,
    u0: &[T],
) -> Result<FilterOutput<T>, FilterError> {
    let sigma = sigma_eval(lie, u0, classk_eval(h, &cfg.classk));
    let wn = wnorm(&lie.a_row, &cfg.weight)?;
    let (th, ts) = cfg.penalty.transitions();
    let psi = psi_eval(h, sigma, wn, &cfg.penalty, &th, &ts);
    let dir = nu(&lie.a_row, &cfg.weight)?;
    let coef = psi * sigma / (T::one() + psi * wn);
    let correction = linalg::scale(&dir, -coef);
    Ok(FilterOutput::assemble(u0, correction, h, sigma, psi))
}

/// Stabilized form of the penalty filter: the same law written directly in
/// terms of the blend `phi_delta(h) phi_mu(sigma)`, avoiding the large
/// intermediate penalty weight.
pub fn stabilized_penalty_filter<T: Scalar>(
    cfg: &FilterConfig,
    lie: &LieData<T>,
    h: T,
    u0: &[T],
) -> Result<FilterOutput<T>, FilterError> {
    let sigma = sigma_eval(lie, u0, classk_eval(h, &cfg.classk));
    let wn = wnorm(&lie.a_row, &cfg.weight)?;
    let (th, ts) = cfg.penalty.transitions();
    let blend = penalty_blend(h, sigma, &th, &ts);
    let dir = nu(&lie.a_row, &cfg.weight)?;
    let correction = linalg::scale(&dir, -blend * sigma / wn);
    Ok(FilterOutput::assemble(u0, correction, h, sigma, blend))
}

/// Multi-obstacle penalty filter: stationarity of the summed-penalty
/// objective with frozen weights, solved as the SPD system
/// `(W + sum psi_i a_i^T a_i) u = W u0 - sum psi_i (c_i + alpha_i) a_i^T`.
pub fn multi_penalty_filter<T: Scalar>(
    cfg: &FilterConfig,
    lies: &[LieData<T>],
    hs: &[T],
    u0: &[T],
) -> Result<FilterOutput<T>, FilterError> {
    assert!(!lies.is_empty() && lies.len() == hs.len());
    let m = u0.len();
    let (th, ts) = cfg.penalty.transitions();

    let mut mat: Vec<Vec<T>> = cfg
        .weight
        .matrix()
        .iter()
        .map(|row| row.iter().map(|&v| T::from_f64(v)).collect())
        .collect();
    let mut rhs = linalg::mat_vec_f64(cfg.weight.matrix(), u0);

    // diagnostics from the nearest obstacle
    let mut worst = 0usize;
    let mut sigma_w = T::zero();
    let mut psi_w = T::zero();
    let mut any_active = false;

    for (i, (lie, &h)) in lies.iter().zip(hs).enumerate() {
        let alpha_h = classk_eval(h, &cfg.classk);
        let sigma = sigma_eval(lie, u0, alpha_h);
        let wn = wnorm(&lie.a_row, &cfg.weight)?;
        let psi = psi_eval(h, sigma, wn, &cfg.penalty, &th, &ts);
        if psi.primal() > 0.0 {
            any_active = true;
        }
        for r in 0..m {
            for c in 0..m {
                mat[r][c] = mat[r][c] + psi * lie.a_row[r] * lie.a_row[c];
            }
            rhs[r] = rhs[r] - psi * (lie.c_val + alpha_h) * lie.a_row[r];
        }
        if i == 0 || h.primal() < hs[worst].primal() {
            worst = i;
            sigma_w = sigma;
            psi_w = psi;
        }
    }

    // all penalties off: the stationary point is the nominal control, exactly
    let correction = if any_active {
        let u_star = linalg::solve_spd(&mat, &rhs)?;
        linalg::sub(&u_star, u0)
    } else {
        vec![T::zero(); m]
    };
    Ok(FilterOutput::assemble(u0, correction, hs[worst], sigma_w, psi_w))
}

/// `(W + psi a^T a)^-1` by the rank-one update formula.
pub fn sherman_morrison_inverse(
    w: &WeightMatrix,
    psi: f64,
    a_row: &[f64],
) -> Vec<Vec<f64>> {
    let m = w.dim();
    let wa = linalg::mat_vec_f64(w.inverse(), a_row);
    let denom = 1.0 + psi * linalg::dot(a_row, &wa);
    let mut out = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            out[i][j] = w.inverse()[i][j] - psi * wa[i] * wa[j] / denom;
        }
    }
    out
}

/// Barrier rate under the filtered control: `c + a . u_star`.
pub fn hdot_under_filter<T: Scalar>(lie: &LieData<T>, u_star: &[T]) -> T {
    lie.c_val + linalg::dot(&lie.a_row, u_star)
}
