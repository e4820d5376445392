//! Control-affine systems, circular-obstacle barriers, Lie derivatives and
//! the nominal proportional law.

use serde::{Deserialize, Serialize};

use crate::error::FilterError;
use crate::linalg;
use crate::scalar::Scalar;
use crate::scalarfuncs::{classk_eval, ClassK};

/// Positions closer than this to the obstacle center have no gradient.
pub const GRAD_TOL: f64 = 1e-9;
/// Below this `|L_g h|` the relative-degree assumption is declared violated.
pub const A_TOL: f64 = 1e-9;

/// Circular obstacle with an inflation margin (the security distance).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Obstacle {
    pub center: Vec<f64>,
    pub radius: f64,
    #[serde(default)]
    pub margin: f64,
}

impl Obstacle {
    pub fn validate(&self) -> Result<(), FilterError> {
        if !(self.radius > 0.0) {
            return Err(FilterError::InvalidParams {
                name: "Obstacle",
                constraint: "requires radius > 0",
            });
        }
        if !(self.margin >= 0.0) {
            return Err(FilterError::InvalidParams {
                name: "Obstacle",
                constraint: "requires margin >= 0",
            });
        }
        Ok(())
    }
}

/// Distance-to-obstacle barrier `h(x) = ||x - c|| - (r_c + margin)`.
///
/// The safe set is `{h >= 0}`. Non-smooth only at the obstacle center,
/// which is treated as a degenerate-input error rather than regularized.
#[derive(Debug, Clone, PartialEq)]
pub struct Barrier {
    pub obstacle: Obstacle,
}

impl Barrier {
    pub fn new(obstacle: Obstacle) -> Self {
        Barrier { obstacle }
    }

    pub fn eval<T: Scalar>(&self, pos: &[T]) -> T {
        let c: Vec<T> = self.obstacle.center.iter().map(|&v| T::from_f64(v)).collect();
        let d = linalg::sub(pos, &c);
        linalg::norm(&d) - T::from_f64(self.obstacle.radius + self.obstacle.margin)
    }

    /// Unit radial gradient `(pos - c)^T / ||pos - c||`.
    pub fn gradient<T: Scalar>(&self, pos: &[T]) -> Result<Vec<T>, FilterError> {
        let c: Vec<T> = self.obstacle.center.iter().map(|&v| T::from_f64(v)).collect();
        let d = linalg::sub(pos, &c);
        let n = linalg::norm(&d);
        if n.primal() <= GRAD_TOL {
            return Err(FilterError::DegenerateGradient { tol: GRAD_TOL });
        }
        Ok(d.iter().map(|&di| di / n).collect())
    }
}

/// Lie derivatives of the barrier along the system fields:
/// `c_val = L_f h`, `a_row = L_g h`.
#[derive(Debug, Clone, PartialEq)]
pub struct LieData<T> {
    pub c_val: T,
    pub a_row: Vec<T>,
}

/// Control-affine dynamics `xdot = f(x) + g(x) u`, evaluable on plain
/// reals and on dual numbers.
pub trait ControlAffine {
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn drift<T: Scalar>(&self, x: &[T]) -> Vec<T>;
    /// `n x m` input matrix.
    fn input_matrix<T: Scalar>(&self, x: &[T]) -> Vec<Vec<T>>;
}

/// `f = 0`, `g = I`: the velocity-command abstraction every filter in this
/// crate is designed against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SingleIntegrator {
    pub dim: usize,
}

impl ControlAffine for SingleIntegrator {
    fn state_dim(&self) -> usize {
        self.dim
    }

    fn input_dim(&self) -> usize {
        self.dim
    }

    fn drift<T: Scalar>(&self, _x: &[T]) -> Vec<T> {
        vec![T::zero(); self.dim]
    }

    fn input_matrix<T: Scalar>(&self, _x: &[T]) -> Vec<Vec<T>> {
        (0..self.dim)
            .map(|i| {
                (0..self.dim)
                    .map(|j| if i == j { T::one() } else { T::zero() })
                    .collect()
            })
            .collect()
    }
}

/// Generic affine form `f(x) = A x + b`, constant `g`; used by tests and
/// anything that is not one of the named systems.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearAffine {
    pub a_mat: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub g: Vec<Vec<f64>>,
}

impl ControlAffine for LinearAffine {
    fn state_dim(&self) -> usize {
        self.b.len()
    }

    fn input_dim(&self) -> usize {
        self.g[0].len()
    }

    fn drift<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let ax = linalg::mat_vec_f64(&self.a_mat, x);
        ax.iter()
            .zip(&self.b)
            .map(|(&axi, &bi)| axi + T::from_f64(bi))
            .collect()
    }

    fn input_matrix<T: Scalar>(&self, _x: &[T]) -> Vec<Vec<T>> {
        self.g
            .iter()
            .map(|row| row.iter().map(|&v| T::from_f64(v)).collect())
            .collect()
    }
}

/// `c = grad h . f(x)`, `a = grad h . g(x)`, with the relative-degree
/// check failing loudly.
pub fn lie_derivatives<T: Scalar, S: ControlAffine>(
    sys: &S,
    barrier: &Barrier,
    x: &[T],
) -> Result<LieData<T>, FilterError> {
    let grad = barrier.gradient(x)?;
    let f = sys.drift(x);
    let g = sys.input_matrix(x);
    let c_val = linalg::dot(&grad, &f);
    let m = sys.input_dim();
    let mut a_row = vec![T::zero(); m];
    for j in 0..m {
        let mut s = T::zero();
        for (i, gi) in grad.iter().enumerate() {
            s = s + *gi * g[i][j];
        }
        a_row[j] = s;
    }
    let a_norm = linalg::norm(&a_row).primal();
    if a_norm < A_TOL {
        return Err(FilterError::RelativeDegreeViolation { norm: a_norm });
    }
    Ok(LieData { c_val, a_row })
}

/// `sigma = c + a u0 + alpha(h)`
pub fn sigma_eval<T: Scalar>(lie: &LieData<T>, u0: &[T], alpha_h: T) -> T {
    lie.c_val + linalg::dot(&lie.a_row, u0) + alpha_h
}

pub fn sigma_from_h<T: Scalar>(lie: &LieData<T>, u0: &[T], h: T, classk: &ClassK) -> T {
    sigma_eval(lie, u0, classk_eval(h, classk))
}

/// Proportional go-to-goal law `u0 = -k (x - x_d)`.
pub fn nominal_proportional<T: Scalar>(x: &[T], x_d: &[f64], k: f64) -> Vec<T> {
    x.iter()
        .zip(x_d)
        .map(|(&xi, &gi)| -T::from_f64(k) * (xi - T::from_f64(gi)))
        .collect()
}
