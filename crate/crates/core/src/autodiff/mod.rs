//! Forward-mode differentiation of the smooth filter pipeline: Jacobians
//! for the feedforward term and the second-order pass behind the drone's
//! desired attitude rate.

mod dual;
mod hyperdual;

pub use dual::Dual;
pub use hyperdual::HyperDual;

use crate::error::FilterError;
use crate::pipeline::SafetyPipeline;

/// `du*/dx`, flagged invalid when the state sits on a transition join.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianResult {
    /// `m x n` matrix, row `i` = gradient of output component `i`.
    pub matrix: Vec<Vec<f64>>,
    pub valid: bool,
}

fn require_smooth(pipe: &SafetyPipeline) -> Result<(), FilterError> {
    if !pipe.cfg.kind.is_smooth() {
        return Err(FilterError::NotDifferentiable {
            kind: pipe.cfg.kind.name().to_string(),
        });
    }
    Ok(())
}

/// Exact forward-mode Jacobian of the filtered control map, seeded over the
/// unit directions of the state.
pub fn filter_jacobian(
    pipe: &SafetyPipeline,
    x: &[f64],
) -> Result<JacobianResult, FilterError> {
    require_smooth(pipe)?;
    let n = x.len();
    let mut matrix: Vec<Vec<f64>> = Vec::new();
    for j in 0..n {
        let seeded: Vec<Dual<1>> = x
            .iter()
            .enumerate()
            .map(|(i, &v)| if i == j { Dual::var(v, 0) } else { Dual::constant(v) })
            .collect();
        let u = pipe.control(&seeded)?;
        if matrix.is_empty() {
            matrix = vec![vec![0.0; n]; u.len()];
        }
        for (i, ui) in u.iter().enumerate() {
            matrix[i][j] = ui.eps[0];
        }
    }
    let valid = !pipe.near_join(x)?;
    Ok(JacobianResult { matrix, valid })
}

/// `(du*/dx) xdot` via a single directional pass.
pub fn feedforward_term(
    pipe: &SafetyPipeline,
    x: &[f64],
    xdot: &[f64],
) -> Result<Vec<f64>, FilterError> {
    require_smooth(pipe)?;
    let seeded: Vec<Dual<1>> = x
        .iter()
        .zip(xdot)
        .map(|(&v, &d)| Dual::seeded(v, [d]))
        .collect();
    let u = pipe.control(&seeded)?;
    Ok(u.iter().map(|ui| ui.eps[0]).collect())
}

/// Desired pitch from the outer-loop acceleration:
/// `theta_d = atan2(-a_dx, a_dy + g_v)`.
pub fn desired_attitude(a_d: &[f64], g_v: f64) -> Result<f64, FilterError> {
    let num = -a_d[0];
    let den = a_d[1] + g_v;
    if num.abs() < 1e-9 && den.abs() < 1e-9 {
        return Err(FilterError::DegenerateThrust);
    }
    Ok(num.atan2(den))
}

/// Outer-loop acceleration command and the directional derivatives of the
/// filtered control needed to differentiate it, from one second-order pass.
pub struct OuterLoopDerivatives {
    pub u_star: Vec<f64>,
    /// `(du*/dx) v`
    pub jac_v: Vec<f64>,
    /// `v^T (d2 u*_i / dx2) v` per output component
    pub hess_vv: Vec<f64>,
    /// `a_d = -k_v (v - u*) + (du*/dx) v`
    pub accel: Vec<f64>,
}

pub fn outer_loop_derivatives(
    pipe: &SafetyPipeline,
    k_v: f64,
    pos: &[f64],
    vel: &[f64],
) -> Result<OuterLoopDerivatives, FilterError> {
    require_smooth(pipe)?;

    // one hyper-dual pass, both seeds along the velocity:
    // d1 = J v, d12 = v^T H v per output component
    let seeded: Vec<HyperDual> = pos
        .iter()
        .zip(vel)
        .map(|(&p, &v)| HyperDual::seeded(p, v, v))
        .collect();
    let u_hd = pipe.control(&seeded)?;
    let u_star: Vec<f64> = u_hd.iter().map(|u| u.re).collect();
    let jac_v: Vec<f64> = u_hd.iter().map(|u| u.d1).collect();
    let hess_vv: Vec<f64> = u_hd.iter().map(|u| u.d12).collect();

    let accel: Vec<f64> = (0..pos.len())
        .map(|i| -k_v * (vel[i] - u_star[i]) + jac_v[i])
        .collect();

    Ok(OuterLoopDerivatives { u_star, jac_v, hess_vv, accel })
}

/// `da_d/dt = -k_v (vdot - J v) + v^T H v + J vdot`, with `vdot` the
/// translational acceleration to differentiate along.
///
/// Pass the actual acceleration (from the current attitude and the thrust
/// being applied) when it is available: closing the loop with the design
/// acceleration `vdot = a_d` instead destabilizes the attitude cascade
/// whenever the inner loop lags, since the rate feedforward then reports
/// the reference shrinking before the vehicle has turned. `None` selects
/// that design-acceleration closure, exact only under perfect tracking.
pub fn accel_rate(
    pipe: &SafetyPipeline,
    k_v: f64,
    d: &OuterLoopDerivatives,
    pos: &[f64],
    vdot: Option<&[f64]>,
) -> Result<Vec<f64>, FilterError> {
    let vdot = vdot.unwrap_or(&d.accel);
    let jac_vdot = feedforward_term(pipe, pos, vdot)?;
    Ok((0..pos.len())
        .map(|i| -k_v * (vdot[i] - d.jac_v[i]) + d.hess_vv[i] + jac_vdot[i])
        .collect())
}

/// `thetadot_d` for the planar drone, from the quotient rule applied to the
/// desired-attitude arctangent, under the design-acceleration closure.
pub fn desired_attitude_rate(
    pipe: &SafetyPipeline,
    k_v: f64,
    g_v: f64,
    pos: &[f64],
    vel: &[f64],
) -> Result<f64, FilterError> {
    let d = outer_loop_derivatives(pipe, k_v, pos, vel)?;
    let rate = accel_rate(pipe, k_v, &d, pos, None)?;
    attitude_rate_from_accel(&d.accel, &rate, g_v)
}

/// `(a_dx adot_dy - adot_dx (a_dy + g_v)) / (a_dx^2 + (a_dy + g_v)^2)`
pub fn attitude_rate_from_accel(
    a_d: &[f64],
    a_d_rate: &[f64],
    g_v: f64,
) -> Result<f64, FilterError> {
    let ax = a_d[0];
    let ay = a_d[1] + g_v;
    let denom = ax * ax + ay * ay;
    if denom < 1e-18 {
        return Err(FilterError::DegenerateThrust);
    }
    Ok((ax * a_d_rate[1] - a_d_rate[0] * ay) / denom)
}
