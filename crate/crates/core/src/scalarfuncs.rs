//! Smooth scalar building blocks: perception gate, transition window,
//! class-K margin and the penalty weight.

use serde::{Deserialize, Serialize};

use crate::error::FilterError;
use crate::scalar::Scalar;

/// Saturation guard: blends this close to 1 are treated as full violation.
const BLEND_SAT_TOL: f64 = 1e-12;

/// Polynomial used for the 1-to-0 transition window.
///
/// The cubic is C1 at the joins; the quintic is C2 and is what the drone's
/// attitude-rate feedforward consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TransitionKind {
    #[default]
    Cubic,
    Quintic,
}

/// Perception gate window: 1 inside `epsilon`, 0 beyond `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    /// Inner threshold below which the gate is fully on.
    pub epsilon: f64,
    /// Sensing range beyond which the gate is fully off.
    pub delta: f64,
    #[serde(default)]
    pub transition: TransitionKind,
}

impl GateParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self, FilterError> {
        let p = GateParams { epsilon, delta, transition: TransitionKind::Cubic };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), FilterError> {
        if !(self.epsilon > 0.0 && self.delta > self.epsilon) {
            return Err(FilterError::InvalidParams {
                name: "GateParams",
                constraint: "requires 0 < epsilon < delta",
            });
        }
        Ok(())
    }
}

/// Width of a 1-to-0 transition over `(0, tau)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionParams {
    pub tau: f64,
    #[serde(default)]
    pub kind: TransitionKind,
}

impl TransitionParams {
    pub fn new(tau: f64) -> Result<Self, FilterError> {
        let p = TransitionParams { tau, kind: TransitionKind::Cubic };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), FilterError> {
        if !(self.tau > 0.0) {
            return Err(FilterError::InvalidParams {
                name: "TransitionParams",
                constraint: "requires tau > 0",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ClassKForm {
    #[default]
    Linear,
}

/// Extended class-K safety margin `alpha(h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassK {
    pub alpha0: f64,
    #[serde(default)]
    pub form: ClassKForm,
}

impl ClassK {
    pub fn new(alpha0: f64) -> Result<Self, FilterError> {
        let k = ClassK { alpha0, form: ClassKForm::Linear };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<(), FilterError> {
        if !(self.alpha0 > 0.0) {
            return Err(FilterError::InvalidParams {
                name: "ClassK",
                constraint: "requires alpha0 > 0",
            });
        }
        Ok(())
    }
}

fn default_psi_max() -> f64 {
    1e12
}

/// Penalty-weight parameters: perception range, margin and the numeric
/// ceiling replacing the divergence at joint violation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyParams {
    pub delta: f64,
    pub mu: f64,
    #[serde(default = "default_psi_max")]
    pub psi_max: f64,
    #[serde(default)]
    pub transition: TransitionKind,
}

impl PenaltyParams {
    pub fn new(delta: f64, mu: f64) -> Result<Self, FilterError> {
        let p = PenaltyParams {
            delta,
            mu,
            psi_max: default_psi_max(),
            transition: TransitionKind::Cubic,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), FilterError> {
        if !(self.delta > 0.0 && self.mu > 0.0 && self.psi_max > 0.0) {
            return Err(FilterError::InvalidParams {
                name: "PenaltyParams",
                constraint: "requires delta > 0, mu > 0, psi_max > 0",
            });
        }
        Ok(())
    }

    /// Transition windows over `h` (width delta) and `sigma` (width mu).
    pub fn transitions(&self) -> (TransitionParams, TransitionParams) {
        (
            TransitionParams { tau: self.delta, kind: self.transition },
            TransitionParams { tau: self.mu, kind: self.transition },
        )
    }
}

/// Transition window: 1 for `z <= 0`, 0 for `z >= tau`, polynomial blend
/// in between with zero slope at both joins.
pub fn transition_eval<T: Scalar>(z: T, p: &TransitionParams) -> T {
    let zp = z.primal();
    if zp <= 0.0 {
        return T::one();
    }
    if zp >= p.tau {
        return T::zero();
    }
    let s = z / T::from_f64(p.tau);
    polynomial_window(s, p.kind)
}

fn polynomial_window<T: Scalar>(s: T, kind: TransitionKind) -> T {
    match kind {
        TransitionKind::Cubic => {
            // 1 - 3 s^2 + 2 s^3
            T::one() - T::from_f64(3.0) * s.powi(2) + T::from_f64(2.0) * s.powi(3)
        }
        TransitionKind::Quintic => {
            // 1 - 10 s^3 + 15 s^4 - 6 s^5
            T::one() - T::from_f64(10.0) * s.powi(3) + T::from_f64(15.0) * s.powi(4)
                - T::from_f64(6.0) * s.powi(5)
        }
    }
}

/// Exact derivative of [`transition_eval`] with respect to `z`.
pub fn transition_deriv<T: Scalar>(z: T, p: &TransitionParams) -> T {
    let zp = z.primal();
    if zp <= 0.0 || zp >= p.tau {
        return T::zero();
    }
    let tau = T::from_f64(p.tau);
    let s = z / tau;
    match p.kind {
        TransitionKind::Cubic => {
            // -6 s (1 - s) / tau
            -T::from_f64(6.0) * s * (T::one() - s) / tau
        }
        TransitionKind::Quintic => {
            // -30 s^2 (1 - s)^2 / tau
            -T::from_f64(30.0) * s.powi(2) * (T::one() - s).powi(2) / tau
        }
    }
}

/// Perception gate: the transition window shifted to start at `epsilon`,
/// so the gate is exactly 1 on `h <= epsilon` and 0 on `h >= delta`.
pub fn gate_eval<T: Scalar>(h: T, p: &GateParams) -> T {
    let width = TransitionParams { tau: p.delta - p.epsilon, kind: p.transition };
    transition_eval(h - T::from_f64(p.epsilon), &width)
}

pub fn gate_deriv<T: Scalar>(h: T, p: &GateParams) -> T {
    let width = TransitionParams { tau: p.delta - p.epsilon, kind: p.transition };
    transition_deriv(h - T::from_f64(p.epsilon), &width)
}

pub fn classk_eval<T: Scalar>(h: T, k: &ClassK) -> T {
    match k.form {
        ClassKForm::Linear => T::from_f64(k.alpha0) * h,
    }
}

/// Combined window `phi_delta(h) * phi_mu(sigma)` in `[0, 1]`.
pub fn penalty_blend<T: Scalar>(
    h: T,
    sigma: T,
    gate_tau_h: &TransitionParams,
    gate_tau_sigma: &TransitionParams,
) -> T {
    transition_eval(h, gate_tau_h) * transition_eval(sigma, gate_tau_sigma)
}

/// Penalty weight `psi(h, sigma) = phi phi' / (||a||_{W^-1} (1 - phi phi'))`,
/// saturated at `psi_max` instead of diverging when both windows are fully on.
pub fn psi_eval<T: Scalar>(
    h: T,
    sigma: T,
    a_wnorm: T,
    p: &PenaltyParams,
    gate_tau_h: &TransitionParams,
    gate_tau_sigma: &TransitionParams,
) -> T {
    let blend = penalty_blend(h, sigma, gate_tau_h, gate_tau_sigma);
    let b = blend.primal();
    if b <= 0.0 {
        return T::zero();
    }
    if b >= 1.0 - BLEND_SAT_TOL {
        return T::from_f64(p.psi_max);
    }
    let psi = blend / (a_wnorm * (T::one() - blend));
    let pv = psi.primal();
    if !pv.is_finite() || pv > p.psi_max {
        T::from_f64(p.psi_max)
    } else {
        psi
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic(tau: f64) -> TransitionParams {
        TransitionParams { tau, kind: TransitionKind::Cubic }
    }

    #[test]
    fn gate_saturations_and_midpoint() {
        let p = GateParams::new(0.5, 2.0).unwrap();
        assert_eq!(gate_eval(0.25, &p), 1.0); // inside inner band
        assert_eq!(gate_eval(3.0, &p), 0.0); // beyond sensing range
        assert!((gate_eval(1.25_f64, &p) - 0.5).abs() < 1e-15); // Hermite midpoint
    }

    #[test]
    fn transition_saturations_and_midpoint() {
        assert_eq!(transition_eval(-1.0, &cubic(1.0)), 1.0);
        assert_eq!(transition_eval(0.3, &cubic(0.3)), 0.0);
        assert!((transition_eval(1.0_f64, &cubic(2.0)) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn transition_deriv_values() {
        assert_eq!(transition_deriv(-5.0, &cubic(1.0)), 0.0);
        assert!((transition_deriv(0.5_f64, &cubic(1.0)) - (-1.5)).abs() < 1e-15);
    }

    #[test]
    fn transition_deriv_matches_finite_difference() {
        let step = 1e-5;
        for &kind in &[TransitionKind::Cubic, TransitionKind::Quintic] {
            let p = TransitionParams { tau: 0.7, kind };
            for i in 0..200 {
                let z = -0.2 + 1.1 * (i as f64) / 199.0;
                let fd = (transition_eval(z + step, &p) - transition_eval(z - step, &p))
                    / (2.0 * step);
                let an = transition_deriv(z, &p);
                let scale = an.abs().max(1.0);
                assert!(
                    (fd - an).abs() / scale < 1e-6,
                    "kind {kind:?} z {z}: fd {fd} analytic {an}"
                );
            }
        }
    }

    #[test]
    fn classk_values() {
        let k = ClassK::new(1.5).unwrap();
        assert_eq!(classk_eval(0.0, &k), 0.0);
        assert_eq!(classk_eval(2.0, &k), 3.0);
        let k2 = ClassK::new(2.0).unwrap();
        assert_eq!(classk_eval(-0.5, &k2), -1.0);
    }

    #[test]
    fn classk_strictly_increasing() {
        let k = ClassK::new(0.7).unwrap();
        let mut prev = classk_eval(-10.0, &k);
        for i in 1..1000 {
            let h = -10.0 + 20.0 * (i as f64) / 999.0;
            let v = classk_eval(h, &k);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn psi_zero_outside_band() {
        let p = PenaltyParams::new(2.0, 1.0).unwrap();
        let (th, ts) = p.transitions();
        assert_eq!(psi_eval(2.1, -5.0, 1.0, &p, &th, &ts), 0.0); // h >= delta
        assert_eq!(psi_eval(-1.0, 2.0, 1.0, &p, &th, &ts), 0.0); // sigma >= mu
    }

    #[test]
    fn psi_saturates_on_joint_violation() {
        let p = PenaltyParams::new(2.0, 1.0).unwrap();
        let (th, ts) = p.transitions();
        assert_eq!(psi_eval(-0.1, -0.1, 1.0, &p, &th, &ts), p.psi_max);
    }

    #[test]
    fn psi_midpoint_value() {
        // phi(delta/2) = phi(mu/2) = 0.5, so psi = 0.25 / 0.75 = 1/3
        let p = PenaltyParams::new(2.0, 1.0).unwrap();
        let (th, ts) = p.transitions();
        let v = psi_eval(1.0_f64, 0.5, 1.0, &p, &th, &ts);
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn gate_and_transition_monotone_and_in_range() {
        let g = GateParams::new(0.5, 2.0).unwrap();
        let t = cubic(0.8);
        let mut prev_g = f64::INFINITY;
        let mut prev_t = f64::INFINITY;
        for i in 0..10_000 {
            let z = -1.0 + 4.0 * (i as f64) / 9_999.0;
            let gv = gate_eval(z, &g);
            let tv = transition_eval(z, &t);
            assert!((0.0..=1.0).contains(&gv));
            assert!((0.0..=1.0).contains(&tv));
            assert!(gv <= prev_g + 1e-15);
            assert!(tv <= prev_t + 1e-15);
            prev_g = gv;
            prev_t = tv;
        }
    }

    #[test]
    fn c1_joins_of_gate_and_transition() {
        // left/right difference quotients agree at every join
        let g = GateParams::new(0.5, 2.0).unwrap();
        let t = cubic(0.8);
        let step = 1e-6;
        for &join in &[0.5_f64, 2.0] {
            let left = (gate_eval(join, &g) - gate_eval(join - step, &g)) / step;
            let right = (gate_eval(join + step, &g) - gate_eval(join, &g)) / step;
            assert!((left - right).abs() < 1e-5, "gate join {join}");
        }
        for &join in &[0.0_f64, 0.8] {
            let left = (transition_eval(join, &t) - transition_eval(join - step, &t)) / step;
            let right = (transition_eval(join + step, &t) - transition_eval(join, &t)) / step;
            assert!((left - right).abs() < 1e-5, "transition join {join}");
        }
    }

    #[test]
    fn psi_monotone_along_rays_toward_violation() {
        let p = PenaltyParams::new(2.0, 1.0).unwrap();
        let (th, ts) = p.transitions();
        // walk (h, sigma) from the outer corner toward (0, 0): psi must not decrease
        let mut prev = -1.0;
        for i in 0..500 {
            let s = 1.0 - (i as f64) / 499.0; // 1 -> 0
            let h = 1.9 * s;
            let sigma = 0.9 * s;
            let v = psi_eval(h, sigma, 1.0, &p, &th, &ts);
            assert!(v >= prev - 1e-12);
            assert!(v <= p.psi_max);
            prev = v;
        }
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(GateParams::new(2.0, 0.5).is_err());
        assert!(TransitionParams::new(0.0).is_err());
        assert!(ClassK::new(-1.0).is_err());
        assert!(PenaltyParams::new(0.0, 1.0).is_err());
    }
}
