//! The composed velocity-level safety filter `u*(pos)`: nominal
//! proportional law, circular barriers and the configured filter, all
//! evaluable on plain floats or dual numbers.

use crate::error::FilterError;
use crate::filters::{
    gated_filter, multi_penalty_filter, penalty_filter, stabilized_penalty_filter,
    FilterConfig, FilterKind, FilterOutput,
};
use crate::model::{lie_derivatives, nominal_proportional, Barrier, LieData, SingleIntegrator};
use crate::scalar::Scalar;
use crate::scalarfuncs::classk_eval;

/// Jacobians are flagged invalid this close to a transition join, where the
/// cubic window has one-sided derivatives.
pub const SNAP_TOL: f64 = 1e-9;

/// Everything needed to evaluate the filtered velocity command at a
/// position. Immutable; evaluation is pure.
#[derive(Debug, Clone)]
pub struct SafetyPipeline<'a> {
    pub cfg: &'a FilterConfig,
    pub barriers: &'a [Barrier],
    pub goal: &'a [f64],
    /// Proportional gain of the nominal go-to-goal law.
    pub k: f64,
}

impl<'a> SafetyPipeline<'a> {
    pub fn new(
        cfg: &'a FilterConfig,
        barriers: &'a [Barrier],
        goal: &'a [f64],
        k: f64,
    ) -> Result<Self, FilterError> {
        if barriers.is_empty() {
            return Err(FilterError::InvalidParams {
                name: "SafetyPipeline",
                constraint: "requires at least one obstacle",
            });
        }
        if !cfg.kind.is_smooth() && barriers.len() > 1 {
            return Err(FilterError::InvalidParams {
                name: "SafetyPipeline",
                constraint: "QP filter kinds support a single obstacle",
            });
        }
        cfg.validate()?;
        Ok(SafetyPipeline { cfg, barriers, goal, k })
    }

    fn lie_data<T: Scalar>(&self, pos: &[T]) -> Result<Vec<(LieData<T>, T)>, FilterError> {
        let sys = SingleIntegrator { dim: pos.len() };
        self.barriers
            .iter()
            .map(|b| Ok((lie_derivatives(&sys, b, pos)?, b.eval(pos))))
            .collect()
    }

    /// Full filter evaluation with diagnostics.
    pub fn output<T: Scalar>(&self, pos: &[T]) -> Result<FilterOutput<T>, FilterError> {
        let u0 = nominal_proportional(pos, self.goal, self.k);
        let data = self.lie_data(pos)?;
        match self.cfg.kind {
            FilterKind::ClassicalQp | FilterKind::GatedQp => {
                let (lie, h) = &data[0];
                gated_filter(self.cfg, lie, *h, &u0)
            }
            FilterKind::Penalty => {
                if data.len() == 1 {
                    let (lie, h) = &data[0];
                    penalty_filter(self.cfg, lie, *h, &u0)
                } else {
                    let (lies, hs): (Vec<_>, Vec<_>) = data.into_iter().unzip();
                    multi_penalty_filter(self.cfg, &lies, &hs, &u0)
                }
            }
            FilterKind::StabilizedPenalty => {
                if data.len() == 1 {
                    let (lie, h) = &data[0];
                    stabilized_penalty_filter(self.cfg, lie, *h, &u0)
                } else {
                    let (lies, hs): (Vec<_>, Vec<_>) = data.into_iter().unzip();
                    multi_penalty_filter(self.cfg, &lies, &hs, &u0)
                }
            }
        }
    }

    /// The filtered control alone.
    pub fn control<T: Scalar>(&self, pos: &[T]) -> Result<Vec<T>, FilterError> {
        Ok(self.output(pos)?.u_star)
    }

    /// True when any transition argument sits within [`SNAP_TOL`] of a join,
    /// where one-sided derivatives of the cubic window differ.
    pub fn near_join(&self, pos: &[f64]) -> Result<bool, FilterError> {
        let u0 = nominal_proportional(pos, self.goal, self.k);
        for (lie, h) in self.lie_data(pos)? {
            let sigma = crate::model::sigma_eval(&lie, &u0, classk_eval(h, &self.cfg.classk));
            let joins = [
                h - self.cfg.gate.epsilon,
                h - self.cfg.gate.delta,
                h,
                h - self.cfg.penalty.delta,
                sigma,
                sigma - self.cfg.penalty.mu,
            ];
            if joins.iter().any(|d| d.abs() < SNAP_TOL) {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::WeightMatrix;
    use crate::model::Obstacle;
    use crate::scalarfuncs::{ClassK, GateParams, PenaltyParams};

    fn setup(kind: FilterKind) -> (FilterConfig, Vec<Barrier>, Vec<f64>) {
        let cfg = FilterConfig {
            kind,
            weight: WeightMatrix::identity(2),
            gate: GateParams::new(0.5, 2.0).unwrap(),
            classk: ClassK::new(1.0).unwrap(),
            penalty: PenaltyParams::new(2.0, 1.0).unwrap(),
        };
        let barriers = vec![Barrier::new(Obstacle {
            center: vec![0.0, 0.0],
            radius: 1.0,
            margin: 0.2,
        })];
        (cfg, barriers, vec![4.0, 0.0])
    }

    #[test]
    fn nominal_far_from_obstacle() {
        let (cfg, barriers, goal) = setup(FilterKind::Penalty);
        let pipe = SafetyPipeline::new(&cfg, &barriers, &goal, 1.0).unwrap();
        let pos = [-8.0, 5.0];
        let u = pipe.control(&pos).unwrap();
        assert_eq!(u, vec![12.0, -5.0]);
    }

    #[test]
    fn correction_points_outward_on_approach() {
        let (cfg, barriers, goal) = setup(FilterKind::Penalty);
        let pipe = SafetyPipeline::new(&cfg, &barriers, &goal, 1.0).unwrap();
        // heading straight at the obstacle from the left
        let out = pipe.output(&[-1.6, 0.0]).unwrap();
        assert!(out.constraint_active);
        assert!(out.correction[0] < 0.0); // pushes away from the obstacle
    }

    #[test]
    fn qp_kinds_reject_multiple_obstacles() {
        let (cfg, mut barriers, goal) = setup(FilterKind::ClassicalQp);
        barriers.push(barriers[0].clone());
        assert!(SafetyPipeline::new(&cfg, &barriers, &goal, 1.0).is_err());
    }

    #[test]
    fn near_join_flags_boundary() {
        let (cfg, barriers, goal) = setup(FilterKind::Penalty);
        let pipe = SafetyPipeline::new(&cfg, &barriers, &goal, 1.0).unwrap();
        // h = 0 exactly on the inflated circle
        assert!(pipe.near_join(&[-1.2, 0.0]).unwrap());
        assert!(!pipe.near_join(&[-1.5, 0.4]).unwrap());
    }
}
