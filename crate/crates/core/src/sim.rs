//! Fixed-step RK4 simulation of the three benchmark systems under any
//! configured filter, with invariance/tracking monitors.

use serde::{Deserialize, Serialize};

use crate::autodiff::{
    accel_rate, attitude_rate_from_accel, feedforward_term, outer_loop_derivatives,
};
use crate::error::FilterError;
use crate::filters::{FilterConfig, FilterOutput};
use crate::linalg;
use crate::model::Barrier;
use crate::pipeline::SafetyPipeline;

/// Barrier dips smaller than this are attributed to integration error.
pub const INV_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SystemKind {
    SingleIntegrator,
    DoubleIntegrator,
    PlanarDrone,
}

impl SystemKind {
    pub fn state_dim(self) -> usize {
        match self {
            SystemKind::SingleIntegrator => 2,
            SystemKind::DoubleIntegrator => 4,
            SystemKind::PlanarDrone => 6,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SystemKind::SingleIntegrator => "SingleIntegrator",
            SystemKind::DoubleIntegrator => "DoubleIntegrator",
            SystemKind::PlanarDrone => "PlanarDrone",
        }
    }
}

/// Gains and physical constants; defaults are unit-scale with
/// gravity 9.81 and a small rotational inertia.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainSet {
    /// Proportional gain of the nominal go-to-goal law.
    pub k: f64,
    /// Velocity-tracking gain (double integrator).
    pub k_p: f64,
    /// Outer-loop gain (drone).
    pub k_v: f64,
    /// Attitude gain.
    pub k_theta: f64,
    /// Attitude-rate gain.
    pub k_omega: f64,
    pub mass: f64,
    pub inertia: f64,
    pub gravity: f64,
}

impl Default for GainSet {
    fn default() -> Self {
        GainSet {
            k: 1.0,
            k_p: 1.0,
            k_v: 1.0,
            k_theta: 2.0,
            k_omega: 2.0,
            mass: 1.0,
            inertia: 0.1,
            gravity: 9.81,
        }
    }
}

impl GainSet {
    pub fn validate(&self) -> Result<(), FilterError> {
        let all = [
            self.k, self.k_p, self.k_v, self.k_theta, self.k_omega, self.mass,
            self.inertia, self.gravity,
        ];
        if all.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(FilterError::InvalidParams {
                name: "GainSet",
                constraint: "all gains and physical constants must be > 0",
            });
        }
        Ok(())
    }
}

/// Declarative simulation description.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub system: SystemKind,
    pub barriers: Vec<Barrier>,
    pub goal: Vec<f64>,
    pub x0: Vec<f64>,
    pub gains: GainSet,
    pub filter: FilterConfig,
    pub duration: f64,
    pub dt: f64,
    pub feedforward: bool,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), FilterError> {
        if !(self.dt > 0.0) || self.duration < self.dt {
            return Err(FilterError::InvalidParams {
                name: "Scenario",
                constraint: "requires dt > 0 and duration >= dt",
            });
        }
        if self.x0.len() != self.system.state_dim() {
            return Err(FilterError::InvalidParams {
                name: "Scenario",
                constraint: "x0 dimension must match the system",
            });
        }
        if self.goal.len() != 2 {
            return Err(FilterError::InvalidParams {
                name: "Scenario",
                constraint: "goal must be a 2-D position",
            });
        }
        if self.feedforward && !self.filter.kind.is_smooth() {
            return Err(FilterError::InvalidParams {
                name: "Scenario",
                constraint: "feedforward requires a smooth filter kind",
            });
        }
        for b in &self.barriers {
            b.obstacle.validate()?;
        }
        self.gains.validate()?;
        self.filter.validate()?;
        // fail early rather than at t = 0 inside the integrator
        SafetyPipeline::new(&self.filter, &self.barriers, &self.goal, self.gains.k)?;
        Ok(())
    }
}

/// One logged step.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub t: f64,
    pub state: Vec<f64>,
    /// Applied control: `u*` (single), acceleration (double), `(F, tau)` (drone).
    pub control: Vec<f64>,
    pub filter: FilterOutput<f64>,
    pub h_per_obstacle: Vec<f64>,
    /// `||xdot - u*||` for the higher-order systems.
    pub tracking_err: Option<f64>,
}

/// Uniform-grid time history of a run.
#[derive(Debug, Clone)]
pub struct TrajectoryLog {
    pub system: SystemKind,
    pub dt: f64,
    pub goal: Vec<f64>,
    pub steps: Vec<StepRecord>,
}

/// Summary monitors; `violations` counts steps with any `h < -INV_TOL`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub min_h: f64,
    pub goal_error_final: f64,
    pub velocity_tracking_rms: Option<f64>,
    pub control_rate_max: f64,
    pub violations: usize,
}

/// Classical fourth-order Runge-Kutta update.
pub fn rk4_step<F>(deriv: &F, t: f64, x: &[f64], dt: f64) -> Result<Vec<f64>, FilterError>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>, FilterError>,
{
    let k1 = deriv(t, x)?;
    let k2 = deriv(t + 0.5 * dt, &linalg::axpy(x, 0.5 * dt, &k1))?;
    let k3 = deriv(t + 0.5 * dt, &linalg::axpy(x, 0.5 * dt, &k2))?;
    let k4 = deriv(t + dt, &linalg::axpy(x, dt, &k3))?;
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let v = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        if !v.is_finite() {
            return Err(FilterError::NonFiniteState.at_time(t));
        }
        out.push(v);
    }
    Ok(out)
}

fn pipeline<'a>(sc: &'a Scenario) -> Result<SafetyPipeline<'a>, FilterError> {
    SafetyPipeline::new(&sc.filter, &sc.barriers, &sc.goal, sc.gains.k)
}

fn h_values(sc: &Scenario, pos: &[f64]) -> Vec<f64> {
    sc.barriers.iter().map(|b| b.eval(pos)).collect()
}

fn step_count(sc: &Scenario) -> usize {
    (sc.duration / sc.dt).round().max(1.0) as usize
}

/// Integrate `xdot = u*(x)`.
pub fn run_single_integrator(sc: &Scenario) -> Result<TrajectoryLog, FilterError> {
    assert_eq!(sc.system, SystemKind::SingleIntegrator);
    let pipe = pipeline(sc)?;
    let deriv = |_t: f64, x: &[f64]| pipe.control(x);

    let mut steps = Vec::with_capacity(step_count(sc) + 1);
    let mut x = sc.x0.clone();
    for k in 0..=step_count(sc) {
        let t = k as f64 * sc.dt;
        let out = pipe.output(&x).map_err(|e| e.at_time(t))?;
        steps.push(StepRecord {
            t,
            state: x.clone(),
            control: out.u_star.clone(),
            h_per_obstacle: h_values(sc, &x),
            filter: out,
            tracking_err: None,
        });
        if k < step_count(sc) {
            x = rk4_step(&deriv, t, &x, sc.dt).map_err(|e| e.at_time(t))?;
        }
    }
    Ok(TrajectoryLog { system: sc.system, dt: sc.dt, goal: sc.goal.clone(), steps })
}

/// Integrate `xddot = u` with the velocity-tracking law
/// `u = -k_p (xdot - u*) [+ (du*/dx) xdot]`.
pub fn run_double_integrator(sc: &Scenario) -> Result<TrajectoryLog, FilterError> {
    assert_eq!(sc.system, SystemKind::DoubleIntegrator);
    let pipe = pipeline(sc)?;
    let k_p = sc.gains.k_p;
    let ff = sc.feedforward;

    let control = |x: &[f64]| -> Result<Vec<f64>, FilterError> {
        let (pos, vel) = x.split_at(2);
        let u_star = pipe.control(pos)?;
        let mut u: Vec<f64> = (0..2).map(|i| -k_p * (vel[i] - u_star[i])).collect();
        if ff {
            let j_v = feedforward_term(&pipe, pos, vel)?;
            for i in 0..2 {
                u[i] += j_v[i];
            }
        }
        Ok(u)
    };
    let deriv = |_t: f64, x: &[f64]| -> Result<Vec<f64>, FilterError> {
        let u = control(x)?;
        Ok(vec![x[2], x[3], u[0], u[1]])
    };

    let mut steps = Vec::with_capacity(step_count(sc) + 1);
    let mut x = sc.x0.clone();
    for k in 0..=step_count(sc) {
        let t = k as f64 * sc.dt;
        let (pos, vel) = x.split_at(2);
        let out = pipe.output(pos).map_err(|e| e.at_time(t))?;
        let u = control(&x).map_err(|e| e.at_time(t))?;
        let track = linalg::norm(&linalg::sub(vel, &out.u_star));
        steps.push(StepRecord {
            t,
            state: x.clone(),
            control: u,
            h_per_obstacle: h_values(sc, pos),
            filter: out,
            tracking_err: Some(track),
        });
        if k < step_count(sc) {
            x = rk4_step(&deriv, t, &x, sc.dt).map_err(|e| e.at_time(t))?;
        }
    }
    Ok(TrajectoryLog { system: sc.system, dt: sc.dt, goal: sc.goal.clone(), steps })
}

/// Hierarchical planar-drone loop: outer acceleration command, thrust and
/// attitude extraction, PD attitude inner loop.
pub fn run_planar_drone(sc: &Scenario) -> Result<TrajectoryLog, FilterError> {
    assert_eq!(sc.system, SystemKind::PlanarDrone);
    let pipe = pipeline(sc)?;
    let g = sc.gains;
    let ff = sc.feedforward;

    // returns (u_star, F, tau)
    let control = |x: &[f64]| -> Result<(Vec<f64>, f64, f64), FilterError> {
        let pos = &x[0..2];
        let vel = &x[2..4];
        let theta = x[4];
        let omega = x[5];
        let (u_star, accel, derivs) = if ff {
            let d = outer_loop_derivatives(&pipe, g.k_v, pos, vel)?;
            (d.u_star.clone(), d.accel.clone(), Some(d))
        } else {
            let u_star = pipe.control(pos)?;
            let accel: Vec<f64> = (0..2).map(|i| -g.k_v * (vel[i] - u_star[i])).collect();
            (u_star, accel, None)
        };
        let fx = accel[0];
        let fy = accel[1] + g.gravity;
        let thrust = g.mass * (fx * fx + fy * fy).sqrt();
        let theta_d = crate::autodiff::desired_attitude(&accel, g.gravity)?;
        let theta_d_rate = match derivs {
            None => 0.0,
            Some(d) => {
                // differentiate theta_d along the acceleration actually
                // applied this instant (commanded thrust at the current
                // attitude), not the design acceleration: the design
                // closure destabilizes the cascade when the inner loop lags
                let vdot = [
                    -(thrust / g.mass) * theta.sin(),
                    (thrust / g.mass) * theta.cos() - g.gravity,
                ];
                let rate = accel_rate(&pipe, g.k_v, &d, pos, Some(&vdot))?;
                attitude_rate_from_accel(&accel, &rate, g.gravity)?
            }
        };
        let torque =
            -g.inertia * (g.k_theta * (theta - theta_d) + g.k_omega * (omega - theta_d_rate));
        Ok((u_star, thrust, torque))
    };
    let deriv = |_t: f64, x: &[f64]| -> Result<Vec<f64>, FilterError> {
        let (_, thrust, torque) = control(x)?;
        let theta = x[4];
        Ok(vec![
            x[2],
            x[3],
            -(thrust / g.mass) * theta.sin(),
            (thrust / g.mass) * theta.cos() - g.gravity,
            x[5],
            torque / g.inertia,
        ])
    };

    let mut steps = Vec::with_capacity(step_count(sc) + 1);
    let mut x = sc.x0.clone();
    for k in 0..=step_count(sc) {
        let t = k as f64 * sc.dt;
        let pos = &x[0..2];
        let out = pipe.output(pos).map_err(|e| e.at_time(t))?;
        let (u_star, thrust, torque) = control(&x).map_err(|e| e.at_time(t))?;
        let track = linalg::norm(&linalg::sub(&x[2..4], &u_star));
        steps.push(StepRecord {
            t,
            state: x.clone(),
            control: vec![thrust, torque],
            h_per_obstacle: h_values(sc, pos),
            filter: out,
            tracking_err: Some(track),
        });
        if k < step_count(sc) {
            x = rk4_step(&deriv, t, &x, sc.dt).map_err(|e| e.at_time(t))?;
        }
    }
    Ok(TrajectoryLog { system: sc.system, dt: sc.dt, goal: sc.goal.clone(), steps })
}

/// Dispatch on the scenario's system.
pub fn run(sc: &Scenario) -> Result<TrajectoryLog, FilterError> {
    sc.validate()?;
    match sc.system {
        SystemKind::SingleIntegrator => run_single_integrator(sc),
        SystemKind::DoubleIntegrator => run_double_integrator(sc),
        SystemKind::PlanarDrone => run_planar_drone(sc),
    }
}

/// Monitors over a completed log.
pub fn compute_metrics(log: &TrajectoryLog) -> Metrics {
    assert!(!log.steps.is_empty());
    let min_h = log
        .steps
        .iter()
        .flat_map(|s| s.h_per_obstacle.iter().copied())
        .fold(f64::INFINITY, f64::min);
    let violations = log
        .steps
        .iter()
        .filter(|s| s.h_per_obstacle.iter().any(|&h| h < -INV_TOL))
        .count();
    let last = log.steps.last().unwrap();
    let goal_error_final = linalg::norm(&linalg::sub(&last.state[0..2], &log.goal));
    let tracked: Vec<f64> = log.steps.iter().filter_map(|s| s.tracking_err).collect();
    let velocity_tracking_rms = if tracked.is_empty() {
        None
    } else {
        Some((tracked.iter().map(|e| e * e).sum::<f64>() / tracked.len() as f64).sqrt())
    };
    let control_rate_max = log
        .steps
        .windows(2)
        .map(|w| linalg::norm(&linalg::sub(&w[1].control, &w[0].control)) / log.dt)
        .fold(0.0, f64::max);
    Metrics {
        min_h,
        goal_error_final,
        velocity_tracking_rms,
        control_rate_max,
        violations,
    }
}

/// Max discrete second difference `||u_{k+1} - 2 u_k + u_{k-1}|| / dt^2`;
/// diverges under grid refinement at a control-slope kink.
pub fn control_second_diff_max(log: &TrajectoryLog) -> f64 {
    log.steps
        .windows(3)
        .map(|w| {
            let m = w[0].control.len();
            let mut s = 0.0;
            for i in 0..m {
                let d2 = w[2].control[i] - 2.0 * w[1].control[i] + w[0].control[i];
                s += d2 * d2;
            }
            s.sqrt() / (log.dt * log.dt)
        })
        .fold(0.0, f64::max)
}
