//! Run artifacts: the fixed-schema trajectory CSV and a JSON summary
//! report. All file writes go through a temp file plus rename so a crash
//! never leaves a truncated artifact behind.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ScenarioFile;
use crate::linalg;
use crate::sim::{Metrics, TrajectoryLog, INV_TOL};

/// Pass/fail verdicts derived from the metrics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdicts {
    /// No logged step dipped below `-INV_TOL` on any barrier.
    pub invariance: bool,
    /// Final position within `goal_tol` of the goal.
    pub reached_goal: bool,
}

/// Summary document written by `run` and `eval`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: ScenarioFile,
    pub steps: usize,
    pub metrics: Metrics,
    pub goal_tol: f64,
    pub verdicts: Verdicts,
}

/// Default goal-reaching tolerance for verdicts.
pub const GOAL_TOL: f64 = 0.15;

/// Safety verdict. A run that starts inside an obstacle (a deliberate
/// recovery scenario) passes if it reaches the safe set and never leaves
/// it again; a run starting safe must stay safe throughout.
pub fn invariance_verdict(log: &TrajectoryLog) -> bool {
    let started_unsafe = log.steps[0].h_per_obstacle.iter().any(|&h| h < 0.0);
    if !started_unsafe {
        return log
            .steps
            .iter()
            .all(|s| s.h_per_obstacle.iter().all(|&h| h >= -INV_TOL));
    }
    match log
        .steps
        .iter()
        .position(|s| s.h_per_obstacle.iter().all(|&h| h >= 0.0))
    {
        None => false,
        Some(i) => log.steps[i..]
            .iter()
            .all(|s| s.h_per_obstacle.iter().all(|&h| h >= -INV_TOL)),
    }
}

pub fn build_report(scenario: &ScenarioFile, log: &TrajectoryLog, goal_tol: f64) -> RunReport {
    let metrics = crate::sim::compute_metrics(log);
    let verdicts = Verdicts {
        invariance: invariance_verdict(log),
        reached_goal: metrics.goal_error_final <= goal_tol,
    };
    RunReport {
        scenario: scenario.clone(),
        steps: log.steps.len(),
        metrics,
        goal_tol,
        verdicts,
    }
}

fn fmt_float(buf: &mut String, v: f64) {
    // 17 significant digits: round-trips f64 exactly
    write!(buf, "{v:.16e}").unwrap();
}

/// Header matching [`csv_rows`]:
/// `t,x1..xn,u1..um,h_1..h_N,sigma,gate_or_psi,correction_norm,tracking_err`.
pub fn csv_header(n_state: usize, n_control: usize, n_obstacles: usize) -> String {
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=n_state).map(|i| format!("x{i}")));
    cols.extend((1..=n_control).map(|i| format!("u{i}")));
    cols.extend((1..=n_obstacles).map(|i| format!("h_{i}")));
    cols.push("sigma".into());
    cols.push("gate_or_psi".into());
    cols.push("correction_norm".into());
    cols.push("tracking_err".into());
    cols.join(",")
}

/// Render the whole log as CSV text. `tracking_err` is empty for the
/// single integrator, where the filtered command is applied directly.
pub fn to_csv(log: &TrajectoryLog) -> String {
    let first = &log.steps[0];
    let mut out = csv_header(
        first.state.len(),
        first.control.len(),
        first.h_per_obstacle.len(),
    );
    out.push('\n');
    for s in &log.steps {
        fmt_float(&mut out, s.t);
        for &v in s.state.iter().chain(&s.control).chain(&s.h_per_obstacle) {
            out.push(',');
            fmt_float(&mut out, v);
        }
        out.push(',');
        fmt_float(&mut out, s.filter.sigma);
        out.push(',');
        fmt_float(&mut out, s.filter.gate_or_psi);
        out.push(',');
        fmt_float(&mut out, linalg::norm(&s.filter.correction));
        out.push(',');
        if let Some(e) = s.tracking_err {
            fmt_float(&mut out, e);
        }
        out.push('\n');
    }
    out
}

/// Write bytes atomically: temp file in the target directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)?;
    }
    let file_name = path
        .file_name()
        .ok_or_else(|| std::io::Error::other("output path has no file name"))?;
    let tmp = path.with_file_name(format!(".{}.tmp", file_name.to_string_lossy()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

pub fn write_csv(path: &Path, log: &TrajectoryLog) -> std::io::Result<()> {
    write_atomic(path, to_csv(log).as_bytes())
}

pub fn write_report(path: &Path, report: &RunReport) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(report).map_err(std::io::Error::other)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}
