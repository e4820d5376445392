//! Command-line front end: run scenarios, evaluate the filter at a single
//! state, and compare filter kinds on the same scenario.
//!
//! Exit codes: 0 all invariant verdicts pass, 1 invariant failure,
//! 2 configuration/validation error, 3 runtime simulation error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use safety_filters::config::{self, ScenarioFile};
use safety_filters::report::{self, RunReport, GOAL_TOL};
use safety_filters::sim::{self, Metrics, TrajectoryLog};
use safety_filters::{FilterKind, SafetyPipeline};

#[derive(Parser)]
#[command(
    name = "safety-filters",
    about = "Obstacle-avoidance safety filters: simulate, evaluate, compare",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file (TOML).
    scenario: PathBuf,
    /// Dotted-path overrides, e.g. --set filter.kind=Penalty (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Override the integration step.
    #[arg(long)]
    dt: Option<f64>,
    /// Override the simulated duration.
    #[arg(long)]
    duration: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario; write trajectory CSV and report JSON.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Evaluate the filter once at a given state; print JSON.
    Eval {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// State vector, comma-separated (dimension must match the system).
        #[arg(long, value_name = "X1,X2,...", allow_hyphen_values = true)]
        state: String,
    },
    /// Run the same scenario under several filter kinds and compare.
    Compare {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Filter kinds, comma-separated (at least two).
        #[arg(long, value_name = "KIND,KIND,...", value_delimiter = ',')]
        kinds: Vec<String>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

/// Print to stdout, tolerating a closed pipe (e.g. piping into `head`).
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

enum CliError {
    /// Exit 2: bad configuration or arguments; message names the key.
    Config(String),
    /// Exit 3: failure while simulating; message names time and cause.
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => m,
        }
    }
}

fn load_scenario(args: &ScenarioArgs) -> Result<ScenarioFile, CliError> {
    let text = std::fs::read_to_string(&args.scenario)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.scenario.display())))?;
    let mut overrides = args.overrides.clone();
    if let Some(dt) = args.dt {
        overrides.push(format!("dt={dt}"));
    }
    if let Some(d) = args.duration {
        overrides.push(format!("duration={d}"));
    }
    config::load(&text, &overrides).map_err(|e| CliError::Config(e.to_string()))
}

fn simulate(file: &ScenarioFile) -> Result<TrajectoryLog, CliError> {
    let sc = file
        .into_scenario()
        .map_err(|e| CliError::Config(e.to_string()))?;
    sim::run(&sc).map_err(|e| CliError::Runtime(e.to_string()))
}

fn write_run_outputs(
    out: &Path,
    file: &ScenarioFile,
    log: &TrajectoryLog,
) -> Result<RunReport, CliError> {
    let csv_path = out.join("trajectory.csv");
    let json_path = out.join("report.json");
    report::write_csv(&csv_path, log)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", csv_path.display())))?;
    let rep = report::build_report(file, log, GOAL_TOL);
    let mut doc = serde_json::to_value(&rep).expect("report serializes");
    doc["files"] = serde_json::json!({
        "trajectory": csv_path.display().to_string(),
        "report": json_path.display().to_string(),
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
    text.push('\n');
    report::write_atomic(&json_path, text.as_bytes())
        .map_err(|e| CliError::Runtime(format!("{}: {e}", json_path.display())))?;
    Ok(rep)
}

fn cmd_run(args: &ScenarioArgs, out: &Path) -> Result<u8, CliError> {
    let file = load_scenario(args)?;
    let log = simulate(&file)?;
    let rep = write_run_outputs(out, &file, &log)?;
    say!(
        "steps: {}  min_h: {:.6}  goal_error: {:.6}  violations: {}",
        rep.steps, rep.metrics.min_h, rep.metrics.goal_error_final, rep.metrics.violations
    );
    say!(
        "invariance: {}  reached_goal: {}",
        verdict(rep.verdicts.invariance),
        verdict(rep.verdicts.reached_goal)
    );
    say!("wrote {}", out.join("trajectory.csv").display());
    say!("wrote {}", out.join("report.json").display());
    Ok(if rep.verdicts.invariance && rep.verdicts.reached_goal { 0 } else { 1 })
}

fn verdict(pass: bool) -> &'static str {
    if pass { "pass" } else { "FAIL" }
}

#[derive(Serialize)]
struct EvalOutput {
    u_star: Vec<f64>,
    h: f64,
    sigma: f64,
    gate_or_psi: f64,
    correction: Vec<f64>,
    correction_norm: f64,
    constraint_active: bool,
}

fn cmd_eval(args: &ScenarioArgs, state: &str) -> Result<u8, CliError> {
    let file = load_scenario(args)?;
    let sc = file
        .into_scenario()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let x: Vec<f64> = state
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Config(format!("--state: {e}")))?;
    if x.len() != sc.system.state_dim() {
        return Err(CliError::Config(format!(
            "--state: system {} needs {} entries, got {}",
            sc.system.name(),
            sc.system.state_dim(),
            x.len()
        )));
    }
    let pipe = SafetyPipeline::new(&sc.filter, &sc.barriers, &sc.goal, sc.gains.k)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let out = pipe
        .output(&x[0..2])
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let doc = EvalOutput {
        correction_norm: safety_filters::linalg::norm(&out.correction),
        u_star: out.u_star,
        h: out.h,
        sigma: out.sigma,
        gate_or_psi: out.gate_or_psi,
        correction: out.correction,
        constraint_active: out.constraint_active,
    };
    say!("{}", serde_json::to_string_pretty(&doc).expect("serializes"));
    Ok(0)
}

#[derive(Serialize)]
struct CompareEntry {
    kind: String,
    metrics: Metrics,
    invariance: bool,
}

fn cmd_compare(args: &ScenarioArgs, kinds: &[String], out: &Path) -> Result<u8, CliError> {
    if kinds.len() < 2 {
        return Err(CliError::Config(
            "--kinds: at least two filter kinds required".into(),
        ));
    }
    let parsed: Vec<FilterKind> = kinds
        .iter()
        .map(|k| {
            k.parse::<FilterKind>()
                .map_err(|e| CliError::Config(format!("--kinds: {e}")))
        })
        .collect::<Result<_, _>>()?;

    let mut logs = Vec::new();
    let mut entries = Vec::new();
    for kind in &parsed {
        let mut sub = args.overrides.clone();
        sub.push(format!("filter.kind=\"{}\"", kind.name()));
        let per_kind = ScenarioArgs {
            scenario: args.scenario.clone(),
            overrides: sub,
            dt: args.dt,
            duration: args.duration,
        };
        let file = load_scenario(&per_kind)?;
        let log = simulate(&file)?;
        let metrics = sim::compute_metrics(&log);
        entries.push(CompareEntry {
            kind: kind.name().to_string(),
            invariance: report::invariance_verdict(&log),
            metrics,
        });
        logs.push(log);
    }

    let csv_path = out.join("compare.csv");
    report::write_atomic(&csv_path, merged_csv(&parsed, &logs).as_bytes())
        .map_err(|e| CliError::Runtime(format!("{}: {e}", csv_path.display())))?;
    let json_path = out.join("compare.json");
    let mut text =
        serde_json::to_string_pretty(&serde_json::json!({ "kinds": entries })).expect("serializes");
    text.push('\n');
    report::write_atomic(&json_path, text.as_bytes())
        .map_err(|e| CliError::Runtime(format!("{}: {e}", json_path.display())))?;

    say!(
        "{:<20} {:>12} {:>12} {:>14} {:>12}",
        "kind", "min_h", "goal_error", "ctrl_rate_max", "track_rms"
    );
    for e in &entries {
        say!(
            "{:<20} {:>12.6} {:>12.6} {:>14.4} {:>12}",
            e.kind,
            e.metrics.min_h,
            e.metrics.goal_error_final,
            e.metrics.control_rate_max,
            e.metrics
                .velocity_tracking_rms
                .map(|v| format!("{v:.6}"))
                .unwrap_or_else(|| "-".into()),
        );
    }
    say!("wrote {}", csv_path.display());
    say!("wrote {}", json_path.display());
    Ok(if entries.iter().all(|e| e.invariance) { 0 } else { 1 })
}

/// All runs share one time grid, so columns can be merged side by side.
fn merged_csv(kinds: &[FilterKind], logs: &[TrajectoryLog]) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("t");
    let m = logs[0].steps[0].control.len();
    let n_obs = logs[0].steps[0].h_per_obstacle.len();
    for kind in kinds {
        let p = kind.name();
        for i in 1..=m {
            write!(out, ",{p}_u{i}").unwrap();
        }
        for i in 1..=n_obs {
            write!(out, ",{p}_h_{i}").unwrap();
        }
        write!(out, ",{p}_correction_norm").unwrap();
    }
    out.push('\n');
    let rows = logs.iter().map(|l| l.steps.len()).min().unwrap();
    for r in 0..rows {
        write!(out, "{:.16e}", logs[0].steps[r].t).unwrap();
        for log in logs {
            let s = &log.steps[r];
            for v in s.control.iter().chain(&s.h_per_obstacle) {
                write!(out, ",{v:.16e}").unwrap();
            }
            let c = safety_filters::linalg::norm(&s.filter.correction);
            write!(out, ",{c:.16e}").unwrap();
        }
        out.push('\n');
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { scenario, out } => cmd_run(scenario, out),
        Command::Eval { scenario, state } => cmd_eval(scenario, state),
        Command::Compare { scenario, kinds, out } => cmd_compare(scenario, kinds, out),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
