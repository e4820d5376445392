//! Scenario-file schema (TOML), dotted-path overrides, and validation
//! into a runnable [`Scenario`].

use serde::{Deserialize, Serialize};

use crate::filters::{FilterConfig, FilterKind, WeightMatrix};
use crate::model::{Barrier, Obstacle};
use crate::scalarfuncs::{ClassK, ClassKForm, GateParams, PenaltyParams, TransitionKind};
use crate::sim::{GainSet, Scenario, SystemKind};

/// Validation failure naming the offending key.
#[derive(Debug, Clone, thiserror::Error)]
#[error("invalid scenario: key `{key}`: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(key: &str, message: impl Into<String>) -> Self {
        ConfigError { key: key.to_string(), message: message.into() }
    }
}

fn default_dt() -> f64 {
    1e-3
}

fn default_psi_max() -> f64 {
    1e12
}

/// On-disk scenario document. Units: lengths in meters, times in seconds,
/// angles in radians, gains in 1/s (velocity level) or 1/s^2.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub system: SystemKind,
    pub goal: Vec<f64>,
    pub x0: Vec<f64>,
    pub duration: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub feedforward: bool,
    pub obstacles: Vec<ObstacleSpec>,
    #[serde(default)]
    pub gains: GainsSpec,
    pub filter: FilterSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSpec {
    pub center: Vec<f64>,
    pub radius: f64,
    #[serde(default)]
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GainsSpec {
    pub k: f64,
    pub k_p: f64,
    pub k_v: f64,
    pub k_theta: f64,
    pub k_omega: f64,
    pub mass: f64,
    pub inertia: f64,
    pub gravity: f64,
}

impl Default for GainsSpec {
    fn default() -> Self {
        let g = GainSet::default();
        GainsSpec {
            k: g.k,
            k_p: g.k_p,
            k_v: g.k_v,
            k_theta: g.k_theta,
            k_omega: g.k_omega,
            mass: g.mass,
            inertia: g.inertia,
            gravity: g.gravity,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSpec {
    pub kind: FilterKind,
    /// Weighting matrix rows; identity when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub gate: GateSpec,
    #[serde(default)]
    pub classk: ClassKSpec,
    #[serde(default)]
    pub penalty: PenaltySpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GateSpec {
    pub epsilon: f64,
    pub delta: f64,
    pub transition: TransitionKind,
}

impl Default for GateSpec {
    fn default() -> Self {
        GateSpec { epsilon: 0.5, delta: 2.0, transition: TransitionKind::Cubic }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassKSpec {
    pub alpha0: f64,
}

impl Default for ClassKSpec {
    fn default() -> Self {
        ClassKSpec { alpha0: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PenaltySpec {
    pub delta: f64,
    pub mu: f64,
    pub psi_max: f64,
    pub transition: TransitionKind,
}

impl Default for PenaltySpec {
    fn default() -> Self {
        PenaltySpec {
            delta: 2.0,
            mu: 1.0,
            psi_max: default_psi_max(),
            transition: TransitionKind::Cubic,
        }
    }
}

/// Parse TOML text into the raw document (no validation yet).
pub fn parse_toml(text: &str) -> Result<toml::Value, ConfigError> {
    text.parse::<toml::Value>()
        .map_err(|e| ConfigError::new("<document>", e.to_string()))
}

/// Apply one dotted-path override, e.g. `filter.kind=ClassicalQP` or
/// `dt=5e-4`. The raw value is parsed as TOML; anything that does not
/// parse is taken as a string.
pub fn apply_override(doc: &mut toml::Value, spec: &str) -> Result<(), ConfigError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| ConfigError::new(spec, "override must be key=value"))?;
    let value = parse_override_value(raw.trim());
    let mut node = doc;
    let parts: Vec<&str> = path.trim().split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = node
            .as_table_mut()
            .ok_or_else(|| ConfigError::new(path, "path traverses a non-table value"))?;
        if i + 1 == parts.len() {
            table.insert(part.to_string(), value);
            return Ok(());
        }
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    unreachable!()
}

fn parse_override_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Value>()
        .ok()
        .and_then(|t| t.get("v").cloned())
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Deserialize the (possibly overridden) document; unknown keys are errors.
pub fn from_value(doc: toml::Value) -> Result<ScenarioFile, ConfigError> {
    ScenarioFile::deserialize(doc).map_err(|e| ConfigError::new("<document>", e.to_string()))
}

/// Parse, apply overrides, deserialize.
pub fn load(text: &str, overrides: &[String]) -> Result<ScenarioFile, ConfigError> {
    let mut doc = parse_toml(text)?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    from_value(doc)
}

impl ScenarioFile {
    /// Validate every cross-field constraint and build the runnable scenario.
    pub fn into_scenario(&self) -> Result<Scenario, ConfigError> {
        if !(self.dt > 0.0) {
            return Err(ConfigError::new("dt", "requires dt > 0"));
        }
        if self.duration < self.dt {
            return Err(ConfigError::new("duration", "requires duration >= dt"));
        }
        if self.x0.len() != self.system.state_dim() {
            return Err(ConfigError::new(
                "x0",
                format!(
                    "system {} needs {} state entries, got {}",
                    self.system.name(),
                    self.system.state_dim(),
                    self.x0.len()
                ),
            ));
        }
        if self.goal.len() != 2 {
            return Err(ConfigError::new("goal", "must be a 2-D position"));
        }
        if self.x0.iter().chain(&self.goal).any(|v| !v.is_finite()) {
            return Err(ConfigError::new("x0", "entries must be finite"));
        }
        if self.obstacles.is_empty() {
            return Err(ConfigError::new("obstacles", "at least one obstacle required"));
        }
        let mut barriers = Vec::new();
        for (i, o) in self.obstacles.iter().enumerate() {
            let key = format!("obstacles[{i}]");
            if o.center.len() != 2 {
                return Err(ConfigError::new(&key, "center must be 2-D"));
            }
            if !(o.radius > 0.0) {
                return Err(ConfigError::new(&key, "Obstacle requires radius > 0"));
            }
            if !(o.margin >= 0.0) {
                return Err(ConfigError::new(&key, "Obstacle requires margin >= 0"));
            }
            barriers.push(Barrier::new(Obstacle {
                center: o.center.clone(),
                radius: o.radius,
                margin: o.margin,
            }));
        }

        let g = &self.filter.gate;
        if !(g.epsilon > 0.0 && g.delta > g.epsilon) {
            return Err(ConfigError::new(
                "filter.gate",
                "GateParams requires 0 < epsilon < delta",
            ));
        }
        if !(self.filter.classk.alpha0 > 0.0) {
            return Err(ConfigError::new("filter.classk.alpha0", "requires alpha0 > 0"));
        }
        let p = &self.filter.penalty;
        if !(p.delta > 0.0 && p.mu > 0.0 && p.psi_max > 0.0) {
            return Err(ConfigError::new(
                "filter.penalty",
                "PenaltyParams requires delta > 0, mu > 0, psi_max > 0",
            ));
        }
        let weight = match &self.filter.weight {
            None => WeightMatrix::identity(2),
            Some(rows) => WeightMatrix::new(rows.clone())
                .map_err(|e| ConfigError::new("filter.weight", e.to_string()))?,
        };
        if weight.dim() != 2 {
            return Err(ConfigError::new("filter.weight", "must be 2x2"));
        }
        if self.feedforward && !self.filter.kind.is_smooth() {
            return Err(ConfigError::new(
                "feedforward",
                "feedforward requires a smooth filter kind (Penalty or StabilizedPenalty)",
            ));
        }
        if !self.filter.kind.is_smooth() && self.obstacles.len() > 1 {
            return Err(ConfigError::new(
                "filter.kind",
                "QP filter kinds support a single obstacle",
            ));
        }
        let gains = GainSet {
            k: self.gains.k,
            k_p: self.gains.k_p,
            k_v: self.gains.k_v,
            k_theta: self.gains.k_theta,
            k_omega: self.gains.k_omega,
            mass: self.gains.mass,
            inertia: self.gains.inertia,
            gravity: self.gains.gravity,
        };
        gains
            .validate()
            .map_err(|e| ConfigError::new("gains", e.to_string()))?;

        let filter = FilterConfig {
            kind: self.filter.kind,
            weight,
            gate: GateParams {
                epsilon: g.epsilon,
                delta: g.delta,
                transition: g.transition,
            },
            classk: ClassK { alpha0: self.filter.classk.alpha0, form: ClassKForm::Linear },
            penalty: PenaltyParams {
                delta: p.delta,
                mu: p.mu,
                psi_max: p.psi_max,
                transition: p.transition,
            },
        };

        let sc = Scenario {
            system: self.system,
            barriers,
            goal: self.goal.clone(),
            x0: self.x0.clone(),
            gains,
            filter,
            duration: self.duration,
            dt: self.dt,
            feedforward: self.feedforward,
        };
        sc.validate()
            .map_err(|e| ConfigError::new("scenario", e.to_string()))?;
        Ok(sc)
    }
}
