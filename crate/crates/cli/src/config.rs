//! Experiment configuration: one JSON document per run, with per-command
//! defaults and dotted-path overrides.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

use efw_core::dynamics::DecayConvention;
use efw_core::geometry::{DirectionGrid, DEFAULT_MIN_SEPARATION};
use efw_core::oracle::{Control, FuzzOptions};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

/// The five experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Fig1Sphere,
    DickeSweep,
    Decay,
    CumulantTent,
    Fuzz,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Fig1Sphere => "fig1-sphere",
            Command::DickeSweep => "dicke-sweep",
            Command::Decay => "decay",
            Command::CumulantTent => "cumulant-tent",
            Command::Fuzz => "fuzz",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryKind {
    Chain,
    Cloud,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    #[serde(rename = "type")]
    pub kind: GeometryKind,
    pub n: usize,
    /// Chain spacing in units of 1/k.
    pub spacing: f64,
    /// Cloud radius in units of 1/k.
    pub radius: f64,
    pub seed: u64,
    pub min_separation: f64,
    /// Common dipole orientation, normalized on use.
    pub polarization: [f64; 3],
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            kind: GeometryKind::Chain,
            n: 8,
            spacing: 0.3,
            radius: 2.0,
            seed: 7,
            min_separation: DEFAULT_MIN_SEPARATION,
            polarization: [0.0, 0.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    /// `(|↑↑↓⟩ + e^{iΛ}|↓↑↑⟩ + e^{2iΛ}|↓↓↑⟩)/√3`
    Eq5,
    Dicke,
    Excited,
    Mixed,
    Antisym,
    CustomProduct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Auto {
    Auto,
}

/// Chebyshev parameter of the Dicke phases: a number or `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaSpec {
    Auto(Auto),
    Value(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    pub kind: StateKind,
    pub lambda: f64,
    /// Explicit Dicke phases; overrides `delta`.
    pub phases: Option<Vec<f64>>,
    pub delta: DeltaSpec,
    /// `(θ, φ)` per atom for `custom_product`.
    pub bloch_angles: Option<Vec<[f64; 2]>>,
}

impl Default for StateConfig {
    fn default() -> Self {
        Self {
            kind: StateKind::Antisym,
            lambda: FRAC_PI_3,
            phases: None,
            delta: DeltaSpec::Auto(Auto::Auto),
            bloch_angles: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectionsConfig {
    pub grid: DirectionGrid,
    pub chi: f64,
}

impl Default for DirectionsConfig {
    fn default() -> Self {
        Self { grid: DirectionGrid::PlaneSweep { n_angles: 64 }, chi: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeSpacing {
    /// `samples` points evenly from 0 to `t_max`.
    Linear,
    /// 0, then `samples − 1` points geometric from `t_first` to `t_max`.
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub t_max: f64,
    pub rtol: f64,
    pub atol: f64,
    pub samples: usize,
    pub spacing: TimeSpacing,
    pub t_first: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { t_max: 10.0, rtol: 1e-8, atol: 1e-10, samples: 201, spacing: TimeSpacing::Linear, t_first: 1e-4 }
    }
}

impl IntegratorConfig {
    pub fn times(&self) -> Result<Vec<f64>, CliError> {
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return Err(CliError::Config(format!("integrator.t_max must be positive, got {}", self.t_max)));
        }
        if self.samples < 2 {
            return Err(CliError::Config("integrator.samples must be at least 2".into()));
        }
        let last = (self.samples - 1) as f64;
        Ok(match self.spacing {
            TimeSpacing::Linear => (0..self.samples).map(|i| self.t_max * i as f64 / last).collect(),
            TimeSpacing::Log => {
                if !(self.t_first > 0.0 && self.t_first < self.t_max) {
                    return Err(CliError::Config("integrator.t_first must lie in (0, t_max)".into()));
                }
                if self.samples == 2 {
                    return Ok(vec![0.0, self.t_max]);
                }
                let ratio = (self.t_max / self.t_first).ln();
                std::iter::once(0.0)
                    .chain((0..self.samples - 1).map(|i| self.t_first * (ratio * i as f64 / (last - 1.0)).exp()))
                    .collect()
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessConfig {
    /// Detection threshold; `null` means `1e-6·N`.
    pub epsilon: Option<f64>,
    /// Minimize over the quadrature angle at each direction.
    pub chi_optimize: bool,
    pub n_chi: usize,
    /// `C_glob` level that counts as finite concurrence.
    pub concurrence_threshold: f64,
}

impl Default for WitnessConfig {
    fn default() -> Self {
        Self { epsilon: None, chi_optimize: false, n_chi: 32, concurrence_threshold: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TentConfig {
    pub n: Vec<usize>,
    pub kd: Vec<f64>,
    /// Observation angle from the chain axis, in units of π.
    pub theta_over_pi: f64,
}

impl Default for TentConfig {
    fn default() -> Self {
        Self { n: vec![4, 8, 12, 16], kd: vec![0.2, 0.3, 0.5, 0.8], theta_over_pi: 0.45 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuzzConfig {
    pub n_min: usize,
    pub n_max: usize,
    pub trials: usize,
    pub max_terms: usize,
    pub dirs_per_trial: usize,
    pub chi_per_trial: usize,
    pub cloud_radius: f64,
    pub seed: u64,
    pub controls: Vec<Control>,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        let o = FuzzOptions::default();
        Self {
            n_min: o.n_min,
            n_max: o.n_max,
            trials: o.trials,
            max_terms: o.max_terms,
            dirs_per_trial: o.dirs_per_trial,
            chi_per_trial: o.chi_per_trial,
            cloud_radius: o.cloud_radius,
            seed: o.seed,
            controls: vec![Control::Ground, Control::Bell],
        }
    }
}

impl FuzzConfig {
    pub fn options(&self) -> FuzzOptions {
        FuzzOptions {
            n_min: self.n_min,
            n_max: self.n_max,
            trials: self.trials,
            max_terms: self.max_terms,
            dirs_per_trial: self.dirs_per_trial,
            chi_per_trial: self.chi_per_trial,
            cloud_radius: self.cloud_radius,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geometry: GeometryConfig,
    pub state: StateConfig,
    pub directions: DirectionsConfig,
    pub integrator: IntegratorConfig,
    pub witness: WitnessConfig,
    pub convention: DecayConvention,
    pub tent: TentConfig,
    pub fuzz: FuzzConfig,
}

impl ExperimentConfig {
    /// Defaults reproducing the corresponding figure.
    pub fn defaults_for(cmd: Command) -> Self {
        let mut c = Self::default();
        match cmd {
            Command::Fig1Sphere => {
                c.geometry.n = 3;
                c.state.kind = StateKind::Eq5;
                c.directions.grid = DirectionGrid::Sphere { n_theta: 64, n_phi: 128 };
            }
            Command::DickeSweep => {
                c.geometry.n = 100;
                c.geometry.spacing = FRAC_PI_2;
                c.state.kind = StateKind::Dicke;
                c.directions.grid = DirectionGrid::PlaneSweep { n_angles: 512 };
            }
            Command::Decay => {
                c.state.kind = StateKind::Excited;
            }
            Command::CumulantTent => {
                c.integrator.t_max = 1.0;
                c.integrator.samples = 401;
                c.integrator.spacing = TimeSpacing::Log;
                c.integrator.t_first = 1e-7;
            }
            Command::Fuzz => {}
        }
        c
    }

    /// Defaults for `cmd`, overlaid with `file` (if any) and then the
    /// `key.path=value` overrides. Unknown keys are rejected.
    pub fn resolve(cmd: Command, file: Option<&str>, overrides: &[String]) -> Result<Self, CliError> {
        let mut doc = serde_json::to_value(Self::defaults_for(cmd)).expect("defaults serialize");
        if let Some(text) = file {
            let user: Value =
                serde_json::from_str(text).map_err(|e| CliError::Config(format!("config is not valid JSON: {e}")))?;
            merge(&mut doc, user);
        }
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        serde_json::from_value(doc).map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Deep merge. A direction grid of a different `kind` replaces the default
/// rather than merging into it, since its fields depend on the variant.
fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() && (k != "grid" || same_kind(slot, &v)) => {
                        merge(slot, v)
                    }
                    Some(slot) => *slot = v,
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

fn same_kind(a: &Value, b: &Value) -> bool {
    match (a.get("kind"), b.get("kind")) {
        (Some(x), Some(y)) => x == y,
        _ => true,
    }
}

/// `a.b.c=value`, where `value` is parsed as JSON and falls back to a string.
fn apply_override(doc: &mut Value, spec: &str) -> Result<(), CliError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{spec}` is not of the form key.path=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Config(format!("bad override path `{path}`")));
    }
    let mut node = doc;
    for k in &keys[..keys.len() - 1] {
        node = node
            .as_object_mut()
            .and_then(|m| m.get_mut(*k))
            .ok_or_else(|| CliError::Config(format!("unknown config key `{path}`")))?;
    }
    let last = keys[keys.len() - 1];
    let map = node.as_object_mut().ok_or_else(|| CliError::Config(format!("`{path}` does not name a field")))?;
    match map.get_mut(last) {
        Some(slot) if slot.is_object() && value.is_object() && (last != "grid" || same_kind(slot, &value)) => {
            merge(slot, value)
        }
        Some(slot) => *slot = value,
        None => return Err(CliError::Config(format!("unknown config key `{path}`"))),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        for cmd in [Command::Fig1Sphere, Command::DickeSweep, Command::Decay, Command::CumulantTent, Command::Fuzz] {
            let c = ExperimentConfig::resolve(cmd, None, &[]).unwrap();
            assert_eq!(c, ExperimentConfig::defaults_for(cmd));
        }
    }

    #[test]
    fn overrides_and_files() {
        let c = ExperimentConfig::resolve(
            Command::Decay,
            Some(r#"{"geometry": {"type": "cloud"}, "state": {"kind": "mixed"}}"#),
            &["geometry.radius=3.5".into(), "convention=literal".into(), "witness.epsilon=0.01".into()],
        )
        .unwrap();
        assert_eq!(c.geometry.kind, GeometryKind::Cloud);
        assert_eq!(c.geometry.radius, 3.5);
        assert_eq!(c.state.kind, StateKind::Mixed);
        assert_eq!(c.convention, DecayConvention::Literal);
        assert_eq!(c.witness.epsilon, Some(0.01));
    }

    #[test]
    fn grid_kind_switch_replaces_block() {
        let c = ExperimentConfig::resolve(
            Command::Fig1Sphere,
            None,
            &[r#"directions.grid={"kind":"plane_sweep","n_angles":5}"#.into()],
        )
        .unwrap();
        assert_eq!(c.directions.grid, DirectionGrid::PlaneSweep { n_angles: 5 });
        let c = ExperimentConfig::resolve(Command::DickeSweep, None, &["state.delta=0.5".into()]).unwrap();
        assert_eq!(c.state.delta, DeltaSpec::Value(0.5));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::resolve(Command::Decay, Some(r#"{"geometry": {"spacingg": 1}}"#), &[]).is_err());
        assert!(ExperimentConfig::resolve(Command::Decay, Some(r#"{"extra": 1}"#), &[]).is_err());
        assert!(ExperimentConfig::resolve(Command::Decay, None, &["geometry.nope=1".into()]).is_err());
        assert!(ExperimentConfig::resolve(Command::Decay, None, &["geometry".into()]).is_err());
        assert!(ExperimentConfig::resolve(Command::Decay, None, &["state.kind=wrong".into()]).is_err());
        assert!(ExperimentConfig::resolve(Command::Decay, Some("{"), &[]).is_err());
    }

    #[test]
    fn time_grids() {
        let lin = IntegratorConfig { t_max: 1.0, samples: 5, ..Default::default() }.times().unwrap();
        assert_eq!(lin, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let log =
            IntegratorConfig { t_max: 1.0, samples: 4, spacing: TimeSpacing::Log, t_first: 0.01, ..Default::default() }
                .times()
                .unwrap();
        assert_eq!(log.len(), 4);
        assert_eq!(log[0], 0.0);
        assert!((log[1] - 0.01).abs() < 1e-15 && (log[2] - 0.1).abs() < 1e-12 && (log[3] - 1.0).abs() < 1e-12);
        assert!(IntegratorConfig { samples: 1, ..Default::default() }.times().is_err());
    }
}
