//! Experiment configuration and its three layers: preset, file, flags.

use std::fmt;
use std::path::{Path, PathBuf};

use krf_core::decay::DecayQuantity;
use krf_core::flow::{BoundaryKind, Scheme, SolitonOptions};
use krf_core::models::RegimeSpec;
use krf_core::BaseGeometry;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::presets;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    FlatCone,
    CylinderSplit,
    BulgingPreserve,
    BulgingBlowdown,
    ConicalPreserve,
    ConicalSoliton,
    FikSelfsimilar,
    DecayAppendix,
    BilipschitzPlateau,
}

impl Preset {
    pub const ALL: [Preset; 9] = [
        Preset::FlatCone,
        Preset::CylinderSplit,
        Preset::BulgingPreserve,
        Preset::BulgingBlowdown,
        Preset::ConicalPreserve,
        Preset::ConicalSoliton,
        Preset::FikSelfsimilar,
        Preset::DecayAppendix,
        Preset::BilipschitzPlateau,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::FlatCone => "flat-cone",
            Preset::CylinderSplit => "cylinder-split",
            Preset::BulgingPreserve => "bulging-preserve",
            Preset::BulgingBlowdown => "bulging-blowdown",
            Preset::ConicalPreserve => "conical-preserve",
            Preset::ConicalSoliton => "conical-soliton",
            Preset::FikSelfsimilar => "fik-selfsimilar",
            Preset::DecayAppendix => "decay-appendix",
            Preset::BilipschitzPlateau => "bilipschitz-plateau",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    pub base: BaseGeometry,
    pub regime: RegimeSpec,
    pub grid: GridConfig,
    pub flow: FlowConfig,
    #[serde(default)]
    pub analysis: Analysis,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub rho_min: f64,
    pub rho_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub horizon: f64,
    /// `null` picks the step from the stability bound.
    #[serde(default)]
    pub dt: Option<f64>,
    pub scheme: Scheme,
    pub bc_kind: BoundaryKind,
    /// Stored times besides 0 and the horizon.
    #[serde(default)]
    pub output_times: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Analysis {
    pub tolerances: Tolerances,
    pub asymptotics: AsymptoticsAnalysis,
    pub soliton: SolitonAnalysis,
    pub blowdown: BlowdownAnalysis,
    pub decay: DecayAnalysis,
    pub plateau: PlateauAnalysis,
    pub fik: FikAnalysis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Bound on Ricci, scalar and full curvature of a flat cone.
    pub curvature: f64,
    /// Sup drift of a stationary flow.
    pub stationary: f64,
    /// Deviation of a cylinder flow from its exact linear solution.
    pub cylinder: f64,
    /// Relative slack on residual decay slopes.
    pub residual_slope: f64,
    /// Relative error of the numeric blown-down w¹ coefficient.
    pub blowdown_w1: f64,
    /// Relative error of the numeric soliton's w coefficients.
    pub soliton_coefficients: f64,
    /// Defect of the numeric soliton profile.
    pub soliton_residual: f64,
    /// Sup error of the product limit at the largest scale.
    pub product_limit: f64,
    /// Largest ratio of product-limit errors, largest over smallest scale.
    pub monotone_ratio: f64,
    /// Relative drift of the fitted bulging leading coefficient.
    pub bulging_drift: f64,
    /// Relative drift of the fitted cone coefficient.
    pub cone_drift: f64,
    /// Relative error of the slope of the constant slot of φ.
    pub constant_slot: f64,
    /// Relative error of a fitted decay exponent.
    pub exponent: f64,
    /// Drift of a fitted decay exponent over time.
    pub exponent_drift: f64,
    /// Slack per derivative order in the derivative ladder.
    pub ladder: f64,
    /// Relative growth of sup |Rm| between the two largest horizons.
    pub plateau_growth: f64,
    /// Flow-equation residual of the self-similar family.
    pub fik_residual: f64,
    /// Deviation of the p = 1 family from the flat cone.
    pub flat_deviation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            curvature: 1e-6,
            stationary: 1e-8,
            cylinder: 1e-8,
            residual_slope: 0.05,
            blowdown_w1: 0.05,
            soliton_coefficients: 0.01,
            soliton_residual: 1e-8,
            product_limit: 0.02,
            monotone_ratio: 0.75,
            bulging_drift: 0.01,
            cone_drift: 0.01,
            constant_slot: 0.02,
            exponent: 0.05,
            exponent_drift: 0.05,
            ladder: 0.1,
            plateau_growth: 0.05,
            fik_residual: 1e-6,
            flat_deviation: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AsymptoticsAnalysis {
    /// ρ-window of the regime fits; `null` skips them.
    pub window: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolitonAnalysis {
    /// Truncation order of the formal series.
    pub order: usize,
    /// ρ-range sampled for the residual decay slopes.
    pub residual_window: (f64, f64),
    /// ρ-window for reading w coefficients off numeric profiles.
    pub coefficient_window: (f64, f64),
    pub numeric: SolitonOptions,
}

impl Default for SolitonAnalysis {
    fn default() -> Self {
        SolitonAnalysis {
            order: 3,
            residual_window: (8.0, 14.0),
            coefficient_window: (4.0, 8.0),
            numeric: SolitonOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlowdownAnalysis {
    /// `r` for bulging ends, `s` for conical ones.
    pub scales: Vec<f64>,
    pub rho_window: (f64, f64),
    pub time_window: (f64, f64),
    /// Rescaled slices per scale, evenly spaced over the time window.
    pub slices: usize,
}

impl Default for BlowdownAnalysis {
    fn default() -> Self {
        BlowdownAnalysis { scales: vec![4.0, 8.0], rho_window: (-0.2, 0.2), time_window: (0.0, 0.5), slices: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayCheck {
    pub quantity: DecayQuantity,
    /// Expected exponent at time 0; `null` only checks preservation.
    #[serde(default)]
    pub expected_exponent: Option<f64>,
    /// Derivative orders `1..=ladder_depth` checked against the ladder.
    #[serde(default)]
    pub ladder_depth: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayAnalysis {
    /// Distance window; `null` uses the outer third of the grid.
    pub window: Option<(f64, f64)>,
    /// Times compared with time 0.
    pub times: Vec<f64>,
    pub checks: Vec<DecayCheck>,
}

impl Default for DecayAnalysis {
    fn default() -> Self {
        DecayAnalysis { window: None, times: vec![1.0], checks: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlateauAnalysis {
    pub horizons: Vec<f64>,
    pub ball_window: (f64, f64),
    pub samples_per_unit_time: usize,
    pub c1_max: f64,
}

impl Default for PlateauAnalysis {
    fn default() -> Self {
        PlateauAnalysis { horizons: vec![1.0, 2.0, 4.0, 8.0], ball_window: (3.0, 8.0), samples_per_unit_time: 8, c1_max: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FikAnalysis {
    /// Times at which the family is checked against the flow equation.
    pub times: Vec<f64>,
    /// Step of the time difference in the residual.
    pub delta: f64,
    /// Blowdown scale for the p = 1 comparison.
    pub flat_scale: f64,
}

impl Default for FikAnalysis {
    fn default() -> Self {
        FikAnalysis { times: vec![0.5, 1.0, 2.0], delta: 1e-3, flat_scale: 2.0 }
    }
}

/// A configuration problem, located by its field path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "invalid configuration: {}", self.message)
        } else {
            write!(f, "invalid configuration at `{}`: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

/// Overrides from the command line, as `(dotted path, value)` pairs.
pub type Overrides = Vec<(String, Value)>;

/// Reads a JSON config file into an untyped tree.
pub fn read_layer(path: &Path) -> Result<Value, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text)
        .map_err(|e| ConfigError::new("", format!("{} is not valid JSON: {e}", path.display())))?;
    if !v.is_object() {
        return Err(ConfigError::new("", format!("{} must hold a JSON object", path.display())));
    }
    Ok(v)
}

/// Recursively merges `top` into `bottom`; objects merge key by key, any
/// other value replaces what was there.
pub fn merge(bottom: &mut Value, top: Value) {
    match (bottom, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Sets the dotted `path` in `tree`, creating objects on the way.
pub fn set_path(tree: &mut Value, path: &str, value: Value) -> Result<(), ConfigError> {
    let mut node = tree;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(ConfigError::new(path, "empty key in path"));
    }
    for (i, key) in keys.iter().enumerate() {
        if !node.is_object() {
            if node.is_null() {
                *node = Value::Object(Map::new());
            } else {
                return Err(ConfigError::new(keys[..i].join("."), "not an object"));
            }
        }
        let map = node.as_object_mut().expect("checked above");
        if i + 1 == keys.len() {
            map.insert(key.to_string(), value);
            return Ok(());
        }
        node = map.entry(key.to_string()).or_insert(Value::Null);
    }
    unreachable!("path has at least one key")
}

/// Parses a flag value: JSON when it parses, a plain string otherwise.
pub fn flag_value(text: &str) -> Value {
    serde_json::from_str(text).unwrap_or_else(|_| Value::String(text.to_string()))
}

/// Resolves the layers in order preset < file < flags. The preset is the one
/// given as a flag, else the one named in the file.
pub fn resolve(preset: Option<Preset>, file: Option<Value>, overrides: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    let file_preset = match file.as_ref().and_then(|f| f.get("preset")) {
        None | Some(Value::Null) => None,
        Some(v) => Some(
            serde_json::from_value::<Preset>(v.clone()).map_err(|e| ConfigError::new("preset", e.to_string()))?,
        ),
    };
    let chosen = preset.or(file_preset);
    let mut tree = match chosen {
        Some(p) => serde_json::to_value(presets::config(p)).expect("preset configs serialize"),
        None => Value::Object(Map::new()),
    };
    if let Some(f) = file {
        merge(&mut tree, f);
    }
    for (path, v) in overrides {
        set_path(&mut tree, path, v.clone())?;
    }
    if let Some(p) = chosen {
        set_path(&mut tree, "preset", Value::String(p.name().into()))?;
    }
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(tree).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::new(if path == "." { String::new() } else { path }, e.into_inner().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn window_ok(path: &str, w: (f64, f64)) -> Result<(), ConfigError> {
    if w.0.is_finite() && w.1.is_finite() && w.0 <= w.1 {
        Ok(())
    } else {
        Err(ConfigError::new(path, format!("window [{}, {}] must be finite and ordered", w.0, w.1)))
    }
}

fn positive(path: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(path, format!("must be positive, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.base.validate().map_err(|e| ConfigError::new("base", e.to_string()))?;
        self.regime.validate().map_err(|e| ConfigError::new("regime", e.to_string()))?;
        let g = &self.grid;
        if !(g.rho_min.is_finite() && g.rho_max.is_finite() && g.rho_min < g.rho_max) {
            return Err(ConfigError::new("grid", "need finite rho_min < rho_max"));
        }
        if g.points < krf_core::fd::MIN_POINTS {
            return Err(ConfigError::new(
                "grid.points",
                format!("need at least {} points, got {}", krf_core::fd::MIN_POINTS, g.points),
            ));
        }
        positive("flow.horizon", self.flow.horizon)?;
        if let Some(dt) = self.flow.dt {
            positive("flow.dt", dt)?;
        }
        if let Some((i, t)) = self.flow.output_times.iter().enumerate().find(|(_, t)| !(t.is_finite() && **t >= 0.0)) {
            return Err(ConfigError::new(format!("flow.output_times[{i}]"), format!("must be a nonnegative time, got {t}")));
        }
        let a = &self.analysis;
        if let Some(w) = a.asymptotics.window {
            window_ok("analysis.asymptotics.window", w)?;
        }
        if a.soliton.order < 1 {
            return Err(ConfigError::new("analysis.soliton.order", "must be at least 1"));
        }
        window_ok("analysis.soliton.residual_window", a.soliton.residual_window)?;
        window_ok("analysis.soliton.coefficient_window", a.soliton.coefficient_window)?;
        for (i, s) in a.blowdown.scales.iter().enumerate() {
            positive(&format!("analysis.blowdown.scales[{i}]"), *s)?;
        }
        window_ok("analysis.blowdown.rho_window", a.blowdown.rho_window)?;
        window_ok("analysis.blowdown.time_window", a.blowdown.time_window)?;
        if let Some(w) = a.decay.window {
            window_ok("analysis.decay.window", w)?;
        }
        window_ok("analysis.plateau.ball_window", a.plateau.ball_window)?;
        positive("analysis.fik.delta", a.fik.delta)?;
        positive("analysis.fik.flat_scale", a.fik.flat_scale)?;
        Ok(())
    }

    pub fn grid_points(&self) -> Vec<f64> {
        krf_core::uniform_grid(self.grid.rho_min, self.grid.rho_max, self.grid.points)
            .expect("validated grid")
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("configs serialize");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn presets_round_trip_bitwise() {
        for p in Preset::ALL {
            let cfg = presets::config(p);
            let text = cfg.to_json();
            let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
            assert_eq!(back, cfg, "{p}");
            assert_eq!(back.to_json(), text, "{p}");
            cfg.validate().unwrap();
        }
    }

    #[test]
    fn layers_apply_in_order() {
        let file = json!({"grid": {"points": 512}, "flow": {"horizon": 0.5}});
        let flags = vec![("flow.horizon".to_string(), json!(0.25))];
        let cfg = resolve(Some(Preset::FlatCone), Some(file), &flags).unwrap();
        let preset = presets::config(Preset::FlatCone);
        assert_eq!(cfg.grid.points, 512);
        assert_eq!(cfg.flow.horizon, 0.25);
        assert_eq!(cfg.grid.rho_max, preset.grid.rho_max);
        assert_eq!(cfg.preset, Some(Preset::FlatCone));
    }

    #[test]
    fn preset_named_in_the_file_is_used() {
        let file = json!({"preset": "cylinder-split", "grid": {"points": 64}});
        let cfg = resolve(None, Some(file), &Vec::new()).unwrap();
        assert_eq!(cfg.regime, presets::config(Preset::CylinderSplit).regime);
        assert_eq!(cfg.grid.points, 64);
    }

    #[test]
    fn errors_carry_the_field_path() {
        let e = resolve(Some(Preset::FlatCone), Some(json!({"grid": {"points": "many"}})), &Vec::new()).unwrap_err();
        assert_eq!(e.path, "grid.points");
        let e = resolve(Some(Preset::FlatCone), None, &vec![("flow.horizon".into(), json!(-1.0))]).unwrap_err();
        assert_eq!(e.path, "flow.horizon");
        let e = resolve(Some(Preset::FlatCone), Some(json!({"analysis": {"typo": 1}})), &Vec::new()).unwrap_err();
        assert!(e.path.starts_with("analysis"), "{e}");
        assert!(resolve(None, None, &Vec::new()).is_err());
    }

    #[test]
    fn flag_values_fall_back_to_strings() {
        assert_eq!(flag_value("3"), json!(3));
        assert_eq!(flag_value("[1, 2]"), json!([1, 2]));
        assert_eq!(flag_value("implicit_trapezoid"), json!("implicit_trapezoid"));
    }
}
