//! Scenario files: JSON schema, validation with field paths, conversion to
//! [`ScenarioSpec`].

use std::collections::BTreeMap;
use std::path::Path;

use lienard_core::analyzers::{AnalysisOptions, CycleOptions, DEFAULT_MIN_ZEROS, DEFAULT_RADII};
use lienard_core::expr::{Expr, Scope};
use lienard_core::kernel::{Kernel, KernelKind};
use lienard_core::lienard::{Family, ScenarioSpec, SpecError, Theorem, Tolerances};
use serde::{Deserialize, Serialize};

/// Malformed scenario, with the JSON path of the offending field.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

impl SchemaError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub family: Family,
    pub functions: BTreeMap<String, String>,
    /// Named constants usable inside expressions.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub constants: BTreeMap<String, f64>,
    pub kernel: KernelSpec,
    pub alpha: f64,
    pub x0: f64,
    pub y0: f64,
    pub t0: f64,
    pub t_end: f64,
    #[serde(default = "default_tolerances")]
    pub tolerances: TolerancesFile,
    #[serde(default = "default_escape")]
    pub escape_radius: f64,
    /// Grid step of the fractional solver.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default)]
    pub analysis: AnalysisFile,
}

fn default_tolerances() -> TolerancesFile {
    let t = Tolerances::default();
    TolerancesFile { rel: t.rel, abs: t.abs }
}

fn default_escape() -> f64 {
    1e6
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesFile {
    pub rel: f64,
    pub abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<KernelParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelParams {
    /// Expression in `t` and `alpha` for the `custom` kind.
    pub expr: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theorem: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oscillation: Option<OscillationFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundedness: Option<BoundednessFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilityFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle: Option<CycleFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillationFile {
    #[serde(default = "default_min_zeros")]
    pub min_zeros: usize,
}

fn default_min_zeros() -> usize {
    DEFAULT_MIN_ZEROS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundednessFile {
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
}

fn default_radii() -> Vec<f64> {
    DEFAULT_RADII.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityFile {
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
}

fn default_deltas() -> Vec<f64> {
    vec![0.01]
}

fn default_epsilon() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CycleFile {
    #[serde(default = "default_cycle_ics")]
    pub initial_conditions: Vec<[f64; 2]>,
    #[serde(default = "default_cycle_tol")]
    pub cycle_tol: f64,
}

fn default_cycle_ics() -> Vec<[f64; 2]> {
    vec![[0.1, 0.0], [4.0, 0.0]]
}

fn default_cycle_tol() -> f64 {
    CycleOptions::default().cycle_tol
}

/// Parses scenario JSON, reporting serde failures with their field path.
pub fn parse_scenario(text: &str) -> Result<ScenarioFile, SchemaError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let message = e.into_inner().to_string();
        // Missing keys are reported against their parent; name the key.
        let key = message
            .strip_prefix("missing field `")
            .and_then(|rest| rest.split('`').next());
        let path = match (path.as_str(), key) {
            (".", Some(k)) => k.to_string(),
            (".", None) => "<root>".to_string(),
            (_, Some(k)) => format!("{path}.{k}"),
            (_, None) => path,
        };
        SchemaError::new(path, message)
    })
}

pub fn load_scenario(path: &Path) -> Result<ScenarioFile, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|e| LoadError::Io(path.display().to_string(), e))?;
    Ok(parse_scenario(&text)?)
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {0}: {1}")]
    Io(String, std::io::Error),
    #[error(transparent)]
    Schema(#[from] SchemaError),
}

fn spec_error_path(e: &SpecError) -> String {
    match e {
        SpecError::UnknownFamily(_) => "family".into(),
        SpecError::MissingFunction { name, .. } => format!("functions.{name}"),
        SpecError::UnexpectedFunction { name, .. } | SpecError::Variable { name, .. } => {
            format!("functions.{name}")
        }
        SpecError::Order(_) => "alpha".into(),
        SpecError::InitialTime { .. } => "t0".into(),
        SpecError::Horizon { .. } => "t_end".into(),
        SpecError::Tolerances => "tolerances".into(),
        SpecError::EscapeRadius => "escape_radius".into(),
        SpecError::Step(_) => "step".into(),
        SpecError::InitialState => "x0".into(),
    }
}

impl ScenarioFile {
    pub fn kernel(&self) -> Result<Kernel, SchemaError> {
        match (self.kernel.kind.as_str(), &self.kernel.params) {
            ("custom", Some(p)) => {
                Kernel::custom(&p.expr).map_err(|e| SchemaError::new("kernel.params.expr", e.to_string()))
            }
            ("custom", None) => Err(SchemaError::new("kernel.params", "custom kernel needs params.expr")),
            (_, Some(_)) => Err(SchemaError::new("kernel.params", "only custom kernels take params")),
            (kind, None) => kind
                .parse::<KernelKind>()
                .map(Kernel::new)
                .map_err(|e| SchemaError::new("kernel.kind", e.to_string())),
        }
    }

    /// Parses every expression and validates the result.
    pub fn to_spec(&self) -> Result<ScenarioSpec, SchemaError> {
        let scope = Scope::default().with_constants(self.constants.iter().map(|(k, v)| (k.as_str(), *v)));
        let mut spec = ScenarioSpec::new(self.family)
            .kernel(self.kernel()?)
            .alpha(self.alpha)
            .initial(self.x0, self.y0)
            .span(self.t0, self.t_end)
            .tolerances(self.tolerances.rel, self.tolerances.abs)
            .escape_radius(self.escape_radius);
        spec.step = self.step;
        for (name, source) in &self.functions {
            let expr = Expr::parse_in(source, &scope)
                .map_err(|e| SchemaError::new(format!("functions.{name}"), e.to_string()))?;
            spec = spec.with_expr(name, expr);
        }
        spec.validate()
            .map_err(|e| SchemaError::new(spec_error_path(&e), e.to_string()))?;
        self.analysis_options()?;
        Ok(spec)
    }

    pub fn theorem(&self) -> Result<Option<Theorem>, SchemaError> {
        self.analysis
            .theorem
            .as_deref()
            .map(|t| t.parse::<Theorem>().map_err(|e| SchemaError::new("analysis.theorem", e)))
            .transpose()
    }

    pub fn analysis_options(&self) -> Result<AnalysisOptions, SchemaError> {
        let mut opts = AnalysisOptions::default();
        let a = &self.analysis;
        if let Some(o) = &a.oscillation {
            opts.min_zeros = o.min_zeros;
        }
        if let Some(b) = &a.boundedness {
            if b.radii.is_empty() || b.radii.iter().any(|r| !(*r > 0.0)) {
                return Err(SchemaError::new("analysis.boundedness.radii", "radii must be positive"));
            }
            opts.radii = b.radii.clone();
        }
        if let Some(s) = &a.stability {
            if s.deltas.is_empty() || s.deltas.iter().any(|d| !(*d > 0.0)) {
                return Err(SchemaError::new("analysis.stability.deltas", "radii must be positive"));
            }
            if !(s.epsilon > 0.0) {
                return Err(SchemaError::new("analysis.stability.epsilon", "must be positive"));
            }
            if s.horizon.is_some_and(|h| !(h > 0.0)) {
                return Err(SchemaError::new("analysis.stability.horizon", "must be positive"));
            }
            opts.deltas = s.deltas.clone();
            opts.epsilon = s.epsilon;
            opts.stability_horizon = s.horizon;
        }
        if let Some(c) = &a.cycle {
            if !(c.cycle_tol > 0.0) {
                return Err(SchemaError::new("analysis.cycle.cycle_tol", "must be positive"));
            }
            opts.cycle_ics = c.initial_conditions.clone();
            opts.cycle.cycle_tol = c.cycle_tol;
        }
        self.theorem()?;
        Ok(opts)
    }
}

/// Name of the environment variable holding tolerance overrides, as
/// `rel=<r>,abs=<a>` (either part may be omitted).
pub const TOLERANCE_ENV: &str = "LIENARD_TOLERANCES";

pub fn parse_tolerance_override(text: &str, base: TolerancesFile) -> Result<TolerancesFile, SchemaError> {
    let mut out = base;
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| SchemaError::new(TOLERANCE_ENV, format!("expected key=value, got `{part}`")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| SchemaError::new(TOLERANCE_ENV, format!("`{value}` is not a number")))?;
        match key.trim() {
            "rel" => out.rel = v,
            "abs" => out.abs = v,
            other => return Err(SchemaError::new(TOLERANCE_ENV, format!("unknown key `{other}`"))),
        }
    }
    Ok(out)
}

/// Applies [`TOLERANCE_ENV`] if set.
pub fn apply_env_override(file: &mut ScenarioFile) -> Result<(), SchemaError> {
    if let Ok(text) = std::env::var(TOLERANCE_ENV) {
        file.tolerances = parse_tolerance_override(&text, file.tolerances)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const VDP: &str = r#"{
        "family": "classical",
        "functions": {"f": "mu*(x^2 - 1)", "g": "x"},
        "constants": {"mu": 1.0},
        "kernel": {"kind": "ordinary"},
        "alpha": 0.5, "x0": 2.0, "y0": 0.0, "t0": 0.0, "t_end": 20.0
    }"#;

    #[test]
    fn parses_and_converts() {
        let file = parse_scenario(VDP).unwrap();
        let spec = file.to_spec().unwrap();
        assert_eq!(spec.family, Family::Classical);
        assert_eq!(spec.tolerances, Tolerances::default());
    }

    #[test]
    fn field_paths_in_errors() {
        let missing = VDP.replace(r#", "g": "x""#, "");
        let err = parse_scenario(&missing).unwrap().to_spec().unwrap_err();
        assert_eq!(err.path, "functions.g");

        let wrong_type = VDP.replace(r#""x0": 2.0"#, r#""x0": "two""#);
        assert_eq!(parse_scenario(&wrong_type).unwrap_err().path, "x0");

        let unknown_kernel = VDP.replace("ordinary", "hyperbolic");
        let err = parse_scenario(&unknown_kernel).unwrap().to_spec().unwrap_err();
        assert_eq!(err.path, "kernel.kind");

        let extra = VDP.replace(r#""alpha""#, r#""colour": 1, "alpha""#);
        assert_eq!(parse_scenario(&extra).unwrap_err().path, "colour");

        let nested = VDP.replace(r#"{"kind": "ordinary"}"#, r#"{"kind": "ordinary", "shape": 2}"#);
        assert_eq!(parse_scenario(&nested).unwrap_err().path, "kernel.shape");

        let no_end = VDP.replace(r#", "t_end": 20.0"#, "");
        assert_eq!(parse_scenario(&no_end).unwrap_err().path, "t_end");
    }

    #[test]
    fn tolerance_override() {
        let base = TolerancesFile { rel: 1e-8, abs: 1e-10 };
        let t = parse_tolerance_override("rel=1e-6, abs=1e-9", base).unwrap();
        assert_eq!((t.rel, t.abs), (1e-6, 1e-9));
        assert_eq!(parse_tolerance_override("abs=1e-7", base).unwrap().rel, 1e-8);
        assert!(parse_tolerance_override("tol=3", base).is_err());
    }
}
