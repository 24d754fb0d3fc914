//! Scenario files: the single-JSON-document schema the CLI consumes.
//!
//! Tolerances travel as decimal strings so that scenario files stay
//! diff-friendly and exact; every other number is plain JSON. Unknown fields
//! are rejected, and parse errors surface with line and column.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chart::GridSpec;
use crate::curvature::DerivativeMode;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

/// A tolerance carried as its original decimal string.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(try_from = "String", into = "String")]
pub struct Tolerance {
    text: String,
    value: f64,
}

impl Tolerance {
    pub fn value(&self) -> f64 {
        self.value
    }
}

impl TryFrom<String> for Tolerance {
    type Error = String;

    fn try_from(text: String) -> Result<Self, Self::Error> {
        let value: f64 = text
            .trim()
            .parse()
            .map_err(|e| format!("tolerance `{text}` is not a number: {e}"))?;
        if !(value.is_finite() && value > 0.0) {
            return Err(format!(
                "tolerance `{text}` must be a positive finite number"
            ));
        }
        Ok(Self { text, value })
    }
}

impl From<Tolerance> for String {
    fn from(t: Tolerance) -> String {
        t.text
    }
}

impl From<f64> for Tolerance {
    fn from(value: f64) -> Self {
        Self {
            text: format!("{value:e}"),
            value,
        }
    }
}

/// Per-mode residual tolerances.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub analytic: Tolerance,
    pub fd: Tolerance,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            analytic: 1e-6.into(),
            fd: 1e-4.into(),
        }
    }
}

impl Tolerances {
    pub fn for_mode(&self, mode: DerivativeMode) -> f64 {
        match mode {
            DerivativeMode::Analytic => self.analytic.value(),
            DerivativeMode::FiniteDifference => self.fd.value(),
        }
    }
}

/// A profile of the invariant coordinate ξ.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileDef {
    Constant {
        value: f64,
    },
    Affine {
        slope: f64,
        intercept: f64,
    },
    Exponential {
        theta: f64,
        rate: f64,
    },
    /// theta / (−g·ξ + c)
    ReciprocalAffine {
        theta: f64,
        g: f64,
        c: f64,
    },
}

/// Base metric of a warped-product spec.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseDef {
    Flat {
        signature: Vec<i8>,
    },
    /// diag(ε)/φ² with φ a profile of ξ along `direction`.
    Conformal {
        signature: Vec<i8>,
        direction: Vec<f64>,
        phi: ProfileDef,
    },
}

impl BaseDef {
    pub fn dim(&self) -> usize {
        match self {
            BaseDef::Flat { signature } => signature.len(),
            BaseDef::Conformal { signature, .. } => signature.len(),
        }
    }

    pub fn direction(&self) -> Option<&[f64]> {
        match self {
            BaseDef::Flat { .. } => None,
            BaseDef::Conformal { direction, .. } => Some(direction),
        }
    }
}

/// Fiber of a warped-product spec.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FiberDef {
    Flat {
        #[serde(default)]
        m: Option<usize>,
        #[serde(default)]
        signature: Option<Vec<i8>>,
    },
    Sphere {
        m: usize,
    },
    Hyperbolic {
        m: usize,
    },
}

impl FiberDef {
    pub fn m(&self) -> Result<usize, ScenarioError> {
        match self {
            FiberDef::Flat { m, signature } => match (m, signature) {
                (Some(m), None) => Ok(*m),
                (None, Some(sig)) => Ok(sig.len()),
                (Some(m), Some(sig)) if *m == sig.len() => Ok(*m),
                (Some(m), Some(sig)) => Err(ScenarioError::Invalid(format!(
                    "fiber m = {m} disagrees with signature length {}",
                    sig.len()
                ))),
                (None, None) => Err(ScenarioError::Invalid(
                    "flat fiber needs `m` or `signature`".into(),
                )),
            },
            FiberDef::Sphere { m } | FiberDef::Hyperbolic { m } => Ok(*m),
        }
    }
}

/// An explicit warped-product specification.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WarpSpecDef {
    pub base: BaseDef,
    pub fiber: FiberDef,
    pub warp: ProfileDef,
    /// Direction of the warp profile; defaults to the base's direction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warp_direction: Option<Vec<f64>>,
    pub lambda: f64,
    /// Fiber Einstein constant; defaults to the fiber family's own value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct VerifyScenario {
    pub spec: WarpSpecDef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber_grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<DerivativeMode>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CatalogScenario {
    pub name: String,
    #[serde(default = "defaults::n")]
    pub n: usize,
    #[serde(default = "defaults::m")]
    pub m: usize,
    #[serde(rename = "G", default = "defaults::one")]
    pub g: f64,
    #[serde(rename = "C", default = "defaults::five")]
    pub c: f64,
    #[serde(rename = "Theta", default = "defaults::one")]
    pub theta: f64,
    #[serde(rename = "A", default = "defaults::one")]
    pub a: f64,
    #[serde(default = "defaults::one")]
    pub kappa: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<DerivativeMode>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ReduceScenario {
    #[serde(default = "defaults::n")]
    pub n: usize,
    #[serde(default = "defaults::m")]
    pub m: usize,
    #[serde(default = "defaults::one")]
    pub kappa: f64,
    pub lambda: f64,
    pub phi0: f64,
    pub dphi0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct IntegrateScenario {
    #[serde(default = "defaults::n")]
    pub n: usize,
    #[serde(default = "defaults::m")]
    pub m: usize,
    #[serde(default = "defaults::one")]
    pub kappa: f64,
    pub lambda: f64,
    pub phi0: f64,
    pub dphi0: f64,
    #[serde(rename = "G0")]
    pub rate0: f64,
    pub step: f64,
    pub span: [f64; 2],
    #[serde(rename = "Theta", default = "defaults::one")]
    pub theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monitor_bound: Option<Tolerance>,
    /// Lift the trajectory over a flat fiber and verify; holds the grid
    /// point count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lift: Option<LiftDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LiftDef {
    #[serde(default = "defaults::count")]
    pub count: usize,
    #[serde(default = "defaults::lift_tolerance")]
    pub tolerance: Tolerance,
}

/// Parameter ranges for a scan; every combination is one CSV row.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScanScenario {
    #[serde(default = "defaults::vec_n")]
    pub n: Vec<usize>,
    #[serde(default = "defaults::vec_m")]
    pub m: Vec<usize>,
    #[serde(default = "defaults::vec_one")]
    pub kappa: Vec<f64>,
    pub lambda: Vec<f64>,
    pub phi0: Vec<f64>,
    pub dphi0: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

mod defaults {
    use super::Tolerance;

    pub fn n() -> usize {
        3
    }
    pub fn m() -> usize {
        2
    }
    pub fn one() -> f64 {
        1.0
    }
    pub fn five() -> f64 {
        5.0
    }
    pub fn count() -> usize {
        100
    }
    pub fn lift_tolerance() -> Tolerance {
        1e-5.into()
    }
    pub fn vec_n() -> Vec<usize> {
        vec![3]
    }
    pub fn vec_m() -> Vec<usize> {
        vec![2]
    }
    pub fn vec_one() -> Vec<f64> {
        vec![1.0]
    }
}

/// A scenario file: one JSON document dispatched on `kind`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    Verify(VerifyScenario),
    Oneill(VerifyScenario),
    Catalog(CatalogScenario),
    Reduce(ReduceScenario),
    Integrate(IntegrateScenario),
    Scan(ScanScenario),
}

impl Scenario {
    pub fn out(&self) -> Option<&str> {
        match self {
            Scenario::Verify(s) | Scenario::Oneill(s) => s.out.as_deref(),
            Scenario::Catalog(s) => s.out.as_deref(),
            Scenario::Reduce(s) => s.out.as_deref(),
            Scenario::Integrate(s) => s.out.as_deref(),
            Scenario::Scan(s) => s.out.as_deref(),
        }
    }
}

fn ensure_finite<'a>(
    values: impl IntoIterator<Item = (&'a str, f64)>,
) -> Result<(), ScenarioError> {
    for (name, v) in values {
        if !v.is_finite() {
            return Err(ScenarioError::Invalid(format!(
                "`{name}` must be a finite number, got {v}"
            )));
        }
    }
    Ok(())
}

fn profile_values(def: &ProfileDef, what: &str) -> Vec<(String, f64)> {
    match def {
        ProfileDef::Constant { value } => vec![(format!("{what}.value"), *value)],
        ProfileDef::Affine { slope, intercept } => vec![
            (format!("{what}.slope"), *slope),
            (format!("{what}.intercept"), *intercept),
        ],
        ProfileDef::Exponential { theta, rate } => vec![
            (format!("{what}.theta"), *theta),
            (format!("{what}.rate"), *rate),
        ],
        ProfileDef::ReciprocalAffine { theta, g, c } => vec![
            (format!("{what}.theta"), *theta),
            (format!("{what}.g"), *g),
            (format!("{what}.c"), *c),
        ],
    }
}

fn validate_grid(grid: &Option<GridSpec>, dim: usize, what: &str) -> Result<(), ScenarioError> {
    if let Some(g) = grid {
        if g.count < 1 {
            return Err(ScenarioError::Invalid(format!(
                "{what} grid count must be at least 1"
            )));
        }
        if g.dim() != dim {
            return Err(ScenarioError::Invalid(format!(
                "{what} grid box has {} axes, expected {dim}",
                g.dim()
            )));
        }
        for [lo, hi] in &g.bounds {
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(ScenarioError::Invalid(format!(
                    "{what} grid box bounds must be finite"
                )));
            }
            if lo >= hi {
                return Err(ScenarioError::Invalid(format!(
                    "{what} grid box has an empty axis"
                )));
            }
        }
        if !(g.margin.is_finite() && g.margin >= 0.0) {
            return Err(ScenarioError::Invalid(format!(
                "{what} grid margin must be nonnegative"
            )));
        }
    }
    Ok(())
}

fn validate_signature(sig: &[i8], what: &str) -> Result<(), ScenarioError> {
    crate::chart::Signature::new(sig.to_vec())
        .map(|_| ())
        .map_err(|e| ScenarioError::Invalid(format!("{what}: {e}")))
}

impl Scenario {
    /// Schema checks beyond what serde enforces.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        match self {
            Scenario::Verify(v) | Scenario::Oneill(v) => {
                let n = v.spec.base.dim();
                if n < 3 {
                    return Err(ScenarioError::Invalid(
                        "base dimension must be at least 3".into(),
                    ));
                }
                let mut floats = profile_values(&v.spec.warp, "warp");
                floats.push(("lambda".into(), v.spec.lambda));
                if let Some(mu) = v.spec.mu {
                    floats.push(("mu".into(), mu));
                }
                if let BaseDef::Conformal { direction, phi, .. } = &v.spec.base {
                    floats.extend(profile_values(phi, "phi"));
                    floats.extend(direction.iter().map(|d| ("base.direction".to_string(), *d)));
                }
                if let Some(dir) = &v.spec.warp_direction {
                    floats.extend(dir.iter().map(|d| ("warp_direction".to_string(), *d)));
                }
                ensure_finite(floats.iter().map(|(n, v)| (n.as_str(), *v)))?;
                let m = v.spec.fiber.m()?;
                if m < 2 {
                    return Err(ScenarioError::Invalid(
                        "fiber dimension must be at least 2".into(),
                    ));
                }
                match &v.spec.base {
                    BaseDef::Flat { signature } => validate_signature(signature, "base")?,
                    BaseDef::Conformal {
                        signature,
                        direction,
                        ..
                    } => {
                        validate_signature(signature, "base")?;
                        if direction.len() != signature.len() {
                            return Err(ScenarioError::Invalid(
                                "base direction length differs from signature".into(),
                            ));
                        }
                    }
                }
                if let FiberDef::Flat {
                    signature: Some(sig),
                    ..
                } = &v.spec.fiber
                {
                    validate_signature(sig, "fiber")?;
                }
                if v.spec.base.direction().is_none()
                    && v.spec.warp_direction.is_none()
                    && !matches!(v.spec.warp, ProfileDef::Constant { .. })
                {
                    return Err(ScenarioError::Invalid(
                        "a non-constant warp profile on a flat base needs `warp_direction`".into(),
                    ));
                }
                if let Some(d) = &v.spec.warp_direction {
                    if d.len() != n {
                        return Err(ScenarioError::Invalid(
                            "warp_direction length differs from base dimension".into(),
                        ));
                    }
                }
                validate_grid(&v.grid, n, "base")?;
                validate_grid(&v.fiber_grid, m, "fiber")?;
                Ok(())
            }
            Scenario::Catalog(c) => {
                if !crate::catalog::family_names().contains(&c.name.as_str())
                    && c.name != "hyperbolic_corollary"
                {
                    return Err(ScenarioError::Invalid(format!(
                        "unknown catalog family `{}`; known: {:?}",
                        c.name,
                        crate::catalog::family_names()
                    )));
                }
                ensure_finite([
                    ("G", c.g),
                    ("C", c.c),
                    ("Theta", c.theta),
                    ("A", c.a),
                    ("kappa", c.kappa),
                ])?;
                validate_grid(&c.grid, c.n, "base")?;
                Ok(())
            }
            Scenario::Reduce(r) => {
                ensure_finite([
                    ("kappa", r.kappa),
                    ("lambda", r.lambda),
                    ("phi0", r.phi0),
                    ("dphi0", r.dphi0),
                ])?;
                if r.phi0 == 0.0 {
                    return Err(ScenarioError::Invalid("phi0 must be nonzero".into()));
                }
                Ok(())
            }
            Scenario::Integrate(i) => {
                ensure_finite([
                    ("kappa", i.kappa),
                    ("lambda", i.lambda),
                    ("phi0", i.phi0),
                    ("dphi0", i.dphi0),
                    ("G0", i.rate0),
                    ("step", i.step),
                    ("span[0]", i.span[0]),
                    ("span[1]", i.span[1]),
                    ("Theta", i.theta),
                ])?;
                if i.step <= 0.0 {
                    return Err(ScenarioError::Invalid("step must be positive".into()));
                }
                if i.span[0] >= i.span[1] {
                    return Err(ScenarioError::Invalid(
                        "span must be an increasing pair".into(),
                    ));
                }
                if i.phi0 == 0.0 {
                    return Err(ScenarioError::Invalid("phi0 must be nonzero".into()));
                }
                if i.theta <= 0.0 {
                    return Err(ScenarioError::Invalid("Theta must be positive".into()));
                }
                Ok(())
            }
            Scenario::Scan(s) => {
                let all = s
                    .kappa
                    .iter()
                    .chain(&s.lambda)
                    .chain(&s.phi0)
                    .chain(&s.dphi0);
                ensure_finite(all.map(|v| ("scan range", *v)))?;
                Ok(())
            }
        }
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let scenario: Scenario = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    scenario.validate()?;
    Ok(scenario)
}
