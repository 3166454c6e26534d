//! Scenario files: JSON description of `γ(0)`, the curve `A(t, eps)`, the
//! period and the oracle grids.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::expr::{ExprError, SymmetricCurve};
use crate::matrix::RealMat4;
use crate::pipeline::{Problem, Settings};
use crate::spectral::{make_jordan_symplectic, JordanTolerances, SpectralError};
use crate::verify::{GridSpec, VerifyError};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error at {pointer}: {message}")]
    Schema { pointer: String, message: String },
    #[error("expression error at {pointer}: {source}")]
    Expr {
        pointer: String,
        #[source]
        source: ExprError,
    },
    #[error("generator at /gamma0/generator: {0}")]
    Generator(#[source] SpectralError),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    gamma0: Gamma0File,
    curve: CurveFile,
    #[serde(rename = "T")]
    horizon: Option<f64>,
    #[serde(default)]
    grids: GridsFile,
    #[serde(default)]
    tolerances: TolerancesFile,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Gamma0File {
    matrix: Option<[[f64; 4]; 4]>,
    generator: Option<GeneratorFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeneratorFile {
    theta0: f64,
    #[serde(rename = "C")]
    c: [[f64; 2]; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CurveFile {
    entries: BTreeMap<String, String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridsFile {
    t: Option<GridFile>,
    eps: Option<GridFile>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    min: Option<f64>,
    max: Option<f64>,
    count: Option<usize>,
    log: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TolerancesFile {
    cluster: Option<f64>,
    circle: Option<f64>,
    rank: Option<f64>,
    invariant: Option<f64>,
    pairing: Option<f64>,
    drift: Option<f64>,
    steps: Option<usize>,
}

/// A validated scenario with every expression parsed.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub problem: Problem,
    pub t_grid: GridSpec,
    pub eps_grid: GridSpec,
}

fn schema(pointer: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Schema {
        pointer: pointer.into(),
        message: message.into(),
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_scenario(&text)
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let pointer = json_pointer(&e.path().to_string());
        schema(pointer, e.inner().to_string())
    })?;
    build(file)
}

fn json_pointer(path: &str) -> String {
    if path == "." {
        return "/".into();
    }
    let mut out = String::new();
    for seg in path.split('.') {
        // array indices come out as `field[3]`
        let mut rest = seg;
        while let Some(open) = rest.find('[') {
            let head = &rest[..open];
            if !head.is_empty() {
                out.push('/');
                out.push_str(head);
            }
            let close = rest[open..].find(']').map_or(rest.len(), |c| open + c);
            out.push('/');
            out.push_str(&rest[open + 1..close]);
            rest = rest.get(close + 1..).unwrap_or("");
        }
        if !rest.is_empty() {
            out.push('/');
            out.push_str(rest);
        }
    }
    out
}

fn parse_index(key: &str) -> Option<(usize, usize)> {
    let (i, j) = key.split_once(',')?;
    Some((i.trim().parse().ok()?, j.trim().parse().ok()?))
}

fn grid(file: Option<GridFile>, pointer: &str) -> Result<GridSpec, ScenarioError> {
    let d = GridSpec::default();
    let f = file.unwrap_or_default();
    let spec = GridSpec {
        min: f.min.unwrap_or(d.min),
        max: f.max.unwrap_or(d.max),
        count: f.count.unwrap_or(d.count),
        log: f.log.unwrap_or(d.log),
    };
    spec.validate().map_err(|e| match e {
        VerifyError::BadGrid(m) => schema(pointer, m),
        other => schema(pointer, other.to_string()),
    })?;
    Ok(spec)
}

fn positive(value: Option<f64>, default: f64, pointer: &str) -> Result<f64, ScenarioError> {
    match value {
        None => Ok(default),
        Some(v) if v > 0.0 && v.is_finite() => Ok(v),
        Some(v) => Err(schema(pointer, format!("must be positive and finite, got {v}"))),
    }
}

fn build(file: ScenarioFile) -> Result<Scenario, ScenarioError> {
    let gamma0 = match (file.gamma0.matrix, file.gamma0.generator) {
        (Some(m), None) => {
            if m.iter().flatten().any(|x| !x.is_finite()) {
                return Err(schema("/gamma0/matrix", "entries must be finite"));
            }
            RealMat4(m)
        }
        (None, Some(g)) => make_jordan_symplectic(g.theta0, g.c).map_err(ScenarioError::Generator)?,
        (Some(_), Some(_)) => {
            return Err(schema(
                "/gamma0",
                "give exactly one of `matrix` and `generator`, not both",
            ))
        }
        (None, None) => return Err(schema("/gamma0", "one of `matrix` or `generator` is required")),
    };

    let mut entries = Vec::with_capacity(file.curve.entries.len());
    for (key, text) in &file.curve.entries {
        let (i, j) = parse_index(key).ok_or_else(|| {
            schema(
                format!("/curve/entries/{key}"),
                "keys must look like \"i,j\" with 0-based indices",
            )
        })?;
        entries.push(((i, j), text.as_str()));
    }
    let curve = SymmetricCurve::from_entries(entries).map_err(|source| {
        let pointer = match &source {
            ExprError::Entry { i, j, .. } | ExprError::BadIndex { i, j } => format!("/curve/entries/{i},{j}"),
            ExprError::SymmetryConflict { i, j, .. } => format!("/curve/entries/{j},{i}"),
            _ => "/curve/entries".into(),
        };
        ScenarioError::Expr { pointer, source }
    })?;

    if let Some(t) = file.horizon {
        if !(t > 0.0 && t.is_finite()) {
            return Err(schema("/T", format!("period must be positive, got {t}")));
        }
    }

    let tol = file.tolerances;
    let defaults = Settings::default();
    let steps = tol.steps.unwrap_or(defaults.steps);
    if steps < 2 {
        return Err(schema("/tolerances/steps", "at least 2 steps are required"));
    }
    let settings = Settings {
        tol_cluster: positive(tol.cluster, defaults.tol_cluster, "/tolerances/cluster")?,
        tol_circle: positive(tol.circle, defaults.tol_circle, "/tolerances/circle")?,
        jordan: JordanTolerances {
            rank: positive(tol.rank, defaults.jordan.rank, "/tolerances/rank")?,
            invariant: positive(tol.invariant, defaults.jordan.invariant, "/tolerances/invariant")?,
            pairing: positive(tol.pairing, defaults.jordan.pairing, "/tolerances/pairing")?,
        },
        drift: positive(tol.drift, defaults.drift, "/tolerances/drift")?,
        steps,
    };

    Ok(Scenario {
        problem: Problem {
            name: file.name,
            gamma0,
            curve,
            horizon: file.horizon,
            settings,
        },
        t_grid: grid(file.grids.t, "/grids/t")?,
        eps_grid: grid(file.grids.eps, "/grids/eps")?,
    })
}
