//! Built-in benchmark problems and JSON ingestion of affine VIs.
//!
//! | name | `F` | `K` |
//! |------|-----|-----|
//! | `identity` | `x` | `R^m` (default `m = 2`) |
//! | `skew` | `[[0, 1], [-1, 0]] x` | `R^2` |
//! | `quad1d` | `x^2` | `[-1, 2]` |
//! | `rotationfield` | `R (x - (1, 1))`, `R` a quarter turn | `R^2` |
//! | `perturbed` | `x + 0.5 x cos(5x)` per coordinate | `[-2, 2]^m` (default `m = 1`) |
//! | `nonexistence-witness` | `-x / (1 + |x|)` | `R^m` (default `m = 2`) |

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::error::{Result, ViError};
use crate::geometry::{ConvexSet, Shape};
use crate::problem::{Metadata, ReferenceMapping, ViProblem};

/// Tolerance used to validate listed solutions when loading a document.
pub const LOAD_SOLUTION_TOL: f64 = 1e-8;

pub const CATALOG: [&str; 6] =
    ["identity", "skew", "quad1d", "rotationfield", "perturbed", "nonexistence-witness"];

/// Facts about a catalog entry that tests and certificates rely on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceData {
    pub name: &'static str,
    pub summary: &'static str,
    pub dim: usize,
    pub lipschitz: Option<f64>,
    pub monotone: bool,
    pub known_solutions: Vec<Vec<f64>>,
    pub known_minty_solutions: Vec<Vec<f64>>,
    /// `(point, eta)` with `<F(x), x - point> >= eta |x - point|^2` on `K`.
    pub strong_minty: Option<(Vec<f64>, f64)>,
    /// Bounded region for sampled certificates (`K` itself when bounded).
    pub sample_region: ConvexSet,
}

fn unknown(name: &str) -> ViError {
    ViError::UnknownProblem(name.to_string())
}

fn default_dim(name: &str) -> Result<usize> {
    match name {
        "identity" | "skew" | "rotationfield" | "nonexistence-witness" => Ok(2),
        "quad1d" | "perturbed" => Ok(1),
        other => Err(unknown(other)),
    }
}

fn fixed_dim(name: &str, dim: usize) -> Result<()> {
    let expected = default_dim(name)?;
    let resizable = matches!(name, "identity" | "perturbed" | "nonexistence-witness");
    if dim == 0 || (!resizable && dim != expected) {
        return Err(ViError::arg(format!("problem `{name}` does not support dimension {dim}")));
    }
    Ok(())
}

/// Catalog entry `name` at its default dimension.
pub fn builtin(name: &str) -> Result<ViProblem> {
    builtin_with_dim(name, default_dim(name)?)
}

/// Catalog entry `name` at dimension `dim` (only `identity`, `perturbed` and
/// `nonexistence-witness` accept dimensions other than the default).
pub fn builtin_with_dim(name: &str, dim: usize) -> Result<ViProblem> {
    fixed_dim(name, dim)?;
    let data = reference_data_with_dim(name, dim)?;
    let set = match name {
        "quad1d" => ConvexSet::boxed(vec![-1.0], vec![2.0])?,
        "perturbed" => ConvexSet::cube(dim, -2.0, 2.0)?,
        _ => ConvexSet::whole_space(dim)?,
    };
    let p = with_map(name, set, dim)?;
    let p = match data.lipschitz {
        Some(l) => p.with_lipschitz(l)?,
        None => p,
    };
    Ok(p.with_metadata(Metadata {
        known_solutions: data.known_solutions,
        known_minty_solutions: data.known_minty_solutions,
        closed_range_claim: false,
    }))
}

/// The mapping and Jacobian of catalog entry `name`, on an arbitrary set.
fn with_map(name: &str, set: ConvexSet, dim: usize) -> Result<ViProblem> {
    let eye = DMatrix::<f64>::identity(dim, dim);
    Ok(match name {
        "identity" => ViProblem::new(name, set, |x: &DVector<f64>| x.clone())
            .with_jacobian(move |_: &DVector<f64>| eye.clone()),
        "skew" => {
            let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
            let j = a.clone();
            ViProblem::new(name, set, move |x: &DVector<f64>| &a * x)
                .with_jacobian(move |_: &DVector<f64>| j.clone())
        }
        "quad1d" => ViProblem::new(name, set, |x: &DVector<f64>| x.map(|t| t * t))
            .with_jacobian(|x: &DVector<f64>| DMatrix::from_element(1, 1, 2.0 * x[0])),
        "rotationfield" => {
            let r = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
            let j = r.clone();
            let c = DVector::from_element(2, 1.0);
            ViProblem::new(name, set, move |x: &DVector<f64>| &r * (x - &c))
                .with_jacobian(move |_: &DVector<f64>| j.clone())
        }
        "perturbed" => ViProblem::new(name, set, |x: &DVector<f64>| {
            x.map(|t| t + 0.5 * t * (5.0 * t).cos())
        })
        .with_jacobian(|x: &DVector<f64>| {
            DMatrix::from_diagonal(&x.map(|t| 1.0 + 0.5 * (5.0 * t).cos() - 2.5 * t * (5.0 * t).sin()))
        }),
        "nonexistence-witness" => ViProblem::new(name, set, |x: &DVector<f64>| {
            -x / (1.0 + x.norm())
        })
        .with_jacobian(move |x: &DVector<f64>| {
            let r = x.norm();
            if r == 0.0 {
                return -eye.clone();
            }
            -(&eye / (1.0 + r) - x * x.transpose() / (r * (1.0 + r) * (1.0 + r)))
        }),
        other => return Err(unknown(other)),
    })
}

/// Verified metadata of catalog entry `name` at its default dimension.
pub fn reference_data(name: &str) -> Result<ReferenceData> {
    reference_data_with_dim(name, default_dim(name)?)
}

pub fn reference_data_with_dim(name: &str, dim: usize) -> Result<ReferenceData> {
    fixed_dim(name, dim)?;
    let zero = vec![0.0; dim];
    let cube2 = ConvexSet::cube(dim, -2.0, 2.0)?;
    let data = match name {
        "identity" => ReferenceData {
            name: "identity",
            summary: "F(x) = x on R^m; strongly monotone baseline",
            dim,
            lipschitz: Some(1.0),
            monotone: true,
            known_solutions: vec![zero.clone()],
            known_minty_solutions: vec![zero.clone()],
            strong_minty: Some((zero, 1.0)),
            sample_region: cube2,
        },
        "skew" => ReferenceData {
            name: "skew",
            summary: "F(x) = [[0, 1], [-1, 0]] x on R^2; monotone, not strongly",
            dim,
            lipschitz: Some(1.0),
            monotone: true,
            known_solutions: vec![zero.clone()],
            known_minty_solutions: vec![zero],
            strong_minty: None,
            sample_region: cube2,
        },
        "quad1d" => ReferenceData {
            name: "quad1d",
            summary: "F(x) = x^2 on [-1, 2]; not monotone, Minty point -1",
            dim,
            lipschitz: Some(4.0),
            monotone: false,
            known_solutions: vec![vec![-1.0], vec![0.0]],
            known_minty_solutions: vec![vec![-1.0]],
            strong_minty: None,
            sample_region: ConvexSet::boxed(vec![-1.0], vec![2.0])?,
        },
        "rotationfield" => ReferenceData {
            name: "rotationfield",
            summary: "quarter-turn field around (1, 1) on R^2; orthogonal Jacobian",
            dim,
            lipschitz: Some(1.0),
            monotone: true,
            known_solutions: vec![vec![1.0, 1.0]],
            known_minty_solutions: vec![vec![1.0, 1.0]],
            strong_minty: None,
            sample_region: ConvexSet::cube(2, -1.0, 3.0)?,
        },
        "perturbed" => ReferenceData {
            name: "perturbed",
            summary: "F(x) = x + 0.5 x cos(5x) on [-2, 2]^m; not monotone, strong Minty point 0",
            dim,
            // |1 + 0.5 cos(5t) - 2.5 t sin(5t)| <= 1.5 + 2.5 * 2
            lipschitz: Some(6.5),
            monotone: false,
            known_solutions: vec![zero.clone()],
            known_minty_solutions: vec![zero.clone()],
            strong_minty: Some((zero, 0.5)),
            sample_region: cube2,
        },
        "nonexistence-witness" => ReferenceData {
            name: "nonexistence-witness",
            summary: "F(x) = -x / (1 + |x|) on R^m; bounded, not coercive, no Minty point",
            dim,
            lipschitz: Some(1.0),
            monotone: false,
            known_solutions: vec![zero],
            known_minty_solutions: vec![],
            strong_minty: None,
            sample_region: cube2,
        },
        other => return Err(unknown(other)),
    };
    Ok(data)
}

/// The reference mapping `phi = identity` that `perturbed` is a perturbation
/// of, with its solution `0` and perturbation size `d = 0.5`.
pub fn perturbed_reference(dim: usize) -> Result<(ReferenceMapping, f64)> {
    fixed_dim("perturbed", dim)?;
    Ok((ReferenceMapping::identity().with_solution(DVector::zeros(dim)), 0.5))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LoadErrorCode {
    /// Malformed JSON, missing or unknown fields, wrong types, invalid sets.
    Schema,
    /// Sizes that do not agree with `dim`.
    Dimension,
    /// A listed solution that fails validation.
    Solution,
}

impl LoadErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            LoadErrorCode::Schema => "E_SCHEMA",
            LoadErrorCode::Dimension => "E_DIMENSION",
            LoadErrorCode::Solution => "E_SOLUTION",
        }
    }
}

impl fmt::Display for LoadErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Why a problem document was rejected, and where.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{code} at {path}: {message}")]
pub struct LoadError {
    pub code: LoadErrorCode,
    /// JSON path of the offending value, e.g. `$.map.affine.A[1]`.
    pub path: String,
    pub message: String,
}

fn load_err(code: LoadErrorCode, path: impl Into<String>, message: impl fmt::Display) -> LoadError {
    LoadError { code, path: path.into(), message: message.to_string() }
}

fn schema(path: impl Into<String>, message: impl fmt::Display) -> LoadError {
    load_err(LoadErrorCode::Schema, path, message)
}

fn dimension(path: impl Into<String>, message: impl fmt::Display) -> LoadError {
    load_err(LoadErrorCode::Dimension, path, message)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapSpec {
    Affine {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
    },
    Builtin(String),
}

/// A problem document.
///
/// ```json
/// {
///   "dim": 2,
///   "set": {"type": "box", "lower": [-1, -1], "upper": [1, 1]},
///   "map": {"affine": {"A": [[1, 0], [0, 1]], "b": [0, 0]}},
///   "lipschitz": 1.0,
///   "known_solutions": [[0, 0]]
/// }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub dim: usize,
    pub set: Shape,
    pub map: MapSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    #[serde(default)]
    pub known_solutions: Vec<Vec<f64>>,
    #[serde(default)]
    pub known_minty_solutions: Vec<Vec<f64>>,
}

const FIELDS: [&str; 6] = ["dim", "set", "map", "lipschitz", "known_solutions", "known_minty_solutions"];

fn field<T: serde::de::DeserializeOwned>(
    obj: &serde_json::Map<String, Value>,
    key: &str,
) -> std::result::Result<Option<T>, LoadError> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => T::deserialize(v).map(Some).map_err(|e| schema(format!("$.{key}"), e)),
    }
}

/// Parse a document, reporting the first offending path.
pub fn parse_spec(text: &str) -> std::result::Result<ProblemSpec, LoadError> {
    let root: Value = serde_json::from_str(text).map_err(|e| schema("$", e))?;
    let Value::Object(obj) = &root else {
        return Err(schema("$", "document must be a JSON object"));
    };
    if let Some(extra) = obj.keys().find(|k| !FIELDS.contains(&k.as_str())) {
        return Err(schema(format!("$.{extra}"), "unknown field"));
    }
    let dim: usize = field(obj, "dim")?.ok_or_else(|| schema("$.dim", "missing field"))?;
    if dim == 0 {
        return Err(schema("$.dim", "dimension must be positive"));
    }
    let set: Shape = field(obj, "set")?.ok_or_else(|| schema("$.set", "missing field"))?;
    let map: MapSpec = field(obj, "map")?.ok_or_else(|| schema("$.map", "missing field"))?;
    let lipschitz: Option<f64> = field(obj, "lipschitz")?;
    if let Some(l) = lipschitz {
        if !(l > 0.0 && l.is_finite()) {
            return Err(schema("$.lipschitz", "Lipschitz constant must be positive"));
        }
    }
    Ok(ProblemSpec {
        dim,
        set,
        map,
        lipschitz,
        known_solutions: field(obj, "known_solutions")?.unwrap_or_default(),
        known_minty_solutions: field(obj, "known_minty_solutions")?.unwrap_or_default(),
    })
}

fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    a.singular_values().max()
}

impl ProblemSpec {
    /// Build and validate the problem described by this document.
    pub fn build(&self) -> std::result::Result<ViProblem, LoadError> {
        let dim = self.dim;
        let set_dim = shape_dim(&self.set);
        if set_dim != dim {
            return Err(dimension("$.set", format!("set has dimension {set_dim}, expected {dim}")));
        }
        let set = ConvexSet::try_from(self.set.clone()).map_err(|e| schema("$.set", e))?;
        let problem = match &self.map {
            MapSpec::Affine { a, b } => {
                if a.len() != dim {
                    return Err(dimension("$.map.affine.A", format!("{} rows, expected {dim}", a.len())));
                }
                if let Some(i) = a.iter().position(|row| row.len() != dim) {
                    return Err(dimension(
                        format!("$.map.affine.A[{i}]"),
                        format!("{} columns, expected {dim}", a[i].len()),
                    ));
                }
                if b.len() != dim {
                    return Err(dimension("$.map.affine.b", format!("length {}, expected {dim}", b.len())));
                }
                let values: Vec<f64> = a.iter().flatten().copied().chain(b.iter().copied()).collect();
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(schema("$.map.affine", "coefficients must be finite"));
                }
                let am = DMatrix::from_fn(dim, dim, |i, j| a[i][j]);
                let bv = DVector::from_column_slice(b);
                let norm = spectral_norm(&am);
                let jac = am.clone();
                let p = ViProblem::new("affine", set, move |x: &DVector<f64>| &am * x + &bv)
                    .with_jacobian(move |_: &DVector<f64>| jac.clone());
                match self.lipschitz {
                    Some(l) => p.with_lipschitz(l),
                    // zero map: any positive constant works
                    None => p.with_lipschitz(norm.max(f64::MIN_POSITIVE)),
                }
                .map_err(|e| schema("$.lipschitz", e))?
            }
            MapSpec::Builtin(name) => {
                let reference = reference_data_with_dim(name, dim).map_err(|e| match e {
                    ViError::UnknownProblem(_) => schema("$.map.builtin", e),
                    other => dimension("$.dim", other),
                })?;
                let base = builtin_with_dim(name, dim).map_err(|e| schema("$.map.builtin", e))?;
                let p = with_map(name, set.clone(), dim).map_err(|e| schema("$.map.builtin", e))?;
                let inherited = reference
                    .lipschitz
                    .filter(|_| matches!(base.set().shape(), Shape::WholeSpace { .. }) || base.set() == &set);
                match self.lipschitz.or(inherited) {
                    Some(l) => p.with_lipschitz(l).map_err(|e| schema("$.lipschitz", e))?,
                    None => p,
                }
            }
        };
        for (key, points) in
            [("known_solutions", &self.known_solutions), ("known_minty_solutions", &self.known_minty_solutions)]
        {
            for (i, point) in points.iter().enumerate() {
                let path = format!("$.{key}[{i}]");
                if point.len() != dim {
                    return Err(dimension(path, format!("length {}, expected {dim}", point.len())));
                }
                let x = DVector::from_column_slice(point);
                let residual = problem.natural_residual(&x).map_err(|e| schema(path.clone(), e))?;
                let ok = problem.is_solution(&x, LOAD_SOLUTION_TOL).map_err(|e| schema(path.clone(), e))?;
                if !ok {
                    return Err(load_err(
                        LoadErrorCode::Solution,
                        path,
                        format!("not a solution: natural residual {residual:e}"),
                    ));
                }
            }
        }
        Ok(problem.with_metadata(Metadata {
            known_solutions: self.known_solutions.clone(),
            known_minty_solutions: self.known_minty_solutions.clone(),
            closed_range_claim: false,
        }))
    }
}

fn shape_dim(shape: &Shape) -> usize {
    match shape {
        Shape::WholeSpace { dim } | Shape::Simplex { dim, .. } | Shape::NonnegativeOrthant { dim } => *dim,
        Shape::Box { lower, .. } => lower.len(),
        Shape::Ball { center, .. } => center.len(),
        Shape::Halfspace { normal, .. } => normal.len(),
    }
}

/// Parse, build and validate a problem document.
pub fn from_json(text: &str) -> std::result::Result<ViProblem, LoadError> {
    parse_spec(text)?.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{minty_certificate, monotonicity_probe, strong_minty_via_perturbation};
    use crate::report::Verdict;
    use crate::sampling::Sampling;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn catalog_is_complete() {
        for name in CATALOG {
            let p = builtin(name).unwrap();
            assert_eq!(p.name(), name);
            assert!(p.has_jacobian());
            assert_eq!(reference_data(name).unwrap().dim, p.dim());
        }
        assert!(matches!(builtin("nope"), Err(ViError::UnknownProblem(_))));
        assert!(builtin_with_dim("skew", 3).is_err());
        assert_eq!(builtin_with_dim("identity", 4).unwrap().dim(), 4);
    }

    #[test]
    fn known_solutions_have_zero_residual() {
        for name in CATALOG {
            let p = builtin(name).unwrap();
            for s in &p.metadata().known_solutions {
                assert!(p.natural_residual(&v(s)).unwrap() <= 1e-10, "{name}");
            }
        }
    }

    #[test]
    fn known_minty_points_pass() {
        for name in CATALOG {
            let p = builtin(name).unwrap();
            let data = reference_data(name).unwrap();
            for m in &data.known_minty_solutions {
                let sampling = if p.dim() <= 2 { Sampling::grid(1000) } else { Sampling::halton(10_000, 0) };
                let r = minty_certificate(&p, &v(m), 0.0, &data.sample_region, &sampling).unwrap();
                assert_eq!(r.verdict, Verdict::Pass, "{name}");
            }
        }
    }

    #[test]
    fn analytic_jacobians_match_differences() {
        for name in CATALOG {
            let p = builtin(name).unwrap();
            for x in [vec![0.3; p.dim()], vec![-0.7; p.dim()]] {
                let x = v(&x);
                let a = p.jacobian(&x, 1e-5).unwrap();
                let fd = p.jacobian_fd(&x, 1e-5).unwrap();
                assert!((a - fd).amax() < 1e-7, "{name}");
            }
        }
    }

    #[test]
    fn lipschitz_bounds_dominate_estimates() {
        for name in CATALOG {
            let p = builtin(name).unwrap();
            let data = reference_data(name).unwrap();
            let est = p.estimate_lipschitz(&data.sample_region, 2000, 1).unwrap();
            assert!(est.lower_bound <= p.lipschitz().unwrap() + 1e-12, "{name}");
        }
    }

    #[test]
    fn catalog_examples() {
        let q = builtin("quad1d").unwrap();
        let k = q.set().clone();
        assert!(minty_certificate(&q, &v(&[-1.0]), 0.0, &k, &Sampling::grid(1000)).unwrap().passed());
        let mono = monotonicity_probe(&q, &k, &Sampling::halton(500, 0)).unwrap();
        assert_eq!(mono.verdict, Verdict::Fail);
        assert!(mono.first_witness().is_some());

        let p = builtin("perturbed").unwrap();
        let (phi, d) = perturbed_reference(1).unwrap();
        let r = strong_minty_via_perturbation(&p, &phi, d, p.set(), &Sampling::grid(4001)).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn json_affine_identity() {
        let p = from_json(
            r#"{"dim": 2, "set": {"type": "box", "lower": [-1, -1], "upper": [1, 1]},
                "map": {"affine": {"A": [[1, 0], [0, 1]], "b": [0, 0]}},
                "known_solutions": [[0, 0]]}"#,
        )
        .unwrap();
        assert!(p.is_solution(&v(&[0.0, 0.0]), 1e-12).unwrap());
        assert_eq!(p.lipschitz(), Some(1.0));
        assert_eq!(p.eval_map(&v(&[0.5, -0.25])).unwrap(), v(&[0.5, -0.25]));
    }

    #[test]
    fn json_affine_skew() {
        let p = from_json(
            r#"{"dim": 2, "set": {"type": "whole_space", "dim": 2},
                "map": {"affine": {"A": [[0, 1], [-1, 0]], "b": [0, 0]}}}"#,
        )
        .unwrap();
        assert_eq!(p.eval_map(&v(&[1.0, 0.0])).unwrap(), v(&[0.0, -1.0]));
        assert!((p.lipschitz().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn json_rejects_false_solution() {
        let e = from_json(
            r#"{"dim": 2, "set": {"type": "whole_space", "dim": 2},
                "map": {"affine": {"A": [[1, 0], [0, 1]], "b": [0, 0]}},
                "known_solutions": [[1, 1]]}"#,
        )
        .unwrap_err();
        assert_eq!(e.code, LoadErrorCode::Solution);
        assert_eq!(e.path, "$.known_solutions[0]");
    }

    #[test]
    fn json_error_codes_and_paths() {
        let cases = [
            ("not json", LoadErrorCode::Schema, "$"),
            ("[1, 2]", LoadErrorCode::Schema, "$"),
            (r#"{"set": {"type": "whole_space", "dim": 1}, "map": {"builtin": "quad1d"}}"#, LoadErrorCode::Schema, "$.dim"),
            (r#"{"dim": 1, "set": {"type": "whole_space", "dim": 1}, "map": {"builtin": "quad1d"}, "extra": 1}"#, LoadErrorCode::Schema, "$.extra"),
            (r#"{"dim": 1, "set": {"type": "torus"}, "map": {"builtin": "quad1d"}}"#, LoadErrorCode::Schema, "$.set"),
            (r#"{"dim": 1, "set": {"type": "box", "lower": [1], "upper": [0]}, "map": {"builtin": "quad1d"}}"#, LoadErrorCode::Schema, "$.set"),
            (r#"{"dim": 1, "set": {"type": "whole_space", "dim": 1}, "map": {"builtin": "zzz"}}"#, LoadErrorCode::Schema, "$.map.builtin"),
            (r#"{"dim": 2, "set": {"type": "whole_space", "dim": 3}, "map": {"builtin": "skew"}}"#, LoadErrorCode::Dimension, "$.set"),
            (r#"{"dim": 2, "set": {"type": "whole_space", "dim": 2}, "map": {"affine": {"A": [[1, 0], [0]], "b": [0, 0]}}}"#, LoadErrorCode::Dimension, "$.map.affine.A[1]"),
            (r#"{"dim": 2, "set": {"type": "whole_space", "dim": 2}, "map": {"affine": {"A": [[1, 0], [0, 1]], "b": [0]}}}"#, LoadErrorCode::Dimension, "$.map.affine.b"),
            (r#"{"dim": 3, "set": {"type": "whole_space", "dim": 3}, "map": {"builtin": "skew"}}"#, LoadErrorCode::Dimension, "$.dim"),
            (r#"{"dim": 1, "set": {"type": "whole_space", "dim": 1}, "map": {"builtin": "quad1d"}, "known_minty_solutions": [[1, 2]]}"#, LoadErrorCode::Dimension, "$.known_minty_solutions[0]"),
            (r#"{"dim": 1, "set": {"type": "whole_space", "dim": 1}, "map": {"builtin": "quad1d"}, "lipschitz": -1}"#, LoadErrorCode::Schema, "$.lipschitz"),
        ];
        for (text, code, path) in cases {
            let e = from_json(text).unwrap_err();
            assert_eq!((e.code, e.path.as_str()), (code, path), "{text}");
        }
    }

    #[test]
    fn json_builtin_on_new_set() {
        let p = from_json(
            r#"{"dim": 1, "set": {"type": "box", "lower": [0.5], "upper": [3]},
                "map": {"builtin": "quad1d"}, "known_solutions": [[0.5]]}"#,
        )
        .unwrap();
        assert_eq!(p.lipschitz(), None);
        let p = from_json(
            r#"{"dim": 2, "set": {"type": "ball", "center": [0, 0], "radius": 1},
                "map": {"builtin": "skew"}, "known_minty_solutions": [[0, 0]]}"#,
        )
        .unwrap();
        assert_eq!(p.lipschitz(), Some(1.0));
    }

    #[test]
    fn spec_round_trips() {
        let text = r#"{"dim":1,"set":{"type":"box","lower":[-1.0],"upper":[2.0]},"map":{"builtin":"quad1d"},"lipschitz":4.0,"known_solutions":[[-1.0],[0.0]],"known_minty_solutions":[[-1.0]]}"#;
        let spec = parse_spec(text).unwrap();
        assert_eq!(serde_json::to_string(&spec).unwrap(), text);
        assert!(spec.build().is_ok());
    }
}
