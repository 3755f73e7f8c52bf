//! Closed convex sets with exact Euclidean projections.
//!
//! Every [`ConvexSet`] is validated on construction, so a value of this type
//! is always nonempty, closed and convex. Projections are closed-form (or, for
//! the simplex, the sort-then-threshold rule) and therefore exact up to
//! floating-point rounding.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result, ViError};

/// Raw description of a convex set. Mirrors the JSON representation.
///
/// A `Shape` is unchecked; turn it into a [`ConvexSet`] with
/// [`ConvexSet::try_from`] to run the validity checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    WholeSpace { dim: usize },
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    /// `{x >= 0 : sum(x) = radius}`.
    Simplex { dim: usize, radius: f64 },
    /// `{x : <normal, x> <= offset}`.
    Halfspace { normal: Vec<f64>, offset: f64 },
    NonnegativeOrthant { dim: usize },
}

/// A validated closed convex set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Shape", into = "Shape")]
pub struct ConvexSet {
    shape: Shape,
}

impl TryFrom<Shape> for ConvexSet {
    type Error = ViError;

    fn try_from(shape: Shape) -> Result<Self> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match &shape {
            Shape::WholeSpace { dim } | Shape::NonnegativeOrthant { dim } => {
                if *dim == 0 {
                    return Err(ViError::arg("set dimension must be positive"));
                }
            }
            Shape::Box { lower, upper } => {
                if lower.is_empty() {
                    return Err(ViError::arg("box dimension must be positive"));
                }
                check_dim(lower.len(), upper.len())?;
                if lower.iter().chain(upper).any(|x| x.is_nan()) {
                    return Err(ViError::arg("box bounds must not be NaN"));
                }
                if let Some(i) = (0..lower.len()).find(|&i| lower[i] > upper[i]) {
                    return Err(ViError::arg(format!(
                        "box lower[{i}] = {} exceeds upper[{i}] = {}",
                        lower[i], upper[i]
                    )));
                }
            }
            Shape::Ball { center, radius } => {
                if center.is_empty() || !finite(center) {
                    return Err(ViError::arg("ball center must be a nonempty finite vector"));
                }
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(ViError::arg(format!("ball radius must be positive, got {radius}")));
                }
            }
            Shape::Simplex { dim, radius } => {
                if *dim == 0 {
                    return Err(ViError::arg("simplex dimension must be positive"));
                }
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(ViError::arg(format!(
                        "simplex radius must be positive, got {radius}"
                    )));
                }
            }
            Shape::Halfspace { normal, offset } => {
                if normal.is_empty() || !finite(normal) || !offset.is_finite() {
                    return Err(ViError::arg("halfspace data must be finite and nonempty"));
                }
                if norm(normal) == 0.0 {
                    return Err(ViError::arg("halfspace normal must be nonzero"));
                }
            }
        }
        Ok(ConvexSet { shape })
    }
}

impl From<ConvexSet> for Shape {
    fn from(set: ConvexSet) -> Self {
        set.shape
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl ConvexSet {
    pub fn whole_space(dim: usize) -> Result<Self> {
        Shape::WholeSpace { dim }.try_into()
    }

    pub fn boxed(lower: impl Into<Vec<f64>>, upper: impl Into<Vec<f64>>) -> Result<Self> {
        Shape::Box { lower: lower.into(), upper: upper.into() }.try_into()
    }

    /// The box `[lower, upper]^dim`.
    pub fn cube(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::boxed(vec![lower; dim], vec![upper; dim])
    }

    pub fn ball(center: impl Into<Vec<f64>>, radius: f64) -> Result<Self> {
        Shape::Ball { center: center.into(), radius }.try_into()
    }

    pub fn simplex(dim: usize, radius: f64) -> Result<Self> {
        Shape::Simplex { dim, radius }.try_into()
    }

    pub fn halfspace(normal: impl Into<Vec<f64>>, offset: f64) -> Result<Self> {
        Shape::Halfspace { normal: normal.into(), offset }.try_into()
    }

    pub fn nonnegative_orthant(dim: usize) -> Result<Self> {
        Shape::NonnegativeOrthant { dim }.try_into()
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        match &self.shape {
            Shape::WholeSpace { dim }
            | Shape::Simplex { dim, .. }
            | Shape::NonnegativeOrthant { dim } => *dim,
            Shape::Box { lower, .. } => lower.len(),
            Shape::Ball { center, .. } => center.len(),
            Shape::Halfspace { normal, .. } => normal.len(),
        }
    }

    /// Smallest axis-aligned box containing the set, if the set is bounded.
    pub fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match &self.shape {
            Shape::Box { lower, upper } => {
                if lower.iter().chain(upper).all(|x| x.is_finite()) {
                    Some((lower.clone(), upper.clone()))
                } else {
                    None
                }
            }
            Shape::Ball { center, radius } => Some((
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            )),
            Shape::Simplex { dim, radius } => Some((vec![0.0; *dim], vec![*radius; *dim])),
            _ => None,
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.bounding_box().is_some()
    }

    /// True when the set is a single point (only possible for a degenerate box).
    pub fn is_singleton(&self) -> bool {
        match &self.shape {
            Shape::Box { lower, upper } => lower.iter().zip(upper).all(|(l, u)| l == u),
            Shape::Simplex { dim, .. } => *dim == 1,
            _ => false,
        }
    }

    /// Euclidean projection `argmin_{x in K} |x - z|^2`.
    pub fn project(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), z.len())?;
        let out = match &self.shape {
            Shape::WholeSpace { .. } => z.clone(),
            Shape::Box { lower, upper } => {
                // NaN passes through so callers can detect divergence.
                DVector::from_iterator(
                    z.len(),
                    z.iter().enumerate().map(|(i, &v)| {
                        if v.is_nan() {
                            v
                        } else {
                            v.clamp(lower[i], upper[i])
                        }
                    }),
                )
            }
            Shape::Ball { center, radius } => {
                let c = DVector::from_column_slice(center);
                let d = z - &c;
                let dist = d.norm();
                if dist <= *radius {
                    z.clone()
                } else {
                    c + d * (*radius / dist)
                }
            }
            Shape::Simplex { radius, .. } => project_simplex(z, *radius),
            Shape::Halfspace { normal, offset } => {
                let excess = dot(normal, z.as_slice()) - offset;
                if excess <= 0.0 {
                    z.clone()
                } else {
                    let a = DVector::from_column_slice(normal);
                    let scale = excess / a.norm_squared();
                    z - a * scale
                }
            }
            Shape::NonnegativeOrthant { .. } => z.map(|v| if v.is_nan() { v } else { v.max(0.0) }),
        };
        Ok(out)
    }

    /// Membership up to a caller-supplied tolerance on each defining constraint.
    ///
    /// Halfspace and ball violations are measured as Euclidean distances to
    /// the set; box, orthant and simplex constraints coordinatewise.
    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> Result<bool> {
        check_dim(self.dim(), x.len())?;
        if !(tol >= 0.0) {
            return Err(ViError::arg(format!("tolerance must be nonnegative, got {tol}")));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Ok(false);
        }
        let inside = match &self.shape {
            Shape::WholeSpace { .. } => true,
            Shape::Box { lower, upper } => x
                .iter()
                .enumerate()
                .all(|(i, &v)| v >= lower[i] - tol && v <= upper[i] + tol),
            Shape::Ball { center, radius } => {
                let d: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                d.sqrt() <= radius + tol
            }
            Shape::Simplex { radius, .. } => {
                x.iter().all(|&v| v >= -tol) && (x.sum() - radius).abs() <= tol
            }
            Shape::Halfspace { normal, offset } => {
                (dot(normal, x.as_slice()) - offset) / norm(normal) <= tol
            }
            Shape::NonnegativeOrthant { .. } => x.iter().all(|&v| v >= -tol),
        };
        Ok(inside)
    }

    /// `<z - P(z), x - P(z)>` for `x` in the set. Nonpositive up to rounding.
    pub fn projection_inequality_residual(
        &self,
        z: &DVector<f64>,
        x: &DVector<f64>,
        tol: f64,
    ) -> Result<f64> {
        if !self.contains(x, tol)? {
            return Err(ViError::arg("reference point is not in the set"));
        }
        let p = self.project(z)?;
        Ok((z - &p).dot(&(x - &p)))
    }
}

/// Sort-then-threshold projection onto `{x >= 0 : sum(x) = radius}`.
fn project_simplex(z: &DVector<f64>, radius: f64) -> DVector<f64> {
    let mut sorted: Vec<f64> = z.iter().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = sorted[0] - radius;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - radius) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    z.map(|v| (v - theta).max(0.0))
}
