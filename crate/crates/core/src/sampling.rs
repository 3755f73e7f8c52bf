//! Deterministic sample generation for certificates.
//!
//! Points are drawn in the bounding box of a bounded region and then
//! projected onto it. Halton points are shifted modulo one by a seed-derived
//! offset (Cranley-Patterson rotation) so different seeds give different but
//! reproducible point sets.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ViError};
use crate::geometry::ConvexSet;

const PRIMES: [u32; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Shifted Halton sequence.
    Halton,
    /// Tensor grid with `ceil(samples^(1/dim))` nodes per axis, endpoints included.
    Grid,
}

/// How many points to draw and from which sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sampling {
    pub samples: usize,
    pub seed: u64,
    pub scheme: Scheme,
}

impl Sampling {
    pub fn halton(samples: usize, seed: u64) -> Self {
        Sampling { samples, seed, scheme: Scheme::Halton }
    }

    pub fn grid(samples: usize) -> Self {
        Sampling { samples, seed: 0, scheme: Scheme::Grid }
    }
}

/// Radical inverse of `index` in base `base`.
fn radical_inverse(mut index: u64, base: u32) -> f64 {
    let b = base as f64;
    let mut inv = 1.0 / b;
    let mut out = 0.0;
    while index > 0 {
        out += (index % base as u64) as f64 * inv;
        index /= base as u64;
        inv /= b;
    }
    out
}

/// `count` points of the shifted Halton sequence in `[0, 1)^dim`.
pub fn unit_halton(dim: usize, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if dim == 0 || dim > PRIMES.len() {
        return Err(ViError::arg(format!(
            "halton sampling supports 1..={} coordinates, got {dim}",
            PRIMES.len()
        )));
    }
    let shift: Vec<f64> = if seed == 0 {
        vec![0.0; dim]
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..dim).map(|_| rng.random::<f64>()).collect()
    };
    Ok((0..count as u64)
        .map(|i| {
            (0..dim)
                .map(|d| {
                    // skip index 0 so the first point is not the box corner
                    let u = radical_inverse(i + 1, PRIMES[d]) + shift[d];
                    u - u.floor()
                })
                .collect()
        })
        .collect())
}

fn unit_grid(dim: usize, count: usize) -> Vec<Vec<f64>> {
    let per_axis = ((count as f64).powf(1.0 / dim as f64).ceil() as usize).max(2);
    let total = per_axis.pow(dim as u32);
    (0..total)
        .map(|mut flat| {
            (0..dim)
                .map(|_| {
                    let i = flat % per_axis;
                    flat /= per_axis;
                    i as f64 / (per_axis - 1) as f64
                })
                .collect()
        })
        .collect()
}

fn bounded_box(region: &ConvexSet) -> Result<(Vec<f64>, Vec<f64>)> {
    region
        .bounding_box()
        .ok_or_else(|| ViError::arg("sampling region must be bounded (box, ball or simplex)"))
}

fn scale(unit: &[f64], lower: &[f64], upper: &[f64]) -> DVector<f64> {
    DVector::from_iterator(
        unit.len(),
        unit.iter().enumerate().map(|(i, u)| lower[i] + u * (upper[i] - lower[i])),
    )
}

/// Sample points in `region`.
pub fn sample_points(region: &ConvexSet, sampling: &Sampling) -> Result<Vec<DVector<f64>>> {
    if sampling.samples == 0 {
        return Err(ViError::arg("sample count must be positive"));
    }
    let (lower, upper) = bounded_box(region)?;
    let dim = region.dim();
    let unit = match sampling.scheme {
        Scheme::Halton => unit_halton(dim, sampling.samples, sampling.seed)?,
        Scheme::Grid => unit_grid(dim, sampling.samples),
    };
    unit.iter().map(|u| region.project(&scale(u, &lower, &upper))).collect()
}

/// Sample pairs `(x, y)` in `region`.
///
/// Halton pairs use a `2 * dim` dimensional sequence; grid pairs take all
/// ordered pairs of distinct grid nodes (`samples` nodes in total).
pub fn sample_pairs(
    region: &ConvexSet,
    sampling: &Sampling,
) -> Result<Vec<(DVector<f64>, DVector<f64>)>> {
    if sampling.samples == 0 {
        return Err(ViError::arg("sample count must be positive"));
    }
    let (lower, upper) = bounded_box(region)?;
    let dim = region.dim();
    match sampling.scheme {
        Scheme::Halton => unit_halton(2 * dim, sampling.samples, sampling.seed)?
            .iter()
            .map(|u| {
                let x = region.project(&scale(&u[..dim], &lower, &upper))?;
                let y = region.project(&scale(&u[dim..], &lower, &upper))?;
                Ok((x, y))
            })
            .collect(),
        Scheme::Grid => {
            let nodes = sample_points(region, sampling)?;
            let mut pairs = Vec::new();
            for (i, x) in nodes.iter().enumerate() {
                for y in &nodes[i + 1..] {
                    pairs.push((x.clone(), y.clone()));
                }
            }
            Ok(pairs)
        }
    }
}
