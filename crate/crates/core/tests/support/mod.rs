//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vi_core::Shape;

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest point among candidates that satisfy `feasible`.
fn nearest(z: &[f64], candidates: Vec<Vec<f64>>, feasible: impl Fn(&[f64]) -> bool) -> Vec<f64> {
    candidates
        .into_iter()
        .filter(|c| feasible(c))
        .min_by(|a, b| dist2(a, z).total_cmp(&dist2(b, z)))
        .expect("some face is feasible")
}

/// Brute-force Euclidean projection.
///
/// Polyhedral sets: enumerate every choice of active constraints, project
/// onto the affine hull of that face, keep the nearest feasible candidate.
/// Ball: bisection on the Lagrange multiplier of `|x - c|^2 <= r^2`.
pub fn project_oracle(shape: &Shape, z: &[f64]) -> Vec<f64> {
    let d = z.len();
    let eps = 1e-12;
    match shape {
        Shape::WholeSpace { .. } => z.to_vec(),
        Shape::Box { lower, upper } => {
            // each coordinate: free, at lower, or at upper
            let mut cands = Vec::new();
            for code in 0..3usize.pow(d as u32) {
                let mut c = z.to_vec();
                let mut rest = code;
                for i in 0..d {
                    match rest % 3 {
                        1 => c[i] = lower[i],
                        2 => c[i] = upper[i],
                        _ => {}
                    }
                    rest /= 3;
                }
                cands.push(c);
            }
            nearest(z, cands, |c| c.iter().enumerate().all(|(i, v)| *v >= lower[i] - eps && *v <= upper[i] + eps))
        }
        Shape::NonnegativeOrthant { .. } => {
            let cands = (0..1usize << d)
                .map(|mask| (0..d).map(|i| if mask >> i & 1 == 1 { 0.0 } else { z[i] }).collect())
                .collect();
            nearest(z, cands, |c| c.iter().all(|v| *v >= -eps))
        }
        Shape::Simplex { radius, .. } => {
            let mut cands = Vec::new();
            for mask in 0..(1usize << d) - 1 {
                // coordinates in `mask` are fixed at 0, the rest lie on sum = radius
                let free: Vec<usize> = (0..d).filter(|i| mask >> i & 1 == 0).collect();
                let shift = (radius - free.iter().map(|&i| z[i]).sum::<f64>()) / free.len() as f64;
                let mut c = vec![0.0; d];
                for &i in &free {
                    c[i] = z[i] + shift;
                }
                cands.push(c);
            }
            nearest(z, cands, |c| c.iter().all(|v| *v >= -eps))
        }
        Shape::Halfspace { normal, offset } => {
            let nn: f64 = normal.iter().map(|a| a * a).sum();
            let excess: f64 = normal.iter().zip(z).map(|(a, v)| a * v).sum::<f64>() - offset;
            let on_plane: Vec<f64> = z.iter().zip(normal).map(|(v, a)| v - a * excess / nn).collect();
            nearest(z, vec![z.to_vec(), on_plane], |c| {
                normal.iter().zip(c).map(|(a, v)| a * v).sum::<f64>() <= offset + 1e-9
            })
        }
        Shape::Ball { center, radius } => {
            if dist2(z, center) <= radius * radius {
                return z.to_vec();
            }
            // x(l) = (z + l c) / (1 + l); |x(l) - c| decreases in l
            let at = |l: f64| -> Vec<f64> { z.iter().zip(center).map(|(v, c)| (v + l * c) / (1.0 + l)).collect() };
            let (mut lo, mut hi) = (0.0, 1.0);
            while dist2(&at(hi), center) > radius * radius {
                hi *= 2.0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if dist2(&at(mid), center) > radius * radius {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            at(hi)
        }
    }
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det_lu(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        if m[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        det *= m[col][col];
        let (top, rest) = m.split_at_mut(col + 1);
        let pivot_row = &top[col];
        for row in rest {
            let f = row[col] / pivot_row[col];
            for (v, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *v -= f * p;
            }
        }
    }
    det
}

/// Scalar Korpelevich iteration on an interval, written out by hand.
/// Returns the final iterate, the number of steps and all iterates.
pub fn reference_korpelevich(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    alpha: f64,
    x0: f64,
    tol: f64,
    max_iters: usize,
) -> (f64, usize, Vec<f64>) {
    let proj = |t: f64| t.max(lo).min(hi);
    let mut x = x0;
    let mut xs = vec![x];
    for k in 0..=max_iters {
        if (x - proj(x - f(x))).abs() <= tol || k == max_iters {
            return (x, k, xs);
        }
        let y = proj(x - alpha * f(x));
        x = proj(x - alpha * f(y));
        xs.push(x);
    }
    unreachable!()
}

/// Solutions of a scalar VI on `[lo, hi]`: local minima of the natural
/// residual on an `n`-interval grid whose value is below `tol`.
pub fn grid_solutions(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize, tol: f64) -> Vec<f64> {
    let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let r: Vec<f64> = xs.iter().map(|&x| (x - (x - f(x)).max(lo).min(hi)).abs()).collect();
    (0..=n)
        .filter(|&i| {
            r[i] <= tol && (i == 0 || r[i] <= r[i - 1]) && (i == n || r[i] <= r[i + 1])
        })
        .map(|i| xs[i])
        .collect()
}

fn sorted_bounds(rng: &mut ChaCha8Rng, d: usize) -> (Vec<f64>, Vec<f64>) {
    let mut lower = Vec::with_capacity(d);
    let mut upper = Vec::with_capacity(d);
    for _ in 0..d {
        let a: f64 = rng.random_range(-3.0..3.0);
        let w: f64 = rng.random_range(0.0..3.0);
        lower.push(a);
        upper.push(a + w);
    }
    (lower, upper)
}

/// A random instance of every set variant in dimension `d`.
pub fn random_shapes(rng: &mut ChaCha8Rng, d: usize) -> Vec<Shape> {
    let (lower, upper) = sorted_bounds(rng, d);
    let center: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
    let mut normal: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    if normal.iter().all(|a| a.abs() < 1e-3) {
        normal[0] = 1.0;
    }
    vec![
        Shape::WholeSpace { dim: d },
        Shape::Box { lower, upper },
        Shape::Ball { center, radius: rng.random_range(0.1..3.0) },
        Shape::Simplex { dim: d, radius: rng.random_range(0.1..3.0) },
        Shape::Halfspace { normal, offset: rng.random_range(-2.0..2.0) },
        Shape::NonnegativeOrthant { dim: d },
    ]
}

pub fn random_point(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-scale..scale)).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
