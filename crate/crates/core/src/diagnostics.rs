//! Sampled certificates for the sufficient existence conditions.
//!
//! The matrix tests ([`weak_coupling_check`], [`gram_pd_check`],
//! [`orthogonality_check`]) are exact statements about a single Jacobian.
//! Everything returning a [`DiagnosticsReport`] evaluates a hypothesis that
//! quantifies over infinitely many points at finitely many samples: a pass
//! says the hypothesis was not falsified there, nothing more. Each report
//! carries its sample count and seed and is reproducible from them.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Result, ViError};
use crate::geometry::ConvexSet;
use crate::problem::{MapKind, ReferenceMapping, ViProblem, DEFAULT_FD_STEP};
use crate::report::{DiagnosticsReport, Evidence, Verdict};
use crate::sampling::{sample_pairs, sample_points, unit_halton, Sampling};

/// Default width of the band `|F(x)| <= zero_band` in which the
/// nonsingularity proviso "`F(x) != 0`" is treated as undecidable.
pub const DEFAULT_ZERO_BAND: f64 = 1e-8;
/// Inner products below `-MONOTONE_SLACK` falsify monotonicity.
pub const MONOTONE_SLACK: f64 = 1e-12;
/// Minty inequality values below `-MINTY_SLACK` falsify a candidate.
pub const MINTY_SLACK: f64 = 1e-10;
/// A ray whose last sampled cosines are within this distance of `-1` fails
/// the angle condition.
pub const ANGLE_BAND: f64 = 1e-3;
/// Membership tolerance used when a candidate point must lie in `K`.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

fn require_square(j: &DMatrix<f64>) -> Result<()> {
    if j.is_square() {
        Ok(())
    } else {
        Err(ViError::arg(format!("matrix must be square, got {}x{}", j.nrows(), j.ncols())))
    }
}

/// Strict row diagonal dominance: `|J_ii| > sum_{j != i} |J_ij|` for every
/// row. Every Gershgorin disk then excludes the origin, so `det J != 0`.
pub fn weak_coupling_check(j: &DMatrix<f64>) -> Result<bool> {
    require_square(j)?;
    Ok(j.row_iter().enumerate().all(|(i, row)| {
        let off: f64 = row.iter().enumerate().filter(|(c, _)| *c != i).map(|(_, v)| v.abs()).sum();
        row[i].abs() > off
    }))
}

/// Smallest eigenvalue of the Gram matrix `J J^T`.
pub fn gram_min_eigenvalue(j: &DMatrix<f64>) -> Result<f64> {
    require_square(j)?;
    let gram = j * j.transpose();
    let eig = SymmetricEigen::new(gram);
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

/// `J J^T` is positive definite (smallest eigenvalue above `tol`), which is
/// equivalent to `J` being nonsingular.
pub fn gram_pd_check(j: &DMatrix<f64>, tol: f64) -> Result<bool> {
    if !(tol > 0.0) {
        return Err(ViError::arg(format!("tolerance must be positive, got {tol}")));
    }
    Ok(gram_min_eigenvalue(j)? > tol)
}

/// `J^{-1} = J^T`, tested as `max |J J^T - I| <= tol`.
pub fn orthogonality_check(j: &DMatrix<f64>, tol: f64) -> Result<bool> {
    require_square(j)?;
    let n = j.nrows();
    let defect = j * j.transpose() - DMatrix::identity(n, n);
    Ok(defect.amax() <= tol)
}

/// Rays `base + r * d` used to probe behaviour far from the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct RayProbeSpec {
    directions: Vec<DVector<f64>>,
    radii: Vec<f64>,
    base: DVector<f64>,
}

impl RayProbeSpec {
    /// Directions are normalized here; radii must be positive and strictly
    /// increasing.
    pub fn new(directions: Vec<DVector<f64>>, radii: Vec<f64>, base: DVector<f64>) -> Result<Self> {
        if directions.is_empty() || radii.is_empty() {
            return Err(ViError::arg("ray probe needs at least one direction and one radius"));
        }
        let mut unit = Vec::with_capacity(directions.len());
        for d in directions {
            check_dim(base.len(), d.len())?;
            let n = d.norm();
            if !(n > 0.0 && n.is_finite()) {
                return Err(ViError::arg("ray direction must be a nonzero finite vector"));
            }
            unit.push(d / n);
        }
        if !(radii[0] > 0.0) || radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(ViError::arg("radii must be positive and strictly increasing"));
        }
        Ok(RayProbeSpec { directions: unit, radii, base })
    }

    /// The `2 * dim` coordinate directions `+-e_i` from `base`.
    pub fn coordinate(base: DVector<f64>, radii: Vec<f64>) -> Result<Self> {
        let dim = base.len();
        let mut dirs = Vec::with_capacity(2 * dim);
        for i in 0..dim {
            for s in [1.0, -1.0] {
                let mut e = DVector::zeros(dim);
                e[i] = s;
                dirs.push(e);
            }
        }
        Self::new(dirs, radii, base)
    }

    /// `count` quasi-uniform directions (Halton points of `[-1, 1]^dim`,
    /// normalized).
    pub fn scattered(base: DVector<f64>, radii: Vec<f64>, count: usize, seed: u64) -> Result<Self> {
        let dim = base.len();
        let dirs: Vec<DVector<f64>> = unit_halton(dim, count * 2, seed)?
            .into_iter()
            .map(|u| DVector::from_iterator(dim, u.into_iter().map(|t| 2.0 * t - 1.0)))
            .filter(|d| d.norm() > 1e-3)
            .take(count)
            .collect();
        Self::new(dirs, radii, base)
    }

    pub fn directions(&self) -> &[DVector<f64>] {
        &self.directions
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn base(&self) -> &DVector<f64> {
        &self.base
    }

    fn point(&self, dir: usize, radius: f64) -> DVector<f64> {
        &self.base + &self.directions[dir] * radius
    }

    fn all_points(&self) -> Vec<DVector<f64>> {
        (0..self.directions.len())
            .flat_map(|d| self.radii.iter().map(move |&r| (d, r)))
            .map(|(d, r)| self.point(d, r))
            .collect()
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({
            "directions": self.directions.len(),
            "radii": self.radii,
            "base": self.base.as_slice(),
        })
    }
}

/// Where a pointwise scan is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum ProbePoints {
    Rays(RayProbeSpec),
    Points(Vec<DVector<f64>>),
}

impl ProbePoints {
    fn points(&self) -> Vec<DVector<f64>> {
        match self {
            ProbePoints::Rays(spec) => spec.all_points(),
            ProbePoints::Points(p) => p.clone(),
        }
    }
}

fn sampling_params(report: DiagnosticsReport, sampling: &Sampling) -> DiagnosticsReport {
    report
        .param("samples", sampling.samples as u64)
        .param("seed", sampling.seed)
        .param("scheme", serde_json::to_value(sampling.scheme).expect("scheme serializes"))
}

/// Nonsingularity of `dF` wherever `F` is nonzero.
///
/// Points with `|F(x)| <= zero_band` are counted as skipped rather than
/// judged; the remaining points must pass [`gram_pd_check`] at `tol`.
pub fn nonsingularity_scan(
    p: &ViProblem,
    probes: &ProbePoints,
    zero_band: f64,
    tol: f64,
) -> Result<DiagnosticsReport> {
    if !(zero_band > 0.0) {
        return Err(ViError::arg("zero band must be positive"));
    }
    let mut report = DiagnosticsReport::new("nonsingularity")
        .param("zero_band", zero_band)
        .param("tol", tol)
        .param("fd_step", DEFAULT_FD_STEP)
        .param("analytic_jacobian", p.has_jacobian());
    let mut skipped = 0usize;
    let mut evaluated = 0usize;
    let mut failures = 0usize;
    let mut worst: Option<(f64, DVector<f64>)> = None;
    for x in probes.points() {
        let fx = p.eval_map(&x)?;
        if fx.norm() <= zero_band {
            skipped += 1;
            continue;
        }
        evaluated += 1;
        let jac = p.jacobian(&x, DEFAULT_FD_STEP)?;
        let lam = gram_min_eigenvalue(&jac)?;
        if worst.as_ref().is_none_or(|(w, _)| lam < *w) {
            worst = Some((lam, x.clone()));
        }
        if !(lam > tol) {
            failures += 1;
            report.witness(Evidence::at("singular_jacobian_violation", x.as_slice(), lam));
        }
    }
    report.metric("evaluated", evaluated as f64);
    report.metric("skipped_near_zero", skipped as f64);
    report.metric("failures", failures as f64);
    if let Some((lam, x)) = worst {
        report.metric("min_gram_eigenvalue", lam);
        report.evidence.push(Evidence::at("min_gram_eigenvalue", x.as_slice(), lam));
    }
    report.verdict = if failures > 0 {
        Verdict::Fail
    } else if evaluated == 0 {
        report.note("every sample fell inside the near-zero band");
        Verdict::Indeterminate
    } else {
        Verdict::Pass
    };
    Ok(report)
}

/// Heuristic maximal-rank probe for the generalized Jacobian of `F`, the
/// natural map or the normal map.
///
/// At each point with `|map(x)| > zero_band`, finite-difference Jacobians are
/// taken at `x` and at `perturbations` random points within `radius` of `x`;
/// all must pass [`gram_pd_check`]. Nonsmooth maps are differentiable almost
/// everywhere, so the perturbed Jacobians sample the limiting set whose convex
/// hull is the generalized Jacobian. Convex combinations are not checked.
#[allow(clippy::too_many_arguments)]
pub fn generalized_rank_probe(
    p: &ViProblem,
    kind: MapKind,
    points: &[DVector<f64>],
    radius: f64,
    perturbations: usize,
    seed: u64,
    zero_band: f64,
    tol: f64,
) -> Result<DiagnosticsReport> {
    if !(radius > 0.0) || !(zero_band > 0.0) {
        return Err(ViError::arg("radius and zero band must be positive"));
    }
    let mut report = DiagnosticsReport::new("generalized_rank")
        .param("map", serde_json::to_value(kind).expect("kind serializes"))
        .param("radius", radius)
        .param("perturbations", perturbations as u64)
        .param("seed", seed)
        .param("zero_band", zero_band)
        .param("tol", tol);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fd = |x: &DVector<f64>| -> Result<DMatrix<f64>> {
        let m = x.len();
        let h = DEFAULT_FD_STEP;
        let mut jac = DMatrix::zeros(m, m);
        let mut probe = x.clone();
        for j in 0..m {
            probe[j] = x[j] + h;
            let f = p.eval_kind(kind, &probe)?;
            probe[j] = x[j] - h;
            let b = p.eval_kind(kind, &probe)?;
            probe[j] = x[j];
            jac.set_column(j, &((f - b) / (2.0 * h)));
        }
        Ok(jac)
    };
    let (mut evaluated, mut skipped, mut failures) = (0usize, 0usize, 0usize);
    let mut min_lam = f64::INFINITY;
    for x in points {
        if p.eval_kind(kind, x)?.norm() <= zero_band {
            skipped += 1;
            continue;
        }
        evaluated += 1;
        let mut probes = vec![x.clone()];
        for _ in 0..perturbations {
            let offset =
                DVector::from_iterator(x.len(), (0..x.len()).map(|_| rng.random_range(-1.0..1.0)));
            probes.push(x + offset * radius);
        }
        for q in probes {
            let lam = gram_min_eigenvalue(&fd(&q)?)?;
            min_lam = min_lam.min(lam);
            if !(lam > tol) {
                failures += 1;
                report.witness(Evidence::at("rank_deficient_violation", q.as_slice(), lam));
            }
        }
    }
    report.metric("evaluated", evaluated as f64);
    report.metric("skipped_near_zero", skipped as f64);
    report.metric("failures", failures as f64);
    report.metric("min_gram_eigenvalue", min_lam);
    report.note("heuristic: finite-difference Jacobians near each point, not the exact generalized Jacobian");
    report.verdict = if failures > 0 {
        Verdict::Fail
    } else if evaluated == 0 {
        Verdict::Indeterminate
    } else {
        Verdict::Pass
    };
    Ok(report)
}

/// Norm-coercivity along rays: `|map(base + r d)|` should grow without
/// bound.
///
/// Per direction, with `n_r` the sampled norms: the direction fails when
/// `n` at the largest radius is below `growth_tol * r_max`; it passes when the
/// growth bound holds and `n` is strictly increasing over the three largest
/// radii; otherwise it is indeterminate. Any failing direction fails the
/// report.
pub fn coercivity_probe(
    kind: MapKind,
    p: &ViProblem,
    spec: &RayProbeSpec,
    growth_tol: f64,
) -> Result<DiagnosticsReport> {
    check_dim(p.dim(), spec.base.len())?;
    if spec.radii.len() < 3 {
        return Err(ViError::arg("coercivity probe needs at least 3 radii"));
    }
    if !(growth_tol >= 0.0) {
        return Err(ViError::arg("growth tolerance must be nonnegative"));
    }
    let mut report = DiagnosticsReport::new("coercivity")
        .param("map", serde_json::to_value(kind).expect("kind serializes"))
        .param("growth_tol", growth_tol)
        .param("rays", spec.describe());
    let r_max = *spec.radii.last().expect("radii nonempty");
    let (mut pass, mut fail, mut indet) = (0usize, 0usize, 0usize);
    for d in 0..spec.directions.len() {
        let norms: Vec<f64> = spec
            .radii
            .iter()
            .map(|&r| p.eval_kind(kind, &spec.point(d, r)).map(|v| v.norm()))
            .collect::<Result<_>>()?;
        let n = norms.len();
        let last = norms[n - 1];
        let growth_ok = last >= growth_tol * r_max;
        let increasing = norms[n - 3] < norms[n - 2] && norms[n - 2] < last;
        let far = spec.point(d, r_max);
        if !growth_ok {
            fail += 1;
            report.witness(Evidence::at("bounded_growth_violation", far.as_slice(), last));
        } else if increasing {
            pass += 1;
            report.evidence.push(Evidence::at("norm_at_largest_radius", far.as_slice(), last));
        } else {
            indet += 1;
            report.evidence.push(Evidence::at("non_increasing_norm", far.as_slice(), last));
        }
    }
    report.metric("directions_pass", pass as f64);
    report.metric("directions_fail", fail as f64);
    report.metric("directions_indeterminate", indet as f64);
    report.verdict = if fail > 0 {
        Verdict::Fail
    } else if indet > 0 {
        Verdict::Indeterminate
    } else {
        Verdict::Pass
    };
    Ok(report)
}

/// `cos` of the angle between `x - P_K(x)` and `F(P_K(x))`, if both vectors
/// are nonzero.
pub fn normal_angle_cosine(p: &ViProblem, x: &DVector<f64>) -> Result<Option<f64>> {
    let px = p.set().project(x)?;
    let out = x - &px;
    let f = p.eval_map(&px)?;
    let denom = out.norm() * f.norm();
    if denom == 0.0 {
        return Ok(None);
    }
    Ok(Some((out.dot(&f) / denom).clamp(-1.0, 1.0)))
}

/// Probe for divergent sequences along which `x - P_K(x)` and `F(P_K(x))`
/// become antiparallel.
///
/// Samples inside `K` are skipped. A direction fails when the cosines at its
/// (up to two) largest sampled radii outside `K` are all within
/// [`ANGLE_BAND`] of `-1`. With every sample inside `K` the report is
/// indeterminate.
pub fn angle_probe(p: &ViProblem, spec: &RayProbeSpec) -> Result<DiagnosticsReport> {
    check_dim(p.dim(), spec.base.len())?;
    let mut report = DiagnosticsReport::new("angle")
        .param("band", ANGLE_BAND)
        .param("rays", spec.describe());
    let (mut examined, mut skipped_dirs, mut failing) = (0usize, 0usize, 0usize);
    let mut skipped_points = 0usize;
    let mut min_cos = f64::INFINITY;
    for d in 0..spec.directions.len() {
        let mut cosines: Vec<(f64, DVector<f64>)> = Vec::new();
        for &r in &spec.radii {
            let x = spec.point(d, r);
            if p.set().contains(&x, 0.0)? {
                skipped_points += 1;
                continue;
            }
            match normal_angle_cosine(p, &x)? {
                Some(c) => cosines.push((c, x)),
                None => skipped_points += 1,
            }
        }
        if cosines.is_empty() {
            skipped_dirs += 1;
            continue;
        }
        examined += 1;
        let tail = &cosines[cosines.len().saturating_sub(2)..];
        for (c, x) in tail {
            min_cos = min_cos.min(*c);
            report.evidence.push(Evidence::at("cosine", x.as_slice(), *c));
        }
        if tail.iter().all(|(c, _)| *c <= -1.0 + ANGLE_BAND) {
            failing += 1;
            let (c, x) = &tail[tail.len() - 1];
            report.witness(Evidence::at("antiparallel_violation", x.as_slice(), *c));
        }
    }
    report.metric("directions_examined", examined as f64);
    report.metric("directions_skipped", skipped_dirs as f64);
    report.metric("points_skipped", skipped_points as f64);
    if examined > 0 {
        report.metric("min_cosine", min_cos);
    }
    report.verdict = if failing > 0 {
        Verdict::Fail
    } else if examined == 0 {
        report.note("no sample left the feasible set");
        Verdict::Indeterminate
    } else {
        Verdict::Pass
    };
    Ok(report)
}

/// Sampled monotonicity: `m(x, y) = <F(x) - F(y), x - y>` over pairs in
/// `region`. Fails with a witness when some `m < -1e-12`; otherwise reports
/// the smallest ratio `m / |x - y|^2` as an estimate of the strong
/// monotonicity constant.
pub fn monotonicity_probe(
    p: &ViProblem,
    region: &ConvexSet,
    sampling: &Sampling,
) -> Result<DiagnosticsReport> {
    check_dim(p.dim(), region.dim())?;
    let mut report = sampling_params(DiagnosticsReport::new("monotonicity"), sampling)
        .param("slack", MONOTONE_SLACK);
    let mut min_ratio = f64::INFINITY;
    let mut min_inner = f64::INFINITY;
    let mut violations = 0usize;
    let mut examined = 0usize;
    for (x, y) in sample_pairs(region, sampling)? {
        let diff = &x - &y;
        let gap2 = diff.norm_squared();
        if gap2 == 0.0 {
            continue;
        }
        examined += 1;
        let m = (p.eval_map(&x)? - p.eval_map(&y)?).dot(&diff);
        min_inner = min_inner.min(m);
        min_ratio = min_ratio.min(m / gap2);
        if m < -MONOTONE_SLACK {
            violations += 1;
            report.witness(Evidence::pair("monotonicity_violation", x.as_slice(), y.as_slice(), m));
        }
    }
    report.metric("pairs_examined", examined as f64);
    report.metric("violations", violations as f64);
    report.metric("min_inner_product", min_inner);
    if examined == 0 {
        report.note("all sampled pairs coincided");
        report.verdict = Verdict::Indeterminate;
        return Ok(report);
    }
    report.metric("estimated_modulus_xi2", min_ratio);
    report.verdict = if violations > 0 { Verdict::Fail } else { Verdict::Pass };
    Ok(report)
}

fn feasible_samples(p: &ViProblem, region: &ConvexSet, sampling: &Sampling) -> Result<Vec<DVector<f64>>> {
    check_dim(p.dim(), region.dim())?;
    sample_points(region, sampling)?.iter().map(|x| p.set().project(x)).collect()
}

/// (Strong) Minty inequality `<F(x), x - x*> >= eta |x - x*|^2` at sampled
/// `x in K`.
///
/// Samples are drawn in `region` and then projected onto `K`.
pub fn minty_certificate(
    p: &ViProblem,
    candidate: &DVector<f64>,
    eta: f64,
    region: &ConvexSet,
    sampling: &Sampling,
) -> Result<DiagnosticsReport> {
    check_dim(p.dim(), candidate.len())?;
    if !p.set().contains(candidate, MEMBERSHIP_TOL)? {
        return Err(ViError::arg("Minty candidate is not in the feasible set"));
    }
    let mut report = sampling_params(DiagnosticsReport::new("minty"), sampling)
        .param("candidate", candidate.as_slice().to_vec())
        .param("eta", eta)
        .param("slack", MINTY_SLACK);
    let mut worst: Option<(f64, DVector<f64>)> = None;
    let mut violations = 0usize;
    let points = feasible_samples(p, region, sampling)?;
    for x in &points {
        let d = x - candidate;
        let value = p.eval_map(x)?.dot(&d) - eta * d.norm_squared();
        if worst.as_ref().is_none_or(|(w, _)| value < *w) {
            worst = Some((value, x.clone()));
        }
        if value < -MINTY_SLACK {
            violations += 1;
            report.witness(Evidence::at("minty_violation", x.as_slice(), value));
        }
    }
    report.metric("points_examined", points.len() as f64);
    report.metric("violations", violations as f64);
    if let Some((value, x)) = worst {
        report.metric("min_margin", value);
        report.evidence.push(Evidence::at("min_margin", x.as_slice(), value));
    }
    report.verdict = if violations > 0 { Verdict::Fail } else { Verdict::Pass };
    Ok(report)
}

/// Nearness of the natural maps of `F` and of a monotone reference `phi`.
///
/// Estimates `sup |phi_nat(x) - F_nat(x)|` over samples in `region` in both
/// the Euclidean and the max norm; the verdict is pass iff the Euclidean
/// sampled sup is below `l`. When the reference carries its solution `x~`,
/// the lower bound `(c / L) |x - x~|^(xi - 1) <= |phi_nat(x)|` is also
/// checked at every sample; a violation means the reference constants are
/// wrong, and the verdict becomes indeterminate.
///
/// With `boundary_distance` (an estimate of the distance from the origin to
/// the image of a bounding sphere under `phi_nat`) the report also states
/// whether the sampled sups meet the degree-nearness thresholds: the max norm
/// against the distance itself, the Euclidean norm against one seventh of it.
pub fn nearness_certificate(
    p: &ViProblem,
    reference: &ReferenceMapping,
    region: &ConvexSet,
    l: f64,
    sampling: &Sampling,
    boundary_distance: Option<f64>,
) -> Result<DiagnosticsReport> {
    check_dim(p.dim(), region.dim())?;
    if !(l > 0.0) {
        return Err(ViError::arg(format!("nearness bound l must be positive, got {l}")));
    }
    let (Some(c), Some(lip)) = (reference.modulus(), reference.lipschitz()) else {
        return Err(ViError::arg(
            "nearness certificate needs the reference monotonicity and Lipschitz constants",
        ));
    };
    let mut report = sampling_params(DiagnosticsReport::new("nearness"), sampling)
        .param("l", l)
        .param("xi", reference.xi())
        .param("c_phi", c)
        .param("L_phi", lip);
    let points = sample_points(region, sampling)?;
    let mut sup2 = 0.0_f64;
    let mut sup_inf = 0.0_f64;
    let mut argsup: Option<DVector<f64>> = None;
    let mut lower_violations = 0usize;
    let mut min_lower_margin = f64::INFINITY;
    for x in &points {
        let phi_nat = reference.natural_map(p.set(), x)?;
        let f_nat = p.natural_map(x)?;
        let gap = &phi_nat - &f_nat;
        let e = gap.norm();
        if e > sup2 || argsup.is_none() {
            sup2 = sup2.max(e);
            argsup = Some(x.clone());
        }
        sup_inf = sup_inf.max(gap.amax());
        if let Some(sol) = reference.known_solution() {
            let bound = c / lip * (x - sol).norm().powf(reference.xi() - 1.0);
            let actual = phi_nat.norm();
            let margin = actual - bound;
            min_lower_margin = min_lower_margin.min(margin);
            if margin < -1e-12 * (1.0 + bound) {
                lower_violations += 1;
                report.witness(Evidence::at("reference_lower_bound_violation", x.as_slice(), margin));
            }
        }
    }
    report.metric("sup_euclidean", sup2);
    report.metric("sup_max_norm", sup_inf);
    report.metric("points_examined", points.len() as f64);
    if let Some(x) = argsup {
        report.evidence.push(Evidence::at("sup_euclidean", x.as_slice(), sup2));
    }
    if reference.known_solution().is_some() {
        report.metric("reference_lower_bound_min_margin", min_lower_margin);
        report.metric("reference_lower_bound_violations", lower_violations as f64);
    }
    if let Some(dist) = boundary_distance {
        report.metric("boundary_distance", dist);
        report.metric("euclidean_threshold", dist / 7.0);
        let euclid_ok = sup2 < dist / 7.0;
        let max_ok = sup_inf < dist;
        report.metric("degree_nearness_euclidean", if euclid_ok { 1.0 } else { 0.0 });
        report.metric("degree_nearness_max_norm", if max_ok { 1.0 } else { 0.0 });
    }
    report.verdict = if lower_violations > 0 {
        report.note("inconsistent reference mapping: natural-map lower bound violated");
        Verdict::Indeterminate
    } else if sup2 < l {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(report)
}

/// Strong Minty property of `x~` inherited from a strongly monotone `phi`.
///
/// If `|phi(x) - F(x)| <= d |x - x~|` on `K` with `d < mu`, then
/// `<F(x), x - x~> >= (mu - d) |x - x~|^2` on `K`. The hypothesis is checked
/// at samples; when it holds the conclusion is checked too, and a conclusion
/// failure is reported as an internal inconsistency.
pub fn strong_minty_via_perturbation(
    p: &ViProblem,
    reference: &ReferenceMapping,
    d: f64,
    region: &ConvexSet,
    sampling: &Sampling,
) -> Result<DiagnosticsReport> {
    let Some(mu) = reference.mu() else {
        return Err(ViError::arg("reference mapping must be strongly monotone with known mu"));
    };
    let Some(x_ref) = reference.known_solution() else {
        return Err(ViError::arg("reference mapping must carry its solution"));
    };
    check_dim(p.dim(), x_ref.len())?;
    if !(d >= 0.0) {
        return Err(ViError::arg(format!("perturbation bound d must be nonnegative, got {d}")));
    }
    if !p.set().contains(x_ref, MEMBERSHIP_TOL)? {
        return Err(ViError::arg("reference solution is not in the feasible set"));
    }
    let mut report = sampling_params(DiagnosticsReport::new("strong_minty_perturbation"), sampling)
        .param("d", d)
        .param("mu", mu)
        .param("x_ref", x_ref.as_slice().to_vec());
    if d >= mu {
        report.note("d not less than mu");
        report.verdict = Verdict::Fail;
        return Ok(report);
    }
    let points = feasible_samples(p, region, sampling)?;
    let mut hyp_violations = 0usize;
    let mut worst_hyp = f64::INFINITY;
    for x in &points {
        let r = (x - x_ref).norm();
        let margin = d * r - (reference.eval(x)? - p.eval_map(x)?).norm();
        worst_hyp = worst_hyp.min(margin);
        if margin < -1e-12 {
            hyp_violations += 1;
            report.witness(Evidence::at("perturbation_bound_violation", x.as_slice(), margin));
        }
    }
    report.metric("points_examined", points.len() as f64);
    report.metric("hypothesis_min_margin", worst_hyp);
    report.metric("hypothesis_violations", hyp_violations as f64);
    if hyp_violations > 0 {
        report.verdict = Verdict::Fail;
        return Ok(report);
    }
    let eta = mu - d;
    report.metric("strong_minty_modulus", eta);
    let mut worst_concl = f64::INFINITY;
    let mut concl_violations = 0usize;
    for x in &points {
        let diff = x - x_ref;
        let r2 = diff.norm_squared();
        let margin = p.eval_map(x)?.dot(&diff) - eta * r2;
        worst_concl = worst_concl.min(margin);
        if margin < -1e-10 * (1.0 + r2) {
            concl_violations += 1;
            report.witness(Evidence::at("conclusion_violation", x.as_slice(), margin));
        }
    }
    report.metric("conclusion_min_margin", worst_concl);
    report.metric("conclusion_violations", concl_violations as f64);
    report.verdict = if concl_violations > 0 {
        report.note("internal inconsistency: hypothesis held but conclusion failed");
        Verdict::Fail
    } else {
        Verdict::Pass
    };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn m(rows: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, data.len() / rows, data)
    }

    fn whole(dim: usize) -> ConvexSet {
        ConvexSet::whole_space(dim).unwrap()
    }

    fn quad1d() -> ViProblem {
        ViProblem::new("quad1d", ConvexSet::boxed(vec![-1.0], vec![2.0]).unwrap(), |x: &DVector<f64>| {
            x.map(|t| t * t)
        })
    }

    #[test]
    fn weak_coupling_examples() {
        assert!(weak_coupling_check(&m(2, &[3.0, 1.0, 1.0, 3.0])).unwrap());
        assert!(!weak_coupling_check(&m(2, &[1.0, 2.0, 2.0, 1.0])).unwrap());
        assert_eq!(m(2, &[3.0, 1.0, 1.0, 3.0]).determinant(), 8.0);
        assert!(weak_coupling_check(&m(1, &[1.0, 2.0])).is_err());
        // equality is not strict dominance
        assert!(!weak_coupling_check(&m(2, &[1.0, 1.0, 0.0, 1.0])).unwrap());
    }

    #[test]
    fn gram_examples() {
        assert!(gram_pd_check(&DMatrix::identity(3, 3), 1e-10).unwrap());
        assert!(!gram_pd_check(&m(2, &[1.0, 0.0, 1.0, 0.0]), 1e-10).unwrap());
        assert!(gram_pd_check(&m(2, &[0.0, 1.0, -1.0, 0.0]), 1e-10).unwrap());
        assert!(gram_pd_check(&m(1, &[1.0, 0.0]), 1e-10).is_err());
    }

    #[test]
    fn orthogonality_examples() {
        assert!(orthogonality_check(&m(2, &[0.0, 1.0, -1.0, 0.0]), 1e-12).unwrap());
        assert!(!orthogonality_check(&(DMatrix::identity(2, 2) * 2.0), 1e-12).unwrap());
        assert!(orthogonality_check(&DMatrix::identity(4, 4), 1e-12).unwrap());
    }

    #[test]
    fn ray_spec_validation() {
        let base = v(&[0.0, 0.0]);
        assert!(RayProbeSpec::new(vec![v(&[1.0, 0.0])], vec![2.0, 1.0], base.clone()).is_err());
        assert!(RayProbeSpec::new(vec![v(&[0.0, 0.0])], vec![1.0], base.clone()).is_err());
        let s = RayProbeSpec::new(vec![v(&[3.0, 4.0])], vec![1.0, 2.0], base).unwrap();
        assert!((s.directions()[0].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nonsingularity_examples() {
        let id = ViProblem::new("identity", whole(2), |x: &DVector<f64>| x.clone());
        let pts = sample_points(&ConvexSet::cube(2, -5.0, 5.0).unwrap(), &Sampling::halton(100, 1)).unwrap();
        let r = nonsingularity_scan(&id, &ProbePoints::Points(pts), DEFAULT_ZERO_BAND, 1e-10).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);

        let sq = ViProblem::new("sq", whole(1), |x: &DVector<f64>| x.map(|t| t * t));
        let pts: Vec<_> = (0..=30)
            .map(|i| -2.0 + 1.5 * i as f64 / 30.0)
            .chain((0..=30).map(|i| 0.5 + 1.5 * i as f64 / 30.0))
            .map(|t| v(&[t]))
            .collect();
        let r = nonsingularity_scan(&sq, &ProbePoints::Points(pts), 0.1, 1e-10).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);

        let coupled = ViProblem::new("coupled", whole(2), |x: &DVector<f64>| {
            v(&[x[0] * x[1], x[0] * x[1]])
        });
        let pts = vec![v(&[1.0, 2.0]), v(&[-0.5, 3.0])];
        let r = nonsingularity_scan(&coupled, &ProbePoints::Points(pts), 0.1, 1e-8).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.metrics["failures"], 2.0);
    }

    #[test]
    fn near_zero_points_are_skipped() {
        let sq = ViProblem::new("sq", whole(1), |x: &DVector<f64>| x.map(|t| t * t));
        let r = nonsingularity_scan(&sq, &ProbePoints::Points(vec![v(&[0.0])]), 1e-8, 1e-10).unwrap();
        assert_eq!(r.verdict, Verdict::Indeterminate);
        assert_eq!(r.metrics["skipped_near_zero"], 1.0);
    }

    #[test]
    fn coercivity_examples() {
        let spec = RayProbeSpec::coordinate(v(&[0.0, 0.0]), vec![1.0, 10.0, 100.0]).unwrap();
        let id = ViProblem::new("identity", whole(2), |x: &DVector<f64>| x.clone());
        assert_eq!(coercivity_probe(MapKind::Mapping, &id, &spec, 0.5).unwrap().verdict, Verdict::Pass);

        let constant = ViProblem::new("const", whole(2), |_: &DVector<f64>| v(&[1.0, 0.0]));
        assert_eq!(coercivity_probe(MapKind::Mapping, &constant, &spec, 0.5).unwrap().verdict, Verdict::Fail);

        let saturating = ViProblem::new("sat", whole(2), |x: &DVector<f64>| x / (1.0 + x.norm()));
        let r = coercivity_probe(MapKind::Mapping, &saturating, &spec, 0.5).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.first_witness().unwrap().value < 1.0);

        let short = RayProbeSpec::coordinate(v(&[0.0, 0.0]), vec![1.0, 10.0]).unwrap();
        assert!(coercivity_probe(MapKind::Mapping, &id, &short, 0.5).is_err());
    }

    #[test]
    fn natural_and_normal_coercivity_on_ball() {
        let ball = ConvexSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        let id = ViProblem::new("identity", ball, |x: &DVector<f64>| x.clone());
        let spec = RayProbeSpec::coordinate(v(&[0.0, 0.0]), vec![2.0, 20.0, 200.0]).unwrap();
        // normal map of the identity on the unit ball is x itself outside the ball
        let r = coercivity_probe(MapKind::Normal, &id, &spec, 0.5).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        let r = coercivity_probe(MapKind::Natural, &id, &spec, 0.5).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn angle_examples() {
        let ball = ConvexSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        let spec = RayProbeSpec::new(vec![v(&[1.0, 0.0])], vec![2.0, 4.0, 8.0], v(&[0.0, 0.0])).unwrap();

        let id = ViProblem::new("identity", ball.clone(), |x: &DVector<f64>| x.clone());
        let r = angle_probe(&id, &spec).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!((r.metrics["min_cosine"] - 1.0).abs() < 1e-15);

        let push = ViProblem::new("push", ball.clone(), |_: &DVector<f64>| v(&[-1.0, 0.0]));
        let r = angle_probe(&push, &spec).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!((r.first_witness().unwrap().value + 1.0).abs() < 1e-15);

        let inside = RayProbeSpec::new(vec![v(&[1.0, 0.0])], vec![0.1, 0.5], v(&[0.0, 0.0])).unwrap();
        assert_eq!(angle_probe(&id, &inside).unwrap().verdict, Verdict::Indeterminate);
    }

    #[test]
    fn monotonicity_examples() {
        let region = ConvexSet::cube(2, -2.0, 2.0).unwrap();
        let id = ViProblem::new("identity", whole(2), |x: &DVector<f64>| x.clone());
        let r = monotonicity_probe(&id, &region, &Sampling::halton(200, 0)).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!((r.metrics["estimated_modulus_xi2"] - 1.0).abs() < 1e-12);

        let a = m(2, &[0.0, 1.0, -1.0, 0.0]);
        let skew = ViProblem::new("skew", whole(2), move |x: &DVector<f64>| &a * x);
        let r = monotonicity_probe(&skew, &region, &Sampling::halton(200, 0)).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.metrics["estimated_modulus_xi2"].abs() < 1e-12);

        let q = quad1d();
        let r = monotonicity_probe(&q, q.set(), &Sampling::halton(200, 0)).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        let w = r.first_witness().unwrap();
        assert!(w.value < -MONOTONE_SLACK);
        // recompute the witness independently
        let (x, y) = (w.points[0][0], w.points[1][0]);
        assert!(((x * x - y * y) * (x - y) - w.value).abs() < 1e-14);
    }

    #[test]
    fn quad1d_monotonicity_witness_from_text() {
        // (x, y) = (-1, 0): (1 - 0) * (-1 - 0) = -1
        let q = quad1d();
        let (x, y) = (v(&[-1.0]), v(&[0.0]));
        let m = (q.eval_map(&x).unwrap() - q.eval_map(&y).unwrap()).dot(&(&x - &y));
        assert_eq!(m, -1.0);
    }

    #[test]
    fn minty_examples() {
        let q = quad1d();
        let grid = Sampling::grid(1000);
        let r = minty_certificate(&q, &v(&[-1.0]), 0.0, q.set(), &grid).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);

        let r = minty_certificate(&q, &v(&[0.0]), 0.0, q.set(), &grid).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        let w = r.first_witness().unwrap();
        assert!(w.points[0][0] < 0.0);
        assert!((w.value - w.points[0][0].powi(3)).abs() < 1e-15);

        let id = ViProblem::new("identity", whole(2), |x: &DVector<f64>| x.clone());
        let region = ConvexSet::cube(2, -3.0, 3.0).unwrap();
        let r = minty_certificate(&id, &v(&[0.0, 0.0]), 1.0, &region, &Sampling::halton(500, 4)).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);

        assert!(minty_certificate(&q, &v(&[3.0]), 0.0, q.set(), &grid).is_err());
    }

    #[test]
    fn minty_witness_at_minus_half() {
        let q = quad1d();
        let x = v(&[-0.5]);
        assert_eq!(q.eval_map(&x).unwrap().dot(&x), -0.125);
    }

    fn sin_perturbed() -> ViProblem {
        ViProblem::new("sinpert", whole(1), |x: &DVector<f64>| x.map(|t| t + 0.1 * t.sin()))
    }

    #[test]
    fn nearness_examples() {
        let region = ConvexSet::boxed(vec![-10.0], vec![10.0]).unwrap();
        let grid = Sampling::grid(10_001);
        let same = ViProblem::new("identity", whole(1), |x: &DVector<f64>| x.clone());
        let phi = ReferenceMapping::identity().with_solution(v(&[0.0]));
        let r = nearness_certificate(&same, &phi, &region, 1e-3, &grid, None).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.metrics["sup_euclidean"], 0.0);
        assert!(r.metrics["reference_lower_bound_min_margin"].abs() < 1e-15);

        let f = sin_perturbed();
        let r = nearness_certificate(&f, &phi, &region, 0.2, &grid, None).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        let sup = r.metrics["sup_euclidean"];
        assert!((0.0999..=0.1).contains(&sup), "{sup}");
        let r = nearness_certificate(&f, &phi, &region, 0.05, &grid, None).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn nearness_needs_constants() {
        let region = ConvexSet::boxed(vec![-1.0], vec![1.0]).unwrap();
        let phi = ReferenceMapping::unconstrained(|x: &DVector<f64>| x.clone(), 2.0).unwrap();
        assert!(nearness_certificate(&sin_perturbed(), &phi, &region, 1.0, &Sampling::grid(10), None).is_err());
    }

    #[test]
    fn nearness_flags_wrong_reference_constants() {
        // claims c / L = 2 for the identity, which only satisfies c / L = 1
        let region = ConvexSet::boxed(vec![-1.0], vec![1.0]).unwrap();
        let phi = ReferenceMapping::strongly_monotone(|x: &DVector<f64>| x.clone(), 2.0)
            .unwrap()
            .with_lipschitz(1.0)
            .unwrap()
            .with_solution(v(&[0.0]));
        let r = nearness_certificate(&sin_perturbed(), &phi, &region, 1.0, &Sampling::grid(11), None).unwrap();
        assert_eq!(r.verdict, Verdict::Indeterminate);
        assert!(r.notes.iter().any(|n| n.contains("inconsistent")));
    }

    #[test]
    fn nearness_reports_degree_thresholds() {
        let region = ConvexSet::boxed(vec![-10.0], vec![10.0]).unwrap();
        let phi = ReferenceMapping::identity();
        let r = nearness_certificate(&sin_perturbed(), &phi, &region, 0.2, &Sampling::grid(2001), Some(7.0)).unwrap();
        assert_eq!(r.metrics["euclidean_threshold"], 1.0);
        assert_eq!(r.metrics["degree_nearness_euclidean"], 1.0);
        let r = nearness_certificate(&sin_perturbed(), &phi, &region, 0.2, &Sampling::grid(2001), Some(0.5)).unwrap();
        assert_eq!(r.metrics["degree_nearness_euclidean"], 0.0);
    }

    fn perturbed() -> ViProblem {
        ViProblem::new("perturbed", ConvexSet::boxed(vec![-2.0], vec![2.0]).unwrap(), |x: &DVector<f64>| {
            x.map(|t| t + 0.5 * t * (5.0 * t).cos())
        })
    }

    #[test]
    fn strong_minty_examples() {
        let p = perturbed();
        let phi = ReferenceMapping::identity().with_solution(v(&[0.0]));
        let r = strong_minty_via_perturbation(&p, &phi, 0.5, p.set(), &Sampling::grid(4001)).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{:?}", r.notes);

        let same = ViProblem::new("identity", ConvexSet::cube(1, -2.0, 2.0).unwrap(), |x: &DVector<f64>| x.clone());
        let r = strong_minty_via_perturbation(&same, &phi, 0.0, same.set(), &Sampling::grid(101)).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.metrics["strong_minty_modulus"], 1.0);

        let tripled = ViProblem::new("3x", ConvexSet::cube(1, -2.0, 2.0).unwrap(), |x: &DVector<f64>| x * 3.0);
        let r = strong_minty_via_perturbation(&tripled, &phi, 2.0, tripled.set(), &Sampling::grid(101)).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.notes.iter().any(|n| n == "d not less than mu"));
    }

    #[test]
    fn strong_minty_detects_hypothesis_violation() {
        let p = perturbed();
        let phi = ReferenceMapping::identity().with_solution(v(&[0.0]));
        let r = strong_minty_via_perturbation(&p, &phi, 0.3, p.set(), &Sampling::grid(4001)).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.first_witness().is_some());
    }

    #[test]
    fn perturbed_is_not_monotone() {
        // F'(1.6) = 1 + 0.5 cos 8 - 4 sin 8 < 0
        let p = perturbed();
        let (a, b) = (v(&[1.55]), v(&[1.65]));
        let m = (p.eval_map(&a).unwrap() - p.eval_map(&b).unwrap()).dot(&(&a - &b));
        assert!(m < 0.0);
    }

    #[test]
    fn generalized_rank_probe_on_natural_map() {
        let id = ViProblem::new("identity", ConvexSet::cube(2, -1.0, 1.0).unwrap(), |x: &DVector<f64>| x.clone());
        let pts = vec![v(&[0.5, 0.5]), v(&[3.0, -2.0])];
        let r = generalized_rank_probe(&id, MapKind::Natural, &pts, 1e-2, 4, 0, 1e-8, 1e-6).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);

        let flat = ViProblem::from_mapping(
            "flat",
            whole(2),
            Arc::new(|x: &DVector<f64>| v(&[x[0] + x[1], x[0] + x[1]])),
        );
        let r = generalized_rank_probe(&flat, MapKind::Natural, &pts, 1e-2, 4, 0, 1e-8, 1e-6).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn reports_are_reproducible() {
        let q = quad1d();
        let a = monotonicity_probe(&q, q.set(), &Sampling::halton(300, 9)).unwrap();
        let b = monotonicity_probe(&q, q.set(), &Sampling::halton(300, 9)).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }
}
