//! The variational inequality `VI(K, F)`: find `x* in K` with
//! `<F(x*), x - x*> >= 0` for every `x in K`.
//!
//! Besides evaluating `F`, a [`ViProblem`] provides the two classical
//! reformulations as equations:
//!
//! * the natural map `F_nat(x) = x - P_K(x - F(x))`, whose zeros are exactly
//!   the solutions;
//! * the normal map `F_nor(v) = v - P_K(v) + F(P_K(v))`, whose zeros `v`
//!   give the solutions `P_K(v)`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result, ViError};
use crate::geometry::ConvexSet;
use crate::sampling::{sample_pairs, Sampling};

/// A pure vector field `R^m -> R^m`.
pub type Mapping = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
/// An analytic Jacobian `x -> dF(x)` with `J[i][j] = dF_i / dx_j`.
pub type JacobianFn = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// Central-difference step used when the caller does not pick one.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Which of the three vector fields attached to a problem to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    Mapping,
    Natural,
    Normal,
}

/// Facts about a problem that are known in advance.
///
/// `closed_range_claim` records whether the closed-range hypothesis of the
/// inverse-mapping existence results is claimed for `F`. It cannot be
/// checked numerically and is never used in a computation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(default)]
    pub known_solutions: Vec<Vec<f64>>,
    #[serde(default)]
    pub known_minty_solutions: Vec<Vec<f64>>,
    #[serde(default)]
    pub closed_range_claim: bool,
}

#[derive(Clone)]
pub struct ViProblem {
    name: String,
    set: ConvexSet,
    map: Mapping,
    jacobian: Option<JacobianFn>,
    lipschitz: Option<f64>,
    metadata: Metadata,
}

impl fmt::Debug for ViProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ViProblem")
            .field("name", &self.name)
            .field("set", &self.set)
            .field("has_jacobian", &self.jacobian.is_some())
            .field("lipschitz", &self.lipschitz)
            .field("metadata", &self.metadata)
            .finish()
    }
}

impl ViProblem {
    pub fn new<F>(name: impl Into<String>, set: ConvexSet, map: F) -> Self
    where
        F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        Self::from_mapping(name, set, Arc::new(map))
    }

    pub fn from_mapping(name: impl Into<String>, set: ConvexSet, map: Mapping) -> Self {
        ViProblem {
            name: name.into(),
            set,
            map,
            jacobian: None,
            lipschitz: None,
            metadata: Metadata::default(),
        }
    }

    pub fn with_jacobian<J>(mut self, jacobian: J) -> Self
    where
        J: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(jacobian));
        self
    }

    /// Record a known Lipschitz constant of `F` on `K`.
    pub fn with_lipschitz(mut self, lipschitz: f64) -> Result<Self> {
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(ViError::arg(format!("Lipschitz constant must be positive, got {lipschitz}")));
        }
        self.lipschitz = Some(lipschitz);
        Ok(self)
    }

    pub fn with_metadata(mut self, metadata: Metadata) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }

    pub fn set(&self) -> &ConvexSet {
        &self.set
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    pub fn metadata(&self) -> &Metadata {
        &self.metadata
    }

    pub fn has_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn mapping(&self) -> &Mapping {
        &self.map
    }

    /// `F(x)`, rejecting wrong dimensions and non-finite output.
    pub fn eval_map(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), x.len())?;
        let out = (self.map)(x);
        check_dim(self.dim(), out.len())?;
        if out.iter().any(|v| !v.is_finite()) {
            return Err(ViError::NonFinite(format!("F of problem `{}`", self.name)));
        }
        Ok(out)
    }

    /// `x - P_K(x - F(x))`.
    pub fn natural_map(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let fx = self.eval_map(x)?;
        self.natural_map_with(x, &fx)
    }

    /// Natural map when `F(x)` is already known.
    pub fn natural_map_with(&self, x: &DVector<f64>, fx: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(x - self.set.project(&(x - fx))?)
    }

    /// `v - P_K(v) + F(P_K(v))`.
    pub fn normal_map(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        let pv = self.set.project(v)?;
        let fpv = self.eval_map(&pv)?;
        Ok(v - &pv + fpv)
    }

    pub fn eval_kind(&self, kind: MapKind, x: &DVector<f64>) -> Result<DVector<f64>> {
        match kind {
            MapKind::Mapping => self.eval_map(x),
            MapKind::Natural => self.natural_map(x),
            MapKind::Normal => self.normal_map(x),
        }
    }

    /// Euclidean norm of the natural map.
    pub fn natural_residual(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.natural_map(x)?.norm())
    }

    /// `x` solves the VI up to `tol`: small natural residual and `x in K`.
    pub fn is_solution(&self, x: &DVector<f64>, tol: f64) -> Result<bool> {
        if !(tol > 0.0) {
            return Err(ViError::arg(format!("tolerance must be positive, got {tol}")));
        }
        Ok(self.natural_residual(x)? <= tol && self.set.contains(x, tol)?)
    }

    /// Recover a solution from an approximate zero of the normal map.
    ///
    /// Returns `P_K(v)` when `|F_nor(v)| <= tol`. Since
    /// `F_nat(P_K(v)) = P_K(v) - P_K(v - F_nor(v))`, the natural residual of
    /// the returned point is at most `|F_nor(v)|`.
    pub fn solution_from_normal_zero(
        &self,
        v: &DVector<f64>,
        tol: f64,
    ) -> Result<Option<DVector<f64>>> {
        if !(tol > 0.0) {
            return Err(ViError::arg(format!("tolerance must be positive, got {tol}")));
        }
        if self.normal_map(v)?.norm() <= tol {
            Ok(Some(self.set.project(v)?))
        } else {
            Ok(None)
        }
    }

    /// Central-difference Jacobian with step `h`.
    pub fn jacobian_fd(&self, x: &DVector<f64>, h: f64) -> Result<DMatrix<f64>> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(ViError::arg(format!("finite-difference step must be positive, got {h}")));
        }
        let m = self.dim();
        check_dim(m, x.len())?;
        let mut jac = DMatrix::zeros(m, m);
        let mut probe = x.clone();
        for j in 0..m {
            probe[j] = x[j] + h;
            let forward = self.eval_map(&probe)?;
            probe[j] = x[j] - h;
            let backward = self.eval_map(&probe)?;
            probe[j] = x[j];
            jac.set_column(j, &((forward - backward) / (2.0 * h)));
        }
        Ok(jac)
    }

    /// The analytic Jacobian when present, otherwise central differences.
    pub fn jacobian(&self, x: &DVector<f64>, h: f64) -> Result<DMatrix<f64>> {
        match &self.jacobian {
            Some(jac) => {
                check_dim(self.dim(), x.len())?;
                let j = jac(x);
                if j.nrows() != self.dim() || j.ncols() != self.dim() {
                    return Err(ViError::arg(format!(
                        "analytic Jacobian has shape {}x{}, expected {m}x{m}",
                        j.nrows(),
                        j.ncols(),
                        m = self.dim()
                    )));
                }
                if j.iter().any(|v| !v.is_finite()) {
                    return Err(ViError::NonFinite(format!("Jacobian of `{}`", self.name)));
                }
                Ok(j)
            }
            None => self.jacobian_fd(x, h),
        }
    }

    /// Largest sampled difference quotient `|F(x) - F(y)| / |x - y|` over
    /// `samples` pairs in `region`. A lower bound on the true constant.
    pub fn estimate_lipschitz(
        &self,
        region: &ConvexSet,
        samples: usize,
        seed: u64,
    ) -> Result<LipschitzEstimate> {
        check_dim(self.dim(), region.dim())?;
        if samples < 2 {
            return Err(ViError::arg("Lipschitz estimation needs at least 2 samples"));
        }
        if region.is_singleton() {
            return Err(ViError::arg("Lipschitz estimation region is a single point"));
        }
        let mut best = 0.0_f64;
        let mut used = 0;
        for (x, y) in sample_pairs(region, &Sampling::halton(samples, seed))? {
            let gap = (&x - &y).norm();
            if gap <= f64::EPSILON * (1.0 + x.norm()) {
                continue;
            }
            let q = (self.eval_map(&x)? - self.eval_map(&y)?).norm() / gap;
            best = best.max(q);
            used += 1;
        }
        Ok(LipschitzEstimate { lower_bound: best, pairs: used, seed })
    }
}

/// Result of [`ViProblem::estimate_lipschitz`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzEstimate {
    pub lower_bound: f64,
    pub pairs: usize,
    pub seed: u64,
}

/// A comparison mapping with known monotonicity and Lipschitz constants,
/// used by the nearness and perturbation certificates.
#[derive(Clone)]
pub struct ReferenceMapping {
    phi: Mapping,
    xi: f64,
    modulus: Option<f64>,
    strong: bool,
    lipschitz: Option<f64>,
    known_solution: Option<DVector<f64>>,
}

impl fmt::Debug for ReferenceMapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReferenceMapping")
            .field("xi", &self.xi)
            .field("modulus", &self.modulus)
            .field("strong", &self.strong)
            .field("lipschitz", &self.lipschitz)
            .field("known_solution", &self.known_solution)
            .finish()
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(ViError::arg(format!("{name} must be positive, got {v}")))
    }
}

impl ReferenceMapping {
    /// Strongly monotone `phi` with modulus `mu` (exponent 2).
    pub fn strongly_monotone<F>(phi: F, mu: f64) -> Result<Self>
    where
        F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        Ok(ReferenceMapping {
            phi: Arc::new(phi),
            xi: 2.0,
            modulus: Some(positive("mu", mu)?),
            strong: true,
            lipschitz: None,
            known_solution: None,
        })
    }

    /// `xi`-monotone `phi`: `<phi(x) - phi(y), x - y> >= c |x - y|^xi`.
    pub fn xi_monotone<F>(phi: F, xi: f64, c: f64) -> Result<Self>
    where
        F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        if !(xi > 1.0 && xi.is_finite()) {
            return Err(ViError::arg(format!("exponent xi must exceed 1, got {xi}")));
        }
        Ok(ReferenceMapping {
            phi: Arc::new(phi),
            xi,
            modulus: Some(positive("c", c)?),
            strong: xi == 2.0,
            lipschitz: None,
            known_solution: None,
        })
    }

    /// A mapping whose constants are not known. Certificates that need them
    /// reject it.
    pub fn unconstrained<F>(phi: F, xi: f64) -> Result<Self>
    where
        F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        if !(xi > 1.0 && xi.is_finite()) {
            return Err(ViError::arg(format!("exponent xi must exceed 1, got {xi}")));
        }
        Ok(ReferenceMapping {
            phi: Arc::new(phi),
            xi,
            modulus: None,
            strong: false,
            lipschitz: None,
            known_solution: None,
        })
    }

    /// `phi(x) = x`: strongly monotone and Lipschitz with constant 1.
    pub fn identity() -> Self {
        ReferenceMapping {
            phi: Arc::new(|x: &DVector<f64>| x.clone()),
            xi: 2.0,
            modulus: Some(1.0),
            strong: true,
            lipschitz: Some(1.0),
            known_solution: None,
        }
    }

    pub fn with_lipschitz(mut self, l: f64) -> Result<Self> {
        self.lipschitz = Some(positive("L_phi", l)?);
        Ok(self)
    }

    /// The unique solution of `VI(K, phi)` for the set in use.
    pub fn with_solution(mut self, x: DVector<f64>) -> Self {
        self.known_solution = Some(x);
        self
    }

    pub fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let out = (self.phi)(x);
        check_dim(x.len(), out.len())?;
        if out.iter().any(|v| !v.is_finite()) {
            return Err(ViError::NonFinite("reference mapping".into()));
        }
        Ok(out)
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    /// Monotonicity constant `c` (equal to `mu` for the strong case).
    pub fn modulus(&self) -> Option<f64> {
        self.modulus
    }

    /// Strong monotonicity modulus, if the mapping is strongly monotone.
    pub fn mu(&self) -> Option<f64> {
        if self.strong {
            self.modulus
        } else {
            None
        }
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    pub fn known_solution(&self) -> Option<&DVector<f64>> {
        self.known_solution.as_ref()
    }

    /// Natural map of `phi` over `set`.
    pub fn natural_map(&self, set: &ConvexSet, x: &DVector<f64>) -> Result<DVector<f64>> {
        let px = self.eval(x)?;
        Ok(x - set.project(&(x - px))?)
    }
}
