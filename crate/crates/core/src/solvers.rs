//! Projection methods for `VI(K, F)` with a Lipschitz `F`.
//!
//! * Korpelevich (extragradient):
//!   `y_k = P(x_k - a F(x_k))`, `x_{k+1} = P(x_k - a F(y_k))`.
//! * Popov (past extragradient):
//!   `x_{k+1} = P(x_k - a F(y_k))`, `y_{k+1} = P(x_{k+1} - a F(y_k))`,
//!   one evaluation of `F` per iteration.
//!
//! When `VI(K, F)` has a Minty solution `x~`, both methods produce bounded
//! iterates whose accumulation points solve the VI, for `a < 1/L`
//! (Korpelevich) or `a < 1/(3L)` (Popov). No monotonicity is needed.
//! [`descent_check`] replays the distance inequalities behind those
//! guarantees on a recorded trace.

use std::fmt::Write as _;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result, ViError};
use crate::geometry::ConvexSet;
use crate::problem::ViProblem;
use crate::report::{DiagnosticsReport, Evidence, Verdict};

/// Membership tolerance for starting points and iterates.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Default slack for [`descent_check`].
pub const DEFAULT_DESCENT_SLACK: f64 = 1e-10;
/// Fraction of the stepsize bound used when the stepsize is chosen
/// automatically.
pub const STEP_FRACTION: f64 = 0.9;
/// Popov traces with at most this many rows have every window `[N, M]`
/// checked; longer traces check the windows anchored at 0 and the
/// single-step windows.
pub const FULL_WINDOW_LIMIT: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Korpelevich,
    Popov,
}

impl Method {
    /// Largest admissible stepsize for Lipschitz constant `l`.
    pub fn step_bound(self, l: f64) -> f64 {
        match self {
            Method::Korpelevich => 1.0 / l,
            Method::Popov => 1.0 / (3.0 * l),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Korpelevich => "korpelevich",
            Method::Popov => "popov",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = ViError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "korpelevich" | "extragradient" => Ok(Method::Korpelevich),
            "popov" => Ok(Method::Popov),
            other => Err(ViError::arg(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    /// `None` picks `0.9 * bound(L)` from the known or estimated `L`.
    pub alpha: Option<f64>,
    pub tol: f64,
    pub max_iters: usize,
    pub x0: DVector<f64>,
    /// Popov only; defaults to `x0`.
    pub y0: Option<DVector<f64>>,
    pub record_trace: bool,
    pub minty_reference: Option<DVector<f64>>,
    /// Proceed (with a warning) when `alpha` violates the stepsize bound for
    /// the problem's known `L`.
    pub allow_large_step: bool,
    /// Seed for Lipschitz estimation when `alpha` is `None` and `L` unknown.
    pub seed: u64,
}

impl SolverConfig {
    pub fn new(method: Method, x0: DVector<f64>) -> Self {
        SolverConfig {
            method,
            alpha: None,
            tol: 1e-8,
            max_iters: 100_000,
            x0,
            y0: None,
            record_trace: true,
            minty_reference: None,
            allow_large_step: false,
            seed: 0,
        }
    }

    pub fn alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn y0(mut self, y0: DVector<f64>) -> Self {
        self.y0 = Some(y0);
        self
    }

    pub fn minty_reference(mut self, x: DVector<f64>) -> Self {
        self.minty_reference = Some(x);
        self
    }

    pub fn record_trace(mut self, record: bool) -> Self {
        self.record_trace = record;
        self
    }

    pub fn allow_large_step(mut self, allow: bool) -> Self {
        self.allow_large_step = allow;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    IterationBudgetExhausted,
    Diverged,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::IterationBudgetExhausted => "iteration_budget_exhausted",
            Status::Diverged => "diverged",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSource {
    Given,
    KnownLipschitz,
    EstimatedLipschitz,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub method: Method,
    pub alpha: f64,
    pub step_source: StepSource,
    /// Lipschitz constant behind the stepsize choice or guard, if any.
    pub lipschitz: Option<f64>,
    /// Set when the stepsize relies on an estimated constant.
    pub heuristic: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    /// Natural residual at `x`.
    pub residual: f64,
    /// `|x - y|`.
    pub step_norm: f64,
    /// `|x - x~|` when a reference point was given.
    pub dist_to_ref: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateTrace {
    pub header: TraceHeader,
    /// One row per visited iterate (only the last one if recording is off).
    pub rows: Vec<TraceRow>,
    pub status: Status,
    /// Number of updates `x_k -> x_{k+1}` performed.
    pub iterations: usize,
    pub final_x: DVector<f64>,
    pub final_residual: f64,
    /// Evaluations of `F` spent on the iteration itself.
    pub step_evaluations: usize,
    /// Extra evaluations of `F` spent only on the stopping test.
    pub residual_evaluations: usize,
}

/// The machine-readable run summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub method: Method,
    pub alpha: f64,
    pub iterations: usize,
    pub status: Status,
    pub final_residual: f64,
}

fn fmt_f64(out: &mut String, v: f64) {
    write!(out, "{v:.16e}").expect("writing to a String");
}

fn fmt_vec(out: &mut String, v: &DVector<f64>) {
    for (i, c) in v.iter().enumerate() {
        if i > 0 {
            out.push(';');
        }
        fmt_f64(out, *c);
    }
}

impl IterateTrace {
    pub fn summary(&self) -> TraceSummary {
        TraceSummary {
            method: self.header.method,
            alpha: self.header.alpha,
            iterations: self.iterations,
            status: self.status,
            final_residual: self.final_residual,
        }
    }

    /// Whether `rows` holds every iterate from `k = 0`.
    pub fn is_complete(&self) -> bool {
        self.rows.len() == self.iterations + 1
            && self.rows.iter().enumerate().all(|(i, r)| r.k == i)
    }

    /// CSV with header `k,x,y,residual,step_norm,dist_to_ref`; vectors are
    /// `;`-joined and every number has 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,x,y,residual,step_norm,dist_to_ref\n");
        for r in &self.rows {
            write!(out, "{},", r.k).expect("writing to a String");
            fmt_vec(&mut out, &r.x);
            out.push(',');
            fmt_vec(&mut out, &r.y);
            out.push(',');
            fmt_f64(&mut out, r.residual);
            out.push(',');
            fmt_f64(&mut out, r.step_norm);
            out.push(',');
            if let Some(d) = r.dist_to_ref {
                fmt_f64(&mut out, d);
            }
            out.push('\n');
        }
        out
    }
}

fn require_feasible(set: &ConvexSet, x: &DVector<f64>, what: &str) -> Result<()> {
    check_dim(set.dim(), x.len())?;
    if set.contains(x, FEASIBILITY_TOL)? {
        Ok(())
    } else {
        Err(ViError::arg(format!("{what} is not in the feasible set")))
    }
}

fn require_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(ViError::arg(format!("stepsize must be positive, got {alpha}")))
    }
}

fn finite(v: DVector<f64>, what: &str) -> Result<DVector<f64>> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(v)
    } else {
        Err(ViError::NonFinite(what.to_string()))
    }
}

/// One plain projected forward step `P(x - a F(x))`.
pub fn forward_step(p: &ViProblem, x: &DVector<f64>, alpha: f64) -> Result<DVector<f64>> {
    require_alpha(alpha)?;
    let fx = p.eval_map(x)?;
    finite(p.set().project(&(x - fx * alpha))?, "forward step")
}

/// One Korpelevich step from `x`. Returns `(y, x_next)`.
pub fn korpelevich_step(
    p: &ViProblem,
    x: &DVector<f64>,
    alpha: f64,
) -> Result<(DVector<f64>, DVector<f64>)> {
    require_alpha(alpha)?;
    require_feasible(p.set(), x, "iterate")?;
    let fx = p.eval_map(x)?;
    korpelevich_from(p, x, &fx, alpha)
}

fn korpelevich_from(
    p: &ViProblem,
    x: &DVector<f64>,
    fx: &DVector<f64>,
    alpha: f64,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let y = finite(p.set().project(&(x - fx * alpha))?, "extrapolation point")?;
    let fy = p.eval_map(&y)?;
    let next = finite(p.set().project(&(x - fy * alpha))?, "iterate")?;
    Ok((y, next))
}

/// One Popov step. Returns `(x_next, y_next)`; evaluates `F` once, at `y_prev`.
pub fn popov_step(
    p: &ViProblem,
    x: &DVector<f64>,
    y_prev: &DVector<f64>,
    alpha: f64,
) -> Result<(DVector<f64>, DVector<f64>)> {
    require_alpha(alpha)?;
    require_feasible(p.set(), x, "iterate")?;
    require_feasible(p.set(), y_prev, "extrapolation point")?;
    let fy = p.eval_map(y_prev)?;
    popov_from(p, x, &fy, alpha)
}

fn popov_from(
    p: &ViProblem,
    x: &DVector<f64>,
    fy: &DVector<f64>,
    alpha: f64,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let step = fy * alpha;
    let next = finite(p.set().project(&(x - &step))?, "iterate")?;
    let y_next = finite(p.set().project(&(&next - &step))?, "extrapolation point")?;
    Ok((next, y_next))
}

fn choose_alpha(p: &ViProblem, cfg: &SolverConfig) -> Result<TraceHeader> {
    let mut header = TraceHeader {
        method: cfg.method,
        alpha: 0.0,
        step_source: StepSource::Given,
        lipschitz: p.lipschitz(),
        heuristic: false,
        warnings: Vec::new(),
    };
    match (cfg.alpha, p.lipschitz()) {
        (Some(alpha), known) => {
            require_alpha(alpha)?;
            header.alpha = alpha;
            if let Some(l) = known {
                let bound = cfg.method.step_bound(l);
                if alpha >= bound {
                    let msg = format!(
                        "stepsize {alpha} is not below the {} bound {bound} for L = {l}",
                        cfg.method.as_str()
                    );
                    if !cfg.allow_large_step {
                        return Err(ViError::arg(msg));
                    }
                    header.warnings.push(msg);
                }
            }
        }
        (None, Some(l)) => {
            header.alpha = STEP_FRACTION * cfg.method.step_bound(l);
            header.step_source = StepSource::KnownLipschitz;
        }
        (None, None) => {
            let region = if p.set().is_bounded() {
                p.set().clone()
            } else {
                ConvexSet::ball(cfg.x0.as_slice().to_vec(), cfg.x0.norm().max(1.0))?
            };
            let est = p.estimate_lipschitz(&region, 1000, cfg.seed)?;
            header.step_source = StepSource::EstimatedLipschitz;
            header.heuristic = true;
            header.lipschitz = Some(est.lower_bound);
            header.alpha = if est.lower_bound > 0.0 {
                STEP_FRACTION * cfg.method.step_bound(est.lower_bound)
            } else {
                header.warnings.push("estimated Lipschitz constant is zero; using alpha = 1".into());
                1.0
            };
            header.warnings.push(format!(
                "stepsize from a sampled Lipschitz lower bound ({} pairs, seed {})",
                est.pairs, est.seed
            ));
        }
    }
    Ok(header)
}

/// Run the configured method until the natural residual drops to `tol` or
/// the iteration budget is spent.
pub fn solve(p: &ViProblem, cfg: &SolverConfig) -> Result<IterateTrace> {
    if !(cfg.tol > 0.0) {
        return Err(ViError::arg("tolerance must be positive"));
    }
    if cfg.max_iters == 0 {
        return Err(ViError::arg("iteration budget must be positive"));
    }
    require_feasible(p.set(), &cfg.x0, "x0")?;
    if let Some(y0) = &cfg.y0 {
        require_feasible(p.set(), y0, "y0")?;
    }
    if let Some(r) = &cfg.minty_reference {
        check_dim(p.dim(), r.len())?;
    }
    let header = choose_alpha(p, cfg)?;
    let alpha = header.alpha;

    let mut x = cfg.x0.clone();
    let mut y = cfg.y0.clone().unwrap_or_else(|| cfg.x0.clone());
    let mut rows: Vec<TraceRow> = Vec::new();
    let mut step_evaluations = 0usize;
    let mut residual_evaluations = 0usize;
    let mut status = Status::IterationBudgetExhausted;
    let mut final_residual = f64::NAN;
    let mut final_x = x.clone();
    let mut k = 0usize;

    let diverged = |e: &ViError| matches!(e, ViError::NonFinite(_));

    loop {
        // F(x_k): reused as the first Korpelevich evaluation, extra for Popov
        let fx = match p.eval_map(&x) {
            Ok(v) => v,
            Err(e) if diverged(&e) => {
                status = Status::Diverged;
                break;
            }
            Err(e) => return Err(e),
        };
        let residual = p.natural_map_with(&x, &fx)?.norm();
        let mut next = None;
        match cfg.method {
            Method::Korpelevich => {
                step_evaluations += 1;
                match korpelevich_from(p, &x, &fx, alpha) {
                    Ok((yk, xn)) => {
                        y = yk;
                        step_evaluations += 1;
                        next = Some((xn, None));
                    }
                    Err(e) if diverged(&e) => status = Status::Diverged,
                    Err(e) => return Err(e),
                }
            }
            Method::Popov => {
                residual_evaluations += 1;
            }
        }
        let row = TraceRow {
            k,
            step_norm: (&x - &y).norm(),
            dist_to_ref: cfg.minty_reference.as_ref().map(|r| (&x - r).norm()),
            x: x.clone(),
            y: y.clone(),
            residual,
        };
        if cfg.record_trace || rows.is_empty() {
            rows.push(row);
        } else {
            rows[0] = row;
        }
        final_x = x.clone();
        final_residual = residual;
        if status == Status::Diverged {
            break;
        }
        if residual <= cfg.tol {
            status = Status::Converged;
            break;
        }
        if k == cfg.max_iters {
            status = Status::IterationBudgetExhausted;
            break;
        }
        if cfg.method == Method::Popov {
            let fy = match p.eval_map(&y) {
                Ok(v) => v,
                Err(e) if diverged(&e) => {
                    status = Status::Diverged;
                    break;
                }
                Err(e) => return Err(e),
            };
            step_evaluations += 1;
            match popov_from(p, &x, &fy, alpha) {
                Ok((xn, yn)) => next = Some((xn, Some(yn))),
                Err(e) if diverged(&e) => {
                    status = Status::Diverged;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        let (xn, yn) = next.expect("step computed");
        x = xn;
        if let Some(yn) = yn {
            y = yn;
        }
        k += 1;
    }

    Ok(IterateTrace {
        header,
        rows,
        status,
        iterations: k,
        final_x,
        final_residual,
        step_evaluations,
        residual_evaluations,
    })
}

/// Replay the distance inequalities that drive convergence, using a Minty
/// point `x_tilde` and Lipschitz constant `l`.
///
/// Korpelevich traces are checked step by step:
/// `|x_{k+1} - x~|^2 <= |x_k - x~|^2 - (1 - a^2 L^2) |x_k - y_k|^2`.
///
/// Popov traces are checked in summed form over windows `[N, M]`:
/// ```text
/// |x_{M+1} - x~|^2 <= |x_N - x~|^2 + E_N
///                     - (1 - aL)  sum_{k=N..M}   |x_k - y_k|^2
///                     - (1 - 3aL) sum_{k=N..M-1} |x_{k+1} - y_k|^2
///                     - (1 - 2aL) |x_{M+1} - y_M|^2
/// ```
/// with `E_N = aL |x_N - y_{N-1}|^2` for `N >= 1`. The starting point `y_0`
/// is arbitrary, so for `N = 0` the entry term is
/// `E_0 = |x_0 - a F(y_0) - y_0|^2 / (aL)`, which bounds the same cross term
/// without a `y_{-1}`.
///
/// Each inequality is allowed `slack`. The caller is responsible for `x~`
/// actually being a Minty point and `l` a valid Lipschitz constant on `K`.
pub fn descent_check(
    p: &ViProblem,
    trace: &IterateTrace,
    x_tilde: &DVector<f64>,
    alpha: f64,
    l: f64,
    slack: f64,
) -> Result<DiagnosticsReport> {
    require_feasible(p.set(), x_tilde, "reference point")?;
    if !trace.is_complete() {
        return Err(ViError::arg("descent check needs a complete trace"));
    }
    if alpha != trace.header.alpha {
        return Err(ViError::arg(format!(
            "stepsize {alpha} does not match the trace stepsize {}",
            trace.header.alpha
        )));
    }
    if let Some(row) = trace.rows.first() {
        check_dim(p.dim(), row.x.len())?;
    }
    if !(l > 0.0) || !(slack >= 0.0) {
        return Err(ViError::arg("Lipschitz constant must be positive and slack nonnegative"));
    }
    let al = alpha * l;
    let method = trace.header.method;
    match method {
        Method::Korpelevich if al >= 1.0 => {
            return Err(ViError::arg(format!("alpha * L = {al} is not below 1")))
        }
        Method::Popov if 3.0 * al >= 1.0 => {
            return Err(ViError::arg(format!("3 * alpha * L = {} is not below 1", 3.0 * al)))
        }
        _ => {}
    }
    let report = DiagnosticsReport::new("descent")
        .param("method", method.as_str())
        .param("alpha", alpha)
        .param("L", l)
        .param("slack", slack)
        .param("x_ref", x_tilde.as_slice().to_vec());
    match method {
        Method::Korpelevich => Ok(korpelevich_descent(report, trace, x_tilde, al, slack)),
        Method::Popov => popov_descent(p, report, trace, x_tilde, alpha, al, slack),
    }
}

fn korpelevich_descent(
    mut report: DiagnosticsReport,
    trace: &IterateTrace,
    x_tilde: &DVector<f64>,
    al: f64,
    slack: f64,
) -> DiagnosticsReport {
    let rows = &trace.rows;
    let mut first = None;
    let mut min_margin = f64::INFINITY;
    for k in 0..rows.len().saturating_sub(1) {
        let lhs = (&rows[k + 1].x - x_tilde).norm_squared();
        let rhs = (&rows[k].x - x_tilde).norm_squared()
            - (1.0 - al * al) * (&rows[k].x - &rows[k].y).norm_squared();
        let margin = rhs - lhs;
        min_margin = min_margin.min(margin);
        if margin < -slack {
            first.get_or_insert(k);
            report.witness(Evidence::at("descent_violation", rows[k].x.as_slice(), margin));
        }
    }
    report.metric("steps_checked", rows.len().saturating_sub(1) as f64);
    report.metric("min_margin", min_margin);
    finish(report, first)
}

fn popov_descent(
    p: &ViProblem,
    mut report: DiagnosticsReport,
    trace: &IterateTrace,
    x_tilde: &DVector<f64>,
    alpha: f64,
    al: f64,
    slack: f64,
) -> Result<DiagnosticsReport> {
    let rows = &trace.rows;
    let n = rows.len();
    if n < 2 {
        report.metric("windows_checked", 0.0);
        report.note("trace has no completed step");
        report.verdict = Verdict::Indeterminate;
        return Ok(report);
    }
    let dist: Vec<f64> = rows.iter().map(|r| (&r.x - x_tilde).norm_squared()).collect();
    let gap: Vec<f64> = rows.iter().map(|r| (&r.x - &r.y).norm_squared()).collect();
    // cross[k] = |x_{k+1} - y_k|^2
    let cross: Vec<f64> = (0..n - 1).map(|k| (&rows[k + 1].x - &rows[k].y).norm_squared()).collect();
    let mut gap_sum = vec![0.0; n + 1];
    for k in 0..n {
        gap_sum[k + 1] = gap_sum[k] + gap[k];
    }
    let mut cross_sum = vec![0.0; n];
    for k in 0..n - 1 {
        cross_sum[k + 1] = cross_sum[k] + cross[k];
    }
    let entry = |big_n: usize| -> Result<f64> {
        if big_n == 0 {
            let (x0, y0) = (&rows[0].x, &rows[0].y);
            let w = x0 - p.eval_map(y0)? * alpha - y0;
            Ok(w.norm_squared() / al)
        } else {
            Ok(al * (&rows[big_n].x - &rows[big_n - 1].y).norm_squared())
        }
    };
    let check = |big_n: usize, m: usize, e: f64| -> f64 {
        let rhs = dist[big_n] + e
            - (1.0 - al) * (gap_sum[m + 1] - gap_sum[big_n])
            - (1.0 - 3.0 * al) * (cross_sum[m] - cross_sum[big_n])
            - (1.0 - 2.0 * al) * cross[m];
        rhs - dist[m + 1]
    };
    let full = n <= FULL_WINDOW_LIMIT;
    let mut first: Option<usize> = None;
    let mut min_margin = f64::INFINITY;
    let mut windows = 0usize;
    let mut visit = |big_n: usize, m: usize, e: f64, report: &mut DiagnosticsReport| {
        let margin = check(big_n, m, e);
        windows += 1;
        min_margin = min_margin.min(margin);
        if margin < -slack {
            if first.is_none_or(|f| m < f) {
                first = Some(m);
            }
            report.witness(Evidence {
                label: "window_violation".into(),
                points: vec![vec![big_n as f64, m as f64]],
                value: margin,
            });
        }
    };
    for big_n in 0..n - 1 {
        let e = entry(big_n)?;
        if full || big_n == 0 {
            for m in big_n..n - 1 {
                visit(big_n, m, e, &mut report);
            }
        } else {
            visit(big_n, big_n, e, &mut report);
        }
    }
    report.metric("windows_checked", windows as f64);
    report.metric("min_margin", min_margin);
    report.metric("all_windows", if full { 1.0 } else { 0.0 });
    Ok(finish(report, first))
}

fn finish(mut report: DiagnosticsReport, first: Option<usize>) -> DiagnosticsReport {
    match first {
        Some(k) => {
            report.metric("first_violation", k as f64);
            report.verdict = Verdict::Fail;
        }
        None => report.verdict = Verdict::Pass,
    }
    report
}
