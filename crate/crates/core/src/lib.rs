//! Variational inequalities over simple convex sets: projections, natural
//! and normal maps, sampled existence certificates, and the Korpelevich and
//! Popov projection methods.
//!
//! ```
//! use nalgebra::DVector;
//! use vi_core::{problems, solve, Method, SolverConfig, Status};
//!
//! let p = problems::builtin("quad1d").unwrap();
//! let cfg = SolverConfig::new(Method::Korpelevich, DVector::from_element(1, -0.5)).alpha(0.2);
//! let trace = solve(&p, &cfg).unwrap();
//! assert_eq!(trace.status, Status::Converged);
//! assert!((trace.final_x[0] + 1.0).abs() < 1e-6);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod problem;
pub mod problems;
pub mod report;
pub mod sampling;
pub mod solvers;

pub use error::{Result, ViError};
pub use geometry::{ConvexSet, Shape};
pub use problem::{LipschitzEstimate, MapKind, Mapping, Metadata, ReferenceMapping, ViProblem};
pub use report::{DiagnosticsReport, Evidence, Verdict};
pub use sampling::{Sampling, Scheme};
pub use solvers::{
    descent_check, forward_step, korpelevich_step, popov_step, solve, IterateTrace, Method,
    SolverConfig, Status, TraceSummary,
};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/sets-and-projections.md")]
    mod sets_and_projections {}
    #[doc = include_str!("../../../book/src/natural-and-normal-maps.md")]
    mod natural_and_normal_maps {}
    #[doc = include_str!("../../../book/src/existence-certificates.md")]
    mod existence_certificates {}
    #[doc = include_str!("../../../book/src/korpelevich-and-popov.md")]
    mod korpelevich_and_popov {}
    #[doc = include_str!("../../../book/src/problem-format.md")]
    mod problem_format {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
