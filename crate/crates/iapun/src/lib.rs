//! Certified first-order solvers for smooth minimax problems
//! `min_x max_y f(x, y)` where `f` is nonconvex in `x` and strongly concave
//! in `y`.
//!
//! The centerpiece is an inexact accelerated proximal-point method
//! ([`solver::run`]) that treats each proximal subproblem as convex until a
//! runtime certificate says otherwise, and converts every certificate failure
//! into either a cheaper descent step or an explicit negative-curvature
//! exploitation step. All inner solves are backed by accelerated gradient
//! descent with computable suboptimality certificates, so every accuracy
//! claim made by the solver is checkable from quantities it actually
//! measured.
//!
//! The crate also ships:
//!
//! - [`instances::chain`]: a chain-structured minimax family whose
//!   coordinate support provably expands one coordinate per oracle call,
//!   together with its closed-form primal envelope — useful as a worst-case
//!   stress test with a known optimum;
//! - [`instances::quadratic`]: small separable families (coupled quadratics
//!   with smooth bumps, and a flat-valley profile) with exact reference
//!   surfaces;
//! - [`baselines`]: gradient descent-ascent and an inexact proximal-point
//!   baseline, instrumented with the same oracle accounting.

pub mod error;
pub mod oracle;
pub mod problem;
pub mod baselines;
pub mod instances;
pub mod solver;
pub mod solvers;
pub mod vec_ops;

pub use baselines::{
    run_gda, run_inexact_appa, BaselineConfig, BaselineMethod, GdaError, GdaRun, GdaSegment,
};
pub use error::{Error, Result};
pub use oracle::{finite_diff_grad, phi_oracle, phi_oracle_warm, InexactEval};
pub use problem::{MinimaxProblem, OracleCounts, OracleSession, ReferenceSurface, SmoothnessSpec};
pub use solver::{
    certify, exploit_ncvx, run, CertifyState, Certification, EpochBranch, EpochTrace, Exploited,
    Flag, FlagOutcome, IapunParams, NcPair, RunCaps, RunError, RunOutcome,
};
pub use solvers::{agd_max, saddle_prox_solve, Ball, CertifiedSolution, SubproblemSpec};
