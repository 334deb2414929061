//! Inner solvers: a monitored accelerated-gradient engine and the certified
//! proximal saddle solver built on top of it.

mod agd;
mod saddle;

pub use agd::{agd_minimize, AgdConfig, AgdSolution, Ball};
pub use saddle::{agd_max, saddle_prox_solve, CertifiedSolution, SubproblemSpec};
