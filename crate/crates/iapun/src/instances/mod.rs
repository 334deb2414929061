//! Benchmark problem families: the chain-structured worst-case instance
//! and two smooth synthetic families with computable envelopes.

pub mod chain;
pub mod quadratic;
pub mod ridge;

pub use chain::{
    build_scaled, build_unscaled, chain_order, estimate_abs_constants, h_block_constants, h_max,
    phi_closed_form, scale_instance, track_support, upsilon, upsilon_prime, upsilon_second,
    upsilon_third, upsilon_third_sup, HardInstanceSpec, SupportTracker, UPSILON_SECOND_SUP,
};
pub use quadratic::{coupled_quadratic, valley, CoupledQuadraticConfig};
pub use ridge::{ridge, ridge_w, ridge_w_prime, ridge_w_second};
