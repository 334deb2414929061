//! Inexact first-order oracle for the envelope `Phi(x) = max_y f(x, y)`,
//! and a finite-difference gradient check helper.

use crate::error::{Error, Result};
use crate::problem::OracleSession;
use crate::solvers::agd_max;
use crate::vec_ops::ensure_finite;

/// One inexact evaluation of the envelope `Phi` at a point `x`:
/// `|phi - Phi(x)| <= delta_y` and `|g - grad Phi(x)| <= big_delta_y`,
/// both backed by the certified inner maximization that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct InexactEval {
    /// Approximate envelope value `Phi(x)`.
    pub phi: f64,
    /// Approximate envelope gradient `grad Phi(x)` (length `dim_x`).
    pub g: Vec<f64>,
    /// Value-accuracy this evaluation was asked to meet.
    pub delta_y: f64,
    /// Gradient-accuracy this evaluation was asked to meet.
    pub big_delta_y: f64,
    /// Oracle calls the inner maximization spent.
    pub inner_iters: u64,
}

/// Evaluates the envelope `Phi` at `x` to value accuracy `delta_y` and
/// gradient accuracy `big_delta_y`, starting the inner maximization from
/// the origin. See [`phi_oracle_warm`].
pub fn phi_oracle(
    session: &mut OracleSession,
    x: &[f64],
    delta_y: f64,
    big_delta_y: f64,
) -> Result<InexactEval> {
    let y0 = vec![0.0; session.problem().dim_y()];
    phi_oracle_warm(session, x, delta_y, big_delta_y, &y0).map(|(eval, _)| eval)
}

/// Evaluates the envelope `Phi` at `x` to value accuracy `delta_y` and
/// gradient accuracy `big_delta_y`, warm-starting the inner maximization
/// from `y0`. Returns the evaluation and the inner maximizer for reuse.
///
/// The inner solve targets a certified gap of
/// `min(delta_y, mu * big_delta_y^2 / (2 ell^2)) / 4` (the quarter is a
/// safety margin), which guarantees both `|phi - Phi(x)| <= delta_y` and,
/// via strong concavity, `|g - grad Phi(x)| <= big_delta_y`.
pub fn phi_oracle_warm(
    session: &mut OracleSession,
    x: &[f64],
    delta_y: f64,
    big_delta_y: f64,
    y0: &[f64],
) -> Result<(InexactEval, Vec<f64>)> {
    for (v, name) in [(delta_y, "delta_y"), (big_delta_y, "big_delta_y")] {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "envelope oracle accuracy {name} must be finite and positive, got {v}"
            )));
        }
    }
    ensure_finite(x, "envelope oracle point")?;
    let spec = *session.problem().spec();
    let acc = delta_y.min(spec.mu * big_delta_y * big_delta_y / (2.0 * spec.ell * spec.ell));

    let before = session.counts();
    let sol = agd_max(session, x, y0, 0.25 * acc)?;
    let y_opt = sol.point;
    let phi = session.value(x, &y_opt)?;
    let g = session.grad_x(x, &y_opt)?;
    let inner_iters = session.counts().since(&before).total();

    Ok((
        InexactEval {
            phi,
            g,
            delta_y,
            big_delta_y,
            inner_iters,
        },
        y_opt,
    ))
}

/// Central-difference gradient of a scalar function.
///
/// # Arguments
///
/// * `f` - scalar function of a dense vector
/// * `x` - evaluation point
/// * `step` - difference step; `None` picks
///   `eps_machine^(1/3) * max(1, |x|_inf)`
///
/// # Example
///
/// ```
/// use iapun::finite_diff_grad;
/// let g = finite_diff_grad(|v: &[f64]| v[0] * v[0] + 3.0 * v[1], &[2.0, 0.0], None);
/// assert!((g[0] - 4.0).abs() < 1e-8);
/// assert!((g[1] - 3.0).abs() < 1e-8);
/// ```
pub fn finite_diff_grad<F>(mut f: F, x: &[f64], step: Option<f64>) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let h = step.unwrap_or_else(|| {
        let scale = crate::vec_ops::norm_inf(x).max(1.0);
        f64::EPSILON.cbrt() * scale
    });
    let mut work = x.to_vec();
    let mut g = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let xi = x[i];
        work[i] = xi + h;
        let fp = f(&work);
        work[i] = xi - h;
        let fm = f(&work);
        work[i] = xi;
        g.push((fp - fm) / (2.0 * h));
    }
    g
}
