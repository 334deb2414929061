//! Scalar ridge fixture: a smooth even hump whose top carries strictly
//! negative curvature, paired with a decoupled quadratic dual so the
//! envelope equals the primal potential exactly. Started just off the
//! top, accelerated proximal iterates measure a regularized-value rise
//! inside the trust ball before any candidate clears the descent cut,
//! so a run must extract a negative-curvature pair to make progress —
//! the deterministic way to exercise that branch end to end.

use crate::error::Result;
use crate::problem::{MinimaxProblem, ReferenceSurface, SaddleOracle, SmoothnessSpec};

/// Curvature magnitude at the hump top: `w''(0) = -RIDGE_C`.
pub const RIDGE_C: f64 = 0.3;
/// Third-derivative bound of the potential; also the declared `l2`.
pub const RIDGE_L2: f64 = 1.0;
/// Radius beyond which the potential continues as a plain quadratic.
pub const RIDGE_R: f64 = 1.0;
/// Strong-concavity modulus of the dual quadratic.
pub const RIDGE_MU: f64 = 0.5;

fn cap_curvature() -> f64 {
    RIDGE_L2 * RIDGE_R - RIDGE_C
}

/// The even hump potential: `-(c/2) u^2 + (l2/6) |u|^3` inside the cap
/// radius, quadratic continuation with curvature `l2 r - c` outside.
/// Minima at `|u| = 2c/l2`, local maximum 0 at the origin.
pub fn ridge_w(u: f64) -> f64 {
    let a = u.abs();
    if a <= RIDGE_R {
        -0.5 * RIDGE_C * a * a + RIDGE_L2 / 6.0 * a * a * a
    } else {
        let wr = -0.5 * RIDGE_C * RIDGE_R * RIDGE_R + RIDGE_L2 / 6.0 * RIDGE_R.powi(3);
        let dr = -RIDGE_C * RIDGE_R + 0.5 * RIDGE_L2 * RIDGE_R * RIDGE_R;
        let s = a - RIDGE_R;
        wr + dr * s + 0.5 * cap_curvature() * s * s
    }
}

/// First derivative of [`ridge_w`] (odd in `u`).
pub fn ridge_w_prime(u: f64) -> f64 {
    let a = u.abs();
    let slope = if a <= RIDGE_R {
        -RIDGE_C * a + 0.5 * RIDGE_L2 * a * a
    } else {
        let dr = -RIDGE_C * RIDGE_R + 0.5 * RIDGE_L2 * RIDGE_R * RIDGE_R;
        dr + cap_curvature() * (a - RIDGE_R)
    };
    if u < 0.0 {
        -slope
    } else {
        slope
    }
}

/// Second derivative of [`ridge_w`]: `-c + l2 |u|` capped at `l2 r - c`.
pub fn ridge_w_second(u: f64) -> f64 {
    let a = u.abs();
    if a <= RIDGE_R {
        -RIDGE_C + RIDGE_L2 * a
    } else {
        cap_curvature()
    }
}

struct RidgeOracle;

impl SaddleOracle for RidgeOracle {
    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        ridge_w(x[0]) - 0.5 * RIDGE_MU * y[0] * y[0]
    }

    fn grad_x(&self, x: &[f64], _y: &[f64]) -> Vec<f64> {
        vec![ridge_w_prime(x[0])]
    }

    fn grad_y(&self, _x: &[f64], y: &[f64]) -> Vec<f64> {
        vec![-RIDGE_MU * y[0]]
    }
}

struct RidgeReference;

impl ReferenceSurface for RidgeReference {
    fn phi(&self, x: &[f64]) -> f64 {
        ridge_w(x[0])
    }

    fn grad_phi(&self, x: &[f64]) -> Vec<f64> {
        vec![ridge_w_prime(x[0])]
    }

    fn phi_star(&self) -> Option<f64> {
        Some(ridge_w(2.0 * RIDGE_C / RIDGE_L2))
    }
}

/// The ridge instance and its standard starting point just off the hump
/// top, one primal and one dual coordinate.
///
/// The dual maximizer is `y = 0` everywhere, so every envelope
/// evaluation is exact up to the inner solver's certificate and the
/// reference surface is the potential itself.
pub fn ridge() -> Result<(MinimaxProblem, Vec<f64>)> {
    // curvature spans [-0.3, 0.7]; the cap value 0.7 dominates the dual
    // modulus, and the third derivative is 1 inside the cap, 0 outside
    let spec = SmoothnessSpec::new(0.7, RIDGE_MU, RIDGE_L2)?;
    let problem = MinimaxProblem::new(1, 1, spec, Box::new(RidgeOracle))?
        .with_reference(Box::new(RidgeReference));
    Ok((problem, vec![0.004]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_ladder() {
        let h = 1e-6;
        for u in [-1.7, -1.0 + 3e-6, -0.6, -0.2, 0.1, 0.45, 0.99, 1.3] {
            let fd1 = (ridge_w(u + h) - ridge_w(u - h)) / (2.0 * h);
            assert!((ridge_w_prime(u) - fd1).abs() < 1e-7, "w' at {u}");
            let fd2 = (ridge_w_prime(u + h) - ridge_w_prime(u - h)) / (2.0 * h);
            assert!((ridge_w_second(u) - fd2).abs() < 1e-6, "w'' at {u}");
        }
    }

    #[test]
    fn curvature_range_and_cap() {
        assert_eq!(ridge_w_second(0.0), -RIDGE_C);
        let mut u = -3.0;
        while u <= 3.0 {
            let s = ridge_w_second(u);
            assert!((-RIDGE_C..=0.7).contains(&s), "w'' out of range at {u}");
            // second derivative is 1-Lipschitz: probe against a neighbor
            let v = u + 1e-3;
            assert!((ridge_w_second(v) - s).abs() <= RIDGE_L2 * 1e-3 + 1e-12);
            u += 1e-3;
        }
    }

    #[test]
    fn minimum_location_and_value() {
        let (problem, x0) = ridge().unwrap();
        assert_eq!(x0, vec![0.004]);
        let reference = problem.reference().unwrap();
        let declared = reference.phi_star().unwrap();
        assert!((declared - (-0.018)).abs() < 1e-15);
        // grid search confirms the declared minimum and its locations
        let mut best = f64::INFINITY;
        let mut arg = 0.0;
        let mut u = -3.0;
        while u <= 3.0 {
            let v = ridge_w(u);
            if v < best {
                best = v;
                arg = u;
            }
            u += 1e-6;
        }
        assert!((best - declared).abs() < 1e-11);
        assert!((arg.abs() - 0.6).abs() < 1e-5);
        assert_eq!(ridge_w_prime(0.6), 0.0);
    }

    #[test]
    fn envelope_matches_inner_maximum() {
        let (problem, _) = ridge().unwrap();
        let reference = problem.reference().unwrap();
        for u in [-1.4, -0.5, 0.0, 0.004, 0.3, 0.8, 2.1] {
            let x = [u];
            // inner maximizer of the decoupled dual is the origin
            let gy = problem.raw_grad_y(&x, &[0.0]).unwrap();
            assert_eq!(gy, vec![0.0]);
            let maximized = problem.raw_value(&x, &[0.0]).unwrap();
            assert_eq!(maximized, reference.phi(&x));
            assert_eq!(
                problem.raw_grad_x(&x, &[0.0]).unwrap(),
                reference.grad_phi(&x)
            );
        }
    }

    #[test]
    fn declared_constants_dominate_probes() {
        let (problem, _) = ridge().unwrap();
        let spec = *problem.spec();
        let probes = [-2.0, -1.1, -0.6, -0.15, 0.0, 0.2, 0.55, 1.0, 1.9];
        for &a in &probes {
            for &b in &probes {
                if a == b {
                    continue;
                }
                // joint gradient Lipschitz bound on the x block
                let num = (ridge_w_prime(a) - ridge_w_prime(b)).abs();
                assert!(num <= spec.ell * (a - b).abs() * (1.0 + 1e-12));
                // Hessian Lipschitz bound
                let hnum = (ridge_w_second(a) - ridge_w_second(b)).abs();
                assert!(hnum <= spec.l2 * (a - b).abs() * (1.0 + 1e-12));
            }
        }
        assert!(spec.mu <= spec.ell);
    }
}
