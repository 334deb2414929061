//! Smooth synthetic families with closed-form envelopes: a separable
//! coupled-quadratic family (nonconvex through a bounded-curvature bump)
//! and a two-dimensional plateau valley whose envelope gradient decays
//! polynomially, useful for oracle-complexity slope measurements.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{MinimaxProblem, ReferenceSurface, SaddleOracle, SmoothnessSpec};

/// Bounded nonconvex bump `u^2 / (1 + u^2)`: curvature in `[-1/2, 2]`,
/// third derivative bounded by [`psi_third_sup`].
pub fn psi(u: f64) -> f64 {
    u * u / (1.0 + u * u)
}

/// First derivative of [`psi`]: `2u / (1 + u^2)^2`.
pub fn psi_prime(u: f64) -> f64 {
    let q = 1.0 + u * u;
    2.0 * u / (q * q)
}

/// Second derivative of [`psi`]: `(2 - 6u^2) / (1 + u^2)^3`.
pub fn psi_second(u: f64) -> f64 {
    let q = 1.0 + u * u;
    (2.0 - 6.0 * u * u) / (q * q * q)
}

/// Third derivative of [`psi`]: `24u (u^2 - 1) / (1 + u^2)^4`.
pub fn psi_third(u: f64) -> f64 {
    let q = 1.0 + u * u;
    24.0 * u * (u * u - 1.0) / (q * q * q * q)
}

/// Supremum of `|psi_third|` (~4.6685), attained where `u^2 = 1 -
/// sqrt(4/5)` (the critical points solve `5u^4 - 10u^2 + 1 = 0`).
pub fn psi_third_sup() -> f64 {
    let mut sup = 0.0f64;
    for s in [1.0 - 0.8f64.sqrt(), 1.0 + 0.8f64.sqrt()] {
        let u = s.sqrt();
        sup = sup.max(psi_third(u).abs());
        sup = sup.max(psi_third(-u).abs());
    }
    sup
}

/// Configuration of the separable coupled-quadratic family
///
///   f(x, y) = sum_i [ b_i (x_i - xbar_i)^2 / 2 + w psi(x_i)
///                     + c_i x_i y_i - mu y_i^2 / 2 ].
///
/// Each coordinate pair is independent, so the envelope and its minimum
/// are computable to machine precision one coordinate at a time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoupledQuadraticConfig {
    /// Quadratic weights, all positive.
    pub b_diag: Vec<f64>,
    /// Quadratic centers, same length as `b_diag`.
    pub xbar: Vec<f64>,
    /// Bilinear coupling per coordinate, same length as `b_diag`.
    pub coupling: Vec<f64>,
    /// Weight of the nonconvex bump, positive.
    pub curve_weight: f64,
    /// Strong-concavity modulus of every dual coordinate, positive.
    pub mu: f64,
}

impl CoupledQuadraticConfig {
    fn validate(&self) -> Result<()> {
        let m = self.b_diag.len();
        if m == 0 {
            return Err(Error::InvalidParameter(
                "coupled-quadratic family needs at least one coordinate".into(),
            ));
        }
        if self.xbar.len() != m || self.coupling.len() != m {
            return Err(Error::DimensionMismatch {
                context: "coupled-quadratic config vectors",
                expected: m,
                actual: self.xbar.len().min(self.coupling.len()),
            });
        }
        for v in self.b_diag.iter().chain(&self.xbar).chain(&self.coupling) {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    context: "coupled-quadratic config",
                });
            }
        }
        if self.b_diag.iter().any(|b| *b <= 0.0) {
            return Err(Error::InvalidParameter(
                "quadratic weights must be positive".into(),
            ));
        }
        if !(self.curve_weight > 0.0) || !self.curve_weight.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "curve weight must be positive and finite, got {}",
                self.curve_weight
            )));
        }
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "strong-concavity modulus must be positive and finite, got {}",
                self.mu
            )));
        }
        Ok(())
    }
}

struct CoupledQuadraticOracle {
    cfg: CoupledQuadraticConfig,
}

impl SaddleOracle for CoupledQuadraticOracle {
    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        let c = &self.cfg;
        let mut v = 0.0;
        for i in 0..c.b_diag.len() {
            let d = x[i] - c.xbar[i];
            v += 0.5 * c.b_diag[i] * d * d + c.curve_weight * psi(x[i]);
            v += c.coupling[i] * x[i] * y[i] - 0.5 * c.mu * y[i] * y[i];
        }
        v
    }

    fn grad_x(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let c = &self.cfg;
        (0..c.b_diag.len())
            .map(|i| {
                c.b_diag[i] * (x[i] - c.xbar[i])
                    + c.curve_weight * psi_prime(x[i])
                    + c.coupling[i] * y[i]
            })
            .collect()
    }

    fn grad_y(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let c = &self.cfg;
        (0..c.b_diag.len())
            .map(|i| c.coupling[i] * x[i] - c.mu * y[i])
            .collect()
    }
}

struct CoupledQuadraticReference {
    cfg: CoupledQuadraticConfig,
    phi_star: f64,
}

fn coupled_phi_coord(cfg: &CoupledQuadraticConfig, i: usize, u: f64) -> f64 {
    let q = cfg.coupling[i] * cfg.coupling[i] / cfg.mu;
    let d = u - cfg.xbar[i];
    0.5 * cfg.b_diag[i] * d * d + cfg.curve_weight * psi(u) + 0.5 * q * u * u
}

fn coupled_phi_coord_grad(cfg: &CoupledQuadraticConfig, i: usize, u: f64) -> f64 {
    let q = cfg.coupling[i] * cfg.coupling[i] / cfg.mu;
    cfg.b_diag[i] * (u - cfg.xbar[i]) + cfg.curve_weight * psi_prime(u) + q * u
}

/// Global minimum of one envelope coordinate: dense grid over a safe
/// bracket to find the basin, then bisection on the derivative to machine
/// precision.
fn coupled_coord_min(cfg: &CoupledQuadraticConfig, i: usize) -> f64 {
    let q = cfg.coupling[i] * cfg.coupling[i] / cfg.mu;
    let b = cfg.b_diag[i];
    // |psi'| <= 0.65, so the minimizer satisfies
    // (b + q)|u| <= b|xbar| + 0.65 w
    let radius = (b * cfg.xbar[i].abs() + 0.65 * cfg.curve_weight) / (b + q) + 1.0;
    let grid = 4000;
    let mut best_u = -radius;
    let mut best_v = f64::INFINITY;
    for k in 0..=grid {
        let u = -radius + 2.0 * radius * k as f64 / grid as f64;
        let v = coupled_phi_coord(cfg, i, u);
        if v < best_v {
            best_v = v;
            best_u = u;
        }
    }
    let h = 2.0 * radius / grid as f64;
    let (mut lo, mut hi) = (best_u - h, best_u + h);
    if coupled_phi_coord_grad(cfg, i, lo) < 0.0 && coupled_phi_coord_grad(cfg, i, hi) > 0.0 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if coupled_phi_coord_grad(cfg, i, mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        coupled_phi_coord(cfg, i, 0.5 * (lo + hi)).min(best_v)
    } else {
        best_v
    }
}

impl ReferenceSurface for CoupledQuadraticReference {
    fn phi(&self, x: &[f64]) -> f64 {
        (0..x.len())
            .map(|i| coupled_phi_coord(&self.cfg, i, x[i]))
            .sum()
    }

    fn grad_phi(&self, x: &[f64]) -> Vec<f64> {
        (0..x.len())
            .map(|i| coupled_phi_coord_grad(&self.cfg, i, x[i]))
            .collect()
    }

    fn phi_star(&self) -> Option<f64> {
        Some(self.phi_star)
    }
}

/// Builds the coupled-quadratic instance with tight per-coordinate
/// smoothness constants and the exact separable envelope (including its
/// global minimum) as reference surface.
pub fn coupled_quadratic(cfg: CoupledQuadraticConfig) -> Result<MinimaxProblem> {
    cfg.validate()?;
    let m = cfg.b_diag.len();
    let w = cfg.curve_weight;
    // per-coordinate joint Hessian [[b + w psi'', c], [c, -mu]]; its norm
    // is convex in the psi'' slot, so the endpoints -w/2 and 2w cover it
    let mut ell = cfg.mu;
    for i in 0..m {
        for curv in [cfg.b_diag[i] - 0.5 * w, cfg.b_diag[i] + 2.0 * w] {
            let mean = 0.5 * (curv - cfg.mu);
            let rad = (0.25 * (curv + cfg.mu) * (curv + cfg.mu)
                + cfg.coupling[i] * cfg.coupling[i])
                .sqrt();
            ell = ell.max(mean.abs() + rad);
        }
    }
    let l2 = w * psi_third_sup();
    let spec = SmoothnessSpec::new(ell, cfg.mu, l2)?;
    let phi_star: f64 = (0..m).map(|i| coupled_coord_min(&cfg, i)).sum();
    let oracle = CoupledQuadraticOracle { cfg: cfg.clone() };
    let reference = CoupledQuadraticReference { cfg, phi_star };
    MinimaxProblem::new(m, m, spec, Box::new(oracle))
        .map(|p| p.with_reference(Box::new(reference)))
}

// Plateau valley constants: the first primal coordinate walks down
// V(u) = (c/(p-1)) (1+u^2)^((1-p)/2), a positive plateau whose gradient
// decays like c u^{-p}, so its infimum 0 sits at infinity and every
// stationarity target eps forces a walk of length ~ (c/eps)^{1/p}. The
// second coordinate is an ordinary quadratic coupled to one dual
// coordinate; the plateau coordinate stays dual-free.
const VALLEY_P: f64 = 1.2;
const VALLEY_C: f64 = 0.25;
const VALLEY_A: f64 = 0.5;
const VALLEY_B: f64 = 0.7;
const VALLEY_MU: f64 = 0.5;

fn valley_v(u: f64) -> f64 {
    VALLEY_C / (VALLEY_P - 1.0) * (1.0 + u * u).powf((1.0 - VALLEY_P) / 2.0)
}

fn valley_v_prime(u: f64) -> f64 {
    -VALLEY_C * u * (1.0 + u * u).powf(-(1.0 + VALLEY_P) / 2.0)
}

struct ValleyOracle;

impl SaddleOracle for ValleyOracle {
    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        valley_v(x[0]) + 0.5 * VALLEY_A * x[1] * x[1] + VALLEY_B * x[1] * y[1]
            - 0.5 * VALLEY_MU * (y[0] * y[0] + y[1] * y[1])
    }

    fn grad_x(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        vec![valley_v_prime(x[0]), VALLEY_A * x[1] + VALLEY_B * y[1]]
    }

    fn grad_y(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        vec![-VALLEY_MU * y[0], VALLEY_B * x[1] - VALLEY_MU * y[1]]
    }
}

struct ValleyReference;

impl ReferenceSurface for ValleyReference {
    fn phi(&self, x: &[f64]) -> f64 {
        let q = VALLEY_A + VALLEY_B * VALLEY_B / VALLEY_MU;
        valley_v(x[0]) + 0.5 * q * x[1] * x[1]
    }

    fn grad_phi(&self, x: &[f64]) -> Vec<f64> {
        let q = VALLEY_A + VALLEY_B * VALLEY_B / VALLEY_MU;
        vec![valley_v_prime(x[0]), q * x[1]]
    }

    fn phi_star(&self) -> Option<f64> {
        // infimum: the plateau decays to 0 at infinity and the quadratic
        // part vanishes at zero; never attained, approached along the tail
        Some(0.0)
    }
}

/// The plateau-valley instance and its standard starting point `(2, 1)`.
///
/// Two primal and two dual coordinates; the envelope is
/// `1.25 (1 + x1^2)^{-0.1} + (a + b^2/mu) x2^2 / 2`, so driving the
/// envelope gradient below `eps` means walking the plateau out to
/// `|x1| ~ eps^{-1/1.2}` — the oracle cost of the walk grows polynomially
/// in `1/eps` at a family-specific exponent, which is what the slope
/// benchmark measures.
pub fn valley() -> Result<(MinimaxProblem, Vec<f64>)> {
    // declared constants dominate the true ones: plateau curvature is at
    // most 0.25, the coupled 2x2 block norm is sqrt(0.25 + 0.49) ~ 0.86,
    // and the envelope third derivative peaks at ~0.39
    let spec = SmoothnessSpec::new(0.9, VALLEY_MU, 0.45)?;
    let problem = MinimaxProblem::new(2, 2, spec, Box::new(ValleyOracle))?
        .with_reference(Box::new(ValleyReference));
    Ok((problem, vec![2.0, 1.0]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn psi_derivative_ladder() {
        let h = 1e-6;
        for u in [-2.3, -1.0, -0.4, 0.0, 0.7, 1.9] {
            let fd1 = (psi(u + h) - psi(u - h)) / (2.0 * h);
            assert!((psi_prime(u) - fd1).abs() < 1e-6);
            let fd2 = (psi_prime(u + h) - psi_prime(u - h)) / (2.0 * h);
            assert!((psi_second(u) - fd2).abs() < 1e-5);
            let fd3 = (psi_second(u + h) - psi_second(u - h)) / (2.0 * h);
            assert!((psi_third(u) - fd3).abs() < 1e-4);
        }
    }

    #[test]
    fn psi_curvature_bounds() {
        let sup3 = psi_third_sup();
        assert!(sup3 > 4.66 && sup3 < 4.68);
        let mut u = -30.0;
        while u <= 30.0 {
            let s = psi_second(u);
            assert!((-0.5..=2.0).contains(&s), "psi'' out of range at {u}");
            assert!(psi_third(u).abs() <= sup3 + 1e-9);
            u += 1e-3;
        }
        assert_eq!(psi_second(0.0), 2.0);
        assert_eq!(psi_second(1.0), -0.5);
    }

    fn sample_config() -> CoupledQuadraticConfig {
        CoupledQuadraticConfig {
            b_diag: vec![1.0, 2.5, 0.7],
            xbar: vec![1.2, -0.4, 2.0],
            coupling: vec![0.8, -0.5, 1.1],
            curve_weight: 1.5,
            mu: 0.9,
        }
    }

    #[test]
    fn coupled_envelope_matches_inner_maximum() {
        let problem = coupled_quadratic(sample_config()).unwrap();
        let cfg = sample_config();
        let reference = problem.reference().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..30 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect();
            // the inner maximizer is y_i = c_i x_i / mu
            let y_star: Vec<f64> = (0..3)
                .map(|i| cfg.coupling[i] * x[i] / cfg.mu)
                .collect();
            let gy = problem.raw_grad_y(&x, &y_star).unwrap();
            assert!(gy.iter().all(|g| g.abs() < 1e-12));
            let maximized = problem.raw_value(&x, &y_star).unwrap();
            let envelope = reference.phi(&x);
            assert!((maximized - envelope).abs() <= 1e-12 * (1.0 + envelope.abs()));
            // envelope gradient by finite differences
            let fd = crate::oracle::finite_diff_grad(|p| reference.phi(p), &x, None);
            for (a, b) in reference.grad_phi(&x).iter().zip(&fd) {
                assert!((a - b).abs() <= 1e-6 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn coupled_minimum_matches_brute_force_grid() {
        let problem = coupled_quadratic(sample_config()).unwrap();
        let cfg = sample_config();
        let reference = problem.reference().unwrap();
        let declared = reference.phi_star().unwrap();
        // independent oracle: very fine per-coordinate grid search
        let mut brute = 0.0;
        for i in 0..3 {
            let mut best = f64::INFINITY;
            let mut u = -6.0;
            while u <= 6.0 {
                best = best.min(coupled_phi_coord(&cfg, i, u));
                u += 1e-5;
            }
            brute += best;
        }
        assert!(
            (declared - brute).abs() < 1e-8,
            "phi_star {declared} vs grid {brute}"
        );
        // and the reference surface never dips below it
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..200 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-4.0..4.0)).collect();
            assert!(reference.phi(&x) >= declared - 1e-12);
        }
    }

    #[test]
    fn coupled_declared_constants_dominate_probes() {
        let problem = coupled_quadratic(sample_config()).unwrap();
        let spec = *problem.spec();
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for _ in 0..50 {
            let xa: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let xb: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let ya: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let yb: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let ga = problem.raw_grad_x(&xa, &ya).unwrap();
            let gb = problem.raw_grad_x(&xb, &yb).unwrap();
            let ha = problem.raw_grad_y(&xa, &ya).unwrap();
            let hb = problem.raw_grad_y(&xb, &yb).unwrap();
            let num: f64 = ga
                .iter()
                .zip(&gb)
                .chain(ha.iter().zip(&hb))
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                .sqrt();
            let den: f64 = xa
                .iter()
                .zip(&xb)
                .chain(ya.iter().zip(&yb))
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                .sqrt();
            assert!(num <= spec.ell * den * (1.0 + 1e-9));
        }
    }

    #[test]
    fn coupled_config_validation() {
        let mut cfg = sample_config();
        cfg.xbar.pop();
        assert!(matches!(
            coupled_quadratic(cfg).unwrap_err(),
            Error::DimensionMismatch { .. }
        ));
        let mut cfg = sample_config();
        cfg.b_diag[1] = 0.0;
        assert!(matches!(
            coupled_quadratic(cfg).unwrap_err(),
            Error::InvalidParameter(_)
        ));
        let mut cfg = sample_config();
        cfg.curve_weight = -1.0;
        assert!(coupled_quadratic(cfg).is_err());
    }

    #[test]
    fn valley_envelope_and_constants() {
        let (problem, x0) = valley().unwrap();
        assert_eq!(x0, vec![2.0, 1.0]);
        let reference = problem.reference().unwrap();
        assert_eq!(reference.phi_star(), Some(0.0));
        // the plateau keeps the envelope strictly positive but vanishing
        // in the tail
        assert!(reference.phi(&[0.0, 0.0]) > 1.0);
        assert!(reference.phi(&[1e8, 0.0]) < 0.05);
        assert!(reference.phi(&[1e12, 0.0]) < reference.phi(&[1e8, 0.0]));

        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..30 {
            let x = [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)];
            // inner maximizer: y = (0, b x2 / mu)
            let y_star = [0.0, VALLEY_B * x[1] / VALLEY_MU];
            let gy = problem.raw_grad_y(&x, &y_star).unwrap();
            assert!(gy.iter().all(|g| g.abs() < 1e-12));
            let maximized = problem.raw_value(&x, &y_star).unwrap();
            let envelope = reference.phi(&x);
            assert!((maximized - envelope).abs() <= 1e-12 * (1.0 + envelope.abs()));
            assert!(envelope > 0.0);
            let fd = crate::oracle::finite_diff_grad(|p| reference.phi(p), &x, None);
            for (a, b) in reference.grad_phi(&x).iter().zip(&fd) {
                assert!((a - b).abs() <= 1e-6 * (1.0 + b.abs()));
            }
            // the x-gradient at the inner maximizer equals the envelope
            // gradient (no coupling on the plateau coordinate)
            let gx = problem.raw_grad_x(&x, &y_star).unwrap();
            for (a, b) in gx.iter().zip(reference.grad_phi(&x).iter()) {
                assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }

        // declared smoothness dominates probed joint gradient Lipschitz
        let spec = *problem.spec();
        for _ in 0..50 {
            let pa = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let pb = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let qa = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let qb = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let ga = problem.raw_grad_x(&pa, &qa).unwrap();
            let gb = problem.raw_grad_x(&pb, &qb).unwrap();
            let ha = problem.raw_grad_y(&pa, &qa).unwrap();
            let hb = problem.raw_grad_y(&pb, &qb).unwrap();
            let num: f64 = ga
                .iter()
                .zip(&gb)
                .chain(ha.iter().zip(&hb))
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                .sqrt();
            let den: f64 = pa
                .iter()
                .zip(&pb)
                .chain(qa.iter().zip(&qb))
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                .sqrt();
            assert!(num <= spec.ell * den * (1.0 + 1e-9));
        }

        // envelope third derivative along the plateau coordinate stays
        // under the declared bound
        let h = 1e-3;
        let mut u = -5.0;
        while u <= 5.0 {
            let at = |s: f64| reference.phi(&[s, 0.0]);
            let third =
                (at(u + 2.0 * h) - 2.0 * at(u + h) + 2.0 * at(u - h) - at(u - 2.0 * h))
                    / (2.0 * h * h * h);
            assert!(third.abs() <= spec.l2 + 1e-6);
            u += 0.01;
        }
    }

    #[test]
    fn valley_gradient_tail_decays_polynomially() {
        let (problem, _) = valley().unwrap();
        let reference = problem.reference().unwrap();
        // |phi'(u)| ~ c u^{-p} in the tail: the log-log slope between
        // probes at 10^2 and 10^4 should sit near -p
        let g2 = -reference.grad_phi(&[1e2, 0.0])[0];
        let g4 = -reference.grad_phi(&[1e4, 0.0])[0];
        assert!(g2 > 0.0 && g4 > 0.0, "plateau walk descends rightward");
        let slope = (g4.ln() - g2.ln()) / (1e4f64.ln() - 1e2f64.ln());
        assert!((slope + VALLEY_P).abs() < 0.01, "tail slope {slope}");
    }
}
