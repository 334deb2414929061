//! Problem definition: smoothness data, oracle access, and call accounting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vec_ops::{ensure_finite, ensure_finite_scalar};

/// Smoothness and curvature constants of a minimax objective
/// `f(x, y)`: `ell`-smooth jointly in `(x, y)`, `mu`-strongly concave in
/// `y`, and the envelope `max_y f(x, y)` has an `l2`-Lipschitz Hessian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessSpec {
    /// Joint gradient Lipschitz constant of `f`.
    pub ell: f64,
    /// Strong-concavity modulus in `y`.
    pub mu: f64,
    /// Hessian Lipschitz constant of the envelope `max_y f(x, .)`.
    pub l2: f64,
}

impl SmoothnessSpec {
    /// Validates `ell >= mu > 0` and `l2 > 0`.
    pub fn new(ell: f64, mu: f64, l2: f64) -> Result<Self> {
        for (v, name) in [(ell, "ell"), (mu, "mu"), (l2, "l2")] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "smoothness constant {name} must be finite and positive, got {v}"
                )));
            }
        }
        if ell < mu {
            return Err(Error::InvalidParameter(format!(
                "smoothness requires ell >= mu, got ell = {ell}, mu = {mu}"
            )));
        }
        Ok(Self { ell, mu, l2 })
    }

    /// Condition number `ell / mu` of the inner maximization.
    pub fn kappa_y(&self) -> f64 {
        self.ell / self.mu
    }

    /// Smoothness constant `(1 + kappa_y) * ell` of the envelope
    /// `max_y f(x, .)`.
    pub fn envelope_smoothness(&self) -> f64 {
        (1.0 + self.kappa_y()) * self.ell
    }
}

/// Deterministic first-order oracle for a minimax objective: values and
/// partial gradients of `f`.
///
/// Implementations must be pure functions of their arguments; two calls with
/// bitwise-equal inputs must return bitwise-equal outputs.
pub trait SaddleOracle {
    fn value(&self, x: &[f64], y: &[f64]) -> f64;
    fn grad_x(&self, x: &[f64], y: &[f64]) -> Vec<f64>;
    fn grad_y(&self, x: &[f64], y: &[f64]) -> Vec<f64>;
}

/// Optional exact reference for `Phi(x) = max_y f(x, y)`, used for
/// verification and reporting only — solvers never read it.
pub trait ReferenceSurface {
    fn phi(&self, x: &[f64]) -> f64;
    fn grad_phi(&self, x: &[f64]) -> Vec<f64>;
    /// `min_x Phi(x)` when known in closed form (may be an infimum).
    fn phi_star(&self) -> Option<f64> {
        None
    }
}

/// A minimax problem: dimensions, smoothness constants, a first-order
/// oracle, and an optional exact reference surface.
pub struct MinimaxProblem {
    dim_x: usize,
    dim_y: usize,
    spec: SmoothnessSpec,
    oracle: Box<dyn SaddleOracle>,
    reference: Option<Box<dyn ReferenceSurface>>,
}

impl std::fmt::Debug for MinimaxProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MinimaxProblem")
            .field("dim_x", &self.dim_x)
            .field("dim_y", &self.dim_y)
            .field("spec", &self.spec)
            .field("has_reference", &self.reference.is_some())
            .finish()
    }
}

impl MinimaxProblem {
    pub fn new(
        dim_x: usize,
        dim_y: usize,
        spec: SmoothnessSpec,
        oracle: Box<dyn SaddleOracle>,
    ) -> Result<Self> {
        if dim_x == 0 || dim_y == 0 {
            return Err(Error::InvalidParameter(format!(
                "dimensions must be positive, got dim_x = {dim_x}, dim_y = {dim_y}"
            )));
        }
        Ok(Self {
            dim_x,
            dim_y,
            spec,
            oracle,
            reference: None,
        })
    }

    pub fn with_reference(mut self, reference: Box<dyn ReferenceSurface>) -> Self {
        self.reference = Some(reference);
        self
    }

    pub fn dim_x(&self) -> usize {
        self.dim_x
    }

    pub fn dim_y(&self) -> usize {
        self.dim_y
    }

    pub fn spec(&self) -> &SmoothnessSpec {
        &self.spec
    }

    pub fn reference(&self) -> Option<&dyn ReferenceSurface> {
        self.reference.as_deref()
    }

    fn check_dims(&self, x: &[f64], y: &[f64], context: &'static str) -> Result<()> {
        if x.len() != self.dim_x {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.dim_x,
                actual: x.len(),
            });
        }
        if y.len() != self.dim_y {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.dim_y,
                actual: y.len(),
            });
        }
        Ok(())
    }

    /// Raw (uncounted) oracle access with dimension and finiteness checks.
    /// Solvers must go through [`OracleSession`] instead so every call is
    /// accounted for; this surface exists for instance construction, exact
    /// references, and tests.
    pub fn raw_value(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_dims(x, y, "oracle value")?;
        ensure_finite(x, "oracle value input x")?;
        ensure_finite(y, "oracle value input y")?;
        let v = self.oracle.value(x, y);
        ensure_finite_scalar(v, "oracle value output")?;
        Ok(v)
    }

    /// Raw (uncounted) partial gradient in `x`; see [`Self::raw_value`].
    pub fn raw_grad_x(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.check_dims(x, y, "oracle grad_x")?;
        ensure_finite(x, "oracle grad_x input x")?;
        ensure_finite(y, "oracle grad_x input y")?;
        let g = self.oracle.grad_x(x, y);
        debug_assert_eq!(g.len(), self.dim_x);
        ensure_finite(&g, "oracle grad_x output")?;
        Ok(g)
    }

    /// Raw (uncounted) partial gradient in `y`; see [`Self::raw_value`].
    pub fn raw_grad_y(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.check_dims(x, y, "oracle grad_y")?;
        ensure_finite(x, "oracle grad_y input x")?;
        ensure_finite(y, "oracle grad_y input y")?;
        let g = self.oracle.grad_y(x, y);
        debug_assert_eq!(g.len(), self.dim_y);
        ensure_finite(&g, "oracle grad_y output")?;
        Ok(g)
    }
}

/// Monotone counters for first-order oracle calls. Each value query and each
/// partial-gradient query counts as one call of its kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleCounts {
    pub f: u64,
    pub grad_x: u64,
    pub grad_y: u64,
}

impl OracleCounts {
    /// Total calls of all kinds.
    pub fn total(&self) -> u64 {
        self.f + self.grad_x + self.grad_y
    }

    /// Total gradient calls (both partial gradients).
    pub fn grad_total(&self) -> u64 {
        self.grad_x + self.grad_y
    }

    /// Component-wise difference `self - earlier`; panics if counters ran
    /// backwards, which would indicate corrupted accounting.
    pub fn since(&self, earlier: &OracleCounts) -> OracleCounts {
        OracleCounts {
            f: self.f.checked_sub(earlier.f).expect("oracle counter decreased"),
            grad_x: self
                .grad_x
                .checked_sub(earlier.grad_x)
                .expect("oracle counter decreased"),
            grad_y: self
                .grad_y
                .checked_sub(earlier.grad_y)
                .expect("oracle counter decreased"),
        }
    }
}

/// Counted oracle access for one solver run. All solver entry points take a
/// session, so the recorded counts cover every oracle call they make.
pub struct OracleSession<'a> {
    problem: &'a MinimaxProblem,
    counts: OracleCounts,
}

impl<'a> OracleSession<'a> {
    pub fn new(problem: &'a MinimaxProblem) -> Self {
        Self {
            problem,
            counts: OracleCounts::default(),
        }
    }

    pub fn problem(&self) -> &'a MinimaxProblem {
        self.problem
    }

    pub fn counts(&self) -> OracleCounts {
        self.counts
    }

    pub fn value(&mut self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.counts.f += 1;
        self.problem.raw_value(x, y)
    }

    pub fn grad_x(&mut self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.counts.grad_x += 1;
        self.problem.raw_grad_x(x, y)
    }

    pub fn grad_y(&mut self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.counts.grad_y += 1;
        self.problem.raw_grad_y(x, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Bilinear;

    impl SaddleOracle for Bilinear {
        fn value(&self, x: &[f64], y: &[f64]) -> f64 {
            x[0] * y[0] - 0.5 * y[0] * y[0]
        }
        fn grad_x(&self, _x: &[f64], y: &[f64]) -> Vec<f64> {
            vec![y[0]]
        }
        fn grad_y(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
            vec![x[0] - y[0]]
        }
    }

    fn problem() -> MinimaxProblem {
        let spec = SmoothnessSpec::new(2.0, 1.0, 1.0).unwrap();
        MinimaxProblem::new(1, 1, spec, Box::new(Bilinear)).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(SmoothnessSpec::new(2.0, 1.0, 0.5).is_ok());
        assert!(SmoothnessSpec::new(1.0, 2.0, 0.5).is_err());
        assert!(SmoothnessSpec::new(2.0, 0.0, 0.5).is_err());
        assert!(SmoothnessSpec::new(2.0, 1.0, 0.0).is_err());
        assert!(SmoothnessSpec::new(f64::NAN, 1.0, 0.5).is_err());
    }

    #[test]
    fn derived_constants() {
        let spec = SmoothnessSpec::new(4.0, 1.0, 0.5).unwrap();
        assert_eq!(spec.kappa_y(), 4.0);
        assert_eq!(spec.envelope_smoothness(), 20.0);
    }

    #[test]
    fn session_counts_every_call() {
        let p = problem();
        let mut s = OracleSession::new(&p);
        s.value(&[1.0], &[2.0]).unwrap();
        s.grad_x(&[1.0], &[2.0]).unwrap();
        s.grad_x(&[1.0], &[2.0]).unwrap();
        s.grad_y(&[1.0], &[2.0]).unwrap();
        let c = s.counts();
        assert_eq!(c, OracleCounts { f: 1, grad_x: 2, grad_y: 1 });
        assert_eq!(c.total(), 4);
        assert_eq!(c.grad_total(), 3);
    }

    #[test]
    fn counts_difference() {
        let a = OracleCounts { f: 5, grad_x: 7, grad_y: 2 };
        let b = OracleCounts { f: 2, grad_x: 3, grad_y: 2 };
        assert_eq!(a.since(&b), OracleCounts { f: 3, grad_x: 4, grad_y: 0 });
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let p = problem();
        let mut s = OracleSession::new(&p);
        assert!(s.value(&[1.0, 2.0], &[0.0]).is_err());
        assert!(s.grad_y(&[1.0], &[]).is_err());
    }

    #[test]
    fn non_finite_input_is_an_error() {
        let p = problem();
        let mut s = OracleSession::new(&p);
        assert!(s.value(&[f64::NAN], &[0.0]).is_err());
    }

    #[test]
    fn zero_dimension_rejected() {
        let spec = SmoothnessSpec::new(2.0, 1.0, 1.0).unwrap();
        assert!(MinimaxProblem::new(0, 1, spec, Box::new(Bilinear)).is_err());
    }
}
