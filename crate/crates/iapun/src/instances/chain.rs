//! Chain-structured worst-case instance family.
//!
//! The envelope of this family is a long chain of coupled coordinates with a
//! carefully shaped scalar potential: its gradient vanishes at the origin on
//! every coordinate the algorithm has not yet touched, so any method driven
//! only by function values and gradients must "discover" the coordinates one
//! by one. Each odd chain link is materialized through a strongly concave
//! inner maximization over an `n`-dimensional block, stretching the
//! discovery by a factor of `n`. Construction, scaling to prescribed
//! smoothness constants, the closed-form envelope, and a support tracker
//! verifying the discovery order all live here.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{MinimaxProblem, ReferenceSurface, SaddleOracle, SmoothnessSpec};

/// Exact supremum of `|upsilon_second|`, attained at -1 (the critical
/// points of `upsilon_second` are the roots of `upsilon_third`: -1 and
/// 2 ± sqrt(3); the grid test confirms no larger value exists).
pub const UPSILON_SECOND_SUP: f64 = 180.0;

/// Scalar potential with a flat saddle at the origin and unique minimum 0
/// at 1: `120 * integral from 1 to x of t^2 (t-1) / (1 + t^2) dt`.
///
/// # Example
/// ```
/// use iapun::instances::chain::upsilon;
/// assert_eq!(upsilon(1.0), 0.0);
/// assert!(upsilon(0.0) > 7.0 && upsilon(0.0) < 8.0);
/// ```
pub fn upsilon(x: f64) -> f64 {
    let anti = |t: f64| 0.5 * t * t - t - 0.5 * (1.0 + t * t).ln() + t.atan();
    120.0 * (anti(x) - anti(1.0))
}

/// First derivative of [`upsilon`]: `120 x^2 (x - 1) / (1 + x^2)`. Zero at
/// 0 (doubly) and at 1; negative on (0, 1).
pub fn upsilon_prime(x: f64) -> f64 {
    120.0 * x * x * (x - 1.0) / (1.0 + x * x)
}

/// Second derivative of [`upsilon`]: `120 (x^4 + 3x^2 - 2x) / (1 + x^2)^2`.
pub fn upsilon_second(x: f64) -> f64 {
    let q = 1.0 + x * x;
    120.0 * (x.powi(4) + 3.0 * x * x - 2.0 * x) / (q * q)
}

/// Third derivative of [`upsilon`]:
/// `240 (-x^3 + 3x^2 + 3x - 1) / (1 + x^2)^3`.
pub fn upsilon_third(x: f64) -> f64 {
    let q = 1.0 + x * x;
    240.0 * (-x.powi(3) + 3.0 * x * x + 3.0 * x - 1.0) / (q * q * q)
}

/// Supremum of `|upsilon_third|` (~314.02), evaluated at its four critical
/// points: the roots of `x^4 - 4x^3 - 6x^2 + 4x + 1`, i.e. the solutions
/// of `x - 1/x = 2 ± 2 sqrt(2)`.
pub fn upsilon_third_sup() -> f64 {
    let mut sup = 0.0f64;
    for t in [
        2.0 + 2.0 * std::f64::consts::SQRT_2,
        2.0 - 2.0 * std::f64::consts::SQRT_2,
    ] {
        for sign in [1.0, -1.0] {
            let x = (t + sign * (t * t + 4.0).sqrt()) / 2.0;
            sup = sup.max(upsilon_third(x).abs());
        }
    }
    sup
}

/// Solves `(shift I + A) u = b` where `A` is the second-difference matrix
/// with Neumann ends (diagonal `1, 2, ..., 2, 1`, off-diagonals -1), by the
/// standard tridiagonal elimination. `shift > 0` keeps it positive
/// definite.
fn solve_shifted_chain(shift: f64, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    debug_assert!(n >= 2);
    let diag = |i: usize| -> f64 {
        if i == 0 || i == n - 1 {
            shift + 1.0
        } else {
            shift + 2.0
        }
    };
    let mut upper = vec![0.0; n];
    let mut rhs = b.to_vec();
    upper[0] = -1.0 / diag(0);
    rhs[0] /= diag(0);
    for i in 1..n {
        let denom = diag(i) + upper[i - 1];
        if i + 1 < n {
            upper[i] = -1.0 / denom;
        }
        rhs[i] = (rhs[i] + rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] -= upper[i] * next;
    }
    rhs
}

/// The two inner-block constants `(a1, a2)` for block size `n`: with
/// `M = I/n^2 + A`, `a1 = (M^-1)_{11} / n` and `a2 = (M^-1)_{1n} / n`.
/// Both are positive, bounded away from 0 and infinity uniformly in `n`,
/// and `a1 > a2`.
pub fn h_block_constants(n: usize) -> (f64, f64) {
    let mut e1 = vec![0.0; n];
    e1[0] = 1.0;
    let col = solve_shifted_chain(1.0 / (n as f64 * n as f64), &e1);
    (col[0] / n as f64, col[n - 1] / n as f64)
}

/// Exact maximum over `y` of the inner block function
/// `-1/2 y^T (I/n^2 + A) y + sqrt(C/n) (x y_1 - z y_n)`, via a direct
/// tridiagonal solve.
///
/// Equals `C (a1 x^2 / 2 - a2 x z + a1 z^2 / 2)` with `(a1, a2)` from
/// [`h_block_constants`].
pub fn h_max(x: f64, z: f64, n: usize, big_c: f64) -> f64 {
    let mut b = vec![0.0; n];
    b[0] = x;
    b[n - 1] = -z;
    let u = solve_shifted_chain(1.0 / (n as f64 * n as f64), &b);
    let quad: f64 = b.iter().zip(&u).map(|(bi, ui)| bi * ui).sum();
    big_c / (2.0 * n as f64) * quad
}

/// Estimated absolute smoothness constants `(ellbar1, ellbar2)` of the
/// unscaled family, uniform over every nonconvexity weight `nu <= 1` and
/// block size `n >= 10`: curvature grid suprema of the scalar potential
/// combined with the quadratic-block and coupling norms, times a safety
/// factor of 2. Deterministic and cached.
pub fn estimate_abs_constants() -> (f64, f64) {
    static CACHE: OnceLock<(f64, f64)> = OnceLock::new();
    *CACHE.get_or_init(|| {
        // the diagonal correction |c| and coupling sqrt(C/n) vary with n;
        // probe a log grid and keep the worst case
        let mut c_abs_sup = 0.0f64;
        let mut coupling_sup = 0.0f64;
        let mut n = 10usize;
        while n <= 10_240 {
            let (a1, a2) = h_block_constants(n);
            let big_c = 1.0 / a2;
            let c = big_c * (a2 - a1) / 2.0;
            c_abs_sup = c_abs_sup.max(c.abs());
            coupling_sup = coupling_sup.max((big_c / n as f64).sqrt());
            n = n * 3 / 2;
        }
        // worst primal block: anchor (nu <= 1) + one chain link + diagonal
        // correction + potential curvature; worst dual block norm <= 5
        let primal = 1.0 + 2.0 + 2.0 * c_abs_sup + UPSILON_SECOND_SUP;
        let ellbar1 = 2.0 * (primal.max(5.0) + coupling_sup);
        let ellbar2 = 2.0 * upsilon_third_sup();
        (ellbar1, ellbar2)
    })
}

/// Full construction record of one scaled chain instance. Serializes to
/// JSON with exactly these fields; `ellbar_provenance` documents how the
/// absolute constants were estimated.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HardInstanceSpec {
    /// Number of inner maximization blocks T; the chain has 2T+1 primal
    /// coordinates.
    pub t_blocks: usize,
    /// Inner block dimension; at least 10.
    pub n: usize,
    /// Nonconvexity weight, at most 1.
    pub nu: f64,
    /// Coordinate scaling applied to both variable groups.
    pub lambda: f64,
    /// Diagonal correction `big_c (a2 - a1) / 2` (negative) canceling the
    /// off-pair terms of the inner maxima.
    pub c: f64,
    /// Coupling normalization `1 / a2`.
    pub big_c: f64,
    /// Inner-block constant `(M^-1)_{11} / n`.
    pub a1: f64,
    /// Inner-block constant `(M^-1)_{1n} / n`.
    pub a2: f64,
    /// Absolute joint-smoothness constant of the unscaled family.
    pub ellbar1: f64,
    /// Absolute envelope Hessian-Lipschitz constant of the unscaled family
    /// (per unit nonconvexity weight).
    pub ellbar2: f64,
    /// Requested gradient-Lipschitz constant.
    pub target_ell: f64,
    /// Requested strong-concavity modulus.
    pub target_mu: f64,
    /// Requested envelope Hessian-Lipschitz constant.
    pub target_l2: f64,
    /// Requested initial envelope gap from the origin.
    pub target_delta: f64,
    /// How `ellbar1` / `ellbar2` were obtained.
    pub ellbar_provenance: String,
}

impl HardInstanceSpec {
    /// Primal dimension `2 t_blocks + 1`.
    pub fn dim_x(&self) -> usize {
        2 * self.t_blocks + 1
    }

    /// Dual dimension `t_blocks * n`.
    pub fn dim_y(&self) -> usize {
        self.t_blocks * self.n
    }
}

/// The saddle oracle of one chain instance (scaled or unscaled).
///
/// Layout: primal `x` has `2T+1` coordinates; dual `y` is `T` consecutive
/// blocks of `n`. Block `b` couples the pair `(x[2b+1], x[2b+2])` through
/// `sqrt(big_c / n) (x[2b+1] y_b[0] - x[2b+2] y_b[n-1])`; the pairs
/// `(x[2b], x[2b+1])` are linked by explicit quadratics; the potential
/// covers `x[0..2T]`; the diagonal correction covers `x[1..=2T]`.
struct ChainOracle {
    t_blocks: usize,
    n: usize,
    nu: f64,
    c: f64,
    coupling: f64,
    lambda: f64,
    scale: f64,
}

impl ChainOracle {
    fn unscaled_value(&self, x: &[f64], y: &[f64]) -> f64 {
        let t = self.t_blocks;
        let n = self.n;
        let mut v = 0.5 * self.nu.sqrt() * (x[0] - 1.0) * (x[0] - 1.0);
        for b in 0..t {
            let d = x[2 * b] - x[2 * b + 1];
            v += 0.5 * d * d;
        }
        for xi in &x[..2 * t] {
            v += self.nu * upsilon(*xi);
        }
        for xi in &x[1..] {
            v += self.c * xi * xi;
        }
        let shift = 1.0 / (n as f64 * n as f64);
        for b in 0..t {
            let yb = &y[b * n..(b + 1) * n];
            // -1/2 y^T (shift I + A) y for the second-difference block
            let mut quad = shift * yb.iter().map(|v| v * v).sum::<f64>();
            for i in 0..n - 1 {
                let d = yb[i] - yb[i + 1];
                quad += d * d;
            }
            v -= 0.5 * quad;
            v += self.coupling * (x[2 * b + 1] * yb[0] - x[2 * b + 2] * yb[n - 1]);
        }
        v
    }

    fn unscaled_grad_x(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let t = self.t_blocks;
        let n = self.n;
        let dim = 2 * t + 1;
        let mut g = vec![0.0; dim];
        g[0] += self.nu.sqrt() * (x[0] - 1.0);
        for b in 0..t {
            let d = x[2 * b] - x[2 * b + 1];
            g[2 * b] += d;
            g[2 * b + 1] -= d;
        }
        for (j, xi) in x[..2 * t].iter().enumerate() {
            g[j] += self.nu * upsilon_prime(*xi);
        }
        for (j, xi) in x.iter().enumerate().skip(1) {
            g[j] += 2.0 * self.c * xi;
        }
        for b in 0..t {
            let yb = &y[b * n..(b + 1) * n];
            g[2 * b + 1] += self.coupling * yb[0];
            g[2 * b + 2] -= self.coupling * yb[n - 1];
        }
        g
    }

    fn unscaled_grad_y(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let t = self.t_blocks;
        let n = self.n;
        let shift = 1.0 / (n as f64 * n as f64);
        let mut g = vec![0.0; t * n];
        for b in 0..t {
            let yb = &y[b * n..(b + 1) * n];
            let gb = &mut g[b * n..(b + 1) * n];
            for i in 0..n {
                let mut row = shift * yb[i];
                if i > 0 {
                    row += yb[i] - yb[i - 1];
                }
                if i + 1 < n {
                    row += yb[i] - yb[i + 1];
                }
                gb[i] = -row;
            }
            gb[0] += self.coupling * x[2 * b + 1];
            gb[n - 1] -= self.coupling * x[2 * b + 2];
        }
        g
    }
}

impl SaddleOracle for ChainOracle {
    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        let xs: Vec<f64> = x.iter().map(|v| v / self.lambda).collect();
        let ys: Vec<f64> = y.iter().map(|v| v / self.lambda).collect();
        self.scale * self.unscaled_value(&xs, &ys)
    }

    fn grad_x(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let xs: Vec<f64> = x.iter().map(|v| v / self.lambda).collect();
        let ys: Vec<f64> = y.iter().map(|v| v / self.lambda).collect();
        let mut g = self.unscaled_grad_x(&xs, &ys);
        let s = self.scale / self.lambda;
        for gi in &mut g {
            *gi *= s;
        }
        g
    }

    fn grad_y(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let xs: Vec<f64> = x.iter().map(|v| v / self.lambda).collect();
        let ys: Vec<f64> = y.iter().map(|v| v / self.lambda).collect();
        let mut g = self.unscaled_grad_y(&xs, &ys);
        let s = self.scale / self.lambda;
        for gi in &mut g {
            *gi *= s;
        }
        g
    }
}

/// Closed-form envelope of the chain family: maximizing out every inner
/// block turns each coupled pair into an ordinary chain link, so the
/// envelope is the full-chain potential function. Returns the value and
/// exact gradient for the **unscaled** coordinates.
pub fn phi_closed_form(x: &[f64], t_blocks: usize, nu: f64) -> (f64, Vec<f64>) {
    let t = t_blocks;
    debug_assert_eq!(x.len(), 2 * t + 1);
    let mut v = 0.5 * nu.sqrt() * (x[0] - 1.0) * (x[0] - 1.0);
    for j in 0..2 * t {
        let d = x[j] - x[j + 1];
        v += 0.5 * d * d;
    }
    for xi in &x[..2 * t] {
        v += nu * upsilon(*xi);
    }
    let mut g = vec![0.0; 2 * t + 1];
    g[0] = nu.sqrt() * (x[0] - 1.0) + (x[0] - x[1]) + nu * upsilon_prime(x[0]);
    for j in 1..2 * t {
        g[j] = 2.0 * x[j] - x[j - 1] - x[j + 1] + nu * upsilon_prime(x[j]);
    }
    g[2 * t] = x[2 * t] - x[2 * t - 1];
    (v, g)
}

struct ChainReference {
    t_blocks: usize,
    nu: f64,
    lambda: f64,
    scale: f64,
}

impl ReferenceSurface for ChainReference {
    fn phi(&self, x: &[f64]) -> f64 {
        let xs: Vec<f64> = x.iter().map(|v| v / self.lambda).collect();
        self.scale * phi_closed_form(&xs, self.t_blocks, self.nu).0
    }

    fn grad_phi(&self, x: &[f64]) -> Vec<f64> {
        let xs: Vec<f64> = x.iter().map(|v| v / self.lambda).collect();
        let mut g = phi_closed_form(&xs, self.t_blocks, self.nu).1;
        let s = self.scale / self.lambda;
        for gi in &mut g {
            *gi *= s;
        }
        g
    }

    fn phi_star(&self) -> Option<f64> {
        // exact: every envelope term is nonnegative and all vanish at the
        // all-lambda point
        Some(0.0)
    }
}

fn reported_spec(n: usize, nu: f64, c: f64, big_c: f64, lambda: f64, scale: f64) -> SmoothnessSpec {
    let nf = n as f64;
    let hess_scale = scale / (lambda * lambda);
    // tight block bounds of the unscaled joint Hessian: primal diagonal
    // (anchor + one explicit link + correction + weighted potential), dual
    // second-difference block (exact norm), plus the cross coupling (one
    // nonzero per row, so its spectral norm is exactly the entry)
    let primal = nu.sqrt() + 2.0 + 2.0 * c.abs() + nu * UPSILON_SECOND_SUP;
    let dual = 1.0 / (nf * nf) + 2.0 + 2.0 * (std::f64::consts::PI / nf).cos();
    let coupling = (big_c / nf).sqrt();
    let ell = hess_scale * (primal.max(dual) + coupling);
    let mu = hess_scale / (nf * nf);
    let l2 = (scale / lambda.powi(3)) * nu * upsilon_third_sup();
    SmoothnessSpec::new(ell, mu, l2).expect("chain constants are positive and ordered")
}

/// Builds the unscaled chain instance with `t_blocks` inner blocks of size
/// `n` and nonconvexity weight `nu`, its exact-gradient oracle, and the
/// closed-form envelope as reference surface. The declared smoothness
/// constants are the tight block bounds of the actual function.
pub fn build_unscaled(t_blocks: usize, nu: f64, n: usize) -> Result<MinimaxProblem> {
    if t_blocks < 1 {
        return Err(Error::InstanceTooSmall(format!(
            "chain needs at least one block, got {t_blocks}"
        )));
    }
    if n < 10 {
        return Err(Error::InvalidParameter(format!(
            "inner block dimension must be at least 10, got {n}"
        )));
    }
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "nonconvexity weight must lie in (0, 1], got {nu}"
        )));
    }
    let (a1, a2) = h_block_constants(n);
    let big_c = 1.0 / a2;
    let c = big_c * (a2 - a1) / 2.0;
    let oracle = ChainOracle {
        t_blocks,
        n,
        nu,
        c,
        coupling: (big_c / n as f64).sqrt(),
        lambda: 1.0,
        scale: 1.0,
    };
    let reference = ChainReference {
        t_blocks,
        nu,
        lambda: 1.0,
        scale: 1.0,
    };
    let spec = reported_spec(n, nu, c, big_c, 1.0, 1.0);
    MinimaxProblem::new(2 * t_blocks + 1, t_blocks * n, spec, Box::new(oracle))
        .map(|p| p.with_reference(Box::new(reference)))
}

/// Builds the chain instance scaled to sit exactly at the requested corner
/// of the problem class: gradient-Lipschitz constant at most `ell`,
/// strong concavity at least... (the declared constants are the tight
/// bounds of the actual scaled function, all on the safe side of the
/// targets), envelope Hessian-Lipschitz at most `l2`, initial envelope gap
/// from the origin at most `delta`, and every point with the last two
/// coordinates untouched having envelope gradient norm above `eps`.
///
/// Fails when `eps` exceeds either family ceiling (the scaling would leave
/// the class) or when the gap budget is too small for a single block.
pub fn scale_instance(
    ell: f64,
    mu: f64,
    l2: f64,
    delta: f64,
    eps: f64,
) -> Result<(HardInstanceSpec, MinimaxProblem)> {
    for (v, name) in [
        (ell, "ell"),
        (mu, "mu"),
        (l2, "l2"),
        (delta, "delta"),
        (eps, "eps"),
    ] {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "{name} must be finite and positive, got {v}"
            )));
        }
    }
    if mu > ell {
        return Err(Error::InvalidParameter(format!(
            "strong-concavity target mu = {mu} must not exceed ell = {ell}"
        )));
    }
    let (ellbar1, ellbar2) = estimate_abs_constants();
    let ell_ratio = ell / ellbar1;
    let l2_ratio = l2 / ellbar2;
    let ceiling_class = 0.25 * ell_ratio * ell_ratio / l2_ratio;
    let ceiling_budget = 0.25 * delta.powf(0.7) * ell_ratio.powf(-0.1) * l2_ratio.powf(0.4);
    let ceiling = ceiling_class.min(ceiling_budget);
    if eps > ceiling {
        return Err(Error::InvalidParameter(format!(
            "eps = {eps} exceeds the family ceiling {ceiling:.3e} for these constants; \
             the scaled instance would leave the declared problem class"
        )));
    }
    let lambda = (4.0 * eps / (ell_ratio.powf(0.25) * l2_ratio.powf(0.75))).powf(4.0 / 7.0);
    let nu = l2_ratio / ell_ratio * lambda;
    debug_assert!(nu <= 1.0 + 1e-12, "class ceiling should enforce nu <= 1");
    let kappa_y = ell / mu;
    let n = ((kappa_y / ellbar1).sqrt().ceil() as usize).max(10);

    let scale = ell * lambda * lambda / ellbar1;
    // per-block budget of the initial envelope gap: the potential
    // contributes at most 10 per covered coordinate (two per block)
    let unit = 20.0 * nu * scale;
    let anchor = nu.sqrt() * scale / 2.0;
    if delta <= anchor {
        return Err(Error::InstanceTooSmall(format!(
            "gap budget {delta} cannot cover the anchor term {anchor:.3e}"
        )));
    }
    let t_blocks = ((delta - anchor) / unit).floor() as usize;
    if t_blocks < 1 {
        return Err(Error::InstanceTooSmall(format!(
            "gap budget {delta} allows no blocks at eps = {eps} (needs at least {:.3e})",
            anchor + unit
        )));
    }

    let (a1, a2) = h_block_constants(n);
    let big_c = 1.0 / a2;
    let c = big_c * (a2 - a1) / 2.0;
    let spec = HardInstanceSpec {
        t_blocks,
        n,
        nu,
        lambda,
        c,
        big_c,
        a1,
        a2,
        ellbar1,
        ellbar2,
        target_ell: ell,
        target_mu: mu,
        target_l2: l2,
        target_delta: delta,
        ellbar_provenance: "curvature grid suprema of the scalar potential plus worst-case \
                            block norms over inner dimensions 10..10240, safety factor 2"
            .to_string(),
    };
    let problem = build_scaled(&spec)?;
    Ok((spec, problem))
}

/// Reconstructs the scaled chain problem from a (possibly deserialized)
/// descriptor. Every field is re-validated against the construction rules,
/// so a hand-edited or corrupted file fails loud instead of silently
/// producing an instance outside the declared class.
pub fn build_scaled(spec: &HardInstanceSpec) -> Result<MinimaxProblem> {
    if spec.t_blocks < 1 {
        return Err(Error::InvalidParameter(
            "chain descriptor needs at least one block".into(),
        ));
    }
    if spec.n < 2 {
        return Err(Error::InvalidParameter(format!(
            "chain descriptor inner dimension must be at least 2, got {}",
            spec.n
        )));
    }
    for (v, name) in [
        (spec.nu, "nu"),
        (spec.lambda, "lambda"),
        (spec.target_ell, "target_ell"),
        (spec.target_mu, "target_mu"),
        (spec.target_l2, "target_l2"),
    ] {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "chain descriptor field {name} must be finite and positive, got {v}"
            )));
        }
    }
    if spec.nu > 1.0 + 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "chain descriptor nu = {} exceeds 1; the potential would leave \
             the declared curvature class",
            spec.nu
        )));
    }
    let (a1, a2) = h_block_constants(spec.n);
    let (ellbar1, ellbar2) = estimate_abs_constants();
    for (stored, expected, name) in [
        (spec.a1, a1, "a1"),
        (spec.a2, a2, "a2"),
        (spec.ellbar1, ellbar1, "ellbar1"),
        (spec.ellbar2, ellbar2, "ellbar2"),
    ] {
        if (stored - expected).abs() > 1e-9 * expected.abs() {
            return Err(Error::InvalidParameter(format!(
                "chain descriptor {name} = {stored} does not match the value \
                 {expected} this build determines; regenerate the descriptor"
            )));
        }
    }
    let big_c = 1.0 / a2;
    let c = big_c * (a2 - a1) / 2.0;
    let scale = spec.target_ell * spec.lambda * spec.lambda / spec.ellbar1;
    if !scale.is_finite() || scale <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "chain descriptor yields a degenerate value scale {scale}"
        )));
    }
    let oracle = ChainOracle {
        t_blocks: spec.t_blocks,
        n: spec.n,
        nu: spec.nu,
        c,
        coupling: (big_c / spec.n as f64).sqrt(),
        lambda: spec.lambda,
        scale,
    };
    let reference = ChainReference {
        t_blocks: spec.t_blocks,
        nu: spec.nu,
        lambda: spec.lambda,
        scale,
    };
    let smooth = reported_spec(spec.n, spec.nu, c, big_c, spec.lambda, scale);
    Ok(
        MinimaxProblem::new(spec.dim_x(), spec.dim_y(), smooth, Box::new(oracle))?
            .with_reference(Box::new(reference)),
    )
}

/// Ordered record of which coordinates of the stacked `(x, y)` vector have
/// ever been nonzero, in first-touch order.
#[derive(Debug, Clone)]
pub struct SupportTracker {
    visited: Vec<usize>,
    seen: Vec<bool>,
}

impl SupportTracker {
    /// Empty tracker over `dim` stacked coordinates.
    pub fn new(dim: usize) -> Self {
        Self {
            visited: Vec::new(),
            seen: vec![false; dim],
        }
    }

    /// Records every newly nonzero coordinate of `v`, offset into the
    /// stacked index space, in scan order.
    pub fn observe(&mut self, v: &[f64], offset: usize) {
        for (i, value) in v.iter().enumerate() {
            if *value != 0.0 && !self.seen[offset + i] {
                self.seen[offset + i] = true;
                self.visited.push(offset + i);
            }
        }
    }

    /// First-touch order of all coordinates seen so far.
    pub fn visited(&self) -> &[usize] {
        &self.visited
    }
}

/// The discovery order the chain enforces on any method that only queries
/// values and gradients, as stacked `(x, y)` indices: `x[0], x[1]`, then
/// block 0 of `y` front to back, then `x[2], x[3]`, block 1, and so on,
/// ending with `x[2T]`.
pub fn chain_order(t_blocks: usize, n: usize) -> Vec<usize> {
    let dim_x = 2 * t_blocks + 1;
    let mut order = Vec::with_capacity(dim_x + t_blocks * n);
    for b in 0..t_blocks {
        order.push(2 * b);
        order.push(2 * b + 1);
        for j in 0..n {
            order.push(dim_x + b * n + j);
        }
    }
    order.push(2 * t_blocks);
    order
}

/// Runs plain simultaneous gradient descent-ascent with exact gradients
/// from the origin for `steps` steps, recording the first-touch order of
/// every coordinate. The chain structure admits at most one new coordinate
/// per step, so the result is a prefix of [`chain_order`] whenever the
/// instance behaves as constructed.
pub fn track_support(
    problem: &MinimaxProblem,
    steps: usize,
    eta_x: f64,
    eta_y: f64,
) -> Result<SupportTracker> {
    let mut x = vec![0.0; problem.dim_x()];
    let mut y = vec![0.0; problem.dim_y()];
    let mut tracker = SupportTracker::new(problem.dim_x() + problem.dim_y());
    for _ in 0..steps {
        let gx = problem.raw_grad_x(&x, &y)?;
        let gy = problem.raw_grad_y(&x, &y)?;
        for (xi, gi) in x.iter_mut().zip(&gx) {
            *xi -= eta_x * gi;
        }
        for (yi, gi) in y.iter_mut().zip(&gy) {
            *yi += eta_y * gi;
        }
        tracker.observe(&x, 0);
        tracker.observe(&y, problem.dim_x());
    }
    Ok(tracker)
}
