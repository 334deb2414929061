//! Small helpers for dense vectors stored as `f64` slices.

use crate::error::{Error, Result};

/// Dot product of two equal-length slices.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Max-norm; zero for an empty slice.
pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Euclidean distance between two equal-length slices.
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}

/// Squared Euclidean distance.
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// `y += alpha * x`, in place.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `a - b` as a new vector.
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `x + omega * (x - x_prev)`, the momentum extrapolation step.
pub fn extrapolate(x: &[f64], x_prev: &[f64], omega: f64) -> Vec<f64> {
    debug_assert_eq!(x.len(), x_prev.len());
    x.iter()
        .zip(x_prev)
        .map(|(c, p)| c + omega * (c - p))
        .collect()
}

/// Projects `x` onto the closed Euclidean ball of the given center and
/// radius, in place. A non-positive radius projects onto the center.
pub fn project_ball(x: &mut [f64], center: &[f64], radius: f64) {
    debug_assert_eq!(x.len(), center.len());
    if radius <= 0.0 {
        x.copy_from_slice(center);
        return;
    }
    let d = dist(x, center);
    if d > radius {
        let t = radius / d;
        for (xi, ci) in x.iter_mut().zip(center) {
            *xi = ci + t * (*xi - ci);
        }
    }
}

/// Returns an error naming `context` if any entry is NaN or infinite.
pub fn ensure_finite(v: &[f64], context: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { context })
    }
}

/// Returns an error naming `context` if the scalar is NaN or infinite.
pub fn ensure_finite_scalar(v: f64, context: &'static str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { context })
    }
}
