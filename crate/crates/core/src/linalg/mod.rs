//! Dense kernels, the forward-only operator abstraction and the geometry of
//! the B-sphere `{v : <v, Bv> = 1}`.

mod compensated;
pub(crate) mod geometry;
pub mod io;
mod matrix;
mod operator;

pub use compensated::quotient_increment;
pub use geometry::{b_coefficient, b_norm, project_tangent, rayleigh, retract, riemannian_grad, UnitBVector};
pub use matrix::Matrix;
pub use operator::{CountingOperator, LinearOperator, OperatorPair};

/// Euclidean inner product.
///
/// Four independent accumulators let the loop vectorize while keeping the
/// summation order fixed, so results are bit-reproducible.
#[inline]
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let n = x.len();
    let chunks = n / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..chunks {
        let j = 4 * i;
        s0 += x[j] * y[j];
        s1 += x[j + 1] * y[j + 1];
        s2 += x[j + 2] * y[j + 2];
        s3 += x[j + 3] * y[j + 3];
    }
    let mut tail = 0.0;
    for j in 4 * chunks..n {
        tail += x[j] * y[j];
    }
    (s0 + s1) + (s2 + s3) + tail
}

#[inline]
pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn scale(alpha: f64, x: &mut [f64]) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_matches_naive_sum_on_odd_lengths() {
        let x: Vec<f64> = (0..7).map(|i| i as f64 + 0.5).collect();
        let y: Vec<f64> = (0..7).map(|i| 1.0 - i as f64).collect();
        let naive: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        assert!((dot(&x, &y) - naive).abs() < 1e-12);
        assert_eq!(norm(&[3.0, 4.0]), 5.0);
    }

    #[test]
    fn axpy_and_scale() {
        let mut y = vec![1.0, 2.0];
        axpy(2.0, &[1.0, -1.0], &mut y);
        assert_eq!(y, vec![3.0, 0.0]);
        scale(0.5, &mut y);
        assert_eq!(y, vec![1.5, 0.0]);
    }
}
