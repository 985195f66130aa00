use super::{dot, norm, Matrix};
use crate::error::{Error, Result};
use crate::sampling::RngStream;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

/// A square linear map that can only be applied forward.
///
/// There is deliberately no transpose or inverse application here: the
/// solvers built on top of this trait must work with `v -> Mv` alone.
pub trait LinearOperator: Send + Sync {
    fn dim(&self) -> usize;

    /// `out = M x`
    fn apply_into(&self, x: &[f64], out: &mut [f64]);

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.apply_into(x, &mut out);
        out
    }

    /// Applies the map to `count` vectors stored back to back in `xs`,
    /// writing the images back to back into `out`.
    fn apply_many_into(&self, xs: &[f64], count: usize, out: &mut [f64]) {
        let d = self.dim();
        assert_eq!(xs.len(), d * count, "batched input length");
        assert_eq!(out.len(), d * count, "batched output length");
        for (x, o) in xs.chunks_exact(d).zip(out.chunks_exact_mut(d)) {
            self.apply_into(x, o);
        }
    }
}

impl LinearOperator for Matrix {
    fn dim(&self) -> usize {
        assert!(self.is_square(), "operator matrices must be square");
        self.rows()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.matvec_into(x, out);
    }

    fn apply_many_into(&self, xs: &[f64], count: usize, out: &mut [f64]) {
        let d = self.dim();
        assert_eq!(xs.len(), d * count, "batched input length");
        assert_eq!(out.len(), d * count, "batched output length");
        if count == 0 {
            return;
        }
        // Column i of the d×count product is the image of vector i, so both
        // batches use row stride 1 and column stride d.
        let (n, k) = (d as isize, count);
        // SAFETY: every slice holds exactly the element counts implied by the
        // dimensions and strides passed, and `out` does not alias the inputs.
        unsafe {
            matrixmultiply::dgemm(d, d, k, 1.0, self.entries().as_ptr(), n, 1, xs.as_ptr(), 1, n, 0.0, out.as_mut_ptr(), 1, n);
        }
    }
}

/// Wraps an operator and counts forward applications.
pub struct CountingOperator<T> {
    inner: T,
    count: AtomicUsize,
}

impl<T: LinearOperator> CountingOperator<T> {
    pub fn new(inner: T) -> Self {
        Self { inner, count: AtomicUsize::new(0) }
    }

    pub fn count(&self) -> usize {
        self.count.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.count.store(0, Ordering::Relaxed);
    }
}

impl<T: LinearOperator> LinearOperator for CountingOperator<T> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.inner.apply_into(x, out);
    }

    fn apply_many_into(&self, xs: &[f64], count: usize, out: &mut [f64]) {
        self.count.fetch_add(count, Ordering::Relaxed);
        self.inner.apply_many_into(xs, count, out);
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).apply_into(x, out)
    }

    fn apply_many_into(&self, xs: &[f64], count: usize, out: &mut [f64]) {
        (**self).apply_many_into(xs, count, out)
    }
}

const SPD_PROBES: usize = 8;
const DEFAULT_SYMMETRY_TOL: f64 = 1e-12;

/// The problem `(A, B)` seen only through forward products.
///
/// Construction probes `B` for symmetry and positivity on random vectors.
#[derive(Clone)]
pub struct OperatorPair {
    a: Arc<dyn LinearOperator>,
    b: Arc<dyn LinearOperator>,
    dim: usize,
}

impl fmt::Debug for OperatorPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorPair").field("dim", &self.dim).finish_non_exhaustive()
    }
}

impl OperatorPair {
    pub fn new(a: Arc<dyn LinearOperator>, b: Arc<dyn LinearOperator>) -> Result<Self> {
        Self::with_symmetry_tolerance(a, b, DEFAULT_SYMMETRY_TOL)
    }

    pub fn with_symmetry_tolerance(a: Arc<dyn LinearOperator>, b: Arc<dyn LinearOperator>, tol: f64) -> Result<Self> {
        let dim = a.dim();
        if b.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: b.dim() });
        }
        if dim == 0 {
            return Err(Error::DimensionTooSmall(0, 1));
        }
        probe_spd(b.as_ref(), tol)?;
        Ok(Self { a, b, dim })
    }

    pub fn from_dense(a: &Matrix, b: &Matrix) -> Result<Self> {
        a.require_square()?;
        b.require_square()?;
        Self::new(Arc::new(a.clone()), Arc::new(b.clone()))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Always true for a constructed pair: the SPD probe ran in the constructor.
    pub fn is_b_spd(&self) -> bool {
        true
    }

    #[inline]
    pub fn apply_a_into(&self, x: &[f64], out: &mut [f64]) {
        self.a.apply_into(x, out)
    }

    #[inline]
    pub fn apply_b_into(&self, x: &[f64], out: &mut [f64]) {
        self.b.apply_into(x, out)
    }

    /// `A` applied to `count` vectors stored back to back.
    pub fn apply_a_many_into(&self, xs: &[f64], count: usize, out: &mut [f64]) {
        self.a.apply_many_into(xs, count, out)
    }

    pub fn apply_a(&self, x: &[f64]) -> Vec<f64> {
        self.a.apply(x)
    }

    pub fn apply_b(&self, x: &[f64]) -> Vec<f64> {
        self.b.apply(x)
    }

    pub(crate) fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.dim, got: x.len() })
        }
    }
}

fn probe_spd(b: &dyn LinearOperator, tol: f64) -> Result<()> {
    let d = b.dim();
    let mut rng = RngStream::new(0x5eed_0f_b5_9d, d as u64);
    let probes: Vec<Vec<f64>> = (0..SPD_PROBES).map(|_| rng.normal_vec(d)).collect();
    let images: Vec<Vec<f64>> = probes.iter().map(|p| b.apply(p)).collect();
    for (p, bp) in probes.iter().zip(&images) {
        let q = dot(p, bp);
        if !(q > 0.0) {
            return Err(Error::NotSpd(format!("<v, Bv> = {q:e} on a random probe")));
        }
    }
    for i in 0..SPD_PROBES {
        let j = (i + 1) % SPD_PROBES;
        let (u, bu) = (&probes[i], &images[i]);
        let (v, bv) = (&probes[j], &images[j]);
        let lhs = dot(u, bv);
        let rhs = dot(v, bu);
        let scale = (norm(u) * norm(bv)).max(norm(v) * norm(bu));
        if (lhs - rhs).abs() > tol * scale {
            return Err(Error::NotSpd(format!(
                "<u, Bv> = {lhs:e} but <v, Bu> = {rhs:e} (relative gap {:e})",
                (lhs - rhs).abs() / scale
            )));
        }
    }
    Ok(())
}
