//! Error metrics of iterates and the checker for the `min b²` bound.

use crate::error::{Error, Result};
use crate::linalg::geometry::sym_apply;
use crate::linalg::{dot, rayleigh, Matrix, OperatorPair};
use crate::oracle::{operator_norms, ReferenceSolution};
use crate::trace::RunTrace;

/// Relative quotient error `(R − r(v)) / R`.
///
/// When `R = 0` the relative error is undefined and the absolute error is
/// returned inside [`Error::ZeroMaxValue`].
pub fn rqe(reference: &ReferenceSolution, pair: &OperatorPair, v: &[f64]) -> Result<f64> {
    let r = rayleigh(pair, v)?;
    if reference.max_value == 0.0 {
        return Err(Error::ZeroMaxValue(reference.max_value - r));
    }
    Ok((reference.max_value - r) / reference.max_value)
}

/// `‖A^H v − <v, A^H v> Bv‖²`.
pub fn eigen_residual_sq(a: &Matrix, b: &Matrix, v: &[f64]) -> f64 {
    let h = sym_apply(a, v);
    let bv = b.matvec(v);
    let q = dot(v, &h);
    h.iter().zip(&bv).map(|(x, y)| (x - q * y).powi(2)).sum()
}

/// Running minimum of [`eigen_residual_sq`] over a sequence of iterates.
pub fn msqr<V: AsRef<[f64]>>(a: &Matrix, b: &Matrix, iterates: &[V]) -> Result<Vec<f64>> {
    a.require_square()?;
    b.require_square()?;
    let mut best = f64::INFINITY;
    iterates
        .iter()
        .map(|v| {
            let v = v.as_ref();
            if v.len() != a.rows() {
                return Err(Error::DimensionMismatch { expected: a.rows(), got: v.len() });
            }
            best = best.min(eigen_residual_sq(a, b, v));
            Ok(best)
        })
        .collect()
}

/// `1 − <v, B t> / (‖v‖_B ‖t‖_B)` as defined, and its minimum over `±v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinB2 {
    pub signed: f64,
    pub minimized: f64,
}

pub fn sin_b2(b: &Matrix, v: &[f64], v_true: &[f64]) -> Result<SinB2> {
    if v.len() != b.rows() || v_true.len() != b.rows() {
        return Err(Error::DimensionMismatch { expected: b.rows(), got: v.len().min(v_true.len()) });
    }
    let bt = b.matvec(v_true);
    let nv = dot(v, &b.matvec(v)).max(0.0).sqrt();
    let nt = dot(v_true, &bt).max(0.0).sqrt();
    if nv == 0.0 || nt == 0.0 {
        return Err(Error::ZeroVector);
    }
    // 1 ∓ cos = ‖v̂ ∓ t̂‖²_B / 2 for B-unit v̂, t̂; this form keeps relative
    // accuracy when the angle is tiny, where 1 − cos rounds to zero.
    let half_sq = |sign: f64| {
        let e: Vec<f64> = v.iter().zip(v_true).map(|(x, t)| x / nv - sign * t / nt).collect();
        dot(&e, &b.matvec(&e)).max(0.0) / 2.0
    };
    let signed = half_sq(1.0);
    Ok(SinB2 { signed, minimized: signed.min(half_sq(-1.0)) })
}

/// Outcome of checking `min_{k≤n} b_k² ≤ C/(n+1)` at every prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub passed: bool,
    pub constant: f64,
    pub checked: usize,
    /// Smallest `1 − min b² / bound` over all prefixes; negative on violation.
    pub worst_margin: f64,
    /// Iteration index `n` of the first violated prefix.
    pub first_violation: Option<usize>,
}

/// Checks the bound on `(k, |b_k|)` pairs, `k` ascending.
pub fn check_min_bsq_bound_values(steps: &[(usize, f64)], constant: f64) -> BoundReport {
    let mut running = f64::INFINITY;
    let mut worst = f64::INFINITY;
    let mut first = None;
    for &(k, abs_b) in steps {
        running = running.min(abs_b * abs_b);
        let bound = constant / (k + 1) as f64;
        let margin = 1.0 - running / bound;
        worst = worst.min(margin);
        if running > bound && first.is_none() {
            first = Some(k);
        }
    }
    BoundReport { passed: first.is_none(), constant, checked: steps.len(), worst_margin: worst, first_violation: first }
}

/// Checks every recorded step of `trace` against the bound with the norms
/// of `(A, B)`.
pub fn check_min_bsq_bound(trace: &RunTrace, a: &Matrix, b: &Matrix) -> Result<BoundReport> {
    let constant = operator_norms(a, b)?.min_bsq_constant();
    let steps: Vec<(usize, f64)> = trace.records.iter().filter_map(|r| r.abs_b.map(|x| (r.k, x))).collect();
    Ok(check_min_bsq_bound_values(&steps, constant))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::reference_solve;
    use crate::trace::TraceRecord;

    #[test]
    fn rqe_examples() {
        let a = Matrix::from_diag(&[2.0, 1.0]);
        let i = Matrix::identity(2);
        let pair = OperatorPair::from_dense(&a, &i).unwrap();
        let s = reference_solve(&a, &i).unwrap();
        assert!(rqe(&s, &pair, s.max_vector.as_slice()).unwrap().abs() < 1e-10);
        assert_eq!(rqe(&s, &pair, &[0.0, 1.0]).unwrap(), 0.5);

        let skew = Matrix::from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        let s = reference_solve(&skew, &i).unwrap();
        let pair = OperatorPair::from_dense(&skew, &i).unwrap();
        assert!(matches!(rqe(&s, &pair, &[1.0, 0.0]), Err(Error::ZeroMaxValue(_))));
    }

    #[test]
    fn msqr_is_running_minimum() {
        let a = Matrix::from_diag(&[2.0, 1.0]);
        let i = Matrix::identity(2);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let iterates = vec![vec![h, h], vec![1.0, 0.0], vec![0.6, 0.8]];
        let m = msqr(&a, &i, &iterates).unwrap();
        assert!(m[0] > 0.0);
        assert_eq!(m[1], 0.0);
        assert_eq!(m[2], 0.0);
        assert_eq!(msqr(&a, &i, &[vec![1.0, 0.0]]).unwrap(), vec![0.0]);
    }

    #[test]
    fn sin_b2_examples() {
        let b = Matrix::from_diag(&[1.0, 4.0]);
        let t = [1.0, 1.0];
        assert!(sin_b2(&b, &t, &t).unwrap().minimized.abs() < 1e-15);
        let neg = sin_b2(&b, &[-1.0, -1.0], &t).unwrap();
        assert!(neg.minimized.abs() < 1e-15);
        assert!((neg.signed - 2.0).abs() < 1e-15);
        // <(4, -1), B (1, 1)> = 4 - 4 = 0
        assert!((sin_b2(&b, &[4.0, -1.0], &t).unwrap().minimized - 1.0).abs() < 1e-15);
        assert_eq!(sin_b2(&b, &[0.0, 0.0], &t), Err(Error::ZeroVector));
        // 1 − 1/√(1 + ε²) ≈ ε²/2, far below the spacing of doubles near 1.
        let tiny = sin_b2(&Matrix::identity(2), &[1.0, 1e-9], &[1.0, 0.0]).unwrap();
        assert!((tiny.minimized / 5e-19 - 1.0).abs() < 1e-6, "{tiny:?}");
    }

    #[test]
    fn bound_checker_controls() {
        let ok = check_min_bsq_bound_values(&[(0, 2.0)], 4.0);
        assert!(ok.passed);
        assert_eq!(ok.worst_margin, 0.0);
        let bad = check_min_bsq_bound_values(&[(0, 1.0), (1, 1.0), (2, 1.0), (3, 0.1)], 2.0);
        assert!(!bad.passed);
        assert_eq!(bad.first_violation, Some(2));
        assert!(bad.worst_margin < 0.0);
    }

    #[test]
    fn bound_checker_reads_trace() {
        let a = Matrix::from_diag(&[1.0, 0.5]);
        let i = Matrix::identity(2);
        let rec = |k, b| TraceRecord { k, wall_s: 0.0, a: 0.0, abs_b: b, tau: None, rqe: None, msqr: None, grad_norm: None };
        let trace = RunTrace { trial: 0, records: vec![rec(0, Some(1.0)), rec(1, Some(100.0)), rec(2, None)] };
        let r = check_min_bsq_bound(&trace, &a, &i).unwrap();
        assert_eq!(r.checked, 2);
        assert_eq!(r.constant, 32.0);
        assert!(r.passed);
    }
}
