//! Dense ground truth for diagnostics and tests.
//!
//! Everything here factorizes `B` and reads `A^T`, which the solvers never
//! do. Use it to score runs, never to drive them.

use crate::error::{Error, Result};
use crate::linalg::geometry::sym_apply;
use crate::linalg::{dot, norm, riemannian_grad, Matrix, OperatorPair, UnitBVector};
use crate::metrics::{eigen_residual_sq, sin_b2};
use crate::trace::{relative_error, Monitor, Observation};
use nalgebra::{DMatrix, SymmetricEigen};

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITERS: usize = 10_000;
const MULTIPLICITY_RTOL: f64 = 1e-8;

/// A problem whose matrices are available, or only its forward operators.
#[derive(Debug, Clone)]
pub enum Problem {
    Dense(DenseProblem),
    Operators(OperatorPair),
}

impl Problem {
    pub fn dense(&self) -> Result<&DenseProblem> {
        match self {
            Problem::Dense(p) => Ok(p),
            Problem::Operators(_) => Err(Error::DenseRequired),
        }
    }

    pub fn pair(&self) -> Result<OperatorPair> {
        match self {
            Problem::Dense(p) => p.pair(),
            Problem::Operators(p) => Ok(p.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseProblem {
    pub a: Matrix,
    pub b: Matrix,
}

impl DenseProblem {
    pub fn new(a: Matrix, b: Matrix) -> Result<Self> {
        a.require_square()?;
        b.require_square()?;
        if a.rows() != b.rows() {
            return Err(Error::DimensionMismatch { expected: a.rows(), got: b.rows() });
        }
        if a.entries().iter().chain(b.entries()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { a, b })
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    pub fn pair(&self) -> Result<OperatorPair> {
        OperatorPair::from_dense(&self.a, &self.b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    /// `R(A, B)`, the largest eigenvalue of `B^{-1} A^H`.
    pub max_value: f64,
    pub max_vector: UnitBVector,
    /// `λ₁ − λ₂`; infinite in one dimension.
    pub eigengap: f64,
    /// Multiplicity of `λ₁` at relative tolerance `1e-8`.
    pub max_space_dim: usize,
    /// All generalized eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
}

/// Spectral norms entering the step sizes and convergence bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorNorms {
    /// `‖A‖`
    pub a: f64,
    /// `‖A^H‖`
    pub a_sym: f64,
    /// `‖B‖ = λ_max(B)`
    pub b: f64,
    /// `‖B^{-1}‖ = 1/λ_min(B)`
    pub b_inv: f64,
    /// `λ_max(B) / λ_min(B)`
    pub kappa: f64,
}

impl OperatorNorms {
    /// `8 ‖A‖² ‖B^{-1}‖ (1 + 3κ)`, so that `min_{k≤n} b_k² ≤ C/(n+1)`.
    pub fn min_bsq_constant(&self) -> f64 {
        8.0 * self.a * self.a * self.b_inv * (1.0 + 3.0 * self.kappa)
    }

    /// `4 ‖A‖ ‖B^{-1}‖`, an upper bound for every `τ_k b_k`.
    pub fn tau_b_bound(&self) -> f64 {
        4.0 * self.a * self.b_inv
    }
}

fn symmetric_eigen(m: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let eig = SymmetricEigen::try_new(m, EIGEN_EPS, EIGEN_MAX_ITERS).ok_or(Error::EigensolverFailure)?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// `B = L L^T` and `C = L^{-1} A^H L^{-T}`.
fn whitened(a: &Matrix, b: &Matrix) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    a.require_square()?;
    b.require_square()?;
    if a.rows() != b.rows() {
        return Err(Error::DimensionMismatch { expected: a.rows(), got: b.rows() });
    }
    let bn = symmetrize(&b.to_nalgebra());
    let l = bn.cholesky().ok_or(Error::CholeskyFailure)?.l();
    let h = symmetrize(&a.to_nalgebra());
    let x = l.solve_lower_triangular(&h).ok_or(Error::CholeskyFailure)?;
    let c = l.solve_lower_triangular(&x.transpose()).ok_or(Error::CholeskyFailure)?;
    Ok((l, symmetrize(&c)))
}

/// Generalized eigenvalues of `(A^H, B)`, descending.
pub fn generalized_eigenvalues(a: &Matrix, b: &Matrix) -> Result<Vec<f64>> {
    let (_, c) = whitened(a, b)?;
    Ok(symmetric_eigen(c)?.0)
}

pub fn reference_solve(a: &Matrix, b: &Matrix) -> Result<ReferenceSolution> {
    let (l, c) = whitened(a, b)?;
    let (values, vectors) = symmetric_eigen(c)?;
    let y = vectors.column(0).into_owned();
    let v = l.transpose().solve_upper_triangular(&y).ok_or(Error::CholeskyFailure)?;
    let mut v: Vec<f64> = v.iter().copied().collect();

    // Fix the sign so the largest-magnitude entry is positive.
    let pivot = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    let bv = b.matvec(&v);
    let nb = dot(&v, &bv).sqrt();
    v.iter_mut().for_each(|x| *x /= nb);

    let max_value = values[0];
    let scale = values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let max_space_dim = values.iter().take_while(|&&x| x >= max_value - MULTIPLICITY_RTOL * scale).count();
    let eigengap = if values.len() > 1 { values[0] - values[1] } else { f64::INFINITY };
    Ok(ReferenceSolution { max_value, max_vector: UnitBVector::from_raw(v), eigengap, max_space_dim, eigenvalues: values })
}

pub fn spectral_norm(m: &Matrix) -> f64 {
    let s = m.to_nalgebra().singular_values();
    s.iter().fold(0.0f64, |acc, &x| acc.max(x))
}

pub fn operator_norms(a: &Matrix, b: &Matrix) -> Result<OperatorNorms> {
    a.require_square()?;
    b.require_square()?;
    let b_eigs = symmetric_eigen(symmetrize(&b.to_nalgebra()))?.0;
    let (b_max, b_min) = (b_eigs[0], *b_eigs.last().unwrap_or(&0.0));
    if !(b_min > 0.0) {
        return Err(Error::NotSpd(format!("smallest eigenvalue {b_min:e}")));
    }
    let h_eigs = symmetric_eigen(symmetrize(&a.to_nalgebra()))?.0;
    let a_sym = h_eigs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(OperatorNorms { a: spectral_norm(a), a_sym, b: b_max, b_inv: 1.0 / b_min, kappa: b_max / b_min })
}

/// Monitor that scores each recorded iterate against dense ground truth.
///
/// Reports the relative quotient error, the squared eigen-residual (kept as a
/// running minimum by the solver), and optionally the Riemannian gradient
/// norm. With a reference vector it also logs the sign-minimized `sin²_B`
/// error of every recorded iterate in [`DenseMonitor::sin_b2_history`].
pub struct DenseMonitor<'a> {
    a: &'a Matrix,
    b: &'a Matrix,
    max_value: f64,
    with_grad: bool,
    true_vector: Option<&'a [f64]>,
    pub sin_b2_history: Vec<f64>,
}

impl<'a> DenseMonitor<'a> {
    pub fn new(problem: &'a DenseProblem, reference: &ReferenceSolution) -> Self {
        Self { a: &problem.a, b: &problem.b, max_value: reference.max_value, with_grad: false, true_vector: None, sin_b2_history: Vec::new() }
    }

    pub fn with_grad_norm(mut self) -> Self {
        self.with_grad = true;
        self
    }

    pub fn with_true_vector(mut self, v: &'a [f64]) -> Self {
        self.true_vector = Some(v);
        self
    }
}

impl Monitor for DenseMonitor<'_> {
    fn reference_value(&self) -> Option<f64> {
        Some(self.max_value)
    }

    fn observe(&mut self, v: &[f64], a: f64) -> Observation {
        let grad_norm = if self.with_grad { riemannian_grad(self.a, self.b, v).ok().map(|g| norm(&g)) } else { None };
        if let Some(t) = self.true_vector {
            if let Ok(s) = sin_b2(self.b, v, t) {
                self.sin_b2_history.push(s.minimized);
            }
        }
        Observation { rqe: relative_error(self.max_value, a), residual_sq: Some(eigen_residual_sq(self.a, self.b, v)), grad_norm }
    }
}

/// `A^H v` for dense `A`; exposed for residual checks.
pub fn symmetric_apply(a: &Matrix, v: &[f64]) -> Vec<f64> {
    sym_apply(a, v)
}
