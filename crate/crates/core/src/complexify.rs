//! Complex pairs solved through their real embedding.
//!
//! `v ∈ ℂ^d` maps to `(Re v, Im v) ∈ ℝ^{2d}` and `M` to
//! `[[Re M, −Im M], [Im M, Re M]]`, so that `<x̃, M̃ṽ> = Re <x, Mv>` and the
//! real solver maximizes `Re <v, Av> / <v, Bv>`.

use crate::algorithms::{szo_run, SolverConfig, StopReason};
use crate::error::{Error, Result};
use crate::linalg::io::parse_dim;
use crate::linalg::{Matrix, OperatorPair};
use crate::sampling::RngStream;
use crate::trace::{Monitor, RunTrace};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use std::io::{BufRead, Write};

const HPD_PROBES: usize = 20;
const HPD_TOL: f64 = 1e-10;

/// Dense complex matrix, row-major real and imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidConfig(format!("matrix shape {rows}x{cols} must be positive")));
        }
        for part in [&re, &im] {
            if part.len() != rows * cols {
                return Err(Error::DimensionMismatch { expected: rows * cols, got: part.len() });
            }
        }
        if re.iter().chain(&im).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, re, im })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut re = Vec::with_capacity(rows * cols);
        let mut im = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let z = f(i, j);
                re.push(z.re);
                im.push(z.im);
            }
        }
        Self { rows, cols, re, im }
    }

    pub fn from_real(m: &Matrix) -> Self {
        Self { rows: m.rows(), cols: m.cols(), re: m.entries().to_vec(), im: vec![0.0; m.rows() * m.cols()] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let k = i * self.cols + j;
        Complex64::new(self.re[k], self.im[k])
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.cols, "dimension mismatch");
        (0..self.rows).map(|i| (0..self.cols).map(|j| self.get(i, j) * x[j]).sum()).collect()
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, got: other.rows });
        }
        Ok(Self::from_fn(self.rows, other.cols, |i, j| (0..self.cols).map(|k| self.get(i, k) * other.get(k, j)).sum()))
    }

    pub fn add(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::DimensionMismatch { expected: self.rows * self.cols, got: other.rows * other.cols });
        }
        Ok(Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j) + other.get(i, j)))
    }

    pub fn conj_transpose(&self) -> ComplexMatrix {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j))
    }
}

/// `<x, y> = Σ conj(x_i) y_i`.
pub fn cdot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn realify_vector(v: &[Complex64]) -> Vec<f64> {
    v.iter().map(|z| z.re).chain(v.iter().map(|z| z.im)).collect()
}

pub fn derealify(v: &[f64]) -> Result<Vec<Complex64>> {
    if v.len() % 2 != 0 {
        return Err(Error::DimensionMismatch { expected: v.len() + 1, got: v.len() });
    }
    let d = v.len() / 2;
    Ok((0..d).map(|i| Complex64::new(v[i], v[d + i])).collect())
}

/// `[[Re M, −Im M], [Im M, Re M]]`.
pub fn realify_matrix(m: &ComplexMatrix) -> Result<Matrix> {
    if m.rows != m.cols {
        return Err(Error::NotSquare { rows: m.rows, cols: m.cols });
    }
    let d = m.rows;
    Ok(Matrix::from_fn(2 * d, 2 * d, |i, j| {
        let k = (i % d) * d + j % d;
        match (i < d, j < d) {
            (true, true) | (false, false) => m.re[k],
            (true, false) => -m.im[k],
            (false, true) => m.im[k],
        }
    }))
}

/// Hermitian-positive-definite probe on seeded random complex vectors.
pub fn check_hermitian_pd(b: &ComplexMatrix) -> Result<()> {
    if b.rows != b.cols {
        return Err(Error::NotSquare { rows: b.rows, cols: b.cols });
    }
    let d = b.rows;
    let mut rng = RngStream::new(0x4e12_b0b5, d as u64);
    let mut draw = || -> Vec<Complex64> { (0..d).map(|_| Complex64::new(rng.normal(), rng.normal())).collect() };
    let probes: Vec<Vec<Complex64>> = (0..HPD_PROBES).map(|_| draw()).collect();
    let images: Vec<Vec<Complex64>> = probes.iter().map(|p| b.matvec(p)).collect();
    let norm = |x: &[Complex64]| x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for i in 0..HPD_PROBES {
        let (u, bu) = (&probes[i], &images[i]);
        let q = cdot(u, bu);
        let scale = norm(u) * norm(bu);
        if !(q.re > 0.0) || q.im.abs() > HPD_TOL * scale {
            return Err(Error::NotHermitianPd(format!("probe {i}: <v, Bv> = {q}")));
        }
        let j = (i + 1) % HPD_PROBES;
        let (v, bv) = (&probes[j], &images[j]);
        let lhs = cdot(u, bv);
        let rhs = cdot(bu, v);
        let scale = (norm(u) * norm(bv)).max(norm(v) * norm(bu));
        if (lhs - rhs).norm() > HPD_TOL * scale {
            return Err(Error::NotHermitianPd(format!("probes {i},{j}: symmetry residual {:e}", (lhs - rhs).norm())));
        }
    }
    Ok(())
}

/// Eigenvalues of `B^{-1/2} A^H B^{-1/2}` with `A^H = (A + A*)/2`, descending,
/// from a complex Hermitian eigensolve.
pub fn complex_generalized_eigenvalues(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Vec<f64>> {
    if a.rows != a.cols {
        return Err(Error::NotSquare { rows: a.rows, cols: a.cols });
    }
    if b.rows != b.cols || b.rows != a.rows {
        return Err(Error::DimensionMismatch { expected: a.rows, got: b.rows });
    }
    let herm = |m: DMatrix<Complex64>| (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let l = herm(b.to_nalgebra()).cholesky().ok_or(Error::CholeskyFailure)?.l();
    let h = herm(a.to_nalgebra());
    let x = l.solve_lower_triangular(&h).ok_or(Error::CholeskyFailure)?;
    let c = l.solve_lower_triangular(&x.adjoint()).ok_or(Error::CholeskyFailure)?;
    let eig = SymmetricEigen::try_new(herm(c), 1e-15, 10_000).ok_or(Error::EigensolverFailure)?;
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(|x, y| y.total_cmp(x));
    Ok(values)
}

/// `R(A, B)` of a complex pair from the complex Hermitian eigensolve.
pub fn complex_reference_value(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    Ok(complex_generalized_eigenvalues(a, b)?[0])
}

/// `Re <v, Av> / <v, Bv>`.
pub fn complex_rayleigh(a: &ComplexMatrix, b: &ComplexMatrix, v: &[Complex64]) -> Result<f64> {
    let den = cdot(v, &b.matvec(v)).re;
    if !(den > 0.0) {
        return Err(Error::NonPositiveDenominator(den));
    }
    Ok(cdot(v, &a.matvec(v)).re / den)
}

#[derive(Debug, Clone)]
pub struct ComplexSolution {
    pub vector: Vec<Complex64>,
    pub value: f64,
    pub trace: RunTrace,
    pub stop: StopReason,
}

/// Runs the real solver on the embedded pair.
pub fn solve_complex(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    cfg: &SolverConfig,
    rng: &mut RngStream,
    monitor: &mut dyn Monitor,
) -> Result<ComplexSolution> {
    check_hermitian_pd(b)?;
    let at = realify_matrix(a)?;
    let bt = realify_matrix(b)?;
    if at.rows() != bt.rows() {
        return Err(Error::DimensionMismatch { expected: at.rows(), got: bt.rows() });
    }
    let pair = OperatorPair::from_dense(&at, &bt)?;
    let (state, trace, stop) = szo_run(&pair, cfg, rng, monitor)?;
    let vector = derealify(state.v().as_slice())?;
    let value = complex_rayleigh(a, b, &vector)?;
    Ok(ComplexSolution { vector, value, trace, stop })
}

/// Text format: header `zd <rows> <cols>`, then row-major `re im` pairs.
pub fn write_complex_text<W: Write>(mut w: W, m: &ComplexMatrix) -> Result<()> {
    writeln!(w, "zd {} {}", m.rows, m.cols)?;
    for i in 0..m.rows {
        let line: Vec<String> = (0..m.cols).map(|j| format!("{} {}", m.re[i * m.cols + j], m.im[i * m.cols + j])).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn read_complex_text<R: BufRead>(mut r: R) -> Result<ComplexMatrix> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut tokens = text.split_whitespace();
    match tokens.next() {
        Some("zd") => {}
        Some(other) => return Err(Error::Format(format!("expected header tag 'zd', found '{other}'"))),
        None => return Err(Error::Format("empty matrix file".into())),
    }
    let rows = parse_dim(tokens.next(), "rows")?;
    let cols = parse_dim(tokens.next(), "cols")?;
    let values = tokens
        .map(|t| t.parse::<f64>().map_err(|_| Error::Format(format!("bad entry '{t}'"))))
        .collect::<Result<Vec<f64>>>()?;
    if values.len() != 2 * rows * cols {
        return Err(Error::Format(format!("expected {} numbers, found {}", 2 * rows * cols, values.len())));
    }
    let re = values.iter().step_by(2).copied().collect();
    let im = values.iter().skip(1).step_by(2).copied().collect();
    ComplexMatrix::new(rows, cols, re, im)
}
