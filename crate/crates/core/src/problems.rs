//! Seeded generators for the four experiment families.
//!
//! Every generator is a pure function of its arguments: the same `(d, seed)`
//! reproduces the same matrices bit for bit.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::oracle::DenseProblem;
use crate::sampling::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemFamily {
    GaussianPair,
    IllConditioned,
    OperatorNorm,
    KarhunenLoeve,
}

impl ProblemFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProblemFamily::GaussianPair => "gaussian",
            ProblemFamily::IllConditioned => "ill-conditioned",
            ProblemFamily::OperatorNorm => "operator-norm",
            ProblemFamily::KarhunenLoeve => "karhunen-loeve",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(ProblemFamily::GaussianPair),
            "ill-conditioned" | "illcond" => Ok(ProblemFamily::IllConditioned),
            "operator-norm" | "opnorm" => Ok(ProblemFamily::OperatorNorm),
            "karhunen-loeve" | "kl" => Ok(ProblemFamily::KarhunenLoeve),
            other => Err(Error::InvalidConfig(format!("unknown problem family '{other}'"))),
        }
    }
}

/// Kernel length scale and grid interval of the Karhunen–Loève family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlParams {
    pub length_scale: f64,
    pub interval: (f64, f64),
}

impl Default for KlParams {
    fn default() -> Self {
        Self { length_scale: 0.3, interval: (0.0, 1.0) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub family: ProblemFamily,
    pub dim: usize,
    /// Decades of the spectrum of B (ill-conditioned family only).
    pub q: Option<f64>,
    pub seed: u64,
    pub kl: KlParams,
}

impl ProblemSpec {
    pub fn new(family: ProblemFamily, dim: usize, seed: u64) -> Self {
        Self { family, dim, q: None, seed, kl: KlParams::default() }
    }

    pub fn with_q(mut self, q: f64) -> Self {
        self.q = Some(q);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let min_dim = if self.family == ProblemFamily::KarhunenLoeve { 3 } else { 2 };
        if self.dim < min_dim {
            return Err(Error::DimensionTooSmall(self.dim, min_dim));
        }
        if self.family == ProblemFamily::IllConditioned {
            match self.q {
                Some(q) if q > 0.0 && q.is_finite() => {}
                Some(q) => return Err(Error::InvalidConfig(format!("q must be positive, got {q}"))),
                None => return Err(Error::InvalidConfig("the ill-conditioned family needs q".into())),
            }
        }
        Ok(())
    }

    /// The dense pair for this spec.
    pub fn generate(&self) -> Result<DenseProblem> {
        self.validate()?;
        let (a, b) = match self.family {
            ProblemFamily::GaussianPair => gaussian_pair(self.dim, self.seed)?,
            ProblemFamily::IllConditioned => ill_conditioned_pair(self.dim, self.q.unwrap_or(1.0), self.seed)?,
            ProblemFamily::OperatorNorm => {
                let p = operator_norm_pair(self.dim, self.seed)?;
                (p.a, p.b)
            }
            ProblemFamily::KarhunenLoeve => karhunen_loeve(self.dim, self.kl)?,
        };
        DenseProblem::new(a, b)
    }
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut RngStream) -> Matrix {
    Matrix::new(rows, cols, rng.normal_vec(rows * cols)).expect("finite normals")
}

/// `A` standard Gaussian and `B = (B̃ + dI)^T (B̃ + dI)` with `B̃` standard Gaussian.
pub fn gaussian_pair(d: usize, seed: u64) -> Result<(Matrix, Matrix)> {
    if d < 2 {
        return Err(Error::DimensionTooSmall(d, 2));
    }
    let mut rng = RngStream::new(seed, 0);
    let a = gaussian_matrix(d, d, &mut rng);
    let shifted = gaussian_matrix(d, d, &mut rng).add(&Matrix::identity(d).scaled(d as f64))?;
    Ok((a, shifted.gram()))
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the signs
/// fixed so that `R` has a nonnegative diagonal.
pub fn random_orthogonal(d: usize, rng: &mut RngStream) -> Matrix {
    let g = gaussian_matrix(d, d, rng).to_nalgebra();
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Matrix::from_nalgebra(&q)
}

/// `A` standard Gaussian and `B = Q diag(10^{p_i}) Q^T` with `p_i ~ U(0, q)`.
pub fn ill_conditioned_pair(d: usize, q: f64, seed: u64) -> Result<(Matrix, Matrix)> {
    if d < 2 {
        return Err(Error::DimensionTooSmall(d, 2));
    }
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::InvalidConfig(format!("q must be positive, got {q}")));
    }
    let mut rng = RngStream::new(seed, 0);
    let a = gaussian_matrix(d, d, &mut rng);
    let qm = random_orthogonal(d, &mut rng);
    let lambda: Vec<f64> = (0..d).map(|_| 10f64.powf(q * rng.uniform())).collect();
    if lambda.iter().any(|l| !l.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut b = Matrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let s: f64 = (0..d).map(|k| qm.get(i, k) * lambda[k] * qm.get(j, k)).sum();
            b.set(i, j, s);
            b.set(j, i, s);
        }
    }
    Ok((a, b))
}

/// Generalized operator-norm pair `A = Ã^T Ã`, `B = B̃^T B̃` with the factors.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorNormPair {
    pub a: Matrix,
    pub b: Matrix,
    /// `Ã`, `d × d`.
    pub a_factor: Matrix,
    /// `B̃`, `2d × d`.
    pub b_factor: Matrix,
}

pub fn operator_norm_pair(d: usize, seed: u64) -> Result<OperatorNormPair> {
    if d < 2 {
        return Err(Error::DimensionTooSmall(d, 2));
    }
    let mut rng = RngStream::new(seed, 0);
    let a_factor = gaussian_matrix(d, d, &mut rng);
    let b_factor = gaussian_matrix(2 * d, d, &mut rng);
    Ok(OperatorNormPair { a: a_factor.gram(), b: b_factor.gram(), a_factor, b_factor })
}

/// RBF covariance `exp(−(t_i − t_j)² / (2ℓ²))` on a uniform grid and the
/// trapezoidal mass matrix of that grid.
pub fn karhunen_loeve(d: usize, params: KlParams) -> Result<(Matrix, Matrix)> {
    if d < 3 {
        return Err(Error::DimensionTooSmall(d, 3));
    }
    let (lo, hi) = params.interval;
    if !(hi > lo) || !(params.length_scale > 0.0) {
        return Err(Error::InvalidConfig("need hi > lo and a positive length scale".into()));
    }
    let h = (hi - lo) / (d - 1) as f64;
    let t: Vec<f64> = (0..d).map(|i| lo + i as f64 * h).collect();
    let two_l2 = 2.0 * params.length_scale * params.length_scale;
    let a = Matrix::from_fn(d, d, |i, j| (-(t[i] - t[j]).powi(2) / two_l2).exp());
    let mut w = vec![h; d];
    w[0] = h / 2.0;
    w[d - 1] = h / 2.0;
    Ok((a, Matrix::from_diag(&w)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dot, OperatorPair};
    use crate::oracle::{operator_norms, reference_solve};

    #[test]
    fn gaussian_pair_is_deterministic_and_spd() {
        let (a1, b1) = gaussian_pair(10, 7).unwrap();
        let (a2, b2) = gaussian_pair(10, 7).unwrap();
        assert_eq!((a1.clone(), b1.clone()), (a2, b2));
        assert_ne!(gaussian_pair(10, 8).unwrap().0, a1);
        assert_eq!(b1.max_asymmetry(), 0.0);
        assert!(OperatorPair::from_dense(&a1, &b1).is_ok());
        assert!(operator_norms(&a1, &b1).unwrap().b_inv > 0.0);
    }

    #[test]
    fn orthogonal_factor() {
        let q = random_orthogonal(30, &mut RngStream::new(3, 0));
        let qtq = q.transpose().matmul(&q).unwrap();
        assert!(qtq.sub(&Matrix::identity(30)).unwrap().frobenius_norm() < 1e-10);
    }

    #[test]
    fn overflowing_spectrum_is_rejected() {
        assert!(matches!(ill_conditioned_pair(4, 400.0, 0), Err(Error::NonFinite)));
    }

    #[test]
    fn ill_conditioned_envelope() {
        let (_, b) = ill_conditioned_pair(100, 1.0, 5).unwrap();
        let k = operator_norms(&Matrix::identity(100), &b).unwrap().kappa;
        assert!((1.0..=10.0 + 1e-8).contains(&k), "kappa {k}");
        let (_, b) = ill_conditioned_pair(100, 3.0, 5).unwrap();
        let k = operator_norms(&Matrix::identity(100), &b).unwrap().kappa;
        assert!(k <= 1e3 * (1.0 + 1e-8) && k > 1e2, "kappa {k}");
    }

    #[test]
    fn operator_norm_pair_identities() {
        let p = operator_norm_pair(6, 11).unwrap();
        let mut r = RngStream::new(11, 5);
        for _ in 0..20 {
            let v = r.normal_vec(6);
            let av = p.a_factor.matvec(&v);
            let lhs = dot(&v, &p.a.matvec(&v));
            assert!((lhs - dot(&av, &av)).abs() <= 1e-12 * lhs.abs());
        }
        let s = crate::oracle::spectral_norm(&p.b_factor);
        assert!(s > 0.0);
        assert_eq!((p.b_factor.rows(), p.b_factor.cols()), (12, 6));
    }

    #[test]
    fn karhunen_loeve_properties() {
        let (a, b) = karhunen_loeve(300, KlParams::default()).unwrap();
        let total: f64 = (0..300).map(|i| b.get(i, i)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(a.max_asymmetry(), 0.0);
        assert!((0..300).all(|i| a.get(i, i) == 1.0));
        let s = reference_solve(&a, &b).unwrap();
        let v = s.max_vector.as_slice();
        assert!(v.iter().all(|&x| x > 0.0) || v.iter().all(|&x| x < 0.0));
    }

    #[test]
    fn spec_validation() {
        assert!(ProblemSpec::new(ProblemFamily::IllConditioned, 10, 0).generate().is_err());
        assert!(ProblemSpec::new(ProblemFamily::IllConditioned, 10, 0).with_q(2.0).generate().is_ok());
        assert!(ProblemSpec::new(ProblemFamily::KarhunenLoeve, 2, 0).generate().is_err());
        assert_eq!(ProblemFamily::parse("kl").unwrap(), ProblemFamily::KarhunenLoeve);
        assert!(ProblemFamily::parse("nope").is_err());
    }
}
