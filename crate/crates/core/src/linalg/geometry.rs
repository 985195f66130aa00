use super::{axpy, dot, norm, scale, Matrix, OperatorPair};
use crate::error::{Error, Result};

/// Below this, `Bv` or `v + x` are treated as numerically zero.
pub(crate) const TINY: f64 = 1e-300;

/// A point of the B-sphere: `|‖v‖_B − 1| ≤ 1e-10`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitBVector(Vec<f64>);

impl UnitBVector {
    pub const TOLERANCE: f64 = 1e-10;

    /// Scales a nonzero vector onto the B-sphere.
    pub fn normalize(pair: &OperatorPair, v: Vec<f64>) -> Result<Self> {
        pair.check_len(&v)?;
        let nb = b_norm(pair, &v)?;
        if nb < TINY {
            return Err(Error::ZeroVector);
        }
        let mut v = v;
        scale(1.0 / nb, &mut v);
        Ok(Self(v))
    }

    /// Accepts `v` as-is after checking the unit B-norm invariant.
    pub fn new_checked(pair: &OperatorPair, v: Vec<f64>) -> Result<Self> {
        pair.check_len(&v)?;
        let nb = b_norm(pair, &v)?;
        if (nb - 1.0).abs() > Self::TOLERANCE {
            return Err(Error::InvalidConfig(format!("vector has B-norm {nb}, expected 1")));
        }
        Ok(Self(v))
    }

    pub(crate) fn from_raw(v: Vec<f64>) -> Self {
        Self(v)
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl AsRef<[f64]> for UnitBVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Generalized Rayleigh quotient `<v, Av> / <v, Bv>`.
pub fn rayleigh(pair: &OperatorPair, v: &[f64]) -> Result<f64> {
    pair.check_len(v)?;
    if norm(v) == 0.0 {
        return Err(Error::ZeroVector);
    }
    let num = dot(v, &pair.apply_a(v));
    let den = dot(v, &pair.apply_b(v));
    if !(den > 0.0) {
        return Err(Error::NonPositiveDenominator(den));
    }
    Ok(num / den)
}

/// `sqrt(<v, Bv>)`; tiny negative values from rounding clamp to zero.
pub fn b_norm(pair: &OperatorPair, v: &[f64]) -> Result<f64> {
    pair.check_len(v)?;
    b_norm_from_image(v, &pair.apply_b(v))
}

pub(crate) fn b_norm_from_image(v: &[f64], bv: &[f64]) -> Result<f64> {
    let q = dot(v, bv);
    if q < -1e-14 * dot(v, v) {
        return Err(Error::NonPositiveDenominator(q));
    }
    Ok(q.max(0.0).sqrt())
}

/// Euclidean orthogonal projection onto the tangent space `{x : <x, Bv> = 0}`.
pub fn project_tangent(pair: &OperatorPair, v: &UnitBVector, y: &[f64]) -> Result<Vec<f64>> {
    pair.check_len(y)?;
    let bv = pair.apply_b(v.as_slice());
    project_with_normal(&bv, y)
}

/// Projection given the (unnormalized) normal `Bv`.
pub(crate) fn project_with_normal(bv: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let nbv = norm(bv);
    if nbv < TINY {
        return Err(Error::DegenerateNormal);
    }
    let mut out = y.to_vec();
    project_in_place(bv, nbv, &mut out);
    Ok(out)
}

#[inline]
pub(crate) fn project_in_place(bv: &[f64], bv_norm: f64, y: &mut [f64]) {
    let coef = dot(y, bv) / (bv_norm * bv_norm);
    axpy(-coef, bv, y);
}

/// `R_v(x) = (v + x) / ‖v + x‖_B`.
pub fn retract(pair: &OperatorPair, v: &UnitBVector, x: &[f64]) -> Result<UnitBVector> {
    pair.check_len(x)?;
    let mut w = v.as_slice().to_vec();
    axpy(1.0, x, &mut w);
    let bw = pair.apply_b(&w);
    Ok(retract_parts(w, bw)?.0)
}

/// Normalizes `w = v + x` given `Bw`; returns the new point and its image under B.
pub(crate) fn retract_parts(mut w: Vec<f64>, mut bw: Vec<f64>) -> Result<(UnitBVector, Vec<f64>)> {
    let nb = b_norm_from_image(&w, &bw)?;
    if nb < TINY {
        return Err(Error::ZeroVector);
    }
    let inv = 1.0 / nb;
    scale(inv, &mut w);
    scale(inv, &mut bw);
    Ok((UnitBVector(w), bw))
}

/// `b = <x, Av> + <v, Ax>` with two forward applications of A.
pub fn b_coefficient(pair: &OperatorPair, v: &UnitBVector, x: &[f64]) -> Result<f64> {
    pair.check_len(x)?;
    let av = pair.apply_a(v.as_slice());
    let ax = pair.apply_a(x);
    Ok(dot(x, &av) + dot(v.as_slice(), &ax))
}

/// `A^H v = (Av + A^T v) / 2`, dense only.
pub(crate) fn sym_apply(a: &Matrix, v: &[f64]) -> Vec<f64> {
    let mut h = a.matvec(v);
    let at = a.matvec_transpose(v);
    for (hi, ti) in h.iter_mut().zip(&at) {
        *hi = 0.5 * (*hi + ti);
    }
    h
}

/// Riemannian gradient `2 (A^H v − (<Bv, A^H v> / ‖Bv‖²) Bv)` of `v ↦ <v, Av>`.
///
/// Needs `A^T`, so it takes dense matrices and is reserved for baselines
/// and diagnostics.
pub fn riemannian_grad(a: &Matrix, b: &Matrix, v: &[f64]) -> Result<Vec<f64>> {
    a.require_square()?;
    b.require_square()?;
    if v.len() != a.rows() || b.rows() != a.rows() {
        return Err(Error::DimensionMismatch { expected: a.rows(), got: v.len() });
    }
    let h = sym_apply(a, v);
    let bv = b.matvec(v);
    let mut g = project_with_normal(&bv, &h)?;
    scale(2.0, &mut g);
    Ok(g)
}
