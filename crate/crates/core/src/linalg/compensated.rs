//! Double-double evaluation of quotient increments.
//!
//! `f(v + s) − f(v)` loses all relative accuracy in plain floating point
//! once the increment falls below `ε·|f(v)|`. Carrying a second word through
//! the quadratic forms keeps it accurate to roughly `ε²·|f(v)|`.

use super::Matrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    Dd { hi: s, lo: (a - (s - bb)) + (b - bb) }
}

fn two_prod(a: f64, b: f64) -> Dd {
    let p = a * b;
    Dd { hi: p, lo: a.mul_add(b, -p) }
}

impl Dd {
    const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    fn renorm(hi: f64, lo: f64) -> Dd {
        let s = hi + lo;
        Dd { hi: s, lo: lo - (s - hi) }
    }

    fn add(self, o: Dd) -> Dd {
        let s = two_sum(self.hi, o.hi);
        let t = two_sum(self.lo, o.lo);
        let s = Dd::renorm(s.hi, s.lo + t.hi);
        Dd::renorm(s.hi, s.lo + t.lo)
    }

    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    fn mul(self, o: Dd) -> Dd {
        let p = two_prod(self.hi, o.hi);
        Dd::renorm(p.hi, p.lo + (self.hi * o.lo + self.lo * o.hi))
    }

    fn mul_f64(self, x: f64) -> Dd {
        let p = two_prod(self.hi, x);
        Dd::renorm(p.hi, p.lo + self.lo * x)
    }
}

/// `wᵀ M w` with `w` given in double-double.
fn quadratic_form(m: &Matrix, w: &[Dd]) -> Dd {
    let mut total = Dd::ZERO;
    for (i, wi) in w.iter().enumerate() {
        let mut row = Dd::ZERO;
        for (mij, wj) in m.row(i).iter().zip(w) {
            row = row.add(wj.mul_f64(*mij));
        }
        total = total.add(row.mul(*wi));
    }
    total
}

/// `f(v + s) − f(v)` for `f(w) = ⟨w,Aw⟩/⟨w,Bw⟩`, with `v + s` formed exactly.
///
/// Since `f` is scale invariant this equals `f(R_v(s)) − f(v)` for the
/// retraction `R_v(s) = (v + s)/‖v + s‖_B`.
pub fn quotient_increment(a: &Matrix, b: &Matrix, v: &[f64], s: &[f64]) -> Result<f64> {
    a.require_square()?;
    b.require_square()?;
    let d = a.rows();
    if b.rows() != d || v.len() != d || s.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: v.len().min(s.len()).min(b.rows()) });
    }
    let base: Vec<Dd> = v.iter().map(|&x| Dd { hi: x, lo: 0.0 }).collect();
    let moved: Vec<Dd> = v.iter().zip(s).map(|(&x, &y)| two_sum(x, y)).collect();
    let (av, bv) = (quadratic_form(a, &base), quadratic_form(b, &base));
    let (aw, bw) = (quadratic_form(a, &moved), quadratic_form(b, &moved));
    if !(bv.hi > 0.0 && bw.hi > 0.0) {
        return Err(Error::NonPositiveDenominator(bv.hi.min(bw.hi)));
    }
    // (aw·bv − av·bw) / (bw·bv)
    let num = aw.mul(bv).add(av.mul(bw).neg());
    let den = bw.mul(bv);
    Ok((num.hi + num.lo) / (den.hi + den.lo))
}
