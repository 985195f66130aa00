use crate::error::{Error, Result};

/// Exact maximizer of `τ ↦ (a + τb + τ²c) / (1 + τ²d)`, the quotient along
/// the line `v + τx` for a unit-B point `v` and unit tangent `x`.
///
/// With `e = c − ad` the maximizer is
/// `sign(b) (e / (|b|d) + sqrt(e² / (bd)² + 1/d))`. Near convergence `b → 0`
/// while `e < 0`, where that expression cancels catastrophically, so the
/// negative branch uses the conjugate form `|b| / (hypot(e, |b|√d) − e)`.
pub fn optimal_step_size(a: f64, b: f64, c: f64, d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::NonPositiveD(d));
    }
    if b == 0.0 {
        return Err(Error::ZeroB);
    }
    let e = c - a * d;
    let abs_b = b.abs();
    let r = e.hypot(abs_b * d.sqrt());
    let magnitude = if e >= 0.0 { (e + r) / (abs_b * d) } else { abs_b / (r - e) };
    Ok(magnitude.copysign(b))
}

/// Scaled residual of the stationarity condition `b + 2τ(c − ad) − τ²bd = 0`.
pub fn stationarity_residual(a: f64, b: f64, c: f64, d: f64, tau: f64) -> f64 {
    let e = c - a * d;
    let num = b + 2.0 * tau * e - tau * tau * b * d;
    let scale = b.abs() + e.abs() + b.abs() * d * tau * tau;
    if scale == 0.0 {
        num.abs()
    } else {
        num.abs() / scale
    }
}
