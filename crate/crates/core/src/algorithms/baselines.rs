use super::runner::{Recorder, RunClock, StepInfo};
use super::szo::IterateState;
use super::{SolverConfig, StopReason};
use crate::error::{Error, Result};
use crate::linalg::geometry::{project_in_place, retract_parts, TINY};
use crate::linalg::{axpy, dot, norm, riemannian_grad, Matrix, OperatorPair, UnitBVector};
use crate::oracle::operator_norms;
use crate::sampling::{sample_initial, RngStream};
use crate::trace::{Monitor, RunTrace};

const ARMIJO_SLOPE: f64 = 1e-4;
const ARMIJO_CONTRACTION: f64 = 0.5;
const ARMIJO_MAX_BACKTRACKS: usize = 30;
const MU_0: f64 = 1e-4;

/// Step-size rule of zeroth-order Riemannian gradient ascent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ZorgaVariant {
    /// `τ = 1/L` with `L = ‖A‖(1 + κ(B))`.
    ConstantStep,
    /// Backtracking from `1/L` until `f` increases by at least `1e-4 τ ‖ĝ‖²`.
    Armijo,
}

impl ZorgaVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            ZorgaVariant::ConstantStep => "constant",
            ZorgaVariant::Armijo => "armijo",
        }
    }
}

/// `f(v + y)` for the Rayleigh quotient, given `Av` and `Bv`.
fn quotient_at_offset(pair: &OperatorPair, v: &[f64], av: &[f64], bv: &[f64], y: &[f64]) -> Result<f64> {
    let ay = pair.apply_a(y);
    let by = pair.apply_b(y);
    let num = dot(v, av) + dot(v, &ay) + dot(y, av) + dot(y, &ay);
    let den = dot(v, bv) + dot(v, &by) + dot(y, bv) + dot(y, &by);
    if !(den > 0.0) {
        return Err(Error::NonPositiveDenominator(den));
    }
    Ok(num / den)
}

/// m-sample zeroth-order estimate `(1/m) Σ [f(R_v(μ P_v x_i)) − f(v)]/μ · x_i`
/// with `x_i ~ N(0, I)`.
pub fn zo_gradient_estimate(pair: &OperatorPair, v: &UnitBVector, mu: f64, m: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
    pair.check_len(v.as_slice())?;
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::InvalidConfig(format!("mu must be positive, got {mu}")));
    }
    if m == 0 {
        return Err(Error::InvalidConfig("m must be at least 1".into()));
    }
    let vs = v.as_slice();
    let av = pair.apply_a(vs);
    let bv = pair.apply_b(vs);
    Ok(estimate_with(pair, vs, &av, &bv, mu, m, rng)?.0)
}

/// Single-sample estimate along a fixed direction `x`: `[f(R_v(μ P_v x)) − f(v)]/μ · x`.
pub fn zo_gradient_estimate_along(pair: &OperatorPair, v: &UnitBVector, mu: f64, x: &[f64]) -> Result<Vec<f64>> {
    pair.check_len(x)?;
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::InvalidConfig(format!("mu must be positive, got {mu}")));
    }
    let vs = v.as_slice();
    let av = pair.apply_a(vs);
    let bv = pair.apply_b(vs);
    let f0 = dot(vs, &av) / dot(vs, &bv);
    let coef = difference_quotient(pair, vs, &av, &bv, f0, mu, x)?;
    Ok(x.iter().map(|xi| coef * xi).collect())
}

fn difference_quotient(pair: &OperatorPair, v: &[f64], av: &[f64], bv: &[f64], f0: f64, mu: f64, x: &[f64]) -> Result<f64> {
    let bv_norm = norm(bv);
    if bv_norm < TINY {
        return Err(Error::DegenerateNormal);
    }
    let mut y: Vec<f64> = x.iter().map(|xi| mu * xi).collect();
    project_in_place(bv, bv_norm, &mut y);
    Ok((quotient_at_offset(pair, v, av, bv, &y)? - f0) / mu)
}

/// Returns the estimate and `f(v)`.
fn estimate_with(pair: &OperatorPair, v: &[f64], av: &[f64], bv: &[f64], mu: f64, m: usize, rng: &mut RngStream) -> Result<(Vec<f64>, f64)> {
    let d = v.len();
    let f0 = dot(v, av) / dot(v, bv);
    let mut g = vec![0.0; d];
    let mut x = vec![0.0; d];
    for _ in 0..m {
        rng.fill_normal(&mut x);
        let coef = difference_quotient(pair, v, av, bv, f0, mu, &x)?;
        axpy(coef / m as f64, &x, &mut g);
    }
    Ok((g, f0))
}

fn step_to(pair: &OperatorPair, v: &[f64], tau: f64, dir: &[f64]) -> Result<UnitBVector> {
    let mut w = v.to_vec();
    axpy(tau, dir, &mut w);
    let bw = pair.apply_b(&w);
    Ok(retract_parts(w, bw)?.0)
}

/// Draws `v⁰` from `rng` and runs [`rga_run_from`].
pub fn rga_run(a: &Matrix, b: &Matrix, cfg: &SolverConfig, rng: &mut RngStream, monitor: &mut dyn Monitor) -> Result<(IterateState, RunTrace, StopReason)> {
    let pair = OperatorPair::from_dense(a, b)?;
    let v0 = sample_initial(&pair, rng)?;
    rga_run_from(a, b, cfg, v0, monitor)
}

/// Riemannian gradient ascent with `τ = 1/L`, `L = 2‖A^H‖(1 + κ(B))`.
///
/// Stops on the window mean of `‖grad f‖²` instead of `b²`.
pub fn rga_run_from(a: &Matrix, b: &Matrix, cfg: &SolverConfig, v0: UnitBVector, monitor: &mut dyn Monitor) -> Result<(IterateState, RunTrace, StopReason)> {
    cfg.validate()?;
    let pair = OperatorPair::from_dense(a, b)?;
    let norms = operator_norms(a, b)?;
    let lipschitz = 2.0 * norms.a_sym * (1.0 + norms.kappa);
    let tau = if lipschitz > 0.0 { 1.0 / lipschitz } else { 0.0 };

    let mut clock = RunClock::start();
    let mut state = IterateState::new(&pair, v0)?;
    clock.pause();
    let mut rec = Recorder::new(cfg, monitor);
    let reason = loop {
        if let Some(reason) = rec.pre_step_stop(state.k(), state.a(), &clock) {
            break reason;
        }
        clock.resume();
        let g = riemannian_grad(a, b, state.v().as_slice())?;
        let v_next = step_to(&pair, state.v().as_slice(), tau, &g)?;
        let next = IterateState::new(&pair, v_next)?.at_iteration(state.k() + 1);
        clock.pause();
        let g_sq = dot(&g, &g);
        let info = StepInfo { abs_b: None, tau: Some(tau), grad_norm: Some(g_sq.sqrt()) };
        rec.record(state.k(), clock.elapsed_before_last_step(), state.v().as_slice(), state.a(), info, false);
        state = next;
        if rec.push_window(g_sq) {
            break StopReason::BWindowBelowTol;
        }
    };
    let grad_norm = Some(norm(&riemannian_grad(a, b, state.v().as_slice())?));
    rec.record(state.k(), clock.elapsed(), state.v().as_slice(), state.a(), StepInfo { grad_norm, ..Default::default() }, true);
    Ok((state, rec.finish(), reason))
}

/// Draws `v⁰` from `rng` and runs [`zorga_run_from`].
pub fn zorga_run(
    a: &Matrix,
    b: &Matrix,
    cfg: &SolverConfig,
    variant: ZorgaVariant,
    rng: &mut RngStream,
    monitor: &mut dyn Monitor,
) -> Result<(IterateState, RunTrace, StopReason)> {
    let pair = OperatorPair::from_dense(a, b)?;
    let v0 = sample_initial(&pair, rng)?;
    zorga_run_from(a, b, cfg, variant, v0, rng, monitor)
}

/// Zeroth-order Riemannian gradient ascent with `cfg.m` samples per step and
/// smoothing `μ_k = 1e-4/(k+1)`.
///
/// The estimate is projected onto the tangent space before the retraction.
/// A failed Armijo search leaves the iterate in place. Stops on the window
/// mean of `‖ĝ‖²`.
pub fn zorga_run_from(
    a: &Matrix,
    b: &Matrix,
    cfg: &SolverConfig,
    variant: ZorgaVariant,
    v0: UnitBVector,
    rng: &mut RngStream,
    monitor: &mut dyn Monitor,
) -> Result<(IterateState, RunTrace, StopReason)> {
    cfg.validate()?;
    let pair = OperatorPair::from_dense(a, b)?;
    let norms = operator_norms(a, b)?;
    let lipschitz = norms.a * (1.0 + norms.kappa);
    let tau0 = if lipschitz > 0.0 { 1.0 / lipschitz } else { 0.0 };

    let mut clock = RunClock::start();
    let mut state = IterateState::new(&pair, v0)?;
    clock.pause();
    let mut rec = Recorder::new(cfg, monitor);
    let reason = loop {
        if let Some(reason) = rec.pre_step_stop(state.k(), state.a(), &clock) {
            break reason;
        }
        clock.resume();
        let v = state.v().as_slice();
        let av = pair.apply_a(v);
        let bv = pair.apply_b(v);
        let mu = MU_0 / (state.k() + 1) as f64;
        let (mut g, f0) = estimate_with(&pair, v, &av, &bv, mu, cfg.m, rng)?;
        project_in_place(&bv, norm(&bv), &mut g);
        let g_sq = dot(&g, &g);
        let (v_next, tau) = match variant {
            ZorgaVariant::ConstantStep => (step_to(&pair, v, tau0, &g)?, tau0),
            ZorgaVariant::Armijo => armijo(&pair, state.v(), f0, &g, g_sq, tau0)?,
        };
        let next = IterateState::new(&pair, v_next)?.at_iteration(state.k() + 1);
        clock.pause();
        let info = StepInfo { abs_b: None, tau: Some(tau), grad_norm: None };
        rec.record(state.k(), clock.elapsed_before_last_step(), v, state.a(), info, false);
        state = next;
        if rec.push_window(g_sq) {
            break StopReason::BWindowBelowTol;
        }
    };
    rec.record(state.k(), clock.elapsed(), state.v().as_slice(), state.a(), StepInfo::default(), true);
    Ok((state, rec.finish(), reason))
}

/// Returns the accepted iterate and step, or `(v, 0)` if no step qualifies.
fn armijo(pair: &OperatorPair, v: &UnitBVector, f0: f64, g: &[f64], g_sq: f64, tau0: f64) -> Result<(UnitBVector, f64)> {
    let mut tau = tau0;
    if tau > 0.0 && g_sq > 0.0 {
        for _ in 0..=ARMIJO_MAX_BACKTRACKS {
            let cand = step_to(pair, v.as_slice(), tau, g)?;
            let c = cand.as_slice();
            let f = dot(c, &pair.apply_a(c)) / dot(c, &pair.apply_b(c));
            if f >= f0 + ARMIJO_SLOPE * tau * g_sq {
                return Ok((cand, tau));
            }
            tau *= ARMIJO_CONTRACTION;
        }
    }
    Ok((v.clone(), 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rayleigh;
    use crate::trace::NoMonitor;

    fn random_dense(d: usize, seed: u64) -> (Matrix, Matrix) {
        let mut r = RngStream::new(seed, 77);
        let a = Matrix::new(d, d, r.normal_vec(d * d)).unwrap();
        let c = Matrix::new(d, d, r.normal_vec(d * d)).unwrap();
        (a, c.gram().add(&Matrix::identity(d)).unwrap())
    }

    #[test]
    fn zero_matrix_gives_zero_estimate() {
        let a = Matrix::zeros(4, 4);
        let b = Matrix::identity(4);
        let p = OperatorPair::from_dense(&a, &b).unwrap();
        let v = sample_initial(&p, &mut RngStream::new(1, 0)).unwrap();
        let g = zo_gradient_estimate(&p, &v, 1e-3, 5, &mut RngStream::new(1, 1)).unwrap();
        assert!(g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn estimate_along_optimal_step_is_half_b_times_direction() {
        let (a, b) = random_dense(5, 3);
        let p = OperatorPair::from_dense(&a, &b).unwrap();
        let mut rng = RngStream::new(3, 1);
        let s = IterateState::new(&p, sample_initial(&p, &mut rng).unwrap()).unwrap();
        let (next, _) = super::super::szo_step(&p, &s, &mut rng, 1).unwrap();
        let x = next.last_direction().unwrap();
        let (bk, tau) = (next.last_b().unwrap(), next.last_tau().unwrap());
        let g = zo_gradient_estimate_along(&p, s.v(), tau.abs(), x).unwrap();
        // Along -x with μ = |τ| the same point is reached when τ < 0.
        let g = if tau > 0.0 { g } else { zo_gradient_estimate_along(&p, s.v(), -tau, &x.iter().map(|t| -t).collect::<Vec<_>>()).unwrap() };
        for (gi, xi) in g.iter().zip(x) {
            assert!((gi - 0.5 * bk * xi).abs() <= 1e-8 * (0.5 * bk * xi).abs().max(1e-12), "{gi} vs {}", 0.5 * bk * xi);
        }
    }

    #[test]
    fn estimate_points_along_gradient() {
        let (a, b) = random_dense(5, 4);
        let p = OperatorPair::from_dense(&a, &b).unwrap();
        let v = sample_initial(&p, &mut RngStream::new(4, 0)).unwrap();
        let g = zo_gradient_estimate(&p, &v, 1e-6, 100_000, &mut RngStream::new(4, 1)).unwrap();
        let grad = riemannian_grad(&a, &b, v.as_slice()).unwrap();
        let cos = dot(&g, &grad) / (norm(&g) * norm(&grad));
        assert!(cos >= 0.9, "cosine {cos}");
    }

    #[test]
    fn rga_is_stationary_for_identity_pair() {
        let i = Matrix::identity(5);
        let pair = OperatorPair::from_dense(&i, &i).unwrap();
        let v0 = sample_initial(&pair, &mut RngStream::new(2, 0)).unwrap();
        let (s, trace, _) = rga_run_from(&i, &i, &SolverConfig::with_m(1, 1), v0.clone(), &mut NoMonitor).unwrap();
        for (x, y) in s.v().as_slice().iter().zip(v0.as_slice()) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!(trace.records[0].grad_norm.unwrap() < 1e-15);
    }

    #[test]
    fn rga_ascends_on_two_by_two() {
        let a = Matrix::from_rows(&[&[3.0, 1.0], &[1.0, 2.0]]);
        let i = Matrix::identity(2);
        let pair = OperatorPair::from_dense(&a, &i).unwrap();
        let v0 = UnitBVector::new_checked(&pair, vec![0.0, 1.0]).unwrap();
        let cfg = SolverConfig { b_tol_sq: 0.0, ..SolverConfig::with_m(1, 30) };
        let (_, trace, _) = rga_run_from(&a, &i, &cfg, v0, &mut NoMonitor).unwrap();
        assert_eq!(trace.len(), 31);
        for w in trace.records.windows(2) {
            assert!(w[1].a > w[0].a, "{} then {}", w[0].a, w[1].a);
        }
    }

    #[test]
    fn zorga_stationary_for_zero_matrix() {
        let a = Matrix::zeros(4, 4);
        let b = Matrix::from_diag(&[1.0, 2.0, 3.0, 4.0]);
        for variant in [ZorgaVariant::ConstantStep, ZorgaVariant::Armijo] {
            let pair = OperatorPair::from_dense(&a, &b).unwrap();
            let v0 = sample_initial(&pair, &mut RngStream::new(6, 0)).unwrap();
            let (s, _, _) = zorga_run_from(&a, &b, &SolverConfig::with_m(3, 20), variant, v0.clone(), &mut RngStream::new(6, 1), &mut NoMonitor).unwrap();
            assert_eq!(s.v(), &v0);
        }
    }

    #[test]
    fn armijo_never_decreases() {
        let (a, b) = random_dense(10, 8);
        let pair = OperatorPair::from_dense(&a, &b).unwrap();
        let v0 = sample_initial(&pair, &mut RngStream::new(8, 0)).unwrap();
        let cfg = SolverConfig::with_m(4, 300);
        let (s, trace, _) = zorga_run_from(&a, &b, &cfg, ZorgaVariant::Armijo, v0, &mut RngStream::new(8, 1), &mut NoMonitor).unwrap();
        assert!(trace.is_monotone(0.0));
        assert!((s.a() - rayleigh(&pair, s.v().as_slice()).unwrap()).abs() < 1e-10 * s.a().abs().max(1.0));
    }

    #[test]
    fn invalid_mu_rejected() {
        let i = Matrix::identity(3);
        let p = OperatorPair::from_dense(&i, &i).unwrap();
        let v = sample_initial(&p, &mut RngStream::new(0, 0)).unwrap();
        assert!(zo_gradient_estimate(&p, &v, 0.0, 1, &mut RngStream::new(0, 1)).is_err());
        assert!(zo_gradient_estimate_along(&p, &v, -1.0, &[1.0, 0.0, 0.0]).is_err());
    }
}
