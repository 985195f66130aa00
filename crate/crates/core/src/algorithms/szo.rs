use super::runner::{Recorder, RunClock, StepInfo};
use super::step_size::optimal_step_size;
use super::{SolverConfig, StopReason};
use crate::error::{Error, Result};
use crate::linalg::geometry::{project_in_place, retract_parts};
use crate::linalg::{axpy, dot, norm, scale, OperatorPair, UnitBVector};
use crate::sampling::{sample_initial, sample_tangent_with_normal, RngStream};
use crate::trace::{Monitor, RunTrace};

const NULL_AGGREGATE: f64 = 1e-150;

/// Current iterate together with the scalars of the step that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    v: UnitBVector,
    k: usize,
    a: f64,
    last_b: Option<f64>,
    last_c: Option<f64>,
    last_d: Option<f64>,
    last_tau: Option<f64>,
    last_direction: Option<Vec<f64>>,
    last_aggregate_scale: Option<f64>,
    av: Vec<f64>,
    bv: Vec<f64>,
}

impl IterateState {
    /// Starts at `v` (one application each of A and B).
    pub fn new(pair: &OperatorPair, v: UnitBVector) -> Result<Self> {
        pair.check_len(v.as_slice())?;
        let av = pair.apply_a(v.as_slice());
        let bv = pair.apply_b(v.as_slice());
        let a = dot(v.as_slice(), &av);
        Ok(Self {
            v,
            k: 0,
            a,
            last_b: None,
            last_c: None,
            last_d: None,
            last_tau: None,
            last_direction: None,
            last_aggregate_scale: None,
            av,
            bv,
        })
    }

    pub fn v(&self) -> &UnitBVector {
        &self.v
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `<v, Av>`, equal to the quotient since `‖v‖_B = 1`.
    pub fn a(&self) -> f64 {
        self.a
    }

    /// `b` of the most recent step (of the step attempt, for exact termination).
    pub fn last_b(&self) -> Option<f64> {
        self.last_b
    }

    pub fn last_c(&self) -> Option<f64> {
        self.last_c
    }

    pub fn last_d(&self) -> Option<f64> {
        self.last_d
    }

    pub fn last_tau(&self) -> Option<f64> {
        self.last_tau
    }

    /// Unit search direction `x` of the most recent step.
    pub fn last_direction(&self) -> Option<&[f64]> {
        self.last_direction.as_deref()
    }

    /// `s` with `x̄ = s·x` for the unnormalized aggregate `x̄ = (1/m) Σ b_i x_i`;
    /// for a single sample `x̄ = b x`.
    pub fn last_aggregate_scale(&self) -> Option<f64> {
        self.last_aggregate_scale
    }

    pub(super) fn at_iteration(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn into_v(self) -> UnitBVector {
        self.v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopSignal {
    Continue,
    ExactTermination,
}

/// One iteration with `m` sampled directions.
///
/// For `m = 1` the direction is a uniform unit tangent. For `m > 1` the
/// directions are combined as `x̄ = (1/m) Σ b_i x_i` and the step runs along
/// `x̄ / ‖x̄‖` with `b` recomputed for that direction.
pub fn szo_step(pair: &OperatorPair, state: &IterateState, rng: &mut RngStream, m: usize) -> Result<(IterateState, StopSignal)> {
    if m == 0 {
        return Err(Error::InvalidConfig("m must be at least 1".into()));
    }
    if m == 1 {
        let x = sample_tangent_with_normal(&state.bv, rng)?.into_vec();
        return step(pair, state, x, None);
    }
    for _ in 0..2 {
        let (x, s) = aggregate_direction(pair, state, rng, m)?;
        if let Some(x) = x {
            return step(pair, state, x, Some(s));
        }
    }
    let mut next = state.clone();
    next.last_b = Some(0.0);
    next.last_tau = None;
    Ok((next, StopSignal::ExactTermination))
}

/// Returns the normalized aggregate direction (or `None` if numerically null)
/// and `‖x̄‖`.
fn aggregate_direction(pair: &OperatorPair, state: &IterateState, rng: &mut RngStream, m: usize) -> Result<(Option<Vec<f64>>, f64)> {
    let d = pair.dim();
    let v = state.v.as_slice();
    let mut xs = Vec::with_capacity(d * m);
    for _ in 0..m {
        xs.extend(sample_tangent_with_normal(&state.bv, rng)?.into_vec());
    }
    let mut axs = vec![0.0; d * m];
    pair.apply_a_many_into(&xs, m, &mut axs);
    let mut agg = vec![0.0; d];
    for (x, ax) in xs.chunks_exact(d).zip(axs.chunks_exact(d)) {
        let b_i = dot(x, &state.av) + dot(v, ax);
        axpy(b_i, x, &mut agg);
    }
    scale(1.0 / m as f64, &mut agg);
    let agg_norm = norm(&agg);
    if !(agg_norm >= NULL_AGGREGATE) {
        return Ok((None, 0.0));
    }
    project_in_place(&state.bv, norm(&state.bv), &mut agg);
    let n = norm(&agg);
    if !(n >= NULL_AGGREGATE) {
        return Ok((None, 0.0));
    }
    scale(1.0 / n, &mut agg);
    Ok((Some(agg), agg_norm))
}

/// One iteration along a caller-supplied unit tangent direction `x`.
pub fn szo_step_along(pair: &OperatorPair, state: &IterateState, x: &[f64]) -> Result<(IterateState, StopSignal)> {
    pair.check_len(x)?;
    step(pair, state, x.to_vec(), None)
}

fn step(pair: &OperatorPair, state: &IterateState, x: Vec<f64>, aggregate_norm: Option<f64>) -> Result<(IterateState, StopSignal)> {
    let v = state.v.as_slice();
    let ax = pair.apply_a(&x);
    let b = dot(&x, &state.av) + dot(v, &ax);
    if b == 0.0 {
        let mut next = state.clone();
        next.last_b = Some(0.0);
        next.last_c = None;
        next.last_d = None;
        next.last_tau = None;
        next.last_direction = Some(x);
        next.last_aggregate_scale = Some(aggregate_norm.unwrap_or(0.0));
        return Ok((next, StopSignal::ExactTermination));
    }
    let c = dot(&x, &ax);
    let bx = pair.apply_b(&x);
    let d = dot(&x, &bx);
    let tau = optimal_step_size(state.a, b, c, d)?;

    let mut w = v.to_vec();
    axpy(tau, &x, &mut w);
    let bw = pair.apply_b(&w);
    let (v_next, bv_next) = retract_parts(w, bw)?;
    let av_next = pair.apply_a(v_next.as_slice());
    let a_next = dot(v_next.as_slice(), &av_next);

    let next = IterateState {
        v: v_next,
        k: state.k + 1,
        a: a_next,
        last_b: Some(b),
        last_c: Some(c),
        last_d: Some(d),
        last_tau: Some(tau),
        last_direction: Some(x),
        last_aggregate_scale: Some(aggregate_norm.unwrap_or(b)),
        av: av_next,
        bv: bv_next,
    };
    Ok((next, StopSignal::Continue))
}

/// Draws `v⁰` from `rng` and runs [`szo_run_from`].
pub fn szo_run(
    pair: &OperatorPair,
    cfg: &SolverConfig,
    rng: &mut RngStream,
    monitor: &mut dyn Monitor,
) -> Result<(IterateState, RunTrace, StopReason)> {
    let v0 = sample_initial(pair, rng)?;
    szo_run_from(pair, cfg, v0, rng, monitor)
}

/// Iterates [`szo_step`] until a stopping rule fires.
pub fn szo_run_from(
    pair: &OperatorPair,
    cfg: &SolverConfig,
    v0: UnitBVector,
    rng: &mut RngStream,
    monitor: &mut dyn Monitor,
) -> Result<(IterateState, RunTrace, StopReason)> {
    cfg.validate()?;
    let mut clock = RunClock::start();
    let mut state = IterateState::new(pair, v0)?;
    clock.pause();
    let mut rec = Recorder::new(cfg, monitor);

    let reason = loop {
        if let Some(reason) = rec.pre_step_stop(state.k, state.a, &clock) {
            break reason;
        }
        clock.resume();
        let (next, signal) = szo_step(pair, &state, rng, cfg.m)?;
        clock.pause();
        if signal == StopSignal::ExactTermination {
            rec.record(state.k, clock.elapsed(), state.v.as_slice(), state.a, StepInfo { abs_b: Some(0.0), ..Default::default() }, true);
            return Ok((next, rec.finish(), StopReason::ExactTermination));
        }
        let b = next.last_b.unwrap_or(0.0);
        rec.record(state.k, clock.elapsed_before_last_step(), state.v.as_slice(), state.a, StepInfo { abs_b: Some(b.abs()), tau: next.last_tau, grad_norm: None }, false);
        state = next;
        if rec.push_window(b * b) {
            break StopReason::BWindowBelowTol;
        }
    };
    rec.record(state.k, clock.elapsed(), state.v.as_slice(), state.a, StepInfo::default(), true);
    Ok((state, rec.finish(), reason))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{rayleigh, CountingOperator, LinearOperator, Matrix};
    use crate::trace::{NoMonitor, ReferenceMonitor};
    use std::sync::Arc;

    fn fig1_pair() -> OperatorPair {
        let a = Matrix::from_rows(&[&[3.0, 1.0], &[1.0, 2.0]]);
        OperatorPair::from_dense(&a, &Matrix::identity(2)).unwrap()
    }

    fn random_pair(d: usize, seed: u64) -> (Matrix, Matrix, OperatorPair) {
        let mut r = RngStream::new(seed, 99);
        let a = Matrix::new(d, d, r.normal_vec(d * d)).unwrap();
        let c = Matrix::new(d, d, r.normal_vec(d * d)).unwrap();
        let b = c.gram().add(&Matrix::identity(d)).unwrap();
        let p = OperatorPair::from_dense(&a, &b).unwrap();
        (a, b, p)
    }

    #[test]
    fn reaches_two_by_two_maximum_in_one_step() {
        let p = fig1_pair();
        let s0 = IterateState::new(&p, UnitBVector::new_checked(&p, vec![1.0, 0.0]).unwrap()).unwrap();
        let (s1, sig) = szo_step_along(&p, &s0, &[0.0, 1.0]).unwrap();
        assert_eq!(sig, StopSignal::Continue);
        let tau = (5f64.sqrt() - 1.0) / 2.0;
        assert!((s1.last_tau().unwrap() - tau).abs() < 1e-15);
        let n = (1.0 + tau * tau).sqrt();
        assert!((s1.v().as_slice()[0] - 1.0 / n).abs() < 1e-15);
        assert!((s1.v().as_slice()[1] - tau / n).abs() < 1e-15);
        assert!((s1.a() - (5.0 + 5f64.sqrt()) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn eigenvector_start_terminates_exactly() {
        let a = Matrix::from_diag(&[2.0, 1.0]);
        let p = OperatorPair::from_dense(&a, &Matrix::identity(2)).unwrap();
        let s0 = IterateState::new(&p, UnitBVector::new_checked(&p, vec![1.0, 0.0]).unwrap()).unwrap();
        let (s1, sig) = szo_step(&p, &s0, &mut RngStream::new(1, 0), 1).unwrap();
        assert_eq!(sig, StopSignal::ExactTermination);
        assert_eq!(s1.last_b(), Some(0.0));
        assert_eq!(s1.v(), s0.v());

        let (_, trace, reason) = szo_run_from(&p, &SolverConfig::default(), s0.v().clone(), &mut RngStream::new(1, 0), &mut NoMonitor).unwrap();
        assert_eq!(reason, StopReason::ExactTermination);
        assert_eq!(trace.len(), 1);
        assert_eq!(trace.records[0].abs_b, Some(0.0));
    }

    #[test]
    fn skew_symmetric_a_terminates_immediately() {
        let a = Matrix::from_rows(&[&[0.0, 1.0, 0.0], &[-1.0, 0.0, 2.0], &[0.0, -2.0, 0.0]]);
        let p = OperatorPair::from_dense(&a, &Matrix::identity(3)).unwrap();
        for m in [1, 4] {
            let (_, _, reason) = szo_run(&p, &SolverConfig::with_m(m, 100), &mut RngStream::new(2, 0), &mut NoMonitor).unwrap();
            assert_eq!(reason, StopReason::ExactTermination);
        }
    }

    #[test]
    fn step_identity_and_ascent() {
        let (_, _, p) = random_pair(12, 4);
        let mut rng = RngStream::new(4, 1);
        for m in [1, 3] {
            let mut s = IterateState::new(&p, sample_initial(&p, &mut rng).unwrap()).unwrap();
            for _ in 0..200 {
                let (n, sig) = szo_step(&p, &s, &mut rng, m).unwrap();
                assert_eq!(sig, StopSignal::Continue);
                let gain = n.a() - s.a();
                let predicted = 0.5 * n.last_tau().unwrap() * n.last_b().unwrap();
                assert!(predicted > 0.0);
                assert!((gain - predicted).abs() <= 1e-10 * s.a().abs().max(1.0));
                assert!((n.a() - rayleigh(&p, n.v().as_slice()).unwrap()).abs() <= 1e-10 * n.a().abs().max(1e-300));
                assert!(n.last_d().unwrap() > 0.0);
                s = n;
            }
        }
    }

    #[test]
    fn forward_apply_counts() {
        let d = 6;
        let mut r = RngStream::new(8, 0);
        let a = Arc::new(CountingOperator::new(Matrix::new(d, d, r.normal_vec(d * d)).unwrap()));
        let b = Arc::new(CountingOperator::new(Matrix::from_diag(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0])));
        let p = OperatorPair::new(a.clone() as Arc<dyn LinearOperator>, b.clone() as Arc<dyn LinearOperator>).unwrap();
        let s = IterateState::new(&p, sample_initial(&p, &mut r).unwrap()).unwrap();
        for m in [1usize, 5, 20] {
            a.reset();
            b.reset();
            szo_step(&p, &s, &mut r, m).unwrap();
            let expected_a = if m == 1 { 2 } else { m + 2 };
            assert_eq!(a.count(), expected_a, "A-applies for m={m}");
            assert!(a.count() <= m + 2);
            assert_eq!(b.count(), 2, "B-applies for m={m}");
        }
    }

    #[test]
    fn run_is_deterministic_and_monotone() {
        let (_, _, p) = random_pair(8, 5);
        let cfg = SolverConfig::with_m(2, 300);
        let (s1, t1, r1) = szo_run(&p, &cfg, &mut RngStream::new(9, 3), &mut NoMonitor).unwrap();
        let (s2, t2, r2) = szo_run(&p, &cfg, &mut RngStream::new(9, 3), &mut NoMonitor).unwrap();
        assert_eq!(s1.v(), s2.v());
        assert_eq!(r1, r2);
        let strip = |t: &RunTrace| t.records.iter().map(|r| (r.k, r.a, r.abs_b, r.tau)).collect::<Vec<_>>();
        assert_eq!(strip(&t1), strip(&t2));
        assert!(t1.is_monotone(1e-12));
        assert_eq!(t1.records.first().unwrap().k, 0);
        assert_eq!(t1.last().unwrap().k, s1.k());
        assert_eq!(t1.last().unwrap().abs_b, None);
    }

    #[test]
    fn stopping_rules() {
        let p = fig1_pair();
        let max = (5.0 + 5f64.sqrt()) / 2.0;
        let mut rng = RngStream::new(3, 0);
        let v0 = UnitBVector::new_checked(&p, vec![0.0, 1.0]).unwrap();

        // In two dimensions the first step lands on the maximizer.
        let cfg = SolverConfig { target_rqe: Some(1e-12), ..SolverConfig::with_m(1, 100) };
        let (s, _, reason) = szo_run_from(&p, &cfg, v0.clone(), &mut rng, &mut ReferenceMonitor { max_value: max }).unwrap();
        assert!(matches!(reason, StopReason::TargetReached | StopReason::ExactTermination));
        assert!((s.a() - max).abs() < 1e-12);

        let cfg = SolverConfig { b_tol_sq: 1e-30, b_window: 5, ..SolverConfig::with_m(1, 10_000) };
        let (_, _, reason) = szo_run_from(&p, &cfg, v0.clone(), &mut rng, &mut NoMonitor).unwrap();
        assert!(matches!(reason, StopReason::BWindowBelowTol | StopReason::ExactTermination));

        let (_, trace, reason) = szo_run_from(&p, &SolverConfig { record_every: 3, ..SolverConfig::with_m(1, 10) }, v0.clone(), &mut rng, &mut NoMonitor).unwrap();
        if reason == StopReason::MaxIters {
            let ks: Vec<usize> = trace.records.iter().map(|r| r.k).collect();
            assert_eq!(ks, vec![0, 3, 6, 9, 10]);
        }

        let (s, trace, reason) = szo_run_from(&p, &SolverConfig::with_m(1, 1), v0, &mut rng, &mut NoMonitor).unwrap();
        assert_eq!((reason, s.k(), trace.len()), (StopReason::MaxIters, 1, 2));
    }

    #[test]
    fn rejects_invalid_config() {
        let p = fig1_pair();
        let cfg = SolverConfig::with_m(0, 10);
        assert!(szo_run(&p, &cfg, &mut RngStream::new(0, 0), &mut NoMonitor).is_err());
    }
}
