//! Bookkeeping shared by every solver loop: solver-only timing, the `b²`
//! window, target checks, and thinned recording.

use super::{SolverConfig, StopReason};
use crate::trace::{relative_error, Monitor, RunTrace, TraceRecord};
use std::collections::VecDeque;
use std::time::Instant;

/// Stopwatch that accumulates only while running.
pub(crate) struct RunClock {
    accumulated: f64,
    running_since: Option<Instant>,
    at_last_resume: f64,
}

impl RunClock {
    pub(crate) fn start() -> Self {
        Self { accumulated: 0.0, running_since: Some(Instant::now()), at_last_resume: 0.0 }
    }

    pub(crate) fn pause(&mut self) {
        if let Some(t) = self.running_since.take() {
            self.accumulated += t.elapsed().as_secs_f64();
        }
    }

    pub(crate) fn resume(&mut self) {
        if self.running_since.is_none() {
            self.at_last_resume = self.accumulated;
            self.running_since = Some(Instant::now());
        }
    }

    pub(crate) fn elapsed(&self) -> f64 {
        self.accumulated + self.running_since.map_or(0.0, |t| t.elapsed().as_secs_f64())
    }

    /// Solver time accumulated when the clock was last resumed.
    pub(crate) fn elapsed_before_last_step(&self) -> f64 {
        self.at_last_resume
    }
}

/// Solver-side quantities attached to a recorded iterate.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct StepInfo {
    pub(crate) abs_b: Option<f64>,
    pub(crate) tau: Option<f64>,
    pub(crate) grad_norm: Option<f64>,
}

pub(crate) struct Recorder<'a> {
    cfg: &'a SolverConfig,
    monitor: &'a mut dyn Monitor,
    trace: RunTrace,
    window: VecDeque<f64>,
    msqr: Option<f64>,
}

impl<'a> Recorder<'a> {
    pub(crate) fn new(cfg: &'a SolverConfig, monitor: &'a mut dyn Monitor) -> Self {
        Self { cfg, monitor, trace: RunTrace::new(0), window: VecDeque::with_capacity(cfg.b_window), msqr: None }
    }

    /// Stopping rules checked before taking a step from iterate `k`.
    pub(crate) fn pre_step_stop(&self, k: usize, a: f64, clock: &RunClock) -> Option<StopReason> {
        if let (Some(target), Some(max)) = (self.cfg.target_rqe, self.monitor.reference_value()) {
            if relative_error(max, a).is_some_and(|e| e <= target) {
                return Some(StopReason::TargetReached);
            }
        }
        if k >= self.cfg.max_iters {
            return Some(StopReason::MaxIters);
        }
        if self.cfg.time_budget_s.is_some_and(|t| clock.elapsed() >= t) {
            return Some(StopReason::TimeBudget);
        }
        None
    }

    /// Records iterate `k` if it falls on the thinning grid or `force` is set.
    pub(crate) fn record(&mut self, k: usize, wall_s: f64, v: &[f64], a: f64, step: StepInfo, force: bool) {
        if !force && k % self.cfg.record_every != 0 {
            return;
        }
        if self.trace.last().is_some_and(|r| r.k == k) {
            return;
        }
        let obs = self.monitor.observe(v, a);
        if let Some(r) = obs.residual_sq {
            self.msqr = Some(self.msqr.map_or(r, |m: f64| m.min(r)));
        }
        let grad_norm = step.grad_norm.or(obs.grad_norm);
        self.trace.records.push(TraceRecord { k, wall_s, a, abs_b: step.abs_b, tau: step.tau, rqe: obs.rqe, msqr: self.msqr, grad_norm });
    }

    /// Adds one squared stationarity measure; true once the window mean is
    /// below tolerance.
    pub(crate) fn push_window(&mut self, value: f64) -> bool {
        self.window.push_back(value);
        if self.window.len() > self.cfg.b_window {
            self.window.pop_front();
        }
        if self.window.len() < self.cfg.b_window {
            return false;
        }
        let mean = self.window.iter().sum::<f64>() / self.window.len() as f64;
        mean < self.cfg.b_tol_sq
    }

    pub(crate) fn finish(self) -> RunTrace {
        self.trace
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{NoMonitor, Observation};

    #[test]
    fn window_mean_triggers_only_when_full() {
        let cfg = SolverConfig { b_window: 3, b_tol_sq: 1.0, ..Default::default() };
        let mut mon = NoMonitor;
        let mut r = Recorder::new(&cfg, &mut mon);
        assert!(!r.push_window(0.0));
        assert!(!r.push_window(0.0));
        assert!(r.push_window(2.9));
        assert!(!r.push_window(3.0));
    }

    struct Residuals(Vec<f64>);

    impl Monitor for Residuals {
        fn observe(&mut self, _v: &[f64], _a: f64) -> Observation {
            Observation { residual_sq: self.0.pop(), ..Default::default() }
        }
    }

    #[test]
    fn running_minimum_and_thinning() {
        let cfg = SolverConfig { record_every: 2, ..Default::default() };
        let mut mon = Residuals(vec![0.5, 3.0, 1.0, 2.0]);
        let mut r = Recorder::new(&cfg, &mut mon);
        for k in 0..6 {
            r.record(k, 0.0, &[], 0.0, StepInfo::default(), false);
        }
        r.record(5, 0.0, &[], 0.0, StepInfo::default(), true);
        r.record(5, 0.0, &[], 0.0, StepInfo::default(), true);
        let t = r.finish();
        let ks: Vec<_> = t.records.iter().map(|x| x.k).collect();
        assert_eq!(ks, vec![0, 2, 4, 5]);
        let m: Vec<_> = t.records.iter().map(|x| x.msqr.unwrap()).collect();
        assert_eq!(m, vec![2.0, 1.0, 1.0, 0.5]);
    }

    #[test]
    fn clock_excludes_paused_time() {
        let mut c = RunClock::start();
        c.pause();
        let e = c.elapsed();
        std::thread::sleep(std::time::Duration::from_millis(20));
        assert_eq!(c.elapsed(), e);
        c.resume();
        assert_eq!(c.elapsed_before_last_step(), e);
        c.pause();
        assert!(c.elapsed() >= e);
    }
}
