//! Time to reach a relative quotient error on ill-conditioned pairs.

use crate::config::SolverSpec;
use crate::error::{HarnessError, Result};
use crate::experiment::INITIAL_STREAM;
use crate::trace_csv::fmt_f64;
use rayq_core::algorithms::{szo_run_from, SolverConfig, StopReason};
use rayq_core::oracle::reference_solve;
use rayq_core::problems::{ProblemFamily, ProblemSpec};
use rayq_core::sampling::{sample_initial, RngStream};
use rayq_core::trace::ReferenceMonitor;
use std::io::Write;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub dims: Vec<usize>,
    pub ms: Vec<usize>,
    pub qs: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub target_rqe: f64,
    /// Iteration cap as a multiple of the dimension.
    pub cap_per_dim: usize,
}

impl BenchConfig {
    pub fn new(dims: Vec<usize>, ms: Vec<usize>, qs: Vec<f64>, trials: usize, seed: u64) -> Self {
        Self { dims, ms, qs, trials, seed, target_rqe: 0.01, cap_per_dim: 100 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub d: usize,
    pub m: usize,
    pub q: f64,
    pub median_s: f64,
    /// Trials that hit the iteration cap before the target.
    pub iters_capped_count: usize,
    pub times_s: Vec<f64>,
    pub median_iters: f64,
}

/// Median solver time to reach `target_rqe` for every `(d, m, q)`.
///
/// Trials run one after another so timings do not compete for cores. A
/// trial whose starting vector already meets the target takes zero time; a
/// capped trial contributes its time at the cap.
pub fn bench_to_target(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    if cfg.trials == 0 || cfg.dims.is_empty() || cfg.ms.is_empty() || cfg.qs.is_empty() {
        return Err(HarnessError::Usage("bench needs at least one dim, m, q and trial".into()));
    }
    if !(cfg.target_rqe >= 0.0) {
        return Err(HarnessError::Usage("target RQE must be nonnegative".into()));
    }
    let mut rows = Vec::new();
    for &q in &cfg.qs {
        for &d in &cfg.dims {
            let mut times = vec![Vec::with_capacity(cfg.trials); cfg.ms.len()];
            let mut capped = vec![0; cfg.ms.len()];
            let mut iters = vec![Vec::with_capacity(cfg.trials); cfg.ms.len()];
            for t in 0..cfg.trials {
                let seed = cfg.seed.wrapping_add(t as u64);
                let problem = ProblemSpec::new(ProblemFamily::IllConditioned, d, seed).with_q(q).generate()?;
                let reference = reference_solve(&problem.a, &problem.b)?;
                let pair = problem.pair()?;
                let v0 = sample_initial(&pair, &mut RngStream::new(seed, INITIAL_STREAM))?;
                for (i, &m) in cfg.ms.iter().enumerate() {
                    let max_iters = cfg.cap_per_dim * d;
                    let solver = SolverConfig { m, max_iters, target_rqe: Some(cfg.target_rqe), record_every: max_iters, b_tol_sq: 0.0, ..SolverConfig::default() };
                    let mut monitor = ReferenceMonitor { max_value: reference.max_value };
                    let mut rng = RngStream::new(seed, SolverSpec::Szo { m }.stream_id());
                    let (_, trace, stop) = szo_run_from(&pair, &solver, v0.clone(), &mut rng, &mut monitor)?;
                    let last = trace.last().expect("runs record their final iterate");
                    times[i].push(if last.k == 0 { 0.0 } else { last.wall_s });
                    iters[i].push(last.k as f64);
                    if stop != StopReason::TargetReached {
                        capped[i] += 1;
                    }
                }
            }
            for (i, &m) in cfg.ms.iter().enumerate() {
                rows.push(BenchRow { d, m, q, median_s: crate::aggregate::median(&times[i]), iters_capped_count: capped[i], times_s: std::mem::take(&mut times[i]), median_iters: crate::aggregate::median(&iters[i]) });
            }
        }
    }
    Ok(rows)
}

pub fn write_bench_csv<W: Write>(w: W, rows: &[BenchRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["d", "m", "q", "median_s", "iters_capped_count"])?;
    for r in rows {
        out.write_record([r.d.to_string(), r.m.to_string(), fmt_f64(r.q), fmt_f64(r.median_s), r.iters_capped_count.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
