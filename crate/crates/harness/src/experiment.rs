//! Seeded multi-trial experiments and their on-disk outputs.
//!
//! Trial `t` draws its problem from seed `seed + t` (stream 0) and the shared
//! starting vector from stream 1 of the same seed. Each solver then uses its
//! own stream, so adding or removing a solver leaves the others unchanged.

use crate::aggregate::{aggregate, AggregateReport, Metric};
use crate::config::{ExperimentConfig, SolverSpec};
use crate::error::{HarnessError, Result};
use crate::plot::{Plot, Series};
use crate::trace_csv::{fmt_f64, write_traces_file};
use rayon::prelude::*;
use rayq_core::algorithms::{rga_run_from, szo_run_from, zorga_run_from, IterateState, SolverConfig, StopReason};
use rayq_core::oracle::{reference_solve, DenseMonitor, DenseProblem, ReferenceSolution};
use rayq_core::sampling::{sample_initial, RngStream};
use rayq_core::trace::RunTrace;
use std::path::{Path, PathBuf};

/// Stream of the starting vector shared by all solvers of a trial.
pub const INITIAL_STREAM: u64 = 1;

/// One solver run on one trial.
#[derive(Debug, Clone)]
pub struct SolverRun {
    pub trace: RunTrace,
    pub stop: StopReason,
    pub final_v: Vec<f64>,
    /// `sin²_B` error of each recorded iterate, empty unless tracked.
    pub sin_b2: Vec<f64>,
}

/// All trials of one solver.
#[derive(Debug, Clone)]
pub struct SolverOutcome {
    pub spec: SolverSpec,
    pub runs: Vec<SolverRun>,
}

impl SolverOutcome {
    pub fn traces(&self) -> Vec<RunTrace> {
        self.runs.iter().map(|r| r.trace.clone()).collect()
    }
}

/// Runs `spec` from `v0` on a dense problem, scoring iterates against `reference`.
pub fn run_solver(
    problem: &DenseProblem,
    reference: &ReferenceSolution,
    spec: &SolverSpec,
    cfg: &SolverConfig,
    v0: &rayq_core::linalg::UnitBVector,
    rng: &mut RngStream,
    track_sin_b2: bool,
) -> Result<SolverRun> {
    let true_v = reference.max_vector.as_slice().to_vec();
    let mut monitor = DenseMonitor::new(problem, reference).with_grad_norm();
    if track_sin_b2 {
        monitor = monitor.with_true_vector(&true_v);
    }
    let (state, trace, stop): (IterateState, RunTrace, StopReason) = match *spec {
        SolverSpec::Szo { .. } => szo_run_from(&problem.pair()?, cfg, v0.clone(), rng, &mut monitor)?,
        SolverSpec::Rga => rga_run_from(&problem.a, &problem.b, cfg, v0.clone(), &mut monitor)?,
        SolverSpec::Zorga { variant, .. } => zorga_run_from(&problem.a, &problem.b, cfg, variant, v0.clone(), rng, &mut monitor)?,
    };
    let sin_b2 = std::mem::take(&mut monitor.sin_b2_history);
    Ok(SolverRun { trace, stop, final_v: state.into_v().as_slice().to_vec(), sin_b2 })
}

fn run_trial(cfg: &ExperimentConfig, t: usize) -> Result<Vec<SolverRun>> {
    let seed = cfg.seed.wrapping_add(t as u64);
    let problem = cfg.problem.spec(seed)?.generate()?;
    let reference = reference_solve(&problem.a, &problem.b)?;
    let pair = problem.pair()?;
    let v0 = sample_initial(&pair, &mut RngStream::new(seed, INITIAL_STREAM))?;
    cfg.solvers
        .iter()
        .map(|spec| {
            let mut rng = RngStream::new(seed, spec.stream_id());
            let mut run = run_solver(&problem, &reference, spec, &cfg.solver_config(spec), &v0, &mut rng, cfg.track_sin_b2)?;
            run.trace.trial = t;
            Ok(run)
        })
        .collect()
}

/// Thread count from `RAYQ_THREADS`, or rayon's default.
fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(s) = std::env::var("RAYQ_THREADS") {
        let n: usize = s.trim().parse().map_err(|_| HarnessError::Usage(format!("RAYQ_THREADS must be a positive integer, got '{s}'")))?;
        builder = builder.num_threads(n.max(1));
    }
    builder.build().map_err(|e| HarnessError::Io(e.to_string()))
}

/// Runs every trial, in parallel across trials, and groups the runs by solver.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<Vec<SolverOutcome>> {
    cfg.validate()?;
    let per_trial: Vec<Vec<SolverRun>> = thread_pool()?.install(|| (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, t)).collect::<Result<_>>())?;
    let mut outcomes: Vec<SolverOutcome> = cfg.solvers.iter().map(|&spec| SolverOutcome { spec, runs: Vec::with_capacity(cfg.trials) }).collect();
    for runs in per_trial {
        for (o, r) in outcomes.iter_mut().zip(runs) {
            o.runs.push(r);
        }
    }
    Ok(outcomes)
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub output: PathBuf,
    pub outcomes: Vec<SolverOutcome>,
    pub aggregates: Vec<AggregateReport>,
}

/// Runs the experiment and writes, under `cfg.output`:
///
/// * `<solver>/traces.csv`, every recorded iterate of every trial;
/// * `<solver>/trials/trial_<t>.csv`, the same rows split by trial;
/// * `<solver>/aggregate.csv`, per-iteration mean, median and 10/90% quantiles;
/// * `<solver>/sin_b2.csv` when `track_sin_b2` is set;
/// * `summary.csv`, one line per solver;
/// * `<metric>.svg` and `<metric>_time.svg` comparing the solvers' means.
///
/// Files are staged in a sibling directory and moved into place only when
/// every run succeeded, so a failure leaves no partial output behind.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let outcomes = run_trials(cfg)?;
    let aggregates: Vec<AggregateReport> = outcomes.iter().map(|o| aggregate(&o.traces())).collect();
    let staging = staging_dir(&cfg.output);
    if staging.exists() {
        std::fs::remove_dir_all(&staging)?;
    }
    let written = write_outputs(&staging, cfg, &outcomes, &aggregates);
    if let Err(e) = written {
        let _ = std::fs::remove_dir_all(&staging);
        return Err(e);
    }
    publish(&staging, &cfg.output)?;
    Ok(ExperimentReport { output: cfg.output.clone(), outcomes, aggregates })
}

fn staging_dir(out: &Path) -> PathBuf {
    let name = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    out.with_file_name(format!(".{name}.partial"))
}

/// Moves staged files into `out`, replacing same-named entries only.
fn publish(staging: &Path, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    for entry in std::fs::read_dir(staging)? {
        let entry = entry?;
        let dest = out.join(entry.file_name());
        if dest.is_dir() {
            std::fs::remove_dir_all(&dest)?;
        } else if dest.exists() {
            std::fs::remove_file(&dest)?;
        }
        std::fs::rename(entry.path(), dest)?;
    }
    std::fs::remove_dir_all(staging)?;
    Ok(())
}

fn write_outputs(dir: &Path, cfg: &ExperimentConfig, outcomes: &[SolverOutcome], aggregates: &[AggregateReport]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (o, agg) in outcomes.iter().zip(aggregates) {
        let sub = dir.join(o.spec.label());
        std::fs::create_dir_all(&sub)?;
        let traces = o.traces();
        write_traces_file(&sub.join("traces.csv"), &traces)?;
        std::fs::create_dir_all(sub.join("trials"))?;
        for trace in &traces {
            write_traces_file(&sub.join("trials").join(format!("trial_{:04}.csv", trace.trial)), std::slice::from_ref(trace))?;
        }
        agg.write_csv(std::io::BufWriter::new(std::fs::File::create(sub.join("aggregate.csv"))?))?;
        if cfg.track_sin_b2 {
            write_sin_b2(&sub.join("sin_b2.csv"), o)?;
        }
    }
    write_summary(&dir.join("summary.csv"), outcomes, aggregates)?;
    let title = format!("{} d={}", cfg.problem.family, cfg.problem.dim);
    for metric in [Metric::Rqe, Metric::Msqr, Metric::AbsB, Metric::GradNorm] {
        if !aggregates.iter().any(|a| a.metrics.contains(&metric)) {
            continue;
        }
        for time_axis in [false, true] {
            let plot = comparison_plot(&title, metric, time_axis, outcomes, aggregates);
            let name = if time_axis { format!("{}_time.svg", metric.name()) } else { format!("{}.svg", metric.name()) };
            std::fs::write(dir.join(name), plot.to_svg())?;
        }
    }
    Ok(())
}

/// Mean curves of `metric` for each solver against iteration or mean time.
pub fn comparison_plot(title: &str, metric: Metric, time_axis: bool, outcomes: &[SolverOutcome], aggregates: &[AggregateReport]) -> Plot {
    let x_label = if time_axis { "time (s)" } else { "iteration" };
    let mut plot = Plot::new(title, x_label, format!("mean {}", metric.name()));
    for (o, agg) in outcomes.iter().zip(aggregates) {
        let pts = agg.series(metric, |s| s.mean).into_iter().map(|(k, t, y)| (if time_axis { t } else { k as f64 }, y)).collect();
        let s = Series::new(o.spec.to_string(), pts);
        plot = plot.with(if matches!(o.spec, SolverSpec::Szo { .. }) { s } else { s.dashed() });
    }
    plot
}

fn write_sin_b2(path: &Path, o: &SolverOutcome) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["trial", "k", "sin_b2", "sin_b2_min"])?;
    for run in &o.runs {
        let mut best = f64::INFINITY;
        for (rec, s) in run.trace.records.iter().zip(&run.sin_b2) {
            best = best.min(*s);
            w.write_record([run.trace.trial.to_string(), rec.k.to_string(), fmt_f64(*s), fmt_f64(best)])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_summary(path: &Path, outcomes: &[SolverOutcome], aggregates: &[AggregateReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["solver", "trials", "final_rqe_median", "final_rqe_q10", "final_rqe_q90", "final_msqr_median", "iters_median", "stop_reasons"])?;
    for (o, agg) in outcomes.iter().zip(aggregates) {
        let rqe = agg.final_summary(Metric::Rqe);
        let msqr = agg.final_summary(Metric::Msqr);
        let iters: Vec<f64> = o.runs.iter().filter_map(|r| r.trace.last().map(|x| x.k as f64)).collect();
        let mut reasons: Vec<(&str, usize)> = Vec::new();
        for r in &o.runs {
            match reasons.iter_mut().find(|(n, _)| *n == r.stop.as_str()) {
                Some(e) => e.1 += 1,
                None => reasons.push((r.stop.as_str(), 1)),
            }
        }
        reasons.sort();
        let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
        w.write_record([
            o.spec.to_string(),
            o.runs.len().to_string(),
            opt(rqe.map(|s| s.median)),
            opt(rqe.map(|s| s.q10)),
            opt(rqe.map(|s| s.q90)),
            opt(msqr.map(|s| s.median)),
            if iters.is_empty() { String::new() } else { fmt_f64(crate::aggregate::median(&iters)) },
            reasons.iter().map(|(n, c)| format!("{n}={c}")).collect::<Vec<_>>().join(";"),
        ])?;
    }
    w.flush()?;
    Ok(())
}
