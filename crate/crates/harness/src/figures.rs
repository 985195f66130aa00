//! Figure reproductions: CSV tables plus SVG panels per experiment.

use crate::aggregate::{summarize, AggregateReport, Metric};
use crate::bench::{bench_to_target, write_bench_csv, BenchConfig};
use crate::config::{ExperimentConfig, ProblemConfig, SolverSpec};
use crate::error::{HarnessError, Result};
use crate::experiment::{comparison_plot, run_experiment, ExperimentReport, INITIAL_STREAM};
use crate::plot::{Plot, Series};
use crate::trace_csv::fmt_f64;
use rayon::prelude::*;
use rayq_core::algorithms::{szo_step, IterateState, StopSignal, ZorgaVariant};
use rayq_core::linalg::{dot, norm, riemannian_grad};
use rayq_core::problems::{ProblemFamily, ProblemSpec};
use rayq_core::sampling::{sample_initial, RngStream};
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// 10 trials, dimensions up to 100.
    Desk,
    /// 50 trials and the largest dimensions.
    Full,
}

impl Scale {
    pub fn trials(&self) -> usize {
        match self {
            Scale::Desk => 10,
            Scale::Full => 50,
        }
    }
}

impl FromStr for Scale {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "full" => Ok(Scale::Full),
            other => Err(HarnessError::Usage(format!("unknown scale '{other}' (expected desk or full)"))),
        }
    }
}

/// A qualitative property the figure is expected to show.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct FigureReport {
    pub files: Vec<PathBuf>,
    pub checks: Vec<FigureCheck>,
}

impl FigureReport {
    fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(FigureCheck { name: name.into(), passed, detail: detail.into() });
    }

    fn absorb(&mut self, exp: &ExperimentReport) -> Result<()> {
        collect_files(&exp.output, &mut self.files)
    }
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<std::io::Result<_>>()?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let p = e.path();
        if p.is_dir() {
            collect_files(&p, out)?;
        } else {
            out.push(p);
        }
    }
    Ok(())
}

/// Writes the figure's artifacts under `out/<id>/`.
pub fn reproduce_figure(id: &str, scale: Scale, out: &Path, seed: u64) -> Result<FigureReport> {
    let dir = out.join(id);
    match id {
        "fig2" => fig2(scale, &dir, seed),
        "fig3" => fig3(scale, &dir, seed),
        "fig4" => fig4(scale, &dir, seed),
        "fig5" => fig5(scale, &dir, seed),
        "fig6" => fig6(scale, &dir, seed),
        "fig7" => fig7(scale, &dir, seed),
        other => Err(HarnessError::UnknownFigure(other.to_string())),
    }
}

fn problem(family: ProblemFamily, dim: usize, q: Option<f64>) -> ProblemConfig {
    ProblemConfig { family: family.as_str().into(), dim, q, length_scale: None, interval: None }
}

fn szo_sweep(ms: &[usize]) -> Vec<SolverSpec> {
    ms.iter().map(|&m| SolverSpec::Szo { m }).collect()
}

/// Records at most about 1000 iterates per run.
/// Slack for increases of a relative error that are pure rounding.
const RQE_ROUNDOFF: f64 = 1e-12;

fn record_every(iters: usize) -> usize {
    (iters / 1000).max(1)
}

fn final_median(rep: &AggregateReport, metric: Metric) -> f64 {
    rep.final_summary(metric).map_or(f64::NAN, |s| s.median)
}

/// Iteration budget of the convergence sweep for dimension `d`.
pub fn fig2_iters(d: usize) -> usize {
    match d {
        0..=10 => 1000,
        11..=50 => 3000,
        51..=100 => 5000,
        _ => 10_000,
    }
}

fn fig2(scale: Scale, dir: &Path, seed: u64) -> Result<FigureReport> {
    let dims: &[usize] = match scale {
        Scale::Desk => &[10, 50, 100],
        Scale::Full => &[10, 50, 100, 500],
    };
    let mut report = FigureReport::default();
    for &d in dims {
        let iters = fig2_iters(d);
        let mut cfg = ExperimentConfig::new(problem(ProblemFamily::GaussianPair, d, None), szo_sweep(&[1, 10, 100]), scale.trials(), iters, seed, dir.join(format!("d{d}")));
        cfg.record_every = record_every(iters);
        let exp = run_experiment(&cfg)?;
        let finals: Vec<f64> = exp.aggregates.iter().map(|a| final_median(a, Metric::Rqe)).collect();
        report.check(format!("d={d}: final median RQE of m=100 at most that of m=1"), finals[2] <= finals[0], format!("m=1,10,100: {finals:?}"));
        let median = exp.aggregates[0].series(Metric::Rqe, |s| s.median);
        let monotone = median.windows(2).all(|w| w[1].2 <= w[0].2 + RQE_ROUNDOFF);
        report.check(format!("d={d}: median RQE of m=1 is nonincreasing"), monotone, String::new());
        report.absorb(&exp)?;
    }
    Ok(report)
}

/// Per-step gradient-estimate statistics of one run.
struct GradientTrace {
    b_sq: Vec<f64>,
    grad_sq_scaled: Vec<f64>,
    estimate_error: Vec<f64>,
}

fn gradient_trace(p: &rayq_core::oracle::DenseProblem, seed: u64, m: usize, iters: usize) -> Result<GradientTrace> {
    let pair = p.pair()?;
    let d = p.dim() as f64;
    let mut state = IterateState::new(&pair, sample_initial(&pair, &mut RngStream::new(seed, INITIAL_STREAM))?)?;
    let mut rng = RngStream::new(seed, SolverSpec::Szo { m }.stream_id());
    let mut out = GradientTrace { b_sq: Vec::with_capacity(iters), grad_sq_scaled: Vec::with_capacity(iters), estimate_error: Vec::with_capacity(iters) };
    for _ in 0..iters {
        let g = riemannian_grad(&p.a, &p.b, state.v().as_slice())?;
        let (next, signal) = szo_step(&pair, &state, &mut rng, m)?;
        if signal == StopSignal::ExactTermination {
            break;
        }
        let b = next.last_b().expect("a step was taken");
        let scale = next.last_aggregate_scale().expect("a step was taken");
        let dir = next.last_direction().expect("a step was taken");
        let err: Vec<f64> = dir.iter().zip(&g).map(|(x, gi)| (d - 1.0) * scale * x - gi).collect();
        out.b_sq.push(b * b);
        out.grad_sq_scaled.push(dot(&g, &g) / (d - 1.0));
        out.estimate_error.push(norm(&err));
        state = next;
    }
    Ok(out)
}

fn fig3(scale: Scale, dir: &Path, seed: u64) -> Result<FigureReport> {
    let d = 100;
    let iters = 2000;
    let trials = scale.trials();
    let ms = [1usize, 10, 100];
    std::fs::create_dir_all(dir)?;
    let mut report = FigureReport::default();
    let mut left = Plot::new(format!("gradient estimate d={d}"), "iteration", "|b|^2 (solid), |grad|^2/(d-1) (dashed)");
    let mut right = Plot::new(format!("estimation error d={d}"), "iteration", "|(d-1) x - grad|");
    for m in ms {
        let runs: Vec<GradientTrace> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let s = seed.wrapping_add(t as u64);
                gradient_trace(&ProblemSpec::new(ProblemFamily::GaussianPair, d, s).generate()?, s, m, iters)
            })
            .collect::<Result<_>>()?;
        let len = runs.iter().map(|r| r.b_sq.len()).min().unwrap_or(0);
        let path = dir.join(format!("gradient_m{m}.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["k", "b_sq_mean", "b_sq_median", "grad_sq_scaled_mean", "grad_sq_scaled_median", "error_mean", "error_median"])?;
        let (mut bs, mut gs, mut es) = (Vec::new(), Vec::new(), Vec::new());
        let (mut worst_ratio, mut worst_mean_ratio, mut min_mean_ratio): (f64, f64, f64) = (1.0, 1.0, f64::INFINITY);
        for k in 0..len {
            let col = |f: &dyn Fn(&GradientTrace) -> f64| summarize(&runs.iter().map(f).collect::<Vec<_>>());
            let b = col(&|r| r.b_sq[k]);
            let g = col(&|r| r.grad_sq_scaled[k]);
            let e = col(&|r| r.estimate_error[k]);
            w.write_record([k.to_string(), fmt_f64(b.mean), fmt_f64(b.median), fmt_f64(g.mean), fmt_f64(g.median), fmt_f64(e.mean), fmt_f64(e.median)])?;
            let ratio = b.median / g.median;
            if (ratio.ln().abs()) > worst_ratio.ln().abs() {
                worst_ratio = ratio;
            }
            let mean_ratio = b.mean / g.mean;
            if (mean_ratio.ln().abs()) > worst_mean_ratio.ln().abs() {
                worst_mean_ratio = mean_ratio;
            }
            min_mean_ratio = min_mean_ratio.min(mean_ratio);
            bs.push((k as f64, b.mean));
            gs.push((k as f64, g.mean));
            es.push((k as f64, e.mean));
        }
        w.flush()?;
        report.files.push(path);
        if m == 1 {
            let ok = len > 0 && (0.1..=10.0).contains(&worst_ratio);
            report.check("m=1: median |b|^2 within a factor 10 of median |grad|^2/(d-1)", ok, format!("worst ratio {worst_ratio:.3e} over {len} steps"));
            let ok = len > 0 && (0.1..=10.0).contains(&worst_mean_ratio);
            report.check("m=1: mean |b|^2 within a factor 10 of mean |grad|^2/(d-1)", ok, format!("worst ratio {worst_mean_ratio:.3e} over {len} steps"));
        } else {
            report.check(format!("m={m}: mean |b|^2 bounds mean |grad|^2/(d-1) from above"), len > 0 && min_mean_ratio >= 1.0, format!("smallest ratio {min_mean_ratio:.3e}"));
        }
        left = left.with(Series::new(format!("|b|^2 m={m}"), bs)).with(Series::new(format!("grad m={m}"), gs).dashed());
        right = right.with(Series::new(format!("m={m}"), es));
    }
    for (name, plot) in [("gradient.svg", left), ("error.svg", right)] {
        let p = dir.join(name);
        std::fs::write(&p, plot.to_svg())?;
        report.files.push(p);
    }
    Ok(report)
}

fn fig4(scale: Scale, dir: &Path, seed: u64) -> Result<FigureReport> {
    let mut report = FigureReport::default();
    for q in [1u32, 2, 3] {
        let iters = (2 * q as usize - 1) * 1000;
        let mut cfg = ExperimentConfig::new(problem(ProblemFamily::IllConditioned, 100, Some(q as f64)), szo_sweep(&[1, 10, 100]), scale.trials(), iters, seed, dir.join(format!("q{q}")));
        cfg.record_every = record_every(iters);
        let exp = run_experiment(&cfg)?;
        let finals: Vec<f64> = exp.aggregates.iter().map(|a| final_median(a, Metric::Rqe)).collect();
        report.check(format!("q={q}: m=100 ends below m=1"), finals[2] < finals[0], format!("m=1,10,100: {finals:?}"));
        report.absorb(&exp)?;
    }
    Ok(report)
}

fn fig5(scale: Scale, dir: &Path, seed: u64) -> Result<FigureReport> {
    let dims = match scale {
        Scale::Desk => vec![25, 50, 100],
        Scale::Full => vec![50, 100, 200, 500],
    };
    let ms = vec![1, 10, 100];
    let cfg = BenchConfig::new(dims.clone(), ms.clone(), vec![1.0, 2.0, 3.0], scale.trials(), seed);
    let rows = bench_to_target(&cfg)?;
    std::fs::create_dir_all(dir)?;
    let mut report = FigureReport::default();
    let path = dir.join("bench.csv");
    write_bench_csv(std::io::BufWriter::new(std::fs::File::create(&path)?), &rows)?;
    report.files.push(path);
    for q in [1.0, 2.0, 3.0] {
        let mut plot = Plot::new(format!("time to RQE < 0.01, q={q}"), "dimension d", "median time (s)");
        for &m in &ms {
            let pts = rows.iter().filter(|r| r.q == q && r.m == m).map(|r| (r.d as f64, r.median_s)).collect();
            plot = plot.with(Series::new(format!("m={m}"), pts));
        }
        let p = dir.join(format!("time_q{q}.svg"));
        std::fs::write(&p, plot.to_svg())?;
        report.files.push(p);
    }
    let at = |m: usize, q: f64, d: usize| rows.iter().find(|r| r.m == m && r.q == q && r.d == d).map(|r| r.median_s);
    if let (Some(fast), Some(slow)) = (at(100, 2.0, 100), at(1, 2.0, 100)) {
        report.check("q=2, d=100: m=100 is no slower than m=1", fast <= slow, format!("{fast:.3e} s vs {slow:.3e} s"));
    }
    Ok(report)
}

fn fig6(scale: Scale, dir: &Path, seed: u64) -> Result<FigureReport> {
    let dims: &[usize] = match scale {
        Scale::Desk => &[10, 50, 100],
        Scale::Full => &[10, 50, 100, 500],
    };
    let mut solvers = Vec::new();
    for m in [10, 100] {
        solvers.push(SolverSpec::Szo { m });
        solvers.push(SolverSpec::Zorga { variant: ZorgaVariant::ConstantStep, m });
        solvers.push(SolverSpec::Zorga { variant: ZorgaVariant::Armijo, m });
    }
    let iters = 1000;
    let mut report = FigureReport::default();
    for &d in dims {
        let out = dir.join(format!("d{d}"));
        let cfg = ExperimentConfig::new(problem(ProblemFamily::OperatorNorm, d, None), solvers.clone(), scale.trials(), iters, seed, &out);
        let exp = run_experiment(&cfg)?;
        for m in [10, 100] {
            let fin = |spec: SolverSpec| exp.outcomes.iter().position(|o| o.spec == spec).map_or(f64::NAN, |i| final_median(&exp.aggregates[i], Metric::Rqe));
            let szo = fin(SolverSpec::Szo { m });
            let c = fin(SolverSpec::Zorga { variant: ZorgaVariant::ConstantStep, m });
            let a = fin(SolverSpec::Zorga { variant: ZorgaVariant::Armijo, m });
            report.check(format!("d={d}, m={m}: SZO final RQE below both ZO-RGA variants"), szo < c && szo < a, format!("szo {szo:.3e}, constant {c:.3e}, armijo {a:.3e}"));
        }
        // Same panels with m=10 dashed and m=100 solid.
        for metric in [Metric::Rqe, Metric::GradNorm] {
            let mut plot = comparison_plot(&format!("operator norm d={d}"), metric, false, &exp.outcomes, &exp.aggregates);
            for (s, o) in plot.series.iter_mut().zip(&exp.outcomes) {
                s.dashed = o.spec.m() == 10;
            }
            std::fs::write(out.join(format!("{}.svg", metric.name())), plot.to_svg())?;
        }
        report.absorb(&exp)?;
    }
    Ok(report)
}

fn fig7(scale: Scale, dir: &Path, seed: u64) -> Result<FigureReport> {
    let d = 300;
    let iters = 500;
    let trials = match scale {
        Scale::Desk => 5,
        Scale::Full => 10,
    };
    let mut cfg = ExperimentConfig::new(problem(ProblemFamily::KarhunenLoeve, d, None), szo_sweep(&[1, 10, 100]), trials, iters, seed, dir);
    cfg.track_sin_b2 = true;
    let exp = run_experiment(&cfg)?;
    let mut report = FigureReport::default();

    let spec = ProblemSpec::new(ProblemFamily::KarhunenLoeve, d, seed);
    let p = spec.generate()?;
    let reference = rayq_core::oracle::reference_solve(&p.a, &p.b)?;
    let truth = reference.max_vector.as_slice();
    let grid: Vec<f64> = (0..d).map(|i| i as f64 / (d - 1) as f64).collect();
    let mut header = vec!["t".to_string(), "true".to_string()];
    let mut columns = Vec::new();
    let mut eigen_plot = Plot::new("eigenfunction after 500 iterations", "t", "v(t)").linear_y().with(Series::new("true", grid.iter().copied().zip(truth.iter().copied()).collect()).dashed());
    for o in &exp.outcomes {
        let v = &o.runs[0].final_v;
        let bt = p.b.matvec(truth);
        let sign = if dot(v, &bt) < 0.0 { -1.0 } else { 1.0 };
        let aligned: Vec<f64> = v.iter().map(|x| sign * x).collect();
        header.push(o.spec.label());
        eigen_plot = eigen_plot.with(Series::new(o.spec.to_string(), grid.iter().copied().zip(aligned.iter().copied()).collect()));
        columns.push(aligned);
    }
    let path = dir.join("eigenfunction.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(&header)?;
    for i in 0..d {
        let mut row = vec![fmt_f64(grid[i]), fmt_f64(truth[i])];
        row.extend(columns.iter().map(|c| fmt_f64(c[i])));
        w.write_record(&row)?;
    }
    w.flush()?;
    std::fs::write(dir.join("eigenfunction.svg"), eigen_plot.to_svg())?;

    let mut sin_plot = Plot::new("sin^2_B error, KL d=300", "iteration", "mean running-min sin^2_B");
    for o in &exp.outcomes {
        let n = o.runs.iter().map(|r| r.sin_b2.len()).min().unwrap_or(0);
        let mins: Vec<Vec<f64>> = o.runs.iter().map(|r| running_min(&r.sin_b2)).collect();
        let pts = (0..n).map(|i| (o.runs[0].trace.records[i].k as f64, mins.iter().map(|m| m[i]).sum::<f64>() / mins.len() as f64)).collect();
        sin_plot = sin_plot.with(Series::new(o.spec.to_string(), pts));
        if o.spec == (SolverSpec::Szo { m: 100 }) {
            let good = mins.iter().filter(|m| m.last().is_some_and(|&x| x < 1e-2)).count();
            report.check("m=100: final sin^2_B below 1e-2", 5 * good >= 4 * mins.len(), format!("{good}/{} trials", mins.len()));
        }
    }
    std::fs::write(dir.join("sin_b2.svg"), sin_plot.to_svg())?;
    report.absorb(&exp)?;
    Ok(report)
}

/// Prefix minima of `xs`.
pub fn running_min(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .scan(f64::INFINITY, |best, &x| {
            *best = best.min(x);
            Some(*best)
        })
        .collect()
}
