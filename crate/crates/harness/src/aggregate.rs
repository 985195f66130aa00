//! Per-iteration statistics across trials.
//!
//! Traces are aligned on the union of recorded iteration indices. A trace
//! that stopped early, or was recorded more sparsely, contributes its last
//! available value at each index.

use crate::error::Result;
use crate::trace_csv::fmt_f64;
use rayq_core::trace::{RunTrace, TraceRecord};
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    A,
    AbsB,
    Tau,
    Rqe,
    Msqr,
    GradNorm,
}

impl Metric {
    pub const ALL: [Metric; 6] = [Metric::A, Metric::AbsB, Metric::Tau, Metric::Rqe, Metric::Msqr, Metric::GradNorm];

    pub fn name(&self) -> &'static str {
        match self {
            Metric::A => "a",
            Metric::AbsB => "abs_b",
            Metric::Tau => "tau",
            Metric::Rqe => "rqe",
            Metric::Msqr => "msqr",
            Metric::GradNorm => "grad_norm",
        }
    }

    pub fn get(&self, r: &TraceRecord) -> Option<f64> {
        match self {
            Metric::A => Some(r.a),
            Metric::AbsB => r.abs_b,
            Metric::Tau => r.tau,
            Metric::Rqe => r.rqe,
            Metric::Msqr => r.msqr,
            Metric::GradNorm => r.grad_norm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    pub q10: f64,
    pub q90: f64,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(values: &[f64]) -> Summary {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    Summary { mean: s.iter().sum::<f64>() / s.len() as f64, median: quantile(&s, 0.5), q10: quantile(&s, 0.1), q90: quantile(&s, 0.9) }
}

pub fn median(values: &[f64]) -> f64 {
    summarize(values).median
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub k: usize,
    /// Mean cumulative solver time at `k`.
    pub mean_time_s: f64,
    /// Indexed like [`AggregateReport::metrics`]; `None` unless every trial has a value.
    pub stats: Vec<Option<Summary>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateReport {
    pub trials: usize,
    pub metrics: Vec<Metric>,
    pub rows: Vec<AggregateRow>,
}

impl AggregateReport {
    /// `(k, statistic)` pairs of one metric where available.
    pub fn series(&self, metric: Metric, pick: impl Fn(&Summary) -> f64) -> Vec<(usize, f64, f64)> {
        let Some(idx) = self.metrics.iter().position(|m| *m == metric) else { return Vec::new() };
        self.rows.iter().filter_map(|r| r.stats[idx].as_ref().map(|s| (r.k, r.mean_time_s, pick(s)))).collect()
    }

    pub fn final_summary(&self, metric: Metric) -> Option<Summary> {
        let idx = self.metrics.iter().position(|m| *m == metric)?;
        self.rows.iter().rev().find_map(|r| r.stats[idx])
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["k".to_string(), "t_mean_s".to_string()];
        for m in &self.metrics {
            for stat in ["mean", "median", "q10", "q90"] {
                header.push(format!("{}_{stat}", m.name()));
            }
        }
        out.write_record(&header)?;
        for row in &self.rows {
            let mut fields = vec![row.k.to_string(), fmt_f64(row.mean_time_s)];
            for s in &row.stats {
                match s {
                    Some(s) => fields.extend([s.mean, s.median, s.q10, s.q90].map(fmt_f64)),
                    None => fields.extend(std::iter::repeat_n(String::new(), 4)),
                }
            }
            out.write_record(&fields)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Value of `metric` at iteration `k`: the last available value at or before `k`.
fn carried(records: &[TraceRecord], k: usize, metric: Metric) -> Option<f64> {
    let end = records.partition_point(|r| r.k <= k);
    records[..end].iter().rev().find_map(|r| metric.get(r))
}

fn carried_time(records: &[TraceRecord], k: usize) -> Option<f64> {
    let end = records.partition_point(|r| r.k <= k);
    records[..end].last().map(|r| r.wall_s)
}

pub fn aggregate(traces: &[RunTrace]) -> AggregateReport {
    let metrics: Vec<Metric> = Metric::ALL.into_iter().filter(|m| traces.iter().any(|t| t.records.iter().any(|r| m.get(r).is_some()))).collect();
    let mut ks: Vec<usize> = traces.iter().flat_map(|t| t.records.iter().map(|r| r.k)).collect();
    ks.sort_unstable();
    ks.dedup();
    let rows = ks
        .into_iter()
        .map(|k| {
            let times: Vec<f64> = traces.iter().filter_map(|t| carried_time(&t.records, k)).collect();
            let mean_time_s = if times.is_empty() { 0.0 } else { times.iter().sum::<f64>() / times.len() as f64 };
            let stats = metrics
                .iter()
                .map(|&m| {
                    let vals: Vec<f64> = traces.iter().filter_map(|t| carried(&t.records, k, m)).filter(|x| x.is_finite()).collect();
                    (vals.len() == traces.len() && !vals.is_empty()).then(|| summarize(&vals))
                })
                .collect();
            AggregateRow { k, mean_time_s, stats }
        })
        .collect();
    AggregateReport { trials: traces.len(), metrics, rows }
}
