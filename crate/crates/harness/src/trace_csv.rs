//! Trace CSV files: header `trial,k,t_wall_s,a,abs_b,tau,rqe,msqr,grad_norm`,
//! one row per recorded iterate, empty cells for unavailable metrics.

use crate::error::{HarnessError, Result};
use rayq_core::trace::{RunTrace, TraceRecord};
use std::io::{Read, Write};
use std::path::Path;

pub const HEADER: [&str; 9] = ["trial", "k", "t_wall_s", "a", "abs_b", "tau", "rqe", "msqr", "grad_norm"];

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn write_traces<W: Write>(w: W, traces: &[RunTrace]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(HEADER)?;
    for t in traces {
        for r in &t.records {
            out.write_record([
                t.trial.to_string(),
                r.k.to_string(),
                fmt_f64(r.wall_s),
                fmt_f64(r.a),
                fmt_opt(r.abs_b),
                fmt_opt(r.tau),
                fmt_opt(r.rqe),
                fmt_opt(r.msqr),
                fmt_opt(r.grad_norm),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_traces_file(path: &Path, traces: &[RunTrace]) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_traces(std::io::BufWriter::new(f), traces)
}

/// Parses trace CSV. Cells may carry surrounding whitespace and columns may
/// appear in any order; every header column must be present exactly once.
pub fn read_traces<R: Read>(r: R) -> Result<Vec<RunTrace>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(r);
    let headers = rdr.headers().map_err(|e| HarnessError::schema(1, None, e.to_string()))?.clone();
    let mut index = [usize::MAX; 9];
    for (pos, name) in headers.iter().enumerate() {
        match HEADER.iter().position(|h| *h == name) {
            Some(i) if index[i] == usize::MAX => index[i] = pos,
            Some(_) => return Err(HarnessError::schema(1, Some(name), "duplicate column")),
            None => return Err(HarnessError::schema(1, Some(name), "unknown column")),
        }
    }
    if let Some(i) = index.iter().position(|&p| p == usize::MAX) {
        return Err(HarnessError::schema(1, Some(HEADER[i]), "missing column"));
    }

    let mut traces: Vec<RunTrace> = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let row = n + 2;
        let rec = rec.map_err(|e| HarnessError::schema(row, None, e.to_string()))?;
        if rec.len() != HEADER.len() {
            return Err(HarnessError::schema(row, None, format!("expected {} fields, found {}", HEADER.len(), rec.len())));
        }
        let cell = |i: usize| rec.get(index[i]).unwrap_or("");
        let opt = |i: usize| -> Result<Option<f64>> {
            let s = cell(i);
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>().map(Some).map_err(|_| HarnessError::schema(row, Some(HEADER[i]), format!("not a number: '{s}'")))
        };
        let req = |i: usize| -> Result<f64> { opt(i)?.ok_or_else(|| HarnessError::schema(row, Some(HEADER[i]), "required value missing")) };
        let int = |i: usize| -> Result<usize> {
            let s = cell(i);
            s.parse::<usize>().map_err(|_| HarnessError::schema(row, Some(HEADER[i]), format!("not a nonnegative integer: '{s}'")))
        };
        let trial = int(0)?;
        let record = TraceRecord { k: int(1)?, wall_s: req(2)?, a: req(3)?, abs_b: opt(4)?, tau: opt(5)?, rqe: opt(6)?, msqr: opt(7)?, grad_norm: opt(8)? };
        match traces.iter_mut().find(|t| t.trial == trial) {
            Some(t) => {
                if t.records.last().is_some_and(|last| last.k >= record.k) {
                    return Err(HarnessError::schema(row, Some("k"), "iteration index must increase within a trial"));
                }
                t.records.push(record);
            }
            None => traces.push(RunTrace { trial, records: vec![record] }),
        }
    }
    Ok(traces)
}

/// Reads an externally produced trace file for aggregation next to native runs.
pub fn ingest_external_trace(path: &Path) -> Result<Vec<RunTrace>> {
    let f = std::fs::File::open(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    read_traces(std::io::BufReader::new(f))
}
