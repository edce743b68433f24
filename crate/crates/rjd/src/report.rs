//! Trace, histogram, summary and sequence-table formats.
//!
//! Floating-point fields are written in scientific notation with 17
//! significant digits, which round-trips every finite `f64` exactly and does
//! not depend on the locale.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use rjd_core::{
    insertion_order_ks, rjd_histogram, summarize, DiagnosticSummary, InsertionOrderTest,
    IterationRecord, Recommendation, RjdHistogram, RunResult,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Column names of the delimited trace, in order.
pub const TRACE_HEADER: [&str; 12] = [
    "problem",
    "num_live",
    "num_steps",
    "seed",
    "iter",
    "logl",
    "logv",
    "logw",
    "insertion_rank",
    "jd",
    "r",
    "rjd",
];

pub const SEQUENCE_HEADER: [&str; 7] = [
    "num_steps",
    "logz",
    "logz_err",
    "geometric_mean_rjd",
    "frac_rjd_above_1",
    "ks_p_value",
    "wall_time_s",
];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("write failed after {written} records: {source}")]
    Write { written: usize, source: io::Error },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("trace is empty")]
    EmptyTrace,
    #[error("cannot tabulate runs of different problems or live-point counts ({0})")]
    MixedRuns(String),
    #[error("no runs to tabulate")]
    NoRuns,
    #[error(transparent)]
    Core(#[from] rjd_core::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = ReportError> = std::result::Result<T, E>;

/// One dead point together with the metadata of the run that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub problem: String,
    pub num_live: usize,
    pub num_steps: usize,
    pub seed: u64,
    pub iter: usize,
    pub logl: f64,
    pub logv: f64,
    pub logw: f64,
    pub insertion_rank: usize,
    pub jd: f64,
    pub r: f64,
    pub rjd: f64,
}

impl TraceRecord {
    pub fn new(result: &RunResult, rec: &IterationRecord) -> Self {
        TraceRecord {
            problem: result.problem_name.clone(),
            num_live: result.num_live,
            num_steps: result.num_steps,
            seed: result.seed,
            iter: rec.iter,
            logl: rec.logl,
            logv: rec.logv,
            logw: rec.logw,
            insertion_rank: rec.insertion_rank,
            jd: rec.jd,
            r: rec.r,
            rjd: rec.rjd,
        }
    }

    pub fn iteration(&self) -> IterationRecord {
        IterationRecord {
            iter: self.iter,
            logl: self.logl,
            logv: self.logv,
            logw: self.logw,
            insertion_rank: self.insertion_rank,
            jd: self.jd,
            r: self.r,
            rjd: self.rjd,
        }
    }

    fn write_csv_line(&self, out: &mut String) {
        // problem names come from the catalog and never contain separators
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.problem,
            self.num_live,
            self.num_steps,
            self.seed,
            self.iter,
            fmt_f64(self.logl),
            fmt_f64(self.logv),
            fmt_f64(self.logw),
            self.insertion_rank,
            fmt_f64(self.jd),
            fmt_f64(self.r),
            fmt_f64(self.rjd),
        );
    }
}

/// Format with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write the delimited trace of `result` and return the number of records.
pub fn write_trace<W: Write>(result: &RunResult, mut sink: W) -> Result<usize> {
    let io_err = |written, source| ReportError::Write { written, source };
    let header = TRACE_HEADER.join(",") + "\n";
    sink.write_all(header.as_bytes())
        .map_err(|e| io_err(0, e))?;
    let mut line = String::new();
    for (written, rec) in result.records.iter().enumerate() {
        line.clear();
        TraceRecord::new(result, rec).write_csv_line(&mut line);
        sink.write_all(line.as_bytes())
            .map_err(|e| io_err(written, e))?;
    }
    let n = result.records.len();
    sink.flush().map_err(|e| io_err(n, e))?;
    Ok(n)
}

/// Write the trace as one JSON object per line.
///
/// JSON has no literal for non-finite numbers; those fields become `null`.
pub fn write_trace_jsonl<W: Write>(result: &RunResult, mut sink: W) -> Result<usize> {
    for (written, rec) in result.records.iter().enumerate() {
        let line = serde_json::to_string(&TraceRecord::new(result, rec)).map_err(|e| {
            ReportError::Write {
                written,
                source: e.into(),
            }
        })?;
        sink.write_all((line + "\n").as_bytes())
            .map_err(|source| ReportError::Write { written, source })?;
    }
    let n = result.records.len();
    sink.flush()
        .map_err(|source| ReportError::Write { written: n, source })?;
    Ok(n)
}

/// Parse a delimited trace written by [`write_trace`].
pub fn parse_trace<R: io::Read>(source: R) -> Result<Vec<TraceRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(source);
    let headers = reader.headers().map_err(|e| parse_error(&e, 1))?.clone();
    if headers.iter().ne(TRACE_HEADER.iter().copied()) {
        return Err(ReportError::Parse {
            line: 1,
            message: format!("unexpected header, want {}", TRACE_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for row in reader.deserialize::<TraceRecord>() {
        let line = out.len() as u64 + 2;
        out.push(row.map_err(|e| parse_error(&e, line))?);
    }
    Ok(out)
}

fn parse_error(e: &csv::Error, fallback_line: u64) -> ReportError {
    let line = e.position().map_or(fallback_line, |p| p.line());
    let message = match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
        _ => e.to_string(),
    };
    ReportError::Parse { line, message }
}

/// Diagnostics recomputed from a parsed trace alone.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceAudit {
    pub problem: String,
    pub num_live: usize,
    pub num_steps: usize,
    pub records: usize,
    pub summary: DiagnosticSummary,
    pub insertion: InsertionOrderTest,
}

pub fn audit_trace(trace: &[TraceRecord]) -> Result<TraceAudit> {
    let first = trace.first().ok_or(ReportError::EmptyTrace)?;
    if let Some(bad) = trace
        .iter()
        .position(|t| t.problem != first.problem || t.num_live != first.num_live)
    {
        return Err(ReportError::Parse {
            line: bad as u64 + 2,
            message: "run metadata differs from the first record".into(),
        });
    }
    let records: Vec<IterationRecord> = trace.iter().map(TraceRecord::iteration).collect();
    Ok(TraceAudit {
        problem: first.problem.clone(),
        num_live: first.num_live,
        num_steps: first.num_steps,
        records: records.len(),
        summary: summarize(&records)?,
        insertion: insertion_order_ks(&records, first.num_live)?,
    })
}

/// Histogram rows `(bin_low, bin_high, count)`. Zero-length jumps, if any,
/// come first in a bin from 0 to the lowest populated edge.
pub fn histogram_rows(hist: &RjdHistogram) -> Vec<(f64, f64, usize)> {
    let mut rows = Vec::with_capacity(hist.counts.len() + 1);
    if hist.zero_count > 0 {
        let high = if hist.counts.is_empty() {
            0.0
        } else {
            hist.edges(0).0
        };
        rows.push((0.0, high, hist.zero_count));
    }
    rows.extend(hist.counts.iter().enumerate().map(|(i, &c)| {
        let (lo, hi) = hist.edges(i);
        (lo, hi, c)
    }));
    rows
}

pub fn write_histogram<W: Write>(
    records: &[IterationRecord],
    bins_per_decade: usize,
    mut sink: W,
) -> Result<RjdHistogram> {
    let hist = rjd_histogram(records, bins_per_decade)?;
    let mut out = String::from("bin_low,bin_high,count\n");
    for (lo, hi, c) in histogram_rows(&hist) {
        let _ = writeln!(out, "{},{},{c}", fmt_f64(lo), fmt_f64(hi));
    }
    sink.write_all(out.as_bytes())?;
    sink.flush()?;
    Ok(hist)
}

/// An engine run and how long it took.
#[derive(Debug, Clone)]
pub struct TimedRun {
    pub result: RunResult,
    pub wall_time_s: f64,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub problem: String,
    pub num_live: usize,
    pub num_steps: usize,
    pub seed: u64,
    pub radius_update_interval: usize,
    pub iterations: usize,
    pub likelihood_calls: usize,
    pub logz: f64,
    pub logz_err: f64,
    pub true_logz: Option<f64>,
    pub geometric_mean_rjd: f64,
    pub frac_rjd_above_1: f64,
    pub num_jumps: usize,
    pub zero_jumps: usize,
    pub esjd: f64,
    pub verdict: String,
    pub ks_statistic: f64,
    pub ks_p_value: f64,
    pub recommendation: String,
    pub wall_time_s: f64,
}

impl RunSummary {
    pub fn new(
        run: &TimedRun,
        true_logz: Option<f64>,
        recommendation: Recommendation,
    ) -> Result<Self> {
        let r = &run.result;
        let s = match r.summary {
            Some(s) => s,
            None => summarize(&r.records)?,
        };
        let ks = insertion_order_ks(&r.records, r.num_live)?;
        Ok(RunSummary {
            problem: r.problem_name.clone(),
            num_live: r.num_live,
            num_steps: r.num_steps,
            seed: r.seed,
            radius_update_interval: r.radius_update_interval,
            iterations: r.records.len(),
            likelihood_calls: r.likelihood_calls,
            logz: r.logz,
            logz_err: r.logz_err,
            true_logz,
            geometric_mean_rjd: s.geometric_mean_rjd,
            frac_rjd_above_1: s.frac_rjd_above_1,
            num_jumps: s.num_jumps,
            zero_jumps: s.zero_jumps,
            esjd: s.esjd,
            verdict: s.verdict.as_str().into(),
            ks_statistic: ks.ks_statistic,
            ks_p_value: ks.p_value,
            recommendation: recommendation.as_str().into(),
            wall_time_s: run.wall_time_s,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceRow {
    pub num_steps: usize,
    pub logz: f64,
    pub logz_err: f64,
    pub geometric_mean_rjd: f64,
    pub frac_rjd_above_1: f64,
    pub ks_p_value: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceTable {
    pub problem: String,
    pub num_live: usize,
    /// Ascending in `num_steps`.
    pub rows: Vec<SequenceRow>,
}

impl SequenceTable {
    pub fn to_csv(&self) -> String {
        let mut out = SEQUENCE_HEADER.join(",");
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.num_steps,
                fmt_f64(r.logz),
                fmt_f64(r.logz_err),
                fmt_f64(r.geometric_mean_rjd),
                fmt_f64(r.frac_rjd_above_1),
                fmt_f64(r.ks_p_value),
                fmt_f64(r.wall_time_s),
            );
        }
        out
    }
}

/// Tabulate runs of one problem and live-point count, sorted by steps.
pub fn sequence_table(runs: &[TimedRun]) -> Result<SequenceTable> {
    let first = &runs.first().ok_or(ReportError::NoRuns)?.result;
    let mut rows = Vec::with_capacity(runs.len());
    for run in runs {
        let r = &run.result;
        if r.problem_name != first.problem_name || r.num_live != first.num_live {
            return Err(ReportError::MixedRuns(format!(
                "{} K={} vs {} K={}",
                first.problem_name, first.num_live, r.problem_name, r.num_live
            )));
        }
        let s = match r.summary {
            Some(s) => s,
            None => summarize(&r.records)?,
        };
        rows.push(SequenceRow {
            num_steps: r.num_steps,
            logz: r.logz,
            logz_err: r.logz_err,
            geometric_mean_rjd: s.geometric_mean_rjd,
            frac_rjd_above_1: s.frac_rjd_above_1,
            ks_p_value: insertion_order_ks(&r.records, r.num_live)?.p_value,
            wall_time_s: run.wall_time_s,
        });
    }
    rows.sort_by_key(|r| r.num_steps);
    Ok(SequenceTable {
        problem: first.problem_name.clone(),
        num_live: first.num_live,
        rows,
    })
}

pub fn write_sequence_table<W: Write>(runs: &[TimedRun], mut sink: W) -> Result<SequenceTable> {
    let table = sequence_table(runs)?;
    sink.write_all(table.to_csv().as_bytes())?;
    sink.flush()?;
    Ok(table)
}

/// Write `path` through a sibling temporary file and rename it into place.
pub fn write_atomic<T>(
    path: &Path,
    fill: impl FnOnce(&mut io::BufWriter<fs::File>) -> Result<T>,
) -> Result<T> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    let file = fs::File::create(&tmp)?;
    let mut w = io::BufWriter::new(file);
    let out = match fill(&mut w) {
        Ok(v) => v,
        Err(e) => {
            drop(w);
            let _ = fs::remove_file(&tmp);
            return Err(e);
        }
    };
    w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
    fs::rename(&tmp, path)?;
    Ok(out)
}
