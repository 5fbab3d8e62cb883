use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fmt_f64;
use crate::stacked::Stacked;

pub const TRACE_HEADER: &str =
    "k,metric_f_iterates,metric_f_mean,metric_consensus,alpha_min,alpha_max,successes,cum_evals";

/// One row per recorded iterate `x^(k)`.
///
/// `alpha_min`/`alpha_max` span the stepsizes agents will use at iteration
/// `k`; `successes` counts agents whose iteration `k - 1` was successful;
/// `cum_evals` counts solver-visible evaluations spent to reach `x^(k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub k: u64,
    pub f_iterates: f64,
    pub f_mean: f64,
    pub consensus: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub successes: usize,
    pub cum_evals: u64,
}

/// Everything the Lyapunov-decrease oracle needs to re-check a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Instrumentation {
    /// `x^(k)` for every completed iteration `k`.
    pub snapshots: Vec<Stacked>,
    pub polls: Vec<PollRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PollRecord {
    pub k: u64,
    pub agent: usize,
    pub alpha: f64,
    pub baseline: f64,
    /// Accepted trial value, if any.
    pub accepted: Option<f64>,
    pub forcing: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub solver: String,
    pub rows: Vec<TraceRow>,
    /// `alphas[k][i]`: stepsize of agent `i` at iteration `k`.
    pub alphas: Vec<Vec<f64>>,
    /// `success_sets[k]`: agents successful at iteration `k`.
    pub success_sets: Vec<Vec<usize>>,
    pub final_iterate: Stacked,
    /// Solver-visible evaluations per agent, read from the problem counters.
    pub per_agent_evals: Vec<u64>,
    pub complete: bool,
    pub failure: Option<String>,
    pub theory_compliant: bool,
    pub instrumentation: Option<Instrumentation>,
}

impl RunTrace {
    pub fn iterations(&self) -> u64 {
        self.rows.last().map_or(0, |r| r.k)
    }

    pub fn total_evals(&self) -> u64 {
        self.per_agent_evals.iter().sum()
    }

    pub fn last(&self) -> &TraceRow {
        self.rows.last().expect("a trace always records x^(0)")
    }

    pub fn to_csv(&self) -> String {
        rows_to_csv(&self.rows)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

pub fn rows_to_csv(rows: &[TraceRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.k,
            fmt_f64(r.f_iterates),
            fmt_f64(r.f_mean),
            fmt_f64(r.consensus),
            fmt_f64(r.alpha_min),
            fmt_f64(r.alpha_max),
            r.successes,
            r.cum_evals
        );
    }
    out
}

/// Parses a trace CSV written by [`RunTrace::write_csv`].
pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trace_csv(&text).map_err(|msg| Error::config(path.display().to_string(), msg))
}

pub fn parse_trace_csv(text: &str) -> std::result::Result<Vec<TraceRow>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == TRACE_HEADER => {}
        other => return Err(format!("unexpected trace header {other:?}")),
    }
    let mut rows = Vec::new();
    for (ln, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(format!("line {}: expected 8 fields, got {}", ln + 2, fields.len()));
        }
        let f = |idx: usize| -> std::result::Result<f64, String> {
            fields[idx]
                .parse::<f64>()
                .map_err(|e| format!("line {}: {e}", ln + 2))
        };
        let u = |idx: usize| -> std::result::Result<u64, String> {
            fields[idx]
                .parse::<u64>()
                .map_err(|e| format!("line {}: {e}", ln + 2))
        };
        rows.push(TraceRow {
            k: u(0)?,
            f_iterates: f(1)?,
            f_mean: f(2)?,
            consensus: f(3)?,
            alpha_min: f(4)?,
            alpha_max: f(5)?,
            successes: u(6)? as usize,
            cum_evals: u(7)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn csv_round_trip(values in proptest::collection::vec((any::<f64>(), 0u64..1_000_000), 1..20)) {
            let rows: Vec<TraceRow> = values
                .iter()
                .enumerate()
                .map(|(k, &(v, e))| TraceRow {
                    k: k as u64,
                    f_iterates: v,
                    f_mean: v / 3.0,
                    consensus: v.abs(),
                    alpha_min: 0.5,
                    alpha_max: f64::INFINITY,
                    successes: k % 4,
                    cum_evals: e,
                })
                .collect();
            let parsed = parse_trace_csv(&rows_to_csv(&rows)).unwrap();
            prop_assert_eq!(parsed.len(), rows.len());
            for (a, b) in parsed.iter().zip(&rows) {
                prop_assert!(a.f_iterates.to_bits() == b.f_iterates.to_bits() || (a.f_iterates.is_nan() && b.f_iterates.is_nan()));
                prop_assert_eq!(a.cum_evals, b.cum_evals);
                prop_assert_eq!(a.alpha_max, b.alpha_max);
            }
        }
    }

    #[test]
    fn rejects_wrong_header() {
        assert!(parse_trace_csv("a,b\n1,2\n").is_err());
    }
}
