//! Metrics, convergence tests and performance/data profiles.

mod profile;

pub use profile::{
    all_profiles, data_profile, emit_profiles, performance_profile, profile_input, ProblemRuns, ProfileCurves,
    ProfileInput, ProfileKind, ProfileSet, LONG_FORMAT_FILE,
};

use crate::error::{Error, Result};
use crate::problems::DecentralizedProblem;
use crate::solvers::TraceRow;
use crate::stacked::{dist, Stacked};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricTriple {
    /// `sum_i f_i(x_i)`.
    pub f_at_iterates: f64,
    /// `sum_i f_i(x_bar)`.
    pub f_at_mean: f64,
    /// `sum_i |x_i - x_bar|`.
    pub consensus: f64,
}

/// Evaluates the three run metrics at `x`, on the monitoring channel.
pub fn metrics(problem: &DecentralizedProblem, x: &Stacked) -> Result<MetricTriple> {
    x.check_shape(problem.agents())?;
    let mean = x.mean_block();
    let mut f_at_iterates = 0.0;
    let mut f_at_mean = 0.0;
    let mut consensus = 0.0;
    for (i, xi) in x.blocks().enumerate() {
        f_at_iterates += problem.monitor_eval(i, xi)?;
        f_at_mean += problem.monitor_eval(i, &mean)?;
        consensus += dist(xi, &mean);
    }
    Ok(MetricTriple {
        f_at_iterates,
        f_at_mean,
        consensus,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    FIterates,
    FMean,
    Consensus,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::FIterates, Metric::FMean, Metric::Consensus];

    pub fn id(self) -> &'static str {
        match self {
            Metric::FIterates => "f_iterates",
            Metric::FMean => "f_mean",
            Metric::Consensus => "consensus",
        }
    }

    pub fn of(self, row: &TraceRow) -> f64 {
        match self {
            Metric::FIterates => row.f_iterates,
            Metric::FMean => row.f_mean,
            Metric::Consensus => row.consensus,
        }
    }

    /// First row the convergence test scans from. Optimality metrics start
    /// at `x^(0)`; the consensus metric is `0` at an identical start, so its
    /// test is anchored at the first peak of the trace instead.
    pub fn anchor(self, rows: &[TraceRow]) -> usize {
        match self {
            Metric::Consensus => {
                let mut best = 0;
                for (k, r) in rows.iter().enumerate() {
                    if r.consensus > rows[best].consensus {
                        best = k;
                    }
                }
                best
            }
            _ => 0,
        }
    }
}

/// Smallest cumulative evaluation count at which
/// `metric <= opt_low + alpha_tol (opt_start - opt_low)`, or `None` if the
/// trace never gets there.
pub fn convergence_index(
    rows: &[TraceRow],
    metric: Metric,
    alpha_tol: f64,
    opt_low: f64,
    opt_start: f64,
) -> Result<Option<u64>> {
    if !(alpha_tol > 0.0 && alpha_tol <= 1.0) {
        return Err(Error::InvalidArgument(format!("tolerance must lie in (0, 1], got {alpha_tol}")));
    }
    if opt_low > opt_start {
        return Err(Error::Profile(format!(
            "best value {opt_low} exceeds the starting value {opt_start}"
        )));
    }
    let threshold = opt_low + alpha_tol * (opt_start - opt_low);
    Ok(rows.iter().find(|r| metric.of(r) <= threshold).map(|r| r.cum_evals))
}

/// Convergence test for one trace with its metric-specific anchor:
/// `opt_start` is the value at the anchor row and scanning starts there.
pub fn solve_time(rows: &[TraceRow], metric: Metric, alpha_tol: f64, opt_low: f64) -> Result<Option<u64>> {
    if rows.is_empty() {
        return Ok(None);
    }
    let a = metric.anchor(rows);
    convergence_index(&rows[a..], metric, alpha_tol, opt_low, metric.of(&rows[a]))
}

/// Best value of `metric` over a set of traces, counting only rows at or
/// after each trace's anchor.
pub fn best_value<'a>(traces: impl IntoIterator<Item = &'a [TraceRow]>, metric: Metric) -> f64 {
    traces
        .into_iter()
        .flat_map(|rows| rows[metric.anchor(rows).min(rows.len())..].iter())
        .map(|r| metric.of(r))
        .filter(|v| !v.is_nan())
        .fold(f64::INFINITY, f64::min)
}
