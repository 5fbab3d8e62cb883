//! Decentralized test problems with exact evaluation accounting.
//!
//! A [`DecentralizedProblem`] bundles `m` local objectives over a shared
//! dimension `n`. Solver-visible evaluations go through
//! [`DecentralizedProblem::eval_local`] and are counted per agent; metric and
//! diagnostic evaluations go through [`DecentralizedProblem::monitor_eval`]
//! and land on a separate counter so budgets only see solver work.

mod quadratic;
mod residual;
mod toy;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

pub use residual::{
    register_residual_problems, residual_problem, residual_problem_names, ResidualFunction,
    VectorResidualProblem,
};
pub use quadratic::{constant_problem, DiagonalQuadratic};
pub use toy::{toy_problem, toy_problem_with_coefficients, ToyObjective};

use crate::error::{Error, Result};

/// Local objectives `f_i: R^n -> R` with analytic gradients.
///
/// Gradients exist for verification and metrics; solvers never call them.
pub trait LocalObjective: Send + Sync {
    fn dim(&self) -> usize;
    fn agents(&self) -> usize;
    fn value(&self, agent: usize, x: &[f64]) -> f64;
    fn gradient(&self, agent: usize, x: &[f64]) -> Vec<f64>;
}

#[derive(Debug, Default)]
struct EvalCounters {
    per_agent: Vec<AtomicU64>,
    monitor: AtomicU64,
    failures: AtomicU64,
}

impl EvalCounters {
    fn new(m: usize) -> Self {
        Self {
            per_agent: (0..m).map(|_| AtomicU64::new(0)).collect(),
            ..Default::default()
        }
    }
}

pub struct DecentralizedProblem {
    name: String,
    x0: Vec<f64>,
    objective: Arc<dyn LocalObjective>,
    counters: EvalCounters,
}

impl std::fmt::Debug for DecentralizedProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DecentralizedProblem")
            .field("name", &self.name)
            .field("n", &self.dim())
            .field("m", &self.agents())
            .finish()
    }
}

impl DecentralizedProblem {
    pub fn new(name: impl Into<String>, x0: Vec<f64>, objective: Arc<dyn LocalObjective>) -> Result<Self> {
        if x0.len() != objective.dim() {
            return Err(Error::DimensionMismatch {
                expected: objective.dim(),
                actual: x0.len(),
            });
        }
        if objective.agents() == 0 {
            return Err(Error::InvalidArgument("problem needs at least one agent".into()));
        }
        let counters = EvalCounters::new(objective.agents());
        Ok(Self {
            name: name.into(),
            x0,
            objective,
            counters,
        })
    }

    /// Same objective and start, zeroed counters.
    pub fn fresh_copy(&self) -> Self {
        Self {
            name: self.name.clone(),
            x0: self.x0.clone(),
            objective: Arc::clone(&self.objective),
            counters: EvalCounters::new(self.agents()),
        }
    }

    /// Same objective with a different starting point.
    pub fn with_start(&self, x0: Vec<f64>) -> Result<Self> {
        Self::new(self.name.clone(), x0, Arc::clone(&self.objective))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn agents(&self) -> usize {
        self.objective.agents()
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn objective(&self) -> &Arc<dyn LocalObjective> {
        &self.objective
    }

    fn evaluate(&self, agent: usize, x: &[f64]) -> Result<f64> {
        if agent >= self.agents() {
            return Err(Error::InvalidArgument(format!(
                "agent index {agent} out of range for {} agents",
                self.agents()
            )));
        }
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::EvaluationFailed {
                agent,
                reason: "non-finite input point".into(),
            });
        }
        Ok(self.objective.value(agent, x))
    }

    fn check_output(&self, agent: usize, value: f64) -> Result<f64> {
        if value.is_finite() {
            Ok(value)
        } else {
            self.counters.failures.fetch_add(1, Ordering::Relaxed);
            Err(Error::EvaluationFailed {
                agent,
                reason: format!("objective returned {value}"),
            })
        }
    }

    /// Solver-visible evaluation of `f_i(x)`; increments agent `i`'s counter
    /// by exactly one whenever the objective is actually called.
    pub fn eval_local(&self, agent: usize, x: &[f64]) -> Result<f64> {
        let value = self.evaluate(agent, x)?;
        self.counters.per_agent[agent].fetch_add(1, Ordering::Relaxed);
        self.check_output(agent, value)
    }

    /// Evaluation on the monitoring channel (metrics, diagnostics).
    pub fn monitor_eval(&self, agent: usize, x: &[f64]) -> Result<f64> {
        let value = self.evaluate(agent, x)?;
        self.counters.monitor.fetch_add(1, Ordering::Relaxed);
        self.check_output(agent, value)
    }

    pub fn gradient(&self, agent: usize, x: &[f64]) -> Vec<f64> {
        self.objective.gradient(agent, x)
    }

    /// `sum_i f_i(x)` on the monitoring channel.
    pub fn aggregate(&self, x: &[f64]) -> Result<f64> {
        (0..self.agents()).map(|i| self.monitor_eval(i, x)).sum()
    }

    pub fn evals(&self, agent: usize) -> u64 {
        self.counters.per_agent[agent].load(Ordering::Relaxed)
    }

    pub fn total_evals(&self) -> u64 {
        self.counters
            .per_agent
            .iter()
            .map(|c| c.load(Ordering::Relaxed))
            .sum()
    }

    pub fn monitor_evals(&self) -> u64 {
        self.counters.monitor.load(Ordering::Relaxed)
    }

    pub fn failed_evals(&self) -> u64 {
        self.counters.failures.load(Ordering::Relaxed)
    }

    pub fn reset_counters(&self) {
        for c in &self.counters.per_agent {
            c.store(0, Ordering::Relaxed);
        }
        self.counters.monitor.store(0, Ordering::Relaxed);
        self.counters.failures.store(0, Ordering::Relaxed);
    }
}

/// Largest relative discrepancy between an analytic gradient and centered
/// finite differences, `max_k |g_k - fd_k| / max(1, |g|_inf)`.
pub fn gradient_check(f: impl Fn(&[f64]) -> f64, grad: &[f64], x: &[f64]) -> f64 {
    let scale = grad.iter().fold(1.0_f64, |a, g| a.max(g.abs()));
    let mut worst = 0.0_f64;
    let mut probe = x.to_vec();
    for k in 0..x.len() {
        let h = 1e-6 * x[k].abs().max(1.0);
        probe[k] = x[k] + h;
        let plus = f(&probe);
        probe[k] = x[k] - h;
        let minus = f(&probe);
        probe[k] = x[k];
        let fd = (plus - minus) / (2.0 * h);
        worst = worst.max((fd - grad[k]).abs() / scale);
    }
    worst
}

/// Looks up a problem by name: `toy-<n>` (seeded by `seed`) or any
/// registered residual problem.
pub fn problem_by_name(name: &str, seed: u64) -> Result<DecentralizedProblem> {
    if let Some(rest) = name.strip_prefix("toy-") {
        let n: usize = rest.parse().map_err(|_| Error::UnknownProblem {
            name: name.to_string(),
            known: known_problem_list(),
        })?;
        return toy_problem(n, seed);
    }
    Ok(residual_problem(name)?.to_problem())
}

pub(crate) fn known_problem_list() -> String {
    let mut names = vec!["toy-<n>".to_string()];
    names.extend(residual_problem_names().iter().map(|s| s.to_string()));
    names.join(", ")
}
