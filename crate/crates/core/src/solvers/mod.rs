//! Solver drivers over synchronous agent rounds.
//!
//! Every iteration reads one snapshot `x^(k)`, lets each agent compute its
//! next block independently (in parallel on the ambient rayon pool), and
//! then assembles `x^(k+1)` in agent order. No agent ever sees a block
//! produced within the same iteration, so results do not depend on the
//! number of worker threads.

mod driver;
pub mod lm;
mod oracle;
mod trace;

pub use driver::{run, run_from};
pub use lm::LinearModel;
pub use oracle::{lemma1_oracle, OracleReport, Violation};
pub use trace::{parse_trace_csv, read_trace_csv, rows_to_csv, Instrumentation, PollRecord, RunTrace, TraceRow, TRACE_HEADER};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::MixingMatrix;
use crate::penalty::PenaltyParams;
use crate::problems::DecentralizedProblem;
use crate::searchcore::{ForcingFunction, PollSet, StepBounds, StepsizeSchedule};

/// Protocol constants used by the default configurations.
pub mod defaults {
    pub const EDGE_PROBABILITY: f64 = 0.5;
    pub const STEP_DECAY: f64 = 0.6;
    pub const FORCING_C: f64 = 1e-8;
    pub const FORCING_TAU: f64 = 0.8;
    pub const THETA: f64 = 0.5;
    pub const FD_STEP: f64 = 1e-7;
    pub const LM_RIDGE: f64 = 1e-10;
    pub const LM_MAX_CONDITION: f64 = 1e12;
}

/// Every numeric constant of the experimental protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Protocol {
    /// Edge probability of the random communication graphs.
    pub edge_probability: f64,
    /// `tau` in `alpha0 / (1+k)^tau`.
    pub step_decay: f64,
    /// `c` in `rho(alpha) = c alpha^(1 + tau_rho)`.
    pub forcing_c: f64,
    pub forcing_tau: f64,
    /// Expansion/contraction factor of the adaptive schedule.
    pub theta: f64,
    pub fd_step: f64,
    pub lm_ridge: f64,
    pub lm_max_condition: f64,
}

impl Default for Protocol {
    fn default() -> Self {
        Self {
            edge_probability: defaults::EDGE_PROBABILITY,
            step_decay: defaults::STEP_DECAY,
            forcing_c: defaults::FORCING_C,
            forcing_tau: defaults::FORCING_TAU,
            theta: defaults::THETA,
            fd_step: defaults::FD_STEP,
            lm_ridge: defaults::LM_RIDGE,
            lm_max_condition: defaults::LM_MAX_CONDITION,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    /// Local Lyapunov decrease.
    DdsL,
    /// Local function decrease followed by a consensus step.
    DdsF,
    /// Zeroth-order DGD with centered finite differences.
    ZoDgdFd,
    /// Zeroth-order DGD with a sliding-window linear model.
    ZoDgdLm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::DdsL, Algorithm::DdsF, Algorithm::ZoDgdFd, Algorithm::ZoDgdLm];

    pub fn id(self) -> &'static str {
        match self {
            Algorithm::DdsL => "dds-l",
            Algorithm::DdsF => "dds-f",
            Algorithm::ZoDgdFd => "zo-dgd-fd",
            Algorithm::ZoDgdLm => "zo-dgd-lm",
        }
    }

    pub fn is_direct_search(self) -> bool {
        matches!(self, Algorithm::DdsL | Algorithm::DdsF)
    }
}

/// Named solver variants compared in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SolverVariant {
    DdsLVanishing,
    DdsLAdaptive,
    DdsFVanishing,
    DdsFAdaptive,
    ZoDgdFd,
    ZoDgdLm,
}

impl SolverVariant {
    pub const ALL: [SolverVariant; 6] = [
        SolverVariant::DdsLVanishing,
        SolverVariant::DdsLAdaptive,
        SolverVariant::DdsFVanishing,
        SolverVariant::DdsFAdaptive,
        SolverVariant::ZoDgdFd,
        SolverVariant::ZoDgdLm,
    ];

    pub fn id(self) -> &'static str {
        match self {
            SolverVariant::DdsLVanishing => "dds-l-vanishing",
            SolverVariant::DdsLAdaptive => "dds-l-adaptive",
            SolverVariant::DdsFVanishing => "dds-f-vanishing",
            SolverVariant::DdsFAdaptive => "dds-f-adaptive",
            SolverVariant::ZoDgdFd => "zo-dgd-fd",
            SolverVariant::ZoDgdLm => "zo-dgd-lm",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.id() == id)
            .ok_or_else(|| Error::UnknownSolver {
                name: id.to_string(),
                known: Self::ALL.map(|v| v.id()).join(", "),
            })
    }

    pub fn algorithm(self) -> Algorithm {
        match self {
            SolverVariant::DdsLVanishing | SolverVariant::DdsLAdaptive => Algorithm::DdsL,
            SolverVariant::DdsFVanishing | SolverVariant::DdsFAdaptive => Algorithm::DdsF,
            SolverVariant::ZoDgdFd => Algorithm::ZoDgdFd,
            SolverVariant::ZoDgdLm => Algorithm::ZoDgdLm,
        }
    }

    /// Whether the penalty parameter changes this variant's behavior.
    pub fn uses_gamma(self) -> bool {
        self.algorithm() == Algorithm::DdsL
    }

    /// Default-protocol configuration for a problem started at `x0`.
    pub fn config(self, x0: &[f64], gamma: Option<f64>, budget: Budget) -> Result<SolverConfig> {
        self.config_with(&Protocol::default(), x0, gamma, budget)
    }

    /// Configuration under `protocol`, with `alpha^0 = |x0| + 1`.
    pub fn config_with(self, protocol: &Protocol, x0: &[f64], gamma: Option<f64>, budget: Budget) -> Result<SolverConfig> {
        let alpha0 = initial_stepsize(x0);
        let vanishing = || StepsizeSchedule::vanishing(alpha0, protocol.step_decay);
        let adaptive = || StepsizeSchedule::adaptive(alpha0, protocol.theta, StepBounds::Unbounded);
        let gamma = || -> Result<PenaltyParams> {
            PenaltyParams::new(gamma.ok_or_else(|| {
                Error::InvalidArgument(format!("{} needs a penalty parameter gamma", self.id()))
            })?)
        };
        let mut cfg = match self {
            SolverVariant::DdsLVanishing => SolverConfig::dds_l(vanishing()?, gamma()?),
            SolverVariant::DdsLAdaptive => SolverConfig::dds_l(adaptive()?, gamma()?),
            SolverVariant::DdsFVanishing => SolverConfig::dds_f(vanishing()?),
            SolverVariant::DdsFAdaptive => SolverConfig::dds_f(adaptive()?),
            SolverVariant::ZoDgdFd => SolverConfig::zo_dgd_fd(vanishing()?),
            SolverVariant::ZoDgdLm => SolverConfig::zo_dgd_lm(vanishing()?),
        };
        if cfg.forcing.is_some() {
            cfg.forcing = Some(ForcingFunction::new(protocol.forcing_c, protocol.forcing_tau)?);
        }
        if cfg.fd_step.is_some() {
            cfg.fd_step = Some(protocol.fd_step);
        }
        if cfg.model.is_some() {
            cfg.model = Some(LinearModel {
                ridge: protocol.lm_ridge,
                max_condition: protocol.lm_max_condition,
            });
        }
        Ok(cfg.with_budget(budget))
    }
}

/// `alpha^0 = |x0| + 1`.
pub fn initial_stepsize(x0: &[f64]) -> f64 {
    crate::stacked::norm2(x0) + 1.0
}

/// Stopping rule checked at iteration boundaries: a run stops as soon as
/// the cumulative solver evaluations reach `max_evals` or the iteration
/// count reaches `max_iters`. The round in flight always completes, so the
/// final count can exceed `max_evals` by at most one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub max_evals: Option<u64>,
    pub max_iters: Option<u64>,
}

impl Budget {
    pub fn evals(max_evals: u64) -> Self {
        Self {
            max_evals: Some(max_evals),
            max_iters: None,
        }
    }

    pub fn iterations(max_iters: u64) -> Self {
        Self {
            max_evals: None,
            max_iters: Some(max_iters),
        }
    }

    pub fn both(max_evals: u64, max_iters: u64) -> Self {
        Self {
            max_evals: Some(max_evals),
            max_iters: Some(max_iters),
        }
    }

    /// `100 n` total local evaluations.
    pub fn toy(n: usize) -> Self {
        Self::evals(100 * n as u64)
    }

    /// `400 n m` total local evaluations or 500 iterations, whichever first.
    pub fn suite(n: usize, m: usize) -> Self {
        Self::both(400 * (n * m) as u64, 500)
    }

    pub fn exhausted(&self, evals: u64, iters: u64) -> bool {
        self.max_evals.is_some_and(|b| evals >= b) || self.max_iters.is_some_and(|b| iters >= b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub schedule: StepsizeSchedule,
    /// Sufficient-decrease threshold (direct search only).
    pub forcing: Option<ForcingFunction>,
    /// Penalty parameter (local Lyapunov variant only).
    pub penalty: Option<PenaltyParams>,
    /// Finite-difference step (zeroth-order variants only).
    pub fd_step: Option<f64>,
    /// Affine-fit parameters (linear-model variant only).
    pub model: Option<LinearModel>,
    /// Per-agent poll sets; `None` means the coordinate set for everyone.
    pub poll_sets: Option<Vec<PollSet>>,
    pub budget: Budget,
    /// Record snapshots and poll records for [`lemma1_oracle`].
    pub instrument: bool,
}

impl SolverConfig {
    fn base(algorithm: Algorithm, schedule: StepsizeSchedule) -> Self {
        Self {
            algorithm,
            schedule,
            forcing: None,
            penalty: None,
            fd_step: None,
            model: None,
            poll_sets: None,
            budget: Budget::iterations(500),
            instrument: false,
        }
    }

    fn default_forcing() -> ForcingFunction {
        ForcingFunction::new(defaults::FORCING_C, defaults::FORCING_TAU).expect("constant forcing parameters are valid")
    }

    pub fn dds_l(schedule: StepsizeSchedule, penalty: PenaltyParams) -> Self {
        Self {
            forcing: Some(Self::default_forcing()),
            penalty: Some(penalty),
            ..Self::base(Algorithm::DdsL, schedule)
        }
    }

    pub fn dds_f(schedule: StepsizeSchedule) -> Self {
        Self {
            forcing: Some(Self::default_forcing()),
            ..Self::base(Algorithm::DdsF, schedule)
        }
    }

    pub fn zo_dgd_fd(schedule: StepsizeSchedule) -> Self {
        Self {
            fd_step: Some(defaults::FD_STEP),
            ..Self::base(Algorithm::ZoDgdFd, schedule)
        }
    }

    pub fn zo_dgd_lm(schedule: StepsizeSchedule) -> Self {
        Self {
            fd_step: Some(defaults::FD_STEP),
            model: Some(LinearModel::default()),
            ..Self::base(Algorithm::ZoDgdLm, schedule)
        }
    }

    pub fn with_budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_forcing(mut self, forcing: ForcingFunction) -> Self {
        self.forcing = Some(forcing);
        self
    }

    pub fn with_poll_sets(mut self, sets: Vec<PollSet>) -> Self {
        self.poll_sets = Some(sets);
        self
    }

    pub fn instrumented(mut self) -> Self {
        self.instrument = true;
        self
    }

    /// Checks that exactly the parameters the algorithm consumes are set
    /// and that they fit the problem shape.
    pub fn validate(&self, problem: &DecentralizedProblem, w: &MixingMatrix) -> Result<()> {
        let (m, n) = (problem.agents(), problem.dim());
        if w.agents() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: w.agents(),
            });
        }
        let id = self.algorithm.id();
        let bad = |what: &str| Err(Error::InvalidArgument(format!("{id}: {what}")));
        if self.budget.max_evals.is_none() && self.budget.max_iters.is_none() {
            return bad("budget needs an evaluation or iteration cap");
        }
        match self.algorithm {
            Algorithm::DdsL | Algorithm::DdsF => {
                if self.forcing.is_none() {
                    return bad("forcing function required");
                }
                if self.fd_step.is_some() || self.model.is_some() {
                    return bad("finite differences and linear models are not used by direct search");
                }
                if (self.algorithm == Algorithm::DdsL) != self.penalty.is_some() {
                    return bad("gamma must be set for dds-l and only for dds-l");
                }
                if let Some(sets) = &self.poll_sets {
                    if sets.len() != m {
                        return bad(&format!("expected {m} poll sets, got {}", sets.len()));
                    }
                    if let Some(s) = sets.iter().find(|s| s.dim() != n || s.is_empty()) {
                        return bad(&format!("poll set of dimension {} for problem dimension {n}", s.dim()));
                    }
                }
            }
            Algorithm::ZoDgdFd | Algorithm::ZoDgdLm => {
                if self.forcing.is_some() || self.penalty.is_some() || self.poll_sets.is_some() {
                    return bad("forcing, gamma and poll sets are not used by zeroth-order DGD");
                }
                if !self.schedule.is_shared() {
                    return bad("zeroth-order DGD needs the vanishing schedule");
                }
                match self.fd_step {
                    Some(h) if h > 0.0 && h.is_finite() => {}
                    _ => return bad("positive finite-difference step required"),
                }
                if (self.algorithm == Algorithm::ZoDgdLm) != self.model.is_some() {
                    return bad("linear-model parameters must be set for zo-dgd-lm and only for zo-dgd-lm");
                }
                if let Some(m) = self.model {
                    if !(m.ridge >= 0.0 && m.max_condition > 1.0) {
                        return bad("linear model needs ridge >= 0 and max_condition > 1");
                    }
                }
            }
        }
        Ok(())
    }
}
