use rayon::prelude::*;

use super::lm::ModelWindow;
use super::trace::{Instrumentation, PollRecord, RunTrace, TraceRow};
use super::{Algorithm, SolverConfig};
use crate::bench::metrics;
use crate::error::{Error, Result};
use crate::network::MixingMatrix;
use crate::penalty::{LocalPenalty, NeighborView};
use crate::problems::DecentralizedProblem;
use crate::searchcore::{poll, update_stepsize, PollSet};
use crate::stacked::Stacked;

/// Per-agent loop state carried between iterations.
#[derive(Debug, Clone)]
struct AgentState {
    alpha: f64,
    success: bool,
    /// Last solver-visible `(point, f_i(point))`, reused as a poll baseline
    /// when the agent's copy has not moved.
    cached: Option<(Vec<f64>, f64)>,
    window: Option<ModelWindow>,
}

struct AgentStep {
    block: Vec<f64>,
    success: bool,
    evals: u64,
    record: Option<PollRecord>,
}

struct Ctx<'a> {
    problem: &'a DecentralizedProblem,
    w: &'a MixingMatrix,
    config: &'a SolverConfig,
    poll_sets: Vec<PollSet>,
}

/// Runs the configured algorithm from the consensus start `(x0, ..., x0)`.
///
/// Configuration errors are returned as `Err`. An evaluation failure during
/// the run stops it and yields a trace with `complete == false` covering the
/// iterations finished before the failure.
pub fn run(problem: &DecentralizedProblem, w: &MixingMatrix, config: &SolverConfig) -> Result<RunTrace> {
    run_from(problem, w, config, Stacked::consensus(problem.agents(), problem.x0()))
}

/// Like [`run`], but from an arbitrary stacked start `x^(0)`.
pub fn run_from(
    problem: &DecentralizedProblem,
    w: &MixingMatrix,
    config: &SolverConfig,
    start: Stacked,
) -> Result<RunTrace> {
    config.validate(problem, w)?;
    let (m, n) = (problem.agents(), problem.dim());
    if start.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: start.dim(),
        });
    }
    start.check_shape(m)?;
    if !start.is_finite() {
        return Err(Error::InvalidArgument("start point must be finite".into()));
    }
    let poll_sets = match &config.poll_sets {
        Some(sets) => sets.clone(),
        None if config.algorithm.is_direct_search() => vec![PollSet::canonical(n); m],
        None => Vec::new(),
    };
    let ctx = Ctx {
        problem,
        w,
        config,
        poll_sets,
    };
    let start_counts: Vec<u64> = (0..m).map(|i| problem.evals(i)).collect();

    let alpha0 = config.schedule.initial();
    let mut states: Vec<AgentState> = (0..m)
        .map(|_| AgentState {
            alpha: alpha0,
            success: false,
            cached: None,
            window: config.model.map(|model| ModelWindow::for_dim(n, model)),
        })
        .collect();

    let mut x = start;
    let mut trace = RunTrace {
        solver: config.algorithm.id().to_string(),
        rows: Vec::new(),
        alphas: Vec::new(),
        success_sets: Vec::new(),
        final_iterate: x.clone(),
        per_agent_evals: vec![0; m],
        complete: true,
        failure: None,
        theory_compliant: config.schedule.theory_compliant(),
        instrumentation: config.instrument.then(Instrumentation::default),
    };

    let mut cum_evals = 0u64;
    let mut k = 0u64;
    if let Err(e) = record_row(&mut trace, problem, &x, &states, 0, cum_evals) {
        trace.complete = false;
        trace.failure = Some(e.to_string());
    }
    while trace.complete && !config.budget.exhausted(cum_evals, k) {
        let results: Vec<Result<AgentStep>> = states
            .par_iter_mut()
            .enumerate()
            .map(|(i, st)| ctx.step(i, st, &x, k))
            .collect();
        let mut next = Stacked::zeros(m, n);
        let mut successes = Vec::new();
        let mut records = Vec::new();
        let mut failure = None;
        for (i, r) in results.into_iter().enumerate() {
            match r {
                Ok(step) => {
                    next.block_mut(i).copy_from_slice(&step.block);
                    cum_evals += step.evals;
                    if step.success {
                        successes.push(i);
                    }
                    records.extend(step.record);
                }
                Err(e) if failure.is_none() => failure = Some(e),
                Err(_) => {}
            }
        }
        if let Some(e) = failure {
            trace.complete = false;
            trace.failure = Some(e.to_string());
            break;
        }
        if !next.is_finite() {
            trace.complete = false;
            trace.failure = Some(format!("non-finite iterate after iteration {k}"));
            break;
        }
        if let Some(inst) = trace.instrumentation.as_mut() {
            inst.snapshots.push(x.clone());
            inst.polls.extend(records);
        }
        for st in states.iter_mut() {
            st.alpha = update_stepsize(&config.schedule, st.alpha, st.success, k);
        }
        trace.success_sets.push(successes);
        x = next;
        k += 1;
        if let Err(e) = record_row(&mut trace, problem, &x, &states, k, cum_evals) {
            trace.complete = false;
            trace.failure = Some(e.to_string());
        }
    }
    trace.final_iterate = x;
    trace.per_agent_evals = (0..m).map(|i| problem.evals(i) - start_counts[i]).collect();
    Ok(trace)
}

fn record_row(
    trace: &mut RunTrace,
    problem: &DecentralizedProblem,
    x: &Stacked,
    states: &[AgentState],
    k: u64,
    cum_evals: u64,
) -> Result<()> {
    let alphas: Vec<f64> = states.iter().map(|s| s.alpha).collect();
    let (alpha_min, alpha_max) = alphas
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| (lo.min(a), hi.max(a)));
    let successes = if k == 0 { 0 } else { states.iter().filter(|s| s.success).count() };
    trace.alphas.push(alphas);
    let mt = metrics(problem, x)?;
    trace.rows.push(TraceRow {
        k,
        f_iterates: mt.f_at_iterates,
        f_mean: mt.f_at_mean,
        consensus: mt.consensus,
        alpha_min,
        alpha_max,
        successes,
        cum_evals,
    });
    Ok(())
}

impl Ctx<'_> {
    fn step(&self, i: usize, st: &mut AgentState, x: &Stacked, k: u64) -> Result<AgentStep> {
        match self.config.algorithm {
            Algorithm::DdsL => self.step_dds_l(i, st, x, k),
            Algorithm::DdsF => self.step_dds_f(i, st, x, k),
            Algorithm::ZoDgdFd | Algorithm::ZoDgdLm => self.step_zo_dgd(i, st, x),
        }
    }

    /// `f_i(x_i)`, reusing the cached value if the point is bitwise unchanged.
    fn baseline_f(&self, i: usize, st: &AgentState, xi: &[f64]) -> Result<(f64, u64)> {
        match &st.cached {
            Some((p, v)) if p.as_slice() == xi => Ok((*v, 0)),
            _ => Ok((self.problem.eval_local(i, xi)?, 1)),
        }
    }

    fn step_dds_l(&self, i: usize, st: &mut AgentState, x: &Stacked, k: u64) -> Result<AgentStep> {
        let penalty = self.config.penalty.expect("validated");
        let forcing = self.config.forcing.as_ref().expect("validated");
        let xi = x.block(i);
        let local = LocalPenalty::new(self.w, i, NeighborView::from_snapshot(i, x), penalty)?;
        let (f0, mut evals) = self.baseline_f(i, st, xi)?;
        let baseline = f0 + local.value(xi);
        let mut last_f = f0;
        let outcome = poll(
            |y| {
                let f = self.problem.eval_local(i, y)?;
                last_f = f;
                Ok(f + local.value(y))
            },
            xi,
            st.alpha,
            &self.poll_sets[i],
            forcing,
            Some(baseline),
        )?;
        evals += outcome.evals;
        let record = self.config.instrument.then(|| PollRecord {
            k,
            agent: i,
            alpha: st.alpha,
            baseline,
            accepted: outcome.step.as_ref().map(|s| s.value),
            forcing: forcing.value(st.alpha),
        });
        st.success = outcome.step.is_some();
        let block = match outcome.step {
            Some(s) => {
                st.cached = Some((s.trial.clone(), last_f));
                s.trial
            }
            None => {
                st.cached = Some((xi.to_vec(), f0));
                xi.to_vec()
            }
        };
        Ok(AgentStep {
            block,
            success: st.success,
            evals,
            record,
        })
    }

    fn step_dds_f(&self, i: usize, st: &mut AgentState, x: &Stacked, k: u64) -> Result<AgentStep> {
        let forcing = self.config.forcing.as_ref().expect("validated");
        let xi = x.block(i);
        let (f0, mut evals) = self.baseline_f(i, st, xi)?;
        let outcome = poll(
            |y| self.problem.eval_local(i, y),
            xi,
            st.alpha,
            &self.poll_sets[i],
            forcing,
            Some(f0),
        )?;
        evals += outcome.evals;
        let record = self.config.instrument.then(|| PollRecord {
            k,
            agent: i,
            alpha: st.alpha,
            baseline: f0,
            accepted: outcome.step.as_ref().map(|s| s.value),
            forcing: forcing.value(st.alpha),
        });
        let mut block = vec![0.0; xi.len()];
        self.w.mix_block(x, i, &mut block);
        st.success = outcome.step.is_some();
        match outcome.step {
            Some(s) => {
                let d = &self.poll_sets[i].directions()[s.direction];
                for (b, dk) in block.iter_mut().zip(d) {
                    *b += st.alpha * dk;
                }
                st.cached = Some((s.trial, s.value));
            }
            None => st.cached = Some((xi.to_vec(), f0)),
        }
        Ok(AgentStep {
            block,
            success: st.success,
            evals,
            record,
        })
    }

    fn step_zo_dgd(&self, i: usize, st: &mut AgentState, x: &Stacked) -> Result<AgentStep> {
        let h = self.config.fd_step.expect("validated");
        let xi = x.block(i);
        let mut evals = 0;
        let grad = match st.window.as_mut() {
            None => {
                evals += 2 * xi.len() as u64;
                centered_fd(self.problem, i, xi, h, None)?
            }
            Some(window) => {
                let fx = self.problem.eval_local(i, xi)?;
                evals += 1;
                window.push(xi, fx);
                match window.slope(xi) {
                    Some(g) => g,
                    None => {
                        evals += 2 * xi.len() as u64;
                        centered_fd(self.problem, i, xi, h, Some(window))?
                    }
                }
            }
        };
        let mut block = vec![0.0; xi.len()];
        self.w.mix_block(x, i, &mut block);
        for (b, g) in block.iter_mut().zip(&grad) {
            *b -= st.alpha * g;
        }
        st.success = false;
        Ok(AgentStep {
            block,
            success: false,
            evals,
            record: None,
        })
    }
}

/// `sum_l [(f(x + h e_l) - f(x - h e_l)) / 2h] e_l`, spending `2n`
/// evaluations. Stencil points are appended to `window` when given.
fn centered_fd(
    problem: &DecentralizedProblem,
    agent: usize,
    x: &[f64],
    h: f64,
    mut window: Option<&mut ModelWindow>,
) -> Result<Vec<f64>> {
    let mut probe = x.to_vec();
    let mut g = vec![0.0; x.len()];
    for l in 0..x.len() {
        probe[l] = x[l] + h;
        let plus = problem.eval_local(agent, &probe)?;
        if let Some(w) = window.as_deref_mut() {
            w.push(&probe, plus);
        }
        probe[l] = x[l] - h;
        let minus = problem.eval_local(agent, &probe)?;
        if let Some(w) = window.as_deref_mut() {
            w.push(&probe, minus);
        }
        probe[l] = x[l];
        g[l] = (plus - minus) / (2.0 * h);
    }
    if g.iter().all(|v| v.is_finite()) {
        Ok(g)
    } else {
        Err(Error::EvaluationFailed {
            agent,
            reason: "non-finite finite-difference gradient".into(),
        })
    }
}
