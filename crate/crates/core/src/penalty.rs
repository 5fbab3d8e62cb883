//! Quadratic consensus penalty and per-agent Lyapunov functions.
//!
//! The penalized objective is `L(x; gamma) = F(x) + P(x; gamma)` with
//! `P(x; gamma) = x^T (I - W ⊗ I_n) x / (2 gamma)`. The penalty is
//! evaluated locally as `sum_i x_i^T (x_i - x_hat_i) / (2 gamma)`, which is
//! exactly the quadratic form. The squared-residual sum
//! `sum_i |x_hat_i - x_i|^2` equals `x^T (I - W)^2 x` instead and is
//! exposed separately as [`mixing_residual`].

use crate::error::{Error, Result};
use crate::network::MixingMatrix;
use crate::problems::DecentralizedProblem;
use crate::stacked::{dot, Stacked};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyParams {
    gamma: f64,
}

impl PenaltyParams {
    pub fn new(gamma: f64) -> Result<Self> {
        if gamma > 0.0 && gamma.is_finite() {
            Ok(Self { gamma })
        } else {
            Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")))
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// `x^T (I - Ŵ) x / (2 gamma)`.
pub fn penalty_value(w: &MixingMatrix, x: &Stacked, params: PenaltyParams) -> Result<f64> {
    x.check_shape(w.agents())?;
    let mut mixed = vec![0.0; x.dim()];
    let mut total = 0.0;
    for i in 0..w.agents() {
        w.mix_block(x, i, &mut mixed);
        let xi = x.block(i);
        total += xi.iter().zip(&mixed).map(|(a, h)| a * (a - h)).sum::<f64>();
    }
    Ok(total / (2.0 * params.gamma))
}

/// `sum_i |x_hat_i - x_i|^2 = |(I - Ŵ) x|^2`.
pub fn mixing_residual(w: &MixingMatrix, x: &Stacked) -> Result<f64> {
    x.check_shape(w.agents())?;
    let mut mixed = vec![0.0; x.dim()];
    let mut total = 0.0;
    for i in 0..w.agents() {
        w.mix_block(x, i, &mut mixed);
        total += x
            .block(i)
            .iter()
            .zip(&mixed)
            .map(|(a, h)| (a - h) * (a - h))
            .sum::<f64>();
    }
    Ok(total)
}

/// Neighbor copies seen by one agent, indexed by agent id.
#[derive(Debug, Clone, Copy)]
pub struct NeighborView<'a> {
    agent: usize,
    copies: &'a Stacked,
}

impl<'a> NeighborView<'a> {
    /// View backed by a full stacked snapshot.
    pub fn from_snapshot(agent: usize, copies: &'a Stacked) -> Self {
        Self { agent, copies }
    }

    fn get(&self, neighbor: usize) -> Result<&'a [f64]> {
        if neighbor >= self.copies.agents() {
            return Err(Error::MissingNeighbor {
                agent: self.agent,
                neighbor,
            });
        }
        Ok(self.copies.block(neighbor))
    }
}

/// Penalty contribution of agent `i` as a function of its own copy, with
/// neighbor copies frozen: `[(1 - w_ii)|y|^2 - 2 sum_j w_ij y^T x_j] / (2 gamma)`.
///
/// Precomputes the weighted neighbor sum once so repeated evaluations during
/// a poll cost `O(n)`.
#[derive(Debug, Clone)]
pub struct LocalPenalty {
    self_weight: f64,
    neighbor_sum: Vec<f64>,
    inv_gamma: f64,
}

impl LocalPenalty {
    pub fn new(
        w: &MixingMatrix,
        agent: usize,
        neighbors: NeighborView<'_>,
        params: PenaltyParams,
    ) -> Result<Self> {
        let mut neighbor_sum: Vec<f64> = Vec::new();
        for &j in w.neighbors(agent) {
            let xj = neighbors.get(j)?;
            if neighbor_sum.is_empty() {
                neighbor_sum = vec![0.0; xj.len()];
            }
            let wij = w.weight(agent, j);
            for (s, v) in neighbor_sum.iter_mut().zip(xj) {
                *s += wij * v;
            }
        }
        if neighbor_sum.is_empty() {
            neighbor_sum = vec![0.0; neighbors.copies.dim()];
        }
        Ok(Self {
            self_weight: w.weight(agent, agent),
            neighbor_sum,
            inv_gamma: 1.0 / params.gamma,
        })
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        0.5 * self.inv_gamma * ((1.0 - self.self_weight) * dot(y, y) - 2.0 * dot(y, &self.neighbor_sum))
    }

    pub fn gradient(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .zip(&self.neighbor_sum)
            .map(|(v, s)| self.inv_gamma * ((1.0 - self.self_weight) * v - s))
            .collect()
    }
}

/// `L_i(x_i; x_{N_i}, gamma) = f_i(x_i) + local penalty`, with `f_i(x_i)`
/// evaluated on the monitoring channel.
pub fn lyapunov_local(
    problem: &DecentralizedProblem,
    w: &MixingMatrix,
    agent: usize,
    x_i: &[f64],
    neighbors: NeighborView<'_>,
    params: PenaltyParams,
) -> Result<f64> {
    let local = LocalPenalty::new(w, agent, neighbors, params)?;
    Ok(problem.monitor_eval(agent, x_i)? + local.value(x_i))
}

/// `∇f_i(x_i) + [(1 - w_ii) x_i - sum_j w_ij x_j] / gamma`.
pub fn grad_lyapunov_local(
    problem: &DecentralizedProblem,
    w: &MixingMatrix,
    agent: usize,
    x_i: &[f64],
    neighbors: NeighborView<'_>,
    params: PenaltyParams,
) -> Result<Vec<f64>> {
    let local = LocalPenalty::new(w, agent, neighbors, params)?;
    let mut g = problem.gradient(agent, x_i);
    for (gk, pk) in g.iter_mut().zip(local.gradient(x_i)) {
        *gk += pk;
    }
    Ok(g)
}

/// Stacked gradient of `L(x; gamma)`, one Lyapunov gradient per agent.
pub fn grad_penalized_objective(
    problem: &DecentralizedProblem,
    w: &MixingMatrix,
    x: &Stacked,
    params: PenaltyParams,
) -> Result<Stacked> {
    x.check_shape(w.agents())?;
    let mut out = Stacked::zeros(x.agents(), x.dim());
    for i in 0..x.agents() {
        let g = grad_lyapunov_local(problem, w, i, x.block(i), NeighborView::from_snapshot(i, x), params)?;
        out.block_mut(i).copy_from_slice(&g);
    }
    Ok(out)
}

/// `sum_i f_i(x_i) + P(x; gamma)` on the monitoring channel.
pub fn penalized_objective(
    problem: &DecentralizedProblem,
    w: &MixingMatrix,
    x: &Stacked,
    params: PenaltyParams,
) -> Result<f64> {
    x.check_shape(problem.agents())?;
    let mut total = 0.0;
    for (i, xi) in x.blocks().enumerate() {
        total += problem.monitor_eval(i, xi)?;
    }
    Ok(total + penalty_value(w, x, params)?)
}
