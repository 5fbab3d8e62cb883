//! Small hand-built instances with known behavior.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::network::MixingMatrix;
use crate::problems::{DecentralizedProblem, DiagonalQuadratic};
use crate::searchcore::PollSet;

/// Two agents in the plane with `f_1(x) = (x_1 - 1)^2`, `f_2(x) = x_2^2`,
/// complete averaging `W = ones(2) / 2` and start `x0 = [0, 1]`.
///
/// With the poll orders of [`counterexample_poll_sets`] and a small enough
/// vanishing stepsize, both agents succeed at every iteration along
/// opposite directions, so the block average never leaves `[0, 1]` while
/// the aggregate objective stays far from its minimum.
pub struct Counterexample {
    pub problem: DecentralizedProblem,
    pub mixing: MixingMatrix,
    pub poll_sets: Vec<PollSet>,
    pub objective: DiagonalQuadratic,
}

pub fn counterexample() -> Result<Counterexample> {
    let objective = DiagonalQuadratic::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![vec![1.0, 0.0], vec![0.0, 0.0]])?;
    let problem = objective.clone().into_problem("counterexample", vec![0.0, 1.0])?;
    let mixing = MixingMatrix::from_weights(DMatrix::from_element(2, 2, 0.5))?;
    Ok(Counterexample {
        problem,
        mixing,
        poll_sets: counterexample_poll_sets()?,
        objective,
    })
}

/// Agent 1 polls `d = [1, 1] / sqrt(2)` first, agent 2 polls `-d` first;
/// both sets are completed to a positive spanning set by `±[1, -1] / sqrt(2)`.
pub fn counterexample_poll_sets() -> Result<Vec<PollSet>> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let d = vec![s, s];
    let neg_d = vec![-s, -s];
    let e = vec![s, -s];
    let neg_e = vec![-s, s];
    Ok(vec![
        PollSet::new(vec![d.clone(), neg_d.clone(), e.clone(), neg_e.clone()], s)?,
        PollSet::new(vec![neg_d, d, e, neg_e], s)?,
    ])
}
