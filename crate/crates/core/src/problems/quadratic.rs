use std::sync::Arc;

use super::{DecentralizedProblem, LocalObjective};
use crate::error::{Error, Result};

/// `f_i(x) = sum_k c_ik (x_k - t_ik)^2` with nonnegative curvatures.
///
/// Small instances with hand-computable Lipschitz constants; all-zero
/// curvatures give constant objectives.
#[derive(Debug, Clone)]
pub struct DiagonalQuadratic {
    curvature: Vec<Vec<f64>>,
    target: Vec<Vec<f64>>,
}

impl DiagonalQuadratic {
    pub fn new(curvature: Vec<Vec<f64>>, target: Vec<Vec<f64>>) -> Result<Self> {
        let m = curvature.len();
        if m == 0 || target.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: target.len(),
            });
        }
        let n = curvature[0].len();
        for (c, t) in curvature.iter().zip(&target) {
            if c.len() != n || t.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: c.len().max(t.len()),
                });
            }
            if c.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) || t.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("curvatures must be finite and nonnegative".into()));
            }
        }
        Ok(Self { curvature, target })
    }

    /// Lipschitz constant of `∇f_i`: `2 max_k c_ik`.
    pub fn lipschitz(&self, agent: usize) -> f64 {
        2.0 * self.curvature[agent].iter().cloned().fold(0.0, f64::max)
    }

    pub fn into_problem(self, name: impl Into<String>, x0: Vec<f64>) -> Result<DecentralizedProblem> {
        DecentralizedProblem::new(name, x0, Arc::new(self))
    }
}

impl LocalObjective for DiagonalQuadratic {
    fn dim(&self) -> usize {
        self.curvature[0].len()
    }

    fn agents(&self) -> usize {
        self.curvature.len()
    }

    fn value(&self, agent: usize, x: &[f64]) -> f64 {
        let (c, t) = (&self.curvature[agent], &self.target[agent]);
        x.iter().zip(c).zip(t).map(|((x, c), t)| c * (x - t) * (x - t)).sum()
    }

    fn gradient(&self, agent: usize, x: &[f64]) -> Vec<f64> {
        let (c, t) = (&self.curvature[agent], &self.target[agent]);
        x.iter().zip(c).zip(t).map(|((x, c), t)| 2.0 * c * (x - t)).collect()
    }
}

/// `m` agents with `f_i ≡ 0` in dimension `n`.
pub fn constant_problem(m: usize, n: usize) -> Result<DecentralizedProblem> {
    DiagonalQuadratic::new(vec![vec![0.0; n]; m], vec![vec![0.0; n]; m])?.into_problem("constant", vec![0.0; n])
}
