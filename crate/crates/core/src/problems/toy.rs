use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{DecentralizedProblem, LocalObjective};
use crate::error::{Error, Result};

/// Separable objective `f_i(x) = a_i / (1 + exp(-x_i)) + b_i ln(1 + x_i^2)`
/// with one agent per coordinate.
#[derive(Debug, Clone)]
pub struct ToyObjective {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl ToyObjective {
    pub fn coefficients(&self) -> (&[f64], &[f64]) {
        (&self.a, &self.b)
    }
}

impl LocalObjective for ToyObjective {
    fn dim(&self) -> usize {
        self.a.len()
    }

    fn agents(&self) -> usize {
        self.a.len()
    }

    fn value(&self, agent: usize, x: &[f64]) -> f64 {
        let t = x[agent];
        self.a[agent] / (1.0 + (-t).exp()) + self.b[agent] * (t * t).ln_1p()
    }

    fn gradient(&self, agent: usize, x: &[f64]) -> Vec<f64> {
        let t = x[agent];
        let e = (-t).exp();
        let mut g = vec![0.0; x.len()];
        g[agent] = self.a[agent] * e / ((1.0 + e) * (1.0 + e)) + 2.0 * self.b[agent] * t / (1.0 + t * t);
        g
    }
}

/// Toy instance of dimension `n` (= number of agents) with `a_i, b_i`
/// drawn i.i.d. standard normal from `seed`; starts at the all-ones vector.
pub fn toy_problem(n: usize, seed: u64) -> Result<DecentralizedProblem> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("toy problem needs n >= 2, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for _ in 0..n {
        a.push(StandardNormal.sample(&mut rng));
        b.push(StandardNormal.sample(&mut rng));
    }
    toy_problem_with_coefficients(a, b)
}

pub fn toy_problem_with_coefficients(a: Vec<f64>, b: Vec<f64>) -> Result<DecentralizedProblem> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let n = a.len();
    DecentralizedProblem::new(format!("toy-{n}"), vec![1.0; n], Arc::new(ToyObjective { a, b }))
}
