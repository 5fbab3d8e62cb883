//! Direct-search building blocks: poll sets, forcing functions, sufficient
//! decrease polling and stepsize schedules.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::stacked::{dot, norm2};

const UNIT_TOL: f64 = 1e-12;

/// Ordered set of unit poll directions with a cosine-measure lower bound.
#[derive(Debug, Clone, PartialEq)]
pub struct PollSet {
    directions: Vec<Vec<f64>>,
    kappa: f64,
}

impl PollSet {
    /// `{e_1, ..., e_n, -e_1, ..., -e_n}` with `kappa = 1/sqrt(n)`.
    pub fn canonical(n: usize) -> Self {
        let mut directions = Vec::with_capacity(2 * n);
        for sign in [1.0, -1.0] {
            for k in 0..n {
                let mut d = vec![0.0; n];
                d[k] = sign;
                directions.push(d);
            }
        }
        Self {
            directions,
            kappa: 1.0 / (n as f64).sqrt(),
        }
    }

    /// Custom ordered set. Every direction must have unit norm; `kappa` is
    /// the caller's cosine-measure bound and is not verified here.
    pub fn new(directions: Vec<Vec<f64>>, kappa: f64) -> Result<Self> {
        let n = directions
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidArgument("poll set must not be empty".into()))?;
        for (k, d) in directions.iter().enumerate() {
            if d.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: d.len(),
                });
            }
            if (norm2(d) - 1.0).abs() > UNIT_TOL {
                return Err(Error::InvalidArgument(format!(
                    "poll direction {k} has norm {}, expected 1",
                    norm2(d)
                )));
            }
        }
        Ok(Self { directions, kappa })
    }

    pub fn dim(&self) -> usize {
        self.directions[0].len()
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }
}

/// Monte-Carlo estimate of `min_v max_d d^T v / |v|` over `samples` random
/// directions. Minimizing over a finite sample can only overestimate the
/// true cosine measure.
pub fn cosine_measure_estimate(set: &PollSet, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = set.dim();
    let mut v = vec![0.0; n];
    let mut best = f64::INFINITY;
    for _ in 0..samples {
        let mut norm = 0.0;
        while norm == 0.0 {
            for x in v.iter_mut() {
                *x = StandardNormal.sample(&mut rng);
            }
            norm = norm2(&v);
        }
        let worst_alignment = set
            .directions
            .iter()
            .map(|d| dot(d, &v) / norm)
            .fold(f64::NEG_INFINITY, f64::max);
        best = best.min(worst_alignment);
    }
    best
}

/// `rho(alpha) = c * alpha^(1 + tau)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForcingFunction {
    c: f64,
    tau: f64,
}

impl ForcingFunction {
    pub fn new(c: f64, tau: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::InvalidArgument(format!("forcing coefficient must be positive, got {c}")));
        }
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::InvalidArgument(format!("forcing exponent must lie in (0, 1), got {tau}")));
        }
        Ok(Self { c, tau })
    }

    pub fn coefficient(&self) -> f64 {
        self.c
    }

    pub fn exponent(&self) -> f64 {
        self.tau
    }

    pub fn value(&self, alpha: f64) -> f64 {
        self.c * alpha.powf(1.0 + self.tau)
    }
}

/// Bounds `[alpha_min^(k), alpha_max^(k)]` for the adaptive schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepBounds {
    /// `alpha_min = 0`, `alpha_max = +inf`.
    Unbounded,
    /// `c_min / (1+k)^tau <= alpha <= c_max / (1+k)^tau`.
    Decaying { c_min: f64, c_max: f64, tau: f64 },
}

impl StepBounds {
    pub fn at(&self, k: u64) -> (f64, f64) {
        match *self {
            StepBounds::Unbounded => (0.0, f64::INFINITY),
            StepBounds::Decaying { c_min, c_max, tau } => {
                let s = (1.0 + k as f64).powf(tau);
                (c_min / s, c_max / s)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepsizeSchedule {
    /// `alpha^(k) = alpha0 / (1+k)^tau`, shared by all agents.
    Vanishing { alpha0: f64, tau: f64 },
    /// Per-agent expansion by `1/theta` on success and contraction by
    /// `theta` on failure, clipped to the bounds.
    Adaptive {
        alpha0: f64,
        theta: f64,
        bounds: StepBounds,
    },
}

impl StepsizeSchedule {
    pub fn vanishing(alpha0: f64, tau: f64) -> Result<Self> {
        if !(alpha0 > 0.0) || !(tau > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "vanishing schedule needs alpha0 > 0 and tau > 0, got ({alpha0}, {tau})"
            )));
        }
        Ok(Self::Vanishing { alpha0, tau })
    }

    pub fn adaptive(alpha0: f64, theta: f64, bounds: StepBounds) -> Result<Self> {
        if !(alpha0 > 0.0) || !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "adaptive schedule needs alpha0 > 0 and theta in (0, 1), got ({alpha0}, {theta})"
            )));
        }
        if let StepBounds::Decaying { c_min, c_max, tau } = bounds {
            if !(c_min > 0.0 && c_min < c_max && tau > 0.0) {
                return Err(Error::InvalidArgument("decaying bounds need 0 < c_min < c_max and tau > 0".into()));
            }
        }
        Ok(Self::Adaptive { alpha0, theta, bounds })
    }

    pub fn initial(&self) -> f64 {
        match *self {
            Self::Vanishing { alpha0, .. } | Self::Adaptive { alpha0, .. } => alpha0,
        }
    }

    /// Predefined stepsize at iteration `k` (vanishing schedule only).
    pub fn vanishing_at(alpha0: f64, tau: f64, k: u64) -> f64 {
        alpha0 / (1.0 + k as f64).powf(tau)
    }

    /// Whether every agent shares one stepsize sequence.
    pub fn is_shared(&self) -> bool {
        matches!(self, Self::Vanishing { .. })
    }

    /// `false` for the adaptive mode without decaying bounds, which does
    /// not satisfy the square-summability requirement on `alpha_max`.
    pub fn theory_compliant(&self) -> bool {
        !matches!(
            self,
            Self::Adaptive {
                bounds: StepBounds::Unbounded,
                ..
            }
        )
    }

    pub fn bounds_at(&self, k: u64) -> (f64, f64) {
        match *self {
            Self::Vanishing { alpha0, tau } => {
                let a = Self::vanishing_at(alpha0, tau, k);
                (a, a)
            }
            Self::Adaptive { bounds, .. } => bounds.at(k),
        }
    }
}

/// Stepsize an agent uses at iteration `k + 1`, given the stepsize and poll
/// outcome at iteration `k`.
pub fn update_stepsize(schedule: &StepsizeSchedule, alpha: f64, success: bool, k: u64) -> f64 {
    match *schedule {
        StepsizeSchedule::Vanishing { alpha0, tau } => StepsizeSchedule::vanishing_at(alpha0, tau, k + 1),
        StepsizeSchedule::Adaptive { theta, bounds, .. } => {
            let (lo, hi) = bounds.at(k);
            let next = if success { alpha / theta } else { theta * alpha };
            next.clamp(lo, hi)
        }
    }
}

/// An accepted poll step.
#[derive(Debug, Clone, PartialEq)]
pub struct PollStep {
    pub direction: usize,
    pub trial: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PollOutcome {
    pub baseline: f64,
    pub step: Option<PollStep>,
    /// Objective calls made by this poll, including the baseline when it
    /// was not supplied.
    pub evals: u64,
}

/// Opportunistic polling: walks `set` in order and returns the first
/// direction with `f(x + alpha d) <= f(x) - rho(alpha)`.
///
/// `baseline` reuses a known `f(x)`; otherwise one evaluation is spent on it.
pub fn poll<F>(
    mut objective: F,
    x: &[f64],
    alpha: f64,
    set: &PollSet,
    forcing: &ForcingFunction,
    baseline: Option<f64>,
) -> Result<PollOutcome>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("stepsize must be positive, got {alpha}")));
    }
    if set.dim() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: set.dim(),
        });
    }
    let mut evals = 0;
    let baseline = match baseline {
        Some(v) => v,
        None => {
            evals += 1;
            objective(x)?
        }
    };
    let threshold = baseline - forcing.value(alpha);
    let mut trial = vec![0.0; x.len()];
    for (k, d) in set.directions.iter().enumerate() {
        for ((t, xi), di) in trial.iter_mut().zip(x).zip(d) {
            *t = xi + alpha * di;
        }
        evals += 1;
        let value = objective(&trial).map_err(|e| Error::PollFailed {
            direction: k,
            source: Box::new(e),
        })?;
        if value <= threshold {
            return Ok(PollOutcome {
                baseline,
                step: Some(PollStep {
                    direction: k,
                    trial,
                    value,
                }),
                evals,
            });
        }
    }
    Ok(PollOutcome {
        baseline,
        step: None,
        evals,
    })
}
