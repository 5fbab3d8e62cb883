//! Sliding-window affine models for the linear-model gradient estimator.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use super::defaults;

/// Regularization and rank safeguard of the affine fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearModel {
    pub ridge: f64,
    pub max_condition: f64,
}

impl Default for LinearModel {
    fn default() -> Self {
        Self {
            ridge: defaults::LM_RIDGE,
            max_condition: defaults::LM_MAX_CONDITION,
        }
    }
}

/// The most recent `capacity` `(point, value)` pairs seen by one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWindow {
    capacity: usize,
    model: LinearModel,
    points: VecDeque<(Vec<f64>, f64)>,
}

impl ModelWindow {
    /// Window of `2n + 1` pairs.
    pub fn for_dim(n: usize, model: LinearModel) -> Self {
        Self::with_capacity(2 * n + 1, model)
    }

    pub fn with_capacity(capacity: usize, model: LinearModel) -> Self {
        Self {
            capacity: capacity.max(1),
            model,
            points: VecDeque::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, point: &[f64], value: f64) {
        if self.points.len() == self.capacity {
            self.points.pop_front();
        }
        self.points.push_back((point.to_vec(), value));
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Slope of the ridge-regularized affine fit centered at `center`, or
    /// `None` when the window cannot determine one.
    pub fn slope(&self, center: &[f64]) -> Option<Vec<f64>> {
        fit_affine_slope(
            self.points.iter().map(|(p, v)| (p.as_slice(), *v)),
            center,
            self.model.ridge,
            self.model.max_condition,
        )
    }
}

/// Fits `f(y) ≈ c + g^T (y - center)` by least squares with a ridge term
/// `ridge |g|^2` and returns `g`.
///
/// Returns `None` when there are fewer than `n + 1` points or the shifted
/// design `[1 | y_j - center]` has condition number above `max_condition`.
pub fn fit_affine_slope<'a>(
    points: impl Iterator<Item = (&'a [f64], f64)>,
    center: &[f64],
    ridge: f64,
    max_condition: f64,
) -> Option<Vec<f64>> {
    let n = center.len();
    let rows: Vec<(&[f64], f64)> = points.collect();
    let q = rows.len();
    if q < n + 1 {
        return None;
    }
    let design = DMatrix::from_fn(q, n + 1, |r, c| if c == 0 { 1.0 } else { rows[r].0[c - 1] - center[c - 1] });
    let sv = design.clone().singular_values();
    let (hi, lo) = sv.iter().fold((0.0_f64, f64::INFINITY), |(hi, lo), &s| (hi.max(s), lo.min(s)));
    if !(lo > 0.0) || hi / lo > max_condition {
        return None;
    }
    let r = ridge.sqrt();
    let augmented = DMatrix::from_fn(q + n, n + 1, |row, c| {
        if row < q {
            design[(row, c)]
        } else if c == row - q + 1 {
            r
        } else {
            0.0
        }
    });
    let rhs = DVector::from_fn(q + n, |row, _| if row < q { rows[row].1 } else { 0.0 });
    let beta = augmented.svd(true, true).solve(&rhs, 0.0).ok()?;
    let g: Vec<f64> = beta.iter().skip(1).copied().collect();
    g.iter().all(|v| v.is_finite()).then_some(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window_from(points: &[Vec<f64>], f: impl Fn(&[f64]) -> f64) -> ModelWindow {
        let mut w = ModelWindow::with_capacity(points.len(), LinearModel::default());
        for p in points {
            w.push(p, f(p));
        }
        w
    }

    #[test]
    fn recovers_affine_gradient() {
        let g = [1.5, -2.0, 0.25];
        let f = |y: &[f64]| 4.0 + y.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>();
        let pts: Vec<Vec<f64>> = vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![-0.5, 0.3, 0.2],
            vec![0.7, -0.4, 1.1],
            vec![0.2, 0.9, -0.6],
        ];
        let slope = window_from(&pts, f).slope(&[0.3, 0.1, -0.2]).unwrap();
        for (s, t) in slope.iter().zip(&g) {
            assert!((s - t).abs() < 1e-8, "{slope:?}");
        }
    }

    #[test]
    fn identical_points_are_rank_deficient() {
        let pts = vec![vec![1.0, 2.0]; 5];
        assert!(window_from(&pts, |y| y[0]).slope(&[1.0, 2.0]).is_none());
    }

    #[test]
    fn too_few_points() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0]];
        assert!(window_from(&pts, |y| y[0]).slope(&[0.0, 0.0]).is_none());
    }

    #[test]
    fn window_is_fifo() {
        let mut w = ModelWindow::for_dim(1, LinearModel::default());
        for k in 0..5 {
            w.push(&[k as f64], k as f64);
        }
        assert_eq!(w.len(), 3);
        let firsts: Vec<f64> = w.points.iter().map(|(p, _)| p[0]).collect();
        assert_eq!(firsts, vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn slope_error_is_first_order_in_radius() {
        // f(y) = sum_k c_k y_k^2 around x; the least-squares slope error
        // scales linearly with the sampling radius.
        let c = [1.0, 3.0];
        let x = [0.4, -0.7];
        let f = |y: &[f64]| c[0] * y[0] * y[0] + c[1] * y[1] * y[1];
        let truth = [2.0 * c[0] * x[0], 2.0 * c[1] * x[1]];
        let offsets = [[1.0, 0.0], [0.0, 1.0], [0.6, 0.8], [-0.8, 0.6], [0.3, -0.2]];
        let err = |r: f64| {
            let pts: Vec<Vec<f64>> = offsets.iter().map(|o| vec![x[0] + r * o[0], x[1] + r * o[1]]).collect();
            let s = window_from(&pts, f).slope(&x).unwrap();
            ((s[0] - truth[0]).powi(2) + (s[1] - truth[1]).powi(2)).sqrt()
        };
        let ratio = err(1e-2) / err(5e-3);
        assert!((1.5..=2.5).contains(&ratio), "ratio {ratio}");
    }
}
