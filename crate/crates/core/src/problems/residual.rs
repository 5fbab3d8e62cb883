//! Classical smooth nonlinear least-squares vector functions
//! `F: R^n -> R^m` with their standard starting points.
//!
//! Agent `i` owns the squared residual `f_i(x) = F_i(x)^2`. Definitions
//! follow the Moré–Garbow–Hillstrom collection; dimensions follow the
//! benchmark settings commonly used for derivative-free solvers.

use std::f64::consts::PI;
use std::sync::Arc;

use super::{DecentralizedProblem, LocalObjective};
use crate::error::{Error, Result};

pub trait ResidualFunction: Send + Sync {
    fn name(&self) -> &'static str;
    fn dim(&self) -> usize;
    fn residuals(&self) -> usize;
    fn start(&self) -> Vec<f64>;
    fn residual(&self, i: usize, x: &[f64]) -> f64;
    /// Writes row `i` of the Jacobian into `row` (length `dim`).
    fn jacobian_row(&self, i: usize, x: &[f64], row: &mut [f64]);
}

/// A registered vector function, convertible into a decentralized problem.
#[derive(Clone)]
pub struct VectorResidualProblem {
    function: Arc<dyn ResidualFunction>,
}

impl std::fmt::Debug for VectorResidualProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "VectorResidualProblem({}, n={}, m={})",
            self.name(),
            self.dim(),
            self.residuals()
        )
    }
}

impl VectorResidualProblem {
    pub fn new(function: Arc<dyn ResidualFunction>) -> Self {
        Self { function }
    }

    pub fn name(&self) -> &'static str {
        self.function.name()
    }

    pub fn dim(&self) -> usize {
        self.function.dim()
    }

    pub fn residuals(&self) -> usize {
        self.function.residuals()
    }

    pub fn start(&self) -> Vec<f64> {
        self.function.start()
    }

    pub fn residual_vector(&self, x: &[f64]) -> Vec<f64> {
        (0..self.residuals())
            .map(|i| self.function.residual(i, x))
            .collect()
    }

    /// Dense Jacobian, row-major `m x n`.
    pub fn jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        (0..self.residuals())
            .map(|i| {
                let mut row = vec![0.0; self.dim()];
                self.function.jacobian_row(i, x, &mut row);
                row
            })
            .collect()
    }

    pub fn function(&self) -> &Arc<dyn ResidualFunction> {
        &self.function
    }

    pub fn to_problem(&self) -> DecentralizedProblem {
        let objective = Arc::new(SquaredResiduals(Arc::clone(&self.function)));
        DecentralizedProblem::new(self.name(), self.start(), objective)
            .expect("registered residual problems have consistent dimensions")
    }
}

struct SquaredResiduals(Arc<dyn ResidualFunction>);

impl LocalObjective for SquaredResiduals {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn agents(&self) -> usize {
        self.0.residuals()
    }

    fn value(&self, agent: usize, x: &[f64]) -> f64 {
        let r = self.0.residual(agent, x);
        r * r
    }

    fn gradient(&self, agent: usize, x: &[f64]) -> Vec<f64> {
        let r = self.0.residual(agent, x);
        let mut row = vec![0.0; self.0.dim()];
        self.0.jacobian_row(agent, x, &mut row);
        row.iter_mut().for_each(|v| *v *= 2.0 * r);
        row
    }
}

/// All registered vector functions, in a fixed order.
pub fn register_residual_problems() -> Vec<VectorResidualProblem> {
    let functions: Vec<Arc<dyn ResidualFunction>> = vec![
        Arc::new(LinearFullRank { n: 9, m: 45 }),
        Arc::new(LinearRank1 { n: 7, m: 35 }),
        Arc::new(Rosenbrock),
        Arc::new(ExtendedRosenbrock { n: 6 }),
        Arc::new(HelicalValley),
        Arc::new(PowellSingular),
        Arc::new(FreudensteinRoth),
        Arc::new(Bard),
        Arc::new(KowalikOsborne),
        Arc::new(Box3d { m: 10 }),
        Arc::new(JennrichSampson { m: 10 }),
        Arc::new(BrownDennis { m: 20 }),
        Arc::new(Chebyquad { n: 8 }),
        Arc::new(BrownAlmostLinear { n: 10 }),
        Arc::new(Osborne1),
        Arc::new(Watson { n: 6 }),
        Arc::new(Bdqrtic { n: 10 }),
    ];
    functions.into_iter().map(VectorResidualProblem::new).collect()
}

pub fn residual_problem_names() -> Vec<&'static str> {
    register_residual_problems().iter().map(|p| p.name()).collect()
}

pub fn residual_problem(name: &str) -> Result<VectorResidualProblem> {
    let registry = register_residual_problems();
    registry
        .iter()
        .find(|p| p.name() == name)
        .cloned()
        .ok_or_else(|| Error::UnknownProblem {
            name: name.to_string(),
            known: super::known_problem_list(),
        })
}

struct LinearFullRank {
    n: usize,
    m: usize,
}

impl ResidualFunction for LinearFullRank {
    fn name(&self) -> &'static str {
        "linear-full-rank"
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn residuals(&self) -> usize {
        self.m
    }
    fn start(&self) -> Vec<f64> {
        vec![1.0; self.n]
    }
    fn residual(&self, i: usize, x: &[f64]) -> f64 {
        let s = 2.0 / self.m as f64 * x.iter().sum::<f64>();
        if i < self.n {
            x[i] - s - 1.0
        } else {
            -s - 1.0
        }
    }
    fn jacobian_row(&self, i: usize, _x: &[f64], row: &mut [f64]) {
        row.fill(-2.0 / self.m as f64);
        if i < self.n {
            row[i] += 1.0;
        }
    }
}

struct LinearRank1 {
    n: usize,
    m: usize,
}

impl ResidualFunction for LinearRank1 {
    fn name(&self) -> &'static str {
        "linear-rank-1"
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn residuals(&self) -> usize {
        self.m
    }
    fn start(&self) -> Vec<f64> {
        vec![1.0; self.n]
    }
    fn residual(&self, i: usize, x: &[f64]) -> f64 {
        let s: f64 = x.iter().enumerate().map(|(j, v)| (j + 1) as f64 * v).sum();
        (i + 1) as f64 * s - 1.0
    }
    fn jacobian_row(&self, i: usize, _x: &[f64], row: &mut [f64]) {
        for (j, r) in row.iter_mut().enumerate() {
            *r = ((i + 1) * (j + 1)) as f64;
        }
    }
}

struct Rosenbrock;

impl ResidualFunction for Rosenbrock {
    fn name(&self) -> &'static str {
        "rosenbrock"
    }
    fn dim(&self) -> usize {
        2
    }
    fn residuals(&self) -> usize {
        2
    }
    fn start(&self) -> Vec<f64> {
        vec![-1.2, 1.0]
    }
    fn residual(&self, i: usize, x: &[f64]) -> f64 {
        match i {
            0 => 10.0 * (x[1] - x[0] * x[0]),
            _ => 1.0 - x[0],
        }
    }
    fn jacobian_row(&self, i: usize, x: &[f64], row: &mut [f64]) {
        match i {
            0 => {
                row[0] = -20.0 * x[0];
                row[1] = 10.0;
            }
            _ => {
                row[0] = -1.0;
                row[1] = 0.0;
            }
        }
    }
}

struct ExtendedRosenbrock {
    n: usize,
}

impl ResidualFunction for ExtendedRosenbrock {
    fn name(&self) -> &'static str {
        "extended-rosenbrock"
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn residuals(&self) -> usize {
        self.n
    }
    fn start(&self) -> Vec<f64> {
        (0..self.n).map(|j| if j % 2 == 0 { -1.2 } else { 1.0 }).collect()
    }
    fn residual(&self, i: usize, x: &[f64]) -> f64 {
        let k = i / 2 * 2;
        if i % 2 == 0 {
            10.0 * (x[k + 1] - x[k] * x[k])
        } else {
            1.0 - x[k]
        }
    }
    fn jacobian_row(&self, i: usize, x: &[f64], row: &mut [f64]) {
        row.fill(0.0);
        let k = i / 2 * 2;
        if i % 2 == 0 {
            row[k] = -20.0 * x[k];
            row[k + 1] = 10.0;
        } else {
            row[k] = -1.0;
        }
    }
}

struct HelicalValley;

impl HelicalValley {
    fn theta(x: &[f64]) -> f64 {
        if x[0] == 0.0 {
            return 0.25_f64.copysign(x[1]);
        }
        let base = (x[1] / x[0]).atan() / (2.0 * PI);
        if x[0] < 0.0 {
            base + 0.5
        } else {
            base
        }
    }
}

impl ResidualFunction for HelicalValley {
    fn name(&self) -> &'static str {
        "helical-valley"
    }
    fn dim(&self) -> usize {
        3
    }
    fn residuals(&self) -> usize {
        3
    }
    fn start(&self) -> Vec<f64> {
        vec![-1.0, 0.0, 0.0]
    }
    fn residual(&self, i: usize, x: &[f64]) -> f64 {
        match i {
            0 => 10.0 * (x[2] - 10.0 * Self::theta(x)),
            1 => 10.0 * ((x[0] * x[0] + x[1] * x[1]).sqrt() - 1.0),
            _ => x[2],
        }
    }
    fn jacobian_row(&self, i: usize, x: &[f64], row: &mut [f64]) {
        let r2 = x[0] * x[0] + x[1] * x[1];
        match i {
            0 => {
                let c = 100.0 / (2.0 * PI * r2);
                row[0] = c * x[1];
                row[1] = -c * x[0];
                row[2] = 10.0;
            }
            1 => {
                let r = r2.sqrt();
                row[0] = 10.0 * x[0] / r;
                row[1] = 10.0 * x[1] / r;
                row[2] = 0.0;
            }
            _ => {
                row[0] = 0.0;
                row[1] = 0.0;
                row[2] = 1.0;
            }
        }
    }
}

struct PowellSingular;

impl ResidualFunction for PowellSingular {
    fn name(&self) -> &'static str {
        "powell-singular"
    }
    fn dim(&self) -> usize {
        4
    }
    fn residuals(&self) -> usize {
        4
    }
    fn start(&self) -> Vec<f64> {
        vec![3.0, -1.0, 0.0, 1.0]
    }
    fn residual(&self, i: usize, x: &[f64]) -> f64 {
        match i {
            0 => x[0] + 10.0 * x[1],
            1 => 5f64.sqrt() * (x[2] - x[3]),
            2 => (x[1] - 2.0 * x[2]).powi(2),
            _ => 10f64.sqrt() * (x[0] - x[3]).powi(2),
        }
    }
    fn jacobian_row(&self, i: usize, x: &[f64], row: &mut [f64]) {
        row.fill(0.0);
        match i {
            0 => {
                row[0] = 1.0;
                row[1] = 10.0;
            }
            1 => {
                row[2] = 5f64.sqrt();
                row[3] = -5f64.sqrt();
            }
            2 => {
                let d = 2.0 * (x[1] - 2.0 * x[2]);
                row[1] = d;
                row[2] = -2.0 * d;
            }
            _ => {
                let d = 2.0 * 10f64.sqrt() * (x[0] - x[3]);
                row[0] = d;
                row[3] = -d;
            }
        }
    }
}

struct FreudensteinRoth;

impl ResidualFunction for FreudensteinRoth {
    fn name(&self) -> &'static str {
        "freudenstein-roth"
    }
    fn dim(&self) -> usize {
        2
    }
    fn residuals(&self) -> usize {
        2
    }
    fn start(&self) -> Vec<f64> {
        vec![0.5, -2.0]
    }
    fn residual(&self, i: usize, x: &[f64]) -> f64 {
        let t = x[1];
        match i {
            0 => -13.0 + x[0] + ((5.0 - t) * t - 2.0) * t,
            _ => -29.0 + x[0] + ((t + 1.0) * t - 14.0) * t,
        }
    }
    fn jacobian_row(&self, i: usize, x: &[f64], row: &mut [f64]) {
        let t = x[1];
        row[0] = 1.0;
        row[1] = match i {
            0 => -3.0 * t * t + 10.0 * t - 2.0,
            _ => 3.0 * t * t + 2.0 * t - 14.0,
        };
    }
}

const BARD_Y: [f64; 15] = [
    0.14, 0.18, 0.22, 0.25, 0.29, 0.32, 0.35, 0.39, 0.37, 0.58, 0.73, 0.96, 1.34, 2.10, 4.39,
];

struct Bard;

impl Bard {
    fn uvw(i: usize) -> (f64, f64, f64) {
        let u = (i + 1) as f64;
        let v = 16.0 - u;
        (u, v, u.min(v))
    }
}

impl ResidualFunction for Bard {
    fn name(&self) -> &'static str {
        "bard"
    }
    fn dim(&self) -> usize {
        3
    }
    fn residuals(&self) -> usize {
        15
    }
    fn start(&self) -> Vec<f64> {
        vec![1.0, 1.0, 1.0]
    }
    fn residual(&self, i: usize, x: &[f64]) -> f64 {
        let (u, v, w) = Self::uvw(i);
        BARD_Y[i] - (x[0] + u / (v * x[1] + w * x[2]))
    }
    fn jacobian_row(&self, i: usize, x: &[f64], row: &mut [f64]) {
        let (u, v, w) = Self::uvw(i);
        let den = v * x[1] + w * x[2];
        let d2 = den * den;
        row[0] = -1.0;
        row[1] = u * v / d2;
        row[2] = u * w / d2;
    }
}

const KOWALIK_Y: [f64; 11] = [
    0.1957, 0.1947, 0.1735, 0.1600, 0.0844, 0.0627, 0.0456, 0.0342, 0.0323, 0.0235, 0.0246,
];
const KOWALIK_U: [f64; 11] = [
    4.0, 2.0, 1.0, 0.5, 0.25, 0.167, 0.125, 0.1, 0.0833, 0.0714, 0.0625,
];

struct KowalikOsborne;

impl ResidualFunction for KowalikOsborne {
    fn name(&self) -> &'static str {
        "kowalik-osborne"
    }
    fn dim(&self) -> usize {
        4
    }
    fn residuals(&self) -> usize {
        11
    }
    fn start(&self) -> Vec<f64> {
        vec![0.25, 0.39, 0.415, 0.39]
    }
    fn residual(&self, i: usize, x: &[f64]) -> f64 {
        let u = KOWALIK_U[i];
        let num = u * u + u * x[1];
        let den = u * u + u * x[2] + x[3];
        KOWALIK_Y[i] - x[0] * num / den
    }
    fn jacobian_row(&self, i: usize, x: &[f64], row: &mut [f64]) {
        let u = KOWALIK_U[i];
        let num = u * u + u * x[1];
        let den = u * u + u * x[2] + x[3];
        row[0] = -num / den;
        row[1] = -x[0] * u / den;
        row[2] = x[0] * num * u / (den * den);
        row[3] = x[0] * num / (den * den);
    }
}

struct Box3d {
    m: usize,
}

impl ResidualFunction for Box3d {
    fn name(&self) -> &'static str {
        "box-3d"
    }
    fn dim(&self) -> usize {
        3
    }
    fn residuals(&self) -> usize {
        self.m
    }
    fn start(&self) -> Vec<f64> {
        vec![0.0, 10.0, 20.0]
    }
    fn residual(&self, i: usize, x: &[f64]) -> f64 {
        let t = 0.1 * (i + 1) as f64;
        (-t * x[0]).exp() - (-t * x[1]).exp() - x[2] * ((-t).exp() - (-10.0 * t).exp())
    }
    fn jacobian_row(&self, i: usize, x: &[f64], row: &mut [f64]) {
        let t = 0.1 * (i + 1) as f64;
        row[0] = -t * (-t * x[0]).exp();
        row[1] = t * (-t * x[1]).exp();
        row[2] = -((-t).exp() - (-10.0 * t).exp());
    }
}

struct JennrichSampson {
    m: usize,
}

impl ResidualFunction for JennrichSampson {
    fn name(&self) -> &'static str {
        "jennrich-sampson"
    }
    fn dim(&self) -> usize {
        2
    }
    fn residuals(&self) -> usize {
        self.m
    }
    fn start(&self) -> Vec<f64> {
        vec![0.3, 0.4]
    }
    fn residual(&self, i: usize, x: &[f64]) -> f64 {
        let k = (i + 1) as f64;
        2.0 + 2.0 * k - ((k * x[0]).exp() + (k * x[1]).exp())
    }
    fn jacobian_row(&self, i: usize, x: &[f64], row: &mut [f64]) {
        let k = (i + 1) as f64;
        row[0] = -k * (k * x[0]).exp();
        row[1] = -k * (k * x[1]).exp();
    }
}

struct BrownDennis {
    m: usize,
}

impl ResidualFunction for BrownDennis {
    fn name(&self) -> &'static str {
        "brown-dennis"
    }
    fn dim(&self) -> usize {
        4
    }
    fn residuals(&self) -> usize {
        self.m
    }
    fn start(&self) -> Vec<f64> {
        vec![25.0, 5.0, -5.0, -1.0]
    }
    fn residual(&self, i: usize, x: &[f64]) -> f64 {
        let t = (i + 1) as f64 / 5.0;
        let a = x[0] + t * x[1] - t.exp();
        let b = x[2] + x[3] * t.sin() - t.cos();
        a * a + b * b
    }
    fn jacobian_row(&self, i: usize, x: &[f64], row: &mut [f64]) {
        let t = (i + 1) as f64 / 5.0;
        let a = x[0] + t * x[1] - t.exp();
        let b = x[2] + x[3] * t.sin() - t.cos();
        row[0] = 2.0 * a;
        row[1] = 2.0 * a * t;
        row[2] = 2.0 * b;
        row[3] = 2.0 * b * t.sin();
    }
}

struct Chebyquad {
    n: usize,
}

impl Chebyquad {
    /// Chebyshev polynomial `T_k(y)` and its derivative.
    fn chebyshev(k: usize, y: f64) -> (f64, f64) {
        let (mut t_prev, mut t) = (1.0, y);
        let (mut d_prev, mut d) = (0.0, 1.0);
        if k == 0 {
            return (1.0, 0.0);
        }
        for _ in 1..k {
            let t_next = 2.0 * y * t - t_prev;
            let d_next = 2.0 * t + 2.0 * y * d - d_prev;
            t_prev = t;
            t = t_next;
            d_prev = d;
            d = d_next;
        }
        (t, d)
    }
}

impl ResidualFunction for Chebyquad {
    fn name(&self) -> &'static str {
        "chebyquad"
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn residuals(&self) -> usize {
        self.n
    }
    fn start(&self) -> Vec<f64> {
        (1..=self.n).map(|j| j as f64 / (self.n + 1) as f64).collect()
    }
    fn residual(&self, i: usize, x: &[f64]) -> f64 {
        let k = i + 1;
        let mean = x
            .iter()
            .map(|&v| Self::chebyshev(k, 2.0 * v - 1.0).0)
            .sum::<f64>()
            / self.n as f64;
        let integral = if k % 2 == 0 {
            -1.0 / ((k * k) as f64 - 1.0)
        } else {
            0.0
        };
        mean - integral
    }
    fn jacobian_row(&self, i: usize, x: &[f64], row: &mut [f64]) {
        for (r, &v) in row.iter_mut().zip(x) {
            *r = 2.0 * Self::chebyshev(i + 1, 2.0 * v - 1.0).1 / self.n as f64;
        }
    }
}

struct BrownAlmostLinear {
    n: usize,
}

impl ResidualFunction for BrownAlmostLinear {
    fn name(&self) -> &'static str {
        "brown-almost-linear"
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn residuals(&self) -> usize {
        self.n
    }
    fn start(&self) -> Vec<f64> {
        vec![0.5; self.n]
    }
    fn residual(&self, i: usize, x: &[f64]) -> f64 {
        if i + 1 < self.n {
            x[i] + x.iter().sum::<f64>() - (self.n + 1) as f64
        } else {
            x.iter().product::<f64>() - 1.0
        }
    }
    fn jacobian_row(&self, i: usize, x: &[f64], row: &mut [f64]) {
        if i + 1 < self.n {
            row.fill(1.0);
            row[i] += 1.0;
        } else {
            for (j, r) in row.iter_mut().enumerate() {
                *r = x
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != j)
                    .map(|(_, v)| v)
                    .product();
            }
        }
    }
}

const OSBORNE1_Y: [f64; 33] = [
    0.844, 0.908, 0.932, 0.936, 0.925, 0.908, 0.881, 0.850, 0.818, 0.784, 0.751, 0.718, 0.685,
    0.658, 0.628, 0.603, 0.580, 0.558, 0.538, 0.522, 0.506, 0.490, 0.478, 0.467, 0.457, 0.448,
    0.438, 0.431, 0.424, 0.420, 0.414, 0.411, 0.406,
];

struct Osborne1;

impl ResidualFunction for Osborne1 {
    fn name(&self) -> &'static str {
        "osborne-1"
    }
    fn dim(&self) -> usize {
        5
    }
    fn residuals(&self) -> usize {
        33
    }
    fn start(&self) -> Vec<f64> {
        vec![0.5, 1.5, -1.0, 0.01, 0.02]
    }
    fn residual(&self, i: usize, x: &[f64]) -> f64 {
        let t = 10.0 * i as f64;
        OSBORNE1_Y[i] - (x[0] + x[1] * (-t * x[3]).exp() + x[2] * (-t * x[4]).exp())
    }
    fn jacobian_row(&self, i: usize, x: &[f64], row: &mut [f64]) {
        let t = 10.0 * i as f64;
        let e4 = (-t * x[3]).exp();
        let e5 = (-t * x[4]).exp();
        row[0] = -1.0;
        row[1] = -e4;
        row[2] = -e5;
        row[3] = x[1] * t * e4;
        row[4] = x[2] * t * e5;
    }
}

struct Watson {
    n: usize,
}

impl ResidualFunction for Watson {
    fn name(&self) -> &'static str {
        "watson"
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn residuals(&self) -> usize {
        31
    }
    fn start(&self) -> Vec<f64> {
        vec![0.0; self.n]
    }
    fn residual(&self, i: usize, x: &[f64]) -> f64 {
        match i {
            0..=28 => {
                let t = (i + 1) as f64 / 29.0;
                let mut deriv = 0.0;
                let mut value = 0.0;
                let mut p = 1.0;
                for (j, &v) in x.iter().enumerate() {
                    value += v * p;
                    if j + 1 < x.len() {
                        deriv += (j + 1) as f64 * x[j + 1] * p;
                    }
                    p *= t;
                }
                deriv - value * value - 1.0
            }
            29 => x[0],
            _ => x[1] - x[0] * x[0] - 1.0,
        }
    }
    fn jacobian_row(&self, i: usize, x: &[f64], row: &mut [f64]) {
        row.fill(0.0);
        match i {
            0..=28 => {
                let t = (i + 1) as f64 / 29.0;
                let value: f64 = x
                    .iter()
                    .enumerate()
                    .map(|(j, v)| v * t.powi(j as i32))
                    .sum();
                for (j, r) in row.iter_mut().enumerate() {
                    let lin = if j == 0 {
                        0.0
                    } else {
                        j as f64 * t.powi(j as i32 - 1)
                    };
                    *r = lin - 2.0 * value * t.powi(j as i32);
                }
            }
            29 => row[0] = 1.0,
            _ => {
                row[0] = -2.0 * x[0];
                row[1] = 1.0;
            }
        }
    }
}

struct Bdqrtic {
    n: usize,
}

impl ResidualFunction for Bdqrtic {
    fn name(&self) -> &'static str {
        "bdqrtic"
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn residuals(&self) -> usize {
        2 * (self.n - 4)
    }
    fn start(&self) -> Vec<f64> {
        vec![1.0; self.n]
    }
    fn residual(&self, i: usize, x: &[f64]) -> f64 {
        let half = self.n - 4;
        if i < half {
            -4.0 * x[i] + 3.0
        } else {
            let k = i - half;
            x[k] * x[k]
                + 2.0 * x[k + 1] * x[k + 1]
                + 3.0 * x[k + 2] * x[k + 2]
                + 4.0 * x[k + 3] * x[k + 3]
                + 5.0 * x[self.n - 1] * x[self.n - 1]
        }
    }
    fn jacobian_row(&self, i: usize, x: &[f64], row: &mut [f64]) {
        row.fill(0.0);
        let half = self.n - 4;
        if i < half {
            row[i] = -4.0;
        } else {
            let k = i - half;
            for c in 0..4 {
                row[k + c] += 2.0 * (c + 1) as f64 * x[k + c];
            }
            row[self.n - 1] += 10.0 * x[self.n - 1];
        }
    }
}
