//! Stacked iterates: `m` agent blocks of dimension `n`, stored row-major.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Stacked {
    m: usize,
    n: usize,
    data: Vec<f64>,
}

impl Stacked {
    pub fn zeros(m: usize, n: usize) -> Self {
        Self {
            m,
            n,
            data: vec![0.0; m * n],
        }
    }

    /// Every agent holds a copy of `x`.
    pub fn consensus(m: usize, x: &[f64]) -> Self {
        let n = x.len();
        let mut data = Vec::with_capacity(m * n);
        for _ in 0..m {
            data.extend_from_slice(x);
        }
        Self { m, n, data }
    }

    pub fn from_flat(m: usize, n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != m * n {
            return Err(Error::DimensionMismatch {
                expected: m * n,
                actual: data.len(),
            });
        }
        Ok(Self { m, n, data })
    }

    pub fn from_blocks(blocks: &[Vec<f64>]) -> Result<Self> {
        let m = blocks.len();
        let n = blocks.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(m * n);
        for block in blocks {
            if block.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: block.len(),
                });
            }
            data.extend_from_slice(block);
        }
        Ok(Self { m, n, data })
    }

    pub fn agents(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn block(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn blocks(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n.max(1)).take(self.m)
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Block mean `(1/m) sum_i x_i`.
    pub fn mean_block(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.n];
        for block in self.blocks() {
            for (acc, v) in mean.iter_mut().zip(block) {
                *acc += v;
            }
        }
        let inv = 1.0 / self.m as f64;
        mean.iter_mut().for_each(|v| *v *= inv);
        mean
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub(crate) fn check_shape(&self, m: usize) -> Result<()> {
        if self.m != m {
            return Err(Error::DimensionMismatch {
                expected: m * self.n,
                actual: self.data.len(),
            });
        }
        Ok(())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
