//! Communication graphs, mixing matrices and the blockwise operators built on
//! them.
//!
//! A [`MixingMatrix`] is symmetric, nonnegative, doubly stochastic and
//! supported exactly on the graph edges plus the diagonal. Its eigenvalues
//! are computed once with a symmetric eigensolver and cached together with
//! the spectral constant `zeta = max(|lambda_2|, |lambda_m|)`.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fmt_f64;
use crate::stacked::Stacked;

/// Number of Erdős–Rényi draws attempted before giving up on connectivity.
pub const MAX_GRAPH_DRAWS: u32 = 1024;

const STOCHASTIC_TOL: f64 = 1e-12;
const EIGEN_TOL: f64 = 1e-10;

/// Undirected simple graph on agents `0..m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    m: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from an edge list; rejects self-loops, out-of-range
    /// endpoints and disconnected results. Duplicate edges are merged.
    pub fn from_edges(m: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("graph needs at least one node".into()));
        }
        let mut normalized = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a == b {
                return Err(Error::InvalidArgument(format!("self-loop on node {a}")));
            }
            if a >= m || b >= m {
                return Err(Error::InvalidArgument(format!(
                    "edge ({a}, {b}) out of range for {m} nodes"
                )));
            }
            normalized.push((a.min(b), a.max(b)));
        }
        normalized.sort_unstable();
        normalized.dedup();
        let graph = Self::assemble(m, normalized);
        if !graph.is_connected() {
            return Err(Error::InvalidArgument("graph is not connected".into()));
        }
        Ok(graph)
    }

    pub fn complete(m: usize) -> Self {
        let edges = (0..m)
            .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
            .collect();
        Self::assemble(m, edges)
    }

    fn assemble(m: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut neighbors = vec![Vec::new(); m];
        for &(a, b) in &edges {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        neighbors.iter_mut().for_each(|n| n.sort_unstable());
        Self {
            m,
            edges,
            neighbors,
        }
    }

    pub fn nodes(&self) -> usize {
        self.m
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    /// Breadth-first reachability from node 0.
    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.m];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.neighbors[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.m
    }
}

/// Draws an Erdős–Rényi graph `G(m, p_c)`, redrawing from a fresh ChaCha
/// stream until the result is connected.
pub fn generate_graph(m: usize, p_c: f64, seed: u64) -> Result<Graph> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("need m >= 2 agents, got {m}")));
    }
    if !(p_c > 0.0 && p_c <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "edge probability must lie in (0, 1], got {p_c}"
        )));
    }
    for attempt in 0..MAX_GRAPH_DRAWS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::from(attempt));
        let mut edges = Vec::new();
        for i in 0..m {
            for j in i + 1..m {
                if rng.random_bool(p_c) {
                    edges.push((i, j));
                }
            }
        }
        let graph = Graph::assemble(m, edges);
        if graph.is_connected() {
            return Ok(graph);
        }
    }
    Err(Error::DisconnectedGraph {
        m,
        p_c,
        attempts: MAX_GRAPH_DRAWS,
    })
}

/// Eigenvalues of a mixing matrix and the status of each admissibility
/// clause.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    /// Eigenvalues sorted in decreasing order.
    pub eigenvalues: Vec<f64>,
    pub zeta: f64,
    /// Symmetric, nonnegative, and supported on the diagonal plus edges.
    pub symmetric_nonnegative: bool,
    /// `lambda_1 = 1` and `lambda_2 < 1`.
    pub spectral_gap: bool,
    /// Rows and columns sum to one.
    pub doubly_stochastic: bool,
    /// `lambda_m > -1`.
    pub smallest_above_minus_one: bool,
    /// `lambda_m <= 0`; reported only.
    pub smallest_nonpositive: bool,
}

impl SpectralReport {
    /// Analyzes an arbitrary square matrix. The support check treats every
    /// positive off-diagonal entry as an edge.
    pub fn of_matrix(w: &DMatrix<f64>) -> Self {
        let m = w.nrows();
        let symmetric = w.ncols() == m && (0..m).all(|i| (0..m).all(|j| w[(i, j)] == w[(j, i)]));
        let nonnegative = w.iter().all(|&v| v >= 0.0);
        let diagonal_positive = (0..m.min(w.ncols())).all(|i| w[(i, i)] > 0.0);
        let rows_ok = w
            .row_iter()
            .all(|r| (r.sum() - 1.0).abs() <= STOCHASTIC_TOL);
        let cols_ok = w
            .column_iter()
            .all(|c| (c.sum() - 1.0).abs() <= STOCHASTIC_TOL);

        let mut eigenvalues: Vec<f64> = if symmetric {
            SymmetricEigen::new(w.clone()).eigenvalues.iter().copied().collect()
        } else {
            // Only the symmetric part is meaningful for the clauses below.
            let sym = (w + w.transpose()) * 0.5;
            SymmetricEigen::new(sym).eigenvalues.iter().copied().collect()
        };
        eigenvalues.sort_by(|a, b| b.total_cmp(a));

        let first = eigenvalues.first().copied().unwrap_or(f64::NAN);
        let second = eigenvalues.get(1).copied();
        let last = eigenvalues.last().copied().unwrap_or(f64::NAN);
        let spectral_gap =
            (first - 1.0).abs() <= EIGEN_TOL && second.is_none_or(|l2| l2 < 1.0 - EIGEN_TOL);
        let zeta = match second {
            Some(l2) => l2.abs().max(last.abs()),
            None => 0.0,
        };
        Self {
            smallest_above_minus_one: last > -1.0 + EIGEN_TOL,
            smallest_nonpositive: m == 1 || last <= EIGEN_TOL,
            eigenvalues,
            zeta,
            symmetric_nonnegative: symmetric && nonnegative && diagonal_positive,
            spectral_gap,
            doubly_stochastic: rows_ok && cols_ok,
        }
    }

    /// Clauses that are enforced at construction: everything except
    /// `lambda_m <= 0`.
    pub fn admissible(&self) -> bool {
        self.symmetric_nonnegative
            && self.spectral_gap
            && self.doubly_stochastic
            && self.smallest_above_minus_one
    }

    fn first_failure(&self) -> Option<&'static str> {
        if !self.symmetric_nonnegative {
            Some("W must be symmetric and nonnegative with positive diagonal")
        } else if !self.doubly_stochastic {
            Some("rows and columns of W must sum to one")
        } else if !self.spectral_gap {
            Some("need lambda_1 = 1 and lambda_2 < 1")
        } else if !self.smallest_above_minus_one {
            Some("need lambda_m > -1")
        } else {
            None
        }
    }
}

#[derive(Debug, Clone)]
pub struct MixingMatrix {
    weights: DMatrix<f64>,
    neighbors: Vec<Vec<usize>>,
    report: SpectralReport,
}

impl MixingMatrix {
    /// Metropolis weights `w_ij = 1 / (1 + max(deg_i, deg_j))` on edges and
    /// `w_ii = 1 - sum_j w_ij`.
    pub fn metropolis(graph: &Graph) -> Result<Self> {
        let m = graph.nodes();
        let mut w = DMatrix::zeros(m, m);
        for &(a, b) in graph.edges() {
            let weight = 1.0 / (1.0 + graph.degree(a).max(graph.degree(b)) as f64);
            w[(a, b)] = weight;
            w[(b, a)] = weight;
        }
        for i in 0..m {
            let off: f64 = graph.neighbors(i).iter().map(|&j| w[(i, j)]).sum();
            w[(i, i)] = 1.0 - off;
        }
        Self::from_weights(w)
    }

    /// Validates an explicit weight matrix. Neighbor lists are read off the
    /// positive off-diagonal entries.
    pub fn from_weights(weights: DMatrix<f64>) -> Result<Self> {
        if weights.nrows() != weights.ncols() || weights.nrows() == 0 {
            return Err(Error::MixingInvariant(format!(
                "W must be square and nonempty, got {}x{}",
                weights.nrows(),
                weights.ncols()
            )));
        }
        let report = SpectralReport::of_matrix(&weights);
        if let Some(failure) = report.first_failure() {
            return Err(Error::MixingInvariant(failure.to_string()));
        }
        let m = weights.nrows();
        let neighbors = (0..m)
            .map(|i| (0..m).filter(|&j| j != i && weights[(i, j)] > 0.0).collect())
            .collect();
        Ok(Self {
            weights,
            neighbors,
            report,
        })
    }

    /// The single-agent matrix `[1]`.
    pub fn trivial() -> Self {
        Self::from_weights(DMatrix::from_element(1, 1, 1.0)).expect("[1] is a valid mixing matrix")
    }

    pub fn agents(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn spectral_report(&self) -> &SpectralReport {
        &self.report
    }

    pub fn zeta(&self) -> f64 {
        self.report.zeta
    }

    /// `x_hat_i = sum_{j in N_i + {i}} w_ij x_j` for a single agent.
    ///
    /// Evaluated as `x_i + sum_j w_ij (x_j - x_i)`, which uses that rows sum
    /// to one and leaves identical blocks bitwise unchanged.
    pub fn mix_block(&self, x: &Stacked, i: usize, out: &mut [f64]) {
        let xi = x.block(i);
        out.copy_from_slice(xi);
        for &j in &self.neighbors[i] {
            let wij = self.weights[(i, j)];
            for ((o, v), own) in out.iter_mut().zip(x.block(j)).zip(xi) {
                *o += wij * (v - own);
            }
        }
    }

    /// Applies `W ⊗ I_n` blockwise.
    pub fn mix(&self, x: &Stacked) -> Result<Stacked> {
        x.check_shape(self.agents())?;
        let mut out = Stacked::zeros(x.agents(), x.dim());
        for i in 0..self.agents() {
            self.mix_block(x, i, out.block_mut(i));
        }
        Ok(out)
    }

    /// Writes `W` as row-major CSV followed by a second file with the
    /// spectral report.
    pub fn write_csv(&self, weights_path: &Path, report_path: &Path) -> Result<()> {
        let m = self.agents();
        let mut text = String::new();
        for i in 0..m {
            let row: Vec<String> = (0..m).map(|j| fmt_f64(self.weights[(i, j)])).collect();
            let _ = writeln!(text, "{}", row.join(","));
        }
        std::fs::write(weights_path, text).map_err(|e| Error::io(weights_path, e))?;

        let r = &self.report;
        let mut text = String::from("key,value\n");
        for (k, lambda) in r.eigenvalues.iter().enumerate() {
            let _ = writeln!(text, "lambda_{},{}", k + 1, fmt_f64(*lambda));
        }
        let _ = writeln!(text, "zeta,{}", fmt_f64(r.zeta));
        let _ = writeln!(text, "symmetric_nonnegative,{}", r.symmetric_nonnegative);
        let _ = writeln!(text, "spectral_gap,{}", r.spectral_gap);
        let _ = writeln!(text, "doubly_stochastic,{}", r.doubly_stochastic);
        let _ = writeln!(text, "smallest_above_minus_one,{}", r.smallest_above_minus_one);
        let _ = writeln!(text, "smallest_nonpositive,{}", r.smallest_nonpositive);
        std::fs::write(report_path, text).map_err(|e| Error::io(report_path, e))
    }
}

/// Metropolis matrix of the graph; alias kept for the operation name used in
/// the docs.
pub fn build_mixing_matrix(graph: &Graph) -> Result<MixingMatrix> {
    MixingMatrix::metropolis(graph)
}

/// Replaces every block by the block mean.
pub fn average_project(x: &Stacked) -> Stacked {
    Stacked::consensus(x.agents(), &x.mean_block())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_ones() -> MixingMatrix {
        MixingMatrix::from_weights(DMatrix::from_element(2, 2, 0.5)).unwrap()
    }

    fn bfs_connected(m: usize, edges: &[(usize, usize)]) -> bool {
        // Independent reachability oracle via repeated edge relaxation.
        let mut reach = vec![false; m];
        reach[0] = true;
        loop {
            let mut changed = false;
            for &(a, b) in edges {
                if reach[a] != reach[b] {
                    reach[a] = true;
                    reach[b] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        reach.into_iter().all(|r| r)
    }

    #[test]
    fn two_node_complete_graph() {
        let g = generate_graph(2, 1.0, 7).unwrap();
        assert_eq!(g.edges(), &[(0, 1)]);
    }

    #[test]
    fn triangle_has_degree_two() {
        let g = generate_graph(3, 1.0, 99).unwrap();
        assert!((0..3).all(|i| g.degree(i) == 2));
    }

    #[test]
    fn sampled_graph_is_connected() {
        let g = generate_graph(5, 0.5, 42).unwrap();
        assert!(bfs_connected(5, g.edges()));
        assert_eq!(g, generate_graph(5, 0.5, 42).unwrap());
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(generate_graph(1, 0.5, 0).is_err());
        assert!(generate_graph(4, 0.0, 0).is_err());
        assert!(generate_graph(4, 1.5, 0).is_err());
        assert!(Graph::from_edges(3, &[(0, 0)]).is_err());
        assert!(Graph::from_edges(3, &[(0, 1)]).is_err());
    }

    #[test]
    fn retry_cap_reports_disconnection() {
        let err = generate_graph(60, 1e-9, 3).unwrap_err();
        assert!(err.to_string().contains("could not sample connected graph"));
    }

    #[test]
    fn metropolis_on_two_nodes_is_half_ones() {
        let g = Graph::complete(2);
        let w = build_mixing_matrix(&g).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(w.weight(i, j), 0.5);
            }
        }
    }

    #[test]
    fn metropolis_triangle_spectrum() {
        let w = build_mixing_matrix(&Graph::complete(3)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((w.weight(i, j) - 1.0 / 3.0).abs() < 1e-15);
            }
        }
        let r = w.spectral_report();
        // J/3 has eigenvalues {1, 0, 0}.
        assert!((r.eigenvalues[0] - 1.0).abs() < 1e-12);
        assert!(r.eigenvalues[1].abs() < 1e-12 && r.eigenvalues[2].abs() < 1e-12);
        assert!(r.zeta < 1e-12);
    }

    #[test]
    fn half_ones_report() {
        let r = half_ones().spectral_report().clone();
        // trace = 1, det = 0 -> eigenvalues 1 and 0.
        assert!((r.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!(r.eigenvalues[1].abs() < 1e-14);
        assert_eq!(r.zeta, r.eigenvalues[1].abs());
        assert!(r.admissible() && r.smallest_nonpositive);
    }

    #[test]
    fn identity_is_not_mixing() {
        let r = SpectralReport::of_matrix(&DMatrix::identity(3, 3));
        assert!(r.eigenvalues.iter().all(|l| (l - 1.0).abs() < 1e-14));
        assert!(!r.spectral_gap);
        assert!(MixingMatrix::from_weights(DMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn rows_sum_to_one() {
        let g = generate_graph(8, 0.5, 11).unwrap();
        let w = build_mixing_matrix(&g).unwrap();
        let ones = Stacked::consensus(8, &[1.0]);
        let mixed = w.mix(&ones).unwrap();
        for v in mixed.as_flat() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mix_examples() {
        let w = half_ones();
        let x = Stacked::from_blocks(&[vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(w.mix(&x).unwrap(), x);
        let x = Stacked::from_blocks(&[vec![2.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let y = w.mix(&x).unwrap();
        assert_eq!(y.block(0), &[1.0, 0.0]);
        assert_eq!(y.block(1), &[1.0, 0.0]);
        let bad = Stacked::zeros(3, 2);
        assert!(w.mix(&bad).is_err());
    }

    #[test]
    fn average_examples() {
        let x = Stacked::from_blocks(&[vec![0.0, 1.0], vec![2.0, 3.0]]).unwrap();
        let a = average_project(&x);
        assert_eq!(a.block(0), &[1.0, 2.0]);
        assert_eq!(a.block(1), &[1.0, 2.0]);
        assert_eq!(average_project(&a), a);
    }

    #[test]
    fn csv_export() {
        let dir = tempfile::tempdir().unwrap();
        let w = half_ones();
        let wp = dir.path().join("w.csv");
        let rp = dir.path().join("r.csv");
        w.write_csv(&wp, &rp).unwrap();
        let text = std::fs::read_to_string(&wp).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("5.0000000000000000e-1,"));
        assert!(std::fs::read_to_string(&rp).unwrap().contains("zeta,"));
    }
}
