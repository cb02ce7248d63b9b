//! Interaction graph, Laplacian blocks and the spectral facts the
//! containment laws depend on.
//!
//! Agents are indexed from zero internally: `0..M` are leaders and
//! `M..M+N` are followers. Entry `(i, j)` of the adjacency matrix is the
//! weight of the edge from agent `j` to agent `i`, i.e. agent `i` measures
//! agent `j`.

use std::collections::VecDeque;

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::linalg;

/// Entry tolerance for the row-stochastic certificate of `-L2⁻¹ L1`.
pub const WEIGHT_NONNEG_TOL: f64 = 1e-10;
/// Row-sum tolerance for the same certificate.
pub const WEIGHT_ROW_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DirectedTopology {
    num_leaders: usize,
    num_followers: usize,
    adjacency: DMatrix<f64>,
}

impl DirectedTopology {
    pub fn new(num_leaders: usize, num_followers: usize, adjacency: DMatrix<f64>) -> Result<Self> {
        let n = num_leaders + num_followers;
        if num_leaders == 0 || num_followers == 0 {
            return Err(Error::Topology(
                "at least one leader and one follower are required".into(),
            ));
        }
        if adjacency.nrows() != n || adjacency.ncols() != n {
            return Err(Error::Topology(format!(
                "adjacency is {}x{}, expected {n}x{n}",
                adjacency.nrows(),
                adjacency.ncols()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let w = adjacency[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::Topology(format!(
                        "weight of edge {} -> {} is {w}; weights must be finite and nonnegative",
                        j + 1,
                        i + 1
                    )));
                }
                if i == j && w != 0.0 {
                    return Err(Error::Topology(format!("self-loop on agent {}", i + 1)));
                }
                if i < num_leaders && w != 0.0 {
                    return Err(Error::Topology(format!(
                        "leader {} has a parent (agent {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(Self {
            num_leaders,
            num_followers,
            adjacency,
        })
    }

    /// Build from zero-based `(from, to, weight)` triples.
    pub fn from_edges(
        num_leaders: usize,
        num_followers: usize,
        edges: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let n = num_leaders + num_followers;
        let mut adjacency = DMatrix::zeros(n, n);
        for &(from, to, w) in edges {
            if from >= n || to >= n {
                return Err(Error::Topology(format!(
                    "edge {} -> {} references an agent outside 1..={n}",
                    from + 1,
                    to + 1
                )));
            }
            adjacency[(to, from)] += w;
        }
        Self::new(num_leaders, num_followers, adjacency)
    }

    pub fn num_leaders(&self) -> usize {
        self.num_leaders
    }

    pub fn num_followers(&self) -> usize {
        self.num_followers
    }

    pub fn num_agents(&self) -> usize {
        self.num_leaders + self.num_followers
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn in_degree(&self, agent: usize) -> f64 {
        self.adjacency.row(agent).sum()
    }

    /// Agents measured by `agent`, with their weights.
    pub fn in_neighbors(&self, agent: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.num_agents()).filter_map(move |j| {
            let w = self.adjacency[(agent, j)];
            (w > 0.0).then_some((j, w))
        })
    }

    /// Zero-based `(from, to, weight)` list in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.num_agents();
        let mut out = Vec::new();
        for to in 0..n {
            for from in 0..n {
                let w = self.adjacency[(to, from)];
                if w > 0.0 {
                    out.push((from, to, w));
                }
            }
        }
        out
    }

    /// Relabel followers: follower `k` of the result is follower `perm[k]` of `self`.
    pub fn permute_followers(&self, perm: &[usize]) -> Result<Self> {
        let m = self.num_leaders;
        let n = self.num_agents();
        if perm.len() != self.num_followers {
            return Err(Error::Topology("permutation length mismatch".into()));
        }
        let map = |k: usize| if k < m { k } else { m + perm[k - m] };
        let adjacency = DMatrix::from_fn(n, n, |i, j| self.adjacency[(map(i), map(j))]);
        Self::new(m, self.num_followers, adjacency)
    }
}

#[derive(Debug, Clone)]
pub struct LaplacianBlocks {
    pub laplacian: DMatrix<f64>,
    /// Follower rows, leader columns (N×M).
    pub l1: DMatrix<f64>,
    /// Follower rows, follower columns (N×N).
    pub l2: DMatrix<f64>,
    pub in_degrees: Vec<f64>,
}

impl LaplacianBlocks {
    pub fn follower_degrees(&self) -> &[f64] {
        let n = self.l2.nrows();
        &self.in_degrees[self.in_degrees.len() - n..]
    }

    /// `(I + D)⁻¹ L2`, the normalised follower block used by the discrete laws.
    pub fn normalized_l2(&self) -> DMatrix<f64> {
        let d = self.follower_degrees();
        DMatrix::from_fn(self.l2.nrows(), self.l2.ncols(), |i, j| {
            self.l2[(i, j)] / (1.0 + d[i])
        })
    }
}

/// `L = D − A` and its leader/follower partition.
pub fn build_laplacian(topology: &DirectedTopology) -> LaplacianBlocks {
    let n = topology.num_agents();
    let m = topology.num_leaders();
    let in_degrees: Vec<f64> = (0..n).map(|i| topology.in_degree(i)).collect();
    let mut laplacian = -topology.adjacency().clone();
    for (i, d) in in_degrees.iter().enumerate() {
        laplacian[(i, i)] += d;
    }
    let nf = topology.num_followers();
    let l1 = laplacian.view((m, 0), (nf, m)).into_owned();
    let l2 = laplacian.view((m, m), (nf, nf)).into_owned();
    LaplacianBlocks {
        laplacian,
        l1,
        l2,
        in_degrees,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reachability {
    pub satisfied: bool,
    /// Zero-based agent indices of followers no leader can reach.
    pub unreachable: Vec<usize>,
}

/// Every follower must be reachable from the leader set along directed edges.
pub fn check_assumption_a1(topology: &DirectedTopology) -> Reachability {
    let n = topology.num_agents();
    let adj = topology.adjacency();
    let mut seen = vec![false; n];
    let mut queue: VecDeque<usize> = (0..topology.num_leaders()).collect();
    for &l in &queue {
        seen[l] = true;
    }
    while let Some(j) = queue.pop_front() {
        for i in 0..n {
            if !seen[i] && adj[(i, j)] > 0.0 {
                seen[i] = true;
                queue.push_back(i);
            }
        }
    }
    let unreachable: Vec<usize> = (topology.num_leaders()..n).filter(|&i| !seen[i]).collect();
    Reachability {
        satisfied: unreachable.is_empty(),
        unreachable,
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<Complex<f64>>,
    pub lambda_min_real: f64,
    pub normalized_eigenvalues: Vec<Complex<f64>>,
    /// `1 − max |1 − λ̂|` over the spectrum of `(I + D)⁻¹ L2`.
    pub gershgorin_margin: f64,
}

impl SpectrumReport {
    /// `max |1 − λ̂|`, the lower end of the admissible discrete ε interval.
    pub fn max_normalized_deviation(&self) -> f64 {
        1.0 - self.gershgorin_margin
    }
}

pub fn spectrum(blocks: &LaplacianBlocks) -> Result<SpectrumReport> {
    let eigenvalues = linalg::eigenvalues(&blocks.l2)?;
    let lambda_min_real = eigenvalues.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let normalized_eigenvalues = linalg::eigenvalues(&blocks.normalized_l2())?;
    let worst = normalized_eigenvalues
        .iter()
        .map(|z| (Complex::new(1.0, 0.0) - z).norm())
        .fold(0.0, f64::max);
    Ok(SpectrumReport {
        eigenvalues,
        lambda_min_real,
        normalized_eigenvalues,
        gershgorin_margin: 1.0 - worst,
    })
}

/// Spectrum plus the row-stochastic matrix `−L2⁻¹ L1` whose rows are the
/// convex weights of each follower's limit point.
#[derive(Debug, Clone)]
pub struct SpectralCertificate {
    pub spectrum: SpectrumReport,
    pub convex_weights: DMatrix<f64>,
    pub min_weight: f64,
    pub max_row_sum_error: f64,
}

pub fn certify_spectrum(blocks: &LaplacianBlocks) -> Result<SpectralCertificate> {
    let spectrum = spectrum(blocks)?;
    if !(spectrum.lambda_min_real > 0.0) {
        return Err(Error::Certification(format!(
            "min Re spec(L2) = {:e} is not positive",
            spectrum.lambda_min_real
        )));
    }
    let sol = blocks
        .l2
        .clone()
        .lu()
        .solve(&blocks.l1)
        .ok_or(Error::Singular("L2"))?;
    let convex_weights = -sol;
    let min_weight = convex_weights.iter().copied().fold(f64::INFINITY, f64::min);
    let max_row_sum_error = convex_weights
        .row_iter()
        .map(|r| (r.sum() - 1.0).abs())
        .fold(0.0, f64::max);
    if min_weight < -WEIGHT_NONNEG_TOL {
        return Err(Error::Certification(format!(
            "-L2^-1 L1 has negative entry {min_weight:e}"
        )));
    }
    if max_row_sum_error > WEIGHT_ROW_SUM_TOL {
        return Err(Error::Certification(format!(
            "-L2^-1 L1 row sums deviate from one by {max_row_sum_error:e}"
        )));
    }
    if !(spectrum.gershgorin_margin > 0.0) {
        return Err(Error::Certification(format!(
            "normalised spectrum leaves the unit disk around 1 (margin {:e})",
            spectrum.gershgorin_margin
        )));
    }
    Ok(SpectralCertificate {
        spectrum,
        convex_weights,
        min_weight,
        max_row_sum_error,
    })
}
