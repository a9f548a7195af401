//! Multilayer stochastic blockmodels and their common-subspace parameterisation.
//!
//! Community indices are zero-based throughout.

use nalgebra::DMatrix;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::linalg::SymmetricOperator;
use crate::seed;

fn check_symmetric_unit(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::argument(format!("{what} must be square")));
    }
    let n = m.nrows();
    for i in 0..n {
        for j in 0..n {
            let v = m[(i, j)];
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::argument(format!(
                    "{what} entry ({i}, {j}) = {v} is not a probability"
                )));
            }
            if v != m[(j, i)] {
                return Err(Error::argument(format!("{what} is not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// Symmetric `K x K` matrix of block connection probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix(DMatrix<f64>);

impl BlockMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        check_symmetric_unit(&entries, "block matrix")?;
        Ok(Self(entries))
    }

    pub fn blocks(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// The two one-parameter families of 2x2 block matrices used in the
/// simulation studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Curve {
    /// diagonal `t / a`, off-diagonal `t / b` with `a = sqrt(2)/sin(1)` and
    /// `b = sqrt(2)/cos(1)`; `vec(B(t))` traces an arclength-parameterised
    /// segment.
    CurveA,
    /// diagonal `t / 2`, off-diagonal `t / 5`.
    CurveB,
}

impl Curve {
    /// `(diagonal, off-diagonal)` divisors.
    pub fn divisors(self) -> (f64, f64) {
        match self {
            Curve::CurveA => {
                let r2 = std::f64::consts::SQRT_2;
                (r2 / 1f64.sin(), r2 / 1f64.cos())
            }
            Curve::CurveB => (2.0, 5.0),
        }
    }

    /// Largest `t` that keeps every entry a probability.
    pub fn max_t(self) -> f64 {
        self.divisors().0.min(self.divisors().1)
    }

    /// The manifold point `vec(B(t))`, column-stacked.
    pub fn point(self, t: f64) -> [f64; 4] {
        let (a, b) = self.divisors();
        [t / a, t / b, t / b, t / a]
    }
}

impl std::str::FromStr for Curve {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a" | "curve-a" => Ok(Curve::CurveA),
            "b" | "curve-b" => Ok(Curve::CurveB),
            other => Err(Error::argument(format!("unknown curve variant `{other}`"))),
        }
    }
}

pub fn build_block_probability(t: f64, variant: Curve) -> Result<BlockMatrix> {
    let hi = variant.max_t();
    if !t.is_finite() || !(0.0..=hi).contains(&t) {
        return Err(Error::Range {
            what: "t",
            value: t,
            lo: 0.0,
            hi,
        });
    }
    let (a, b) = variant.divisors();
    let m = DMatrix::from_row_slice(2, 2, &[t / a, t / b, t / b, t / a]);
    BlockMatrix::new(m)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommunityMembership {
    assignment: Vec<usize>,
    communities: usize,
}

impl CommunityMembership {
    pub fn new(assignment: Vec<usize>, communities: usize) -> Result<Self> {
        if let Some(&bad) = assignment.iter().find(|&&c| c >= communities) {
            return Err(Error::argument(format!(
                "community index {bad} out of range for {communities} communities"
            )));
        }
        Ok(Self {
            assignment,
            communities,
        })
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn communities(&self) -> usize {
        self.communities
    }

    pub fn node_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.communities];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }

    /// One-hot `n x K` matrix `Z`.
    pub fn one_hot(&self) -> DMatrix<f64> {
        let mut z = DMatrix::zeros(self.assignment.len(), self.communities);
        for (i, &c) in self.assignment.iter().enumerate() {
            z[(i, c)] = 1.0;
        }
        z
    }
}

/// First `n/K` nodes in community 0, the next `n/K` in community 1, ...
pub fn balanced_membership(n: usize, k: usize) -> Result<CommunityMembership> {
    if k == 0 || n == 0 || !n.is_multiple_of(k) {
        return Err(Error::argument(format!(
            "balanced membership needs K = {k} to divide n = {n}"
        )));
    }
    let per = n / k;
    CommunityMembership::new((0..n).map(|i| i / per).collect(), k)
}

/// Symmetric `n x n` matrix of edge probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix(DMatrix<f64>);

impl ProbabilityMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        check_symmetric_unit(&entries, "probability matrix")?;
        Ok(Self(entries))
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn node_count(&self) -> usize {
        self.0.nrows()
    }
}

impl SymmetricOperator for ProbabilityMatrix {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        self.0.mul_vec(x, y)
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.0.clone()
    }
}

/// `P = Z B Z^T`, i.e. `P_ij = B[c(i), c(j)]`.
pub fn probability_matrix(z: &CommunityMembership, b: &BlockMatrix) -> Result<ProbabilityMatrix> {
    if z.communities() > b.blocks() {
        return Err(Error::argument(format!(
            "membership uses {} communities but the block matrix has {}",
            z.communities(),
            b.blocks()
        )));
    }
    let c = z.assignment();
    let bm = b.as_matrix();
    let n = c.len();
    Ok(ProbabilityMatrix(DMatrix::from_fn(n, n, |i, j| bm[(c[i], c[j])])))
}

/// Binary, symmetric, hollow adjacency matrix (row-major, one byte per entry).
#[derive(Clone, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    n: usize,
    data: Vec<u8>,
}

impl std::fmt::Debug for AdjacencyMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AdjacencyMatrix")
            .field("n", &self.n)
            .field("edges", &self.edge_count())
            .finish()
    }
}

impl AdjacencyMatrix {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            data: vec![0; n * n],
        }
    }

    /// Build from undirected edges; self-loops and duplicates are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut a = Self::empty(n);
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::argument(format!("edge ({i}, {j}) out of range for n = {n}")));
            }
            if i == j {
                return Err(Error::argument(format!("self-loop at node {i}")));
            }
            a.set(i, j, true);
        }
        Ok(a)
    }

    /// Validate a dense 0/1 matrix.
    pub fn from_dense(m: &DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::argument("adjacency matrix must be square"));
        }
        let n = m.nrows();
        let mut a = Self::empty(n);
        for i in 0..n {
            for j in 0..n {
                let v = m[(i, j)];
                if v != 0.0 && v != 1.0 {
                    return Err(Error::argument(format!("entry ({i}, {j}) = {v} is not binary")));
                }
                if v != m[(j, i)] {
                    return Err(Error::argument(format!("not symmetric at ({i}, {j})")));
                }
                if i == j && v != 0.0 {
                    return Err(Error::argument(format!("non-zero diagonal at {i}")));
                }
                a.data[i * n + j] = v as u8;
            }
        }
        Ok(a)
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, edge: bool) {
        let v = edge as u8;
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.data[i * self.n + j] != 0
    }

    pub fn edge_count(&self) -> usize {
        (0..self.n)
            .map(|i| self.data[i * self.n + i + 1..(i + 1) * self.n].iter().filter(|&&v| v != 0).count())
            .sum()
    }

    pub fn density(&self) -> f64 {
        let pairs = self.n * self.n.saturating_sub(1) / 2;
        if pairs == 0 {
            0.0
        } else {
            self.edge_count() as f64 / pairs as f64
        }
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn is_symmetric_hollow_binary(&self) -> bool {
        (0..self.n).all(|i| {
            self.data[i * self.n + i] == 0
                && (0..self.n).all(|j| {
                    let v = self.data[i * self.n + j];
                    v <= 1 && v == self.data[j * self.n + i]
                })
        })
    }
}

impl SymmetricOperator for AdjacencyMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j] as f64
    }

    fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self
                .row(i)
                .iter()
                .zip(x)
                .map(|(&a, &xv)| f64::from(a) * xv)
                .sum();
        }
    }

    fn upper_sum(&self) -> f64 {
        self.edge_count() as f64
    }
}

/// Independent Bernoulli draws on the strict upper triangle (row-major
/// order, one `f64` draw per pair), mirrored; the diagonal is always zero.
pub fn sample_adjacency(p: &ProbabilityMatrix, seed: u64) -> AdjacencyMatrix {
    let n = p.node_count();
    let pm = p.as_matrix();
    let mut rng = seed::rng(seed);
    let mut a = AdjacencyMatrix::empty(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let u: f64 = rng.random();
            if u < pm[(i, j)] {
                a.set(i, j, true);
            }
        }
    }
    a
}

/// `(V; R^(1..N); rho)` with `E[A^(k)] = rho V R^(k) V^T`.
#[derive(Debug, Clone)]
pub struct CosieParameters {
    pub subspace: DMatrix<f64>,
    pub scores: Vec<DMatrix<f64>>,
    pub sparsity: f64,
}

impl CosieParameters {
    pub fn dim(&self) -> usize {
        self.subspace.ncols()
    }

    pub fn probability(&self, k: usize) -> DMatrix<f64> {
        &self.subspace * &self.scores[k] * self.subspace.transpose() * self.sparsity
    }

    /// Re-express the parameters with `rho` equal to the mean strict
    /// upper-triangle edge probability over all graphs, the quantity the
    /// sparsity estimator targets: `R^(k) -> R^(k) / rho`, `rho -> rho * rho0`.
    pub fn sparse_normalized(&self) -> Self {
        let n = self.subspace.nrows();
        let pairs = (n * n.saturating_sub(1) / 2) as f64;
        let mut total = 0.0;
        for k in 0..self.scores.len() {
            let p = self.probability(k);
            for i in 0..n {
                for j in (i + 1)..n {
                    total += p[(i, j)];
                }
            }
        }
        let rho = total / (pairs * self.scores.len() as f64);
        Self {
            subspace: self.subspace.clone(),
            scores: self.scores.iter().map(|r| r * self.sparsity / rho).collect(),
            sparsity: rho,
        }
    }

    /// `Q^(k) = R^(k) / n`
    pub fn scaled_scores(&self) -> Vec<DMatrix<f64>> {
        let n = self.subspace.nrows() as f64;
        self.scores.iter().map(|r| r / n).collect()
    }
}

/// `V = Z (Z^T Z)^{-1/2}`, `R^(k) = (Z^T Z)^{1/2} B^(k) (Z^T Z)^{1/2}`.
pub fn msbm_to_cosie(z: &CommunityMembership, blocks: &[BlockMatrix]) -> Result<CosieParameters> {
    let sizes = z.sizes();
    if let Some(empty) = sizes.iter().position(|&c| c == 0) {
        return Err(Error::Singular(format!("community {empty} is empty; Z^T Z is singular")));
    }
    let root: Vec<f64> = sizes.iter().map(|&c| (c as f64).sqrt()).collect();
    let mut v = z.one_hot();
    for (c, mut col) in v.column_iter_mut().enumerate() {
        col /= root[c];
    }
    let scores = blocks
        .iter()
        .map(|b| {
            if b.blocks() != sizes.len() {
                return Err(Error::argument("block matrix size does not match membership"));
            }
            let bm = b.as_matrix();
            Ok(DMatrix::from_fn(bm.nrows(), bm.ncols(), |i, j| root[i] * bm[(i, j)] * root[j]))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CosieParameters {
        subspace: v,
        scores,
        sparsity: 1.0,
    })
}

/// Graphs on a shared node set, optionally with responses on the first `s`.
#[derive(Debug, Clone)]
pub struct GraphCollection {
    graphs: Vec<AdjacencyMatrix>,
    responses: Option<Vec<f64>>,
    true_regressors: Option<Vec<f64>>,
}

impl GraphCollection {
    pub fn new(graphs: Vec<AdjacencyMatrix>) -> Result<Self> {
        if let Some(first) = graphs.first() {
            let n = first.node_count();
            if let Some(k) = graphs.iter().position(|g| g.node_count() != n) {
                return Err(Error::argument(format!(
                    "graph {k} has {} nodes, expected {n}",
                    graphs[k].node_count()
                )));
            }
        }
        Ok(Self {
            graphs,
            responses: None,
            true_regressors: None,
        })
    }

    pub fn with_responses(mut self, responses: Vec<f64>) -> Result<Self> {
        if responses.len() > self.graphs.len() {
            return Err(Error::argument(format!(
                "{} responses for {} graphs",
                responses.len(),
                self.graphs.len()
            )));
        }
        self.responses = Some(responses);
        Ok(self)
    }

    pub fn with_true_regressors(mut self, ts: Vec<f64>) -> Result<Self> {
        if ts.len() != self.graphs.len() {
            return Err(Error::argument("one true regressor per graph is required"));
        }
        self.true_regressors = Some(ts);
        Ok(self)
    }

    pub fn graphs(&self) -> &[AdjacencyMatrix] {
        &self.graphs
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.graphs.first().map_or(0, AdjacencyMatrix::node_count)
    }

    pub fn responses(&self) -> Option<&[f64]> {
        self.responses.as_deref()
    }

    pub fn labeled(&self) -> usize {
        self.responses.as_ref().map_or(0, Vec::len)
    }

    pub fn true_regressors(&self) -> Option<&[f64]> {
        self.true_regressors.as_deref()
    }
}

/// One balanced two-block graph per `t`; graph `k` is drawn with seed
/// `base_seed ^ k`.
pub fn sample_collection(ts: &[f64], n: usize, variant: Curve, base_seed: u64) -> Result<GraphCollection> {
    let z = balanced_membership(n, 2)?;
    let graphs = ts
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let b = build_block_probability(t, variant)?;
            let p = probability_matrix(&z, &b)?;
            Ok(sample_adjacency(&p, seed::graph_seed(base_seed, k)))
        })
        .collect::<Result<Vec<_>>>()?;
    GraphCollection::new(graphs)?.with_true_regressors(ts.to_vec())
}

/// Expected adjacency matrices (diagonal included) for the same model; the
/// noise-free counterpart of [`sample_collection`].
pub fn noiseless_probabilities(ts: &[f64], n: usize, variant: Curve) -> Result<Vec<ProbabilityMatrix>> {
    let z = balanced_membership(n, 2)?;
    ts.iter()
        .map(|&t| probability_matrix(&z, &build_block_probability(t, variant)?))
        .collect()
}
