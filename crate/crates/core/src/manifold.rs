//! One-dimensional isomap by raw-stress minimisation.
//!
//! Pipeline: neighbourhood (localization) graph on the points, weighted
//! shortest paths from each of the first `l` points, classical MDS for a
//! starting configuration, then SMACOF (Guttman transform) iterations on the
//! unit-weight raw stress
//!
//! ```text
//! sigma(z) = sum_{h,k} (|z_h - z_k| - D_hk)^2      (all ordered pairs)
//! ```
//!
//! Embeddings are defined up to sign and translation; outputs are centred.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::DMatrix;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::linalg::sorted_symmetric_eigen;
use crate::mase::euclidean;
use crate::seed;

#[derive(Debug, Clone)]
pub struct LocalizationGraph {
    node_count: usize,
    lambda: f64,
    edges: Vec<(usize, usize, f64)>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl LocalizationGraph {
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Undirected edges `(h, k, weight)` with `h < k`.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn neighbours(&self, h: usize) -> &[(usize, f64)] {
        &self.adjacency[h]
    }
}

/// Edge `(h, k)` iff `||p_h - p_k|| < lambda`, weighted by that distance.
pub fn localization_graph<P: AsRef<[f64]>>(points: &[P], lambda: f64) -> Result<LocalizationGraph> {
    if !(lambda > 0.0) {
        return Err(Error::argument(format!("lambda = {lambda} must be positive")));
    }
    if let Some(first) = points.first() {
        let dim = first.as_ref().len();
        if points.iter().any(|p| p.as_ref().len() != dim) {
            return Err(Error::argument("points do not share a dimension"));
        }
    }
    let n = points.len();
    let mut edges = Vec::new();
    let mut adjacency = vec![Vec::new(); n];
    for h in 0..n {
        for k in (h + 1)..n {
            let w = euclidean(points[h].as_ref(), points[k].as_ref());
            if w < lambda {
                edges.push((h, k, w));
                adjacency[h].push((k, w));
                adjacency[k].push((h, w));
            }
        }
    }
    Ok(LocalizationGraph {
        node_count: n,
        lambda,
        edges,
        adjacency,
    })
}

/// Symmetric, hollow, non-negative, finite dissimilarities.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix(DMatrix<f64>);

impl DissimilarityMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::argument("dissimilarity matrix must be square"));
        }
        let l = m.nrows();
        for h in 0..l {
            if m[(h, h)] != 0.0 {
                return Err(Error::argument(format!("non-zero diagonal at {h}")));
            }
            for k in 0..l {
                let v = m[(h, k)];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::argument(format!("entry ({h}, {k}) = {v} is not a finite non-negative value")));
                }
                if v != m[(k, h)] {
                    return Err(Error::argument(format!("not symmetric at ({h}, {k})")));
                }
            }
        }
        Ok(Self(m))
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.nrows() == 0
    }

    pub fn get(&self, h: usize, k: usize) -> f64 {
        self.0[(h, k)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding1D(pub Vec<f64>);

impl Embedding1D {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn centred(mut self) -> Self {
        if !self.0.is_empty() {
            let mean = self.0.iter().sum::<f64>() / self.0.len() as f64;
            self.0.iter_mut().for_each(|z| *z -= mean);
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct StressTrace {
    /// Stress of the starting point followed by one value per iteration.
    pub values: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl StressTrace {
    pub fn is_non_increasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0])
    }

    pub fn final_stress(&self) -> f64 {
        *self.values.last().unwrap_or(&0.0)
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    dist: f64,
    node: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, ties by node index
        other.dist.total_cmp(&self.dist).then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(g: &LocalizationGraph, source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; g.node_count];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Candidate { dist: 0.0, node: source });
    while let Some(Candidate { dist: du, node: u }) = heap.pop() {
        if du > dist[u] {
            continue;
        }
        for &(v, w) in &g.adjacency[u] {
            let alt = du + w;
            if alt < dist[v] {
                dist[v] = alt;
                heap.push(Candidate { dist: alt, node: v });
            }
        }
    }
    dist
}

/// Shortest-path distances among the first `l` nodes; paths may pass
/// through any node of the graph.
pub fn shortest_path_matrix(g: &LocalizationGraph, l: usize) -> Result<DissimilarityMatrix> {
    if l > g.node_count {
        return Err(Error::argument(format!(
            "l = {l} exceeds the {} graph nodes",
            g.node_count
        )));
    }
    let rows: Vec<Vec<f64>> = (0..l).map(|h| dijkstra(g, h)).collect();
    let mut m = DMatrix::zeros(l, l);
    for h in 0..l {
        for k in (h + 1)..l {
            let d = rows[h][k];
            if !d.is_finite() {
                return Err(Error::Connectivity {
                    first: h,
                    second: k,
                    lambda: g.lambda,
                });
            }
            // symmetrise the two runs to guard against summation-order rounding
            let d = 0.5 * (d + rows[k][h]);
            m[(h, k)] = d;
            m[(k, h)] = d;
        }
    }
    DissimilarityMatrix::new(m)
}

pub fn raw_stress(z: &Embedding1D, delta: &DissimilarityMatrix) -> f64 {
    raw_stress_slice(&z.0, delta.as_matrix())
}

fn raw_stress_slice(z: &[f64], delta: &DMatrix<f64>) -> f64 {
    let l = z.len();
    let mut s = 0.0;
    for h in 0..l {
        for k in 0..l {
            let r = (z[h] - z[k]).abs() - delta[(h, k)];
            s += r * r;
        }
    }
    s
}

/// Classical MDS to one dimension: top eigenpair of `-1/2 J (D o D) J`.
pub fn cmds_embed(delta: &DissimilarityMatrix) -> Embedding1D {
    let l = delta.len();
    if l == 0 {
        return Embedding1D(Vec::new());
    }
    let d = delta.as_matrix();
    let sq = d.component_mul(d);
    let row_means: Vec<f64> = (0..l).map(|i| sq.row(i).sum() / l as f64).collect();
    let grand = row_means.iter().sum::<f64>() / l as f64;
    let b = DMatrix::from_fn(l, l, |i, j| -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand));
    let (values, vectors) = sorted_symmetric_eigen(b);
    let top = values[l - 1];
    if !(top > 0.0) {
        log::warn!("classical MDS: leading eigenvalue {top} is not positive; returning the zero embedding");
        return Embedding1D(vec![0.0; l]);
    }
    let mut v: Vec<f64> = vectors.column(l - 1).iter().map(|x| x * top.sqrt()).collect();
    let (imax, _) = v
        .iter()
        .enumerate()
        .fold((0, -1.0), |acc, (i, x)| if x.abs() > acc.1 { (i, x.abs()) } else { acc });
    if v[imax] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    Embedding1D(v).centred()
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SmacofOptions {
    /// Relative stress decrease below which iteration stops.
    pub tol: f64,
    pub max_iter: usize,
    /// Extra random starts in addition to the classical MDS start.
    #[serde(default)]
    pub restarts: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for SmacofOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 1000,
            restarts: 0,
            seed: 0,
        }
    }
}

/// One Guttman transform for unit weights in one dimension:
/// `z+_h = (1/l) sum_k [z_k + D_hk sgn(z_h - z_k)]`, `sgn(0) = 0`.
fn guttman_step(z: &[f64], delta: &DMatrix<f64>, out: &mut [f64]) {
    let l = z.len();
    let mean = z.iter().sum::<f64>() / l as f64;
    for h in 0..l {
        let mut pull = 0.0;
        for k in 0..l {
            let diff = z[h] - z[k];
            if diff > 0.0 {
                pull += delta[(h, k)];
            } else if diff < 0.0 {
                pull -= delta[(h, k)];
            }
        }
        out[h] = mean + pull / l as f64;
    }
}

/// Iterative majorisation from `z0`. The recorded trace is non-increasing:
/// an iterate whose stress rises (possible only through rounding) is
/// discarded and iteration stops.
pub fn smacof_minimize(
    delta: &DissimilarityMatrix,
    z0: &Embedding1D,
    tol: f64,
    max_iter: usize,
) -> Result<(Embedding1D, StressTrace)> {
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::argument("smacof needs tol > 0 and max_iter >= 1"));
    }
    let d = delta.as_matrix();
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::argument("dissimilarities must be finite"));
    }
    if z0.len() != delta.len() {
        return Err(Error::argument("initial configuration length does not match"));
    }
    let mut z = z0.0.clone();
    let mut next = vec![0.0; z.len()];
    let mut stress = raw_stress_slice(&z, d);
    let mut values = vec![stress];
    let mut converged = stress == 0.0;
    let mut iterations = 0;
    while !converged && iterations < max_iter {
        guttman_step(&z, d, &mut next);
        let s = raw_stress_slice(&next, d);
        iterations += 1;
        if s > stress {
            converged = true;
            break;
        }
        std::mem::swap(&mut z, &mut next);
        let drop = stress - s;
        stress = s;
        values.push(s);
        if s == 0.0 || drop < tol * values[values.len() - 2] {
            converged = true;
        }
    }
    Ok((
        Embedding1D(z).centred(),
        StressTrace {
            values,
            iterations,
            converged,
        },
    ))
}

/// Classical-MDS start plus `opts.restarts` random starts; keeps the
/// lowest final stress. Returns the embedding, its trace and the stress of
/// the classical-MDS start.
pub fn smacof_from_cmds(delta: &DissimilarityMatrix, opts: &SmacofOptions) -> Result<(Embedding1D, StressTrace, f64)> {
    let init = cmds_embed(delta);
    let init_stress = raw_stress(&init, delta);
    let (mut best, mut best_trace) = smacof_minimize(delta, &init, opts.tol, opts.max_iter)?;
    if opts.restarts > 0 {
        let scale = delta.as_matrix().max().max(1e-12);
        let mut rng = seed::rng(opts.seed);
        for _ in 0..opts.restarts {
            let start = Embedding1D((0..delta.len()).map(|_| rng.random_range(-scale..scale)).collect());
            let (z, trace) = smacof_minimize(delta, &start, opts.tol, opts.max_iter)?;
            if trace.final_stress() < best_trace.final_stress() {
                best = z;
                best_trace = trace;
            }
        }
    }
    Ok((best, best_trace, init_stress))
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IsomapOptions {
    pub lambda: f64,
    pub l: usize,
    #[serde(default)]
    pub smacof: SmacofOptions,
}

#[derive(Debug, Clone)]
pub struct IsomapOutput {
    pub embedding: Embedding1D,
    pub dissimilarity: DissimilarityMatrix,
    pub trace: StressTrace,
    pub init_stress: f64,
    pub edge_count: usize,
}

pub fn isomap_1d<P: AsRef<[f64]>>(points: &[P], lambda: f64, l: usize) -> Result<Embedding1D> {
    let opts = IsomapOptions {
        lambda,
        l,
        smacof: SmacofOptions::default(),
    };
    Ok(isomap_1d_with(points, &opts)?.embedding)
}

pub fn isomap_1d_with<P: AsRef<[f64]>>(points: &[P], opts: &IsomapOptions) -> Result<IsomapOutput> {
    if opts.l == 0 || opts.l > points.len() {
        return Err(Error::argument(format!(
            "l = {} must satisfy 1 <= l <= {} points",
            opts.l,
            points.len()
        )));
    }
    let graph = localization_graph(points, opts.lambda)?;
    let delta = shortest_path_matrix(&graph, opts.l)?;
    let (embedding, trace, init_stress) = smacof_from_cmds(&delta, &opts.smacof)?;
    Ok(IsomapOutput {
        embedding,
        dissimilarity: delta,
        trace,
        init_stress,
        edge_count: graph.edges.len(),
    })
}
