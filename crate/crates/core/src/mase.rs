//! Multiple adjacency spectral embedding with sparsity normalisation.
//!
//! Steps: estimate the edge density, take the top-`d` eigenvectors of every
//! graph, combine them into a joint basis through the top-`d` left singular
//! vectors of their concatenation, and project each graph onto that basis.
//!
//! Score matrices are only identified up to a common orthogonal change of
//! basis `W`; everything downstream consumes pairwise distances, which are
//! invariant to it.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, canonicalize_signs, orthonormality_error, SymmetricOperator};

const ORTHO_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    columns: DMatrix<f64>,
}

impl SubspaceBasis {
    pub fn new(columns: DMatrix<f64>) -> Result<Self> {
        if columns.ncols() > columns.nrows() {
            return Err(Error::argument("basis has more columns than rows"));
        }
        let err = orthonormality_error(&columns);
        if err >= ORTHO_TOL {
            return Err(Error::argument(format!("basis columns are not orthonormal (error {err:e})")));
        }
        Ok(Self { columns })
    }

    pub fn columns(&self) -> &DMatrix<f64> {
        &self.columns
    }

    pub fn dim(&self) -> usize {
        self.columns.ncols()
    }

    pub fn node_count(&self) -> usize {
        self.columns.nrows()
    }

    /// Same subspace expressed in the rotated basis `V W`.
    pub fn rotated(&self, w: &DMatrix<f64>) -> Result<Self> {
        Self::new(&self.columns * w)
    }
}

/// Estimated `d x d` score matrix; exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix(DMatrix<f64>);

impl ScoreMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::argument("score matrix must be square"));
        }
        if (&m - m.transpose()).amax() > 1e-8 {
            return Err(Error::argument("score matrix is not symmetric"));
        }
        Ok(Self(m))
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }
}

/// `vec(R / n)` plus the row-wise upper triangle (diagonal included).
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledScorePoint {
    pub coords: Vec<f64>,
    pub alt_coords: Vec<f64>,
}

impl ScaledScorePoint {
    pub fn from_matrix(q: &DMatrix<f64>) -> Self {
        let d = q.nrows();
        // nalgebra is column-major, so iteration order is vec()
        let coords = q.iter().copied().collect();
        let mut alt_coords = Vec::with_capacity(d * (d + 1) / 2);
        for i in 0..d {
            for j in i..d {
                alt_coords.push(q[(i, j)]);
            }
        }
        Self { coords, alt_coords }
    }

    pub fn dim(&self) -> usize {
        (self.coords.len() as f64).sqrt().round() as usize
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_column_slice(d, d, &self.coords)
    }
}

impl AsRef<[f64]> for ScaledScorePoint {
    fn as_ref(&self) -> &[f64] {
        &self.coords
    }
}

/// How `rho` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sparsity {
    /// Mean upper-triangle entry over all graphs.
    #[default]
    Estimate,
    /// Use a known value (e.g. `1.0` when feeding expected matrices).
    Known(f64),
}

/// Basis used when projecting each graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreBasis {
    /// The joint basis shared by all graphs.
    #[default]
    Joint,
    /// Each graph's own top-`d` eigenvectors.
    PerGraph,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MaseOptions {
    pub d: usize,
    #[serde(default)]
    pub sparsity: Sparsity,
    #[serde(default)]
    pub basis: ScoreBasis,
}

impl MaseOptions {
    pub fn new(d: usize) -> Self {
        Self {
            d,
            sparsity: Sparsity::Estimate,
            basis: ScoreBasis::Joint,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MaseOutput {
    pub scores: Vec<ScoreMatrix>,
    pub rho_hat: f64,
    pub joint_basis: SubspaceBasis,
    /// Number of eigen/singular problems with a tie at the `d` boundary.
    pub boundary_ties: usize,
}

/// `rho = sum_k sum_{i<j} A^(k)_ij / (N * C(n, 2))`. Zero is returned as is;
/// callers that divide by it must reject it.
pub fn estimate_sparsity<S: SymmetricOperator>(graphs: &[S]) -> Result<f64> {
    let Some(first) = graphs.first() else {
        return Err(Error::argument("at least one graph is required"));
    };
    let n = first.dim();
    if n < 2 {
        return Err(Error::argument("graphs need at least two nodes"));
    }
    let pairs = (n * (n - 1) / 2) as f64;
    let total: f64 = graphs.iter().map(SymmetricOperator::upper_sum).sum();
    Ok(total / (graphs.len() as f64 * pairs))
}

pub fn top_left_singular_vectors<S: SymmetricOperator + ?Sized>(a: &S, d: usize) -> Result<SubspaceBasis> {
    Ok(top_with_tie(a, d)?.0)
}

fn top_with_tie<S: SymmetricOperator + ?Sized>(a: &S, d: usize) -> Result<(SubspaceBasis, bool)> {
    let top = linalg::top_eigenpairs(a, d)?;
    Ok((SubspaceBasis::new(top.vectors)?, top.boundary_tie))
}

/// Top-`d` left singular vectors of `[V^(1) | ... | V^(N)]`.
pub fn joint_subspace(bases: &[SubspaceBasis], d: usize) -> Result<SubspaceBasis> {
    Ok(joint_with_tie(bases, d)?.0)
}

fn joint_with_tie(bases: &[SubspaceBasis], d: usize) -> Result<(SubspaceBasis, bool)> {
    let Some(first) = bases.first() else {
        return Err(Error::argument("joint subspace of an empty list"));
    };
    let n = first.node_count();
    if bases.iter().any(|b| b.node_count() != n) {
        return Err(Error::argument("bases do not share a node count"));
    }
    if d == 0 || d > n {
        return Err(Error::argument(format!("d = {d} must satisfy 1 <= d <= n = {n}")));
    }
    let width: usize = bases.iter().map(SubspaceBasis::dim).sum();
    if d > width {
        return Err(Error::argument(format!("d = {d} exceeds the concatenated width {width}")));
    }
    let mut stacked = DMatrix::zeros(n, width);
    let mut col = 0;
    for b in bases {
        stacked.columns_mut(col, b.dim()).copy_from(b.columns());
        col += b.dim();
    }

    // Left singular vectors through the (small) Gram matrix: U = V* W S^-1,
    // or directly through V* V*^T when that is the smaller side.
    let (mut u, tie) = if width < n {
        let gram = stacked.transpose() * &stacked;
        let top = linalg::dense_top(&gram, d);
        let mut u = DMatrix::zeros(n, d);
        for c in 0..top.values.len() {
            let sigma = top.values[c].max(0.0).sqrt();
            if sigma <= 1e-12 {
                return Err(Error::Singular("concatenated bases are rank deficient".into()));
            }
            u.set_column(c, &(&stacked * top.vectors.column(c) / sigma));
        }
        (u, top.boundary_tie)
    } else {
        let outer = &stacked * stacked.transpose();
        let top = linalg::dense_top(&outer, d);
        (top.vectors, top.boundary_tie)
    };
    // re-orthonormalise against rounding in the Gram route
    u = u.qr().q();
    canonicalize_signs(&mut u);
    if tie {
        log::warn!("joint subspace: singular values tie at the d = {d} boundary");
    }
    Ok((SubspaceBasis::new(u)?, tie))
}

/// `R^(k) = V^T A^(k) V / rho`, symmetrised.
fn project<S: SymmetricOperator + ?Sized>(a: &S, v: &DMatrix<f64>, rho: f64) -> ScoreMatrix {
    let n = v.nrows();
    let d = v.ncols();
    let mut av = DMatrix::zeros(n, d);
    let mut y = vec![0.0; n];
    for c in 0..d {
        let x: Vec<f64> = v.column(c).iter().copied().collect();
        a.mul_vec(&x, &mut y);
        av.column_mut(c).copy_from_slice(&y);
    }
    let r = v.transpose() * av / rho;
    ScoreMatrix((&r + r.transpose()) * 0.5)
}

/// SparseMASE with default options (estimated sparsity, joint basis).
pub fn sparse_mase<S: SymmetricOperator>(graphs: &[S], d: usize) -> Result<(Vec<ScoreMatrix>, f64)> {
    let out = sparse_mase_with(graphs, &MaseOptions::new(d))?;
    Ok((out.scores, out.rho_hat))
}

pub fn sparse_mase_with<S: SymmetricOperator>(graphs: &[S], opts: &MaseOptions) -> Result<MaseOutput> {
    let rho_hat = match opts.sparsity {
        Sparsity::Estimate => estimate_sparsity(graphs)?,
        Sparsity::Known(rho) => {
            if graphs.is_empty() {
                return Err(Error::argument("at least one graph is required"));
            }
            rho
        }
    };
    if !(rho_hat > 0.0) || !rho_hat.is_finite() {
        return Err(Error::Estimation(format!(
            "sparsity estimate is {rho_hat}; all graphs are empty"
        )));
    }
    let n = graphs[0].dim();
    if graphs.iter().any(|g| g.dim() != n) {
        return Err(Error::argument("graphs do not share a node count"));
    }
    if opts.d == 0 || opts.d > n {
        return Err(Error::argument(format!("d = {} must satisfy 1 <= d <= n = {n}", opts.d)));
    }

    let per_graph: Vec<(SubspaceBasis, bool)> = crate::par::try_map(graphs, |g| top_with_tie(g, opts.d))?;
    let mut ties = per_graph.iter().filter(|(_, t)| *t).count();
    let bases: Vec<SubspaceBasis> = per_graph.into_iter().map(|(b, _)| b).collect();
    let (joint, joint_tie) = joint_with_tie(&bases, opts.d)?;
    ties += joint_tie as usize;

    let scores = match opts.basis {
        ScoreBasis::Joint => crate::par::try_map(graphs, |g| Ok(project(g, joint.columns(), rho_hat)))?,
        ScoreBasis::PerGraph => graphs
            .iter()
            .zip(&bases)
            .map(|(g, b)| project(g, b.columns(), rho_hat))
            .collect(),
    };
    Ok(MaseOutput {
        scores,
        rho_hat,
        joint_basis: joint,
        boundary_ties: ties,
    })
}

/// `vec(R / n)` for each score matrix.
pub fn scaled_score_points(scores: &[ScoreMatrix], n: usize) -> Vec<ScaledScorePoint> {
    let n = n.max(1) as f64;
    scores
        .iter()
        .map(|r| ScaledScorePoint::from_matrix(&(r.as_matrix() / n)))
        .collect()
}

/// Euclidean distances between the `coords`, i.e. Frobenius distances
/// between the scaled score matrices.
pub fn pairwise_frobenius(points: &[ScaledScorePoint]) -> DMatrix<f64> {
    pairwise_euclidean(points)
}

pub fn pairwise_euclidean<P: AsRef<[f64]>>(points: &[P]) -> DMatrix<f64> {
    let l = points.len();
    let mut out = DMatrix::zeros(l, l);
    for h in 0..l {
        for k in (h + 1)..l {
            let dist = euclidean(points[h].as_ref(), points[k].as_ref());
            out[(h, k)] = dist;
            out[(k, h)] = dist;
        }
    }
    out
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_model::{
        balanced_membership, build_block_probability, msbm_to_cosie, noiseless_probabilities,
        AdjacencyMatrix, Curve,
    };
    use crate::linalg::projector_distance;

    fn complete(n: usize) -> AdjacencyMatrix {
        let edges: Vec<_> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
        AdjacencyMatrix::from_edges(n, &edges).unwrap()
    }

    #[test]
    fn sparsity_estimates() {
        assert_eq!(estimate_sparsity(&[complete(5), complete(5)]).unwrap(), 1.0);
        assert_eq!(estimate_sparsity(&[AdjacencyMatrix::empty(5)]).unwrap(), 0.0);
        // 2 + 1 edges over 2 * C(3, 2) = 6 pairs
        let g1 = AdjacencyMatrix::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let g2 = AdjacencyMatrix::from_edges(3, &[(0, 2)]).unwrap();
        assert_eq!(estimate_sparsity(&[g1, g2]).unwrap(), 0.5);
        assert!(estimate_sparsity::<AdjacencyMatrix>(&[]).is_err());
        assert!(estimate_sparsity(&[AdjacencyMatrix::empty(1)]).is_err());
    }

    #[test]
    fn empty_graphs_are_rejected_by_mase() {
        let err = sparse_mase(&[AdjacencyMatrix::empty(4)], 1).unwrap_err();
        assert!(matches!(err, Error::Estimation(_)));
        assert!(matches!(sparse_mase(&[complete(4)], 5), Err(Error::Argument(_))));
    }

    #[test]
    fn complete_graph_hand_computation() {
        let (scores, rho) = sparse_mase(&[complete(4)], 1).unwrap();
        assert_eq!(rho, 1.0);
        assert!((scores[0].as_matrix()[(0, 0)] - 3.0).abs() < 1e-12);
        let v = top_left_singular_vectors(&complete(4), 1).unwrap();
        for i in 0..4 {
            assert!((v.columns()[(i, 0)] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn two_block_subspace_matches_dense_oracle() {
        let b = build_block_probability(1.0, Curve::CurveB).unwrap();
        let p = crate::graph_model::probability_matrix(&balanced_membership(4, 2).unwrap(), &b).unwrap();
        let v = top_left_singular_vectors(&p, 2).unwrap();
        assert!(orthonormality_error(v.columns()) < 1e-8);
        // oracle: full dense SVD of the same matrix
        let svd = p.as_matrix().clone().svd(true, false);
        let mut idx: Vec<usize> = (0..4).collect();
        idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let u = svd.u.unwrap();
        let top = DMatrix::from_fn(4, 2, |r, c| u[(r, idx[c])]);
        assert!(projector_distance(v.columns(), &top) < 1e-8);
        // span of block indicators
        let z = balanced_membership(4, 2).unwrap().one_hot() / 2f64.sqrt();
        assert!(projector_distance(v.columns(), &z) < 1e-8);
    }

    fn basis_from(cols: &[[f64; 4]]) -> SubspaceBasis {
        let m = DMatrix::from_fn(4, cols.len(), |r, c| cols[c][r]);
        SubspaceBasis::new(m.qr().q()).unwrap()
    }

    #[test]
    fn joint_of_identical_bases() {
        let v0 = basis_from(&[[1.0, 1.0, 0.0, 0.0], [0.0, 1.0, 1.0, 1.0]]);
        let joint = joint_subspace(&[v0.clone(), v0.clone(), v0.clone()], 2).unwrap();
        assert!(projector_distance(joint.columns(), v0.columns()) < 1e-8);
        let single = joint_subspace(std::slice::from_ref(&v0), 2).unwrap();
        assert!(projector_distance(single.columns(), v0.columns()) < 1e-8);
    }

    #[test]
    fn joint_of_different_planes_matches_dense_svd() {
        let a = basis_from(&[[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]]);
        let b = basis_from(&[[1.0, 0.2, 0.3, 0.0], [0.0, 1.0, 0.0, 0.4]]);
        let joint = joint_subspace(&[a.clone(), b.clone()], 2).unwrap();
        let mut cat = DMatrix::zeros(4, 4);
        cat.columns_mut(0, 2).copy_from(a.columns());
        cat.columns_mut(2, 2).copy_from(b.columns());
        let svd = cat.svd(true, false);
        let mut idx: Vec<usize> = (0..4).collect();
        idx.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
        let u = svd.u.unwrap();
        let top = DMatrix::from_fn(4, 2, |r, c| u[(r, idx[c])]);
        assert!(projector_distance(joint.columns(), &top) < 1e-8);
    }

    #[test]
    fn scaled_points_layout() {
        let r = ScoreMatrix::new(DMatrix::identity(2, 2) * 7.0).unwrap();
        let p = scaled_score_points(&[r], 7);
        assert_eq!(p[0].coords, vec![1.0, 0.0, 0.0, 1.0]);
        let r3 = ScoreMatrix::new(DMatrix::from_row_slice(3, 3, &[1., 2., 3., 2., 4., 5., 3., 5., 6.])).unwrap();
        let p3 = scaled_score_points(std::slice::from_ref(&r3), 1);
        assert_eq!(p3[0].alt_coords, vec![1., 2., 3., 4., 5., 6.]);
        assert_eq!(&p3[0].to_matrix(), r3.as_matrix());
    }

    #[test]
    fn pairwise_distances() {
        let a = ScaledScorePoint::from_matrix(&DMatrix::zeros(2, 2));
        let b = ScaledScorePoint::from_matrix(&DMatrix::identity(2, 2));
        let d = pairwise_frobenius(&[a.clone(), b, a]);
        assert!((d[(0, 1)] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(d[(0, 2)], 0.0);
        assert_eq!(d, d.transpose());
        assert!(d.diagonal().iter().all(|&v| v == 0.0));
    }

    fn true_distances(ts: &[f64], n: usize, curve: Curve) -> DMatrix<f64> {
        let z = balanced_membership(n, 2).unwrap();
        let blocks: Vec<_> = ts.iter().map(|&t| build_block_probability(t, curve).unwrap()).collect();
        let cosie = msbm_to_cosie(&z, &blocks).unwrap();
        let pts: Vec<_> = cosie.scaled_scores().iter().map(ScaledScorePoint::from_matrix).collect();
        pairwise_frobenius(&pts)
    }

    #[test]
    fn noiseless_recovery_is_exact() {
        let ts = [0.3, 0.5, 0.61, 0.8, 0.95];
        let n = 40;
        let ps = noiseless_probabilities(&ts, n, Curve::CurveA).unwrap();
        let opts = MaseOptions {
            d: 2,
            sparsity: Sparsity::Known(1.0),
            basis: ScoreBasis::Joint,
        };
        let out = sparse_mase_with(&ps, &opts).unwrap();
        let est = pairwise_frobenius(&scaled_score_points(&out.scores, n));
        assert!((est - true_distances(&ts, n, Curve::CurveA)).amax() < 1e-8);

        // per-graph basis coincides here because every graph shares the subspace
        let per = sparse_mase_with(&ps, &MaseOptions { basis: ScoreBasis::PerGraph, ..opts }).unwrap();
        let est_per = pairwise_frobenius(&scaled_score_points(&per.scores, n));
        assert!((est_per - true_distances(&ts, n, Curve::CurveA)).amax() < 1e-8);
    }

    #[test]
    fn noiseless_recovery_lanczos_path() {
        let ts = [0.3, 0.9, 0.55];
        let n = 300;
        let ps = noiseless_probabilities(&ts, n, Curve::CurveB).unwrap();
        let opts = MaseOptions {
            d: 2,
            sparsity: Sparsity::Known(1.0),
            basis: ScoreBasis::Joint,
        };
        let out = sparse_mase_with(&ps, &opts).unwrap();
        let est = pairwise_frobenius(&scaled_score_points(&out.scores, n));
        assert!((est - true_distances(&ts, n, Curve::CurveB)).amax() < 1e-8);
    }

    #[test]
    fn scores_are_exactly_symmetric() {
        let c = crate::graph_model::sample_collection(&[0.4, 0.9, 0.7], 30, Curve::CurveA, 3).unwrap();
        let (scores, _) = sparse_mase(c.graphs(), 2).unwrap();
        for s in &scores {
            assert_eq!(s.as_matrix(), &s.as_matrix().transpose());
        }
    }
}
