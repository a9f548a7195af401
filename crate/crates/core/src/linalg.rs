//! Symmetric eigen-solvers used by the spectral embedding.
//!
//! For a symmetric matrix the left singular vectors are eigenvectors, and the
//! singular values are the absolute eigenvalues, so "top `d` singular
//! vectors" means the `d` eigenvectors of largest `|eigenvalue|`.
//!
//! Small matrices (`n <= DENSE_LIMIT`) go through a dense symmetric
//! eigendecomposition. Larger ones use Lanczos with full
//! reorthogonalisation, which only needs matrix-vector products and is
//! deterministic (fixed start vector).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::seed::mix64;

/// Matrices up to this order are decomposed densely.
pub const DENSE_LIMIT: usize = 256;

const LANCZOS_TOL: f64 = 1e-11;
const TIE_TOL: f64 = 1e-9;

/// A real symmetric `n x n` matrix that can be applied to a vector.
pub trait SymmetricOperator: Sync {
    fn dim(&self) -> usize;

    fn entry(&self, i: usize, j: usize) -> f64;

    /// `y = A x`
    fn mul_vec(&self, x: &[f64], y: &mut [f64]);

    /// Sum of the strict upper triangle.
    fn upper_sum(&self) -> f64 {
        let n = self.dim();
        let mut total = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                total += self.entry(i, j);
            }
        }
        total
    }

    fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.entry(i, j))
    }
}

impl SymmetricOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        self[(i, j)]
    }

    fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        // column-major storage: accumulate column by column
        y.iter_mut().for_each(|v| *v = 0.0);
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            let col = self.column(j);
            for (yi, &aij) in y.iter_mut().zip(col.iter()) {
                *yi += aij * xj;
            }
        }
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.clone()
    }
}

/// Leading eigenpairs ordered by decreasing `|eigenvalue|`.
#[derive(Debug, Clone)]
pub struct TopEigen {
    pub values: Vec<f64>,
    /// `n x d`, orthonormal columns with canonical signs.
    pub vectors: DMatrix<f64>,
    /// The `d`-th and `(d+1)`-th singular values coincide within tolerance,
    /// so the returned subspace is not uniquely determined.
    pub boundary_tie: bool,
}

/// Flip each column so that its entry of largest magnitude is positive
/// (ties go to the lowest row index).
pub fn canonicalize_signs(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        let mut best = 0usize;
        let mut best_abs = -1.0;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = i;
            }
        }
        if !col.is_empty() && col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

/// `||M^T M - I||_F`
pub fn orthonormality_error(m: &DMatrix<f64>) -> f64 {
    let gram = m.transpose() * m;
    (gram - DMatrix::identity(m.ncols(), m.ncols())).norm()
}

/// Sort eigen-indices by `(-|value|, index)`.
fn order_by_magnitude(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        values[b]
            .abs()
            .partial_cmp(&values[a].abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx
}

/// Eigen-decomposition of a dense symmetric matrix with eigenvalues sorted
/// ascending (ties keep solver order).
pub(crate) fn sorted_symmetric_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = m.symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, idx[c])]);
    (values, vectors)
}

fn is_tie(a: f64, b: f64, scale: f64) -> bool {
    (a.abs() - b.abs()).abs() <= TIE_TOL * scale.max(1.0)
}

/// The `d` eigenpairs of largest magnitude.
pub fn top_eigenpairs<S: SymmetricOperator + ?Sized>(a: &S, d: usize) -> Result<TopEigen> {
    let n = a.dim();
    if d == 0 || d > n {
        return Err(Error::argument(format!(
            "embedding dimension d = {d} must satisfy 1 <= d <= n = {n}"
        )));
    }
    let mut out = if n <= DENSE_LIMIT {
        dense_top(a, d)
    } else {
        lanczos_top(a, d)
    };
    canonicalize_signs(&mut out.vectors);
    if out.boundary_tie {
        log::warn!("singular values tie at the d = {d} boundary; the subspace is ill-defined");
    }
    Ok(out)
}

/// Dense reference path; also the test oracle for the Lanczos solver.
pub fn dense_top<S: SymmetricOperator + ?Sized>(a: &S, d: usize) -> TopEigen {
    let n = a.dim();
    let (values, vectors) = sorted_symmetric_eigen(a.to_dense());
    let order = order_by_magnitude(&values);
    let top: Vec<usize> = order[..d].to_vec();
    let boundary_tie = d < n && is_tie(values[order[d - 1]], values[order[d]], values[order[0]]);
    TopEigen {
        values: top.iter().map(|&i| values[i]).collect(),
        vectors: DMatrix::from_fn(n, d, |r, c| vectors[(r, top[c])]),
        boundary_tie,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Deterministic pseudo-random unit vector, orthogonalised against `basis`.
fn start_vector(n: usize, salt: u64, basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    let mut v: Vec<f64> = (0..n)
        .map(|i| {
            let bits = mix64(mix64(salt) ^ i as u64);
            (bits >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect();
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, &v);
            axpy(-c, q, &mut v);
        }
    }
    let norm = dot(&v, &v).sqrt();
    if norm < 1e-8 {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Some(v)
}

/// Lanczos with full reorthogonalisation. The Krylov basis grows until the
/// `d` Ritz pairs of largest magnitude have residual below
/// `LANCZOS_TOL * |theta_max|`, or until it spans the whole space.
pub fn lanczos_top<S: SymmetricOperator + ?Sized>(a: &S, d: usize) -> TopEigen {
    let n = a.dim();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    // beta[j] couples basis[j] and basis[j + 1]
    let mut beta: Vec<f64> = Vec::new();
    let mut salt = 0u64;
    basis.push(start_vector(n, salt, &[]).expect("n >= 1"));

    let first_check = n.min((2 * d + 20).max(40));
    let mut w = vec![0.0; n];
    loop {
        let j = basis.len() - 1;
        a.mul_vec(&basis[j], &mut w);
        let aj = dot(&basis[j], &w);
        alpha.push(aj);
        axpy(-aj, &basis[j], &mut w);
        if j > 0 {
            axpy(-beta[j - 1], &basis[j - 1], &mut w);
        }
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                axpy(-c, q, &mut w);
            }
        }
        let bj = dot(&w, &w).sqrt();
        let m = basis.len();
        let scale = alpha.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-300);
        let breakdown = bj <= 1e-12 * scale;

        if m == n || (m >= d && (breakdown || m >= first_check && (m - first_check).is_multiple_of(10))) {
            let resid = if breakdown { 0.0 } else { bj };
            if let Some(out) = ritz_if_converged(&basis, &alpha, &beta, resid, d, m == n) {
                return out;
            }
        }

        if breakdown {
            // invariant subspace found: continue with a fresh direction
            beta.push(0.0);
            loop {
                salt += 1;
                if let Some(v) = start_vector(n, salt, &basis) {
                    basis.push(v);
                    break;
                }
            }
        } else {
            beta.push(bj);
            basis.push(w.iter().map(|x| x / bj).collect());
        }
    }
}

fn ritz_if_converged(
    basis: &[Vec<f64>],
    alpha: &[f64],
    beta: &[f64],
    resid: f64,
    d: usize,
    complete: bool,
) -> Option<TopEigen> {
    let m = alpha.len();
    let n = basis[0].len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let (values, s) = sorted_symmetric_eigen(t);
    let order = order_by_magnitude(&values);
    let theta_max = values[order[0]].abs().max(1e-300);
    if !complete {
        for &i in &order[..d] {
            if (resid * s[(m - 1, i)]).abs() > LANCZOS_TOL * theta_max {
                return None;
            }
        }
    }
    let top: Vec<usize> = order[..d].to_vec();
    let mut vectors = DMatrix::zeros(n, d);
    for (c, &i) in top.iter().enumerate() {
        let mut col = DVector::zeros(n);
        for (k, q) in basis.iter().enumerate() {
            let coef = s[(k, i)];
            for r in 0..n {
                col[r] += coef * q[r];
            }
        }
        vectors.set_column(c, &col);
    }
    let boundary_tie = d < m && is_tie(values[order[d - 1]], values[order[d]], theta_max);
    Some(TopEigen {
        values: top.iter().map(|&i| values[i]).collect(),
        vectors,
        boundary_tie,
    })
}

/// `||U U^T - V V^T||_F`, the distance between the subspaces spanned by
/// orthonormal bases `U` and `V`.
pub fn projector_distance(u: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    (u * u.transpose() - v * v.transpose()).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = (mix64(seed ^ (i * n + j) as u64) >> 11) as f64 / (1u64 << 53) as f64;
                m[(i, j)] = v - 0.5;
                m[(j, i)] = v - 0.5;
            }
        }
        m
    }

    #[test]
    fn rank_one_recovers_direction_with_canonical_sign() {
        let u = DVector::from_vec(vec![0.5, -0.5, 0.5, -0.5]);
        let a = &u * u.transpose();
        let top = top_eigenpairs(&a, 1).unwrap();
        assert!((top.values[0] - 1.0).abs() < 1e-12);
        // largest |entry| tie -> lowest index positive
        assert!((top.vectors[(0, 0)] - 0.5).abs() < 1e-12);
        assert!((top.vectors[(1, 0)] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn orders_by_magnitude_not_sign() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -5.0, 3.0]));
        let top = top_eigenpairs(&a, 2).unwrap();
        assert_eq!(top.values, vec![-5.0, 3.0]);
    }

    #[test]
    fn d_out_of_range_is_rejected() {
        let a = DMatrix::<f64>::identity(3, 3);
        assert!(top_eigenpairs(&a, 0).is_err());
        assert!(top_eigenpairs(&a, 4).is_err());
    }

    #[test]
    fn identity_flags_boundary_tie() {
        let a = DMatrix::<f64>::identity(4, 4);
        assert!(top_eigenpairs(&a, 2).unwrap().boundary_tie);
    }

    #[test]
    fn lanczos_matches_dense_on_random_matrix() {
        let a = random_symmetric(120, 3);
        let dense = dense_top(&a, 3);
        let mut lz = lanczos_top(&a, 3);
        canonicalize_signs(&mut lz.vectors);
        let mut dv = dense.vectors.clone();
        canonicalize_signs(&mut dv);
        for (x, y) in dense.values.iter().zip(&lz.values) {
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
        assert!(projector_distance(&dv, &lz.vectors) < 1e-7);
        assert!(orthonormality_error(&lz.vectors) < 1e-10);
    }

    #[test]
    fn lanczos_handles_low_rank_breakdown() {
        let n = 300;
        let u = DVector::from_fn(n, |i, _| if i < n / 2 { 1.0 } else { 0.0 });
        let v = DVector::from_fn(n, |i, _| if i < n / 2 { 0.0 } else { 1.0 });
        let a = &u * u.transpose() * 0.5 + &v * v.transpose() * 0.3 + (&u * v.transpose() + &v * u.transpose()) * 0.1;
        let dense = dense_top(&a, 2);
        let lz = lanczos_top(&a, 2);
        for (x, y) in dense.values.iter().zip(&lz.values) {
            assert!((x - y).abs() < 1e-8 * x.abs());
        }
        assert!(projector_distance(&dense.vectors, &lz.vectors) < 1e-8);
    }

    #[test]
    fn lanczos_finds_more_vectors_than_rank() {
        // rank one, d = 3: the remaining vectors come from the null space
        let n = 50;
        let u = DVector::from_element(n, 1.0 / (n as f64).sqrt());
        let a = &u * u.transpose();
        let lz = lanczos_top(&a, 3);
        assert!((lz.values[0] - 1.0).abs() < 1e-12);
        assert!(orthonormality_error(&lz.vectors) < 1e-10);
    }
}
