//! Small dense-vector/matrix helpers shared across the crate.

use ndarray::prelude::*;
use num_complex::Complex64 as C64;

pub(crate) fn vec_inner(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = C64::new(0.0, 0.0);
    for (x, y) in a.iter().zip(b.iter()) {
        acc += x.conj() * *y;
    }
    acc
}

pub(crate) fn vec_norm_sq(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

pub(crate) fn vec_norm(a: &[C64]) -> f64 {
    vec_norm_sq(a).sqrt()
}


pub(crate) fn vec_dist(a: &[C64], b: &[C64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        acc += (*x - *y).norm_sqr();
    }
    acc.sqrt()
}


/// Hilbert-Schmidt inner product Tr(A†B).
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn hs_inner(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> C64 {
    debug_assert_eq!(a.dim(), b.dim());
    let mut acc = C64::new(0.0, 0.0);
    for (x, y) in a.iter().zip(b.iter()) {
        acc += x.conj() * *y;
    }
    acc
}

pub(crate) fn hs_norm(a: &ArrayView2<C64>) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn adjoint(a: &ArrayView2<C64>) -> Array2<C64> {
    let mut out = Array2::zeros((a.ncols(), a.nrows()));
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            out[[j, i]] = a[[i, j]].conj();
        }
    }
    out
}


pub(crate) fn identity(n: usize) -> Array2<C64> {
    Array2::eye(n)
}


/// Projector matrix B B† from an orthonormal column basis B.
pub(crate) fn projector_from_basis(basis: &ArrayView2<C64>) -> Array2<C64> {
    basis.dot(&adjoint(basis).view())
}

/// Modified Gram-Schmidt insertion with re-orthogonalization.
///
/// Orthogonalizes `cand` against `basis` (twice, for stability) and appends
/// the normalized residual when its norm exceeds `cut`. Returns whether the
/// candidate enlarged the span.
pub(crate) fn mgs_insert(basis: &mut Vec<Vec<C64>>, cand: &[C64], cut: f64) -> bool {
    let mut v = cand.to_vec();
    for _ in 0..2 {
        for b in basis.iter() {
            let c = vec_inner(b, &v);
            for (vi, bi) in v.iter_mut().zip(b.iter()) {
                *vi -= c * *bi;
            }
        }
    }
    let n = vec_norm(&v);
    if n > cut {
        let inv = 1.0 / n;
        for vi in v.iter_mut() {
            *vi *= inv;
        }
        basis.push(v);
        true
    } else {
        false
    }
}

/// Orthonormalize a list of vectors, keeping directions whose residual norm
/// exceeds `cut` relative to the largest input norm.
pub(crate) fn orthonormalize(vectors: &[Vec<C64>], rel_cut: f64) -> Vec<Vec<C64>> {
    let max_norm = vectors.iter().map(|v| vec_norm(v)).fold(0.0f64, f64::max);
    if max_norm == 0.0 {
        return Vec::new();
    }
    let cut = max_norm * rel_cut;
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for v in vectors {
        mgs_insert(&mut basis, v, cut);
    }
    basis
}

/// Pack column vectors into a d x k matrix.
pub(crate) fn columns_to_matrix(cols: &[Vec<C64>]) -> Array2<C64> {
    if cols.is_empty() {
        return Array2::zeros((0, 0));
    }
    let d = cols[0].len();
    let mut out = Array2::zeros((d, cols.len()));
    for (j, c) in cols.iter().enumerate() {
        for i in 0..d {
            out[[i, j]] = c[i];
        }
    }
    out
}

pub(crate) fn matrix_columns(a: &ArrayView2<C64>) -> Vec<Vec<C64>> {
    (0..a.ncols()).map(|j| a.column(j).to_vec()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mgs_detects_dependence() {
        let v1 = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let v2 = vec![C64::new(2.0, 0.0), C64::new(0.0, 0.0)];
        let v3 = vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)];
        let mut basis = Vec::new();
        assert!(mgs_insert(&mut basis, &v1, 1e-10));
        assert!(!mgs_insert(&mut basis, &v2, 1e-10));
        assert!(mgs_insert(&mut basis, &v3, 1e-10));
        assert_eq!(basis.len(), 2);
        assert!(vec_inner(&basis[0], &basis[1]).norm() < 1e-14);
    }
}
