//! Thin wrappers over the system LAPACK (zheev, zgesdd).
//!
//! ndarray is row-major while LAPACK is column-major; both wrappers take and
//! return row-major arrays and do the transpose bookkeeping internally.

use crate::{Error, Result};
use ndarray::prelude::*;
use num_complex::Complex64 as C64;
use std::ffi::c_char;

unsafe extern "C" {
    fn zheev_(
        jobz: *const c_char,
        uplo: *const c_char,
        n: *const i32,
        a: *mut C64,
        lda: *const i32,
        w: *mut f64,
        work: *mut C64,
        lwork: *const i32,
        rwork: *mut f64,
        info: *mut i32,
    );
    fn zgesdd_(
        jobz: *const c_char,
        m: *const i32,
        n: *const i32,
        a: *mut C64,
        lda: *const i32,
        s: *mut f64,
        u: *mut C64,
        ldu: *const i32,
        vt: *mut C64,
        ldvt: *const i32,
        work: *mut C64,
        lwork: *const i32,
        rwork: *mut f64,
        iwork: *mut i32,
        info: *mut i32,
    );
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvalues ascending and the
/// k-th column of `eigenvectors` the eigenvector for `eigenvalues[k]`, so that
/// `a = V diag(w) V†` up to roundoff. Only the Hermitian part of `a` is read.
pub fn eigh(a: &ArrayView2<C64>) -> Result<(Vec<f64>, Array2<C64>)> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Domain(format!(
            "eigh requires a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if n == 0 {
        return Ok((Vec::new(), Array2::zeros((0, 0))));
    }
    // The row-major buffer read column-major is the transpose; for a Hermitian
    // matrix that is the conjugate, whose eigenvectors are the conjugates of
    // the originals with the same (real) eigenvalues.
    let mut buf: Vec<C64> = a.iter().copied().collect();
    let ni = n as i32;
    let mut w = vec![0.0f64; n];
    let mut rwork = vec![0.0f64; std::cmp::max(1, 3 * n - 2)];
    let mut info = 0i32;
    let jobz = b'V' as c_char;
    let uplo = b'L' as c_char;

    let mut query = [C64::new(0.0, 0.0)];
    unsafe {
        zheev_(
            &jobz,
            &uplo,
            &ni,
            buf.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            query.as_mut_ptr(),
            &(-1i32),
            rwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Numerical(format!("zheev workspace query failed: info={info}")));
    }
    let lwork = (query[0].re as i32).max(2 * ni);
    let mut work = vec![C64::new(0.0, 0.0); lwork as usize];
    unsafe {
        zheev_(
            &jobz,
            &uplo,
            &ni,
            buf.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            rwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Numerical(format!("zheev failed: info={info}")));
    }
    // Column j of the column-major result is buf[j*n..(j+1)*n]; undo the
    // implicit conjugation.
    let mut vecs = Array2::zeros((n, n));
    for j in 0..n {
        for i in 0..n {
            vecs[[i, j]] = buf[j * n + i].conj();
        }
    }
    Ok((w, vecs))
}

/// Compact singular value decomposition `a = U diag(s) Vh`.
///
/// `u` is `m x k`, `vh` is `k x n` with `k = min(m, n)`; singular values come
/// back descending. Rows of `vh` and columns of `u` are orthonormal.
pub fn svd(a: &ArrayView2<C64>) -> Result<(Array2<C64>, Vec<f64>, Array2<C64>)> {
    let (m, n) = (a.nrows(), a.ncols());
    if m == 0 || n == 0 {
        return Err(Error::Domain("svd of an empty matrix".into()));
    }
    let k = m.min(n);
    // The row-major buffer of `a` is exactly the column-major buffer of the
    // n x m transpose, so decompose B = aᵀ and map back: a = vt_Bᵀ Σ u_Bᵀ.
    let mut buf: Vec<C64> = a.iter().copied().collect();
    let (mb, nb) = (n as i32, m as i32);
    let ki = k as i32;
    let mut s = vec![0.0f64; k];
    let mut u_b = vec![C64::new(0.0, 0.0); n * k];
    let mut vt_b = vec![C64::new(0.0, 0.0); k * m];
    let minmn = k;
    let maxmn = m.max(n);
    let rwork_len = minmn * std::cmp::max(5 * minmn + 7, 2 * maxmn + 2 * minmn + 1);
    let mut rwork = vec![0.0f64; std::cmp::max(1, rwork_len)];
    let mut iwork = vec![0i32; 8 * minmn];
    let mut info = 0i32;
    let jobz = b'S' as c_char;

    let mut query = [C64::new(0.0, 0.0)];
    unsafe {
        zgesdd_(
            &jobz,
            &mb,
            &nb,
            buf.as_mut_ptr(),
            &mb,
            s.as_mut_ptr(),
            u_b.as_mut_ptr(),
            &mb,
            vt_b.as_mut_ptr(),
            &ki,
            query.as_mut_ptr(),
            &(-1i32),
            rwork.as_mut_ptr(),
            iwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Numerical(format!("zgesdd workspace query failed: info={info}")));
    }
    let lwork = (query[0].re as i32).max(1);
    let mut work = vec![C64::new(0.0, 0.0); lwork as usize];
    unsafe {
        zgesdd_(
            &jobz,
            &mb,
            &nb,
            buf.as_mut_ptr(),
            &mb,
            s.as_mut_ptr(),
            u_b.as_mut_ptr(),
            &mb,
            vt_b.as_mut_ptr(),
            &ki,
            work.as_mut_ptr(),
            &lwork,
            rwork.as_mut_ptr(),
            iwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Numerical(format!("zgesdd failed: info={info}")));
    }
    // u_B is n x k column-major, vt_B is k x m column-major.
    let mut u = Array2::zeros((m, k));
    for j in 0..m {
        for i in 0..k {
            u[[j, i]] = vt_b[j * k + i];
        }
    }
    let mut vh = Array2::zeros((k, n));
    for j in 0..k {
        for i in 0..n {
            vh[[j, i]] = u_b[j * n + i];
        }
    }
    Ok((u, s, vh))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn eigh_matches_known_spectrum() {
        let a = array![[c(1.0, 0.0), c(0.0, 1.0)], [c(0.0, -1.0), c(2.0, 0.0)]];
        let (w, v) = eigh(&a.view()).unwrap();
        let gold = [(3.0 - 5.0f64.sqrt()) / 2.0, (3.0 + 5.0f64.sqrt()) / 2.0];
        assert!((w[0] - gold[0]).abs() < 1e-12);
        assert!((w[1] - gold[1]).abs() < 1e-12);
        // A v_k = w_k v_k
        for k in 0..2 {
            for i in 0..2 {
                let av: C64 = (0..2).map(|j| a[[i, j]] * v[[j, k]]).sum();
                let diff = av - v[[i, k]] * w[k];
                assert!(diff.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn svd_reconstructs_input() {
        let a = array![
            [c(1.0, 0.2), c(0.0, 1.0), c(0.5, 0.0)],
            [c(0.0, -1.0), c(2.0, 0.0), c(0.0, 0.3)]
        ];
        let (u, s, vh) = svd(&a.view()).unwrap();
        assert!(s[0] >= s[1]);
        for i in 0..2 {
            for j in 0..3 {
                let rec: C64 = (0..2).map(|k| u[[i, k]] * s[k] * vh[[k, j]]).sum();
                assert!((rec - a[[i, j]]).norm() < 1e-12, "mismatch at ({i},{j})");
            }
        }
        // orthonormal columns of u
        for k in 0..2 {
            for l in 0..2 {
                let dot: C64 = (0..2).map(|i| u[[i, k]].conj() * u[[i, l]]).sum();
                let want = if k == l { 1.0 } else { 0.0 };
                assert!((dot - want).norm() < 1e-12);
            }
        }
    }
}
