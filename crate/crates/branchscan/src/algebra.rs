//! Numerical finite-dimensional operator *-algebras: span closure under
//! products, commutants, centers, and minimal central projections.
//!
//! Algebras are represented by a Hilbert-Schmidt-orthonormal basis. All rank
//! decisions go through a single tolerance (default 1e-8); eigenvalue
//! clustering when splitting a center uses a gap of 1e-6 relative to the
//! spectral diameter.

use crate::lapack;
use crate::linalg::{hs_norm, identity, mgs_insert};
use crate::{Error, Result};
use ndarray::prelude::*;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Default tolerance for all rank decisions in this module.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Relative eigenvalue gap below which spectral clusters are merged.
const CLUSTER_GAP: f64 = 1e-6;

/// An adjoint-closed, unital operator algebra on C^d, stored as an
/// HS-orthonormal basis.
#[derive(Debug, Clone)]
pub struct OperatorAlgebra {
    ambient_dim: usize,
    basis: Vec<Array2<C64>>,
}

impl OperatorAlgebra {
    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Linear dimension of the algebra.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Array2<C64>] {
        &self.basis
    }

    /// Maximum HS norm of a pairwise commutator of basis elements.
    pub fn max_commutator(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.basis.iter().enumerate() {
            for b in &self.basis[i + 1..] {
                let comm = a.dot(b) - b.dot(a);
                worst = worst.max(hs_norm(&comm.view()));
            }
        }
        worst
    }

    /// Whether the algebra is abelian at tolerance `tol`.
    pub fn is_abelian(&self, tol: f64) -> bool {
        self.max_commutator() <= 10.0 * tol
    }
}

fn flatten(m: &ArrayView2<C64>) -> Vec<C64> {
    m.iter().copied().collect()
}

fn unflatten(v: &[C64], d: usize) -> Array2<C64> {
    Array2::from_shape_vec((d, d), v.to_vec()).expect("square shape")
}

/// Generate the smallest adjoint-closed unital algebra containing the given
/// matrices.
///
/// The fixpoint is reached when adding all pairwise products no longer
/// increases the numerical rank at tolerance `tol`.
pub fn generate_algebra(generators: &[Array2<C64>], tol: f64) -> Result<OperatorAlgebra> {
    if generators.is_empty() {
        return Err(Error::Domain("no generators".into()));
    }
    let d = generators[0].nrows();
    for g in generators {
        if g.nrows() != d || g.ncols() != d {
            return Err(Error::Domain(format!(
                "generators must be square matrices of equal dimension; got {}x{} vs {d}x{d}",
                g.nrows(),
                g.ncols()
            )));
        }
    }
    let full_dim = d * d;
    let mut basis_flat: Vec<Vec<C64>> = Vec::new();
    let insert = |basis_flat: &mut Vec<Vec<C64>>, m: &Array2<C64>| -> bool {
        let norm = hs_norm(&m.view());
        if norm < 1e-14 {
            return false;
        }
        let scaled: Vec<C64> = m.iter().map(|x| *x / norm).collect();
        mgs_insert(basis_flat, &scaled, tol)
    };

    insert(&mut basis_flat, &identity(d));
    for g in generators {
        insert(&mut basis_flat, g);
        insert(&mut basis_flat, &g.t().map(|x| x.conj()));
    }

    let max_rounds = full_dim * full_dim + 2;
    let mut new_start = 0usize;
    for _round in 0..max_rounds {
        if basis_flat.len() == full_dim {
            break;
        }
        let len = basis_flat.len();
        let mats: Vec<Array2<C64>> = basis_flat.iter().map(|v| unflatten(v, d)).collect();
        let mut added = false;
        for i in 0..len {
            for j in 0..len {
                if i < new_start && j < new_start {
                    continue; // product already explored in earlier rounds
                }
                let prod = mats[i].dot(&mats[j]);
                if insert(&mut basis_flat, &prod) {
                    added = true;
                }
                if basis_flat.len() == full_dim {
                    break;
                }
            }
            if basis_flat.len() == full_dim {
                break;
            }
        }
        new_start = len;
        if !added || basis_flat.len() == full_dim {
            let basis = basis_flat.iter().map(|v| unflatten(v, d)).collect();
            return Ok(OperatorAlgebra { ambient_dim: d, basis });
        }
    }
    if basis_flat.len() == full_dim {
        let basis = basis_flat.iter().map(|v| unflatten(v, d)).collect();
        return Ok(OperatorAlgebra { ambient_dim: d, basis });
    }
    Err(Error::Numerical(
        "algebra generation did not reach a fixpoint within the iteration cap".into(),
    ))
}

/// Nullspace of a stacked matrix via SVD; returns orthonormal null vectors.
fn svd_nullspace(stack: &ArrayView2<C64>, tol: f64) -> Result<Vec<Vec<C64>>> {
    // A wide stack returns only min(m, n) right-singular vectors; pad with
    // zero rows so every null direction is reported.
    let padded;
    let stack = if stack.nrows() < stack.ncols() {
        let mut p = Array2::zeros((stack.ncols(), stack.ncols()));
        p.slice_mut(ndarray::s![..stack.nrows(), ..]).assign(stack);
        padded = p;
        padded.view()
    } else {
        stack.view()
    };
    let (_u, s, vh) = lapack::svd(&stack)?;
    let smax = s.first().copied().unwrap_or(0.0);
    let cut = tol * smax.max(1.0);
    // Rank-ambiguity report: singular values within a decade of the cut.
    if s.iter().any(|&x| x > cut && x < 10.0 * cut) {
        log::warn!(
            "rank decision is ambiguous: singular values within 10x of the tolerance {cut:.3e}"
        );
    }
    let n = vh.ncols();
    let mut out = Vec::new();
    for (k, &sk) in s.iter().enumerate() {
        if sk <= cut {
            let v: Vec<C64> = (0..n).map(|i| vh[[k, i]].conj()).collect();
            out.push(v);
        }
    }
    Ok(out)
}

/// The commutant {X : [X, A] = 0 for all A in the algebra}.
///
/// Computed as the nullspace of the stacked commutator superoperator. For
/// large stacks the nullspace is extracted from the Gram matrix instead,
/// which is mathematically the same kernel.
pub fn commutant(alg: &OperatorAlgebra, tol: f64) -> Result<OperatorAlgebra> {
    let d = alg.ambient_dim;
    let d2 = d * d;
    let k = alg.basis.len();
    let eye = identity(d);

    let null_vecs: Vec<Vec<C64>> = if k * d2 * d2 <= 4_000_000 {
        // Direct stack: rows are blocks A (x) I - I (x) A^T (row-major vec).
        let mut stack = Array2::zeros((k * d2, d2));
        for (bi, a) in alg.basis.iter().enumerate() {
            for i in 0..d {
                for j in 0..d {
                    for p in 0..d {
                        for q in 0..d {
                            // (A (x) I)[(i,j),(p,q)] = A[i,p] delta[j,q]
                            // (I (x) A^T)[(i,j),(p,q)] = delta[i,p] A[q,j]
                            let mut val = C64::new(0.0, 0.0);
                            if j == q {
                                val += a[[i, p]];
                            }
                            if i == p {
                                val -= a[[q, j]];
                            }
                            if val.norm_sqr() != 0.0 {
                                stack[[bi * d2 + i * d + j, p * d + q]] = val;
                            }
                        }
                    }
                }
            }
        }
        svd_nullspace(&stack.view(), tol)?
    } else {
        // Gram form: M = sum_k L_k^dag L_k expanded into Kronecker terms.
        let mut m = Array2::<C64>::zeros((d2, d2));
        let kron_add = |m: &mut Array2<C64>, x: &Array2<C64>, y: &Array2<C64>, sign: f64| {
            for i in 0..d {
                for p in 0..d {
                    let xv = x[[i, p]];
                    if xv.norm_sqr() == 0.0 {
                        continue;
                    }
                    for j in 0..d {
                        for q in 0..d {
                            m[[i * d + j, p * d + q]] += xv * y[[j, q]] * sign;
                        }
                    }
                }
            }
        };
        for a in &alg.basis {
            let ah = a.t().map(|x| x.conj());
            let aha = ah.dot(a);
            let aah_t = a.dot(&ah).t().to_owned();
            let at = a.t().to_owned();
            let ac = a.map(|x| x.conj());
            kron_add(&mut m, &aha, &eye, 1.0);
            kron_add(&mut m, &eye, &aah_t, 1.0);
            kron_add(&mut m, &ah, &at, -1.0);
            kron_add(&mut m, &a, &ac, -1.0);
        }
        let (vals, vecs) = lapack::eigh(&m.view())?;
        let lmax = vals.last().copied().unwrap_or(0.0).max(0.0);
        let smax = lmax.sqrt();
        // The Gram form squares singular values, so numerical zeros sit near
        // eps * lmax; use a cut that dominates that floor.
        let cut = (tol * smax.max(1.0)).max(1e-6 * smax);
        let mut out = Vec::new();
        for (i, &l) in vals.iter().enumerate() {
            if l.max(0.0).sqrt() <= cut {
                out.push(vecs.column(i).to_vec());
            }
        }
        out
    };

    let basis = null_vecs.iter().map(|v| unflatten(v, d)).collect();
    Ok(OperatorAlgebra { ambient_dim: d, basis })
}

/// Intersection of the algebra with its commutant, as an HS-orthonormal basis.
pub fn center(alg: &OperatorAlgebra, tol: f64) -> Result<OperatorAlgebra> {
    let comm = commutant(alg, tol)?;
    let d = alg.ambient_dim;
    let d2 = d * d;
    let (ka, kc) = (alg.basis.len(), comm.basis.len());
    // X in span(A) and span(C): nullspace of [B_A | -B_C] stacked by columns.
    let mut n = Array2::zeros((d2, ka + kc));
    for (j, a) in alg.basis.iter().enumerate() {
        for (i, v) in flatten(&a.view()).into_iter().enumerate() {
            n[[i, j]] = v;
        }
    }
    for (j, c) in comm.basis.iter().enumerate() {
        for (i, v) in flatten(&c.view()).into_iter().enumerate() {
            n[[i, ka + j]] = -v;
        }
    }
    let coeffs = svd_nullspace(&n.view(), tol)?;
    let mut basis_flat: Vec<Vec<C64>> = Vec::new();
    for xy in coeffs {
        let mut elem = vec![C64::new(0.0, 0.0); d2];
        for (j, a) in alg.basis.iter().enumerate() {
            let x = xy[j];
            for (i, v) in a.iter().enumerate() {
                elem[i] += x * *v;
            }
        }
        mgs_insert(&mut basis_flat, &elem, 1e-10);
    }
    let basis = basis_flat.iter().map(|v| unflatten(v, d)).collect();
    Ok(OperatorAlgebra { ambient_dim: d, basis })
}

/// A Hermitian orthonormal basis spanning the same space as `alg`'s basis
/// (which must be adjoint-closed for this to succeed).
fn hermitian_basis(alg: &OperatorAlgebra) -> Vec<Array2<C64>> {
    let d = alg.ambient_dim;
    let mut flat: Vec<Vec<C64>> = Vec::new();
    for b in &alg.basis {
        let bh = b.t().map(|x| x.conj());
        let re = (b + &bh).map(|x| *x * 0.5);
        let im = (b - &bh).map(|x| *x * C64::new(0.0, -0.5));
        for m in [re, im] {
            let v = flatten(&m.view());
            mgs_insert(&mut flat, &v, 1e-10);
        }
    }
    flat.iter().map(|v| unflatten(v, d)).collect()
}

fn spectral_projectors_of_random_element(
    basis: &[Array2<C64>],
    d: usize,
    seed: u64,
) -> Result<Vec<Array2<C64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = Array2::<C64>::zeros((d, d));
    for b in basis {
        let g: f64 = rng.sample(StandardNormal);
        h = h + b.map(|x| *x * g);
    }
    // Hermitize against roundoff.
    let hh = h.t().map(|x| x.conj());
    let h = (h + hh).map(|x| *x * 0.5);
    let (vals, vecs) = lapack::eigh(&h.view())?;
    let diameter = match (vals.first(), vals.last()) {
        (Some(lo), Some(hi)) => hi - lo,
        _ => 0.0,
    };
    let gap = CLUSTER_GAP * diameter.max(f64::MIN_POSITIVE);
    let mut projectors = Vec::new();
    let mut start = 0usize;
    for i in 0..vals.len() {
        let is_last = i + 1 == vals.len();
        if is_last || vals[i + 1] - vals[i] > gap {
            let mut p = Array2::<C64>::zeros((d, d));
            for k in start..=i {
                let v = vecs.column(k);
                for r in 0..d {
                    for c in 0..d {
                        p[[r, c]] += v[r] * v[c].conj();
                    }
                }
            }
            projectors.push(p);
            start = i + 1;
        }
    }
    Ok(projectors)
}

/// Minimal central projections of the algebra.
///
/// Draws one random Hermitian element of the center (standard normal
/// coefficients over a Hermitian center basis, seeded) and returns its
/// spectral projectors after merging clustered eigenvalues. A degenerate draw
/// (fewer clusters than the center dimension) is retried once with seed + 1.
pub fn minimal_central_projections(
    alg: &OperatorAlgebra,
    tol: f64,
    seed: u64,
) -> Result<Vec<Array2<C64>>> {
    let z = center(alg, tol)?;
    let d = alg.ambient_dim;
    let herm = hermitian_basis(&z);
    let m = herm.len();
    if m == 0 {
        return Err(Error::Numerical("center has no Hermitian basis".into()));
    }
    let mut projectors = spectral_projectors_of_random_element(&herm, d, seed)?;
    if projectors.len() < m {
        projectors = spectral_projectors_of_random_element(&herm, d, seed.wrapping_add(1))?;
        if projectors.len() < m {
            log::warn!(
                "central element split into {} clusters for a center of dimension {m}",
                projectors.len()
            );
        }
    }
    Ok(projectors)
}
