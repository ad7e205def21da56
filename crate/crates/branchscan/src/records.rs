//! Detection and verification of redundantly recorded observables.
//!
//! An observable with eigenprojectors {Pi_i} on a region F is *recorded* on a
//! disjoint region F' when a partner family {Pi_i'} satisfies
//! `Pi_i |psi> = Pi_i' |psi>` for every outcome i. [`verify_record`] measures
//! the worst violation of that identity; [`finest_common_records`] computes
//! the finest observable recorded between two given regions by closing the
//! correlation operators of the state into an algebra and splitting its
//! center; [`extend_record`] grows a recorded observable onto further
//! regions, and [`scan_records`] sweeps a whole candidate family.
//!
//! Outcome labels carry no physics (only the eigenspaces matter), so outcomes
//! are canonicalized by descending branch weight, ties broken by the first
//! differing branch amplitude.

use crate::algebra::{commutant, generate_algebra, minimal_central_projections, OperatorAlgebra};
use crate::exec::{map_indexed, map_indexed_seq};
use crate::lapack;
use crate::linalg::{
    adjoint, columns_to_matrix, matrix_columns, mgs_insert, orthonormalize, projector_from_basis,
    vec_dist, vec_inner, vec_norm_sq,
};
use crate::regions::Region;
use crate::state::{apply_region_operator_raw, schmidt, PureState, RegionEmbedding};
use crate::{Error, Result};
use itertools::Itertools;
use ndarray::prelude::*;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Relative weight below which an outcome is dropped and absorbed into the
/// remainder projector.
const WEIGHT_DROP: f64 = 1e-12;

/// An ordered family of orthogonal projectors on one region, one per outcome,
/// each stored as an orthonormal basis of its range.
///
/// The families listed here need not resolve the identity by themselves; the
/// final remainder projector completing the resolution is determined by them
/// and available via [`RecordProjector::remainder`].
#[derive(Debug, Clone)]
pub struct RecordProjector {
    pub region: Region,
    /// `ranges[i]` is a d x r_i matrix of orthonormal columns spanning the
    /// range of the i-th outcome projector.
    pub ranges: Vec<Array2<C64>>,
}

impl RecordProjector {
    /// Dense projector matrix for one outcome.
    pub fn projector(&self, outcome: usize) -> Array2<C64> {
        projector_from_basis(&self.ranges[outcome].view())
    }

    /// The projector completing the resolution of identity.
    pub fn remainder(&self) -> Array2<C64> {
        let d = self.ranges[0].nrows();
        let mut rem = Array2::eye(d);
        for r in &self.ranges {
            rem = rem - projector_from_basis(&r.view());
        }
        rem
    }

    pub fn region_dim(&self) -> usize {
        self.ranges[0].nrows()
    }
}

/// A collection of mutually recording projector families on pairwise disjoint
/// regions, with aligned outcome order. The number of records is the
/// observable's redundancy.
#[derive(Debug, Clone)]
pub struct RecordedObservable {
    pub name: String,
    pub records: Vec<RecordProjector>,
}

impl RecordedObservable {
    pub fn new(name: String, records: Vec<RecordProjector>) -> Result<Self> {
        if records.len() < 2 {
            return Err(Error::Domain(
                "a recorded observable needs at least 2 records".into(),
            ));
        }
        let n = records[0].ranges.len();
        if records.iter().any(|r| r.ranges.len() != n) {
            return Err(Error::Domain("records disagree on the outcome count".into()));
        }
        for (a, b) in records.iter().tuple_combinations() {
            if !a.region.is_disjoint(&b.region) {
                return Err(Error::Domain(format!(
                    "record regions {:?} and {:?} overlap",
                    a.region.sites(),
                    b.region.sites()
                )));
            }
        }
        Ok(RecordedObservable { name, records })
    }

    pub fn redundancy(&self) -> usize {
        self.records.len()
    }

    pub fn num_outcomes(&self) -> usize {
        self.records[0].ranges.len()
    }

    pub fn regions(&self) -> Vec<Region> {
        self.records.iter().map(|r| r.region.clone()).collect()
    }

    /// The unnormalized branch component Pi_i |psi> using the given record.
    pub fn branch_component(
        &self,
        state: &PureState,
        record: usize,
        outcome: usize,
    ) -> Result<Vec<C64>> {
        let rec = &self.records[record];
        let proj = rec.projector(outcome);
        apply_region_operator_raw(state.lattice(), state.amplitudes(), &rec.region, &proj.view())
    }
}

/// Deterministic observable name derived from its record regions.
pub(crate) fn observable_name(regions: &[&Region]) -> String {
    let parts: Vec<String> = regions
        .iter()
        .map(|r| {
            r.sites()
                .first()
                .map(|s| s.to_string())
                .unwrap_or_else(|| "x".into())
        })
        .collect();
    format!("omega_{}", parts.join("_"))
}

/// Maximum over outcomes and record pairs of `|Pi_i^F psi - Pi_i^F' psi|`.
///
/// The observable verifies at tolerance `tol` iff the returned residual is at
/// most `tol`. The remainder projector is checked alongside the labeled
/// outcomes.
pub fn verify_record(state: &PureState, obs: &RecordedObservable) -> Result<f64> {
    for (a, b) in obs.records.iter().tuple_combinations() {
        if !a.region.is_disjoint(&b.region) {
            return Err(Error::Domain("record regions overlap".into()));
        }
    }
    for rec in &obs.records {
        rec.region.validate(state.lattice())?;
        let dim = state.lattice().region_dim(&rec.region)?;
        if rec.region_dim() != dim {
            return Err(Error::Domain(format!(
                "record on {:?} has dimension {} but the region dimension is {dim}",
                rec.region.sites(),
                rec.region_dim()
            )));
        }
    }
    let n = obs.num_outcomes();
    // Branch components per record: labeled outcomes plus the remainder.
    let mut components: Vec<Vec<Vec<C64>>> = Vec::with_capacity(obs.records.len());
    for rec in &obs.records {
        let mut per_outcome = Vec::with_capacity(n + 1);
        for i in 0..n {
            let proj = rec.projector(i);
            per_outcome.push(apply_region_operator_raw(
                state.lattice(),
                state.amplitudes(),
                &rec.region,
                &proj.view(),
            )?);
        }
        let rem = rec.remainder();
        per_outcome.push(apply_region_operator_raw(
            state.lattice(),
            state.amplitudes(),
            &rec.region,
            &rem.view(),
        )?);
        components.push(per_outcome);
    }
    let mut worst = 0.0f64;
    for i in 0..=n {
        for (a, b) in (0..obs.records.len()).tuple_combinations() {
            worst = worst.max(vec_dist(&components[a][i], &components[b][i]));
        }
    }
    Ok(worst)
}

/// Result of finest-record detection between two regions.
#[derive(Debug, Clone)]
pub struct DetectionResult {
    /// The finest canonical recorded observable, or None when the forced
    /// structure is a single block (trivial).
    pub observable: Option<RecordedObservable>,
    /// Whether the finest structure is forced: the relevant commutant is
    /// abelian, equivalently its dimension equals the number of canonical
    /// outcomes.
    pub canonical: bool,
    /// Dimension of the relevant commutant; quantifies the gauge freedom of
    /// non-canonical detections.
    pub gauge_dimension: usize,
    /// verify_record residual of `observable` (0 when trivial).
    pub residual: f64,
    /// For non-canonical detections, one maximal refinement built from the
    /// eigenbasis of a seeded random commutant element. Other seeds give
    /// other, equally valid refinements; none is preferred.
    pub refinement: Option<RecordedObservable>,
    /// verify_record residual of `refinement`.
    pub refinement_residual: f64,
}

/// Correlation data of a state across a pair of disjoint regions: the Schmidt
/// support of the state on F u F', reshaped into maps from the F' space to
/// the F space.
struct CorrelationMaps {
    /// Schmidt weights (squared singular values) of the kept support vectors.
    weights: Vec<f64>,
    /// Kept support vectors as d_F x d_F' matrices.
    maps: Vec<Array2<C64>>,
    dim_f: usize,
}

fn correlation_maps(state: &PureState, f: &Region, fp: &Region) -> Result<CorrelationMaps> {
    let lattice = state.lattice();
    let union = f.union(fp);
    let dim_u = lattice.region_dim(&union)?;
    lattice.budget().check_dense_dim(dim_u)?;
    let dim_f = lattice.region_dim(f)?;
    let dim_fp = lattice.region_dim(fp)?;

    // Support vectors of the state on the union, with singular values.
    let (values, vectors): (Vec<f64>, Vec<Vec<C64>>) = if union.len() == lattice.num_sites() {
        (vec![1.0], vec![state.amplitudes().to_vec()])
    } else {
        let s = schmidt(state, &union)?;
        (s.values, s.region_vectors)
    };
    let smax = values.first().copied().unwrap_or(0.0);
    let cut = smax * WEIGHT_DROP.sqrt();

    // Split each union sub-index into its F and F' digits. Digits follow the
    // little-endian region convention (first site of the region fastest).
    let union_sites = union.sites();
    let mut f_pos = Vec::new();
    let mut fp_pos = Vec::new();
    for (k, &s) in union_sites.iter().enumerate() {
        if f.contains(s) {
            f_pos.push(k);
        } else {
            fp_pos.push(k);
        }
    }
    let dims: Vec<usize> = union_sites
        .iter()
        .map(|&s| lattice.local_dims()[s])
        .collect();
    let mut f_digit_of = vec![0usize; dim_u];
    let mut fp_digit_of = vec![0usize; dim_u];
    for u in 0..dim_u {
        let mut rest = u;
        let mut digits = Vec::with_capacity(dims.len());
        for &d in &dims {
            digits.push(rest % d);
            rest /= d;
        }
        let mut fi = 0usize;
        let mut mult = 1usize;
        for &k in &f_pos {
            fi += digits[k] * mult;
            mult *= dims[k];
        }
        let mut gi = 0usize;
        let mut mult = 1usize;
        for &k in &fp_pos {
            gi += digits[k] * mult;
            mult *= dims[k];
        }
        f_digit_of[u] = fi;
        fp_digit_of[u] = gi;
    }

    let mut weights = Vec::new();
    let mut maps = Vec::new();
    for (k, &sv) in values.iter().enumerate() {
        if sv <= cut {
            continue;
        }
        let mut m = Array2::zeros((dim_f, dim_fp));
        for (u, amp) in vectors[k].iter().enumerate() {
            m[[f_digit_of[u], fp_digit_of[u]]] = *amp;
        }
        weights.push(sv * sv);
        maps.push(m);
    }
    Ok(CorrelationMaps { weights, maps, dim_f })
}

/// Orthonormal range basis of a (numerical) projector: eigenvectors with
/// eigenvalue above 1/2.
fn range_basis(p: &Array2<C64>) -> Result<Array2<C64>> {
    let (vals, vecs) = lapack::eigh(&p.view())?;
    let cols: Vec<Vec<C64>> = vals
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.5)
        .map(|(i, _)| vecs.column(i).to_vec())
        .collect();
    Ok(columns_to_matrix(&cols))
}

/// Canonical outcome order: descending weight, ties broken by the first
/// differing branch amplitude (real part, then imaginary part, ascending).
fn branch_order(wa: f64, va: &[C64], wb: f64, vb: &[C64]) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    if (wa - wb).abs() > 1e-12 {
        return wb.total_cmp(&wa);
    }
    for (x, y) in va.iter().zip(vb.iter()) {
        if (*x - *y).norm() > 1e-12 {
            return x.re.total_cmp(&y.re).then_with(|| x.im.total_cmp(&y.im));
        }
    }
    Ordering::Equal
}

/// Assemble a two-region observable from projector blocks on the compressed
/// F-support, deriving the F' partners from the correlation maps. Returns
/// None when fewer than two outcomes survive the weight cut.
fn assemble_observable(
    state: &PureState,
    f: &Region,
    fp: &Region,
    q_cols: &Array2<C64>,
    blocks: &[Array2<C64>],
    corr: &CorrelationMaps,
) -> Result<Option<RecordedObservable>> {
    let qh = adjoint(&q_cols.view());
    // Lift blocks to the full F space and compute branch components.
    let mut lifted: Vec<(Array2<C64>, Vec<C64>, f64)> = Vec::new();
    for p in blocks {
        let proj_f = q_cols.dot(p).dot(&qh);
        let branch = apply_region_operator_raw(
            state.lattice(),
            state.amplitudes(),
            f,
            &proj_f.view(),
        )?;
        let w = vec_norm_sq(&branch);
        lifted.push((proj_f, branch, w));
    }
    let total: f64 = lifted.iter().map(|x| x.2).sum();
    lifted.retain(|x| x.2 > WEIGHT_DROP * total.max(1e-300));
    if lifted.len() < 2 {
        return Ok(None);
    }
    lifted.sort_by(|a, b| branch_order(a.2, &a.1, b.2, &b.1));

    // F-side range bases.
    let mut f_ranges = Vec::new();
    for (proj_f, _, _) in &lifted {
        f_ranges.push(range_basis(proj_f)?);
    }

    // F'-side partners: the i-th partner range is the span of conj(M_k^dag u)
    // over correlation maps M_k and range vectors u of the i-th F block. The
    // conjugation matches the transpose that appears when an operator acts on
    // the right index of the reshaped state.
    let mut fp_ranges: Vec<Array2<C64>> = Vec::with_capacity(lifted.len());
    for f_range in &f_ranges {
        let basis_cols = matrix_columns(&f_range.view());
        let mut collected: Vec<Vec<C64>> = Vec::new();
        for m in &corr.maps {
            let mh = adjoint(&m.view());
            for u in &basis_cols {
                let v: Vec<C64> = (0..mh.nrows())
                    .map(|g| {
                        let mut acc = C64::new(0.0, 0.0);
                        for (fi, uv) in u.iter().enumerate() {
                            acc += mh[[g, fi]] * *uv;
                        }
                        acc.conj()
                    })
                    .collect();
                collected.push(v);
            }
        }
        let ortho = orthonormalize(&collected, 1e-10);
        if ortho.is_empty() {
            return Ok(None);
        }
        fp_ranges.push(columns_to_matrix(&ortho));
    }

    let rec_f = RecordProjector {
        region: f.clone(),
        ranges: f_ranges,
    };
    let rec_fp = RecordProjector {
        region: fp.clone(),
        ranges: fp_ranges,
    };
    let name = observable_name(&[f, fp]);
    Ok(Some(RecordedObservable::new(name, vec![rec_f, rec_fp])?))
}

/// Spectral projectors of a seeded random Hermitian element of an algebra's
/// span, clustered at 1e-6 relative gap.
fn random_spectral_blocks(alg: &OperatorAlgebra, seed: u64) -> Result<Vec<Array2<C64>>> {
    let d = alg.ambient_dim();
    let mut herm_flat: Vec<Vec<C64>> = Vec::new();
    for b in alg.basis() {
        let bh = adjoint(&b.view());
        let re = (b + &bh).map(|x| *x * 0.5);
        let im = (b - &bh).map(|x| *x * C64::new(0.0, -0.5));
        for m in [re, im] {
            let v: Vec<C64> = m.iter().copied().collect();
            mgs_insert(&mut herm_flat, &v, 1e-10);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = Array2::<C64>::zeros((d, d));
    for v in &herm_flat {
        let g: f64 = rng.sample(StandardNormal);
        for (idx, x) in v.iter().enumerate() {
            h[[idx / d, idx % d]] += *x * g;
        }
    }
    let hh = adjoint(&h.view());
    let h = (h + hh).map(|x| *x * 0.5);
    let (vals, vecs) = lapack::eigh(&h.view())?;
    let diameter = match (vals.first(), vals.last()) {
        (Some(lo), Some(hi)) => hi - lo,
        _ => 0.0,
    };
    let gap = 1e-6 * diameter.max(f64::MIN_POSITIVE);
    let mut spectral = Vec::new();
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
            spectral.push(p);
            start = i + 1;
        }
    }
    Ok(spectral)
}

/// Compute the finest observable recorded on both `f` and `fp`.
///
/// Algorithm: Schmidt-decompose the state across (f u fp) vs the rest;
/// reshape the support vectors into maps M_k from the F' space to the F
/// space; generate the algebra A of the correlation operators {M_k M_l^dag}
/// restricted to the support of rho^F; its minimal central projections (plus
/// an implicit remainder) are the finest canonical outcome projectors, with
/// F' partners derived from the maps. The structure is canonical exactly when
/// the commutant of A on the support is abelian; otherwise the commutant
/// dimension quantifies the gauge freedom and one seeded representative
/// refinement is returned, explicitly flagged non-canonical.
pub fn finest_common_records(
    state: &PureState,
    f: &Region,
    fp: &Region,
    tol: f64,
    seed: u64,
) -> Result<DetectionResult> {
    if f.is_empty() || fp.is_empty() {
        return Err(Error::Domain("detection regions must be nonempty".into()));
    }
    if !f.is_disjoint(fp) {
        return Err(Error::Domain("detection regions overlap".into()));
    }
    f.validate(state.lattice())?;
    fp.validate(state.lattice())?;
    let corr = correlation_maps(state, f, fp)?;

    // Support of rho^F = sum_k w_k M_k M_k^dag.
    let mut rho = Array2::<C64>::zeros((corr.dim_f, corr.dim_f));
    for (w, m) in corr.weights.iter().zip(corr.maps.iter()) {
        let mh = adjoint(&m.view());
        rho = rho + m.dot(&mh).map(|x| *x * *w);
    }
    let (vals, vecs) = lapack::eigh(&rho.view())?;
    let lmax = vals.last().copied().unwrap_or(0.0);
    if lmax <= 0.0 {
        return Err(Error::Numerical("state has no support on the region".into()));
    }
    let cols: Vec<Vec<C64>> = vals
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > lmax * 1e-12)
        .map(|(i, _)| vecs.column(i).to_vec())
        .collect();
    let q = columns_to_matrix(&cols); // d_F x r
    let qh = adjoint(&q.view());

    // Compressed correlation operators T_k T_l^dag with T_k = Q^dag M_k.
    let compressed: Vec<Array2<C64>> = corr.maps.iter().map(|m| qh.dot(m)).collect();
    let mut gens = Vec::new();
    for tk in &compressed {
        for tl in &compressed {
            gens.push(tk.dot(&adjoint(&tl.view())));
        }
    }

    let alg = generate_algebra(&gens, tol)?;
    let comm = commutant(&alg, tol)?;
    let gauge_dimension = comm.dim();
    let projs = minimal_central_projections(&alg, tol, seed)?;
    let canonical = gauge_dimension == projs.len();

    let (observable, residual) = match assemble_observable(state, f, fp, &q, &projs, &corr)? {
        Some(obs) => {
            let res = verify_record(state, &obs)?;
            (Some(obs), res)
        }
        None => (None, 0.0),
    };

    let (refinement, refinement_residual) = if !canonical {
        // Intersect the canonical blocks with the spectral projectors of a
        // random commutant element; the two families commute, so products
        // are projectors.
        let spectral = random_spectral_blocks(&comm, seed)?;
        let mut fine = Vec::new();
        for cb in &projs {
            for sp in &spectral {
                let prod = cb.dot(sp);
                let tr: C64 = prod.diag().sum();
                if tr.re > 0.5 {
                    fine.push(prod);
                }
            }
        }
        match assemble_observable(state, f, fp, &q, &fine, &corr)? {
            Some(mut obs) => {
                obs.name = format!("{}_refined", obs.name);
                let res = verify_record(state, &obs)?;
                (Some(obs), res)
            }
            None => (None, 0.0),
        }
    } else {
        (None, 0.0)
    };

    Ok(DetectionResult {
        observable,
        canonical,
        gauge_dimension,
        residual,
        refinement,
        refinement_residual,
    })
}

/// Result of attempting to extend a recorded observable onto a new region.
#[derive(Debug, Clone)]
pub enum ExtendOutcome {
    Accepted(RecordedObservable),
    Refused {
        /// Largest overlap (largest singular value of S_i^dag S_j) between
        /// candidate outcome supports on the new region.
        max_overlap: f64,
        /// verify_record residual of the tentative extension, when the
        /// supports were orthogonal but verification failed anyway.
        residual: Option<f64>,
    },
}

/// Try to add region `g` as one more record of `obs`.
///
/// The candidate projectors on `g` are the supports of the branch
/// components' reduced states there; the extension is accepted iff those
/// supports are pairwise orthogonal within `tol` and the extended observable
/// verifies at `tol`.
pub fn extend_record(
    state: &PureState,
    obs: &RecordedObservable,
    g: &Region,
    tol: f64,
) -> Result<ExtendOutcome> {
    if g.is_empty() {
        return Err(Error::Domain("cannot extend onto an empty region".into()));
    }
    for rec in &obs.records {
        if !rec.region.is_disjoint(g) {
            return Err(Error::Domain(format!(
                "extension region {:?} overlaps record region {:?}",
                g.sites(),
                rec.region.sites()
            )));
        }
    }
    g.validate(state.lattice())?;
    let dim_g = state.lattice().region_dim(g)?;
    state.lattice().budget().check_dense_dim(dim_g)?;
    let emb = RegionEmbedding::new(state.lattice(), g)?;

    let n = obs.num_outcomes();
    let mut supports: Vec<Array2<C64>> = Vec::with_capacity(n);
    for i in 0..n {
        let branch = obs.branch_component(state, 0, i)?;
        // Reduced state of the branch on g (unnormalized).
        let mut rho = Array2::<C64>::zeros((dim_g, dim_g));
        for r in 0..dim_g {
            for rp in 0..dim_g {
                let mut acc = C64::new(0.0, 0.0);
                for &base in &emb.spread_comp {
                    acc += branch[emb.spread_region[r] + base]
                        * branch[emb.spread_region[rp] + base].conj();
                }
                rho[[r, rp]] = acc;
            }
        }
        let (vals, vecs) = lapack::eigh(&rho.view())?;
        let lmax = vals.last().copied().unwrap_or(0.0);
        if lmax <= 0.0 {
            return Ok(ExtendOutcome::Refused {
                max_overlap: 1.0,
                residual: None,
            });
        }
        let cols: Vec<Vec<C64>> = vals
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > lmax * 1e-12)
            .map(|(k, _)| vecs.column(k).to_vec())
            .collect();
        supports.push(columns_to_matrix(&cols));
    }

    let mut max_overlap = 0.0f64;
    for (i, j) in (0..n).tuple_combinations() {
        let m = adjoint(&supports[i].view()).dot(&supports[j]);
        if m.nrows() == 0 || m.ncols() == 0 {
            continue;
        }
        let (_, s, _) = lapack::svd(&m.view())?;
        max_overlap = max_overlap.max(s.first().copied().unwrap_or(0.0));
    }
    if max_overlap > tol {
        return Ok(ExtendOutcome::Refused {
            max_overlap,
            residual: None,
        });
    }
    let mut records = obs.records.clone();
    records.push(RecordProjector {
        region: g.clone(),
        ranges: supports,
    });
    let region_refs: Vec<&Region> = records.iter().map(|r| &r.region).collect();
    let extended = RecordedObservable::new(observable_name(&region_refs), records)?;
    let residual = verify_record(state, &extended)?;
    if residual <= tol {
        Ok(ExtendOutcome::Accepted(extended))
    } else {
        Ok(ExtendOutcome::Refused {
            max_overlap,
            residual: Some(residual),
        })
    }
}

/// Summary of one analyzed candidate pair, for reporting.
#[derive(Debug, Clone)]
pub struct DetectionSummary {
    /// Indices into the candidate list.
    pub pair: (usize, usize),
    pub nontrivial: bool,
    pub canonical: bool,
    pub gauge_dimension: usize,
    pub residual: f64,
}

/// Full scan output: merged observables plus per-pair detection summaries.
#[derive(Debug, Clone)]
pub struct ScanReport {
    pub observables: Vec<RecordedObservable>,
    /// verify_record residuals aligned with `observables`.
    pub residuals: Vec<f64>,
    pub detections: Vec<DetectionSummary>,
}

fn fidelity(a: &[C64], b: &[C64]) -> f64 {
    let na = vec_norm_sq(a);
    let nb = vec_norm_sq(b);
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    vec_inner(a, b).norm_sqr() / (na * nb)
}

struct ScanGroup {
    /// Branch components in this group's canonical outcome order.
    branches: Vec<Vec<C64>>,
    /// Accumulated records, at most one per region.
    records: Vec<RecordProjector>,
}

fn scan_impl(
    state: &PureState,
    candidates: &[Region],
    tol: f64,
    seed: u64,
    seq: bool,
) -> Result<ScanReport> {
    for r in candidates {
        r.validate(state.lattice())?;
    }
    let pairs: Vec<(usize, usize)> = (0..candidates.len())
        .tuple_combinations()
        .filter(|(i, j)| {
            !candidates[*i].is_empty()
                && !candidates[*j].is_empty()
                && candidates[*i].is_disjoint(&candidates[*j])
        })
        .collect();

    // Per-pair seeds: seed XOR pair index, so the parallel and sequential
    // paths see identical randomness.
    let run_pair = |idx: usize| -> Result<DetectionResult> {
        let (i, j) = pairs[idx];
        let pair_seed = seed ^ (idx as u64);
        finest_common_records(state, &candidates[i], &candidates[j], tol, pair_seed)
    };
    let results: Vec<Result<DetectionResult>> = if seq {
        map_indexed_seq(pairs.len(), run_pair)
    } else {
        map_indexed(pairs.len(), run_pair)
    };

    let mut detections = Vec::new();
    let mut groups: Vec<ScanGroup> = Vec::new();
    for (idx, res) in results.into_iter().enumerate() {
        let det = res?;
        let (i, j) = pairs[idx];
        detections.push(DetectionSummary {
            pair: (i, j),
            nontrivial: det.observable.is_some(),
            canonical: det.canonical,
            gauge_dimension: det.gauge_dimension,
            residual: det.residual,
        });
        let obs = match det.observable {
            Some(o) if det.residual <= tol => o,
            _ => continue,
        };
        let n = obs.num_outcomes();
        let mut branches = Vec::with_capacity(n);
        for o in 0..n {
            branches.push(obs.branch_component(state, 0, o)?);
        }
        // Merge into an existing group when the induced branch decompositions
        // agree (pairwise fidelity >= 1 - tol after outcome matching).
        let mut merged = false;
        'group: for group in groups.iter_mut() {
            if group.branches.len() != n {
                continue;
            }
            let mut perm: Vec<usize> = vec![usize::MAX; n];
            let mut used = vec![false; n];
            for (o, branch) in branches.iter().enumerate() {
                let mut best: Option<(usize, f64)> = None;
                for (go, gb) in group.branches.iter().enumerate() {
                    if used[go] {
                        continue;
                    }
                    let fid = fidelity(branch, gb);
                    if best.map_or(true, |(_, bf)| fid > bf) {
                        best = Some((go, fid));
                    }
                }
                match best {
                    Some((go, fid)) if fid >= 1.0 - tol => {
                        perm[o] = go;
                        used[go] = true;
                    }
                    _ => continue 'group,
                }
            }
            for rec in &obs.records {
                if group.records.iter().any(|r| r.region == rec.region) {
                    continue;
                }
                let mut ranges = vec![Array2::zeros((0, 0)); n];
                for (o, range) in rec.ranges.iter().enumerate() {
                    ranges[perm[o]] = range.clone();
                }
                group.records.push(RecordProjector {
                    region: rec.region.clone(),
                    ranges,
                });
            }
            merged = true;
            break;
        }
        if !merged {
            groups.push(ScanGroup {
                branches,
                records: obs.records.clone(),
            });
        }
    }

    // Extend each merged observable onto candidates it does not yet cover,
    // then finalize names and ordering.
    let mut finals: Vec<(RecordedObservable, f64)> = Vec::new();
    for group in groups {
        let mut records = group.records;
        records.sort_by(|a, b| a.region.cmp(&b.region));
        let region_refs: Vec<&Region> = records.iter().map(|r| &r.region).collect();
        let mut obs = RecordedObservable::new(observable_name(&region_refs), records)?;
        for cand in candidates {
            if cand.is_empty()
                || obs.records.iter().any(|r| !r.region.is_disjoint(cand))
            {
                continue;
            }
            if let ExtendOutcome::Accepted(bigger) = extend_record(state, &obs, cand, tol)? {
                obs = bigger;
            }
        }
        obs.records.sort_by(|a, b| a.region.cmp(&b.region));
        let refs: Vec<&Region> = obs.records.iter().map(|r| &r.region).collect();
        obs.name = observable_name(&refs);
        let residual = verify_record(state, &obs)?;
        finals.push((obs, residual));
    }

    finals.sort_by(|a, b| {
        b.0.redundancy()
            .cmp(&a.0.redundancy())
            .then_with(|| a.0.name.cmp(&b.0.name))
    });
    let mut seen = std::collections::BTreeMap::<String, usize>::new();
    for (obs, _) in finals.iter_mut() {
        let count = seen.entry(obs.name.clone()).or_insert(0);
        if *count > 0 {
            obs.name = format!("{}_{}", obs.name, count);
        }
        *count += 1;
    }
    let (observables, residuals): (Vec<_>, Vec<_>) = finals.into_iter().unzip();
    Ok(ScanReport {
        observables,
        residuals,
        detections,
    })
}

/// Sweep every disjoint pair of candidate regions for recorded observables,
/// merging detections that induce the same branch decomposition of the state
/// and extending them onto remaining candidates.
///
/// Returns deduplicated observables with maximal found redundancy, sorted by
/// redundancy (descending) then name.
pub fn scan_records(
    state: &PureState,
    candidates: &[Region],
    tol: f64,
    seed: u64,
) -> Result<Vec<RecordedObservable>> {
    Ok(scan_records_detailed(state, candidates, tol, seed)?.observables)
}

/// [`scan_records`] with per-pair detection summaries and residuals.
pub fn scan_records_detailed(
    state: &PureState,
    candidates: &[Region],
    tol: f64,
    seed: u64,
) -> Result<ScanReport> {
    scan_impl(state, candidates, tol, seed, false)
}

/// Sequential twin of [`scan_records_detailed`]; bit-identical output.
pub fn scan_records_detailed_seq(
    state: &PureState,
    candidates: &[Region],
    tol: f64,
    seed: u64,
) -> Result<ScanReport> {
    scan_impl(state, candidates, tol, seed, true)
}
