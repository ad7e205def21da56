//! Dense state vectors on qudit lattices and the region-local linear algebra
//! every other module consumes: partial traces, Schmidt decompositions, and
//! region-operator application.
//!
//! Amplitudes are indexed mixed-radix little-endian: site 0 is the
//! fastest-varying digit, so a basis index decomposes as
//! `idx = d_0 + dim_0 * (d_1 + dim_1 * (d_2 + ...))`. A region's sub-index
//! uses the same convention over its sites in ascending order. Region
//! operators act by stride iteration over the embedded index; the full
//! Kronecker product is never materialized.

use crate::exec::{map_indexed, map_indexed_seq};
use crate::lapack;
use crate::linalg::{vec_norm, vec_norm_sq};
use crate::regions::Region;
use crate::{Error, Result};
use ndarray::prelude::*;
use num_complex::Complex64 as C64;
use std::sync::Arc;

/// Memory budget for dense objects, in bytes.
///
/// A state of total dimension D costs 16 D bytes; dense matrices on a region
/// of dimension d cost 16 d^2. Both are checked against the same knob.
#[derive(Debug, Clone, Copy)]
pub struct Budget {
    pub bytes: u64,
}

impl Default for Budget {
    fn default() -> Self {
        // 2 GiB
        Budget { bytes: 2 * 1024 * 1024 * 1024 }
    }
}

impl Budget {
    pub fn from_bytes(bytes: u64) -> Self {
        Budget { bytes }
    }

    pub fn check_state_dim(&self, dim: u128) -> Result<()> {
        if dim.saturating_mul(16) > self.bytes as u128 {
            return Err(Error::Resource(format!(
                "state of dimension {dim} exceeds the {}-byte budget",
                self.bytes
            )));
        }
        Ok(())
    }

    pub fn check_dense_dim(&self, dim: usize) -> Result<()> {
        let need = (dim as u128).saturating_mul(dim as u128).saturating_mul(16);
        if need > self.bytes as u128 {
            return Err(Error::Resource(format!(
                "dense {dim}x{dim} matrix exceeds the {}-byte budget",
                self.bytes
            )));
        }
        Ok(())
    }
}

/// A lattice of qudit sites with local dimensions and optional coordinates.
#[derive(Debug, Clone)]
pub struct Lattice {
    local_dims: Vec<usize>,
    strides: Vec<usize>,
    total_dim: usize,
    coords: Option<Vec<Vec<f64>>>,
    budget: Budget,
}

impl Lattice {
    pub fn new(local_dims: Vec<usize>, coords: Option<Vec<Vec<f64>>>, budget: &Budget) -> Result<Self> {
        if local_dims.is_empty() {
            return Err(Error::Domain("lattice needs at least one site".into()));
        }
        if let Some(d) = local_dims.iter().find(|&&d| d < 2) {
            return Err(Error::Domain(format!("local dimension {d} < 2")));
        }
        if let Some(c) = &coords {
            if c.len() != local_dims.len() {
                return Err(Error::Domain(format!(
                    "{} coordinate entries for {} sites",
                    c.len(),
                    local_dims.len()
                )));
            }
            let dim = c[0].len();
            if c.iter().any(|p| p.len() != dim) {
                return Err(Error::Domain("inconsistent coordinate dimensions".into()));
            }
        }
        let mut total: u128 = 1;
        let mut strides = Vec::with_capacity(local_dims.len());
        for &d in &local_dims {
            strides.push(total as usize);
            total *= d as u128;
            budget.check_state_dim(total)?;
        }
        Ok(Lattice {
            local_dims,
            strides,
            total_dim: total as usize,
            coords,
            budget: *budget,
        })
    }

    /// Convenience constructor for an all-qubit lattice with the default
    /// budget and no coordinates.
    pub fn qubits(n: usize) -> Result<Self> {
        Lattice::new(vec![2; n], None, &Budget::default())
    }

    /// All-qubit lattice laid out on a line, site i at coordinate (i).
    pub fn qubit_line(n: usize) -> Result<Self> {
        let coords = (0..n).map(|i| vec![i as f64]).collect();
        Lattice::new(vec![2; n], Some(coords), &Budget::default())
    }

    pub fn num_sites(&self) -> usize {
        self.local_dims.len()
    }

    pub fn local_dims(&self) -> &[usize] {
        &self.local_dims
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn coords(&self) -> Option<&[Vec<f64>]> {
        self.coords.as_deref()
    }

    pub fn budget(&self) -> &Budget {
        &self.budget
    }

    /// Dimension of a region's Hilbert space (product of its local dims).
    pub fn region_dim(&self, region: &Region) -> Result<usize> {
        region.validate(self)?;
        let mut dim: u128 = 1;
        for &s in region.sites() {
            dim *= self.local_dims[s] as u128;
            if dim > u64::MAX as u128 {
                return Err(Error::Resource("region dimension overflows".into()));
            }
        }
        Ok(dim as usize)
    }

    /// The sorted complement of a region.
    pub fn complement(&self, region: &Region) -> Region {
        let sites: Vec<usize> = (0..self.num_sites())
            .filter(|s| !region.contains(*s))
            .collect();
        Region::new(sites).expect("complement sites are unique")
    }

    /// Full region covering every site.
    pub fn full_region(&self) -> Region {
        Region::new((0..self.num_sites()).collect()).expect("unique")
    }
}

/// Embedding tables mapping a (region sub-index, complement sub-index) pair
/// to the global amplitude index: `global = spread_region[r] + spread_comp[e]`.
pub(crate) struct RegionEmbedding {
    pub region_dim: usize,
    pub comp_dim: usize,
    pub spread_region: Vec<usize>,
    pub spread_comp: Vec<usize>,
}

impl RegionEmbedding {
    pub fn new(lattice: &Lattice, region: &Region) -> Result<Self> {
        region.validate(lattice)?;
        let comp = lattice.complement(region);
        let spread = |sites: &[usize]| -> Vec<usize> {
            let dims: Vec<usize> = sites.iter().map(|&s| lattice.local_dims[s]).collect();
            let total: usize = dims.iter().product();
            let mut out = Vec::with_capacity(total);
            let mut digits = vec![0usize; sites.len()];
            let mut acc = 0usize;
            out.push(0);
            for _ in 1..total {
                // Odometer increment, updating the embedded index in place.
                for (k, &site) in sites.iter().enumerate() {
                    digits[k] += 1;
                    acc += lattice.strides[site];
                    if digits[k] < dims[k] {
                        break;
                    }
                    acc -= dims[k] * lattice.strides[site];
                    digits[k] = 0;
                }
                out.push(acc);
            }
            out
        };
        let spread_region = spread(region.sites());
        let spread_comp = spread(comp.sites());
        Ok(RegionEmbedding {
            region_dim: spread_region.len(),
            comp_dim: spread_comp.len(),
            spread_region,
            spread_comp,
        })
    }
}

/// A normalized pure state on a lattice.
///
/// Construction normalizes; unnormalized vectors (branch components and the
/// like) are plain `Vec<C64>` in the APIs, never `PureState`.
#[derive(Debug, Clone)]
pub struct PureState {
    lattice: Arc<Lattice>,
    amplitudes: Vec<C64>,
}

impl PureState {
    pub fn new(lattice: Arc<Lattice>, mut amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != lattice.total_dim() {
            return Err(Error::Domain(format!(
                "amplitude vector of length {} for total dimension {}",
                amplitudes.len(),
                lattice.total_dim()
            )));
        }
        let norm = vec_norm(&amplitudes);
        if norm < 1e-14 {
            return Err(Error::Domain("cannot normalize the zero vector".into()));
        }
        // Already-normalized input passes through untouched, which keeps
        // save/load round trips bit-identical.
        if (norm - 1.0).abs() > 1e-12 {
            let inv = 1.0 / norm;
            for a in amplitudes.iter_mut() {
                *a *= inv;
            }
        }
        Ok(PureState { lattice, amplitudes })
    }

    /// Computational basis state |idx>.
    pub fn basis_state(lattice: Arc<Lattice>, idx: usize) -> Result<Self> {
        if idx >= lattice.total_dim() {
            return Err(Error::Domain(format!("basis index {idx} out of range")));
        }
        let mut amps = vec![C64::new(0.0, 0.0); lattice.total_dim()];
        amps[idx] = C64::new(1.0, 0.0);
        PureState::new(lattice, amps)
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        vec_norm(&self.amplitudes)
    }
}

/// A density matrix on a region's Hilbert space.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub matrix: Array2<C64>,
    pub region: Region,
}

impl DensityMatrix {
    /// Check hermiticity (1e-12), unit trace (1e-10), and positivity
    /// (eigenvalues >= -1e-10).
    pub fn validate(&self) -> Result<()> {
        let m = &self.matrix;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if (m[[i, j]] - m[[j, i]].conj()).norm() > 1e-12 {
                    return Err(Error::Numerical("density matrix not Hermitian".into()));
                }
            }
        }
        let tr: C64 = m.diag().sum();
        if (tr - C64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(Error::Numerical(format!("density matrix trace {} != 1", tr.re)));
        }
        let (vals, _) = lapack::eigh(&m.view())?;
        if vals.iter().any(|&v| v < -1e-10) {
            return Err(Error::Numerical("density matrix has a negative eigenvalue".into()));
        }
        Ok(())
    }
}

fn check_region_for_dense(state: &PureState, region: &Region) -> Result<RegionEmbedding> {
    if region.is_empty() {
        return Err(Error::Domain("empty region".into()));
    }
    let dim = state.lattice.region_dim(region)?;
    state.lattice.budget().check_dense_dim(dim)?;
    RegionEmbedding::new(&state.lattice, region)
}

fn rdm_impl(state: &PureState, region: &Region, seq: bool) -> Result<DensityMatrix> {
    let emb = check_region_for_dense(state, region)?;
    let amps = &state.amplitudes;
    let d = emb.region_dim;
    let row = |r: usize| -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); d];
        for (rp, slot) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for &base in &emb.spread_comp {
                acc += amps[emb.spread_region[r] + base] * amps[emb.spread_region[rp] + base].conj();
            }
            *slot = acc;
        }
        out
    };
    let rows = if seq {
        map_indexed_seq(d, row)
    } else {
        map_indexed(d, row)
    };
    let mut matrix = Array2::zeros((d, d));
    for (r, vals) in rows.into_iter().enumerate() {
        for (rp, v) in vals.into_iter().enumerate() {
            matrix[[r, rp]] = v;
        }
    }
    Ok(DensityMatrix {
        matrix,
        region: region.clone(),
    })
}

/// Partial trace of |psi><psi| over the complement of `region`.
pub fn reduced_density_matrix(state: &PureState, region: &Region) -> Result<DensityMatrix> {
    rdm_impl(state, region, false)
}

/// Sequential twin of [`reduced_density_matrix`]; bit-identical output.
pub fn reduced_density_matrix_seq(state: &PureState, region: &Region) -> Result<DensityMatrix> {
    rdm_impl(state, region, true)
}

/// A Schmidt decomposition across `region` vs its complement:
/// `psi = sum_k values[k] * region_vectors[k] (x) complement_vectors[k]`.
#[derive(Debug, Clone)]
pub struct Schmidt {
    /// Singular values, descending, all of them (including numerical zeros).
    pub values: Vec<f64>,
    /// Orthonormal vectors on the region space, one per singular value.
    pub region_vectors: Vec<Vec<C64>>,
    /// Orthonormal vectors on the complement space, aligned with the above.
    pub complement_vectors: Vec<Vec<C64>>,
}

/// Schmidt-decompose a state across a bipartition.
pub fn schmidt(state: &PureState, region: &Region) -> Result<Schmidt> {
    if region.is_empty() || region.len() >= state.lattice.num_sites() {
        return Err(Error::Domain(
            "schmidt requires a nonempty region strictly smaller than the lattice".into(),
        ));
    }
    let emb = RegionEmbedding::new(&state.lattice, region)?;
    let (dr, de) = (emb.region_dim, emb.comp_dim);
    let mut a = Array2::zeros((dr, de));
    for r in 0..dr {
        for e in 0..de {
            a[[r, e]] = state.amplitudes[emb.spread_region[r] + emb.spread_comp[e]];
        }
    }
    let (u, s, vh) = lapack::svd(&a.view())?;
    let region_vectors = (0..s.len()).map(|k| u.column(k).to_vec()).collect();
    let complement_vectors = (0..s.len()).map(|k| vh.row(k).to_vec()).collect();
    Ok(Schmidt {
        values: s,
        region_vectors,
        complement_vectors,
    })
}

pub(crate) fn apply_region_operator_raw_impl(
    lattice: &Lattice,
    amplitudes: &[C64],
    region: &Region,
    op: &ArrayView2<C64>,
    seq: bool,
) -> Result<Vec<C64>> {
    if region.is_empty() {
        return Err(Error::Domain("empty region".into()));
    }
    let dim = lattice.region_dim(region)?;
    if op.nrows() != dim || op.ncols() != dim {
        return Err(Error::Domain(format!(
            "operator is {}x{} but the region dimension is {dim}",
            op.nrows(),
            op.ncols()
        )));
    }
    lattice.budget().check_dense_dim(dim)?;
    let emb = RegionEmbedding::new(lattice, region)?;
    let (dr, de) = (emb.region_dim, emb.comp_dim);
    let column = |e: usize| -> Vec<C64> {
        let base = emb.spread_comp[e];
        let gathered: Vec<C64> = (0..dr)
            .map(|rp| amplitudes[emb.spread_region[rp] + base])
            .collect();
        (0..dr)
            .map(|r| {
                let mut acc = C64::new(0.0, 0.0);
                for (rp, g) in gathered.iter().enumerate() {
                    acc += op[[r, rp]] * *g;
                }
                acc
            })
            .collect()
    };
    let cols = if seq {
        map_indexed_seq(de, column)
    } else {
        map_indexed(de, column)
    };
    let mut out = vec![C64::new(0.0, 0.0); lattice.total_dim()];
    for (e, col) in cols.into_iter().enumerate() {
        let base = emb.spread_comp[e];
        for (r, v) in col.into_iter().enumerate() {
            out[emb.spread_region[r] + base] = v;
        }
    }
    Ok(out)
}

pub(crate) fn apply_region_operator_raw(
    lattice: &Lattice,
    amplitudes: &[C64],
    region: &Region,
    op: &ArrayView2<C64>,
) -> Result<Vec<C64>> {
    apply_region_operator_raw_impl(lattice, amplitudes, region, op, false)
}

/// Apply `op (x) identity-on-complement` to the state.
///
/// Returns the (generally unnormalized) resulting amplitude vector.
pub fn apply_region_operator(
    state: &PureState,
    region: &Region,
    op: &ArrayView2<C64>,
) -> Result<Vec<C64>> {
    apply_region_operator_raw_impl(&state.lattice, &state.amplitudes, region, op, false)
}

/// Sequential twin of [`apply_region_operator`]; bit-identical output.
pub fn apply_region_operator_seq(
    state: &PureState,
    region: &Region,
    op: &ArrayView2<C64>,
) -> Result<Vec<C64>> {
    apply_region_operator_raw_impl(&state.lattice, &state.amplitudes, region, op, true)
}

/// Squared norm helper exposed for branch-weight computations.
pub fn weight(v: &[C64]) -> f64 {
    vec_norm_sq(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::identity;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn bell() -> PureState {
        let lat = Arc::new(Lattice::qubits(2).unwrap());
        let s = std::f64::consts::FRAC_1_SQRT_2;
        PureState::new(lat, vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]).unwrap()
    }

    #[test]
    fn embedding_round_trip() {
        let lat = Lattice::new(vec![2, 3, 2], None, &Budget::default()).unwrap();
        let region = Region::new(vec![1]).unwrap();
        let emb = RegionEmbedding::new(&lat, &region).unwrap();
        assert_eq!(emb.region_dim, 3);
        assert_eq!(emb.comp_dim, 4);
        // Every global index is hit exactly once.
        let mut seen = vec![false; lat.total_dim()];
        for &r in &emb.spread_region {
            for &e in &emb.spread_comp {
                assert!(!seen[r + e]);
                seen[r + e] = true;
            }
        }
        assert!(seen.iter().all(|&x| x));
        // Site 1 has stride 2: region sub-index k embeds at 2k.
        assert_eq!(emb.spread_region, vec![0, 2, 4]);
    }

    #[test]
    fn bell_reduced_state_is_maximally_mixed() {
        let state = bell();
        let rdm = reduced_density_matrix(&state, &Region::new(vec![0]).unwrap()).unwrap();
        assert!((rdm.matrix[[0, 0]].re - 0.5).abs() < 1e-14);
        assert!((rdm.matrix[[1, 1]].re - 0.5).abs() < 1e-14);
        assert!(rdm.matrix[[0, 1]].norm() < 1e-14);
        rdm.validate().unwrap();
    }

    #[test]
    fn product_state_reduced_is_projector() {
        let lat = Arc::new(Lattice::qubits(2).unwrap());
        let state = PureState::basis_state(lat, 0).unwrap();
        let rdm = reduced_density_matrix(&state, &Region::new(vec![0]).unwrap()).unwrap();
        assert!((rdm.matrix[[0, 0]].re - 1.0).abs() < 1e-14);
        assert!(rdm.matrix[[1, 1]].norm() < 1e-14);
    }

    #[test]
    fn schmidt_of_bell_and_product() {
        let state = bell();
        let s = schmidt(&state, &Region::new(vec![0]).unwrap()).unwrap();
        assert!((s.values[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((s.values[1] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);

        let lat = Arc::new(Lattice::qubits(2).unwrap());
        let prod = PureState::basis_state(lat, 0).unwrap();
        let s = schmidt(&prod, &Region::new(vec![0]).unwrap()).unwrap();
        assert!((s.values[0] - 1.0).abs() < 1e-14);
        assert!(s.values[1].abs() < 1e-14);
    }

    #[test]
    fn schmidt_rejects_trivial_bipartitions() {
        let state = bell();
        assert!(schmidt(&state, &Region::new(vec![]).unwrap()).is_err());
        assert!(schmidt(&state, &Region::new(vec![0, 1]).unwrap()).is_err());
    }

    #[test]
    fn identity_passthrough_is_exact() {
        let state = bell();
        let region = Region::new(vec![1]).unwrap();
        let out = apply_region_operator(&state, &region, &identity(2).view()).unwrap();
        assert_eq!(out, state.amplitudes);
    }

    #[test]
    fn projector_on_bell_kills_one_component() {
        let state = bell();
        let mut p0 = Array2::zeros((2, 2));
        p0[[0, 0]] = c(1.0, 0.0);
        let out = apply_region_operator(&state, &Region::new(vec![0]).unwrap(), &p0.view()).unwrap();
        assert!((out[0].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
        assert!(out[3].norm() < 1e-14);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let state = bell();
        let op = identity(4);
        assert!(matches!(
            apply_region_operator(&state, &Region::new(vec![0]).unwrap(), &op.view()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn budget_violations_are_resource_errors() {
        let tiny = Budget::from_bytes(64);
        assert!(matches!(
            Lattice::new(vec![2; 4], None, &tiny),
            Err(Error::Resource(_))
        ));
        // Region matrices can exceed the budget even when the state fits.
        let lat = Arc::new(Lattice::new(vec![2; 4], None, &Budget::from_bytes(1 << 10)).unwrap());
        let state = PureState::basis_state(lat, 0).unwrap();
        let region = Region::new(vec![0, 1, 2, 3]).unwrap();
        assert!(matches!(
            reduced_density_matrix(&state, &region),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn empty_region_is_domain_error() {
        let state = bell();
        assert!(matches!(
            reduced_density_matrix(&state, &Region::new(vec![]).unwrap()),
            Err(Error::Domain(_))
        ));
    }
}
