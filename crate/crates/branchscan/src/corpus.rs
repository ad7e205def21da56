//! Deterministic generators for reference states with known record structure:
//! Bell and GHZ states, the generalized Shor-code family (rows recording one
//! observable, columns a complementary one), the dilated two-scale state, the
//! tripartite pair-covering-yet-compatible example, and planted-record random
//! states whose exact branch decomposition is returned as a testing oracle.

use crate::branches::BranchDecomposition;
use crate::linalg::{mgs_insert, vec_norm};
use crate::records::{RecordProjector, RecordedObservable};
use crate::regions::Region;
use crate::state::{Budget, Lattice, PureState};
use crate::{Error, Result};
use itertools::Itertools;
use ndarray::prelude::*;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::collections::BTreeMap;
use std::sync::Arc;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Column vector e_i of dimension d, as a d x 1 matrix.
fn basis_column(d: usize, i: usize) -> Array2<C64> {
    let mut m = Array2::zeros((d, 1));
    m[[i, 0]] = c(1.0, 0.0);
    m
}

/// The two-qubit Bell state (|00> + |11>)/sqrt(2), sites on a line.
pub fn bell_state() -> PureState {
    ghz_state(2).expect("2 >= 2")
}

/// The n-qubit GHZ state (|0...0> + |1...1>)/sqrt(2), sites on a line.
pub fn ghz_state(n: usize) -> Result<PureState> {
    if n < 2 {
        return Err(Error::Domain("ghz_state requires n >= 2".into()));
    }
    let lattice = Arc::new(Lattice::qubit_line(n)?);
    let dim = lattice.total_dim();
    let mut amps = vec![c(0.0, 0.0); dim];
    amps[0] = c(1.0, 0.0);
    amps[dim - 1] = c(1.0, 0.0);
    PureState::new(lattice, amps)
}

/// Single-site z-basis record projectors: outcome 0 -> |0><0|, 1 -> |1><1|.
pub fn z_record(site: usize) -> RecordProjector {
    RecordProjector {
        region: Region::new(vec![site]).expect("single site"),
        ranges: vec![basis_column(2, 0), basis_column(2, 1)],
    }
}

/// Single-site x-basis record projectors: outcome 0 -> |+><+|, 1 -> |-><-|.
pub fn x_record(site: usize) -> RecordProjector {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut plus = Array2::zeros((2, 1));
    plus[[0, 0]] = c(s, 0.0);
    plus[[1, 0]] = c(s, 0.0);
    let mut minus = Array2::zeros((2, 1));
    minus[[0, 0]] = c(s, 0.0);
    minus[[1, 0]] = c(-s, 0.0);
    RecordProjector {
        region: Region::new(vec![site]).expect("single site"),
        ranges: vec![plus, minus],
    }
}

/// The row regions of an m x mp Shor lattice (row-major site order: site =
/// row * mp + col). Each row is a contiguous block of mp sites.
pub fn shor_rows(m: usize, mp: usize) -> Vec<Region> {
    (0..m)
        .map(|r| Region::new((r * mp..(r + 1) * mp).collect()).expect("unique sites"))
        .collect()
}

/// The column regions of an m x mp Shor lattice; column c holds sites
/// {c, c + mp, c + 2mp, ...}.
pub fn shor_cols(m: usize, mp: usize) -> Vec<Region> {
    (0..mp)
        .map(|col| Region::new((0..m).map(|r| r * mp + col).collect()).expect("unique sites"))
        .collect()
}

fn shor_lattice(m: usize, mp: usize) -> Result<Arc<Lattice>> {
    let coords = (0..m * mp)
        .map(|s| vec![(s / mp) as f64, (s % mp) as f64])
        .collect();
    Ok(Arc::new(Lattice::new(
        vec![2; m * mp],
        Some(coords),
        &Budget::default(),
    )?))
}

/// The generalized Shor-code state on an m x mp qubit grid:
/// `alpha [|0..0> + |1..1>]^(x)m + beta [|0..0> - |1..1>]^(x)m`
/// with each factor living on one row, normalized on output.
///
/// Requires m, mp >= 2 and |alpha|^2 + |beta|^2 = 1 (within 1e-12).
pub fn shor_state(m: usize, mp: usize, alpha: C64, beta: C64) -> Result<PureState> {
    if m < 2 || mp < 2 {
        return Err(Error::Domain("shor_state requires m, mp >= 2".into()));
    }
    if (alpha.norm_sqr() + beta.norm_sqr() - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(
            "shor_state requires |alpha|^2 + |beta|^2 = 1".into(),
        ));
    }
    let lattice = shor_lattice(m, mp)?;
    let mut amps = vec![c(0.0, 0.0); lattice.total_dim()];
    // Support: row r is all-0 or all-1; encode the choice in the bit b_r.
    let row_mask = |r: usize| -> usize { ((1usize << mp) - 1) << (r * mp) };
    for bits in 0..(1usize << m) {
        let mut idx = 0usize;
        for r in 0..m {
            if bits >> r & 1 == 1 {
                idx |= row_mask(r);
            }
        }
        let sign = if (bits.count_ones() & 1) == 0 { 1.0 } else { -1.0 };
        amps[idx] = alpha + beta * sign;
    }
    PureState::new(lattice, amps)
}

/// The row observable of the Shor state: on every row, rank-1 projectors onto
/// (|0..0> +/- |1..1>)/sqrt(2), outcomes ordered (+, -).
pub fn shor_row_observable(m: usize, mp: usize) -> RecordedObservable {
    let d = 1usize << mp;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let records = shor_rows(m, mp)
        .into_iter()
        .map(|region| {
            let mut plus = Array2::zeros((d, 1));
            plus[[0, 0]] = c(s, 0.0);
            plus[[d - 1, 0]] = c(s, 0.0);
            let mut minus = Array2::zeros((d, 1));
            minus[[0, 0]] = c(s, 0.0);
            minus[[d - 1, 0]] = c(-s, 0.0);
            RecordProjector {
                region,
                ranges: vec![plus, minus],
            }
        })
        .collect();
    RecordedObservable::new("omega_pm".into(), records).expect("m >= 2 disjoint rows")
}

/// The column observable of the Shor state: on every column, the projectors
/// onto even and odd parity of the column bits, outcomes ordered (even, odd).
pub fn shor_col_observable(m: usize, mp: usize) -> RecordedObservable {
    let d = 1usize << m;
    let records = shor_cols(m, mp)
        .into_iter()
        .map(|region| {
            let split = |parity: u32| -> Array2<C64> {
                let cols: Vec<usize> = (0..d).filter(|s| s.count_ones() & 1 == parity).collect();
                let mut mat = Array2::zeros((d, cols.len()));
                for (j, &s) in cols.iter().enumerate() {
                    mat[[s, j]] = c(1.0, 0.0);
                }
                mat
            };
            RecordProjector {
                region,
                ranges: vec![split(0), split(1)],
            }
        })
        .collect();
    RecordedObservable::new("omega_01".into(), records).expect("mp >= 2 disjoint columns")
}

/// Output of [`dilated_state`].
#[derive(Debug, Clone)]
pub struct DilatedState {
    pub state: PureState,
    /// The +/- observable, recorded on the union of the inner regions and on
    /// each outer region.
    pub obs_a: RecordedObservable,
    /// The 0/1 observable, recorded on each inner region.
    pub obs_b: RecordedObservable,
}

/// A two-scale state: a GHZ-like 0/1 observable written across the inner
/// regions, whose +/- complement is recorded both on the whole inner union
/// and on every outer region.
///
/// All listed regions must be pairwise disjoint, with at least two inner and
/// two outer regions. Unlisted sites up to the largest index are padded
/// with |0>.
pub fn dilated_state(inner: &[Region], outer: &[Region]) -> Result<DilatedState> {
    if inner.len() < 2 || outer.len() < 2 {
        return Err(Error::Domain(
            "dilated_state requires at least two inner and two outer regions".into(),
        ));
    }
    let all: Vec<&Region> = inner.iter().chain(outer.iter()).collect();
    for (a, b) in all.iter().tuple_combinations() {
        if !a.is_disjoint(b) {
            return Err(Error::Domain("dilated_state regions must be pairwise disjoint".into()));
        }
    }
    if all.iter().any(|r| r.is_empty()) {
        return Err(Error::Domain("dilated_state regions must be nonempty".into()));
    }
    let num_sites = all.iter().flat_map(|r| r.sites().iter()).max().unwrap() + 1;
    let lattice = Arc::new(Lattice::qubit_line(num_sites)?);

    let inner_sites: Vec<usize> = inner.iter().flat_map(|r| r.sites().iter().copied()).collect();
    let outer_sites: Vec<usize> = outer.iter().flat_map(|r| r.sites().iter().copied()).collect();
    let k_outer = outer_sites.len();

    let mut amps = vec![c(0.0, 0.0); lattice.total_dim()];
    let scale = 0.5f64.powi(k_outer as i32 / 2) * if k_outer % 2 == 1 { 0.5f64.sqrt() } else { 1.0 };
    for b in 0..2usize {
        let mut base = 0usize;
        if b == 1 {
            for &s in &inner_sites {
                base |= 1usize << s;
            }
        }
        for o in 0..(1usize << k_outer) {
            let mut idx = base;
            for (pos, &s) in outer_sites.iter().enumerate() {
                if o >> pos & 1 == 1 {
                    idx |= 1usize << s;
                }
            }
            let parity = (o.count_ones() as usize + b) % 2;
            // (1 + (-1)^(b + |o|)) / normalization
            if parity == 0 {
                amps[idx] = c(2.0 * scale, 0.0);
            }
        }
    }
    let state = PureState::new(lattice, amps)?;

    // Observable a: +/- on the inner union and on each outer region.
    let f_union = inner.iter().fold(Region::new(vec![])?, |acc, r| acc.union(r));
    let df = 1usize << f_union.len();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut gplus = Array2::zeros((df, 1));
    gplus[[0, 0]] = c(s, 0.0);
    gplus[[df - 1, 0]] = c(s, 0.0);
    let mut gminus = Array2::zeros((df, 1));
    gminus[[0, 0]] = c(s, 0.0);
    gminus[[df - 1, 0]] = c(-s, 0.0);
    let mut a_records = vec![RecordProjector {
        region: f_union,
        ranges: vec![gplus, gminus],
    }];
    for r in outer {
        let d = 1usize << r.len();
        let norm = (d as f64).sqrt().recip();
        let mut plus = Array2::zeros((d, 1));
        let mut minus = Array2::zeros((d, 1));
        for i in 0..d {
            plus[[i, 0]] = c(norm, 0.0);
            let sign = if i.count_ones() & 1 == 0 { 1.0 } else { -1.0 };
            minus[[i, 0]] = c(sign * norm, 0.0);
        }
        a_records.push(RecordProjector {
            region: r.clone(),
            ranges: vec![plus, minus],
        });
    }
    let obs_a = RecordedObservable::new("omega_a".into(), a_records)?;

    // Observable b: 0/1 on each inner region.
    let b_records = inner
        .iter()
        .map(|r| {
            let d = 1usize << r.len();
            RecordProjector {
                region: r.clone(),
                ranges: vec![basis_column(d, 0), basis_column(d, d - 1)],
            }
        })
        .collect();
    let obs_b = RecordedObservable::new("omega_b".into(), b_records)?;

    Ok(DilatedState { state, obs_a, obs_b })
}

/// Output of [`tripartite_counterexample`].
#[derive(Debug, Clone)]
pub struct TripartiteCounterexample {
    pub state: PureState,
    /// Recorded on all three 2-qubit regions A, B, C.
    pub obs_a: RecordedObservable,
    /// Recorded on A and B only.
    pub obs_b: RecordedObservable,
    /// The planted joint branch weights, indexed (i, j) with i the obs_a
    /// outcome and j the obs_b outcome.
    pub planted_weights: [[f64; 2]; 2],
}

/// A 6-qubit state where one observable's records pair-cover another's, yet
/// the two are compatible: A and B each hold a record of both observables in
/// complementary qubit slots, C records only the first.
pub fn tripartite_counterexample() -> TripartiteCounterexample {
    let lattice = Arc::new(Lattice::qubit_line(6).expect("6 qubits fits"));
    let weights: [[f64; 2]; 2] = [[0.4, 0.3], [0.2, 0.1]];
    let mut amps = vec![c(0.0, 0.0); 64];
    for i in 0..2usize {
        for j in 0..2usize {
            // A = {0,1} holds (i,j), B = {2,3} holds (i,j), C = {4,5} holds (i,0).
            let idx = i + 2 * j + 4 * i + 8 * j + 16 * i;
            amps[idx] = c(weights[i][j].sqrt(), 0.0);
        }
    }
    let state = PureState::new(lattice, amps).expect("normalized by construction");

    let pair_range = |fixed_first: bool, v: usize| -> Array2<C64> {
        // On a 2-qubit region: span of the two basis states with the first
        // (or second) qubit fixed to v.
        let mut mat = Array2::zeros((4, 2));
        for (col, other) in [0usize, 1].iter().enumerate() {
            let idx = if fixed_first { v + 2 * other } else { other + 2 * v };
            mat[[idx, col]] = c(1.0, 0.0);
        }
        mat
    };
    let region = |a: usize, b: usize| Region::new(vec![a, b]).expect("ok");

    let obs_a = RecordedObservable::new(
        "omega_a".into(),
        vec![
            RecordProjector {
                region: region(0, 1),
                ranges: vec![pair_range(true, 0), pair_range(true, 1)],
            },
            RecordProjector {
                region: region(2, 3),
                ranges: vec![pair_range(true, 0), pair_range(true, 1)],
            },
            RecordProjector {
                region: region(4, 5),
                ranges: vec![basis_column(4, 0), basis_column(4, 1)],
            },
        ],
    )
    .expect("valid records");
    let obs_b = RecordedObservable::new(
        "omega_b".into(),
        vec![
            RecordProjector {
                region: region(0, 1),
                ranges: vec![pair_range(false, 0), pair_range(false, 1)],
            },
            RecordProjector {
                region: region(2, 3),
                ranges: vec![pair_range(false, 0), pair_range(false, 1)],
            },
        ],
    )
    .expect("valid records");

    TripartiteCounterexample {
        state,
        obs_a,
        obs_b,
        planted_weights: weights,
    }
}

/// One planted observable: its record regions and outcome count.
#[derive(Debug, Clone)]
pub struct PlantObservable {
    pub regions: Vec<Region>,
    pub outcomes: usize,
}

/// Specification of a planted-record random state.
///
/// All record regions (within and across observables) must be pairwise
/// disjoint; each region needs dimension >= the outcome count so that
/// orthonormal outcome supports exist. `amplitudes` assigns one complex
/// weight per multi-index, enumerated little-endian (first observable
/// fastest), and must have unit total weight.
#[derive(Debug, Clone)]
pub struct PlantSpec {
    pub local_dims: Vec<usize>,
    pub coords: Option<Vec<Vec<f64>>>,
    pub observables: Vec<PlantObservable>,
    pub amplitudes: Vec<C64>,
    pub seed: u64,
}

/// A planted state with its known observables and exact branch decomposition.
#[derive(Debug, Clone)]
pub struct PlantedState {
    pub state: PureState,
    pub observables: Vec<RecordedObservable>,
    pub oracle: BranchDecomposition,
}

fn random_unit_columns(rng: &mut ChaCha8Rng, d: usize, k: usize) -> Result<Vec<Vec<C64>>> {
    let mut basis: Vec<Vec<C64>> = Vec::new();
    let mut attempts = 0;
    while basis.len() < k {
        attempts += 1;
        if attempts > 8 * k + 16 {
            return Err(Error::Numerical("failed to draw orthonormal supports".into()));
        }
        let v: Vec<C64> = (0..d)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                c(re, im) * 0.5f64.sqrt()
            })
            .collect();
        mgs_insert(&mut basis, &v, 1e-6);
    }
    Ok(basis)
}

/// Build a planted-record state with a known oracle decomposition.
///
/// For each observable, each record region gets a seeded random orthonormal
/// support vector per outcome; each multi-index's branch is the tensor
/// product of its outcome supports (times a shared random state on untouched
/// sites), weighted by the spec amplitude.
pub fn planted_state(spec: &PlantSpec) -> Result<PlantedState> {
    let lattice = Arc::new(Lattice::new(
        spec.local_dims.clone(),
        spec.coords.clone(),
        &Budget::default(),
    )?);
    if spec.observables.is_empty() {
        return Err(Error::Domain("planted_state needs at least one observable".into()));
    }
    let all_regions: Vec<&Region> = spec
        .observables
        .iter()
        .flat_map(|o| o.regions.iter())
        .collect();
    for (a, b) in all_regions.iter().tuple_combinations() {
        if !a.is_disjoint(b) {
            return Err(Error::Domain(
                "planted record regions must be pairwise disjoint (within and across observables)"
                    .into(),
            ));
        }
    }
    for (k, obs) in spec.observables.iter().enumerate() {
        if obs.regions.len() < 2 {
            return Err(Error::Domain(format!(
                "planted observable {k} needs at least 2 record regions"
            )));
        }
        if obs.outcomes < 2 {
            return Err(Error::Domain(format!(
                "planted observable {k} needs at least 2 outcomes"
            )));
        }
        for r in &obs.regions {
            if lattice.region_dim(r)? < obs.outcomes {
                return Err(Error::Domain(format!(
                    "region {:?} of planted observable {k} is too small for {} outcomes",
                    r.sites(),
                    obs.outcomes
                )));
            }
        }
    }
    let counts: Vec<usize> = spec.observables.iter().map(|o| o.outcomes).collect();
    let n_indices: usize = counts.iter().product();
    if spec.amplitudes.len() != n_indices {
        return Err(Error::Domain(format!(
            "{} amplitudes for {} multi-indices",
            spec.amplitudes.len(),
            n_indices
        )));
    }
    let total_w: f64 = spec.amplitudes.iter().map(|a| a.norm_sqr()).sum();
    if (total_w - 1.0).abs() > 1e-12 {
        return Err(Error::Domain("planted amplitudes must have unit total weight".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    // supports[obs][region][outcome] -> unit vector on the region space.
    let mut supports: Vec<Vec<Vec<Vec<C64>>>> = Vec::new();
    for obs in &spec.observables {
        let mut per_region = Vec::new();
        for r in &obs.regions {
            let d = lattice.region_dim(r)?;
            per_region.push(random_unit_columns(&mut rng, d, obs.outcomes)?);
        }
        supports.push(per_region);
    }
    // Shared random state on untouched sites.
    let covered = all_regions
        .iter()
        .fold(Region::new(vec![])?, |acc, r| acc.union(r));
    let untouched = lattice.complement(&covered);
    let untouched_vec: Option<Vec<C64>> = if untouched.is_empty() {
        None
    } else {
        let d = lattice.region_dim(&untouched)?;
        let mut v: Vec<C64> = (0..d)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                c(re, im)
            })
            .collect();
        let n = vec_norm(&v);
        for x in v.iter_mut() {
            *x /= n;
        }
        Some(v)
    };

    // Per-piece sub-index tables over the global index.
    let total = lattice.total_dim();
    let sub_table = |region: &Region| -> Vec<usize> {
        let mut out = vec![0usize; total];
        for (idx, slot) in out.iter_mut().enumerate() {
            let mut sub = 0usize;
            let mut mult = 1usize;
            for &s in region.sites() {
                let dim = lattice.local_dims()[s];
                let digit = idx / lattice_stride(&lattice, s) % dim;
                sub += digit * mult;
                mult *= dim;
            }
            *slot = sub;
        }
        out
    };
    let mut tables: Vec<Vec<Vec<usize>>> = Vec::new();
    for obs in &spec.observables {
        tables.push(obs.regions.iter().map(|r| sub_table(r)).collect());
    }
    let untouched_table = if untouched.is_empty() {
        None
    } else {
        Some(sub_table(&untouched))
    };

    let mut branches: BTreeMap<Vec<usize>, Vec<C64>> = BTreeMap::new();
    let mut weights: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    let mut amps = vec![c(0.0, 0.0); total];
    for (k, amp) in spec.amplitudes.iter().enumerate() {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let mut rest = k;
        let idx: Vec<usize> = counts
            .iter()
            .map(|&cnt| {
                let digit = rest % cnt;
                rest /= cnt;
                digit
            })
            .collect();
        let mut branch = vec![*amp; total];
        for (oi, obs) in spec.observables.iter().enumerate() {
            for (ri, _r) in obs.regions.iter().enumerate() {
                let table = &tables[oi][ri];
                let sup = &supports[oi][ri][idx[oi]];
                for (g, b) in branch.iter_mut().enumerate() {
                    *b *= sup[table[g]];
                }
            }
        }
        if let (Some(w), Some(table)) = (&untouched_vec, &untouched_table) {
            for (g, b) in branch.iter_mut().enumerate() {
                *b *= w[table[g]];
            }
        }
        for (a, b) in amps.iter_mut().zip(branch.iter()) {
            *a += *b;
        }
        weights.insert(idx.clone(), amp.norm_sqr());
        branches.insert(idx, branch);
    }
    let state = PureState::new(lattice.clone(), amps)?;

    let mut observables = Vec::new();
    for (oi, obs) in spec.observables.iter().enumerate() {
        let records: Vec<RecordProjector> = obs
            .regions
            .iter()
            .enumerate()
            .map(|(ri, r)| {
                let d = lattice.region_dim(r).expect("validated");
                let ranges = (0..obs.outcomes)
                    .map(|o| {
                        let mut m = Array2::zeros((d, 1));
                        for (i, x) in supports[oi][ri][o].iter().enumerate() {
                            m[[i, 0]] = *x;
                        }
                        m
                    })
                    .collect();
                RecordProjector {
                    region: r.clone(),
                    ranges,
                }
            })
            .collect();
        observables.push(RecordedObservable::new(format!("omega_p{oi}"), records)?);
    }

    let oracle = BranchDecomposition {
        observables: observables
            .iter()
            .zip(counts.iter())
            .map(|(o, &cnt)| (o.name.clone(), cnt))
            .collect(),
        branches,
        weights,
        tol: 1e-10,
    };
    Ok(PlantedState {
        state,
        observables,
        oracle,
    })
}

fn lattice_stride(lattice: &Lattice, site: usize) -> usize {
    lattice.local_dims()[..site].iter().product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::reduced_density_matrix;

    #[test]
    fn bell_norm_and_reduced_state() {
        let b = bell_state();
        assert!((b.norm() - 1.0).abs() < 1e-12);
        let rdm = reduced_density_matrix(&b, &Region::new(vec![1]).unwrap()).unwrap();
        assert!((rdm.matrix[[0, 0]].re - 0.5).abs() < 1e-14);
        assert!((rdm.matrix[[1, 1]].re - 0.5).abs() < 1e-14);
    }

    #[test]
    fn ghz_rejects_small_n() {
        assert!(ghz_state(1).is_err());
    }

    #[test]
    fn shor_state_support_size() {
        // 3x3 grid: 512 amplitudes, 8 of them nonzero for generic alpha.
        let psi = shor_state(3, 3, c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        assert_eq!(psi.amplitudes().len(), 512);
        let nonzero = psi.amplitudes().iter().filter(|a| a.norm_sqr() > 0.0).count();
        assert_eq!(nonzero, 8);
        assert!((psi.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shor_state_validates_inputs() {
        assert!(shor_state(1, 3, c(1.0, 0.0), c(0.0, 0.0)).is_err());
        assert!(shor_state(3, 3, c(1.0, 0.0), c(1.0, 0.0)).is_err());
    }

    #[test]
    fn shor_regions_partition_the_grid() {
        let rows = shor_rows(3, 4);
        let cols = shor_cols(3, 4);
        assert_eq!(rows.len(), 3);
        assert_eq!(cols.len(), 4);
        for r in &rows {
            for cl in &cols {
                // Every row meets every column in exactly one site.
                let shared = r.sites().iter().filter(|s| cl.contains(**s)).count();
                assert_eq!(shared, 1);
            }
        }
    }

    #[test]
    fn generators_are_deterministic() {
        let a = shor_state(2, 3, c(0.6, 0.0), c(0.8, 0.0)).unwrap();
        let b = shor_state(2, 3, c(0.6, 0.0), c(0.8, 0.0)).unwrap();
        assert_eq!(a.amplitudes(), b.amplitudes());
        let spec = PlantSpec {
            local_dims: vec![2; 6],
            coords: None,
            observables: vec![PlantObservable {
                regions: vec![Region::new(vec![0, 1]).unwrap(), Region::new(vec![2, 3]).unwrap()],
                outcomes: 2,
            }],
            amplitudes: vec![c(0.5f64.sqrt(), 0.0), c(0.0, 0.5f64.sqrt())],
            seed: 11,
        };
        let p1 = planted_state(&spec).unwrap();
        let p2 = planted_state(&spec).unwrap();
        assert_eq!(p1.state.amplitudes(), p2.state.amplitudes());
    }

    #[test]
    fn planted_state_rejects_overlapping_regions() {
        let spec = PlantSpec {
            local_dims: vec![2; 4],
            coords: None,
            observables: vec![
                PlantObservable {
                    regions: vec![Region::new(vec![0]).unwrap(), Region::new(vec![1]).unwrap()],
                    outcomes: 2,
                },
                PlantObservable {
                    regions: vec![Region::new(vec![1]).unwrap(), Region::new(vec![2]).unwrap()],
                    outcomes: 2,
                },
            ],
            amplitudes: vec![c(0.5, 0.0); 4],
            seed: 1,
        };
        assert!(planted_state(&spec).is_err());
    }

    #[test]
    fn tripartite_weights_are_normalized() {
        let t = tripartite_counterexample();
        assert!((t.state.norm() - 1.0).abs() < 1e-12);
        let total: f64 = t.planted_weights.iter().flatten().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
