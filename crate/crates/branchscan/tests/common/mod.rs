//! Shared test oracles: deliberately naive implementations, independent of
//! the library's stride/embedding machinery, plus random-instance generators.

#![allow(dead_code)]

use branchscan::corpus::{PlantObservable, PlantSpec};
use branchscan::state::{Budget, Lattice, PureState};
use branchscan::Region;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::sync::Arc;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Digit of `idx` at `site` for the given local dimensions (little-endian).
pub fn digit(idx: usize, site: usize, dims: &[usize]) -> usize {
    let stride: usize = dims[..site].iter().product();
    idx / stride % dims[site]
}

/// Sub-index of `idx` on a sorted site list (first site fastest).
pub fn sub_index(idx: usize, sites: &[usize], dims: &[usize]) -> usize {
    let mut out = 0;
    let mut mult = 1;
    for &s in sites {
        out += digit(idx, s, dims) * mult;
        mult *= dims[s];
    }
    out
}

/// Brute-force partial trace of |psi><psi| over the complement of `sites`:
/// O(D^2) double loop over global indices.
pub fn naive_partial_trace(state: &PureState, sites: &[usize]) -> Vec<Vec<C64>> {
    let dims = state.lattice().local_dims();
    let others: Vec<usize> = (0..dims.len()).filter(|s| !sites.contains(s)).collect();
    let d: usize = sites.iter().map(|&s| dims[s]).product();
    let amps = state.amplitudes();
    let mut rho = vec![vec![c(0.0, 0.0); d]; d];
    for i in 0..amps.len() {
        for j in 0..amps.len() {
            if others
                .iter()
                .all(|&s| digit(i, s, dims) == digit(j, s, dims))
            {
                let r = sub_index(i, sites, dims);
                let rp = sub_index(j, sites, dims);
                rho[r][rp] += amps[i] * amps[j].conj();
            }
        }
    }
    rho
}

/// Brute-force application of op (x) identity by materializing the full
/// operator entrywise: out[i] = sum_j op[r_i, r_j] delta(e_i, e_j) psi[j].
pub fn naive_kron_apply(
    state: &PureState,
    sites: &[usize],
    op: &[Vec<C64>],
) -> Vec<C64> {
    let dims = state.lattice().local_dims();
    let others: Vec<usize> = (0..dims.len()).filter(|s| !sites.contains(s)).collect();
    let amps = state.amplitudes();
    let mut out = vec![c(0.0, 0.0); amps.len()];
    for i in 0..amps.len() {
        let ri = sub_index(i, sites, dims);
        let mut acc = c(0.0, 0.0);
        for j in 0..amps.len() {
            if others
                .iter()
                .all(|&s| digit(i, s, dims) == digit(j, s, dims))
            {
                let rj = sub_index(j, sites, dims);
                acc += op[ri][rj] * amps[j];
            }
        }
        out[i] = acc;
    }
    out
}

pub fn random_state(seed: u64, local_dims: Vec<usize>) -> PureState {
    let lattice = Arc::new(Lattice::new(local_dims, None, &Budget::default()).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps: Vec<C64> = (0..lattice.total_dim())
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            c(re, im)
        })
        .collect();
    PureState::new(lattice, amps).unwrap()
}

pub fn region(sites: &[usize]) -> Region {
    Region::new(sites.to_vec()).unwrap()
}

/// Random planted spec on at most `max_qubits` qubits: `n_obs` observables
/// with 2-3 outcomes each, record regions sized to fit the outcome count,
/// all regions globally disjoint (hence trivially non-pair-covering).
pub fn random_noncovering_plant(seed: u64, max_qubits: usize, n_obs: usize) -> PlantSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9).wrapping_add(17));
    let mut sites: Vec<usize> = (0..max_qubits).collect();
    // Deterministic shuffle.
    for i in (1..sites.len()).rev() {
        let j = rng.gen_range(0..=i);
        sites.swap(i, j);
    }
    let mut cursor = 0usize;
    let mut observables = Vec::new();
    for k in 0..n_obs {
        // Keep at least 2 qubits (one minimal observable) per remaining slot.
        let needed_rest = (n_obs - 1 - k) * 2;
        let avail = max_qubits - cursor - needed_rest;
        let (outcomes, region_sites) = if avail >= 4 {
            let outcomes = rng.gen_range(2..=3usize);
            let region_sites = if outcomes > 2 { 2 } else { rng.gen_range(1..=2usize) };
            (outcomes, region_sites)
        } else {
            (2, 1)
        };
        let mut regions = Vec::new();
        for _ in 0..2 {
            let take: Vec<usize> = sites[cursor..cursor + region_sites].to_vec();
            cursor += region_sites;
            regions.push(Region::new(take).unwrap());
        }
        observables.push(PlantObservable { regions, outcomes });
    }
    assert!(cursor <= max_qubits, "plant does not fit the lattice");
    let counts: usize = observables.iter().map(|o| o.outcomes).product();
    let mut amps: Vec<C64> = (0..counts)
        .map(|_| loop {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let z = c(re, im);
            // Keep every branch clearly populated.
            if z.norm_sqr() >= 0.05 {
                break z;
            }
        })
        .collect();
    let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in amps.iter_mut() {
        *a /= norm;
    }
    PlantSpec {
        local_dims: vec![2; max_qubits],
        coords: None,
        observables,
        amplitudes: amps,
        seed,
    }
}
