//! Exact and branch-sampled expectation values of operator products.
//!
//! `<psi| O_1 ... O_N |psi>` splits into a sum of per-branch expectations
//! whenever every factor commutes with at least one record projector of each
//! observable, which is discharged here by requiring a record region disjoint
//! from every factor region. Sampling branches with probability proportional
//! to their weight then gives an unbiased estimator whose cost does not grow
//! with the number of branches.

use crate::branches::{joint_decomposition, BranchDecomposition};
use crate::exec::{map_indexed, map_indexed_seq};
use crate::linalg::vec_inner;
use crate::records::RecordedObservable;
use crate::regions::Region;
use crate::state::{apply_region_operator_raw, PureState};
use crate::{Error, Result};
use ndarray::prelude::*;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// A product of region-local operators, applied left to right (the last
/// factor acts on the state first, as in an operator product).
#[derive(Debug, Clone)]
pub struct ObservableProduct {
    pub factors: Vec<(Region, Array2<C64>)>,
}

impl ObservableProduct {
    pub fn new(factors: Vec<(Region, Array2<C64>)>) -> Result<Self> {
        for (region, op) in &factors {
            if region.is_empty() {
                return Err(Error::Domain("factor region is empty".into()));
            }
            if op.nrows() != op.ncols() {
                return Err(Error::Domain("factor operators must be square".into()));
            }
        }
        Ok(ObservableProduct { factors })
    }

    fn apply(&self, state: &PureState, v: &[C64]) -> Result<Vec<C64>> {
        let mut out = v.to_vec();
        for (region, op) in self.factors.iter().rev() {
            let dim = state.lattice().region_dim(region)?;
            if op.nrows() != dim {
                return Err(Error::Domain(format!(
                    "factor on {:?} is {}x{} but the region dimension is {dim}",
                    region.sites(),
                    op.nrows(),
                    op.ncols()
                )));
            }
            out = apply_region_operator_raw(state.lattice(), &out, region, &op.view())?;
        }
        Ok(out)
    }
}

/// Exact dense evaluation of `<psi| O_1 ... O_N |psi>`.
pub fn npoint_exact(state: &PureState, prod: &ObservableProduct) -> Result<C64> {
    let applied = prod.apply(state, state.amplitudes())?;
    Ok(vec_inner(state.amplitudes(), &applied))
}

/// Result of a branch-sampling run.
#[derive(Debug, Clone)]
pub struct SampleReport {
    pub estimate: C64,
    /// Standard error of the mean (combined over real and imaginary parts).
    pub std_error: f64,
    pub num_samples: usize,
    pub seed: u64,
    /// Per observable, the record region chosen to discharge the
    /// commutation requirement (first record disjoint from every factor).
    pub records_used: BTreeMap<String, Region>,
}

/// Pick, for each observable, the first record region disjoint from every
/// factor region; configuration error naming the observable when none exists.
fn choose_disjoint_records(
    obs_set: &[RecordedObservable],
    prod: &ObservableProduct,
) -> Result<BTreeMap<String, Region>> {
    let mut out = BTreeMap::new();
    for obs in obs_set {
        let found = obs
            .records
            .iter()
            .find(|rec| prod.factors.iter().all(|(fr, _)| fr.is_disjoint(&rec.region)));
        match found {
            Some(rec) => {
                out.insert(obs.name.clone(), rec.region.clone());
            }
            None => {
                return Err(Error::Config(format!(
                    "observable {} has no record region disjoint from every factor",
                    obs.name
                )));
            }
        }
    }
    Ok(out)
}

fn per_branch_expectations(
    state: &PureState,
    prod: &ObservableProduct,
    decomp: &BranchDecomposition,
    seq: bool,
) -> Result<(Vec<Vec<usize>>, Vec<f64>, Vec<C64>)> {
    let keys: Vec<Vec<usize>> = decomp.branches.keys().cloned().collect();
    let eval = |k: usize| -> Result<C64> {
        let branch = &decomp.branches[&keys[k]];
        let w = decomp.weights[&keys[k]];
        let applied = prod.apply(state, branch)?;
        // Normalized branch expectation: <b|O|b> / w.
        Ok(vec_inner(branch, &applied) / w)
    };
    let values: Vec<Result<C64>> = if seq {
        map_indexed_seq(keys.len(), eval)
    } else {
        map_indexed(keys.len(), eval)
    };
    let mut vals = Vec::with_capacity(keys.len());
    for v in values {
        vals.push(v?);
    }
    let weights: Vec<f64> = keys.iter().map(|k| decomp.weights[k]).collect();
    Ok((keys, weights, vals))
}

fn sampled_impl(
    state: &PureState,
    prod: &ObservableProduct,
    obs_set: &[RecordedObservable],
    tol: f64,
    num_samples: usize,
    seed: u64,
    seq: bool,
) -> Result<SampleReport> {
    if num_samples == 0 {
        return Err(Error::Domain("num_samples must be positive".into()));
    }
    let records_used = choose_disjoint_records(obs_set, prod)?;
    let joint = joint_decomposition(state, obs_set, tol)?;
    if !joint.verdict.is_compatible() {
        return Err(Error::Domain(
            "observable set is incompatible on this state; branch sampling is undefined".into(),
        ));
    }
    let (_keys, weights, values) = per_branch_expectations(state, prod, &joint.decomposition, seq)?;

    // Cumulative weights for inverse sampling; the total is 1 up to the
    // decomposition tolerance.
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for &w in &weights {
        acc += w;
        cdf.push(acc);
    }
    let total = acc;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0usize; weights.len()];
    for _ in 0..num_samples {
        let u: f64 = rng.gen::<f64>() * total;
        let pos = cdf.partition_point(|&x| x < u).min(weights.len() - 1);
        counts[pos] += 1;
    }

    let n = num_samples as f64;
    let mut mean = C64::new(0.0, 0.0);
    for (c, v) in counts.iter().zip(values.iter()) {
        mean += *v * (*c as f64);
    }
    mean /= n;
    let mut var = 0.0f64;
    for (c, v) in counts.iter().zip(values.iter()) {
        var += (*c as f64) * (*v - mean).norm_sqr();
    }
    let std_error = if num_samples > 1 {
        (var / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };

    Ok(SampleReport {
        estimate: mean,
        std_error,
        num_samples,
        seed,
        records_used,
    })
}

/// Estimate `<psi| O_1 ... O_N |psi>` by sampling branches of the joint
/// decomposition of `obs_set` with probability proportional to their weight.
///
/// Requires the observable set to be compatible on the state at `tol`, and
/// for each observable a record region disjoint from every factor region.
pub fn npoint_sampled(
    state: &PureState,
    prod: &ObservableProduct,
    obs_set: &[RecordedObservable],
    tol: f64,
    num_samples: usize,
    seed: u64,
) -> Result<SampleReport> {
    sampled_impl(state, prod, obs_set, tol, num_samples, seed, false)
}

/// Sequential twin of [`npoint_sampled`]; bit-identical output.
pub fn npoint_sampled_seq(
    state: &PureState,
    prod: &ObservableProduct,
    obs_set: &[RecordedObservable],
    tol: f64,
    num_samples: usize,
    seed: u64,
) -> Result<SampleReport> {
    sampled_impl(state, prod, obs_set, tol, num_samples, seed, true)
}

/// Exact branch sum of per-branch expectations (the degenerate "every branch
/// visited" form of the sampled estimator). Used as a cross-check.
pub fn npoint_branch_sum(
    state: &PureState,
    prod: &ObservableProduct,
    decomp: &BranchDecomposition,
) -> Result<C64> {
    let (_k, weights, values) = per_branch_expectations(state, prod, decomp, false)?;
    let mut sum = C64::new(0.0, 0.0);
    for (w, v) in weights.iter().zip(values.iter()) {
        sum += *v * *w;
    }
    Ok(sum)
}

/// Single-site Pauli operators as 2x2 matrices.
pub fn pauli_matrix(name: &str) -> Result<Array2<C64>> {
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    Ok(match name {
        "X" | "x" => array![[z, one], [one, z]],
        "Y" | "y" => array![[z, -i], [i, z]],
        "Z" | "z" => array![[one, z], [z, -one]],
        "I" | "i" | "id" => Array2::eye(2),
        other => {
            return Err(Error::Config(format!("unknown Pauli name {other}")));
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{bell_state, ghz_state};
    use crate::state::Lattice;
    use std::sync::Arc;

    fn pauli_product(sites_ops: &[(usize, &str)]) -> ObservableProduct {
        let factors = sites_ops
            .iter()
            .map(|(s, n)| {
                (
                    Region::new(vec![*s]).unwrap(),
                    pauli_matrix(n).unwrap(),
                )
            })
            .collect();
        ObservableProduct::new(factors).unwrap()
    }

    #[test]
    fn identity_product_gives_one() {
        let state = bell_state();
        let prod = ObservableProduct::new(vec![]).unwrap();
        let v = npoint_exact(&state, &prod).unwrap();
        assert!((v - C64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn bell_zz_correlation() {
        let state = bell_state();
        let prod = pauli_product(&[(0, "Z"), (1, "Z")]);
        let v = npoint_exact(&state, &prod).unwrap();
        assert!((v - C64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn ghz_stabilizer_xxx() {
        let state = ghz_state(3).unwrap();
        let prod = pauli_product(&[(0, "X"), (1, "X"), (2, "X")]);
        let v = npoint_exact(&state, &prod).unwrap();
        assert!((v - C64::new(1.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn single_site_z_on_plus_state() {
        let lat = Arc::new(Lattice::qubits(1).unwrap());
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let state = crate::state::PureState::new(
            lat,
            vec![C64::new(s, 0.0), C64::new(s, 0.0)],
        )
        .unwrap();
        let prod = pauli_product(&[(0, "Z")]);
        let v = npoint_exact(&state, &prod).unwrap();
        assert!(v.norm() < 1e-14);
    }
}
