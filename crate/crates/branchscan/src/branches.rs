//! Joint branch decompositions: construction, compatibility verification,
//! order/representative invariance checks, coarse-graining, and the
//! branch-weight entropy.
//!
//! A set of recorded observables is *compatible* on a state when the state
//! splits into branches that are simultaneous eigenstates of every record of
//! every observable. If such a decomposition exists it is unique and equals
//! the canonical product construction (projectors applied in a fixed order
//! using fixed record representatives), so construct-then-verify decides
//! compatibility exactly at tolerance.

use crate::exec::{map_indexed, map_indexed_seq};
use crate::linalg::{vec_dist, vec_inner, vec_norm_sq};
use crate::records::{verify_record, RecordedObservable};
use crate::state::{apply_region_operator_raw, PureState};
use crate::{Error, Result};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Relative weight below which a candidate branch is dropped.
const WEIGHT_DROP: f64 = 1e-12;

/// A multi-indexed family of unnormalized branch vectors with weights.
///
/// Only surviving branches (weight above the drop threshold) are stored; the
/// multi-index positions follow `observables`, which is sorted by name.
#[derive(Debug, Clone)]
pub struct BranchDecomposition {
    /// (name, outcome count) per observable, sorted by name.
    pub observables: Vec<(String, usize)>,
    pub branches: BTreeMap<Vec<usize>, Vec<C64>>,
    pub weights: BTreeMap<Vec<usize>, f64>,
    /// Tolerance the decomposition was built and verified at.
    pub tol: f64,
}

impl BranchDecomposition {
    pub fn num_branches(&self) -> usize {
        self.branches.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.values().sum()
    }
}

/// Which Definition-2 checks failed, with the worst offender.
#[derive(Debug, Clone)]
pub struct IncompatibilityDetail {
    /// Worst eigenstate violation: (observable, record index, multi-index).
    pub worst: Option<(String, usize, Vec<usize>)>,
    pub eigen_residual: f64,
    pub reconstruction_residual: f64,
    pub orthogonality_residual: f64,
    pub failed_checks: Vec<&'static str>,
}

#[derive(Debug, Clone)]
pub enum CompatibilityVerdict {
    Compatible,
    Incompatible(IncompatibilityDetail),
}

impl CompatibilityVerdict {
    pub fn is_compatible(&self) -> bool {
        matches!(self, CompatibilityVerdict::Compatible)
    }
}

/// Joint decomposition output: the branches plus the verification verdict and
/// the three residuals behind it.
#[derive(Debug, Clone)]
pub struct JointOutcome {
    pub decomposition: BranchDecomposition,
    pub verdict: CompatibilityVerdict,
    pub eigen_residual: f64,
    pub reconstruction_residual: f64,
    pub orthogonality_residual: f64,
}

fn sorted_observables(obs_set: &[RecordedObservable]) -> Vec<&RecordedObservable> {
    let mut sorted: Vec<&RecordedObservable> = obs_set.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    sorted
}

fn multi_index_space(counts: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = counts.iter().product();
    let mut out = Vec::with_capacity(total);
    for mut k in 0..total {
        let mut idx = Vec::with_capacity(counts.len());
        for &c in counts {
            idx.push(k % c);
            k /= c;
        }
        out.push(idx);
    }
    out
}

/// Apply the canonical projector product for one multi-index: observables in
/// name order left to right, rightmost applied first, each using its
/// first-listed record region.
fn canonical_branch(
    state: &PureState,
    sorted: &[&RecordedObservable],
    index: &[usize],
) -> Result<Vec<C64>> {
    let mut v = state.amplitudes().to_vec();
    for (pos, obs) in sorted.iter().enumerate().rev() {
        let rec = &obs.records[0];
        let proj = rec.projector(index[pos]);
        v = apply_region_operator_raw(state.lattice(), &v, &rec.region, &proj.view())?;
        if vec_norm_sq(&v) < WEIGHT_DROP {
            // Projectors only shrink norms; dead branches stay dead.
            return Ok(v);
        }
    }
    Ok(v)
}

fn joint_impl(
    state: &PureState,
    obs_set: &[RecordedObservable],
    tol: f64,
    seq: bool,
) -> Result<JointOutcome> {
    if obs_set.is_empty() {
        return Err(Error::Domain("empty observable set".into()));
    }
    for obs in obs_set {
        let res = verify_record(state, obs)?;
        if res > tol {
            return Err(Error::Domain(format!(
                "observable {} fails verify_record at {res:.3e} > tol {tol:.3e}",
                obs.name
            )));
        }
    }
    let sorted = sorted_observables(obs_set);
    let counts: Vec<usize> = sorted.iter().map(|o| o.num_outcomes()).collect();
    let indices = multi_index_space(&counts);

    let build = |k: usize| -> Result<(Vec<usize>, Vec<C64>, f64)> {
        let idx = &indices[k];
        let v = canonical_branch(state, &sorted, idx)?;
        let w = vec_norm_sq(&v);
        Ok((idx.clone(), v, w))
    };
    let built: Vec<Result<(Vec<usize>, Vec<C64>, f64)>> = if seq {
        map_indexed_seq(indices.len(), build)
    } else {
        map_indexed(indices.len(), build)
    };

    let mut branches = BTreeMap::new();
    let mut weights = BTreeMap::new();
    for item in built {
        let (idx, v, w) = item?;
        if w >= WEIGHT_DROP {
            branches.insert(idx.clone(), v);
            weights.insert(idx, w);
        }
    }

    // Definition-2 verification against EVERY record of EVERY observable.
    let keys: Vec<Vec<usize>> = branches.keys().cloned().collect();
    let mut eigen_residual = 0.0f64;
    let mut worst: Option<(String, usize, Vec<usize>)> = None;
    let checks: Vec<(usize, usize, usize)> = {
        let mut v = Vec::new();
        for (pos, obs) in sorted.iter().enumerate() {
            for ri in 0..obs.records.len() {
                for ki in 0..keys.len() {
                    v.push((pos, ri, ki));
                }
            }
        }
        v
    };
    let run_check = |c: usize| -> Result<f64> {
        let (pos, ri, ki) = checks[c];
        let obs = sorted[pos];
        let idx = &keys[ki];
        let branch = &branches[idx];
        let rec = &obs.records[ri];
        let proj = rec.projector(idx[pos]);
        let projected =
            apply_region_operator_raw(state.lattice(), branch, &rec.region, &proj.view())?;
        Ok(vec_dist(&projected, branch))
    };
    let residuals: Vec<Result<f64>> = if seq {
        map_indexed_seq(checks.len(), run_check)
    } else {
        map_indexed(checks.len(), run_check)
    };
    for (c, r) in residuals.into_iter().enumerate() {
        let r = r?;
        if r > eigen_residual {
            eigen_residual = r;
            let (pos, ri, ki) = checks[c];
            worst = Some((sorted[pos].name.clone(), ri, keys[ki].clone()));
        }
    }

    // Reconstruction.
    let mut sum = vec![C64::new(0.0, 0.0); state.amplitudes().len()];
    for v in branches.values() {
        for (s, x) in sum.iter_mut().zip(v.iter()) {
            *s += *x;
        }
    }
    let reconstruction_residual = vec_dist(&sum, state.amplitudes());

    // Pairwise orthogonality.
    let mut orthogonality_residual = 0.0f64;
    let vals: Vec<&Vec<C64>> = branches.values().collect();
    for i in 0..vals.len() {
        for j in i + 1..vals.len() {
            orthogonality_residual =
                orthogonality_residual.max(vec_inner(vals[i], vals[j]).norm());
        }
    }

    let mut failed = Vec::new();
    if eigen_residual > tol {
        failed.push("eigenstate");
    }
    if reconstruction_residual > tol {
        failed.push("reconstruction");
    }
    if orthogonality_residual > tol {
        failed.push("orthogonality");
    }
    let verdict = if failed.is_empty() {
        CompatibilityVerdict::Compatible
    } else {
        CompatibilityVerdict::Incompatible(IncompatibilityDetail {
            worst,
            eigen_residual,
            reconstruction_residual,
            orthogonality_residual,
            failed_checks: failed,
        })
    };

    Ok(JointOutcome {
        decomposition: BranchDecomposition {
            observables: sorted
                .iter()
                .map(|o| (o.name.clone(), o.num_outcomes()))
                .collect(),
            branches,
            weights,
            tol,
        },
        verdict,
        eigen_residual,
        reconstruction_residual,
        orthogonality_residual,
    })
}

/// Construct the candidate joint branch decomposition and verify Definition-2
/// compatibility: every branch an eigenvector of every record (a), branches
/// summing to the state (b), and pairwise orthogonal (c).
///
/// Precondition: every observable individually verifies at `tol` (domain
/// error otherwise).
pub fn joint_decomposition(
    state: &PureState,
    obs_set: &[RecordedObservable],
    tol: f64,
) -> Result<JointOutcome> {
    joint_impl(state, obs_set, tol, false)
}

/// Sequential twin of [`joint_decomposition`]; bit-identical output.
pub fn joint_decomposition_seq(
    state: &PureState,
    obs_set: &[RecordedObservable],
    tol: f64,
) -> Result<JointOutcome> {
    joint_impl(state, obs_set, tol, true)
}

/// Apply a projector product for an explicit choice of record representatives
/// and operator ordering.
///
/// `order` lists positions into the name-sorted observable set; the product
/// is applied right to left (the last entry of `order` acts first). `reps[k]`
/// picks the record region of the k-th sorted observable.
pub fn projector_product(
    state: &PureState,
    obs_set: &[RecordedObservable],
    multi_index: &[usize],
    reps: &[usize],
    order: &[usize],
) -> Result<Vec<C64>> {
    let sorted = sorted_observables(obs_set);
    if multi_index.len() != sorted.len() || reps.len() != sorted.len() || order.len() != sorted.len()
    {
        return Err(Error::Domain(
            "multi_index, reps, and order must all match the observable count".into(),
        ));
    }
    let mut v = state.amplitudes().to_vec();
    for &pos in order.iter().rev() {
        let obs = sorted[pos];
        let rec = obs
            .records
            .get(reps[pos])
            .ok_or_else(|| Error::Domain(format!("record index {} out of range", reps[pos])))?;
        let proj = rec.projector(multi_index[pos]);
        v = apply_region_operator_raw(state.lattice(), &v, &rec.region, &proj.view())?;
    }
    Ok(v)
}

fn theorem_impl(
    state: &PureState,
    obs_set: &[RecordedObservable],
    trials: usize,
    seed: u64,
    seq: bool,
) -> Result<f64> {
    if obs_set.is_empty() {
        return Err(Error::Domain("empty observable set".into()));
    }
    let sorted = sorted_observables(obs_set);
    let counts: Vec<usize> = sorted.iter().map(|o| o.num_outcomes()).collect();
    let redundancies: Vec<usize> = sorted.iter().map(|o| o.records.len()).collect();
    let n = sorted.len();

    let run_trial = |t: usize| -> Result<f64> {
        // Independent stream per trial so parallel and sequential execution
        // see identical randomness.
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed ^ (t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let idx: Vec<usize> = counts.iter().map(|&c| rng.gen_range(0..c)).collect();
        // Three independent draws of representatives and orderings.
        let mut variants = Vec::with_capacity(3);
        for _ in 0..3 {
            let reps: Vec<usize> = redundancies.iter().map(|&r| rng.gen_range(0..r)).collect();
            let mut order: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                let j = rng.gen_range(0..=i);
                order.swap(i, j);
            }
            variants.push(projector_product(state, obs_set, &idx, &reps, &order)?);
        }
        let mut worst = 0.0f64;
        for i in 0..variants.len() {
            for j in i + 1..variants.len() {
                worst = worst.max(vec_dist(&variants[i], &variants[j]));
            }
        }
        Ok(worst)
    };
    let results: Vec<Result<f64>> = if seq {
        map_indexed_seq(trials, run_trial)
    } else {
        map_indexed(trials, run_trial)
    };
    let mut worst = 0.0f64;
    for r in results {
        worst = worst.max(r?);
    }
    Ok(worst)
}

/// Probe the order/representative independence of projector products.
///
/// For `trials` seeded random draws of a multi-index, record representatives,
/// and projector orderings, returns the maximum pairwise distance between the
/// resulting product vectors. When no observable pair-covers another, the
/// products are guaranteed equal, so the residual stays at numerical noise;
/// pair-covering incompatible sets (Shor) produce order-of-one residuals.
pub fn check_theorem_identities(
    state: &PureState,
    obs_set: &[RecordedObservable],
    trials: usize,
    seed: u64,
) -> Result<f64> {
    theorem_impl(state, obs_set, trials, seed, false)
}

/// Sequential twin of [`check_theorem_identities`]; bit-identical output.
pub fn check_theorem_identities_seq(
    state: &PureState,
    obs_set: &[RecordedObservable],
    trials: usize,
    seed: u64,
) -> Result<f64> {
    theorem_impl(state, obs_set, trials, seed, true)
}

/// Sum branches over the indices of dropped observables.
///
/// The resulting branches are eigenvectors of every record of every kept
/// observable (within the stored tolerance).
pub fn coarse_grain(decomp: &BranchDecomposition, keep: &[&str]) -> Result<BranchDecomposition> {
    if keep.is_empty() {
        return Err(Error::Domain("coarse_grain requires a nonempty keep set".into()));
    }
    let mut positions = Vec::new();
    for name in keep {
        match decomp.observables.iter().position(|(n, _)| n == name) {
            Some(p) => positions.push(p),
            None => {
                return Err(Error::Domain(format!("unknown observable name {name}")));
            }
        }
    }
    positions.sort_unstable();
    positions.dedup();

    let mut branches: BTreeMap<Vec<usize>, Vec<C64>> = BTreeMap::new();
    for (idx, v) in &decomp.branches {
        let new_idx: Vec<usize> = positions.iter().map(|&p| idx[p]).collect();
        match branches.get_mut(&new_idx) {
            Some(acc) => {
                for (a, x) in acc.iter_mut().zip(v.iter()) {
                    *a += *x;
                }
            }
            None => {
                branches.insert(new_idx, v.clone());
            }
        }
    }
    let weights = branches
        .iter()
        .map(|(k, v)| (k.clone(), vec_norm_sq(v)))
        .collect();
    Ok(BranchDecomposition {
        observables: positions
            .iter()
            .map(|&p| decomp.observables[p].clone())
            .collect(),
        branches,
        weights,
        tol: decomp.tol,
    })
}

/// Entropy of the branch-weight spectrum, -sum w ln w, in nats.
pub fn branch_entropy(decomp: &BranchDecomposition) -> f64 {
    decomp
        .weights
        .values()
        .filter(|&&w| w > 0.0)
        .map(|&w| -w * w.ln())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decomp_with_weights(weights: &[f64]) -> BranchDecomposition {
        let mut branches = BTreeMap::new();
        let mut wmap = BTreeMap::new();
        for (i, &w) in weights.iter().enumerate() {
            // 1-dimensional placeholder vectors with the right norms.
            branches.insert(vec![i], vec![C64::new(w.sqrt(), 0.0)]);
            wmap.insert(vec![i], w);
        }
        BranchDecomposition {
            observables: vec![("omega".into(), weights.len())],
            branches,
            weights: wmap,
            tol: 1e-8,
        }
    }

    #[test]
    fn entropy_of_trivial_and_symmetric_spectra() {
        assert_eq!(branch_entropy(&decomp_with_weights(&[1.0])), 0.0);
        let e = branch_entropy(&decomp_with_weights(&[0.5, 0.5]));
        assert!((e - std::f64::consts::LN_2).abs() < 1e-15);
        let e = branch_entropy(&decomp_with_weights(&[0.25; 4]));
        assert!((e - 2.0 * std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn entropy_is_permutation_invariant_and_bounded() {
        let a = branch_entropy(&decomp_with_weights(&[0.7, 0.2, 0.1]));
        let b = branch_entropy(&decomp_with_weights(&[0.1, 0.7, 0.2]));
        assert!((a - b).abs() < 1e-15);
        assert!(a <= (3.0f64).ln() + 1e-15);
    }

    #[test]
    fn coarse_grain_marginalizes_weights() {
        let mut branches = BTreeMap::new();
        let mut weights = BTreeMap::new();
        for i in 0..2 {
            for j in 0..2 {
                branches.insert(vec![i, j], vec![C64::new(0.5, 0.0)]);
                weights.insert(vec![i, j], 0.25);
            }
        }
        let d = BranchDecomposition {
            observables: vec![("a".into(), 2), ("b".into(), 2)],
            branches,
            weights,
            tol: 1e-8,
        };
        let kept = coarse_grain(&d, &["a"]).unwrap();
        assert_eq!(kept.num_branches(), 2);
        for w in kept.weights.values() {
            assert!((w - 1.0).abs() < 1e-12); // (0.5 + 0.5)^2
        }
        let all = coarse_grain(&d, &["a", "b"]).unwrap();
        assert_eq!(all.num_branches(), 4);
        assert!(matches!(coarse_grain(&d, &["nope"]), Err(Error::Domain(_))));
    }
}
