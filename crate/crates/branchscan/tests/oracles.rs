//! State-kernel checks against independent brute-force oracles, plus
//! property tests of the statecore invariants.

mod common;

use branchscan::corpus::{shor_rows, shor_state};
use branchscan::state::{
    apply_region_operator, apply_region_operator_seq, reduced_density_matrix,
    reduced_density_matrix_seq, schmidt,
};
use common::{c, naive_kron_apply, naive_partial_trace, random_state, region};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

#[test]
fn rdm_matches_naive_partial_trace_on_random_states() {
    for seed in 0..6u64 {
        let dims = match seed % 3 {
            0 => vec![2, 2, 2, 2, 2],
            1 => vec![2, 3, 2, 2],
            _ => vec![3, 2, 4],
        };
        let state = random_state(seed, dims.clone());
        let sites: Vec<usize> = match seed % 2 {
            0 => vec![0, 2],
            _ => vec![1],
        };
        let rdm = reduced_density_matrix(&state, &region(&sites)).unwrap();
        let gold = naive_partial_trace(&state, &sites);
        for (i, row) in gold.iter().enumerate() {
            for (j, &g) in row.iter().enumerate() {
                assert!(
                    (rdm.matrix[[i, j]] - g).norm() < 1e-12,
                    "seed {seed}, entry ({i},{j})"
                );
            }
        }
        rdm.validate().unwrap();
    }
}

#[test]
fn rdm_of_shor_row_is_ghz_projector() {
    // alpha = 1: the reduced state of the first row is the rank-1 projector
    // onto (|000> + |111>)/sqrt(2). Frozen from the brute-force partial
    // trace of the explicit 9-qubit vector.
    let psi = shor_state(3, 3, c(1.0, 0.0), c(0.0, 0.0)).unwrap();
    let row0 = shor_rows(3, 3)[0].clone();
    let gold = naive_partial_trace(&psi, row0.sites());
    let rdm = reduced_density_matrix(&psi, &row0).unwrap();
    let s = 0.5;
    for i in 0..8 {
        for j in 0..8 {
            let expect = if (i == 0 || i == 7) && (j == 0 || j == 7) {
                c(s, 0.0)
            } else {
                c(0.0, 0.0)
            };
            assert!((gold[i][j] - expect).norm() < 1e-12, "oracle ({i},{j})");
            assert!((rdm.matrix[[i, j]] - expect).norm() < 1e-12, "impl ({i},{j})");
        }
    }
}

#[test]
fn apply_matches_naive_kron_on_random_instances() {
    for seed in 10..16u64 {
        let n = 4 + (seed % 3) as usize; // 4..6 qubits
        let state = random_state(seed, vec![2; n]);
        let sites: Vec<usize> = if seed % 2 == 0 { vec![1, 3] } else { vec![0, 2] };
        let d = 1 << sites.len();
        // A fixed non-Hermitian complex matrix exercises index handling.
        let mut op = vec![vec![c(0.0, 0.0); d]; d];
        let mut val = 0.3;
        for (r, row) in op.iter_mut().enumerate() {
            for (q, x) in row.iter_mut().enumerate() {
                *x = c(val, 0.1 * (r as f64) - 0.2 * (q as f64));
                val = (val * 1.37 + 0.11) % 1.0;
            }
        }
        let mut op_nd = ndarray::Array2::zeros((d, d));
        for r in 0..d {
            for q in 0..d {
                op_nd[[r, q]] = op[r][q];
            }
        }
        let got = apply_region_operator(&state, &region(&sites), &op_nd.view()).unwrap();
        let gold = naive_kron_apply(&state, &sites, &op);
        for (g, w) in got.iter().zip(gold.iter()) {
            assert!((g - w).norm() < 1e-12, "seed {seed}");
        }
    }
}

#[test]
fn row_plus_projector_on_shor_matches_oracle() {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let psi = shor_state(3, 3, c(s, 0.0), c(s, 0.0)).unwrap();
    let row = shor_rows(3, 3)[0].clone();
    // P_+ = |v+><v+| with v+ = (|000> + |111>)/sqrt(2) on the row space.
    let mut op = vec![vec![c(0.0, 0.0); 8]; 8];
    for &i in &[0usize, 7] {
        for &j in &[0usize, 7] {
            op[i][j] = c(0.5, 0.0);
        }
    }
    let mut op_nd = ndarray::Array2::zeros((8, 8));
    for i in 0..8 {
        for j in 0..8 {
            op_nd[[i, j]] = op[i][j];
        }
    }
    let got = apply_region_operator(&psi, &row, &op_nd.view()).unwrap();
    let gold = naive_kron_apply(&psi, row.sites(), &op);
    for (g, w) in got.iter().zip(gold.iter()) {
        assert!((g - w).norm() < 1e-12);
    }
    // The + branch weight is |alpha|^2 = 1/2.
    let weight: f64 = got.iter().map(|x| x.norm_sqr()).sum();
    assert!((weight - 0.5).abs() < 1e-12);
}

#[test]
fn schmidt_reconstructs_100_random_states() {
    for seed in 0..100u64 {
        let n = 2 + (seed % 9) as usize; // 2..10 qubits
        let state = random_state(1000 + seed, vec![2; n]);
        let cut = 1 + (seed as usize % (n - 1));
        let sites: Vec<usize> = (0..cut).collect();
        let s = schmidt(&state, &region(&sites)).unwrap();
        // Rebuild the full amplitude vector from the decomposition.
        let dims = state.lattice().local_dims();
        let comp: Vec<usize> = (cut..n).collect();
        let mut rebuilt = vec![c(0.0, 0.0); state.amplitudes().len()];
        for (k, &sv) in s.values.iter().enumerate() {
            for (idx, slot) in rebuilt.iter_mut().enumerate() {
                let r = common::sub_index(idx, &sites, dims);
                let e = common::sub_index(idx, &comp, dims);
                *slot += s.region_vectors[k][r] * s.complement_vectors[k][e] * sv;
            }
        }
        let err: f64 = rebuilt
            .iter()
            .zip(state.amplitudes().iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-10, "seed {seed}: reconstruction error {err}");
        // Descending order.
        for w in s.values.windows(2) {
            assert!(w[0] >= w[1] - 1e-15);
        }
    }
}

#[test]
fn ghz_schmidt_values_frozen() {
    // GHZ on 3 qubits across {0,1}: brute-force SVD of the 4x2 amplitude
    // matrix [[1/sqrt2, 0], [0, 0], [0, 0], [0, 1/sqrt2]] gives two equal
    // singular values 1/sqrt2.
    let ghz = branchscan::corpus::ghz_state(3).unwrap();
    let s = schmidt(&ghz, &region(&[0, 1])).unwrap();
    let inv = std::f64::consts::FRAC_1_SQRT_2;
    assert!((s.values[0] - inv).abs() < 1e-12);
    assert!((s.values[1] - inv).abs() < 1e-12);
    for v in &s.values[2..] {
        assert!(v.abs() < 1e-12);
    }
}

#[test]
fn parallel_kernels_match_sequential_bitwise() {
    for seed in 40..44u64 {
        let state = random_state(seed, vec![2; 8]);
        let sites = vec![1, 4, 6];
        let d = 8;
        let mut op = ndarray::Array2::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                op[[i, j]] = c((i + 2 * j) as f64 * 0.05, (i as f64) - 0.5 * (j as f64));
            }
        }
        let par = apply_region_operator(&state, &region(&sites), &op.view()).unwrap();
        let seq = apply_region_operator_seq(&state, &region(&sites), &op.view()).unwrap();
        assert_eq!(par, seq);
        let rp = reduced_density_matrix(&state, &region(&sites)).unwrap();
        let rs = reduced_density_matrix_seq(&state, &region(&sites)).unwrap();
        assert_eq!(rp.matrix, rs.matrix);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn prop_rdm_is_valid_density_matrix(seed in 0u64..5000, n in 2usize..6, k in 1usize..4) {
        let k = k.min(n - 1);
        let state = random_state(seed, vec![2; n]);
        let sites: Vec<usize> = (0..k).collect();
        let rdm = reduced_density_matrix(&state, &region(&sites)).unwrap();
        // Unit trace within 1e-10 and Hermitian within 1e-12.
        let tr: C64 = (0..rdm.matrix.nrows()).map(|i| rdm.matrix[[i, i]]).sum();
        prop_assert!((tr.re - 1.0).abs() < 1e-10);
        prop_assert!(tr.im.abs() < 1e-12);
        rdm.validate().unwrap();
    }

    #[test]
    fn prop_schmidt_values_are_a_probability_vector(seed in 0u64..5000, n in 2usize..7) {
        let state = random_state(seed, vec![2; n]);
        let s = schmidt(&state, &region(&[0])).unwrap();
        let total: f64 = s.values.iter().map(|v| v * v).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn prop_identity_application_is_exact(seed in 0u64..5000, n in 2usize..6) {
        let state = random_state(seed, vec![2; n]);
        let eye = ndarray::Array2::eye(2);
        let out = apply_region_operator(&state, &region(&[n - 1]), &eye.view()).unwrap();
        prop_assert_eq!(out, state.amplitudes().to_vec());
    }
}
