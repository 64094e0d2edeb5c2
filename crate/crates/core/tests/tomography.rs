//! Gate reconstruction and relative-phase recovery on synthetic
//! block-diagonal gates.

mod common;

use common::*;
use nalgebra::DVector;
use num_complex::Complex;
use pespec::metrics::{combined_j, GateBlocks, MetricWeights};
use pespec::tomography::{
    block_diagonal, phase_aligned_error, reconstruct_block, relative_phase, spectator_superposition,
    ReconstructionInput, PREPARED_STATES,
};
use proptest::prelude::*;
use rand::Rng;
use std::f64::consts::PI;

fn random_tomogram_phases(r: &mut rand_chacha::ChaCha8Rng) -> [f64; PREPARED_STATES] {
    [0.0; PREPARED_STATES].map(|_| r.gen_range(0.0..2.0 * PI))
}

/// Tomograms of block `k` of a three-qubit gate on the ordering `n1 n2 n3`.
fn tomograms_of(u3: &CM, k: usize) -> ReconstructionInput<f64> {
    let prepared = ReconstructionInput::<f64>::prepared_states();
    let tomograms = prepared.map(|p| {
        let full = DVector::from_fn(8, |r, _| if r % 2 == k { p[r / 2] } else { Complex::default() });
        let out = u3 * full;
        DVector::from_fn(4, |r, _| out[2 * r + k])
    });
    ReconstructionInput::new(tomograms).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn block_diagonal_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (u0, u1) = (haar(4, &mut r), haar(4, &mut r));
        let u3 = block_diagonal(&u0, &u1);
        for (k, u) in [&u0, &u1].into_iter().enumerate() {
            let input = tomograms_of(&u3, k).with_phases(random_tomogram_phases(&mut r));
            let rec = reconstruct_block(&input);
            prop_assert!(!rec.ill_conditioned);
            let err = phase_aligned_error(&rec.u, u);
            prop_assert!(err < 1e-9, "block {k}: {err}");
        }
    }

    #[test]
    fn reconstructed_functional_matches(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (u0, u1) = (haar(4, &mut r), haar(4, &mut r));
        let w = MetricWeights::default();
        let direct = combined_j(&GateBlocks::new(u0.clone(), u1.clone(), 0.0), &w);
        let rec = |u: &CM, r: &mut rand_chacha::ChaCha8Rng| {
            reconstruct_block(&ReconstructionInput::from_block(u).with_phases(random_tomogram_phases(r))).u
        };
        let (a, b) = (rec(&u0, &mut r), rec(&u1, &mut r));
        let via = combined_j(&GateBlocks::new(a, b, 0.0), &w);
        prop_assert!((direct.j - via.j).abs() < 1e-9);
    }

    #[test]
    fn relative_phase_is_recovered(seed in any::<u64>(), phi0 in -3.1..3.1f64) {
        let mut r = rng(seed);
        let u0 = haar(4, &mut r);
        let u1 = &u0 * Complex::new(phi0.cos(), phi0.sin());
        let psi = haar(4, &mut r).column(0).into_owned();
        let out = block_diagonal(&u0, &u1) * spectator_superposition(&psi);
        let rel = relative_phase(&out);
        prop_assert!((rel.phase - phi0).abs() < 1e-9, "{} vs {phi0}", rel.phase);
        prop_assert!((rel.bloch_length - 1.0).abs() < 1e-9);
    }
}

#[test]
fn unrelated_blocks_shorten_the_bloch_vector() {
    let mut r = rng(7);
    let psi = haar(4, &mut r).column(0).into_owned();
    let (u0, u1) = (haar(4, &mut r), haar(4, &mut r));
    let rel = relative_phase(&(block_diagonal(&u0, &u1) * spectator_superposition(&psi)));
    let overlap = (u0 * &psi).dotc(&(u1 * &psi)).norm();
    assert!((rel.bloch_length - overlap).abs() < 1e-12);
}
