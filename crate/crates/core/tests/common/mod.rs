//! Random gates shared by the integration tests.

#![allow(dead_code)]

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex;
use pespec::gates::{canonical, kron2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type CM = DMatrix<Complex<f64>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Haar-random `n × n` unitary (QR of a Ginibre matrix with the phases of
/// `R`'s diagonal divided out).
pub fn haar(n: usize, rng: &mut ChaCha8Rng) -> CM {
    let z = CM::from_fn(n, n, |_, _| {
        Complex::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let qr = z.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = d / d.norm();
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn random_su2(rng: &mut ChaCha8Rng) -> Matrix2<Complex<f64>> {
    let h = haar(2, rng);
    Matrix2::from_fn(|i, j| h[(i, j)])
}

/// `k1 ⊗ k2` with Haar-random single-qubit factors.
pub fn random_local(rng: &mut ChaCha8Rng) -> CM {
    kron2(&random_su2(rng), &random_su2(rng))
}

pub fn random_phase(rng: &mut ChaCha8Rng) -> Complex<f64> {
    let p: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    Complex::new(p.cos(), p.sin())
}

/// A uniformly drawn point `π > c1 ≥ c2 ≥ c3 ≥ 0`, `c1 + c2 ≤ π` of the Weyl
/// chamber.
pub fn random_weyl_point(rng: &mut ChaCha8Rng) -> (f64, f64, f64) {
    use std::f64::consts::PI;
    loop {
        let c1: f64 = rng.gen_range(0.0..PI);
        let c2: f64 = rng.gen_range(0.0..PI / 2.0);
        let c3: f64 = rng.gen_range(0.0..PI / 2.0);
        if c2 <= c1 && c3 <= c2 && c1 + c2 <= PI {
            return (c1, c2, c3);
        }
    }
}

/// `phase · k1 · canonical(c) · k2`.
pub fn dressed_canonical(c: (f64, f64, f64), rng: &mut ChaCha8Rng) -> CM {
    let k1 = random_local(rng);
    let k2 = random_local(rng);
    k1 * canonical(c.0, c.1, c.2) * k2 * random_phase(rng)
}
