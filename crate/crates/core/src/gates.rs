//! Named two-qubit gates in the `|n1 n2⟩` basis ordered `00, 01, 10, 11`.

use nalgebra::Matrix2;
use num_complex::Complex;

use crate::num::{cis, CMatrix, Real};

fn from_rows<T: Real>(rows: [[Complex<T>; 4]; 4]) -> CMatrix<T> {
    CMatrix::from_fn(4, 4, |i, j| rows[i][j])
}

fn c<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::lit(re), T::lit(im))
}

pub fn identity<T: Real>() -> CMatrix<T> {
    CMatrix::identity(4, 4)
}

/// Controlled-NOT with qubit 1 as control.
pub fn cnot<T: Real>() -> CMatrix<T> {
    let (o, l) = (c(0.0, 0.0), c(1.0, 0.0));
    from_rows([[l, o, o, o], [o, l, o, o], [o, o, o, l], [o, o, l, o]])
}

pub fn cz<T: Real>() -> CMatrix<T> {
    let mut u = identity::<T>();
    u[(3, 3)] = c(-1.0, 0.0);
    u
}

pub fn swap<T: Real>() -> CMatrix<T> {
    let (o, l) = (c(0.0, 0.0), c(1.0, 0.0));
    from_rows([[l, o, o, o], [o, o, l, o], [o, l, o, o], [o, o, o, l]])
}

pub fn iswap<T: Real>() -> CMatrix<T> {
    let (o, l, i) = (c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0));
    from_rows([[l, o, o, o], [o, o, i, o], [o, i, o, o], [o, o, o, l]])
}

pub fn sqrt_iswap<T: Real>() -> CMatrix<T> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (o, l, r, i) = (c(0.0, 0.0), c(1.0, 0.0), c(s, 0.0), c(0.0, s));
    from_rows([[l, o, o, o], [o, r, i, o], [o, i, r, o], [o, o, o, l]])
}

/// Controlled phase `diag(1, 1, 1, e^{iφ})`.
pub fn cphase<T: Real>(phi: T) -> CMatrix<T> {
    let mut u = identity::<T>();
    u[(3, 3)] = cis(phi);
    u
}

/// `exp(i(c1 XX + c2 YY + c3 ZZ)/2)`, the canonical gate with Weyl
/// coordinates `(c1, c2, c3)`.
pub fn canonical<T: Real>(c1: T, c2: T, c3: T) -> CMatrix<T> {
    // XX, YY and ZZ are simultaneously diagonal in the Bell basis
    // |Φ±⟩ = (|00⟩ ± |11⟩)/√2, |Ψ±⟩ = (|01⟩ ± |10⟩)/√2 with eigenvalues
    // Φ+: (1, −1, 1), Φ−: (−1, 1, 1), Ψ+: (1, 1, −1), Ψ−: (−1, −1, −1)
    let half = T::lit(0.5);
    let phases = [
        (c1 - c2 + c3) * half,
        (-c1 + c2 + c3) * half,
        (c1 + c2 - c3) * half,
        (-c1 - c2 - c3) * half,
    ];
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let bell: [[f64; 4]; 4] =
        [[s, 0.0, 0.0, s], [s, 0.0, 0.0, -s], [0.0, s, s, 0.0], [0.0, s, -s, 0.0]];
    CMatrix::from_fn(4, 4, |i, j| {
        (0..4).fold(Complex::default(), |acc, k| {
            acc + cis(phases[k]) * T::lit(bell[k][i] * bell[k][j])
        })
    })
}

/// `a ⊗ b` for single-qubit operators, qubit 1 first.
pub fn kron2<T: Real>(a: &Matrix2<Complex<T>>, b: &Matrix2<Complex<T>>) -> CMatrix<T> {
    CMatrix::from_fn(4, 4, |i, j| a[(i / 2, j / 2)] * b[(i % 2, j % 2)])
}
