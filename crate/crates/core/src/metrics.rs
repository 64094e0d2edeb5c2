//! Gate-block extraction, local invariants, Weyl-chamber coordinates and the
//! perfect-entangler functional.
//!
//! Magic basis (columns are the Bell-type states the invariants are defined
//! in), used as `U_B = Q† U Q`:
//!
//! ```text
//!            ⎡ 1  0  0  i ⎤
//! Q = 1/√2 · ⎢ 0  i  1  0 ⎥
//!            ⎢ 0  i −1  0 ⎥
//!            ⎣ 1  0  0 −i ⎦
//! ```
//!
//! With `M = U_Bᵀ U_B` the invariants are
//! `g1 = Re Tr²M / 16`, `g2 = Im Tr²M / 16`, `g3 = Re (Tr²M − Tr M²) / 4`.
//! Before evaluating them the global phase is removed by multiplying with
//! `exp(−i arg(det U) / 4)` (principal branch). The modulus of the
//! determinant is left alone so that leakage out of the logical subspace is
//! not hidden; it is penalized by `Δ_U = 1 − Tr[U†U]/4`.

use nalgebra::{Matrix4, Schur, SVD};
use num_complex::Complex;

use crate::device::{Basis, Occupations};
use crate::error::{Error, Result};
use crate::num::{abs, arg, cis, CMatrix, Real};

/// Blocks with `‖U†U − 1‖_max` above this have unreliable Weyl coordinates.
pub const UNITARITY_TOLERANCE: f64 = 1e-3;

/// Slack of the perfect-entangler inequalities (in radians).
pub const PE_EPS: f64 = 1e-9;

/// The two conditional two-qubit operators at time `time`.
#[derive(Clone, Debug, PartialEq)]
pub struct GateBlocks<T: Real> {
    /// Spectator in `|0⟩`.
    pub u0: CMatrix<T>,
    /// Spectator in `|1⟩`.
    pub u1: CMatrix<T>,
    pub time: T,
}

impl<T: Real> GateBlocks<T> {
    pub fn new(u0: CMatrix<T>, u1: CMatrix<T>, time: T) -> Self {
        Self { u0, u1, time }
    }

    pub fn block(&self, spectator: usize) -> &CMatrix<T> {
        if spectator == 0 {
            &self.u0
        } else {
            &self.u1
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalInvariants<T> {
    pub g1: T,
    pub g2: T,
    pub g3: T,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeylCoordinates<T> {
    pub c1: T,
    pub c2: T,
    pub c3: T,
    /// False when the input was too far from unitary for the coordinates to
    /// be meaningful.
    pub reliable: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricWeights<T> {
    pub w_u: T,
    pub w_s: T,
}

impl<T: Real> Default for MetricWeights<T> {
    fn default() -> Self {
        Self { w_u: T::lit(0.8), w_s: T::lit(0.5) }
    }
}

impl<T: Real> MetricWeights<T> {
    pub fn new(w_u: T, w_s: T) -> Result<Self> {
        if !(w_u >= T::zero() && w_u <= T::one()) {
            return Err(crate::error::invalid("w_u", "must lie in [0, 1]"));
        }
        if !(w_s >= T::zero()) || !w_s.is_finite() {
            return Err(crate::error::invalid("w_s", "must be non-negative and finite"));
        }
        Ok(Self { w_u, w_s })
    }
}

/// `J` and its three components.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JBreakdown<T> {
    pub j: T,
    pub j_pe0: T,
    pub j_pe1: T,
    /// `w_S · S`.
    pub ws_s: T,
}

/// Row index of `|n1 n2⟩` inside a block: `2 n1 + n2`.
pub fn block_index(n1: usize, n2: usize) -> usize {
    2 * n1 + n2
}

/// Projects the propagated columns onto the two logical blocks.
///
/// `v` has one column per entry of `columns`; rows are full-space bare
/// states. Entry `(i, j)` of block `k` is
/// `⟨n1 n2 k, 0| V |m1 m2 k, 0⟩` with `i = 2 n1 + n2`, `j = 2 m1 + m2`.
pub fn extract_blocks<T: Real>(
    v: &CMatrix<T>,
    columns: &[Occupations],
    basis: &Basis,
    time: T,
) -> Result<GateBlocks<T>> {
    let mut blocks = [CMatrix::zeros(4, 4), CMatrix::zeros(4, 4)];
    for (k, block) in blocks.iter_mut().enumerate() {
        for m in 0..4 {
            let col_state = [m >> 1, m & 1, k, 0];
            let col = columns
                .iter()
                .position(|c| *c == col_state)
                .ok_or(Error::MissingColumn(col_state))?;
            for n in 0..4 {
                let row = basis.index(&[n >> 1, n & 1, k, 0])?;
                block[(n, m)] = v[(row, col)];
            }
        }
    }
    let [u0, u1] = blocks;
    Ok(GateBlocks { u0, u1, time })
}

/// The magic basis `Q`, see the module documentation.
pub fn magic_basis<T: Real>() -> CMatrix<T> {
    let s = T::lit(std::f64::consts::FRAC_1_SQRT_2);
    let (o, l, i) = (Complex::default(), Complex::new(s, T::zero()), Complex::new(T::zero(), s));
    let rows = [[l, o, o, i], [o, i, l, o], [o, i, -l, o], [l, o, o, -i]];
    CMatrix::from_fn(4, 4, |r, c| rows[r][c])
}

/// `Q† U Q`.
pub fn bell_transform<T: Real>(u: &CMatrix<T>) -> CMatrix<T> {
    let q = magic_basis::<T>();
    q.adjoint() * u * q
}

/// `U · exp(−i arg(det U)/4)`; a vanishing determinant leaves `U` unchanged.
pub fn remove_determinant_phase<T: Real>(u: &CMatrix<T>) -> CMatrix<T> {
    let det = u.determinant();
    if abs(det) <= T::default_epsilon().powi(4) {
        return u.clone();
    }
    u * cis(-arg(det) / T::lit(4.0))
}

pub fn local_invariants<T: Real>(u: &CMatrix<T>) -> LocalInvariants<T> {
    let ub = bell_transform(&remove_determinant_phase(u));
    let m = ub.transpose() * &ub;
    let tr = m.trace();
    let tr2 = tr * tr;
    let tr_m2 = (&m * &m).trace();
    let sixteenth = T::lit(1.0 / 16.0);
    LocalInvariants {
        g1: tr2.re * sixteenth,
        g2: tr2.im * sixteenth,
        g3: (tr2 - tr_m2).re / T::lit(4.0),
    }
}

/// `‖U†U − 1‖_max`.
pub fn unitarity_deviation<T: Real>(u: &CMatrix<T>) -> T {
    let g = u.adjoint() * u;
    let mut worst = T::zero();
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { T::one() } else { T::zero() };
            worst = worst.max(abs(g[(i, j)] - Complex::new(target, T::zero())));
        }
    }
    worst
}

/// Closest unitary `W` in the polar decomposition `U = W P`.
pub fn polar_unitary<T: Real>(u: &CMatrix<T>) -> CMatrix<T> {
    let svd = SVD::new(u.clone(), true, true);
    let (left, right) = (svd.u.expect("left vectors"), svd.v_t.expect("right vectors"));
    left * right
}

fn eigenvalues4<T: Real>(m: &CMatrix<T>) -> [Complex<T>; 4] {
    let fixed: Matrix4<Complex<T>> = Matrix4::from_fn(|i, j| m[(i, j)]);
    let ev = Schur::new(fixed).eigenvalues().expect("complex Schur form yields eigenvalues");
    [ev[0], ev[1], ev[2], ev[3]]
}

/// Weyl-chamber coordinates `(c1, c2, c3)` in radians with
/// `π ≥ c1 ≥ c2 ≥ c3 ≥ 0`, `c1 + c2 ≤ π`, and `c1 ≤ π/2` whenever `c3 = 0`.
///
/// Non-unitary inputs are replaced by their polar unitary factor and the
/// result is marked unreliable when the deviation exceeds
/// [`UNITARITY_TOLERANCE`].
pub fn weyl_coordinates<T: Real>(u: &CMatrix<T>) -> WeylCoordinates<T> {
    let reliable = unitarity_deviation(u) <= T::lit(UNITARITY_TOLERANCE);
    let w = polar_unitary(u);
    let det = w.determinant();
    let w = &w * cis(-arg(det) / T::lit(4.0));
    let ub = bell_transform(&w);
    let m = ub.transpose() * &ub;
    // eigenphases of M are 2·(±c1 ± c2 ± c3)/2-type combinations; work in
    // units of π where the chamber algebra is integer-valued
    let pi = std::f64::consts::PI;
    let mut s: Vec<f64> = eigenvalues4(&m)
        .iter()
        .map(|z| {
            let mut two_s = arg(*z).as_f64() / pi;
            if two_s <= -0.5 {
                two_s += 2.0;
            }
            two_s / 2.0
        })
        .collect();
    s.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenphases"));
    let n = s.iter().sum::<f64>().round() as i64;
    let n = n.clamp(0, 4) as usize;
    for x in s.iter_mut().take(n) {
        *x -= 1.0;
    }
    s.rotate_left(n);
    let (mut c1, c2, mut c3) = (s[0] + s[1], s[0] + s[2], s[1] + s[2]);
    if c3 < 0.0 {
        c1 = 1.0 - c1;
        c3 = -c3;
    }
    // on the base plane (c1, c2, 0) and (π − c1, c2, 0) are the same class
    if c3 < 1e-10 && c1 > 0.5 {
        c1 = 1.0 - c1;
    }
    let to_rad = |x: f64| T::lit((x + 0.0) * pi);
    WeylCoordinates { c1: to_rad(c1), c2: to_rad(c2), c3: to_rad(c3), reliable }
}

/// Membership of the Weyl point in the perfect-entangler polyhedron:
/// `c1 + c2 ≥ π/2`, `c1 − c2 ≤ π/2`, `c2 + c3 ≤ π/2`.
pub fn in_pe_polyhedron<T: Real>(w: &WeylCoordinates<T>) -> bool {
    let half_pi = T::frac_pi_2();
    let eps = T::lit(PE_EPS);
    w.c1 + w.c2 >= half_pi - eps && w.c1 - w.c2 <= half_pi + eps && w.c2 + w.c3 <= half_pi + eps
}

pub fn is_perfect_entangler<T: Real>(u: &CMatrix<T>) -> bool {
    in_pe_polyhedron(&weyl_coordinates(u))
}

/// `Δ_U = 1 − Tr[U†U]/4`.
pub fn unitarity_penalty<T: Real>(u: &CMatrix<T>) -> T {
    let frob = u.iter().fold(T::zero(), |s, z| s + z.norm_sqr());
    T::one() - frob / T::lit(4.0)
}

/// Distance term `|g3 √(g1² + g2²) − g1|`, zero inside the polyhedron.
pub fn pe_distance<T: Real>(u: &CMatrix<T>) -> T {
    if is_perfect_entangler(u) {
        return T::zero();
    }
    let g = local_invariants(u);
    (g.g3 * (g.g1 * g.g1 + g.g2 * g.g2).sqrt() - g.g1).abs()
}

/// `J_PE = (1 − w_U) d + w_U Δ_U`.
pub fn j_pe<T: Real>(u: &CMatrix<T>, w: &MetricWeights<T>) -> T {
    (T::one() - w.w_u) * pe_distance(u) + w.w_u * unitarity_penalty(u)
}

/// `S = 1 − |Tr[U0† U1]|² / 16`.
pub fn similarity<T: Real>(blocks: &GateBlocks<T>) -> T {
    let tr = blocks
        .u0
        .iter()
        .zip(blocks.u1.iter())
        .fold(Complex::default(), |s: Complex<T>, (a, b)| s + a.conj() * b);
    T::one() - tr.norm_sqr() / T::lit(16.0)
}

/// `J = J_PE(U0) + J_PE(U1) + w_S S` with its components.
pub fn combined_j<T: Real>(blocks: &GateBlocks<T>, w: &MetricWeights<T>) -> JBreakdown<T> {
    let j_pe0 = j_pe(&blocks.u0, w);
    let j_pe1 = j_pe(&blocks.u1, w);
    let ws_s = w.w_s * similarity(blocks);
    JBreakdown { j: j_pe0 + j_pe1 + ws_s, j_pe0, j_pe1, ws_s }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates;
    use crate::linalg::max_abs_diff;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    fn assert_invariants(u: CMatrix<f64>, expect: (f64, f64, f64)) {
        let g = local_invariants(&u);
        assert!(close(g.g1, expect.0) && close(g.g2, expect.1) && close(g.g3, expect.2), "{g:?}");
    }

    #[test]
    fn magic_basis_is_unitary() {
        let q = magic_basis::<f64>();
        assert!(max_abs_diff(&(q.adjoint() * &q), &gates::identity()) < 1e-15);
        assert!(max_abs_diff(&bell_transform(&gates::identity::<f64>()), &gates::identity()) < 1e-15);
    }

    #[test]
    fn named_gate_invariants() {
        assert_invariants(gates::identity(), (1.0, 0.0, 3.0));
        assert_invariants(gates::cnot(), (0.0, 0.0, 1.0));
        assert_invariants(gates::cz(), (0.0, 0.0, 1.0));
        assert_invariants(gates::iswap(), (0.0, 0.0, -1.0));
        assert_invariants(gates::swap(), (-1.0, 0.0, -3.0));
    }

    #[test]
    fn cnot_m_has_eigenphases_plus_minus_i() {
        let u = remove_determinant_phase(&gates::cnot::<f64>());
        let ub = bell_transform(&u);
        let m = ub.transpose() * &ub;
        let mut ev = eigenvalues4(&m).map(|z| z.im);
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // {i, i, −i, −i} up to a global sign
        for (e, x) in ev.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
            assert!((e - x).abs() < 1e-12, "{ev:?}");
        }
    }

    fn assert_weyl(u: CMatrix<f64>, expect: (f64, f64, f64)) {
        let w = weyl_coordinates(&u);
        assert!(w.reliable);
        assert!(
            (w.c1 - expect.0).abs() < 1e-9 && (w.c2 - expect.1).abs() < 1e-9 && (w.c3 - expect.2).abs() < 1e-9,
            "{w:?} vs {expect:?}"
        );
    }

    #[test]
    fn named_gate_weyl_coordinates() {
        assert_weyl(gates::identity(), (0.0, 0.0, 0.0));
        assert_weyl(gates::cnot(), (FRAC_PI_2, 0.0, 0.0));
        assert_weyl(gates::cz(), (FRAC_PI_2, 0.0, 0.0));
        assert_weyl(gates::sqrt_iswap(), (FRAC_PI_4, FRAC_PI_4, 0.0));
        assert_weyl(gates::iswap(), (FRAC_PI_2, FRAC_PI_2, 0.0));
        assert_weyl(gates::swap(), (FRAC_PI_2, FRAC_PI_2, FRAC_PI_2));
    }

    #[test]
    fn weyl_coordinates_ignore_global_phase() {
        for k in 0..16 {
            let phase = cis(k as f64 * FRAC_PI_4 / 2.0);
            assert_weyl(gates::cnot::<f64>() * phase, (FRAC_PI_2, 0.0, 0.0));
            assert_weyl(gates::sqrt_iswap::<f64>() * phase, (FRAC_PI_4, FRAC_PI_4, 0.0));
        }
    }

    #[test]
    fn canonical_gates_round_trip() {
        for &(c1, c2, c3) in &[(0.3, 0.2, 0.1), (1.2, 0.4, 0.05), (0.5, 0.3, 0.0), (FRAC_PI_2, 0.7, 0.2), (2.5, 0.5, 0.3)] {
            assert_weyl(gates::canonical(c1, c2, c3), (c1, c2, c3));
        }
    }

    #[test]
    fn polyhedron_membership() {
        assert!(is_perfect_entangler(&gates::cnot::<f64>()));
        assert!(is_perfect_entangler(&gates::sqrt_iswap::<f64>()));
        assert!(is_perfect_entangler(&gates::iswap::<f64>()));
        assert!(!is_perfect_entangler(&gates::identity::<f64>()));
        assert!(!is_perfect_entangler(&gates::swap::<f64>()));
        // CPHASE(φ) sits at (φ/2, 0, 0)
        assert!(!is_perfect_entangler(&gates::cphase::<f64>(FRAC_PI_2 - 1e-3)));
        assert!(is_perfect_entangler(&gates::cphase::<f64>(std::f64::consts::PI)));
    }

    #[test]
    fn j_pe_examples() {
        let w = MetricWeights::default();
        assert!(j_pe(&gates::cnot::<f64>(), &w).abs() < 1e-12);
        assert!((j_pe(&gates::identity::<f64>(), &w) - 0.4).abs() < 1e-12);
        let leaky = gates::cnot::<f64>() * Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        assert!((unitarity_penalty(&leaky) - 0.5).abs() < 1e-12);
        let half = gates::identity::<f64>() * Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        assert!((w.w_u * unitarity_penalty(&half) - 0.4).abs() < 1e-12);
        // SWAP: the raw expression g3·|g1| − g1 = −3 + 1 is negative outside
        let d = pe_distance(&gates::swap::<f64>());
        assert!((d - 2.0).abs() < 1e-12);
    }

    #[test]
    fn similarity_examples() {
        let b = GateBlocks::new(gates::cnot::<f64>(), gates::cnot(), 0.0);
        assert!(similarity(&b).abs() < 1e-15);
        let b = GateBlocks::new(gates::cnot::<f64>(), gates::cnot::<f64>() * cis(1.3), 0.0);
        assert!(similarity(&b).abs() < 1e-15);
        let b = GateBlocks::new(gates::identity::<f64>(), gates::cz(), 0.0);
        assert!((similarity(&b) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn combined_j_examples() {
        let w = MetricWeights::default();
        let j = combined_j(&GateBlocks::new(gates::cnot::<f64>(), gates::cnot::<f64>() * cis(0.4), 0.0), &w);
        assert!(j.j.abs() < 1e-12);
        let (a, b) = (gates::cnot::<f64>(), gates::iswap::<f64>());
        let tr = (a.adjoint() * &b).trace();
        let j = combined_j(&GateBlocks::new(a, b, 0.0), &w);
        assert!(j.j_pe0.abs() < 1e-12 && j.j_pe1.abs() < 1e-12);
        assert!((j.ws_s - 0.5 * (1.0 - tr.norm_sqr() / 16.0)).abs() < 1e-12);
        assert_eq!(j.j, j.j_pe0 + j.j_pe1 + j.ws_s);
    }

    #[test]
    fn extraction_from_identity() {
        let basis = Basis::new([3, 3, 3, 2]);
        let columns = crate::propagation::default_columns(&[]);
        let mut v = CMatrix::zeros(basis.dim(), columns.len());
        for (c, occ) in columns.iter().enumerate() {
            v[(basis.index(occ).unwrap(), c)] = Complex::new(1.0, 0.0);
        }
        let b = extract_blocks(&v, &columns, &basis, 0.0).unwrap();
        assert_eq!(b.u0, gates::identity());
        assert_eq!(b.u1, gates::identity());

        // move |011⟩ out of the logical space
        let c = columns.iter().position(|o| *o == [0, 1, 1, 0]).unwrap();
        v[(basis.index(&[0, 1, 1, 0]).unwrap(), c)] = Complex::new(0.6, 0.0);
        v[(basis.index(&[0, 1, 2, 0]).unwrap(), c)] = Complex::new(0.8, 0.0);
        let b = extract_blocks(&v, &columns, &basis, 0.0).unwrap();
        let col = b.u1.column(block_index(0, 1)).iter().map(|z| z.norm_sqr()).sum::<f64>();
        assert!((col - 0.36).abs() < 1e-15);

        let err = extract_blocks(&v, &columns[..7], &basis, 0.0).unwrap_err();
        assert_eq!(err, Error::MissingColumn([1, 1, 1, 0]));
    }

    #[test]
    fn single_precision_invariants() {
        let g = local_invariants(&gates::cnot::<f32>());
        assert!(g.g1.abs() < 1e-5 && (g.g3 - 1.0).abs() < 1e-5);
    }
}
