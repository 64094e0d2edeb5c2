//! Three fixed-frequency transmons coupled through a flux-tunable transmon.
//!
//! The model is the Kerr-oscillator Hamiltonian
//!
//! ```text
//! H = ω_c(t) b†b − (α_c/2) b†b†bb
//!   + Σ_j [ ω_j a_j†a_j − (α_j/2) a_j†a_j†a_j a_j ]
//!   + Σ_j g_j (b + b†)(a_j + a_j†)
//! ```
//!
//! with no rotating-wave approximation on the qubit–coupler term. Subsystems
//! are ordered `(q1, q2, q3, coupler)` and flattened row-major, so the coupler
//! occupation varies fastest.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{invalid, Error, Result};
use crate::linalg::Csr;
use crate::num::{CMatrix, CVector, Real};

/// Number of subsystems: three qubits and the coupler.
pub const SUBSYSTEMS: usize = 4;
/// Subsystem index of the coupler.
pub const COUPLER: usize = 3;
/// Default cap on the truncated Hilbert-space dimension.
pub const DEFAULT_DIMENSION_CAP: usize = 4096;

/// Occupation numbers `(n1, n2, n3, n_tc)`.
pub type Occupations = [usize; SUBSYSTEMS];

/// A fixed-frequency transmon. Frequencies in rad/ns.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransmonSpec<T> {
    pub frequency: T,
    pub anharmonicity: T,
    /// Coupling `g_j` to the tunable coupler.
    pub coupling: T,
    pub levels: usize,
}

impl<T: Real> TransmonSpec<T> {
    pub fn new(frequency: T, anharmonicity: T, coupling: T, levels: usize) -> Result<Self> {
        let spec = Self { frequency, anharmonicity, coupling, levels };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels < 2 {
            return Err(invalid("levels", format!("need at least 2, got {}", self.levels)));
        }
        if !(self.frequency > T::zero()) {
            return Err(invalid("frequency", format!("must be positive, got {}", self.frequency)));
        }
        if !(self.anharmonicity >= T::zero()) {
            return Err(invalid(
                "anharmonicity",
                format!("must be non-negative, got {}", self.anharmonicity),
            ));
        }
        if !(self.coupling >= T::zero()) {
            return Err(invalid("coupling", format!("must be non-negative, got {}", self.coupling)));
        }
        Ok(())
    }
}

/// The flux-tunable coupler transmon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplerSpec<T> {
    /// Sweet-spot frequency `ω_c^max` (rad/ns).
    pub max_frequency: T,
    pub anharmonicity: T,
    pub levels: usize,
}

impl<T: Real> CouplerSpec<T> {
    pub fn new(max_frequency: T, anharmonicity: T, levels: usize) -> Result<Self> {
        let spec = Self { max_frequency, anharmonicity, levels };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels < 2 {
            return Err(invalid("levels", format!("need at least 2, got {}", self.levels)));
        }
        if !(self.max_frequency > T::zero()) {
            return Err(invalid(
                "max_frequency",
                format!("must be positive, got {}", self.max_frequency),
            ));
        }
        if !self.anharmonicity.is_finite() {
            return Err(invalid("anharmonicity", "must be finite"));
        }
        Ok(())
    }
}

/// Static parameters of the whole device.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeviceSpec<T> {
    pub qubits: [TransmonSpec<T>; 3],
    pub coupler: CouplerSpec<T>,
}

impl<T: Real> DeviceSpec<T> {
    pub fn new(qubits: [TransmonSpec<T>; 3], coupler: CouplerSpec<T>) -> Result<Self> {
        let spec = Self { qubits, coupler };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for q in &self.qubits {
            q.validate()?;
        }
        self.coupler.validate()
    }

    pub fn levels(&self) -> [usize; SUBSYSTEMS] {
        [
            self.qubits[0].levels,
            self.qubits[1].levels,
            self.qubits[2].levels,
            self.coupler.levels,
        ]
    }

    pub fn basis(&self) -> Basis {
        Basis::new(self.levels())
    }

    pub fn dimension(&self) -> usize {
        self.levels().iter().product()
    }

    /// Copy with the spectator (qubit 3) moved to `frequency`/`anharmonicity`.
    pub fn with_spectator(&self, frequency: T, anharmonicity: T) -> Self {
        let mut out = *self;
        out.qubits[2].frequency = frequency;
        out.qubits[2].anharmonicity = anharmonicity;
        out
    }

    /// Copy with the spectator's coupling switched off.
    pub fn decoupled_spectator(&self) -> Self {
        let mut out = *self;
        out.qubits[2].coupling = T::zero();
        out
    }

    pub fn with_levels(&self, levels: [usize; SUBSYSTEMS]) -> Self {
        let mut out = *self;
        for (q, &l) in out.qubits.iter_mut().zip(&levels[..3]) {
            q.levels = l;
        }
        out.coupler.levels = levels[COUPLER];
        out
    }

    /// Copy with every truncation raised by `extra` levels.
    pub fn with_extra_levels(&self, extra: usize) -> Self {
        let l = self.levels();
        self.with_levels([l[0] + extra, l[1] + extra, l[2] + extra, l[3] + extra])
    }

    /// Bare (uncoupled) energy of a basis state with the coupler at `coupler_frequency`.
    pub fn bare_energy(&self, occ: &Occupations, coupler_frequency: T) -> T {
        let mut e = ladder_energy(coupler_frequency, self.coupler.anharmonicity, occ[COUPLER]);
        for (q, &n) in self.qubits.iter().zip(&occ[..3]) {
            e += ladder_energy(q.frequency, q.anharmonicity, n);
        }
        e
    }
}

/// `ω n − (α/2) n (n − 1)`, the diagonal of a Kerr oscillator.
pub fn ladder_energy<T: Real>(frequency: T, anharmonicity: T, n: usize) -> T {
    let nf = T::from_usize_lossy(n);
    frequency * nf - anharmonicity * T::lit(0.5) * nf * (nf - T::one()).max(T::zero())
}

/// Row-major product basis over `(q1, q2, q3, coupler)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Basis {
    dims: [usize; SUBSYSTEMS],
}

/// A basis state given both as occupations and as flat index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BasisIndex {
    pub occupations: Occupations,
    pub flat: usize,
}

impl Basis {
    pub fn new(dims: [usize; SUBSYSTEMS]) -> Self {
        Self { dims }
    }

    pub fn dims(&self) -> [usize; SUBSYSTEMS] {
        self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn index(&self, occ: &Occupations) -> Result<usize> {
        let mut flat = 0;
        for (k, (&n, &d)) in occ.iter().zip(&self.dims).enumerate() {
            if n >= d {
                return Err(Error::OccupationOutOfRange { subsystem: k, value: n, levels: d });
            }
            flat = flat * d + n;
        }
        Ok(flat)
    }

    pub fn occupations(&self, flat: usize) -> Result<Occupations> {
        let dim = self.dim();
        if flat >= dim {
            return Err(Error::IndexOutOfRange { index: flat, dim });
        }
        let mut occ = [0; SUBSYSTEMS];
        let mut rest = flat;
        for k in (0..SUBSYSTEMS).rev() {
            occ[k] = rest % self.dims[k];
            rest /= self.dims[k];
        }
        Ok(occ)
    }

    pub fn basis_index(&self, occ: &Occupations) -> Result<BasisIndex> {
        Ok(BasisIndex { occupations: *occ, flat: self.index(occ)? })
    }

    /// All occupation tuples in flat-index order.
    pub fn states(&self) -> impl Iterator<Item = Occupations> + '_ {
        (0..self.dim()).map(move |i| self.occupations(i).expect("index within basis"))
    }

    /// The 8 logical states `|n1 n2 n3, 0⟩`, `n_i ∈ {0, 1}`, ordered `n1 n2 n3`.
    pub fn logical_states() -> [Occupations; 8] {
        let mut out = [[0; SUBSYSTEMS]; 8];
        for (k, occ) in out.iter_mut().enumerate() {
            *occ = [(k >> 2) & 1, (k >> 1) & 1, k & 1, 0];
        }
        out
    }
}

/// Canonical basis vector for `occ`.
pub fn bare_state<T: Real>(spec: &DeviceSpec<T>, occ: &Occupations) -> Result<CVector<T>> {
    let basis = spec.basis();
    let idx = basis.index(occ)?;
    let mut v = DVector::from_element(basis.dim(), Complex::default());
    v[idx] = Complex::new(T::one(), T::zero());
    Ok(v)
}

/// All operators of the device Hamiltonian on the truncated product space.
///
/// `H(ω_c) = h_static + ω_c · h_drive`, where `h_drive = b†b` and `h_static`
/// contains every other term including `h_qc`.
#[derive(Clone, Debug)]
pub struct OperatorSet<T: Real> {
    spec: DeviceSpec<T>,
    basis: Basis,
    h_static: CMatrix<T>,
    h_qc: CMatrix<T>,
    drive_diagonal: Vec<T>,
    static_sparse: Csr<T>,
}

impl<T: Real> OperatorSet<T> {
    pub fn spec(&self) -> &DeviceSpec<T> {
        &self.spec
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// Every term except `ω_c(t) b†b`.
    pub fn h_static(&self) -> &CMatrix<T> {
        &self.h_static
    }

    /// Qubit–coupler interaction `Σ_j g_j (b + b†)(a_j + a_j†)`.
    pub fn h_qc(&self) -> &CMatrix<T> {
        &self.h_qc
    }

    /// Coupler number operator `b†b`.
    pub fn h_drive(&self) -> CMatrix<T> {
        diagonal_matrix(&self.drive_diagonal)
    }

    /// Diagonal of `b†b` in the bare basis.
    pub fn drive_diagonal(&self) -> &[T] {
        &self.drive_diagonal
    }

    pub fn static_sparse(&self) -> &Csr<T> {
        &self.static_sparse
    }

    /// `H(ω_c) = h_static + ω_c b†b`.
    pub fn hamiltonian_at(&self, coupler_frequency: T) -> CMatrix<T> {
        let mut h = self.h_static.clone();
        for (i, &n) in self.drive_diagonal.iter().enumerate() {
            h[(i, i)] += Complex::new(coupler_frequency * n, T::zero());
        }
        h
    }

    /// Annihilation operator of `subsystem` (0..3 qubits, 3 coupler).
    pub fn lowering(&self, subsystem: usize) -> CMatrix<T> {
        lowering_operator(&self.basis, subsystem)
    }

    /// Number operator of `subsystem`.
    pub fn number(&self, subsystem: usize) -> CMatrix<T> {
        let diag: Vec<T> = self
            .basis
            .states()
            .map(|occ| T::from_usize_lossy(occ[subsystem]))
            .collect();
        diagonal_matrix(&diag)
    }

    /// Kerr term `−(α/2) a†a†aa` of `subsystem`.
    pub fn kerr(&self, subsystem: usize) -> CMatrix<T> {
        let alpha = if subsystem == COUPLER {
            self.spec.coupler.anharmonicity
        } else {
            self.spec.qubits[subsystem].anharmonicity
        };
        let diag: Vec<T> = self
            .basis
            .states()
            .map(|occ| ladder_energy(T::zero(), alpha, occ[subsystem]))
            .collect();
        diagonal_matrix(&diag)
    }
}

fn diagonal_matrix<T: Real>(diag: &[T]) -> CMatrix<T> {
    let n = diag.len();
    let mut m = DMatrix::from_element(n, n, Complex::default());
    for (i, &d) in diag.iter().enumerate() {
        m[(i, i)] = Complex::new(d, T::zero());
    }
    m
}

fn lowering_operator<T: Real>(basis: &Basis, subsystem: usize) -> CMatrix<T> {
    let dim = basis.dim();
    let mut a = DMatrix::from_element(dim, dim, Complex::default());
    for (col, occ) in basis.states().enumerate() {
        let n = occ[subsystem];
        if n == 0 {
            continue;
        }
        let mut lower = occ;
        lower[subsystem] -= 1;
        let row = basis.index(&lower).expect("lowered state within truncation");
        a[(row, col)] = Complex::new(T::from_usize_lossy(n).sqrt(), T::zero());
    }
    a
}

/// Builds the operator set with the default dimension cap.
pub fn build_operators<T: Real>(spec: &DeviceSpec<T>) -> Result<OperatorSet<T>> {
    build_operators_capped(spec, DEFAULT_DIMENSION_CAP)
}

pub fn build_operators_capped<T: Real>(spec: &DeviceSpec<T>, cap: usize) -> Result<OperatorSet<T>> {
    spec.validate()?;
    let basis = spec.basis();
    let dim = basis.dim();
    if dim > cap {
        return Err(Error::DimensionTooLarge { dim, cap, levels: spec.levels() });
    }

    let mut h_qc = DMatrix::from_element(dim, dim, Complex::default());
    let mut h_static = DMatrix::from_element(dim, dim, Complex::default());
    let mut drive_diagonal = Vec::with_capacity(dim);

    for (col, occ) in basis.states().enumerate() {
        // bare energy without the ω_c b†b term
        h_static[(col, col)] = Complex::new(spec.bare_energy(&occ, T::zero()), T::zero());
        drive_diagonal.push(T::from_usize_lossy(occ[COUPLER]));

        // g_j (b + b†)(a_j + a_j†): each factor moves one occupation by ±1
        let nc = occ[COUPLER];
        for (j, q) in spec.qubits.iter().enumerate() {
            if q.coupling == T::zero() {
                continue;
            }
            for dc in [-1i64, 1] {
                let nc2 = nc as i64 + dc;
                if nc2 < 0 || nc2 >= spec.coupler.levels as i64 {
                    continue;
                }
                let amp_c = T::from_usize_lossy(nc.max(nc2 as usize)).sqrt();
                for dq in [-1i64, 1] {
                    let nq2 = occ[j] as i64 + dq;
                    if nq2 < 0 || nq2 >= q.levels as i64 {
                        continue;
                    }
                    let amp_q = T::from_usize_lossy(occ[j].max(nq2 as usize)).sqrt();
                    let mut target = occ;
                    target[COUPLER] = nc2 as usize;
                    target[j] = nq2 as usize;
                    let row = basis.index(&target).expect("target within truncation");
                    h_qc[(row, col)] += Complex::new(q.coupling * amp_c * amp_q, T::zero());
                }
            }
        }
    }
    h_static += &h_qc;
    let static_sparse = Csr::from_dense(&h_static, T::zero());

    Ok(OperatorSet { spec: *spec, basis, h_static, h_qc, drive_diagonal, static_sparse })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermiticity_error, max_abs_diff};
    use crate::num::ghz;
    use crate::presets;

    fn table_i(levels: [usize; 4]) -> DeviceSpec<f64> {
        presets::cz_ganzhorn::<f64>(ghz(4.5), ghz(0.1)).device.with_levels(levels)
    }

    #[test]
    fn operators_are_hermitian() {
        let ops = build_operators(&table_i([4, 4, 4, 3])).unwrap();
        assert!(hermiticity_error(ops.h_static()) < 1e-12);
        assert!(hermiticity_error(ops.h_qc()) < 1e-12);
        assert!(hermiticity_error(&ops.h_drive()) < 1e-12);
        assert_eq!(ops.dim(), 192);
    }

    #[test]
    fn zero_coupling_gives_zero_interaction_and_diagonal_static_part() {
        let mut spec = table_i([3, 3, 3, 3]);
        for q in &mut spec.qubits {
            q.coupling = 0.0;
        }
        let ops = build_operators(&spec).unwrap();
        assert!(ops.h_qc().iter().all(|z| z.norm() == 0.0));
        let h = ops.h_static();
        for i in 0..h.nrows() {
            for j in 0..h.ncols() {
                if i != j {
                    assert_eq!(h[(i, j)].norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn kerr_terms_vanish_on_two_levels() {
        let ops = build_operators(&table_i([2, 2, 2, 2])).unwrap();
        for k in 0..SUBSYSTEMS {
            assert!(ops.kerr(k).iter().all(|z| z.norm() == 0.0));
        }
    }

    #[test]
    fn diagonal_assembly_matches_ladder_operator_products() {
        let spec = table_i([3, 3, 3, 3]);
        let ops = build_operators(&spec).unwrap();
        let mut h = CMatrix::<f64>::zeros(ops.dim(), ops.dim());
        let b = ops.lowering(COUPLER);
        let bd = b.adjoint();
        for (j, q) in spec.qubits.iter().enumerate() {
            let a = ops.lowering(j);
            let ad = a.adjoint();
            h += &ad * &a * Complex::new(q.frequency, 0.0);
            h -= &ad * &ad * &a * &a * Complex::new(q.anharmonicity / 2.0, 0.0);
            h += (&b + &bd) * (&a + &ad) * Complex::new(q.coupling, 0.0);
        }
        h -= &bd * &bd * &b * &b * Complex::new(spec.coupler.anharmonicity / 2.0, 0.0);
        assert!(max_abs_diff(&h, ops.h_static()) < 1e-12);
        assert!(max_abs_diff(&(&bd * &b), &ops.h_drive()) < 1e-12);
    }

    #[test]
    fn bare_ladder_spacing_shrinks_by_anharmonicity() {
        let spec = table_i([4, 4, 4, 3]);
        for (j, q) in spec.qubits.iter().enumerate() {
            for n in 0..3 {
                let mut lo = [0; 4];
                lo[j] = n;
                let mut hi = lo;
                hi[j] = n + 1;
                let gap = spec.bare_energy(&hi, 0.0) - spec.bare_energy(&lo, 0.0);
                assert!((gap - (q.frequency - q.anharmonicity * n as f64)).abs() < 1e-12);
            }
        }
        let wc = ghz::<f64>(7.0);
        for n in 0..2 {
            let gap = spec.bare_energy(&[0, 0, 0, n + 1], wc) - spec.bare_energy(&[0, 0, 0, n], wc);
            assert!((gap - (wc - spec.coupler.anharmonicity * n as f64)).abs() < 1e-12);
        }
    }

    #[test]
    fn table_i_qubit1_energy_without_coupling() {
        let mut spec = table_i([4, 4, 4, 3]);
        for q in &mut spec.qubits {
            q.coupling = 0.0;
        }
        let ops = build_operators(&spec).unwrap();
        let idx = ops.basis().index(&[1, 0, 0, 0]).unwrap();
        let e = ops.h_static()[(idx, idx)].re;
        assert!((e - std::f64::consts::TAU * 5.089).abs() < 1e-12);
    }

    #[test]
    fn hamiltonian_is_affine_in_coupler_frequency() {
        let ops = build_operators(&table_i([3, 3, 3, 3])).unwrap();
        assert_eq!(ops.hamiltonian_at(0.0), *ops.h_static());
        let (w1, w2) = (40.0, 45.5);
        let diff = ops.hamiltonian_at(w1) - ops.hamiltonian_at(w2);
        let expect = ops.h_drive() * Complex::new(w1 - w2, 0.0);
        assert!(max_abs_diff(&diff, &expect) < 1e-12);
    }

    #[test]
    fn coupler_diagonal_in_two_subsystem_case() {
        // hand-built two-subsystem analogue: one qubit (2 levels) + coupler (2 levels)
        // H = ω_q n_q + ω_c n_c + g (b + b†)(a + a†) on |n_q n_c⟩ ordered 00, 01, 10, 11
        let (wq, wc, g) = (30.0, ghz::<f64>(7.0), 0.5);
        let hand = [
            [0.0, 0.0, 0.0, g],
            [0.0, wc, g, 0.0],
            [0.0, g, wq, 0.0],
            [g, 0.0, 0.0, wq + wc],
        ];
        let spec = presets::iswap_mckay::<f64>(ghz(4.8)).device;
        let mut spec = spec.with_levels([2, 2, 2, 2]);
        spec.qubits[0].frequency = wq;
        spec.qubits[0].coupling = g;
        spec.qubits[1].coupling = 0.0;
        spec.qubits[2].coupling = 0.0;
        let ops = build_operators(&spec).unwrap();
        let h = ops.hamiltonian_at(wc);
        let basis = ops.basis();
        for (r, &(nq, nc)) in [(0, 0), (0, 1), (1, 0), (1, 1)].iter().enumerate() {
            for (c, &(mq, mc)) in [(0, 0), (0, 1), (1, 0), (1, 1)].iter().enumerate() {
                let i = basis.index(&[nq, 0, 0, nc]).unwrap();
                let j = basis.index(&[mq, 0, 0, mc]).unwrap();
                assert!((h[(i, j)].re - hand[r][c]).abs() < 1e-12, "({r},{c})");
            }
        }
        // the full spec's |000,1⟩ diagonal is exactly ω_c
        let full = build_operators(&presets::iswap_mckay::<f64>(ghz(4.8)).device).unwrap();
        let idx = full.basis().index(&[0, 0, 0, 1]).unwrap();
        assert!((full.hamiltonian_at(wc)[(idx, idx)].re - wc).abs() < 1e-12);
    }

    #[test]
    fn total_excitation_is_not_conserved_without_rwa() {
        let ops = build_operators(&table_i([3, 3, 3, 3])).unwrap();
        let mut n_total = CMatrix::<f64>::zeros(ops.dim(), ops.dim());
        for k in 0..SUBSYSTEMS {
            n_total += ops.number(k);
        }
        let h = ops.hamiltonian_at(ghz(7.0));
        let comm = &h * &n_total - &n_total * &h;
        assert!(comm.iter().any(|z| z.norm() > 1e-3));
    }

    #[test]
    fn dimension_cap_is_enforced() {
        match build_operators(&table_i([9, 8, 8, 8])) {
            Err(Error::DimensionTooLarge { dim, cap, .. }) => {
                assert_eq!(dim, 4608);
                assert_eq!(cap, DEFAULT_DIMENSION_CAP);
            }
            other => panic!("expected a sizing error, got {other:?}"),
        }
        let err = build_operators_capped(&table_i([4, 4, 4, 3]), 100).unwrap_err();
        assert!(err.to_string().contains("exceeds the cap"));
    }

    #[test]
    fn flat_index_matches_enumeration_order() {
        let basis = Basis::new([4, 4, 4, 3]);
        let mut flat = 0;
        for n1 in 0..4 {
            for n2 in 0..4 {
                for n3 in 0..4 {
                    for nc in 0..3 {
                        let occ = [n1, n2, n3, nc];
                        assert_eq!(basis.index(&occ).unwrap(), flat);
                        assert_eq!(basis.occupations(flat).unwrap(), occ);
                        flat += 1;
                    }
                }
            }
        }
        assert_eq!(basis.index(&[1, 1, 0, 0]).unwrap(), 60);
        assert!(basis.index(&[0, 4, 0, 0]).is_err());
        assert!(basis.occupations(192).is_err());
    }

    #[test]
    fn bare_state_is_canonical_vector() {
        let spec = table_i([4, 4, 4, 3]);
        let v = bare_state(&spec, &[0, 0, 0, 0]).unwrap();
        assert_eq!(v[0].re, 1.0);
        assert_eq!(v.iter().filter(|z| z.norm() > 0.0).count(), 1);
        assert!(matches!(
            bare_state(&spec, &[0, 0, 0, 3]),
            Err(Error::OccupationOutOfRange { subsystem: 3, value: 3, levels: 3 })
        ));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(TransmonSpec::new(1.0, 0.1, 0.1, 1).is_err());
        assert!(TransmonSpec::new(-1.0, 0.1, 0.1, 3).is_err());
        assert!(TransmonSpec::new(1.0, -0.1, 0.1, 3).is_err());
        assert!(TransmonSpec::new(1.0, 0.1, -0.1, 3).is_err());
        assert!(CouplerSpec::new(0.0, 0.1, 3).is_err());
        assert!(CouplerSpec::new(1.0, 0.1, 1).is_err());
    }
}
