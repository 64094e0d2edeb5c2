//! Attribution of spectrum peaks to static and drive-induced resonances.
//!
//! The drive-induced measure is
//!
//! ```text
//! M⁽ⁿ⁾(ω_r) = 1/√(2πσ²) Σ_{i ∈ M} Σ_j (Xⁿ)_ij exp(−(ω_r − ω_ij)² / 2σ²)
//! ```
//!
//! with `ω_ij = |Ẽ_i − Ẽ_j|` the transition frequencies of the undriven
//! Hamiltonian at a frozen coupler frequency and `X` the binary matrix of
//! transitions allowed by the qubit–coupler interaction.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::device::{build_operators, Basis, DeviceSpec, Occupations, OperatorSet, COUPLER};
use crate::error::{invalid, Result};
use crate::num::Real;

/// Overlap below which a bare label is considered unreliable.
pub const LABEL_OVERLAP_THRESHOLD: f64 = 0.5;

/// Reference multiples `k` of `ω_φ` per order `n`.
pub const DEFAULT_ORDERS: [(usize, usize); 2] = [(1, 4), (2, 6)];

/// How the binary transition matrix `X` is built.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CouplingRule<T> {
    /// `X_ij = 1` when `H_QC` connects the bare labels of `i` and `j`.
    BareLabels,
    /// `X_ij = 1` when `|⟨i|H_QC|j⟩| > threshold · max|H_QC|` in the labelled
    /// eigenbasis.
    Dressed { relative_threshold: T },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResonanceConfig<T> {
    /// Gaussian width `σ` (rad/ns).
    pub sigma: T,
    /// Coupler frequency of the undriven Hamiltonian (rad/ns).
    pub frozen_coupler: T,
    /// Drive frequency `ω_φ`; reference frequencies are `k ω_φ`.
    pub drive_frequency: T,
    /// States `i` summed over; transitions start here.
    pub m_states: Vec<Occupations>,
    pub rule: CouplingRule<T>,
}

impl<T: Real> ResonanceConfig<T> {
    /// `σ/2π = 4 MHz`, the logical states plus `protocol_states`.
    pub fn new(frozen_coupler: T, drive_frequency: T, protocol_states: &[Occupations]) -> Self {
        Self {
            sigma: crate::num::mhz(4.0),
            frozen_coupler,
            drive_frequency,
            m_states: crate::propagation::default_columns(protocol_states),
            rule: CouplingRule::BareLabels,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > T::zero()) {
            return Err(invalid("sigma", "must be positive"));
        }
        if !(self.frozen_coupler >= T::zero()) {
            return Err(invalid("frozen_coupler", "must be non-negative"));
        }
        if self.m_states.is_empty() {
            return Err(invalid("m_states", "must not be empty"));
        }
        Ok(())
    }
}

/// Eigensystem of a real symmetric Hamiltonian, with each eigenvector
/// assigned to a bare state. Everything is indexed by bare label.
#[derive(Clone, Debug)]
pub struct EigenSpectrum<T: Real> {
    /// `energies[a]` is the eigenenergy of the state labelled by bare index `a`.
    pub energies: Vec<T>,
    /// Column `a` is the eigenvector labelled by bare index `a`.
    pub vectors: DMatrix<T>,
    /// Squared overlap of each eigenvector with its label.
    pub overlaps: Vec<T>,
}

impl<T: Real> EigenSpectrum<T> {
    /// True when some label has overlap below [`LABEL_OVERLAP_THRESHOLD`].
    pub fn flagged(&self) -> bool {
        self.overlaps.iter().any(|&o| o < T::lit(LABEL_OVERLAP_THRESHOLD))
    }

    /// `|Ẽ_a − Ẽ_b|`.
    pub fn transition(&self, a: usize, b: usize) -> T {
        (self.energies[a] - self.energies[b]).abs()
    }
}

/// Diagonalizes `h` and labels eigenvectors by a greedy maximal-overlap
/// bijection onto the canonical basis.
pub fn label_eigenstates<T: Real>(h: &DMatrix<T>) -> EigenSpectrum<T> {
    let n = h.nrows();
    let eig = SymmetricEigen::new(h.clone());
    let mut pairs: Vec<(T, usize, usize)> = Vec::with_capacity(n * n);
    for e in 0..n {
        for a in 0..n {
            let o = eig.eigenvectors[(a, e)];
            pairs.push((o * o, a, e));
        }
    }
    // descending overlap, then ascending indices for a deterministic order
    pairs.sort_by(|x, y| {
        y.0.partial_cmp(&x.0)
            .expect("finite overlaps")
            .then(x.1.cmp(&y.1))
            .then(x.2.cmp(&y.2))
    });
    let mut label_of = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    let mut overlaps = vec![T::zero(); n];
    let mut left = n;
    for (o, a, e) in pairs {
        if left == 0 {
            break;
        }
        if taken[a] || label_of[e] != usize::MAX {
            continue;
        }
        taken[a] = true;
        label_of[e] = a;
        overlaps[a] = o;
        left -= 1;
    }
    let mut energies = vec![T::zero(); n];
    let mut vectors = DMatrix::zeros(n, n);
    for e in 0..n {
        let a = label_of[e];
        energies[a] = eig.eigenvalues[e];
        // sign convention: positive component on the label
        let sign = if eig.eigenvectors[(a, e)] < T::zero() { -T::one() } else { T::one() };
        vectors.set_column(a, &(eig.eigenvectors.column(e) * sign));
    }
    EigenSpectrum { energies, vectors, overlaps }
}

fn real_part<T: Real>(m: &crate::num::CMatrix<T>) -> DMatrix<T> {
    m.map(|z| z.re)
}

/// Eigensystem of the undriven Hamiltonian at coupler frequency `omega_c`.
///
/// The Hamiltonian is real; each sector of its sparsity pattern is
/// diagonalized separately.
pub fn eigen_spectrum<T: Real>(ops: &OperatorSet<T>, omega_c: T) -> EigenSpectrum<T> {
    let n = ops.dim();
    let h = real_part(&ops.hamiltonian_at(omega_c));
    let mut energies = vec![T::zero(); n];
    let mut vectors = DMatrix::zeros(n, n);
    let mut overlaps = vec![T::zero(); n];
    for sector in ops.static_sparse().connected_blocks() {
        let sub = DMatrix::from_fn(sector.len(), sector.len(), |i, j| h[(sector[i], sector[j])]);
        let local = label_eigenstates(&sub);
        for (la, &a) in sector.iter().enumerate() {
            energies[a] = local.energies[la];
            overlaps[a] = local.overlaps[la];
            for (lb, &b) in sector.iter().enumerate() {
                vectors[(b, a)] = local.vectors[(lb, la)];
            }
        }
    }
    EigenSpectrum { energies, vectors, overlaps }
}

/// Binary transition matrix as adjacency lists, `X_ii = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingMatrix {
    pub adjacency: Vec<Vec<usize>>,
}

impl CouplingMatrix {
    pub fn dim(&self) -> usize {
        self.adjacency.len()
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].contains(&j)
    }

    /// Row `i` of `Xⁿ`: number of length-`n` paths from `i` to every `j`.
    pub fn path_counts(&self, i: usize, n: usize) -> Vec<u64> {
        let mut row = vec![0u64; self.dim()];
        row[i] = 1;
        for _ in 0..n {
            let mut next = vec![0u64; self.dim()];
            for (k, &c) in row.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                for &j in &self.adjacency[k] {
                    next[j] += c;
                }
            }
            row = next;
        }
        row
    }
}

pub fn coupling_matrix<T: Real>(
    ops: &OperatorSet<T>,
    eig: &EigenSpectrum<T>,
    rule: CouplingRule<T>,
) -> CouplingMatrix {
    let n = ops.dim();
    let hqc = real_part(ops.h_qc());
    let m = match rule {
        CouplingRule::BareLabels => hqc,
        CouplingRule::Dressed { .. } => eig.vectors.transpose() * &hqc * &eig.vectors,
    };
    let scale = m.iter().fold(T::zero(), |s, x| s.max(x.abs()));
    let threshold = match rule {
        CouplingRule::BareLabels => T::zero(),
        CouplingRule::Dressed { relative_threshold } => relative_threshold * scale,
    };
    let adjacency = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i && scale > T::zero() && m[(i, j)].abs() > threshold)
                .collect()
        })
        .collect();
    CouplingMatrix { adjacency }
}

/// `M⁽ⁿ⁾(ω_r)` for rows `m_rows` (bare indices of the M-state set).
pub fn resonance_measure<T: Real>(
    eig: &EigenSpectrum<T>,
    x: &CouplingMatrix,
    m_rows: &[usize],
    order: usize,
    omega_r: T,
    sigma: T,
) -> T {
    let two_pi = T::two_pi();
    let norm = T::one() / (two_pi * sigma * sigma).sqrt();
    let mut total = T::zero();
    for &i in m_rows {
        for (j, &count) in x.path_counts(i, order).iter().enumerate() {
            if count == 0 {
                continue;
            }
            let d = omega_r - eig.transition(i, j);
            total += T::from_usize_lossy(count as usize) * (-(d * d) / (T::lit(2.0) * sigma * sigma)).exp();
        }
    }
    norm * total
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResonanceRow<T> {
    /// `ω_3` (rad/ns).
    pub omega3: T,
    pub order: usize,
    /// Reference frequency `k ω_φ`.
    pub k: usize,
    pub value: T,
    /// Eigen-label assignment had an overlap below the threshold.
    pub flagged: bool,
}

/// All `M⁽ⁿ⁾(k ω_φ)` rows for one spectator frequency.
pub fn resonance_point<T: Real>(
    spec: &DeviceSpec<T>,
    cfg: &ResonanceConfig<T>,
    orders: &[(usize, usize)],
) -> Result<Vec<ResonanceRow<T>>> {
    let ops = build_operators(spec)?;
    let eig = eigen_spectrum(&ops, cfg.frozen_coupler);
    let x = coupling_matrix(&ops, &eig, cfg.rule);
    let basis = ops.basis();
    let rows = cfg.m_states.iter().map(|s| basis.index(s)).collect::<Result<Vec<_>>>()?;
    let flagged = rows.iter().any(|&i| eig.overlaps[i] < T::lit(LABEL_OVERLAP_THRESHOLD));
    let mut out = Vec::new();
    for &(order, kmax) in orders {
        for k in 1..=kmax {
            let omega_r = cfg.drive_frequency * T::from_usize_lossy(k);
            out.push(ResonanceRow {
                omega3: spec.qubits[2].frequency,
                order,
                k,
                value: resonance_measure(&eig, &x, &rows, order, omega_r, cfg.sigma),
                flagged,
            });
        }
    }
    Ok(out)
}

/// The resonance table over a spectator grid, ordered by `ω_3`, then `n`, then `k`.
pub fn resonance_scan<T: Real>(
    template: &DeviceSpec<T>,
    spectator_anharmonicity: T,
    grid: &[T],
    cfg: &ResonanceConfig<T>,
    jobs: usize,
) -> Result<Vec<ResonanceRow<T>>> {
    cfg.validate()?;
    let rows: Result<Vec<Vec<ResonanceRow<T>>>> = crate::spectrum::with_jobs(jobs, || {
        grid.par_iter()
            .map(|&w| resonance_point(&template.with_spectator(w, spectator_anharmonicity), cfg, &DEFAULT_ORDERS))
            .collect()
    })?;
    Ok(rows?.into_iter().flatten().collect())
}

/// Median of `values[i]` over the points with `j[i] < floor`.
pub fn baseline<T: Real>(values: &[T], j: &[T], floor: T) -> Option<T> {
    let mut low: Vec<T> = values
        .iter()
        .zip(j)
        .filter(|(_, &ji)| ji < floor)
        .map(|(&v, _)| v)
        .collect();
    if low.is_empty() {
        return None;
    }
    low.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = low.len();
    Some(if n % 2 == 1 { low[n / 2] } else { (low[n / 2 - 1] + low[n / 2]) / T::lit(2.0) })
}

/// A coincidence of two bare energies as the spectator frequency varies.
#[derive(Clone, Debug, PartialEq)]
pub struct StaticResonance<T> {
    /// `ω_3` (rad/ns) at which the energies coincide.
    pub omega3: T,
    /// Qubit occupations `(n1, n2, n3)` of the two states.
    pub states: ([usize; 3], [usize; 3]),
}

impl<T> StaticResonance<T> {
    pub fn label(&self) -> String {
        let f = |s: [usize; 3]| format!("|{}{}{}>", s[0], s[1], s[2]);
        format!("{}-{}", f(self.states.0), f(self.states.1))
    }
}

/// Coincidences `E_a(ω_3) = E_b(ω_3)` between bare states (coupler empty, at
/// most `max_excitations` qubit quanta) that differ by moving one quantum
/// between the spectator and qubit 1 or 2. Results inside `[lo, hi]`,
/// sorted by frequency.
pub fn static_resonances<T: Real>(
    spec: &DeviceSpec<T>,
    max_excitations: usize,
    lo: T,
    hi: T,
) -> Vec<StaticResonance<T>> {
    let levels = spec.levels();
    let mut out: Vec<StaticResonance<T>> = Vec::new();
    let basis = Basis::new(levels);
    for occ in basis.states() {
        if occ[COUPLER] != 0 || occ[0] + occ[1] + occ[2] > max_excitations || occ[2] == 0 {
            continue;
        }
        for j in 0..2 {
            if occ[j] + 1 >= levels[j] {
                continue;
            }
            // a: quantum on the spectator, b: moved to qubit j
            let a = occ;
            let mut b = occ;
            b[2] -= 1;
            b[j] += 1;
            // E_a − E_b = (ω3 − α3 (n3 − 1)) − (ω_j − α_j n_j)
            let q = &spec.qubits[j];
            let w3 = q.frequency - q.anharmonicity * T::from_usize_lossy(occ[j])
                + spec.qubits[2].anharmonicity * T::from_usize_lossy(occ[2] - 1);
            if w3 < lo || w3 > hi {
                continue;
            }
            let (sa, sb) = ([a[0], a[1], a[2]], [b[0], b[1], b[2]]);
            out.push(StaticResonance { omega3: w3, states: (sb, sa) });
        }
    }
    out.sort_by(|x, y| {
        x.omega3
            .partial_cmp(&y.omega3)
            .expect("finite frequencies")
            .then(x.states.cmp(&y.states))
    });
    out
}
