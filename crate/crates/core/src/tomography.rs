//! Emulation of the experimental protocol: gate reconstruction from state
//! tomograms and the spectator's relative phase.
//!
//! State tomography fixes every output state only up to its own phase. For
//! each spectator block the four logical basis states and the uniform
//! superposition `(|00⟩ + |01⟩ + |10⟩ + |11⟩)/2` are evolved; the basis
//! outputs give the columns of the block up to per-column phases, and
//! writing the fifth output as `Σ_j z_j c_j` fixes the relative phases
//! `arg z_j`. The global phase stays free. The emulation is noiseless: a
//! tomogram is the exact projection of the evolved state onto the logical
//! block.

use log::warn;
use nalgebra::DVector;
use num_complex::Complex;
use rayon::prelude::*;

use crate::device::{build_operators, DeviceSpec, OperatorSet};
use crate::error::{invalid, Error, Result};
use crate::flux::FluxPulse;
use crate::metrics::{combined_j, GateBlocks, MetricWeights};
use crate::num::{abs, cis, CMatrix, CVector, Real};
use crate::propagation::{propagate_schedule, PropagationConfig};
use crate::spectrum::{snap_to_checkpoint, with_jobs, EvalMode, PointStatus, SpectrumPoint, SweepConfig};

/// Prepared states per block: four basis states and one superposition.
pub const PREPARED_STATES: usize = 5;

/// Smallest `|z_j|` (ideal value 1/2) accepted when resolving column phases.
pub const ILL_CONDITIONED_THRESHOLD: f64 = 1e-6;

/// Bloch length below which the spectator counts as entangled.
pub const BLOCH_THRESHOLD: f64 = 0.1;

/// Post-evolution tomograms of one spectator block, in the order
/// `|00⟩, |01⟩, |10⟩, |11⟩`, uniform superposition.
#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionInput<T: Real> {
    pub tomograms: [CVector<T>; PREPARED_STATES],
}

impl<T: Real> ReconstructionInput<T> {
    pub fn new(tomograms: [CVector<T>; PREPARED_STATES]) -> Result<Self> {
        for t in &tomograms {
            if t.len() != 4 {
                return Err(invalid("tomograms", "each tomogram must have 4 entries"));
            }
            if !(t.norm() <= T::one() + T::lit(1e-9)) {
                return Err(invalid("tomograms", "norm must not exceed 1"));
            }
        }
        Ok(Self { tomograms })
    }

    /// The prepared input states, in tomogram order.
    pub fn prepared_states() -> [CVector<T>; PREPARED_STATES] {
        let one = Complex::new(T::one(), T::zero());
        let basis = |j: usize| {
            let mut v = DVector::from_element(4, Complex::default());
            v[j] = one;
            v
        };
        [basis(0), basis(1), basis(2), basis(3), DVector::from_element(4, one * T::lit(0.5))]
    }

    /// Noiseless tomograms of the block `u`.
    pub fn from_block(u: &CMatrix<T>) -> Self {
        Self { tomograms: Self::prepared_states().map(|p| u * p) }
    }

    /// Multiplies tomogram `j` by `e^{i phases[j]}`, the freedom left by
    /// state tomography.
    pub fn with_phases(mut self, phases: [T; PREPARED_STATES]) -> Self {
        for (t, &p) in self.tomograms.iter_mut().zip(&phases) {
            *t *= cis(p);
        }
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction<T: Real> {
    /// The block, up to a global phase.
    pub u: CMatrix<T>,
    /// The superposition tomogram did not determine every column phase.
    pub ill_conditioned: bool,
}

/// Reconstructs one block from its five tomograms.
pub fn reconstruct_block<T: Real>(input: &ReconstructionInput<T>) -> Reconstruction<T> {
    let cols = &input.tomograms[..4];
    let c = CMatrix::from_columns(cols);
    let y = &input.tomograms[4];
    let svd = c.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let singular = !(smin > smax * T::lit(1e-12));
    let z = if singular { None } else { svd.solve(y, T::zero()).ok() };
    let mut u = c;
    let mut ill_conditioned = singular || z.is_none();
    if let Some(z) = z {
        for j in 0..4 {
            let m = abs(z[j]);
            if m < T::lit(ILL_CONDITIONED_THRESHOLD) {
                ill_conditioned = true;
                continue;
            }
            let phase = z[j] / m;
            for i in 0..4 {
                u[(i, j)] *= phase;
            }
        }
    }
    Reconstruction { u, ill_conditioned }
}

/// `max_ij |a_ij e^{iφ} − b_ij|` with `φ` the phase that best aligns `a`
/// to `b`.
pub fn phase_aligned_error<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    let overlap = a.iter().zip(b.iter()).fold(Complex::<T>::default(), |s, (x, y)| s + x.conj() * y);
    let phase = if abs(overlap) > T::zero() { overlap / abs(overlap) } else { Complex::new(T::one(), T::zero()) };
    a.iter().zip(b.iter()).map(|(x, y)| abs(x * phase - y)).fold(T::zero(), |m, d| m.max(d))
}

/// The three-qubit gate `U0 ⊗ |0⟩⟨0| + U1 ⊗ |1⟩⟨1|` on the logical states
/// ordered `n1 n2 n3`.
pub fn block_diagonal<T: Real>(u0: &CMatrix<T>, u1: &CMatrix<T>) -> CMatrix<T> {
    let mut out = CMatrix::zeros(8, 8);
    for (k, u) in [u0, u1].into_iter().enumerate() {
        for i in 0..4 {
            for j in 0..4 {
                out[(2 * i + k, 2 * j + k)] = u[(i, j)];
            }
        }
    }
    out
}

/// `ψ ⊗ (|0⟩ + |1⟩)/√2` on the logical states ordered `n1 n2 n3`.
pub fn spectator_superposition<T: Real>(psi: &CVector<T>) -> CVector<T> {
    let s = T::lit(std::f64::consts::FRAC_1_SQRT_2);
    DVector::from_fn(8, |r, _| psi[r / 2] * s)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelativePhase<T> {
    /// `atan2(⟨σ_y⟩, ⟨σ_x⟩)` of the spectator.
    pub phase: T,
    /// Length of the spectator's Bloch vector (normalized to the logical
    /// population).
    pub bloch_length: T,
    /// The Bloch length is below [`BLOCH_THRESHOLD`]: the phase is
    /// ill-defined.
    pub entangled: bool,
}

/// Relative phase of the spectator in the logical three-qubit state `psi`
/// (ordered `n1 n2 n3`), from the σ_x and σ_y expectations of its reduced
/// state.
pub fn relative_phase<T: Real>(psi: &CVector<T>) -> RelativePhase<T> {
    let mut rho = [[Complex::<T>::default(); 2]; 2];
    for r in 0..4 {
        for a in 0..2 {
            for b in 0..2 {
                rho[a][b] += psi[2 * r + a] * psi[2 * r + b].conj();
            }
        }
    }
    let tr = rho[0][0].re + rho[1][1].re;
    if !(tr > T::zero()) {
        return RelativePhase { phase: T::zero(), bloch_length: T::zero(), entangled: true };
    }
    let xy = rho[1][0] * (T::lit(2.0) / tr);
    let z = (rho[0][0].re - rho[1][1].re) / tr;
    let bloch_length = (xy.norm_sqr() + z * z).sqrt();
    RelativePhase {
        phase: xy.im.atan2(xy.re),
        bloch_length,
        entangled: bloch_length < T::lit(BLOCH_THRESHOLD),
    }
}

/// A fixed-time spectrum point obtained through tomography.
#[derive(Clone, Debug, PartialEq)]
pub struct TomographyPoint<T> {
    pub point: SpectrumPoint<T>,
    /// Spectator relative phase for the input `|00⟩ ⊗ (|0⟩ + |1⟩)/√2`, in the
    /// frame rotating at the bare spectator frequency.
    pub phase: T,
    pub bloch_length: T,
}

fn input_columns<T: Real>(ops: &OperatorSet<T>) -> Result<CMatrix<T>> {
    let basis = ops.basis();
    let mut v = CMatrix::zeros(basis.dim(), 2 * PREPARED_STATES + 1);
    let prepared = ReconstructionInput::<T>::prepared_states();
    for k in 0..2 {
        for (c, p) in prepared.iter().enumerate() {
            for j in 0..4 {
                let row = basis.index(&[j >> 1, j & 1, k, 0])?;
                v[(row, k * PREPARED_STATES + c)] = p[j];
            }
        }
    }
    let s = Complex::new(T::lit(std::f64::consts::FRAC_1_SQRT_2), T::zero());
    for k in 0..2 {
        v[(basis.index(&[0, 0, k, 0])?, 2 * PREPARED_STATES)] = s;
    }
    Ok(v)
}

fn project<T: Real>(ops: &OperatorSet<T>, v: &CMatrix<T>, col: usize, spectator: Option<usize>) -> Result<CVector<T>> {
    let basis = ops.basis();
    let n = if spectator.is_some() { 4 } else { 8 };
    let mut out = DVector::from_element(n, Complex::default());
    for (r, o) in out.iter_mut().enumerate() {
        let occ = match spectator {
            Some(k) => [r >> 1, r & 1, k, 0],
            None => [r >> 2, (r >> 1) & 1, r & 1, 0],
        };
        *o = v[(basis.index(&occ)?, col)];
    }
    Ok(out)
}

/// Runs the tomography protocol for one device at time `t` (a checkpoint).
pub fn tomography_point<T: Real>(
    ops: &OperatorSet<T>,
    pulse: &FluxPulse<T>,
    propagation: &PropagationConfig<T>,
    weights: &MetricWeights<T>,
    t: T,
) -> Result<TomographyPoint<T>> {
    pulse.validate()?;
    propagation.validate()?;
    let coupler = ops.spec().coupler;
    let mut snapshot = None;
    propagate_schedule(
        ops,
        |s| pulse.coupler_frequency(s, &coupler),
        pulse.duration,
        input_columns(ops)?,
        propagation,
        |s, v| {
            if (s - t).abs() < T::lit(1e-9) {
                snapshot = Some(v.clone());
            }
            Ok(())
        },
    )?;
    let v = snapshot.ok_or_else(|| invalid("fixed_t", format!("{t} ns is not a checkpoint")))?;
    let mut blocks = Vec::with_capacity(2);
    for k in 0..2 {
        let mut tomograms = Vec::with_capacity(PREPARED_STATES);
        for c in 0..PREPARED_STATES {
            tomograms.push(project(ops, &v, k * PREPARED_STATES + c, Some(k))?);
        }
        let tomograms: [CVector<T>; PREPARED_STATES] = tomograms.try_into().expect("five tomograms");
        let rec = reconstruct_block(&ReconstructionInput::new(tomograms)?);
        if rec.ill_conditioned {
            return Err(Error::IllConditioned { block: k });
        }
        blocks.push(rec.u);
    }
    let u1 = blocks.pop().expect("two blocks");
    let u0 = blocks.pop().expect("two blocks");
    let value = combined_j(&GateBlocks::new(u0, u1, t), weights);
    let omega3 = ops.spec().qubits[2].frequency;
    let rel = relative_phase(&project(ops, &v, 2 * PREPARED_STATES, None)?);
    let phase = (rel.phase + omega3 * t).sin().atan2((rel.phase + omega3 * t).cos());
    if rel.entangled {
        warn!("spectator Bloch length {} at ω3 = {omega3}: phase ill-defined", rel.bloch_length);
    }
    Ok(TomographyPoint {
        point: SpectrumPoint { omega3, value, time: t, status: PointStatus::Ok },
        phase,
        bloch_length: rel.bloch_length,
    })
}

/// The spectrum as an experiment would measure it: per `ω_3`, the two
/// blocks are reconstructed from tomograms at the fixed time of `cfg.mode`
/// and scored with the combined functional.
pub fn experimental_spectrum<T: Real>(
    template: &DeviceSpec<T>,
    pulse: &FluxPulse<T>,
    cfg: &SweepConfig<T>,
) -> Result<Vec<TomographyPoint<T>>> {
    cfg.validate(pulse)?;
    let t = match cfg.mode {
        EvalMode::FixedTime(t) => snap_to_checkpoint(t, pulse.duration, cfg.propagation.eval_interval),
        EvalMode::MinOverTime => {
            return Err(invalid("mode", "tomography needs a fixed evaluation time"));
        }
    };
    let run = |&omega3: &T| {
        let device = template.with_spectator(omega3, cfg.spectator_anharmonicity);
        build_operators(&device)
            .and_then(|ops| tomography_point(&ops, pulse, &cfg.propagation, &cfg.weights, t))
            .unwrap_or_else(|e| {
                warn!("ω3/2π = {:.4} GHz failed: {e}", crate::num::to_ghz(omega3));
                let nan = T::lit(f64::NAN);
                TomographyPoint { point: SpectrumPoint::failed(omega3, e.to_string()), phase: nan, bloch_length: nan }
            })
    };
    with_jobs(cfg.jobs, || cfg.grid.par_iter().map(run).collect())
}
