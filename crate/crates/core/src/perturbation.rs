//! Perturbative analysis of the flux drive in the dressed basis.
//!
//! For `H(t) = H_0 + u(t) V` with `H_0` diagonal (energies `E_i`), the
//! interaction-picture amplitude to go from `|n⟩` to `|m⟩` is, to second
//! order,
//!
//! ```text
//! c_m = δ_mn − i V_mn ∫ e^{iω_mn t'} u(t') dt'
//!       − Σ_k V_mk V_kn ∫dt' ∫^{t'} dt'' e^{iω_mk t'} e^{iω_kn t''} u(t') u(t'')
//! ```
//!
//! with `ω_ij = E_i − E_j`. Integrals use the trapezoid rule on the sample
//! grid; the nested integral is evaluated through cumulative sums.
//!
//! For the two-level qubit–coupler toy model the drive reads
//! `(Δω/2Ω) σ̃_z + (g/Ω) σ̃_x` in the dressed basis, and the second-order
//! term for `m ≠ n` reduces to
//!
//! ```text
//! (−1)^m (g Δω / 2Ω²) { W̃ F[u](ω_mn) − 2 F[uW](ω_mn) },   W(t) = ∫_0^t u
//! ```

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::device::CouplerSpec;
use crate::error::{invalid, Result};
use crate::flux::FluxPulse;
use crate::linalg::expm;
use crate::num::{cis, CMatrix, Real};

/// One fixed-frequency transmon and the coupler, both as two-level systems
/// coupled by `g (σ+σ− + σ−σ+)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ToyModel<T> {
    pub omega_a: T,
    pub omega_b: T,
    pub g: T,
}

impl<T: Real> ToyModel<T> {
    pub fn new(omega_a: T, omega_b: T, g: T) -> Result<Self> {
        if !(g >= T::zero()) {
            return Err(invalid("g", "must be non-negative"));
        }
        if !omega_a.is_finite() || !omega_b.is_finite() {
            return Err(invalid("omega", "must be finite"));
        }
        Ok(Self { omega_a, omega_b, g })
    }

    /// `Δω = ω_a − ω_b`.
    pub fn detuning(&self) -> T {
        self.omega_a - self.omega_b
    }

    /// `Ω = √((Δω/2)² + g²)`.
    pub fn splitting(&self) -> T {
        let h = self.detuning() / T::lit(2.0);
        (h * h + self.g * self.g).sqrt()
    }

    /// Dressed energies `(+Ω, −Ω)`; level 0 is the one with `σ̃_z = +1`.
    pub fn energies(&self) -> Vec<T> {
        vec![self.splitting(), -self.splitting()]
    }

    /// Dressed-basis drive matrix `V = (Δω/2Ω) σ̃_z + (g/Ω) σ̃_x`.
    pub fn drive_matrix(&self) -> DMatrix<T> {
        let (z, x) = dressed_drive(self);
        DMatrix::from_row_slice(2, 2, &[z, x, x, -z])
    }
}

/// `(Δω/2Ω, g/Ω)`: diagonal and off-diagonal coefficients of the drive in
/// the dressed basis.
pub fn dressed_drive<T: Real>(toy: &ToyModel<T>) -> (T, T) {
    let omega = toy.splitting();
    if omega == T::zero() {
        return (T::zero(), T::zero());
    }
    (toy.detuning() / (T::lit(2.0) * omega), toy.g / omega)
}

/// `∫_0^{t_end} e^{iωt} f(t) dt` on a uniform grid (trapezoid rule).
pub fn fourier<T: Real>(f: &[T], dt: T, omega: T) -> Complex<T> {
    let n = f.len();
    if n < 2 {
        return Complex::default();
    }
    let mut acc = Complex::default();
    for (k, &x) in f.iter().enumerate() {
        let w = if k == 0 || k == n - 1 { T::lit(0.5) } else { T::one() };
        acc += cis(omega * dt * T::from_usize_lossy(k)) * (x * w);
    }
    acc * dt
}

/// Cumulative trapezoid `W_k = ∫_0^{t_k} f`.
pub fn antiderivative<T: Real>(f: &[T], dt: T) -> Vec<T> {
    let mut out = Vec::with_capacity(f.len());
    let mut acc = T::zero();
    for (k, &x) in f.iter().enumerate() {
        if k > 0 {
            acc += (f[k - 1] + x) * dt / T::lit(2.0);
        }
        out.push(acc);
    }
    out
}

fn cumulative_complex<T: Real>(f: &[Complex<T>], dt: T) -> Vec<Complex<T>> {
    let mut out = Vec::with_capacity(f.len());
    let mut acc = Complex::default();
    for (k, &x) in f.iter().enumerate() {
        if k > 0 {
            acc += (f[k - 1] + x) * (dt / T::lit(2.0));
        }
        out.push(acc);
    }
    out
}

fn trapezoid_complex<T: Real>(f: &[Complex<T>], dt: T) -> Complex<T> {
    cumulative_complex(f, dt).last().copied().unwrap_or_default()
}

/// First- and second-order terms of the transition amplitude `n → m`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerturbativeAmplitude<T> {
    pub first: Complex<T>,
    pub second: Complex<T>,
    /// `δ_mn + first + second`.
    pub amplitude: Complex<T>,
    /// `|amplitude|²`.
    pub probability: T,
}

/// Second-order amplitude for a general eigensystem with energies `energies`
/// and drive matrix `v`, driven by samples `u_k = u(k dt)`.
pub fn p2_amplitude<T: Real>(
    energies: &[T],
    v: &DMatrix<T>,
    u: &[T],
    dt: T,
    n: usize,
    m: usize,
) -> PerturbativeAmplitude<T> {
    let w = |i: usize, j: usize| energies[i] - energies[j];
    let times: Vec<T> = (0..u.len()).map(|k| dt * T::from_usize_lossy(k)).collect();
    let first = Complex::new(T::zero(), -v[(m, n)]) * fourier(u, dt, w(m, n));
    let mut second = Complex::default();
    for k in 0..energies.len() {
        let coeff = v[(m, k)] * v[(k, n)];
        if coeff == T::zero() {
            continue;
        }
        let inner: Vec<Complex<T>> =
            times.iter().zip(u).map(|(&t, &x)| cis(w(k, n) * t) * x).collect();
        let inner = cumulative_complex(&inner, dt);
        let outer: Vec<Complex<T>> = times
            .iter()
            .zip(u)
            .zip(&inner)
            .map(|((&t, &x), &i)| cis(w(m, k) * t) * i * x)
            .collect();
        second -= trapezoid_complex(&outer, dt) * coeff;
    }
    let delta = if m == n { T::one() } else { T::zero() };
    let amplitude = Complex::new(delta, T::zero()) + first + second;
    PerturbativeAmplitude { first, second, amplitude, probability: amplitude.norm_sqr() }
}

/// The sum `Σ_k V_mk V_kn ∫∫ …` of the two-level toy model for `m ≠ n` in
/// closed form (note the sign: the amplitude contains minus this value).
pub fn second_order_closed_form<T: Real>(toy: &ToyModel<T>, u: &[T], dt: T, m: usize) -> Complex<T> {
    let energies = toy.energies();
    let n = 1 - m;
    let w_mn = energies[m] - energies[n];
    let omega = toy.splitting();
    let sign = if m % 2 == 0 { T::one() } else { -T::one() };
    let pref = sign * toy.g * toy.detuning() / (T::lit(2.0) * omega * omega);
    let big_w = antiderivative(u, dt);
    let w_total = *big_w.last().unwrap_or(&T::zero());
    let uw: Vec<T> = u.iter().zip(&big_w).map(|(&a, &b)| a * b).collect();
    (fourier(u, dt, w_mn) * w_total - fourier(&uw, dt, w_mn) * T::lit(2.0)) * pref
}

/// Exact interaction-picture amplitude `e^{iE_m t} ⟨m|U(t)|n⟩` for
/// `H(t) = diag(E) + u(t) V`, using midpoint exponentials on the sample grid.
pub fn exact_amplitude<T: Real>(
    energies: &[T],
    v: &DMatrix<T>,
    u: &[T],
    dt: T,
    n: usize,
    m: usize,
) -> Complex<T> {
    let dim = energies.len();
    let mut state: nalgebra::DVector<Complex<T>> = nalgebra::DVector::zeros(dim);
    state[n] = Complex::new(T::one(), T::zero());
    let minus_i_dt = Complex::new(T::zero(), -dt);
    for k in 0..u.len().saturating_sub(1) {
        let um = (u[k] + u[k + 1]) / T::lit(2.0);
        let h: CMatrix<T> = CMatrix::from_fn(dim, dim, |i, j| {
            let d = if i == j { energies[i] } else { T::zero() };
            Complex::new(d + um * v[(i, j)], T::zero())
        });
        state = expm(&(h * minus_i_dt)) * state;
    }
    let t_end = dt * T::from_usize_lossy(u.len().saturating_sub(1));
    state[m] * cis(energies[m] * t_end)
}

/// Magnitudes `|(1/L) ∫_window f(t) e^{−ikωt} dt|` for `k = 0..=kmax`.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicContent<T> {
    /// Harmonics of `u`.
    pub u: Vec<T>,
    /// Harmonics of `u · W`.
    pub uw: Vec<T>,
}

/// Harmonic content of `u` and `u·W` on a window of whole drive periods.
///
/// `u` is sampled from `t0` over `periods` periods of `2π/omega` with
/// `samples_per_period` points each. `W` is the antiderivative of `u` with
/// its secular part `ū t` removed (`ū` the window mean), so that `u·W` is
/// periodic on the window; without this the linear growth of `W` smears
/// every harmonic.
pub fn harmonic_content<T: Real, F: Fn(T) -> T>(
    u: F,
    t0: T,
    omega: T,
    periods: usize,
    samples_per_period: usize,
    kmax: usize,
) -> HarmonicContent<T> {
    let n = periods * samples_per_period;
    let dt = T::two_pi() / omega / T::from_usize_lossy(samples_per_period);
    let samples: Vec<T> = (0..n).map(|k| u(t0 + dt * T::from_usize_lossy(k))).collect();
    let mean = samples.iter().fold(T::zero(), |s, &x| s + x) / T::from_usize_lossy(n);
    let osc: Vec<T> = samples.iter().map(|&x| x - mean).collect();
    // periodic antiderivative of the oscillating part, via rectangle sums of
    // the trapezoid rule on a periodic grid
    let mut w = Vec::with_capacity(n);
    let mut acc = T::zero();
    for k in 0..n {
        w.push(acc);
        acc += (osc[k] + osc[(k + 1) % n]) * dt / T::lit(2.0);
    }
    let uw: Vec<T> = samples.iter().zip(&w).map(|(&a, &b)| a * b).collect();
    let spectrum = |f: &[T]| -> Vec<T> {
        (0..=kmax)
            .map(|k| {
                let z = f.iter().enumerate().fold(Complex::default(), |s, (i, &x)| {
                    s + cis(-omega * T::from_usize_lossy(k) * dt * T::from_usize_lossy(i)) * x
                });
                (z / T::from_usize_lossy(n)).norm_sqr().sqrt()
            })
            .collect()
    };
    HarmonicContent { u: spectrum(&samples), uw: spectrum(&uw) }
}

/// [`harmonic_content`] of the coupler deviation `u(t)` of `pulse` on the
/// largest whole number of periods inside the plateau `[4σ_t, T − 4σ_t]`.
pub fn pulse_harmonics<T: Real>(pulse: &FluxPulse<T>, coupler: &CouplerSpec<T>, kmax: usize) -> Result<HarmonicContent<T>> {
    let start = T::lit(4.0) * pulse.flank_width;
    let span = pulse.duration - T::lit(2.0) * start;
    let periods = (span / pulse.period()).floor().to_usize().unwrap_or(0);
    if periods == 0 {
        return Err(invalid("duration", "plateau is shorter than one drive period"));
    }
    Ok(harmonic_content(|t| pulse.u_waveform(t, coupler), start, pulse.frequency, periods, 64, kmax))
}
