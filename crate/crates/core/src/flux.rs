//! Parametric flux drive of the tunable coupler.
//!
//! `Φ(t) = Θ + env(t) δ cos(ω_φ t)` and `ω_c(t) = ω_c^max √|cos(π Φ(t))|`.
//! The Gaussian-flattop envelope only multiplies the oscillating part; the
//! idle operating point `Θ` is held for the whole protocol.

use crate::device::CouplerSpec;
use crate::error::{invalid, Result};
use crate::num::Real;

/// A single-tone flux pulse. Times in ns, frequency in rad/ns.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluxPulse<T> {
    /// Static flux offset `Θ`.
    pub offset: T,
    /// Modulation amplitude `δ`.
    pub amplitude: T,
    /// Modulation frequency `ω_φ`.
    pub frequency: T,
    /// Flank width `σ_t` of the flattop ramps.
    pub flank_width: T,
    pub duration: T,
}

impl<T: Real> FluxPulse<T> {
    /// Rejects pulses that would let `cos(πΦ)` reach zero.
    pub fn new(offset: T, amplitude: T, frequency: T, flank_width: T, duration: T) -> Result<Self> {
        let pulse = Self { offset, amplitude, frequency, flank_width, duration };
        pulse.validate()?;
        Ok(pulse)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > T::zero()) {
            return Err(invalid("duration", format!("must be positive, got {}", self.duration)));
        }
        if !(self.flank_width >= T::zero()) {
            return Err(invalid("flank_width", "must be non-negative"));
        }
        if !(self.amplitude >= T::zero()) {
            return Err(invalid("amplitude", "must be non-negative"));
        }
        if !self.frequency.is_finite() {
            return Err(invalid("frequency", "must be finite"));
        }
        if !(self.offset.abs() + self.amplitude < T::lit(0.5)) {
            return Err(invalid(
                "offset",
                format!(
                    "|Θ| + δ = {} must stay below 0.5 so that cos(πΦ) > 0",
                    self.offset.abs() + self.amplitude
                ),
            ));
        }
        Ok(())
    }

    pub fn with_duration(&self, duration: T) -> Self {
        Self { duration, ..*self }
    }

    pub fn with_amplitude(&self, amplitude: T) -> Self {
        Self { amplitude, ..*self }
    }

    pub fn period(&self) -> T {
        T::two_pi() / self.frequency
    }

    /// Gaussian flattop: error-function ramps centred at `2σ_t` and `T − 2σ_t`.
    pub fn envelope(&self, t: T) -> T {
        let sigma = self.flank_width;
        if sigma == T::zero() {
            return if t > T::zero() && t < self.duration { T::one() } else { T::zero() };
        }
        let s = (T::lit(2.0).sqrt() * sigma).as_f64();
        let rise = (t - T::lit(2.0) * sigma).as_f64() / s;
        let fall = (t - (self.duration - T::lit(2.0) * sigma)).as_f64() / s;
        let env = 0.5 * (libm::erf(rise) - libm::erf(fall));
        T::lit(env.clamp(0.0, 1.0))
    }

    /// `Φ(t)`.
    pub fn flux(&self, t: T) -> T {
        self.offset + self.envelope(t) * self.amplitude * (self.frequency * t).cos()
    }

    /// `ω_c(t) = ω_c^max √|cos(πΦ(t))|`.
    pub fn coupler_frequency(&self, t: T, coupler: &CouplerSpec<T>) -> T {
        coupler.max_frequency * (T::pi() * self.flux(t)).cos().abs().sqrt()
    }

    /// Coupler frequency at the idle point `Φ = Θ`.
    pub fn idle_frequency(&self, coupler: &CouplerSpec<T>) -> T {
        coupler.max_frequency * (T::pi() * self.offset).cos().abs().sqrt()
    }

    /// Deviation `u(t) = ω_c(t) − ω_c(Θ)` of the coupler from its idle value (rad/ns).
    pub fn u_waveform(&self, t: T, coupler: &CouplerSpec<T>) -> T {
        self.coupler_frequency(t, coupler) - self.idle_frequency(coupler)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{ghz, mhz};
    use crate::presets;

    fn table_i_pulse() -> FluxPulse<f64> {
        presets::cz_ganzhorn::<f64>(ghz(5.0), mhz(100.0)).pulse
    }

    #[test]
    fn plateau_and_edges() {
        let p = table_i_pulse();
        assert!((p.envelope(p.duration / 2.0) - 1.0).abs() < 1e-6);
        // ½[erf(−√2) + 1]
        let at_zero = 0.5 * (1.0 - libm::erf(2f64.sqrt()));
        assert!((p.envelope(0.0) - at_zero).abs() < 1e-9);
        assert!(p.envelope(0.0) < 0.03);
        assert!(p.envelope(p.duration) < 0.03);
    }

    #[test]
    fn zero_flank_width_gives_rectangle() {
        let p = table_i_pulse();
        let p = FluxPulse { flank_width: 0.0, ..p };
        assert_eq!(p.envelope(-1.0), 0.0);
        assert_eq!(p.envelope(0.0), 0.0);
        assert_eq!(p.envelope(1e-9), 1.0);
        assert_eq!(p.envelope(p.duration - 1e-9), 1.0);
        assert_eq!(p.envelope(p.duration), 0.0);
    }

    #[test]
    fn envelope_is_monotone_on_ramps() {
        let p = table_i_pulse();
        let s = p.flank_width;
        let steps = 400;
        let mut prev = p.envelope(0.0);
        for k in 1..=steps {
            let e = p.envelope(2.0 * s * k as f64 / steps as f64);
            assert!(e >= prev);
            prev = e;
        }
        let mut prev = p.envelope(p.duration - 2.0 * s);
        for k in 1..=steps {
            let e = p.envelope(p.duration - 2.0 * s + 2.0 * s * k as f64 / steps as f64);
            assert!(e <= prev);
            prev = e;
        }
    }

    #[test]
    fn flux_limits() {
        let p = table_i_pulse().with_amplitude(0.0);
        for k in 0..50 {
            assert_eq!(p.flux(k as f64 * 3.7), 0.15);
        }
        let p = table_i_pulse();
        // plateau, cos(ω_φ t) = 1
        let t = p.period() * 200.0;
        assert!((p.flux(t) - 0.34).abs() < 1e-6);
        let t = p.period() * 200.5;
        assert!((p.flux(t) + 0.04).abs() < 1e-6);
        let (lo, hi) = (0..20000)
            .map(|k| p.flux(p.duration * k as f64 / 20000.0))
            .fold((f64::MAX, f64::MIN), |(lo, hi), x| (lo.min(x), hi.max(x)));
        assert!(lo >= -0.04 - 1e-9 && hi <= 0.34 + 1e-9);
    }

    #[test]
    fn coupler_frequency_special_points() {
        let coupler = presets::cz_ganzhorn::<f64>(ghz(5.0), mhz(100.0)).device.coupler;
        let p = FluxPulse::new(0.0, 0.0, 1.0, 5.0, 100.0).unwrap();
        assert!((p.coupler_frequency(17.0, &coupler) - coupler.max_frequency).abs() < 1e-12);
        let p = FluxPulse::new(1.0 / 3.0, 0.0, 1.0, 5.0, 100.0).unwrap();
        let expect = coupler.max_frequency * 0.5f64.sqrt();
        assert!((p.coupler_frequency(3.0, &coupler) - expect).abs() < 1e-12);
        for k in 0..10 {
            assert_eq!(p.u_waveform(k as f64, &coupler), 0.0);
        }
    }

    #[test]
    fn table_i_average_coupler_frequency() {
        let preset = presets::cz_ganzhorn::<f64>(ghz(5.0), mhz(100.0));
        let (p, coupler) = (preset.pulse, preset.device.coupler);
        let t0 = p.duration / 2.0;
        let n = 4000;
        let h = p.period() / n as f64;
        // periodic integrand: the rectangle rule is spectrally accurate
        let mean = (0..n).map(|k| p.coupler_frequency(t0 + h * k as f64, &coupler)).sum::<f64>()
            / n as f64;
        let mean_ghz = mean / std::f64::consts::TAU;
        assert!((mean_ghz - 7.25).abs() < 0.01, "mean = {mean_ghz} GHz");
    }

    #[test]
    fn u_vanishes_where_the_envelope_does() {
        let preset = presets::cz_ganzhorn::<f64>(ghz(5.0), mhz(100.0));
        let p = FluxPulse { flank_width: 0.0, ..preset.pulse };
        assert_eq!(p.u_waveform(0.0, &preset.device.coupler), 0.0);
        assert_eq!(p.u_waveform(p.duration + 5.0, &preset.device.coupler), 0.0);
    }

    #[test]
    fn waveforms_are_smooth() {
        let preset = presets::cz_ganzhorn::<f64>(ghz(5.0), mhz(100.0));
        let (p, c) = (preset.pulse, preset.device.coupler);
        let h = 1e-4;
        // |dω_c/dt| ≤ ω_max · π/2 · |dΦ/dt| / √cos(π(|Θ|+δ)) with |dΦ/dt| ≲ δ(ω_φ + 1/σ)
        let dphi = p.amplitude * (p.frequency + 1.0 / p.flank_width);
        let bound = c.max_frequency * std::f64::consts::PI * dphi
            / (2.0 * (std::f64::consts::PI * 0.34).cos().sqrt());
        for k in 0..5000 {
            let t = p.duration * k as f64 / 5000.0;
            let d = (p.coupler_frequency(t + h, &c) - p.coupler_frequency(t - h, &c)) / (2.0 * h);
            assert!(d.abs() <= bound, "t = {t}: {d} > {bound}");
        }
    }

    #[test]
    fn rejects_flux_reaching_half_quantum() {
        assert!(FluxPulse::new(0.3, 0.2, 1.0, 1.0, 10.0).is_err());
        assert!(FluxPulse::new(-0.3, 0.19, 1.0, 1.0, 10.0).is_ok());
        assert!(FluxPulse::new(0.1, 0.1, 1.0, 1.0, 0.0).is_err());
        assert!(FluxPulse::new(0.1, 0.1, 1.0, -1.0, 10.0).is_err());
    }

    #[test]
    fn single_precision_agrees() {
        let p64 = table_i_pulse();
        let p32 = presets::cz_ganzhorn::<f32>(ghz(5.0), mhz(100.0)).pulse;
        for k in 0..100 {
            let t = k as f64 * 6.9;
            assert!((p32.flux(t as f32) as f64 - p64.flux(t)).abs() < 1e-4);
        }
        let _ = mhz::<f32>(1.0);
    }
}
