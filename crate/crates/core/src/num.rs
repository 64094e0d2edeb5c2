//! Scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display};

use nalgebra::{DMatrix, DVector, RealField};
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar the simulator is generic over (`f32` or `f64`).
pub trait Real:
    RealField + Copy + Default + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type C<T> = Complex<T>;
pub type CMatrix<T> = DMatrix<Complex<T>>;
pub type CVector<T> = DVector<Complex<T>>;

/// `exp(i·theta)`.
#[inline]
pub fn cis<T: Real>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

#[inline]
pub fn re<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

#[inline]
pub fn abs<T: Real>(z: Complex<T>) -> T {
    z.norm_sqr().sqrt()
}

#[inline]
pub fn arg<T: Real>(z: Complex<T>) -> T {
    z.im.atan2(z.re)
}

/// Angular frequency (rad/ns) from a linear frequency in GHz.
#[inline]
pub fn ghz<T: Real>(f: f64) -> T {
    T::lit(std::f64::consts::TAU * f)
}

/// Angular frequency (rad/ns) from a linear frequency in MHz.
#[inline]
pub fn mhz<T: Real>(f: f64) -> T {
    T::lit(std::f64::consts::TAU * f * 1e-3)
}

/// Linear frequency in GHz from an angular frequency in rad/ns.
#[inline]
pub fn to_ghz<T: Real>(w: T) -> f64 {
    w.as_f64() / std::f64::consts::TAU
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_conversions_round_trip() {
        let w: f64 = ghz(5.089);
        assert!((to_ghz(w) - 5.089).abs() < 1e-15);
        let m: f64 = mhz(310.0);
        assert!((to_ghz(m) - 0.310).abs() < 1e-15);
    }

    #[test]
    fn cis_is_unit_modulus_in_both_precisions() {
        assert!((abs(cis(0.7f64)) - 1.0).abs() < 1e-15);
        assert!((abs(cis(0.7f32)) - 1.0).abs() < 1e-6);
        assert!((arg(cis(0.7f64)) - 0.7).abs() < 1e-15);
    }
}
