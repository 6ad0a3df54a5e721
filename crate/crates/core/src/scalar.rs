//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating-point type the model is evaluated in.
///
/// Blanket-implemented for `f32` and `f64`. The physical constants involved
/// (ħ ≈ 1e-34, ε² ≈ 1e21) fit in `f32`, but the solver tolerances only make
/// sense in `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

/// Reduced Planck constant (J·s, CODATA 2018 exact).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in target float type")
}

#[inline]
pub fn hbar<T: Real>() -> T {
    lit(HBAR)
}

#[inline]
pub(crate) fn two<T: Real>() -> T {
    T::one() + T::one()
}

#[inline]
pub(crate) fn half<T: Real>() -> T {
    lit(0.5)
}

#[inline]
pub(crate) fn cplx<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

/// Lossy conversion for diagnostics and error payloads.
#[inline]
pub(crate) fn f64_of<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Relative difference |a − b| / max(|a|, |b|, tiny).
pub fn rel_diff<T: Real>(a: T, b: T) -> T {
    let scale = a.abs().max(b.abs()).max(T::min_positive_value());
    (a - b).abs() / scale
}

/// Relative difference of complex numbers, normalized by the larger modulus.
pub fn rel_diff_c<T: Real>(a: Complex<T>, b: Complex<T>) -> T {
    let scale = a.norm().max(b.norm()).max(T::min_positive_value());
    (a - b).norm() / scale
}

/// Unevaluated sum hi + lo with |lo| ≤ ulp(hi)/2, used where a short chain
/// of products must round only once.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Twofold<T> {
    pub hi: T,
    pub lo: T,
}

impl<T: Real> Twofold<T> {
    /// Exact product of two scalars.
    pub fn product(a: T, b: T) -> Self {
        let hi = a * b;
        Twofold {
            hi,
            lo: a.mul_add(b, -hi),
        }
    }

    pub fn scale(self, b: T) -> Self {
        let p = Self::product(self.hi, b);
        Self::normalize(p.hi, p.lo + self.lo * b)
    }

    pub fn sqrt(self) -> Self {
        let s = self.hi.sqrt();
        // one Newton correction: (x − s²)/(2s)
        let r = (-s).mul_add(s, self.hi) + self.lo;
        Self::normalize(s, r / (two::<T>() * s))
    }

    /// `num / self`, rounded once.
    pub fn divide_into(self, num: T) -> T {
        let q = num / self.hi;
        let r = (-q).mul_add(self.hi, num) - q * self.lo;
        q + r / self.hi
    }

    pub fn round(self) -> T {
        self.hi + self.lo
    }

    fn normalize(hi: T, lo: T) -> Self {
        let s = hi + lo;
        Twofold {
            hi: s,
            lo: lo - (s - hi),
        }
    }
}
