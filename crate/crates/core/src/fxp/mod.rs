//! Q16.16 fixed-point arithmetic.
//!
//! [`Fx`] is a signed 32-bit value with 16 fractional bits. Every operation
//! is checked: a result that does not fit the representable range
//! `[-32768.0, 32767.999985]` is reported as [`FxError::Overflow`] and never
//! wraps. Rounding is to nearest, ties away from zero.
//!
//! The transcendental functions in [`math`] are evaluated on a wider Q32.32
//! intermediate and rounded once, keeping them within 4 ulp of the real
//! function on the benchmark domains.

use std::fmt;
use std::str::FromStr;

mod math;
mod rng;
pub(crate) mod wide;

pub use rng::{derive_seed, rand_uniform, RngState};

/// Number of fractional bits.
pub const FRAC_BITS: u32 = 16;
const SCALE: i64 = 1 << FRAC_BITS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum FxError {
    #[error("fixed-point overflow")]
    Overflow,
    #[error("fixed-point division by zero")]
    DivByZero,
    #[error("argument outside the function domain")]
    Domain,
}

pub type FxResult = Result<Fx, FxError>;

/// A Q16.16 fixed-point number.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Fx(i32);

impl Fx {
    pub const ZERO: Fx = Fx(0);
    pub const ONE: Fx = Fx(1 << FRAC_BITS);
    pub const HALF: Fx = Fx(1 << (FRAC_BITS - 1));
    pub const TWO: Fx = Fx(2 << FRAC_BITS);
    /// Largest representable value, 32767.999985.
    pub const MAX: Fx = Fx(i32::MAX);
    /// Smallest representable value, -32768.0.
    pub const MIN: Fx = Fx(i32::MIN);
    /// One unit in the last place, 1/65536.
    pub const ULP: Fx = Fx(1);
    pub const PI: Fx = Fx(205_887);
    pub const TWO_PI: Fx = Fx(411_775);
    pub const E: Fx = Fx(178_145);

    #[inline]
    pub const fn from_raw(raw: i32) -> Fx {
        Fx(raw)
    }

    #[inline]
    pub const fn raw(self) -> i32 {
        self.0
    }

    #[inline]
    pub const fn from_int(v: i16) -> Fx {
        Fx((v as i32) << FRAC_BITS)
    }

    /// Converts a real number, rounding to the nearest grid point.
    pub fn from_real(v: f64) -> FxResult {
        if !v.is_finite() {
            return Err(FxError::Overflow);
        }
        // f64::round is half away from zero.
        let scaled = (v * SCALE as f64).round();
        if scaled < i32::MIN as f64 || scaled > i32::MAX as f64 {
            return Err(FxError::Overflow);
        }
        Ok(Fx(scaled as i32))
    }

    /// Converts a real that is known to be in range, for constants.
    ///
    /// Panics on out-of-range input.
    pub fn lit(v: f64) -> Fx {
        Fx::from_real(v).expect("fixed-point literal out of range")
    }

    #[inline]
    pub fn to_real(self) -> f64 {
        self.0 as f64 / SCALE as f64
    }

    #[inline]
    fn from_i64(v: i64) -> FxResult {
        i32::try_from(v).map(Fx).map_err(|_| FxError::Overflow)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(self, rhs: Fx) -> FxResult {
        self.0.checked_add(rhs.0).map(Fx).ok_or(FxError::Overflow)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(self, rhs: Fx) -> FxResult {
        self.0.checked_sub(rhs.0).map(Fx).ok_or(FxError::Overflow)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(self) -> FxResult {
        self.0.checked_neg().map(Fx).ok_or(FxError::Overflow)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, rhs: Fx) -> FxResult {
        let prod = self.0 as i64 * rhs.0 as i64;
        Fx::from_i64(round_shift(prod, FRAC_BITS))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn div(self, rhs: Fx) -> FxResult {
        if rhs.0 == 0 {
            return Err(FxError::DivByZero);
        }
        Fx::from_i64(round_div((self.0 as i64) << FRAC_BITS, rhs.0 as i64))
    }

    /// Multiplication by an integer, exact unless it overflows.
    pub fn mul_int(self, k: i32) -> FxResult {
        Fx::from_i64(self.0 as i64 * k as i64)
    }

    /// Division by a non-zero integer.
    pub fn div_int(self, k: i32) -> FxResult {
        if k == 0 {
            return Err(FxError::DivByZero);
        }
        Fx::from_i64(round_div(self.0 as i64, k as i64))
    }

    pub fn abs(self) -> FxResult {
        self.0.checked_abs().map(Fx).ok_or(FxError::Overflow)
    }

    #[inline]
    pub fn min(self, rhs: Fx) -> Fx {
        Ord::min(self, rhs)
    }

    #[inline]
    pub fn max(self, rhs: Fx) -> Fx {
        Ord::max(self, rhs)
    }

    #[inline]
    pub fn is_integer(self) -> bool {
        self.0 & (SCALE as i32 - 1) == 0
    }

    #[inline]
    pub fn is_negative(self) -> bool {
        self.0 < 0
    }
}

/// Arithmetic shift right by `s` bits, rounding half away from zero.
#[inline]
pub(crate) fn round_shift(v: i64, s: u32) -> i64 {
    if s == 0 {
        return v;
    }
    let half = 1i64 << (s - 1);
    if v >= 0 {
        (v + half) >> s
    } else {
        -((-v + half) >> s)
    }
}

/// Integer division rounding half away from zero. `den` must be non-zero.
#[inline]
pub(crate) fn round_div(num: i64, den: i64) -> i64 {
    let (n, d) = (num as i128, den as i128);
    let q = n / d;
    let r = n % d;
    if 2 * r.abs() >= d.abs() {
        (q + if (n < 0) == (d < 0) { 1 } else { -1 }) as i64
    } else {
        q as i64
    }
}

impl fmt::Debug for Fx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fx({:.6})", self.to_real())
    }
}

/// Six fractional digits, enough to round-trip every Q16.16 value.
impl fmt::Display for Fx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6}", self.to_real())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid fixed-point literal `{0}`")]
pub struct ParseFxError(String);

impl FromStr for Fx {
    type Err = ParseFxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let v: f64 = s.trim().parse().map_err(|_| ParseFxError(s.to_owned()))?;
        Fx::from_real(v).map_err(|_| ParseFxError(s.to_owned()))
    }
}

/// Serialized as a real number; deserialization rejects out-of-range values.
impl serde::Serialize for Fx {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_real())
    }
}

impl<'de> serde::Deserialize<'de> for Fx {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        Fx::from_real(v).map_err(|_| serde::de::Error::custom(format!("{v} outside the Q16.16 range")))
    }
}
