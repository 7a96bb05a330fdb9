//! Q32.32 intermediate kernels.
//!
//! Values are `i64` with 32 fractional bits; products go through `i128`.
//! Results are rounded back to Q16.16 exactly once by the callers.

use super::{round_shift, Fx, FxError, FxResult};

pub(crate) const FRAC: u32 = 32;
pub(crate) const ONE: i64 = 1 << FRAC;
const LN2: i64 = 2_977_044_472;
const SQRT2: i64 = 6_074_001_000;
const HALF_PI_Q64: i128 = 28_976_077_832_308_491_370;
/// Magnitude above which a Q32.32 value can no longer become a valid `Fx`.
const FX_LIMIT: i64 = 1 << 48;

#[inline]
pub(crate) fn from_fx(x: Fx) -> i64 {
    (x.raw() as i64) << 16
}

#[inline]
pub(crate) fn to_fx(w: i64) -> FxResult {
    Fx::from_i64(round_shift(w, 16))
}

#[inline]
pub(crate) fn from_int(k: i64) -> i64 {
    k << FRAC
}

#[inline]
fn round_shift_128(v: i128, s: u32) -> i128 {
    let half = 1i128 << (s - 1);
    if v >= 0 {
        (v + half) >> s
    } else {
        -((-v + half) >> s)
    }
}

#[inline]
fn round_div_128(n: i128, d: i128) -> i128 {
    let q = n / d;
    let r = n % d;
    if 2 * r.abs() >= d.abs() {
        q + if (n < 0) == (d < 0) { 1 } else { -1 }
    } else {
        q
    }
}

/// Product; `None` if it leaves the i64 range.
#[inline]
pub(crate) fn mul(a: i64, b: i64) -> Option<i64> {
    i64::try_from(round_shift_128(a as i128 * b as i128, FRAC)).ok()
}

#[inline]
pub(crate) fn div(a: i64, b: i64) -> Option<i64> {
    if b == 0 {
        return None;
    }
    i64::try_from(round_div_128((a as i128) << FRAC, b as i128)).ok()
}

/// `e^x`; `None` when the result exceeds the Q32.32 range.
pub(crate) fn exp(x: i64) -> Option<i64> {
    let k = round_div_128(x as i128, LN2 as i128);
    if k > 31 {
        return None;
    }
    if k < -40 {
        return Some(0);
    }
    let r = (x as i128 - k * LN2 as i128) as i64;
    let mut term = ONE;
    let mut sum = ONE;
    for j in 1..=24 {
        term = mul(term, r)? / j;
        if term == 0 {
            break;
        }
        sum += term;
    }
    let k = k as i32;
    if k >= 0 {
        if sum > (i64::MAX >> k) {
            return None;
        }
        Some(sum << k)
    } else {
        Some(round_shift(sum, (-k) as u32))
    }
}

/// Natural logarithm of a strictly positive value.
pub(crate) fn ln(x: i64) -> i64 {
    debug_assert!(x > 0);
    let top = 63 - x.leading_zeros() as i64;
    let mut k = top - FRAC as i64;
    let mut m = if k >= 0 { round_shift(x, k as u32) } else { x << (-k) };
    // m in [1, 2); fold to [1/sqrt2, sqrt2) for faster convergence.
    if m > SQRT2 {
        m = round_shift(m, 1);
        k += 1;
    }
    let z = div(m - ONE, m + ONE).expect("bounded quotient");
    let z2 = mul(z, z).expect("bounded product");
    let mut term = z;
    let mut sum = z;
    for j in 1..=40 {
        term = mul(term, z2).expect("bounded product");
        let t = term / (2 * j + 1);
        if t == 0 {
            break;
        }
        sum += t;
    }
    2 * sum + k * LN2
}

/// Returns `(sin x, cos x)`.
pub(crate) fn sin_cos(x: i64) -> (i64, i64) {
    let xq = (x as i128) << FRAC;
    let q = round_div_128(xq, HALF_PI_Q64);
    let r = round_shift_128(xq - q * HALF_PI_Q64, FRAC) as i64;
    let r2 = mul(r, r).expect("reduced argument");

    let mut s_term = r;
    let mut s = r;
    let mut c_term = ONE;
    let mut c = ONE;
    for j in 1..=12i64 {
        s_term = -mul(s_term, r2).expect("reduced argument") / ((2 * j) * (2 * j + 1));
        c_term = -mul(c_term, r2).expect("reduced argument") / ((2 * j - 1) * (2 * j));
        if s_term == 0 && c_term == 0 {
            break;
        }
        s += s_term;
        c += c_term;
    }
    match q.rem_euclid(4) {
        0 => (s, c),
        1 => (c, -s),
        2 => (-s, -c),
        _ => (-c, s),
    }
}

/// Square root of a non-negative value, correctly rounded.
pub(crate) fn sqrt(x: i64) -> i64 {
    debug_assert!(x >= 0);
    let v = (x as u128) << FRAC;
    let s = v.isqrt();
    let s = if v - s * s > s { s + 1 } else { s };
    s as i64
}

/// Integer power by squaring.
///
/// For `|x| >= 1` every intermediate power is bounded by the result, so an
/// intermediate beyond the `Fx` range already proves overflow.
pub(crate) fn powi(x: i64, n: u32) -> Result<i64, FxError> {
    let mut acc = ONE;
    let mut base = x;
    let mut n = n;
    while n > 0 {
        if n & 1 == 1 {
            acc = mul(acc, base).ok_or(FxError::Overflow)?;
            if acc.abs() > FX_LIMIT {
                return Err(FxError::Overflow);
            }
        }
        n >>= 1;
        if n > 0 {
            base = mul(base, base).ok_or(FxError::Overflow)?;
            if base.abs() > FX_LIMIT {
                return Err(FxError::Overflow);
            }
        }
    }
    Ok(acc)
}

/// `x^y` for `x > 0` through `exp(y ln x)`.
pub(crate) fn pow_pos(x: i64, y: i64) -> Result<i64, FxError> {
    debug_assert!(x > 0);
    let e = mul(y, ln(x)).ok_or(FxError::Overflow)?;
    exp(e).ok_or(FxError::Overflow)
}

/// Checked Q32.32 accumulator.
///
/// Used where a formula chains several roundings that Q16.16 would amplify
/// (squares of differences, fourth powers). Overflow is reported exactly as
/// for [`Fx`]; the final value is rounded once by [`Wx::to_fx`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct Wx(pub(crate) i64);

impl Wx {
    pub(crate) const ZERO: Wx = Wx(0);
    pub(crate) const ONE: Wx = Wx(ONE);

    #[inline]
    pub(crate) fn from_fx(x: Fx) -> Wx {
        Wx(from_fx(x))
    }

    #[inline]
    pub(crate) fn int(k: i64) -> Wx {
        Wx(from_int(k))
    }

    /// Nearest Q32.32 value to a real constant.
    pub(crate) fn lit(v: f64) -> Wx {
        Wx((v * ONE as f64).round() as i64)
    }

    #[inline]
    pub(crate) fn to_fx(self) -> FxResult {
        to_fx(self.0)
    }

    #[inline]
    pub(crate) fn add(self, o: Wx) -> Result<Wx, FxError> {
        self.0.checked_add(o.0).map(Wx).ok_or(FxError::Overflow)
    }

    #[inline]
    pub(crate) fn sub(self, o: Wx) -> Result<Wx, FxError> {
        self.0.checked_sub(o.0).map(Wx).ok_or(FxError::Overflow)
    }

    #[inline]
    pub(crate) fn mul(self, o: Wx) -> Result<Wx, FxError> {
        mul(self.0, o.0).map(Wx).ok_or(FxError::Overflow)
    }

    #[inline]
    pub(crate) fn div(self, o: Wx) -> Result<Wx, FxError> {
        if o.0 == 0 {
            return Err(FxError::DivByZero);
        }
        div(self.0, o.0).map(Wx).ok_or(FxError::Overflow)
    }

    #[inline]
    pub(crate) fn mul_int(self, k: i64) -> Result<Wx, FxError> {
        self.0.checked_mul(k).map(Wx).ok_or(FxError::Overflow)
    }

    #[inline]
    pub(crate) fn div_int(self, k: i64) -> Result<Wx, FxError> {
        if k == 0 {
            return Err(FxError::DivByZero);
        }
        Ok(Wx(super::round_div(self.0, k)))
    }

    #[inline]
    pub(crate) fn abs(self) -> Wx {
        Wx(self.0.abs())
    }

    #[inline]
    pub(crate) fn neg(self) -> Wx {
        Wx(-self.0)
    }

    pub(crate) fn sqrt(self) -> Result<Wx, FxError> {
        if self.0 < 0 {
            return Err(FxError::Domain);
        }
        Ok(Wx(sqrt(self.0)))
    }

    pub(crate) fn exp(self) -> Result<Wx, FxError> {
        exp(self.0).map(Wx).ok_or(FxError::Overflow)
    }

    pub(crate) fn ln(self) -> Result<Wx, FxError> {
        if self.0 <= 0 {
            return Err(FxError::Domain);
        }
        Ok(Wx(ln(self.0)))
    }

    pub(crate) fn sin(self) -> Wx {
        Wx(sin_cos(self.0).0)
    }

    pub(crate) fn cos(self) -> Wx {
        Wx(sin_cos(self.0).1)
    }

    pub(crate) fn powi(self, n: u32) -> Result<Wx, FxError> {
        powi(self.0, n).map(Wx)
    }
}
