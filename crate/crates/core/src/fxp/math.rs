use super::{wide, Fx, FxError, FxResult};

impl Fx {
    pub fn sqrt(self) -> FxResult {
        if self.is_negative() {
            return Err(FxError::Domain);
        }
        wide::to_fx(wide::sqrt(wide::from_fx(self)))
    }

    pub fn exp(self) -> FxResult {
        wide::exp(wide::from_fx(self)).ok_or(FxError::Overflow).and_then(wide::to_fx)
    }

    /// Natural logarithm.
    pub fn log(self) -> FxResult {
        if self.raw() <= 0 {
            return Err(FxError::Domain);
        }
        wide::to_fx(wide::ln(wide::from_fx(self)))
    }

    pub fn sin(self) -> Fx {
        let (s, _) = wide::sin_cos(wide::from_fx(self));
        wide::to_fx(s).expect("sine is bounded")
    }

    pub fn cos(self) -> Fx {
        let (_, c) = wide::sin_cos(wide::from_fx(self));
        wide::to_fx(c).expect("cosine is bounded")
    }

    /// Integer power by squaring. Negative exponents take the reciprocal.
    pub fn powi(self, n: i32) -> FxResult {
        let x = wide::from_fx(self);
        if n >= 0 {
            return wide::to_fx(wide::powi(x, n as u32)?);
        }
        if x == 0 {
            return Err(FxError::DivByZero);
        }
        match wide::powi(x, n.unsigned_abs()) {
            Ok(p) => wide::div(wide::ONE, p).ok_or(FxError::Overflow).and_then(wide::to_fx),
            // |x|^|n| beyond range: the reciprocal is below half an ulp.
            Err(_) => Ok(Fx::ZERO),
        }
    }

    /// `self^y`. Integral `y` goes through [`Fx::powi`]; otherwise the base
    /// must be non-negative.
    pub fn pow(self, y: Fx) -> FxResult {
        if y.is_integer() {
            return self.powi(y.raw() >> 16);
        }
        if self.is_negative() {
            return Err(FxError::Domain);
        }
        if self == Fx::ZERO {
            return if y.is_negative() { Err(FxError::DivByZero) } else { Ok(Fx::ZERO) };
        }
        wide::to_fx(wide::pow_pos(wide::from_fx(self), wide::from_fx(y))?)
    }

    /// Real `k`-th root. Negative radicands are accepted for odd `k`.
    pub fn nth_root(self, k: u32) -> FxResult {
        if k == 0 {
            return Err(FxError::Domain);
        }
        if k == 1 || self == Fx::ZERO {
            return Ok(self);
        }
        let x = wide::from_fx(self);
        let mag = x.abs();
        let root = wide::exp(wide::ln(mag) / k as i64).ok_or(FxError::Overflow)?;
        if x < 0 {
            if k & 1 == 0 {
                return Err(FxError::Domain);
            }
            wide::to_fx(-root)
        } else {
            wide::to_fx(root)
        }
    }
}
