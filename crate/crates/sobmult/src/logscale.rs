//! Log-scale scalars.
//!
//! Sobolev energies of symbols like `exp(1/x)` near the origin take values
//! such as e^(2^42), and the node heights of the constructed denominators
//! shrink correspondingly fast. Neither end of that range is representable as
//! an `f64`, so every energy, clamp value and node height in this crate is
//! carried as its natural logarithm. [`Magnitude`] is a nonnegative real in
//! log storage; [`LnScalar`] adds a sign and is what the stable expression
//! evaluator produces.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

/// A nonnegative extended real `exp(ln)`, stored as `ln`.
///
/// `ln = -inf` encodes zero. `ln` is never NaN.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Magnitude {
    ln: f64,
}

impl Magnitude {
    pub const ZERO: Magnitude = Magnitude { ln: f64::NEG_INFINITY };
    pub const ONE: Magnitude = Magnitude { ln: 0.0 };

    /// Wraps a plain nonnegative value.
    pub fn from_value(v: f64) -> Magnitude {
        assert!(v >= 0.0, "Magnitude requires a nonnegative value, got {v}");
        Magnitude { ln: v.ln() }
    }

    pub fn from_ln(ln: f64) -> Magnitude {
        assert!(!ln.is_nan(), "Magnitude log must not be NaN");
        Magnitude { ln }
    }

    /// The plain value; overflows to `inf` / underflows to 0 outside f64 range.
    pub fn value(self) -> f64 {
        self.ln.exp()
    }

    pub fn ln(self) -> f64 {
        self.ln
    }

    pub fn is_zero(self) -> bool {
        self.ln == f64::NEG_INFINITY
    }

    /// True unless the magnitude itself is infinite.
    pub fn is_finite(self) -> bool {
        self.ln < f64::INFINITY
    }

    pub fn recip(self) -> Magnitude {
        Magnitude { ln: -self.ln }
    }

    pub fn sqrt(self) -> Magnitude {
        Magnitude { ln: 0.5 * self.ln }
    }

    pub fn powi(self, n: i32) -> Magnitude {
        if n == 0 {
            return Magnitude::ONE;
        }
        Magnitude { ln: self.ln * f64::from(n) }
    }

    pub fn max(self, other: Magnitude) -> Magnitude {
        if self.ln >= other.ln { self } else { other }
    }

    pub fn min(self, other: Magnitude) -> Magnitude {
        if self.ln <= other.ln { self } else { other }
    }

    /// `|self - other|`, exact to the precision of the larger operand.
    pub fn abs_diff(self, other: Magnitude) -> Magnitude {
        let (hi, lo) = if self.ln >= other.ln { (self, other) } else { (other, self) };
        if lo.is_zero() {
            return hi;
        }
        if hi.ln == lo.ln {
            return Magnitude::ZERO;
        }
        Magnitude { ln: hi.ln + (-((lo.ln - hi.ln).exp())).ln_1p() }
    }

    /// Ratio as a plain f64, `inf`/0 when out of range, NaN only for 0/0.
    pub fn ratio(self, denom: Magnitude) -> f64 {
        if self.is_zero() && denom.is_zero() {
            return f64::NAN;
        }
        (self.ln - denom.ln).exp()
    }
}

impl std::ops::Mul for Magnitude {
    type Output = Magnitude;
    fn mul(self, rhs: Magnitude) -> Magnitude {
        if self.is_zero() || rhs.is_zero() {
            return Magnitude::ZERO;
        }
        Magnitude { ln: self.ln + rhs.ln }
    }
}

impl std::ops::Div for Magnitude {
    type Output = Magnitude;
    fn div(self, rhs: Magnitude) -> Magnitude {
        if self.is_zero() {
            return Magnitude::ZERO;
        }
        Magnitude { ln: self.ln - rhs.ln }
    }
}

impl std::ops::Add for Magnitude {
    type Output = Magnitude;
    fn add(self, rhs: Magnitude) -> Magnitude {
        let (hi, lo) = if self.ln >= rhs.ln { (self, rhs) } else { (rhs, self) };
        if lo.is_zero() {
            return hi;
        }
        Magnitude { ln: hi.ln + (lo.ln - hi.ln).exp().ln_1p() }
    }
}

impl PartialOrd for Magnitude {
    fn partial_cmp(&self, other: &Magnitude) -> Option<std::cmp::Ordering> {
        Some(self.ln.total_cmp(&other.ln))
    }
}

/// Serialized as `{ "ln": ..., "value": ... }` with `value` null whenever the
/// plain representation would overflow to infinity.
impl Serialize for Magnitude {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Magnitude", 2)?;
        s.serialize_field("ln", &self.ln)?;
        let v = self.value();
        if v.is_finite() {
            s.serialize_field("value", &v)?;
        } else {
            s.serialize_field("value", &Option::<f64>::None)?;
        }
        s.end()
    }
}

/// A signed real `sign * exp(ln_abs)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LnScalar {
    sign: i8,
    ln_abs: f64,
}

impl LnScalar {
    pub const ZERO: LnScalar = LnScalar { sign: 0, ln_abs: f64::NEG_INFINITY };
    pub const ONE: LnScalar = LnScalar { sign: 1, ln_abs: 0.0 };

    pub fn new(sign: i8, ln_abs: f64) -> LnScalar {
        assert!(!ln_abs.is_nan());
        if sign == 0 || ln_abs == f64::NEG_INFINITY {
            LnScalar::ZERO
        } else {
            LnScalar { sign: sign.signum(), ln_abs }
        }
    }

    pub fn from_value(v: f64) -> LnScalar {
        assert!(!v.is_nan(), "LnScalar requires a non-NaN value");
        if v == 0.0 {
            LnScalar::ZERO
        } else {
            LnScalar { sign: if v > 0.0 { 1 } else { -1 }, ln_abs: v.abs().ln() }
        }
    }

    pub fn from_magnitude(m: Magnitude) -> LnScalar {
        LnScalar::new(1, m.ln())
    }

    pub fn to_f64(self) -> f64 {
        f64::from(self.sign) * self.ln_abs.exp()
    }

    pub fn sign(self) -> i8 {
        self.sign
    }

    pub fn ln_abs(self) -> f64 {
        self.ln_abs
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    pub fn magnitude(self) -> Magnitude {
        if self.sign == 0 { Magnitude::ZERO } else { Magnitude::from_ln(self.ln_abs) }
    }

    pub fn abs(self) -> LnScalar {
        LnScalar { sign: self.sign.abs(), ln_abs: self.ln_abs }
    }

    pub fn powi(self, n: i32) -> LnScalar {
        if n == 0 {
            return LnScalar::ONE;
        }
        if self.sign == 0 {
            // 0^negative is a caller-side domain error; keep this total.
            return if n > 0 { LnScalar::ZERO } else { LnScalar { sign: 1, ln_abs: f64::INFINITY } };
        }
        let sign = if n % 2 == 0 { 1 } else { self.sign };
        LnScalar { sign, ln_abs: self.ln_abs * f64::from(n) }
    }
}

impl std::ops::Neg for LnScalar {
    type Output = LnScalar;
    fn neg(self) -> LnScalar {
        LnScalar { sign: -self.sign, ln_abs: self.ln_abs }
    }
}

impl std::ops::Mul for LnScalar {
    type Output = LnScalar;
    fn mul(self, rhs: LnScalar) -> LnScalar {
        if self.sign == 0 || rhs.sign == 0 {
            return LnScalar::ZERO;
        }
        LnScalar { sign: self.sign * rhs.sign, ln_abs: self.ln_abs + rhs.ln_abs }
    }
}

impl std::ops::Div for LnScalar {
    type Output = LnScalar;
    fn div(self, rhs: LnScalar) -> LnScalar {
        if self.sign == 0 {
            return LnScalar::ZERO;
        }
        LnScalar { sign: self.sign * rhs.sign, ln_abs: self.ln_abs - rhs.ln_abs }
    }
}

impl std::ops::Add for LnScalar {
    type Output = LnScalar;
    fn add(self, rhs: LnScalar) -> LnScalar {
        if self.sign == 0 {
            return rhs;
        }
        if rhs.sign == 0 {
            return self;
        }
        let (hi, lo) = if self.ln_abs >= rhs.ln_abs { (self, rhs) } else { (rhs, self) };
        if self.sign == rhs.sign {
            return LnScalar { sign: hi.sign, ln_abs: hi.ln_abs + (lo.ln_abs - hi.ln_abs).exp().ln_1p() };
        }
        if hi.ln_abs == lo.ln_abs {
            return LnScalar::ZERO;
        }
        let ln_abs = hi.ln_abs + (-((lo.ln_abs - hi.ln_abs).exp())).ln_1p();
        if ln_abs == f64::NEG_INFINITY {
            LnScalar::ZERO
        } else {
            LnScalar { sign: hi.sign, ln_abs }
        }
    }
}

impl std::ops::Sub for LnScalar {
    type Output = LnScalar;
    fn sub(self, rhs: LnScalar) -> LnScalar {
        self + (-rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn magnitude_roundtrip_and_arithmetic() {
        let a = Magnitude::from_value(3.0);
        let b = Magnitude::from_value(4.0);
        assert_relative_eq!((a * b).value(), 12.0, max_relative = 1e-15);
        assert_relative_eq!((a + b).value(), 7.0, max_relative = 1e-15);
        assert_relative_eq!((b / a).value(), 4.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(b.sqrt().value(), 2.0, max_relative = 1e-15);
        assert!(a < b);
        assert_eq!(Magnitude::ZERO + a, a);
        assert_eq!(Magnitude::ZERO * a, Magnitude::ZERO);
    }

    #[test]
    fn magnitude_handles_extreme_range() {
        let huge = Magnitude::from_ln(5e12);
        let tiny = Magnitude::from_ln(-5e12);
        assert!(huge.is_finite());
        assert!((huge * tiny).ln().abs() < 1e-3);
        assert_eq!(huge.value(), f64::INFINITY);
        assert_eq!(tiny.value(), 0.0);
        assert!(!tiny.is_zero());
        // Addition is dominated by the larger term far below f64 resolution.
        assert_eq!((huge + tiny).ln(), 5e12);
    }

    #[test]
    fn magnitude_abs_diff() {
        let a = Magnitude::from_value(10.0);
        let b = Magnitude::from_value(4.0);
        assert_relative_eq!(a.abs_diff(b).value(), 6.0, max_relative = 1e-14);
        assert_eq!(a.abs_diff(a), Magnitude::ZERO);
    }

    #[test]
    fn ln_scalar_signed_sums() {
        let a = LnScalar::from_value(5.0);
        let b = LnScalar::from_value(-3.0);
        assert_relative_eq!((a + b).to_f64(), 2.0, max_relative = 1e-14);
        assert_relative_eq!((a - b).to_f64(), 8.0, max_relative = 1e-14);
        assert_relative_eq!((a * b).to_f64(), -15.0, max_relative = 1e-14);
        assert_relative_eq!((b / a).to_f64(), -0.6, max_relative = 1e-14);
        assert_eq!((a - a).sign(), 0);
        assert_relative_eq!(a.powi(3).to_f64(), 125.0, max_relative = 1e-13);
        assert_relative_eq!(b.powi(2).to_f64(), 9.0, max_relative = 1e-14);
        assert_eq!(LnScalar::from_value(0.0), LnScalar::ZERO);
    }

    #[test]
    fn magnitude_serializes_value_or_null() {
        let j = serde_json::to_string(&Magnitude::from_value(2.0)).unwrap();
        assert!(j.contains("\"value\":2.0"));
        let j = serde_json::to_string(&Magnitude::from_ln(1e12)).unwrap();
        assert!(j.contains("\"value\":null"));
    }
}
