//! Double-double floating point and truncated series values.
//!
//! Infinite products and sums are evaluated in double-double arithmetic
//! (about 106 bits of mantissa) and reported as a [`TruncatedSeriesValue`],
//! i.e. a value together with a rigorous bound on the truncation error.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub const ZERO: DoubleDouble = DoubleDouble { hi: 0.0, lo: 0.0 };
    pub const ONE: DoubleDouble = DoubleDouble { hi: 1.0, lo: 0.0 };

    pub fn new(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }

    /// Rounds an exact rational to the nearest double-double (up to a few ulps).
    pub fn from_rational(r: &BigRational) -> Self {
        if r.is_zero() {
            return Self::ZERO;
        }
        let neg = r.is_negative();
        let num = r.numer().abs();
        let den = r.denom().clone();
        // Scale so the integer quotient carries ~120 significant bits.
        let shift = 120i64 - (num.bits() as i64 - den.bits() as i64);
        let scaled = if shift >= 0 {
            (num << shift as usize) / den
        } else {
            num / (den << (-shift) as usize)
        };
        let v = Self::from_bigint(&scaled).ldexp(-shift as i32);
        if neg {
            -v
        } else {
            v
        }
    }

    fn from_bigint(n: &BigInt) -> Self {
        let hi = n.to_f64().unwrap_or(f64::INFINITY);
        if !hi.is_finite() {
            return Self::new(hi);
        }
        let rest = n - BigInt::from(hi as i128);
        let lo = rest.to_f64().unwrap_or(0.0);
        let (h, l) = quick_two_sum(hi, lo);
        DoubleDouble { hi: h, lo: l }
    }

    fn ldexp(self, exp: i32) -> Self {
        let f = 2f64.powi(exp);
        if f.is_finite() && f != 0.0 {
            DoubleDouble { hi: self.hi * f, lo: self.lo * f }
        } else {
            // Split the scaling to stay inside the exponent range.
            let half = exp / 2;
            self.ldexp(half).ldexp(exp - half)
        }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn recip(self) -> Self {
        Self::ONE / self
    }

    /// Integer power by repeated squaring; negative exponents invert.
    pub fn powi(self, n: i64) -> Self {
        if n < 0 {
            return self.powi(-n).recip();
        }
        let mut result = Self::ONE;
        let mut base = self;
        let mut e = n as u64;
        while e > 0 {
            if e & 1 == 1 {
                result = result * base;
            }
            base = base * base;
            e >>= 1;
        }
        result
    }

    /// Square root via one Newton step on the f64 estimate.
    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Self::ZERO;
        }
        let x = self.hi.sqrt();
        let xd = Self::new(x);
        xd + (self - xd * xd) / (Self::new(2.0) * xd)
    }
}

impl From<f64> for DoubleDouble {
    fn from(x: f64) -> Self {
        Self::new(x)
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        DoubleDouble { hi: -self.hi, lo: -self.lo }
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let (s, e) = two_sum(self.hi, rhs.hi);
        let (t, f) = two_sum(self.lo, rhs.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DoubleDouble { hi, lo }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let (p, e) = two_prod(self.hi, rhs.hi);
        let e = e + (self.hi * rhs.lo + self.lo * rhs.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DoubleDouble { hi, lo }
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let q1 = self.hi / rhs.hi;
        let r = self - rhs * Self::new(q1);
        let q2 = r.hi / rhs.hi;
        let r = r - rhs * Self::new(q2);
        let q3 = r.hi / rhs.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DoubleDouble { hi, lo } + Self::new(q3)
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            o => o,
        }
    }
}

impl fmt::Display for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

/// Relative rounding slack granted to double-double evaluations of
/// moderately long products and sums.
pub const DD_ROUNDING: f64 = 1e-28;

/// Rounding allowance for a value computed with `ops` double-double operations
/// and then rounded to `f64`.
pub fn rounding_slack(value: f64, ops: f64) -> f64 {
    value.abs() * (f64::EPSILON + DD_ROUNDING * ops)
}

/// Renders a float with `precision` digits after the decimal point, switching
/// to scientific notation for magnitudes below `1e-4` so small bounds stay visible.
pub fn format_float(x: f64, precision: usize) -> String {
    if x == 0.0 || !x.is_finite() || x.abs() >= 1e-4 {
        format!("{x:.precision$}")
    } else {
        format!("{x:.precision$e}")
    }
}

/// A float value together with a rigorous bound on its truncation error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncatedSeriesValue {
    pub value: f64,
    pub tail_bound: f64,
}

impl TruncatedSeriesValue {
    pub fn new(value: f64, tail_bound: f64) -> Self {
        debug_assert!(tail_bound >= 0.0, "negative tail bound {tail_bound}");
        TruncatedSeriesValue { value, tail_bound }
    }

    pub fn exact(value: f64) -> Self {
        Self::new(value, 0.0)
    }

    /// Whether `x` lies within `tail_bound + slack` of the value.
    pub fn contains(&self, x: f64, slack: f64) -> bool {
        (self.value - x).abs() <= self.tail_bound + slack
    }
}

/// Bound on `|P - P_N|` where `P_N` is a partial product and the omitted
/// factors are `(1 + x_j)` with `sum |x_j| <= tail_sum` and every `|x_j| <= x_max < 1`.
pub fn product_tail_bound(partial: f64, tail_sum: f64, x_max: f64) -> f64 {
    assert!(x_max < 1.0, "product factor too large for a log bound");
    let log_tail = tail_sum / (1.0 - x_max);
    partial.abs() * log_tail.exp_m1()
}

/// Bound on `|1/P - 1/P_N|` under the same hypotheses as [`product_tail_bound`].
pub fn reciprocal_product_tail_bound(partial: f64, tail_sum: f64, x_max: f64) -> f64 {
    assert!(x_max < 1.0, "product factor too large for a log bound");
    let log_tail = tail_sum / (1.0 - x_max);
    log_tail.exp_m1() / partial.abs()
}

/// Sum of the geometric tail `first + first*ratio + ...` for `0 <= ratio < 1`.
pub fn geometric_tail(first: f64, ratio: f64) -> f64 {
    assert!((0.0..1.0).contains(&ratio), "ratio {ratio} outside [0,1)");
    first / (1.0 - ratio)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    #[test]
    fn double_double_beats_f64() {
        // (1 + 2^-60) - 1 survives in double-double.
        let a = DoubleDouble::ONE + DoubleDouble::new(2f64.powi(-60));
        let d = a - DoubleDouble::ONE;
        assert_eq!(d.to_f64(), 2f64.powi(-60));
    }

    #[test]
    fn division_round_trip() {
        let third = DoubleDouble::ONE / DoubleDouble::new(3.0);
        let back = third * DoubleDouble::new(3.0) - DoubleDouble::ONE;
        assert!(back.to_f64().abs() < 1e-31);
    }

    #[test]
    fn rational_conversion_is_close() {
        let r = BigRational::new(BigInt::from(1), BigInt::from(3));
        let d = DoubleDouble::from_rational(&r);
        let err = d * DoubleDouble::new(3.0) - DoubleDouble::ONE;
        assert!(err.to_f64().abs() < 1e-30);
        let big = BigRational::new(BigInt::from(7) << 300usize, BigInt::from(11));
        let d = DoubleDouble::from_rational(&big);
        let expect = 7.0 / 11.0 * 2f64.powi(300);
        assert!((d.to_f64() / expect - 1.0).abs() < 1e-15);
        let tiny = BigRational::new(BigInt::from(1), BigInt::from(5) << 2000usize);
        assert_eq!(DoubleDouble::from_rational(&tiny).to_f64(), 0.0);
    }

    #[test]
    fn powi_and_sqrt() {
        let two = DoubleDouble::new(2.0);
        assert_eq!(two.powi(10).to_f64(), 1024.0);
        assert_eq!(two.powi(-3).to_f64(), 0.125);
        let s = two.sqrt();
        assert!((s * s - two).to_f64().abs() < 1e-30);
    }

    #[test]
    fn tail_bounds_are_conservative() {
        // prod_{j>=1} (1 + 2^-j) truncated at 10 factors.
        let mut p = 1.0;
        for j in 1..=10 {
            p *= 1.0 + 2f64.powi(-j);
        }
        let mut full = p;
        for j in 11..200 {
            full *= 1.0 + 2f64.powi(-j);
        }
        let b = product_tail_bound(p, 2f64.powi(-10), 2f64.powi(-11));
        assert!((full - p).abs() <= b);
        assert!(b < 1e-2);
    }
}
