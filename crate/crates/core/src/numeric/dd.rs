use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Unevaluated sum `hi + lo` of two doubles, roughly 32 significant decimal
/// digits.
#[derive(Clone, Copy, Default, PartialEq)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

#[allow(clippy::excessive_precision)]
const LN2: DoubleDouble = DoubleDouble {
    hi: std::f64::consts::LN_2,
    lo: 2.319046813846299558e-17,
};

// exp is evaluated as (1 + expm1(r / 2^SQUARINGS))^(2^SQUARINGS).
const SQUARINGS: i32 = 9;

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
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

    pub const fn from_f64(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }

    pub fn from_parts(hi: f64, lo: f64) -> Self {
        let (hi, lo) = two_sum(hi, lo);
        DoubleDouble { hi, lo }
    }

    /// Exact conversion for integers below `2^106`.
    pub fn from_u128(x: u128) -> Self {
        let hi = x as f64;
        let rest = x as i128 - hi as i128;
        DoubleDouble::from_parts(hi, rest as f64)
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
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

    pub fn is_finite(self) -> bool {
        self.hi.is_finite()
    }

    fn ldexp(self, e: i32) -> Self {
        let scale = 2f64.powi(e);
        DoubleDouble {
            hi: self.hi * scale,
            lo: self.lo * scale,
        }
    }

    pub fn powi(self, mut e: u32) -> Self {
        let mut base = self;
        let mut acc = DoubleDouble::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base *= base;
            e >>= 1;
        }
        acc
    }

    /// `expm1` for `|x| <= ln 2 / 2`, without cancellation.
    fn expm1_reduced(x: Self) -> Self {
        let r = x.ldexp(-SQUARINGS);
        // Taylor series of expm1(r); |r| < 7e-4 so 12 terms reach 1e-40.
        let mut term = r;
        let mut sum = r;
        for i in 2..=12 {
            term = term * r / DoubleDouble::from_f64(i as f64);
            sum += term;
            if term.hi.abs() < 1e-36 * sum.hi.abs() {
                break;
            }
        }
        for _ in 0..SQUARINGS {
            // expm1(2y) = expm1(y) * (2 + expm1(y))
            sum = sum * (sum + DoubleDouble::from_f64(2.0));
        }
        sum
    }

    pub fn exp(self) -> Self {
        if self.hi > 709.0 {
            return DoubleDouble::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return DoubleDouble::ZERO;
        }
        let k = (self.hi / LN2.hi).round();
        let r = self - LN2 * DoubleDouble::from_f64(k);
        (DoubleDouble::ONE + Self::expm1_reduced(r)).ldexp(k as i32)
    }

    pub fn exp_m1(self) -> Self {
        if self.hi.abs() <= 0.5 * LN2.hi {
            Self::expm1_reduced(self)
        } else {
            self.exp() - DoubleDouble::ONE
        }
    }
}

impl From<f64> for DoubleDouble {
    fn from(x: f64) -> Self {
        DoubleDouble::from_f64(x)
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

impl Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        DoubleDouble {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
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
        let r = self - rhs * DoubleDouble::from_f64(q1);
        let q2 = r.hi / rhs.hi;
        let r = r - rhs * DoubleDouble::from_f64(q2);
        let q3 = r.hi / rhs.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DoubleDouble { hi, lo } + DoubleDouble::from_f64(q3)
    }
}

impl AddAssign for DoubleDouble {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl SubAssign for DoubleDouble {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl MulAssign for DoubleDouble {
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}

impl fmt::Debug for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DoubleDouble({:e} + {:e})", self.hi, self.lo)
    }
}

impl fmt::Display for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", self.to_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: DoubleDouble, b: DoubleDouble) -> f64 {
        ((a - b) / b).abs().to_f64()
    }

    // Reference values from 50-digit arithmetic, split into (hi, lo).
    fn dd(hi: f64, lo: f64) -> DoubleDouble {
        DoubleDouble::from_parts(hi, lo)
    }

    #[test]
    fn arithmetic_is_exact_for_small_integers() {
        let a = DoubleDouble::from_u128(3u128.pow(60));
        let b = DoubleDouble::from_u128(7);
        assert_eq!(a * b, DoubleDouble::from_u128(3u128.pow(60) * 7));
        assert_eq!(DoubleDouble::from_u128(1u128 << 100).hi(), 2f64.powi(100));
    }

    #[test]
    fn one_third_has_double_double_accuracy() {
        let third = DoubleDouble::ONE / DoubleDouble::from_f64(3.0);
        let back = third * DoubleDouble::from_f64(3.0);
        assert!((back - DoubleDouble::ONE).abs().to_f64() < 1e-31);
    }

    #[test]
    fn exp_matches_reference() {
        // e^-3.7 = 0.024723526470339386810976849015351902178770...
        let got = DoubleDouble::from_f64(-3.7).exp();
        let want = dd(0.024723526470339388, -1.294857794723138e-18);
        assert!(rel(got, want) < 1e-30, "{got:?}");
        // e^1 = 2.718281828459045235360287471352662497757...
        let e = DoubleDouble::ONE.exp();
        let want = dd(std::f64::consts::E, 1.4456468917292502e-16);
        assert!(rel(e, want) < 1e-30, "{e:?}");
    }

    #[test]
    fn exp_m1_small_arguments() {
        // expm1(1e-20) = 1e-20 + 5e-41
        let x = DoubleDouble::from_f64(1e-20);
        let got = x.exp_m1();
        assert!(rel(got, x) < 1e-20);
        let one_minus = DoubleDouble::ONE - DoubleDouble::from_f64(-1e-20).exp();
        assert!((one_minus.to_f64() - 1e-20).abs() < 1e-33);
    }

    #[test]
    fn exp_inverse_pairs() {
        for &x in &[-50.0, -7.25, -0.3, 0.0, 0.3, 2.5, 40.0] {
            let a = DoubleDouble::from_f64(x).exp();
            let b = DoubleDouble::from_f64(-x).exp();
            assert!(((a * b) - DoubleDouble::ONE).abs().to_f64() < 1e-30, "x = {x}");
        }
    }

    #[test]
    fn powi_matches_repeated_product() {
        let x = DoubleDouble::from_f64(0.987654321);
        let mut p = DoubleDouble::ONE;
        for _ in 0..13 {
            p *= x;
        }
        assert!(rel(x.powi(13), p) < 1e-30);
    }
}
