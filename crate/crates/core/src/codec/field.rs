use std::fmt::{self, Debug, Display};
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldMode {
    /// Floating-point arithmetic over the reals.
    Real,
    /// Exact arithmetic modulo `2^31 - 1`.
    Prime,
}

impl std::str::FromStr for FieldMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(FieldMode::Real),
            "prime" => Ok(FieldMode::Prime),
            other => Err(Error::invalid(format!("unknown field '{other}', expected real or prime"))),
        }
    }
}

/// Arithmetic needed by the codec.
pub trait Scalar:
    Copy
    + Debug
    + Display
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    const MODE: FieldMode;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    /// Real value, when the field has one.
    fn from_f64(v: f64) -> Option<Self>;
    /// Multiplicative inverse, `None` for zero.
    fn inv(self) -> Option<Self>;
    /// Size used to choose pivots; any nonzero element will do in a field.
    fn magnitude(self) -> f64;
    fn is_finite(self) -> bool;
    fn parse(text: &str) -> Result<Self>;
}

impl Scalar for f64 {
    const MODE: FieldMode = FieldMode::Real;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn from_f64(v: f64) -> Option<Self> {
        Some(v)
    }
    fn inv(self) -> Option<Self> {
        (self != 0.0).then(|| 1.0 / self)
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn parse(text: &str) -> Result<Self> {
        text.trim()
            .parse::<f64>()
            .map_err(|e| Error::invalid(format!("bad number '{text}': {e}")))
    }
}

/// Element of the prime field of order `2^31 - 1`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Fp(u32);

impl Fp {
    pub const MODULUS: u64 = (1 << 31) - 1;

    pub fn new(v: u64) -> Self {
        Fp((v % Self::MODULUS) as u32)
    }

    pub fn value(self) -> u64 {
        self.0 as u64
    }

    /// Representative in `(-p/2, p/2]`, the inverse of the lift of signed
    /// integers.
    pub fn to_signed(self) -> i64 {
        let v = self.0 as i64;
        if v > (Self::MODULUS as i64) / 2 {
            v - Self::MODULUS as i64
        } else {
            v
        }
    }

    pub fn pow(self, mut e: u64) -> Self {
        let mut base = self;
        let mut acc = Fp(1);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }
}

impl Add for Fp {
    type Output = Fp;
    fn add(self, rhs: Fp) -> Fp {
        Fp::new(self.0 as u64 + rhs.0 as u64)
    }
}

impl Sub for Fp {
    type Output = Fp;
    fn sub(self, rhs: Fp) -> Fp {
        Fp::new(self.0 as u64 + Fp::MODULUS - rhs.0 as u64)
    }
}

impl Mul for Fp {
    type Output = Fp;
    fn mul(self, rhs: Fp) -> Fp {
        Fp::new(self.0 as u64 * rhs.0 as u64)
    }
}

impl Neg for Fp {
    type Output = Fp;
    fn neg(self) -> Fp {
        Fp::new(Fp::MODULUS - self.0 as u64)
    }
}

impl Debug for Fp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fp({})", self.0)
    }
}

impl Display for Fp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_signed())
    }
}

impl Scalar for Fp {
    const MODE: FieldMode = FieldMode::Prime;

    fn zero() -> Self {
        Fp(0)
    }
    fn one() -> Self {
        Fp(1)
    }
    fn from_i64(v: i64) -> Self {
        Fp(v.rem_euclid(Fp::MODULUS as i64) as u32)
    }
    fn from_f64(_: f64) -> Option<Self> {
        None
    }
    fn inv(self) -> Option<Self> {
        (self.0 != 0).then(|| self.pow(Fp::MODULUS - 2))
    }
    fn magnitude(self) -> f64 {
        if self.0 == 0 {
            0.0
        } else {
            1.0
        }
    }
    fn is_finite(self) -> bool {
        true
    }
    fn parse(text: &str) -> Result<Self> {
        let v: i64 = text
            .trim()
            .parse()
            .map_err(|e| Error::invalid(format!("prime-field entries must be integers, got '{text}': {e}")))?;
        Ok(Fp::from_i64(v))
    }
}
