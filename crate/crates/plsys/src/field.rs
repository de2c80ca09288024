//! Exact scalar fields: arbitrary-precision rationals and prime fields.
//!
//! Every pipeline runs over one field chosen up front. All arithmetic is
//! exact; there is no floating-point mode.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScalarParseError {
    #[error("cannot parse scalar {text:?} for field {field}: {reason}")]
    Malformed {
        text: String,
        field: String,
        reason: String,
    },
    #[error("division by zero while parsing scalar {text:?}")]
    DivisionByZero { text: String },
}

/// An exact field of scalars. Implementations must satisfy the field axioms
/// exactly; equality is decidable and canonical.
pub trait Field:
    Clone
    + PartialEq
    + Eq
    + fmt::Debug
    + fmt::Display
    + std::hash::Hash
    + Zero
    + One
    + Neg<Output = Self>
    + Sub<Output = Self>
    + Add<Output = Self>
    + Mul<Output = Self>
    + Send
    + Sync
    + 'static
{
    /// Multiplicative inverse; `None` exactly on zero.
    fn inv(&self) -> Option<Self>;

    fn from_int(n: i64) -> Self;

    /// Parse the exact string form used in all file formats ("3/2", "-7", "2").
    fn parse(text: &str) -> Result<Self, ScalarParseError>;

    /// Field tag used in file headers: "Q" or "F<p>".
    fn field_tag() -> String;

    /// Exact string form; `parse(render(x)) == x`.
    fn render(&self) -> String {
        self.to_string()
    }
}

impl Field for BigRational {
    fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(self.recip())
        }
    }

    fn from_int(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn parse(text: &str) -> Result<Self, ScalarParseError> {
        let trimmed = text.trim();
        let (num, den) = match trimmed.split_once('/') {
            Some((n, d)) => (n.trim(), Some(d.trim())),
            None => (trimmed, None),
        };
        let numer: BigInt = num.parse().map_err(|e| ScalarParseError::Malformed {
            text: text.to_owned(),
            field: "Q".to_owned(),
            reason: format!("{e}"),
        })?;
        let denom: BigInt = match den {
            Some(d) => d.parse().map_err(|e| ScalarParseError::Malformed {
                text: text.to_owned(),
                field: "Q".to_owned(),
                reason: format!("{e}"),
            })?,
            None => BigInt::one(),
        };
        if denom.is_zero() {
            return Err(ScalarParseError::DivisionByZero {
                text: text.to_owned(),
            });
        }
        Ok(BigRational::new(numer, denom))
    }

    fn field_tag() -> String {
        "Q".to_owned()
    }
}

/// The rational scalar type used by default throughout the pipeline.
pub type Rational = BigRational;

/// Element of the prime field F_p for a compile-time prime `P`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fp<const P: u64>(u64);

impl<const P: u64> Fp<P> {
    pub fn new(value: i64) -> Self {
        let p = P as i128;
        let v = ((value as i128 % p) + p) % p;
        Fp(v as u64)
    }

    pub fn value(self) -> u64 {
        self.0
    }

    fn pow(self, mut exp: u64) -> Self {
        let mut base = self;
        let mut acc = Fp::<P>(1 % P);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            exp >>= 1;
        }
        acc
    }
}

impl<const P: u64> fmt::Debug for Fp<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl<const P: u64> fmt::Display for Fp<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl<const P: u64> Add for Fp<P> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Fp((self.0 + rhs.0) % P)
    }
}

impl<const P: u64> Sub for Fp<P> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Fp((self.0 + P - rhs.0) % P)
    }
}

impl<const P: u64> Mul for Fp<P> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Fp(((self.0 as u128 * rhs.0 as u128) % P as u128) as u64)
    }
}

impl<const P: u64> Neg for Fp<P> {
    type Output = Self;
    fn neg(self) -> Self {
        Fp((P - self.0) % P)
    }
}

impl<const P: u64> Zero for Fp<P> {
    fn zero() -> Self {
        Fp(0)
    }
    fn is_zero(&self) -> bool {
        self.0 == 0
    }
}

impl<const P: u64> One for Fp<P> {
    fn one() -> Self {
        Fp(1 % P)
    }
}

impl<const P: u64> Field for Fp<P> {
    fn inv(&self) -> Option<Self> {
        if self.0 == 0 {
            None
        } else {
            // Fermat: a^(p-2) for prime p.
            Some(self.pow(P - 2))
        }
    }

    fn from_int(n: i64) -> Self {
        Fp::new(n)
    }

    fn parse(text: &str) -> Result<Self, ScalarParseError> {
        let trimmed = text.trim();
        let (num, den) = match trimmed.split_once('/') {
            Some((n, d)) => (n.trim(), Some(d.trim())),
            None => (trimmed, None),
        };
        let numer: i64 = num.parse().map_err(|e| ScalarParseError::Malformed {
            text: text.to_owned(),
            field: Self::field_tag(),
            reason: format!("{e}"),
        })?;
        let result = Fp::new(numer);
        match den {
            None => Ok(result),
            Some(d) => {
                let denom: i64 = d.parse().map_err(|e| ScalarParseError::Malformed {
                    text: text.to_owned(),
                    field: Self::field_tag(),
                    reason: format!("{e}"),
                })?;
                let denom = Fp::new(denom);
                match denom.inv() {
                    Some(inv) => Ok(result * inv),
                    None => Err(ScalarParseError::DivisionByZero {
                        text: text.to_owned(),
                    }),
                }
            }
        }
    }

    fn field_tag() -> String {
        format!("F{P}")
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Signed helper for orientation bookkeeping.
pub fn from_sign<S: Field>(sign: i8) -> S {
    match sign {
        1 => S::one(),
        -1 => -S::one(),
        0 => S::zero(),
        other => S::from_int(other as i64),
    }
}

/// Renders a rational compactly ("2" rather than "2/1").
pub fn render_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else if r.denom().is_negative() {
        // num-rational keeps denominators positive, but be canonical anyway.
        format!("{}/{}", -r.numer(), -r.denom())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_round_trip() {
        let x = <BigRational as Field>::parse("3/2").unwrap();
        assert_eq!(x, BigRational::new(BigInt::from(3), BigInt::from(2)));
        assert_eq!(<BigRational as Field>::parse(&x.render()).unwrap(), x);
        assert_eq!(<BigRational as Field>::parse("-7").unwrap(), Field::from_int(-7));
        assert!(<BigRational as Field>::parse("1/0").is_err());
        assert!(<BigRational as Field>::parse("x").is_err());
    }

    #[test]
    fn fp_axioms_small() {
        type F5 = Fp<5>;
        for a in 0..5i64 {
            for b in 0..5i64 {
                let x = F5::new(a);
                let y = F5::new(b);
                assert_eq!(x + y, F5::new(a + b));
                assert_eq!(x * y, F5::new(a * b));
                assert_eq!(x - y, F5::new(a - b));
            }
            let x = F5::new(a);
            if a % 5 != 0 {
                assert_eq!(x * x.inv().unwrap(), F5::new(1));
            } else {
                assert!(x.inv().is_none());
            }
        }
    }

    #[test]
    fn fp_parse_fraction() {
        type F7 = Fp<7>;
        // 3/2 = 3 * 4 = 12 = 5 mod 7
        assert_eq!(<F7 as Field>::parse("3/2").unwrap(), F7::new(5));
        assert!(<F7 as Field>::parse("1/7").is_err());
    }

    #[test]
    fn primality() {
        let primes: Vec<u64> = (0..60).filter(|&n| is_prime(n)).collect();
        assert_eq!(primes, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59]);
    }
}
