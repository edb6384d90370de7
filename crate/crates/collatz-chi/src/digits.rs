//! Digit strings over a base rho.
//!
//! Index 1 is the least significant digit: the string (j_1, ..., j_L)
//! represents j_1 + j_2 rho + ... + j_L rho^(L-1). The empty string
//! represents 0 and is the identity for concatenation. Trailing zeros do not
//! change the represented integer, so distinct strings may represent the same
//! value; equality on `DigitString` is literal tuple equality.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::qadic::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DigitString {
    rho: u32,
    digits: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DigitError {
    BadBase(u32),
    DigitOutOfRange { digit: u32, rho: u32 },
    BaseMismatch { left: u32, right: u32 },
}

impl fmt::Display for DigitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DigitError::BadBase(rho) => write!(f, "base {rho} is below 2"),
            DigitError::DigitOutOfRange { digit, rho } => {
                write!(f, "digit {digit} out of range for base {rho}")
            }
            DigitError::BaseMismatch { left, right } => {
                write!(f, "base mismatch: {left} vs {right}")
            }
        }
    }
}

impl std::error::Error for DigitError {}

impl DigitString {
    pub fn new(rho: u32, digits: Vec<u32>) -> Result<DigitString, DigitError> {
        if rho < 2 {
            return Err(DigitError::BadBase(rho));
        }
        if let Some(&digit) = digits.iter().find(|&&d| d >= rho) {
            return Err(DigitError::DigitOutOfRange { digit, rho });
        }
        Ok(DigitString { rho, digits })
    }

    /// Shortest representation of n: no trailing zeros, length lambda_rho(n).
    pub fn from_integer(n: u64, rho: u32) -> DigitString {
        assert!(rho >= 2, "base must be at least 2");
        let mut digits = Vec::new();
        let mut m = n;
        while m > 0 {
            digits.push((m % rho as u64) as u32);
            m /= rho as u64;
        }
        DigitString { rho, digits }
    }

    /// The represented integer, invariant under trailing zeros.
    pub fn to_integer(&self) -> BigUint {
        let rho = BigUint::from(self.rho);
        let mut acc = BigUint::zero();
        for &d in self.digits.iter().rev() {
            acc = acc * &rho + BigUint::from(d);
        }
        acc
    }

    pub fn rho(&self) -> u32 {
        self.rho
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    /// Count of the digit k in this literal tuple (trailing zeros included).
    pub fn count(&self, k: u32) -> usize {
        self.digits.iter().filter(|&&d| d == k).count()
    }

    /// (self_1, ..., self_L, other_1, ..., other_M); the represented value is
    /// self + rho^L * other.
    pub fn concat(&self, other: &DigitString) -> Result<DigitString, DigitError> {
        if self.rho != other.rho {
            return Err(DigitError::BaseMismatch { left: self.rho, right: other.rho });
        }
        let mut digits = self.digits.clone();
        digits.extend_from_slice(&other.digits);
        Ok(DigitString { rho: self.rho, digits })
    }

    /// m concatenated copies of self, m >= 1.
    pub fn repeat(&self, m: usize) -> DigitString {
        assert!(m >= 1, "repeat count must be at least 1");
        let mut digits = Vec::with_capacity(self.digits.len() * m);
        for _ in 0..m {
            digits.extend_from_slice(&self.digits);
        }
        DigitString { rho: self.rho, digits }
    }
}

impl fmt::Display for DigitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, d) in self.digits.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, ")")
    }
}

/// Number of base-rho digits of n: 0 at 0, floor(log_rho n) + 1 otherwise.
/// Pure integer arithmetic; no floating logs.
pub fn lambda_rho(n: u64, rho: u32) -> u32 {
    assert!(rho >= 2, "base must be at least 2");
    let mut m = n;
    let mut count = 0;
    while m > 0 {
        m /= rho as u64;
        count += 1;
    }
    count
}

/// Count of the digit k in the shortest expansion of n.
pub fn count_digit(n: u64, k: u32, rho: u32) -> u32 {
    assert!(k < rho, "digit out of range");
    let mut m = n;
    let mut count = 0;
    while m > 0 {
        if (m % rho as u64) as u32 == k {
            count += 1;
        }
        m /= rho as u64;
    }
    count
}

/// The rational n / (1 - rho^lambda_rho(n)), and 0 at n = 0. Its base-rho
/// digit stream is the expansion of n repeated forever (padded to length
/// lambda), so it lies in Z_rho: the reduced denominator is coprime to rho.
pub fn b_rho(n: u64, rho: u32) -> Rational {
    assert!(rho >= 2, "base must be at least 2");
    if n == 0 {
        return Rational::zero();
    }
    let lambda = lambda_rho(n, rho);
    let den = BigInt::one() - BigInt::from(rho).pow(lambda);
    let value = Rational::new(BigInt::from(n), den);
    assert!(
        value.denom().gcd(&BigInt::from(rho)).is_one(),
        "b_rho must land in Z_rho"
    );
    value
}
