//! Exact rationals and truncated q-adic arithmetic.
//!
//! The base q is any integer >= 2, prime or not; no CRT splitting into prime
//! components is exposed. A q-adic integer is carried as a residue mod q^N
//! together with its explicit precision N, and ring operations never claim
//! more precision than the weaker operand supports.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Arbitrary-precision reduced fraction: denominator positive, zero is 0/1.
pub type Rational = num_rational::BigRational;

/// q-adic valuation: largest k with q^k dividing the numerator; infinite at 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Valuation {
    Finite(u64),
    Infinite,
}

impl Valuation {
    /// The q-adic absolute value q^(-nu); 0.0 for the infinite valuation.
    pub fn abs(self, q: u64) -> f64 {
        match self {
            Valuation::Finite(k) => (q as f64).powi(-(k as i32)),
            Valuation::Infinite => 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QadicError {
    /// Denominator shares a factor with q: the value lies outside Z_q.
    DenominatorNotCoprime { denominator: BigInt, q: u64 },
    /// Negative q-adic valuation (not representable by a residue).
    NotQadicInteger,
    /// Ring operation across different bases.
    BaseMismatch { left: u64, right: u64 },
}

impl fmt::Display for QadicError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QadicError::DenominatorNotCoprime { denominator, q } => {
                write!(f, "denominator {denominator} is not coprime to q = {q}")
            }
            QadicError::NotQadicInteger => write!(f, "value has negative q-adic valuation"),
            QadicError::BaseMismatch { left, right } => {
                write!(f, "base mismatch: {left} vs {right}")
            }
        }
    }
}

impl std::error::Error for QadicError {}

/// A value known modulo q^precision. Precision 0 means "known mod 1",
/// i.e. no information; the residue is then 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QadicApprox {
    q: u64,
    precision: u32,
    residue: BigUint,
}

impl QadicApprox {
    /// Wraps a residue, reducing it into [0, q^precision).
    pub fn new(q: u64, precision: u32, residue: BigUint) -> Self {
        assert!(q >= 2, "base must be at least 2");
        let modulus = BigUint::from(q).pow(precision);
        QadicApprox { q, precision, residue: residue % modulus }
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn residue(&self) -> &BigUint {
        &self.residue
    }

    pub fn modulus(&self) -> BigUint {
        BigUint::from(self.q).pow(self.precision)
    }

    /// The same value seen at lower (never higher) precision.
    pub fn truncate(&self, precision: u32) -> QadicApprox {
        let precision = precision.min(self.precision);
        QadicApprox::new(self.q, precision, self.residue.clone())
    }
}

impl fmt::Display for QadicApprox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {}^{}", self.residue, self.q, self.precision)
    }
}

/// Modular inverse of a mod modulus, if gcd(a, modulus) = 1.
pub(crate) fn mod_inverse(a: &BigInt, modulus: &BigInt) -> Option<BigInt> {
    let ext = a.extended_gcd(modulus);
    if !ext.gcd.is_one() {
        return None;
    }
    Some(ext.x.mod_floor(modulus))
}

fn check_coprime(x: &Rational, q: u64) -> Result<(), QadicError> {
    assert!(q >= 2, "base must be at least 2");
    let den = x.denom();
    if !den.gcd(&BigInt::from(q)).is_one() {
        return Err(QadicError::DenominatorNotCoprime { denominator: den.clone(), q });
    }
    Ok(())
}

/// q-adic valuation of a rational whose denominator is coprime to q.
pub fn nu_q(x: &Rational, q: u64) -> Result<Valuation, QadicError> {
    check_coprime(x, q)?;
    if x.is_zero() {
        return Ok(Valuation::Infinite);
    }
    let qb = BigInt::from(q);
    let mut n = x.numer().abs();
    let mut k = 0u64;
    loop {
        let (quot, rem) = n.div_rem(&qb);
        if !rem.is_zero() {
            return Ok(Valuation::Finite(k));
        }
        n = quot;
        k += 1;
    }
}

/// The q-adic absolute value |x|_q = q^(-nu_q(x)).
pub fn q_abs(x: &Rational, q: u64) -> Result<f64, QadicError> {
    Ok(nu_q(x, q)?.abs(q))
}

/// Embeds a rational with q-coprime denominator into Z_q at the given
/// precision: residue = numerator * denominator^(-1) mod q^precision.
pub fn to_qadic(x: &Rational, q: u64, precision: u32) -> Result<QadicApprox, QadicError> {
    check_coprime(x, q)?;
    let modulus = BigInt::from(q).pow(precision);
    if modulus.is_one() {
        return Ok(QadicApprox::new(q, 0, BigUint::zero()));
    }
    let inv = mod_inverse(x.denom(), &modulus)
        .expect("coprime denominator is invertible mod q^N");
    let residue = (x.numer() * inv).mod_floor(&modulus);
    let residue = residue.to_biguint().expect("mod_floor result is non-negative");
    Ok(QadicApprox::new(q, precision, residue))
}

fn combine(
    a: &QadicApprox,
    b: &QadicApprox,
    op: impl Fn(&BigUint, &BigUint) -> BigUint,
) -> Result<QadicApprox, QadicError> {
    if a.q != b.q {
        return Err(QadicError::BaseMismatch { left: a.q, right: b.q });
    }
    let precision = a.precision.min(b.precision);
    Ok(QadicApprox::new(a.q, precision, op(&a.residue, &b.residue)))
}

/// Sum at the weaker of the two precisions.
pub fn qadic_add(a: &QadicApprox, b: &QadicApprox) -> Result<QadicApprox, QadicError> {
    combine(a, b, |x, y| x + y)
}

/// Product at the weaker of the two precisions.
pub fn qadic_mul(a: &QadicApprox, b: &QadicApprox) -> Result<QadicApprox, QadicError> {
    combine(a, b, |x, y| x * y)
}
