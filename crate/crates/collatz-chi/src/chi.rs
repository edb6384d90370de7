//! The characteristic map chi and the slope map M.
//!
//! For a string j = (j_1, ..., j_L) the composition H_j = H_{j_1} o ... o
//! H_{j_L} (last entry applied first) is affine: H_j(x) = M(j) x + chi(j).
//! chi(j) = H_j(0) has the closed form sum over branch intercepts weighted by
//! prefix slope products, and M(j) is the product of the branch slopes.
//! Integers are read through their shortest digit strings; rho-adic points
//! are read digit by digit, either from a rational with rho-free denominator
//! or from an explicit digit generator.
//!
//! Two independent evaluation routes exist on purpose: the closed-form
//! accumulation here is the fast path, and `chi_by_composition` replays the
//! literal branch composition as an oracle for the test suite.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::digits::DigitString;
use crate::mapdef::MapDef;
use crate::qadic::{self, QadicApprox, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ChiError {
    /// Slope product equal to 1: the geometric-series value is undefined.
    UnitSlope,
    /// A digit generator ran out of budget before producing enough nonzero
    /// digits to pin the requested precision.
    PrecisionUnreachable { requested: u32, reached: u32 },
}

impl fmt::Display for ChiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChiError::UnitSlope => write!(f, "slope product is 1"),
            ChiError::PrecisionUnreachable { requested, reached } => write!(
                f,
                "digit stream pinned only {reached} of {requested} requested q-adic digits"
            ),
        }
    }
}

impl std::error::Error for ChiError {}

/// Slope and intercept of a composition sequence: H_j(x) = slope x + intercept.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineForm {
    pub slope: Rational,
    pub intercept: Rational,
}

impl AffineForm {
    pub fn eval(&self, x: &Rational) -> Rational {
        &self.slope * x + &self.intercept
    }
}

/// Unreduced accumulation over a digit string: returns (N, A, D) with
/// chi = N / D, M = A / D, A = prod a, D = prod d.
pub(crate) fn fold_string(def: &MapDef, digits: &[u32]) -> (BigInt, BigInt, BigInt) {
    let mut chi_num = BigInt::zero();
    let mut a_prod = BigInt::one();
    let mut d_prod = BigInt::one();
    for &j in digits {
        let br = def.branch(j);
        chi_num = chi_num * br.d + BigInt::from(br.b) * &a_prod;
        a_prod *= br.a;
        d_prod *= br.d;
    }
    (chi_num, a_prod, d_prod)
}

/// Slope of the composition sequence of j: the product of a/d over the
/// literal tuple. 1 on the empty string. Not invariant under trailing zeros.
pub fn m_of_string(def: &MapDef, j: &DigitString) -> Rational {
    assert_eq!(j.rho(), def.rho(), "string base must match the map");
    let (_, a_prod, d_prod) = fold_string(def, j.digits());
    Rational::new(a_prod, d_prod)
}

/// Slope read off the shortest string of n; M(0) = 1.
pub fn m_of_n(def: &MapDef, n: u64) -> Rational {
    m_of_string(def, &DigitString::from_integer(n, def.rho()))
}

/// chi(j) = H_j(0) by the closed-form accumulation.
pub fn chi_of_string(def: &MapDef, j: &DigitString) -> Rational {
    assert_eq!(j.rho(), def.rho(), "string base must match the map");
    assert!(def.flags().valid && def.flags().fixes_zero, "chi needs a valid map fixing 0");
    let (chi_num, _, d_prod) = fold_string(def, j.digits());
    Rational::new(chi_num, d_prod)
}

/// chi(j) by literally composing the branches right to left. Oracle route;
/// must agree with `chi_of_string` everywhere.
pub fn chi_by_composition(def: &MapDef, j: &DigitString) -> Rational {
    assert_eq!(j.rho(), def.rho(), "string base must match the map");
    let mut x = Rational::zero();
    for &digit in j.digits().iter().rev() {
        x = def.branch_eval(digit, &x);
    }
    x
}

/// chi(n) through the shortest string of n; chi(0) = 0. Well defined under
/// trailing zeros, so any representation of n gives the same value.
pub fn chi_of_n(def: &MapDef, n: u64) -> Rational {
    chi_of_string(def, &DigitString::from_integer(n, def.rho()))
}

/// Slope and intercept of H_j together.
pub fn affine_of_string(def: &MapDef, j: &DigitString) -> AffineForm {
    assert_eq!(j.rho(), def.rho(), "string base must match the map");
    let (chi_num, a_prod, d_prod) = fold_string(def, j.digits());
    AffineForm {
        slope: Rational::new(a_prod, d_prod.clone()),
        intercept: Rational::new(chi_num, d_prod),
    }
}

/// A point of the rho-adic integers, presented one digit at a time.
pub enum RhoAdicPoint {
    NonNegativeInteger(u64),
    /// A rational with denominator coprime to rho; its digit stream is
    /// eventually periodic.
    RationalPoint(Rational),
    /// Explicit digit source, least significant first. Digits must lie in
    /// [0, rho); an exhausted generator means every remaining digit is 0.
    DigitGenerator(Box<dyn Iterator<Item = u32>>),
}

impl fmt::Debug for RhoAdicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RhoAdicPoint::NonNegativeInteger(n) => write!(f, "NonNegativeInteger({n})"),
            RhoAdicPoint::RationalPoint(x) => write!(f, "RationalPoint({x})"),
            RhoAdicPoint::DigitGenerator(_) => write!(f, "DigitGenerator(..)"),
        }
    }
}

/// Digit supplier with an explicit "all remaining digits are zero" signal.
enum Source {
    Integer { remaining: u64, rho: u64 },
    Rational { state: Rational, rho: u32 },
    Generator { inner: Box<dyn Iterator<Item = u32>>, rho: u32 },
}

impl Source {
    fn new(z: RhoAdicPoint, rho: u32) -> Source {
        match z {
            RhoAdicPoint::NonNegativeInteger(n) => {
                Source::Integer { remaining: n, rho: rho as u64 }
            }
            RhoAdicPoint::RationalPoint(x) => {
                assert!(
                    x.denom().gcd(&BigInt::from(rho)).is_one(),
                    "rational point must have denominator coprime to rho"
                );
                Source::Rational { state: x, rho }
            }
            RhoAdicPoint::DigitGenerator(inner) => Source::Generator { inner, rho },
        }
    }

    /// None once every remaining digit is known to be zero (the consumed
    /// prefix then represents the point exactly).
    fn next_digit(&mut self) -> Option<u32> {
        match self {
            Source::Integer { remaining, rho } => {
                if *remaining == 0 {
                    return None;
                }
                let d = (*remaining % *rho) as u32;
                *remaining /= *rho;
                Some(d)
            }
            Source::Rational { state, rho } => {
                if state.is_zero() {
                    return None;
                }
                let modulus = BigInt::from(*rho);
                let inv = qadic::mod_inverse(state.denom(), &modulus)
                    .expect("denominator coprime to rho");
                let d_big = (state.numer() * inv).mod_floor(&modulus);
                let d = u32::try_from(&d_big).expect("digit in [0, rho)");
                let num = state.numer() - d_big * state.denom();
                *state = Rational::new(num, state.denom() * modulus);
                Some(d)
            }
            Source::Generator { inner, rho } => {
                let d = inner.next()?;
                assert!(d < *rho, "generator digit {d} out of range for base {rho}");
                Some(d)
            }
        }
    }
}

/// Infinite digit stream of a rho-adic point (zero-padded after an exact
/// terminating expansion).
pub fn digit_stream(z: RhoAdicPoint, rho: u32) -> impl Iterator<Item = u32> {
    let mut source = Source::new(z, rho);
    std::iter::from_fn(move || Some(source.next_digit().unwrap_or(0)))
}

/// chi of the integer formed by the first m digits of z. For integer inputs
/// this stabilizes once m reaches the digit count of the integer.
pub fn chi_truncated(def: &MapDef, z: RhoAdicPoint, m: u32) -> Rational {
    assert!(def.flags().semi_basic, "truncated chi needs a semi-basic map");
    let mut source = Source::new(z, def.rho());
    let mut digits = Vec::with_capacity(m as usize);
    for _ in 0..m {
        match source.next_digit() {
            Some(d) => digits.push(d),
            None => break,
        }
    }
    let prefix = DigitString::new(def.rho(), digits).expect("digits are in range");
    chi_of_string(def, &prefix)
}

/// Digit budget for generator-backed points: past this many consumed digits
/// without reaching the requested count of nonzero digits, give up.
const GENERATOR_DIGIT_BUDGET: usize = 10_000;

/// chi(z) as a q-adic residue at precision n, where q is the map's base.
///
/// Digits of z are consumed until n of them are nonzero; every later term of
/// the chi series then carries q-adic valuation at least n, because the
/// valuation of a slope product is bounded below by the number of nonzero
/// digits consumed. If the stream terminates (the point is a non-negative
/// integer) the result is exact.
pub fn chi_qadic(def: &MapDef, z: RhoAdicPoint, n: u32) -> Result<QadicApprox, ChiError> {
    assert!(def.flags().semi_basic, "q-adic chi needs a semi-basic map");
    let q = def.q_of().expect("semi-basic maps are monogenic");
    let is_generator = matches!(z, RhoAdicPoint::DigitGenerator(_));
    let mut source = Source::new(z, def.rho());
    let mut digits = Vec::new();
    let mut nonzero = 0u32;
    while nonzero < n {
        if is_generator && digits.len() >= GENERATOR_DIGIT_BUDGET {
            return Err(ChiError::PrecisionUnreachable { requested: n, reached: nonzero });
        }
        match source.next_digit() {
            Some(d) => {
                digits.push(d);
                if d != 0 {
                    nonzero += 1;
                }
            }
            None => break,
        }
    }
    let prefix = DigitString::new(def.rho(), digits).expect("digits are in range");
    let value = chi_of_string(def, &prefix);
    Ok(qadic::to_qadic(&value, q, n).expect("chi denominators are coprime to q"))
}

/// chi(B_rho(n)) = chi(n) / (1 - M(n)) for n >= 1: the value of chi at the
/// point whose digits repeat the expansion of n.
pub fn chi_b(def: &MapDef, n: u64) -> Result<Rational, ChiError> {
    assert!(def.flags().semi_basic, "the geometric-series value needs a semi-basic map");
    assert!(n >= 1, "defined for n >= 1");
    let s = DigitString::from_integer(n, def.rho());
    let (chi_num, a_prod, d_prod) = fold_string(def, s.digits());
    let gap = &d_prod - &a_prod;
    if gap.is_zero() {
        return Err(ChiError::UnitSlope);
    }
    let value = Rational::new(chi_num.clone(), gap);
    // Same value through the explicit-denominator form
    // rho^lambda chi(n) / (rho^lambda - prod mu_j^{count_j}).
    debug_assert_eq!(value, {
        let lambda = s.len() as u32;
        let rho_pow = BigInt::from(def.rho()).pow(lambda);
        let mut mu_prod = BigInt::one();
        for (j, &mu) in def.mu().iter().enumerate() {
            mu_prod *= BigInt::from(mu).pow(s.count(j as u32) as u32);
        }
        Rational::new(&rho_pow * chi_num, (&rho_pow - mu_prod) * d_prod)
    });
    Ok(value)
}

/// The fixed point of the composition sequence H_j, for nonempty strings
/// over a map with every divisor equal to rho.
pub fn x_of_string(def: &MapDef, j: &DigitString) -> Result<Rational, ChiError> {
    assert!(def.flags().basic, "fixed-point generator needs a basic map");
    assert!(!j.is_empty(), "needs a nonempty string");
    assert_eq!(j.rho(), def.rho(), "string base must match the map");
    let rho = BigInt::from(def.rho());
    let len = j.len() as u32;
    let mut numerator = BigInt::zero();
    let mut a_prefix = BigInt::one();
    for (pos, &digit) in j.digits().iter().enumerate() {
        let br = def.branch(digit);
        let tail = rho.pow(len - 1 - pos as u32);
        numerator += BigInt::from(br.b) * &a_prefix * tail;
        a_prefix *= br.a;
    }
    let gap = rho.pow(len) - a_prefix;
    if gap.is_zero() {
        return Err(ChiError::UnitSlope);
    }
    let x = Rational::new(numerator, gap);
    debug_assert_eq!(affine_of_string(def, j).eval(&x), x, "must be the fixed point");
    Ok(x)
}
