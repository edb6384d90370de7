//! Declaration, validation, and classification of Collatz-type maps.
//!
//! A map H over base rho has one affine branch H_j(x) = (a_j x + b_j) / d_j
//! per residue class j = n mod rho. Validation checks the structural
//! conditions (coprimality of a_j and d_j, integrality of the multipliers
//! mu_j = rho a_j / d_j, and branch integrality on each branch's own residue
//! class) and derives the classification flags used as preconditions by the
//! rest of the crate.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;
use serde::Deserialize;

use crate::qadic::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Branch {
    pub a: i64,
    pub b: i64,
    pub d: i64,
}

impl Branch {
    pub fn new(a: i64, b: i64, d: i64) -> Branch {
        Branch { a, b, d }
    }
}

/// Classification flags, all derived at construction time.
///
/// `valid` asks for branch integrality only on each branch's own residue
/// class (the "if" direction); the strict converse, that other classes never
/// produce integers, is reported separately as `integrality_only_if` because
/// the classical Collatz map fails it while still being a map of this family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Flags {
    pub valid: bool,
    pub integrality_only_if: bool,
    pub fixes_zero: bool,
    pub non_degenerate: bool,
    pub monogenic: bool,
    pub semi_simple: bool,
    pub simple: bool,
    pub semi_basic: bool,
    pub basic: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MapError {
    MalformedDefinition(String),
    AllCoefficientsOne,
    NonIntegerResult { n: BigInt, branch: u32 },
}

impl fmt::Display for MapError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapError::MalformedDefinition(reason) => write!(f, "malformed definition: {reason}"),
            MapError::AllCoefficientsOne => {
                write!(f, "every multiplier is 1, so the common base is undefined")
            }
            MapError::NonIntegerResult { n, branch } => {
                write!(f, "branch {branch} did not produce an integer at n = {n}")
            }
        }
    }
}

impl std::error::Error for MapError {}

#[derive(Clone, Debug)]
pub struct MapDef {
    rho: u32,
    branches: Vec<Branch>,
    mu: Vec<i64>,
    q: Option<u64>,
    flags: Flags,
}

impl MapDef {
    /// Builds and classifies a map. Structural nonsense (wrong branch count,
    /// non-positive a or d) is an error; everything else is reported through
    /// the flags.
    pub fn new(rho: u32, branches: Vec<Branch>) -> Result<MapDef, MapError> {
        if rho < 2 {
            return Err(MapError::MalformedDefinition(format!("rho = {rho} is below 2")));
        }
        if branches.len() != rho as usize {
            return Err(MapError::MalformedDefinition(format!(
                "expected {rho} branches, got {}",
                branches.len()
            )));
        }
        for (j, br) in branches.iter().enumerate() {
            if br.a <= 0 {
                return Err(MapError::MalformedDefinition(format!("a_{j} = {} is not positive", br.a)));
            }
            if br.d <= 0 {
                return Err(MapError::MalformedDefinition(format!("d_{j} = {} is not positive", br.d)));
            }
        }

        let coprime = branches.iter().all(|br| br.a.gcd(&br.d) == 1);

        let mut mu = Vec::with_capacity(branches.len());
        let mut mu_integral = true;
        for br in &branches {
            let prod = rho as i128 * br.a as i128;
            if prod % br.d as i128 == 0 {
                let m = prod / br.d as i128;
                mu.push(i64::try_from(m).map_err(|_| {
                    MapError::MalformedDefinition("multiplier overflows i64".into())
                })?);
            } else {
                mu_integral = false;
                mu.push(0);
            }
        }

        // Branch integrality on the branch's own residue class; the value of
        // (a_j n + b_j) mod d_j depends only on n mod d_j, so one period of
        // the step parameter t in n = j + rho t suffices.
        let own_class_integral = branches.iter().enumerate().all(|(j, br)| {
            (0..br.d).all(|t| {
                let n = j as i128 + rho as i128 * t as i128;
                (br.a as i128 * n + br.b as i128) % br.d as i128 == 0
            })
        });

        let valid = coprime && mu_integral && own_class_integral;

        // Strict converse: no n outside the class may produce an integer.
        // The pair (n mod rho, n mod d_j) cycles with period lcm(rho, d_j).
        let integrality_only_if = valid
            && branches.iter().enumerate().all(|(j, br)| {
                let period = (rho as i128).lcm(&(br.d as i128));
                (0..period).all(|n| {
                    n % rho as i128 == j as i128
                        || (br.a as i128 * n + br.b as i128) % br.d as i128 != 0
                })
            });

        let fixes_zero = branches[0].b == 0;
        let non_degenerate = branches.iter().skip(1).all(|br| br.a != 1);
        let q = {
            let mut g: Option<u64> = None;
            for br in &branches {
                if br.a != 1 {
                    let a = br.a as u64;
                    g = Some(match g {
                        None => a,
                        Some(g) => g.gcd(&a),
                    });
                }
            }
            g
        };
        let monogenic = q.map_or(false, |g| g >= 2);
        let semi_simple = branches
            .iter()
            .all(|bj| branches.iter().all(|bk| bj.a.gcd(&bk.d) == 1));
        let simple = branches.iter().all(|br| br.d == rho as i64);
        let semi_basic = valid && fixes_zero && non_degenerate && monogenic && semi_simple;
        let basic = valid && fixes_zero && non_degenerate && monogenic && simple;

        if semi_basic {
            // Every divisor is coprime to the common base; follows from
            // semi-simplicity, asserted as a guard on the classifier itself.
            let qh = q.expect("monogenic implies q exists") as i64;
            debug_assert!(branches.iter().all(|br| br.d.gcd(&qh) == 1));
        }

        let flags = Flags {
            valid,
            integrality_only_if,
            fixes_zero,
            non_degenerate,
            monogenic,
            semi_simple,
            simple,
            semi_basic,
            basic,
        };
        Ok(MapDef { rho, branches, mu, q, flags })
    }

    /// The map n -> n/2 on evens, (a n + 1)/2 on odds.
    pub fn ax_plus_one(a: i64) -> MapDef {
        MapDef::new(2, vec![Branch::new(1, 0, 2), Branch::new(a, 1, 2)])
            .expect("well-formed by construction")
    }

    /// The classical map: n/2 on evens, 3n + 1 on odds.
    pub fn collatz() -> MapDef {
        MapDef::new(2, vec![Branch::new(1, 0, 2), Branch::new(3, 1, 1)])
            .expect("well-formed by construction")
    }

    pub fn rho(&self) -> u32 {
        self.rho
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn branch(&self, j: u32) -> &Branch {
        &self.branches[j as usize]
    }

    /// The integer multipliers mu_j = rho a_j / d_j (0 placeholder on
    /// branches where the quotient is not integral; `valid` is then false).
    pub fn mu(&self) -> &[i64] {
        &self.mu
    }

    pub fn flags(&self) -> &Flags {
        &self.flags
    }

    /// gcd of the multipliers a_j that differ from 1; the base of the value
    /// ring of chi.
    pub fn q_of(&self) -> Result<u64, MapError> {
        self.q.ok_or(MapError::AllCoefficientsOne)
    }

    /// (a_j x + b_j) / d_j as an exact rational, for any rational x.
    pub fn branch_eval(&self, j: u32, x: &Rational) -> Rational {
        let br = self.branch(j);
        (x * Rational::from_integer(BigInt::from(br.a))
            + Rational::from_integer(BigInt::from(br.b)))
            / Rational::from_integer(BigInt::from(br.d))
    }

    /// Residue of n mod rho, normalized into [0, rho) for negative n too.
    pub fn residue(&self, n: &BigInt) -> u32 {
        let r = n.mod_floor(&BigInt::from(self.rho));
        u32::try_from(r).expect("mod_floor lands in [0, rho)")
    }

    /// H(n): dispatch on n mod rho and apply that branch. Errors only when
    /// the map is not valid (a validated map always divides exactly).
    pub fn apply(&self, n: &BigInt) -> Result<BigInt, MapError> {
        let j = self.residue(n);
        let br = self.branch(j);
        let value = BigInt::from(br.a) * n + BigInt::from(br.b);
        let (quot, rem) = value.div_rem(&BigInt::from(br.d));
        if !rem.is_zero() {
            return Err(MapError::NonIntegerResult { n: n.clone(), branch: j });
        }
        // Cross-check: H(rho m + j) = mu_j m + H(j).
        debug_assert!({
            let m = (n - BigInt::from(j)) / BigInt::from(self.rho);
            let h_j = (BigInt::from(br.a) * BigInt::from(j) + BigInt::from(br.b))
                / BigInt::from(br.d);
            quot == BigInt::from(self.mu[j as usize]) * m + h_j
        });
        Ok(quot)
    }

    /// Parses `{"rho": R, "branches": [{"a":..., "b":..., "d":...}, ...]}`.
    /// Non-integer fields, unknown fields, and wrong branch arity are
    /// rejected.
    pub fn from_json_str(text: &str) -> Result<MapDef, MapError> {
        let raw: RawMap = serde_json::from_str(text)
            .map_err(|e| MapError::MalformedDefinition(format!("json: {e}")))?;
        MapDef::new(
            raw.rho,
            raw.branches
                .into_iter()
                .map(|b| Branch::new(b.a, b.b, b.d))
                .collect(),
        )
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMap {
    rho: u32,
    branches: Vec<RawBranch>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBranch {
    a: i64,
    b: i64,
    d: i64,
}
