//! Orbit iteration, cycle search, and the correspondence between cycles and
//! integer geometric-series values.
//!
//! `iterate` is the ground-truth oracle: it literally applies the map until a
//! state repeats, escapes, or a budget runs out. `correspondence_search` goes
//! the other way, scanning seed integers n and testing whether chi_B(n) is an
//! integer; on a map with every flag set those integers must be periodic
//! points, and each hit is pushed back through the oracle to confirm it.

use std::collections::{BTreeSet, HashMap};
use std::fmt::{self, Write as _};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::chi::{self, chi_b, chi_of_n};
use crate::digits::DigitString;
use crate::mapdef::MapDef;
use crate::qadic::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CycleError {
    /// Every member of the supplied cycle is divisible by the modulus, so no
    /// rotation of its branch string has a nonzero leading digit.
    NoNonzeroDigit,
}

impl fmt::Display for CycleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CycleError::NoNonzeroDigit => {
                write!(f, "every cycle member is divisible by the modulus")
            }
        }
    }
}

impl std::error::Error for CycleError {}

/// Budgets for direct iteration.
#[derive(Clone, Debug)]
pub struct SearchLimits {
    pub step_limit: u32,
    pub magnitude_bound: BigInt,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits { step_limit: 10_000, magnitude_bound: BigInt::from(10u32).pow(30) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Terminal {
    /// The orbit closed; members are listed in orbit order starting from the
    /// member of smallest magnitude.
    EnteredCycle(Vec<BigInt>),
    /// First iterate whose magnitude exceeded the bound.
    Escaped(BigInt),
    StepLimit,
}

/// A finite forward orbit: states[k+1] = H(states[k]), all entries distinct.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Orbit {
    pub start: BigInt,
    pub states: Vec<BigInt>,
    pub terminal: Terminal,
}

/// One scanned seed whose geometric-series value came out an integer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleReport {
    pub n: u64,
    pub x: Rational,
    pub is_integer: bool,
    /// The oracle confirmed x is periodic and lies on the reported cycle.
    pub verified: bool,
    pub cycle: Option<Vec<BigInt>>,
    /// Slope of the composition sequence of n is < 1; for integer hits this
    /// must match x > 0.
    pub slope_less_than_one: bool,
}

#[derive(Clone, Debug)]
pub struct SearchReport {
    pub n_max: u64,
    pub examined: u64,
    pub hits: Vec<CycleReport>,
    /// Seeds skipped because the slope product is exactly 1.
    pub unit_slope: Vec<u64>,
    /// When false the map is only semi-basic: integer values need not be
    /// periodic and the sign law is not guaranteed.
    pub map_is_basic: bool,
}

/// The two-power shape of the gap: D = rho^lambda - mu^exponent, available
/// when every branch multiplier used by n is a power of a common mu.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PowerGap {
    pub mu: u64,
    pub exponent: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenominatorAnalysis {
    pub n: u64,
    pub lambda: u32,
    /// Digit count of n per branch class.
    pub exponents: Vec<u64>,
    /// rho^lambda - product of mu_j^(count of j), the cleared denominator of
    /// the geometric-series value.
    pub d: BigInt,
    pub abs_d_is_one: bool,
    /// d divides the numerator of rho^lambda * chi(n).
    pub divides_numerator: bool,
    pub mihailescu_shape: Option<PowerGap>,
}

/// Run the map forward from `start` until a state repeats, the magnitude
/// bound is exceeded, or the step budget is spent.
pub fn iterate(def: &MapDef, start: &BigInt, limits: &SearchLimits) -> Orbit {
    assert!(def.flags().valid, "iteration needs a valid map");
    let mut states = vec![start.clone()];
    let mut seen: HashMap<BigInt, usize> = HashMap::new();
    seen.insert(start.clone(), 0);
    for _ in 0..limits.step_limit {
        let next = def
            .apply(states.last().expect("orbit is nonempty"))
            .expect("valid maps send integers to integers");
        if next.abs() > limits.magnitude_bound {
            return Orbit { start: start.clone(), states, terminal: Terminal::Escaped(next) };
        }
        if let Some(&p) = seen.get(&next) {
            // First revisit: states[p..] are distinct and close up, so this
            // is the minimal period.
            let cycle = canonical_cycle(&states[p..]);
            return Orbit { start: start.clone(), states, terminal: Terminal::EnteredCycle(cycle) };
        }
        seen.insert(next.clone(), states.len());
        states.push(next);
    }
    Orbit { start: start.clone(), states, terminal: Terminal::StepLimit }
}

/// Rotate a cycle so its smallest-magnitude member leads (ties broken by
/// value), keeping orbit order.
fn canonical_cycle(members: &[BigInt]) -> Vec<BigInt> {
    let lead = members
        .iter()
        .enumerate()
        .min_by_key(|(_, x)| (x.abs(), (*x).clone()))
        .map(|(i, _)| i)
        .expect("cycles are nonempty");
    let mut cycle = members[lead..].to_vec();
    cycle.extend_from_slice(&members[..lead]);
    cycle
}

/// Split 0..count into at most `parts` contiguous offset spans.
pub(crate) fn split_range(count: u64, parts: u64) -> Vec<(u64, u64)> {
    let parts = parts.max(1).min(count.max(1));
    let base = count / parts;
    let extra = count % parts;
    let mut spans = Vec::with_capacity(parts as usize);
    let mut at = 0u64;
    for i in 0..parts {
        let size = base + u64::from(i < extra);
        spans.push((at, at + size));
        at += size;
    }
    spans
}

/// Map disjoint offset spans over worker threads; results come back in span
/// order, so the merged output is independent of the worker count.
pub(crate) fn scoped_map<T, F>(spans: Vec<(u64, u64)>, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, u64) -> T + Sync,
{
    let work = &work;
    std::thread::scope(|scope| {
        let handles: Vec<_> =
            spans.iter().map(|&(a, b)| scope.spawn(move || work(a, b))).collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    })
}

/// All cycles reachable from starts in [lo, hi], deduplicated by member set
/// and sorted by smallest member.
pub fn survey_cycles(
    def: &MapDef,
    lo: i64,
    hi: i64,
    limits: &SearchLimits,
    threads: usize,
) -> Vec<Vec<BigInt>> {
    assert!(def.flags().valid, "cycle survey needs a valid map");
    assert!(lo <= hi, "empty start range");
    assert!(threads >= 1);
    let count = (hi as i128 - lo as i128 + 1) as u64;
    let blocks = scoped_map(split_range(count, threads as u64), |a, b| {
        let mut found = Vec::new();
        for offset in a..b {
            let start = BigInt::from(lo as i128 + offset as i128);
            if let Terminal::EnteredCycle(c) = iterate(def, &start, limits).terminal {
                found.push(c);
            }
        }
        found
    });
    let mut seen: BTreeSet<Vec<BigInt>> = BTreeSet::new();
    let mut cycles = Vec::new();
    for cycle in blocks.into_iter().flatten() {
        let mut key = cycle.clone();
        key.sort();
        if seen.insert(key) {
            cycles.push(cycle);
        }
    }
    cycles.sort_by_key(|c| c.iter().min().expect("cycles are nonempty").clone());
    cycles
}

/// Assessment of one seed: its geometric-series value and, when that value
/// is an integer, the oracle's verdict. None when the slope product is 1.
fn assess_seed(def: &MapDef, n: u64, limits: &SearchLimits) -> Option<CycleReport> {
    let s = DigitString::from_integer(n, def.rho());
    let (chi_num, a_prod, d_prod) = chi::fold_string(def, s.digits());
    let gap = &d_prod - &a_prod;
    if gap.is_zero() {
        return None;
    }
    let x = Rational::new(chi_num, gap);
    let mut verified = false;
    let mut cycle = None;
    let is_integer = x.is_integer();
    if is_integer {
        let value = x.to_integer();
        if let Terminal::EnteredCycle(c) = iterate(def, &value, limits).terminal {
            verified = c.contains(&value);
            cycle = Some(c);
        }
    }
    Some(CycleReport { n, x, is_integer, verified, cycle, slope_less_than_one: a_prod < d_prod })
}

/// Scan n = 1..=n_max for integer geometric-series values and verify each
/// one against the iteration oracle.
pub fn correspondence_search(
    def: &MapDef,
    n_max: u64,
    limits: &SearchLimits,
    threads: usize,
) -> SearchReport {
    assert!(def.flags().semi_basic, "correspondence search needs a semi-basic map");
    assert!(threads >= 1);
    let blocks = scoped_map(split_range(n_max, threads as u64), |a, b| {
        let mut hits = Vec::new();
        let mut unit = Vec::new();
        for n in a + 1..=b {
            match assess_seed(def, n, limits) {
                Some(report) if report.is_integer => hits.push(report),
                Some(_) => {}
                None => unit.push(n),
            }
        }
        (hits, unit)
    });
    let mut hits = Vec::new();
    let mut unit_slope = Vec::new();
    for (h, u) in blocks {
        hits.extend(h);
        unit_slope.extend(u);
    }
    SearchReport { n_max, examined: n_max, hits, unit_slope, map_is_basic: def.flags().basic }
}

/// Recover a seed integer from a cycle: the branch residues of one loop
/// around the cycle, read as a digit string. The chosen member is rotated
/// forward if needed so the leading digit is nonzero, and the recovered n
/// satisfies chi_B(n) = that member exactly.
pub fn cycle_to_seed(def: &MapDef, cycle: &[BigInt], x: &BigInt) -> Result<u64, CycleError> {
    assert!(def.flags().basic, "seed recovery needs the full flag set");
    assert!(cycle.len() >= 2, "needs a cycle of at least two members");
    assert!(cycle.contains(x), "x must be a member of the cycle");
    let len = cycle.len();
    let mut anchor = x.clone();
    let mut walked = 0usize;
    while def.residue(&anchor) == 0 {
        if walked == len {
            return Err(CycleError::NoNonzeroDigit);
        }
        anchor = def.apply(&anchor).expect("valid maps send integers to integers");
        walked += 1;
    }
    // One loop around the cycle, most recent application in the lowest digit:
    // the digit at position len-1-i is the branch chosen at the i-th step.
    let mut digs = vec![0u32; len];
    let mut cur = anchor.clone();
    for slot in digs.iter_mut().rev() {
        *slot = def.residue(&cur);
        cur = def.apply(&cur).expect("valid maps send integers to integers");
    }
    debug_assert_eq!(cur, anchor, "input must be a closed orbit");
    let n = DigitString::new(def.rho(), digs)
        .expect("residues are digits")
        .to_integer()
        .to_u64()
        .expect("seed fits in u64");
    let recovered = chi_b(def, n).expect("cycle strings never have unit slope");
    assert_eq!(recovered, Rational::from(anchor), "recovered seed must reproduce the member");
    Ok(n)
}

/// A composition applied to a seed whose residue mismatches the first branch,
/// landing on an integer anyway.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WrongValue {
    pub string: DigitString,
    pub seed: i64,
    pub value: BigInt,
}

#[derive(Clone, Debug)]
pub struct AuditReport {
    pub max_len: u32,
    pub seed_bound: u64,
    /// Mismatched (string, seed) pairs evaluated.
    pub evaluations: u64,
    pub integer_wrong_values: u64,
    /// At most the first AUDIT_EXAMPLE_CAP violations, in scan order.
    pub examples: Vec<WrongValue>,
}

const AUDIT_EXAMPLE_CAP: usize = 1000;

/// Evaluate every composition of length <= max_len on every seed |n| <=
/// seed_bound whose residue mismatches the first-applied branch, counting
/// the evaluations that land on integers.
pub fn wrong_value_audit(def: &MapDef, max_len: u32, seed_bound: u64) -> AuditReport {
    assert!(def.flags().valid, "audit needs a valid map");
    assert!(max_len >= 1);
    let rho = def.rho();
    let bound = i64::try_from(seed_bound).expect("seed bound fits in i64");
    let mut evaluations = 0u64;
    let mut violations = 0u64;
    let mut examples = Vec::new();
    for len in 1..=max_len {
        let mut digs = vec![0u32; len as usize];
        'strings: loop {
            let (chi_num, a_prod, d_prod) = chi::fold_string(def, &digs);
            // Last vector entry = most significant digit = first branch applied.
            let first_applied = *digs.last().expect("strings here are nonempty");
            for m in -bound..=bound {
                if m.mod_floor(&(rho as i64)) as u32 == first_applied {
                    continue;
                }
                evaluations += 1;
                let numerator = &a_prod * m + &chi_num;
                if (&numerator % &d_prod).is_zero() {
                    violations += 1;
                    if examples.len() < AUDIT_EXAMPLE_CAP {
                        examples.push(WrongValue {
                            string: DigitString::new(rho, digs.clone())
                                .expect("odometer digits are in range"),
                            seed: m,
                            value: numerator / &d_prod,
                        });
                    }
                }
            }
            // Odometer over base-rho digit vectors of this length.
            for k in 0..digs.len() {
                digs[k] += 1;
                if digs[k] < rho {
                    continue 'strings;
                }
                digs[k] = 0;
            }
            break;
        }
    }
    AuditReport { max_len, seed_bound, evaluations, integer_wrong_values: violations, examples }
}

/// Largest exponent pair: m = base^e, if any.
fn power_exponent(m: u64, base: u64) -> Option<u64> {
    let mut acc = 1u64;
    let mut e = 0u64;
    while acc < m {
        acc = acc.checked_mul(base)?;
        e += 1;
    }
    (acc == m).then_some(e)
}

/// The (mu, exponent) collapse of a multiplier product, when every factor is
/// a power of a common base. Prefers the largest base.
fn common_power_shape(factors: &[(u64, u64)]) -> Option<PowerGap> {
    if factors.is_empty() {
        return None;
    }
    let smallest = factors.iter().map(|&(m, _)| m).min().expect("nonempty");
    for base in (2..=smallest).rev() {
        let mut exponent = 0u64;
        let mut all = true;
        for &(m, count) in factors {
            match power_exponent(m, base) {
                Some(e) => exponent += e * count,
                None => {
                    all = false;
                    break;
                }
            }
        }
        if all {
            return Some(PowerGap { mu: base, exponent });
        }
    }
    None
}

/// Structure of the cleared denominator rho^lambda - prod mu_j^(count of j)
/// of the geometric-series value of n.
pub fn denominator_analysis(def: &MapDef, n: u64) -> DenominatorAnalysis {
    assert!(def.flags().semi_basic, "denominator analysis needs a semi-basic map");
    assert!(n >= 1, "defined for n >= 1");
    let s = DigitString::from_integer(n, def.rho());
    let lambda = s.len() as u32;
    let exponents: Vec<u64> = (0..def.rho()).map(|j| s.count(j) as u64).collect();
    let d = cleared_denominator(def, &s);
    let cleared = chi_of_n(def, n) * Rational::from(BigInt::from(def.rho()).pow(lambda));
    let divides_numerator = !d.is_zero() && (cleared.numer() % &d).is_zero();
    if !d.is_zero() {
        // The cleared form and the direct geometric-series value must agree.
        debug_assert_eq!(
            chi_b(def, n).expect("gap is nonzero") * Rational::from(d.clone()),
            cleared
        );
    }
    let factors: Vec<(u64, u64)> = def
        .mu()
        .iter()
        .enumerate()
        .filter(|&(j, &mu)| mu != 1 && exponents[j] > 0)
        .map(|(j, &mu)| (mu as u64, exponents[j]))
        .collect();
    let mihailescu_shape = common_power_shape(&factors);
    if let Some(shape) = &mihailescu_shape {
        debug_assert_eq!(
            d,
            BigInt::from(def.rho()).pow(lambda)
                - BigInt::from(shape.mu).pow(u32::try_from(shape.exponent).expect("small")),
        );
    }
    DenominatorAnalysis {
        n,
        lambda,
        exponents,
        abs_d_is_one: d.abs().is_one(),
        divides_numerator,
        d,
        mihailescu_shape,
    }
}

/// Cleared denominator rho^lambda - prod mu_j^(count of j) straight from the
/// digit counts of n.
fn cleared_denominator(def: &MapDef, s: &DigitString) -> BigInt {
    let rho_pow = BigInt::from(def.rho()).pow(s.len() as u32);
    let mut mu_prod = BigInt::one();
    for (j, &mu) in def.mu().iter().enumerate() {
        mu_prod *= BigInt::from(mu).pow(s.count(j as u32) as u32);
    }
    rho_pow - mu_prod
}

fn push_search_row(def: &MapDef, n: u64, limits: &SearchLimits, out: &mut String) {
    let d = cleared_denominator(def, &DigitString::from_integer(n, def.rho()));
    let abs_d_is_one = d.abs().is_one();
    match assess_seed(def, n, limits) {
        Some(report) => {
            let (cycle_min, cycle_len) = match &report.cycle {
                Some(c) if report.verified => (
                    c.iter().min().expect("cycles are nonempty").to_string(),
                    c.len().to_string(),
                ),
                _ => (String::new(), String::new()),
            };
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                n,
                report.x.numer(),
                report.x.denom(),
                report.is_integer,
                report.verified,
                cycle_min,
                cycle_len,
                d,
                abs_d_is_one
            )
            .expect("writing to a String cannot fail");
        }
        None => {
            writeln!(out, "{n},,,false,false,,,{d},{abs_d_is_one}")
                .expect("writing to a String cannot fail");
        }
    }
}

/// The per-seed search table as CSV. Rows are emitted in ascending n and the
/// bytes do not depend on the worker count.
pub fn search_table_csv(def: &MapDef, n_max: u64, limits: &SearchLimits, threads: usize) -> String {
    assert!(def.flags().semi_basic, "search table needs a semi-basic map");
    assert!(threads >= 1);
    let chunks = scoped_map(split_range(n_max, threads as u64), |a, b| {
        let mut out = String::new();
        for n in a + 1..=b {
            push_search_row(def, n, limits, &mut out);
        }
        out
    });
    let mut csv = String::from("n,x_num,x_den,is_integer,verified,cycle_min,cycle_len,D,abs_D_is_one\n");
    for chunk in chunks {
        csv.push_str(&chunk);
    }
    csv
}

fn search_row_json(def: &MapDef, n: u64, limits: &SearchLimits) -> serde_json::Value {
    let d = cleared_denominator(def, &DigitString::from_integer(n, def.rho()));
    let mut row = serde_json::Map::new();
    row.insert("n".into(), n.into());
    row.insert("abs_D_is_one".into(), d.abs().is_one().into());
    row.insert("D".into(), d.to_string().into());
    match assess_seed(def, n, limits) {
        Some(report) => {
            row.insert("x_num".into(), report.x.numer().to_string().into());
            row.insert("x_den".into(), report.x.denom().to_string().into());
            row.insert("is_integer".into(), report.is_integer.into());
            row.insert("verified".into(), report.verified.into());
            match &report.cycle {
                Some(c) if report.verified => {
                    row.insert(
                        "cycle_min".into(),
                        c.iter().min().expect("nonempty").to_string().into(),
                    );
                    row.insert("cycle_len".into(), c.len().into());
                }
                _ => {
                    row.insert("cycle_min".into(), serde_json::Value::Null);
                    row.insert("cycle_len".into(), serde_json::Value::Null);
                }
            }
        }
        None => {
            row.insert("x_num".into(), serde_json::Value::Null);
            row.insert("x_den".into(), serde_json::Value::Null);
            row.insert("is_integer".into(), false.into());
            row.insert("verified".into(), false.into());
            row.insert("cycle_min".into(), serde_json::Value::Null);
            row.insert("cycle_len".into(), serde_json::Value::Null);
        }
    }
    serde_json::Value::Object(row)
}

/// The per-seed search table as a JSON array, same content as the CSV form.
pub fn search_table_json(def: &MapDef, n_max: u64, limits: &SearchLimits, threads: usize) -> String {
    assert!(def.flags().semi_basic, "search table needs a semi-basic map");
    assert!(threads >= 1);
    let chunks = scoped_map(split_range(n_max, threads as u64), |a, b| {
        (a + 1..=b).map(|n| search_row_json(def, n, limits)).collect::<Vec<_>>()
    });
    let rows: Vec<serde_json::Value> = chunks.into_iter().flatten().collect();
    serde_json::to_string_pretty(&rows).expect("rows serialize")
}

/// Cycle list as CSV; members are ;-joined in orbit order.
pub fn cycles_csv(cycles: &[Vec<BigInt>]) -> String {
    let mut csv = String::from("cycle_min,cycle_len,members\n");
    for cycle in cycles {
        let members: Vec<String> = cycle.iter().map(|x| x.to_string()).collect();
        writeln!(
            csv,
            "{},{},{}",
            cycle.iter().min().expect("cycles are nonempty"),
            cycle.len(),
            members.join(";")
        )
        .expect("writing to a String cannot fail");
    }
    csv
}

/// Cycle list as a JSON array of member-string arrays.
pub fn cycles_json(cycles: &[Vec<BigInt>]) -> String {
    let rows: Vec<Vec<String>> =
        cycles.iter().map(|c| c.iter().map(|x| x.to_string()).collect()).collect();
    serde_json::to_string_pretty(&rows).expect("rows serialize")
}
