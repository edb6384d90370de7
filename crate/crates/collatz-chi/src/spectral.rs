//! Distributions of the characteristic map over residue rings and their
//! Fourier analysis.
//!
//! The law of chi mod q^n under the uniform measure on digit space is
//! self-similar: conditioning on the first digit j turns it into the image of
//! itself under m -> d_j^{-1}(a_j m + b_j). `stationary_distribution` finds
//! the fixed point of that averaging operator exactly (up to fixed-point
//! drift below `tol`); `empirical_distribution` estimates the same law by
//! brute enumeration of digit prefixes, which keeps the two constructions
//! honest against each other.
//!
//! The characteristic function phi(t) = E[exp(-2 pi i {t chi})] is computed
//! from the distribution by exact DFT. The sign convention is load-bearing:
//! with the forward transform carrying e^{-}, the stationary distribution
//! satisfies the branch functional equation
//!   phi(t) = (1/rho) sum_j exp(-2 pi i {b_j t / d_j}) phi(a_j t / d_j)
//! to machine precision, and the conjugate convention does not (the tests
//! pin this down).

use std::f64::consts::PI;
use std::fmt::{self, Write as _};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::One;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::chi::chi_of_n;
use crate::cycles::{scoped_map, split_range};
use crate::mapdef::MapDef;
use crate::qadic::{self, to_qadic};

#[derive(Clone, Debug, PartialEq)]
pub enum SpectralError {
    /// The averaging operator did not settle within the iteration budget.
    NoConvergence { iterations: u32, residual: f64 },
    /// Runs from two different starting measures settled on measurably
    /// different limits, so no unique fixed point can be reported.
    AmbiguousFixedPoint { distance: f64 },
}

impl fmt::Display for SpectralError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectralError::NoConvergence { iterations, residual } => write!(
                f,
                "no fixed point after {iterations} iterations (last L1 change {residual:e})"
            ),
            SpectralError::AmbiguousFixedPoint { distance } => {
                write!(f, "fixed points from different starts disagree by {distance:e} in L1")
            }
        }
    }
}

impl std::error::Error for SpectralError {}

/// Law of chi modulo q^level: probabilities[m] = P(chi = m mod q^level).
#[derive(Clone, Debug, PartialEq)]
pub struct ResidueDistribution {
    pub q: u64,
    pub level: u32,
    pub probabilities: Vec<f64>,
}

impl ResidueDistribution {
    pub fn modulus(&self) -> u64 {
        self.q.pow(self.level)
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// Half the L1 distance; 0 on identical laws, 1 on disjoint ones.
    pub fn total_variation(&self, other: &ResidueDistribution) -> f64 {
        assert_eq!((self.q, self.level), (other.q, other.level), "levels must match");
        0.5 * self
            .probabilities
            .iter()
            .zip(&other.probabilities)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

/// Values of the characteristic function at t = k / q^level.
#[derive(Clone, Debug, PartialEq)]
pub struct PhiTable {
    pub q: u64,
    pub level: u32,
    pub values: Vec<Complex64>,
}

#[derive(Clone, Debug)]
pub struct StationaryOutcome {
    pub distribution: ResidueDistribution,
    pub iterations: u32,
    /// L1 change of the final iteration step.
    pub residual: f64,
}

/// Index maps m -> d_j^{-1}(a_j m + b_j) mod modulus, one per branch.
fn branch_targets(def: &MapDef, modulus: u64) -> Vec<Vec<usize>> {
    let m = modulus as i128;
    def.branches()
        .iter()
        .map(|br| {
            let inv_d = qadic::mod_inverse(&BigInt::from(br.d), &BigInt::from(modulus))
                .expect("divisors are invertible modulo powers of q");
            let inv_d = i128::try_from(inv_d).expect("inverse is reduced");
            (0..modulus)
                .map(|x| {
                    let affine = (br.a as i128 * x as i128 + br.b as i128).rem_euclid(m);
                    usize::try_from((affine * inv_d).rem_euclid(m)).expect("reduced index")
                })
                .collect()
        })
        .collect()
}

/// One application of the averaging operator.
fn transfer(targets: &[Vec<usize>], rho: u32, pi: &[f64], next: &mut [f64]) {
    next.fill(0.0);
    let weight = 1.0 / f64::from(rho);
    for map in targets {
        for (m, &dst) in map.iter().enumerate() {
            next[dst] += pi[m] * weight;
        }
    }
}

fn fixed_point(
    targets: &[Vec<usize>],
    rho: u32,
    mut pi: Vec<f64>,
    tol: f64,
    max_iter: u32,
) -> Result<(Vec<f64>, u32, f64), SpectralError> {
    let mut next = vec![0.0; pi.len()];
    let mut residual = f64::INFINITY;
    for iteration in 1..=max_iter {
        transfer(targets, rho, &pi, &mut next);
        residual = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut pi, &mut next);
        if residual < tol {
            return Ok((pi, iteration, residual));
        }
    }
    Err(SpectralError::NoConvergence { iterations: max_iter, residual })
}

/// Law of chi mod q^level as the fixed point of the branch averaging
/// operator, iterated from the uniform start until the L1 step drops below
/// tol. A second run from a seeded random start must land on the same limit.
pub fn stationary_distribution(
    def: &MapDef,
    level: u32,
    tol: f64,
    max_iter: u32,
) -> Result<StationaryOutcome, SpectralError> {
    assert!(def.flags().semi_basic, "residue distributions need a semi-basic map");
    assert!(tol > 0.0, "tolerance must be positive");
    let q = def.q_of().expect("semi-basic maps are monogenic");
    if level == 0 {
        // Everything is congruent mod q^0.
        let distribution = ResidueDistribution { q, level, probabilities: vec![1.0] };
        return Ok(StationaryOutcome { distribution, iterations: 0, residual: 0.0 });
    }
    let modulus = q.checked_pow(level).expect("modulus fits in u64");
    let size = usize::try_from(modulus).expect("modulus fits in memory");
    let targets = branch_targets(def, modulus);

    let uniform = vec![1.0 / size as f64; size];
    let (settled, iterations, residual) = fixed_point(&targets, def.rho(), uniform, tol, max_iter)?;

    // Fixed seed: the probe must be reproducible run to run.
    let mut rng = StdRng::seed_from_u64(0x0f0e_1d2c_3b4a_5968);
    let mut probe: Vec<f64> = (0..size).map(|_| rng.gen_range(0.05..1.0)).collect();
    let mass: f64 = probe.iter().sum();
    probe.iter_mut().for_each(|p| *p /= mass);
    let (other, _, _) = fixed_point(&targets, def.rho(), probe, tol, max_iter)?;
    let distance: f64 = settled.iter().zip(&other).map(|(a, b)| (a - b).abs()).sum();
    if distance > tol {
        return Err(SpectralError::AmbiguousFixedPoint { distance });
    }

    let distribution = ResidueDistribution { q, level, probabilities: settled };
    Ok(StationaryOutcome { distribution, iterations, residual })
}

/// Law of chi mod q^level over all digit prefixes of the given depth:
/// frequencies of chi(m) mod q^level for m < rho^depth. Exact rational
/// weights, so the result is bit-identical for any worker count.
pub fn empirical_distribution(
    def: &MapDef,
    level: u32,
    depth: u32,
    threads: usize,
) -> ResidueDistribution {
    assert!(def.flags().semi_basic, "residue distributions need a semi-basic map");
    assert!(threads >= 1);
    let q = def.q_of().expect("semi-basic maps are monogenic");
    let modulus = q.checked_pow(level).expect("modulus fits in u64");
    let size = usize::try_from(modulus).expect("modulus fits in memory");
    let total = u64::from(def.rho()).checked_pow(depth).expect("depth is enumerable");
    let blocks = scoped_map(split_range(total, threads as u64), |a, b| {
        let mut counts = vec![0u64; size];
        for m in a..b {
            let value = chi_of_n(def, m);
            let residue = to_qadic(&value, q, level)
                .expect("chi denominators are coprime to q")
                .residue()
                .to_u64_digits();
            let index = match residue.as_slice() {
                [] => 0usize,
                [w] => usize::try_from(*w).expect("residue below modulus"),
                _ => unreachable!("residue below a u64 modulus"),
            };
            counts[index] += 1;
        }
        counts
    });
    let mut counts = vec![0u64; size];
    for block in blocks {
        for (total, part) in counts.iter_mut().zip(block) {
            *total += part;
        }
    }
    let probabilities = counts.iter().map(|&c| c as f64 / total as f64).collect();
    ResidueDistribution { q, level, probabilities }
}

/// Forward DFT: phi(k / q^level) = sum_m exp(-2 pi i k m / q^level) P(m).
pub fn phi_from_distribution(dist: &ResidueDistribution) -> PhiTable {
    let size = dist.probabilities.len();
    let values = (0..size)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, &p) in dist.probabilities.iter().enumerate() {
                let angle = -2.0 * PI * ((k * m) % size) as f64 / size as f64;
                acc += Complex64::new(angle.cos(), angle.sin()) * p;
            }
            acc
        })
        .collect();
    PhiTable { q: dist.q, level: dist.level, values }
}

/// Inverse DFT: P(m) = (1/q^level) sum_k exp(+2 pi i k m / q^level) phi_k.
pub fn prob_from_phi(phi: &PhiTable) -> ResidueDistribution {
    let size = phi.values.len();
    let probabilities = (0..size)
        .map(|m| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, value) in phi.values.iter().enumerate() {
                let angle = 2.0 * PI * ((k * m) % size) as f64 / size as f64;
                acc += Complex64::new(angle.cos(), angle.sin()) * value;
            }
            acc.re / size as f64
        })
        .collect();
    ResidueDistribution { q: phi.q, level: phi.level, probabilities }
}

/// Worst-case gap in the branch functional equation
///   phi(t) = (1/rho) sum_j exp(-2 pi i {b_j t / d_j}) phi(a_j t / d_j)
/// over t = k / q^level. Division by d_j is multiplication by its inverse in
/// the index ring; multiplication by a_j lowers the effective level on its
/// own, since the index is reduced mod q^level.
pub fn functional_equation_residual(def: &MapDef, phi: &PhiTable) -> f64 {
    assert!(def.flags().semi_basic, "the functional equation needs a semi-basic map");
    assert_eq!(phi.q, def.q_of().expect("semi-basic maps are monogenic"), "base mismatch");
    let size = phi.values.len() as i128;
    let rho = f64::from(def.rho());
    let inverses: Vec<i128> = def
        .branches()
        .iter()
        .map(|br| {
            let inv = qadic::mod_inverse(&BigInt::from(br.d), &BigInt::from(size))
                .expect("divisors are invertible modulo powers of q");
            i128::try_from(inv).expect("inverse is reduced")
        })
        .collect();
    let mut worst = 0.0f64;
    for k in 0..size {
        let mut rhs = Complex64::new(0.0, 0.0);
        for (br, &inv_d) in def.branches().iter().zip(&inverses) {
            let scaled = (k * inv_d).rem_euclid(size);
            let index = (br.a as i128 * scaled).rem_euclid(size);
            let phase = (br.b as i128 * scaled).rem_euclid(size);
            let angle = -2.0 * PI * phase as f64 / size as f64;
            rhs += Complex64::new(angle.cos(), angle.sin())
                * phi.values[usize::try_from(index).expect("reduced index")];
        }
        rhs /= rho;
        worst = worst.max((phi.values[usize::try_from(k).expect("reduced index")] - rhs).norm());
    }
    worst
}

/// Both sides of the Parseval identity:
/// (1/q^level) sum |phi_k|^2 and sum P(m)^2.
pub fn parseval_check(dist: &ResidueDistribution, phi: &PhiTable) -> (f64, f64) {
    assert_eq!((dist.q, dist.level), (phi.q, phi.level), "levels must match");
    let lhs = phi.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / phi.values.len() as f64;
    let rhs = dist.probabilities.iter().map(|p| p * p).sum::<f64>();
    (lhs, rhs)
}

/// Truncated characteristic function of chi read in base p at t = k / p^level:
/// (1/rho^depth) sum over m < rho^depth of exp(-2 pi i {t chi(m)}_p).
///
/// Seeds whose chi denominator shares a factor with p have no residue mod
/// p^level; they are skipped, reported in the second component, and still
/// counted in the normalization.
pub fn phi_p_truncated(
    def: &MapDef,
    p: u64,
    k: u64,
    level: u32,
    depth: u32,
) -> (Complex64, Vec<u64>) {
    assert!(def.flags().semi_basic, "truncated spectra need a semi-basic map");
    assert!(p >= 2, "base must be at least 2");
    let modulus = p.checked_pow(level).expect("modulus fits in u64");
    assert!(k < modulus, "t = k / p^level must lie in [0, 1)");
    let total = u64::from(def.rho()).checked_pow(depth).expect("depth is enumerable");
    let p_big = BigInt::from(p);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut skipped = Vec::new();
    for m in 0..total {
        let value = chi_of_n(def, m);
        if !value.denom().gcd(&p_big).is_one() {
            skipped.push(m);
            continue;
        }
        let residue = to_qadic(&value, p, level)
            .expect("denominator verified coprime")
            .residue()
            .to_u64_digits();
        let r = match residue.as_slice() {
            [] => 0u64,
            [w] => *w,
            _ => unreachable!("residue below a u64 modulus"),
        };
        let phase = (u128::from(k) * u128::from(r) % u128::from(modulus)) as u64;
        let angle = -2.0 * PI * phase as f64 / modulus as f64;
        acc += Complex64::new(angle.cos(), angle.sin());
    }
    (acc / total as f64, skipped)
}

fn meta_lines(out: &mut String, q: u64, level: u32, meta: &[(&str, String)]) {
    writeln!(out, "# q = {q}").expect("writing to a String cannot fail");
    writeln!(out, "# level = {level}").expect("writing to a String cannot fail");
    for (key, value) in meta {
        writeln!(out, "# {key} = {value}").expect("writing to a String cannot fail");
    }
}

/// Distribution as CSV with leading `# key = value` metadata lines.
pub fn distribution_csv(dist: &ResidueDistribution, meta: &[(&str, String)]) -> String {
    let mut out = String::new();
    meta_lines(&mut out, dist.q, dist.level, meta);
    out.push_str("index,value\n");
    for (index, p) in dist.probabilities.iter().enumerate() {
        writeln!(out, "{index},{p}").expect("writing to a String cannot fail");
    }
    out
}

/// Phi table as CSV with leading `# key = value` metadata lines.
pub fn phi_csv(phi: &PhiTable, meta: &[(&str, String)]) -> String {
    let mut out = String::new();
    meta_lines(&mut out, phi.q, phi.level, meta);
    out.push_str("index,re,im\n");
    for (index, v) in phi.values.iter().enumerate() {
        writeln!(out, "{index},{},{}", v.re, v.im).expect("writing to a String cannot fail");
    }
    out
}

fn meta_object(q: u64, level: u32, meta: &[(&str, String)]) -> serde_json::Value {
    let mut object = serde_json::Map::new();
    object.insert("q".into(), q.into());
    object.insert("level".into(), level.into());
    for (key, value) in meta {
        object.insert((*key).into(), value.clone().into());
    }
    serde_json::Value::Object(object)
}

/// Distribution as JSON: {"metadata": {...}, "probabilities": [...]}.
pub fn distribution_json(dist: &ResidueDistribution, meta: &[(&str, String)]) -> String {
    let body = serde_json::json!({
        "metadata": meta_object(dist.q, dist.level, meta),
        "probabilities": dist.probabilities,
    });
    serde_json::to_string_pretty(&body).expect("distribution serializes")
}

/// Phi table as JSON: {"metadata": {...}, "values": [[re, im], ...]}.
pub fn phi_json(phi: &PhiTable, meta: &[(&str, String)]) -> String {
    let values: Vec<[f64; 2]> = phi.values.iter().map(|v| [v.re, v.im]).collect();
    let body = serde_json::json!({
        "metadata": meta_object(phi.q, phi.level, meta),
        "values": values,
    });
    serde_json::to_string_pretty(&body).expect("phi table serializes")
}
