//! Exact arithmetic for Collatz-type maps.
//!
//! A map H splits the integers into residue classes mod rho and applies one
//! affine branch (a_j x + b_j) / d_j per class. This crate classifies such
//! maps, evaluates the characteristic map chi and the slope map M on digit
//! strings and rho-adic points, searches for cycles through the
//! integer-values-of-chi correspondence with an independent iteration oracle,
//! audits wrong values, and computes residue distributions of chi with their
//! discrete Fourier data.
//!
//! All number-theoretic results are exact (arbitrary-precision rationals and
//! residues); floating point appears only in the spectral layer.

pub mod chi;
pub mod cycles;
pub mod digits;
pub mod mapdef;
pub mod qadic;
pub mod spectral;

pub use chi::{chi_b, chi_of_n, chi_of_string, m_of_n, m_of_string, AffineForm, RhoAdicPoint};
pub use cycles::{
    correspondence_search, cycle_to_seed, denominator_analysis, iterate, survey_cycles,
    wrong_value_audit, CycleReport, Orbit, SearchLimits, SearchReport, Terminal,
};
pub use digits::DigitString;
pub use mapdef::MapDef;
pub use qadic::{QadicApprox, Rational};
pub use spectral::{PhiTable, ResidueDistribution, StationaryOutcome};
