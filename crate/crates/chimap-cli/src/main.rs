//! `chimap`: tables, cycle searches, audits, and residue spectra for
//! Collatz-type maps.
//!
//! Exit codes: 0 on success, 2 for input problems (unreadable or malformed
//! map definitions, out-of-range parameters), 3 when a soundness invariant
//! fails — an unverified integer hit or sign-law breach on a basic map, a
//! wrong value surviving an audit of a basic map, or a spectral tolerance
//! miss.  Code 3 is the defect alarm: with a correct build and honest
//! tolerances it should never fire.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use collatz_chi::chi::ChiError;
use collatz_chi::cycles::{search_table_csv, search_table_json};
use collatz_chi::spectral::{
    distribution_csv, distribution_json, empirical_distribution, functional_equation_residual,
    parseval_check, phi_csv, phi_from_distribution, phi_json, stationary_distribution,
};
use collatz_chi::{
    chi_b, chi_of_n, correspondence_search, denominator_analysis, wrong_value_audit, DigitString,
    MapDef, Rational, SearchLimits,
};
use num_traits::{Signed, Zero};

const STATIONARY_MAX_ITER: u32 = 200_000;
const FUNCTIONAL_EQ_TOL: f64 = 1e-10;
const PARSEVAL_TOL: f64 = 1e-12;
const TV_TOL: f64 = 0.01;

#[derive(Parser)]
#[command(name = "chimap", version, about = "Explore Collatz-type maps through their digit calculus")]
struct Cli {
    /// Map definition: a path to a JSON file, or inline JSON starting with '{'
    #[arg(long, global = true)]
    map: Option<String>,

    /// Write the report to this file instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Report format (validate always prints plain text)
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,

    /// Worker threads for the scanning commands
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the map and print its invariants
    Validate,
    /// Per-n digit statistics and the two value columns
    Table {
        /// Largest n in the table (rows run from 0)
        #[arg(long, default_value_t = 14)]
        n_max: u64,
    },
    /// Scan seeds for integer cycle values and verify each hit dynamically
    Search {
        /// Largest seed to examine (seeds run from 1)
        #[arg(long, default_value_t = 65536)]
        n_max: u64,
    },
    /// Exhaust short digit strings looking for integer wrong values
    Audit {
        /// Longest digit string to try
        #[arg(long, default_value_t = 8)]
        max_len: u32,
        /// Seeds range over [-seed_bound, seed_bound]
        #[arg(long, default_value_t = 100)]
        seed_bound: u64,
    },
    /// Stationary residue distribution, its transform, and consistency checks
    Spectral {
        /// Work modulo q_H^level
        #[arg(long, default_value_t = 2)]
        level: u32,
        /// Compare against the empirical law over n < rho^depth
        #[arg(long, default_value_t = 16)]
        depth: u32,
        /// L1 step size at which the fixed-point iteration is converged
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Cleared denominators of the cycle values and their power structure
    Denominators {
        /// Largest n in the table (rows run from 1)
        #[arg(long, default_value_t = 14)]
        n_max: u64,
    },
}

struct CliError {
    code: u8,
    message: String,
}

fn input_error(message: impl Into<String>) -> CliError {
    CliError { code: 2, message: message.into() }
}

fn violation(message: impl Into<String>) -> CliError {
    CliError { code: 3, message: message.into() }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("chimap: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.threads == 0 {
        return Err(input_error("--threads must be at least 1"));
    }
    let def = load_map(cli.map.as_deref())?;
    match cli.command {
        Command::Validate => cmd_validate(&def, &cli),
        Command::Table { n_max } => cmd_table(&def, &cli, n_max),
        Command::Search { n_max } => cmd_search(&def, &cli, n_max),
        Command::Audit { max_len, seed_bound } => cmd_audit(&def, &cli, max_len, seed_bound),
        Command::Spectral { level, depth, tol } => cmd_spectral(&def, &cli, level, depth, tol),
        Command::Denominators { n_max } => cmd_denominators(&def, &cli, n_max),
    }
}

fn load_map(arg: Option<&str>) -> Result<MapDef, CliError> {
    let arg = arg.ok_or_else(|| input_error("--map <path or inline JSON> is required"))?;
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).map_err(|e| input_error(format!("cannot read {arg}: {e}")))?
    };
    MapDef::from_json_str(&text).map_err(|e| input_error(format!("bad map definition: {e}")))
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, content)
            .map_err(|e| input_error(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// "-29/11" -> ("-29", "11"); integers keep an explicit denominator of 1.
fn num_den(x: &Rational) -> (String, String) {
    (x.numer().to_string(), x.denom().to_string())
}

fn cmd_validate(def: &MapDef, cli: &Cli) -> Result<(), CliError> {
    let f = def.flags();
    let mut text = String::new();
    writeln!(text, "rho = {}", def.rho()).unwrap();
    let branches: Vec<String> = def
        .branches()
        .iter()
        .map(|br| format!("({},{},{})", br.a, br.b, br.d))
        .collect();
    writeln!(text, "branches: {}", branches.join(" ")).unwrap();
    if f.valid {
        let mu: Vec<String> = def.mu().iter().map(|m| m.to_string()).collect();
        writeln!(text, "mu = [{}]", mu.join(", ")).unwrap();
    } else {
        writeln!(text, "mu = (not all branches have integral multipliers)").unwrap();
    }
    for (name, value) in [
        ("valid", f.valid),
        ("integrality_only_if", f.integrality_only_if),
        ("fixes_zero", f.fixes_zero),
        ("non_degenerate", f.non_degenerate),
        ("monogenic", f.monogenic),
        ("semi_simple", f.semi_simple),
        ("simple", f.simple),
        ("semi_basic", f.semi_basic),
        ("basic", f.basic),
    ] {
        writeln!(text, "  {name}: {value}").unwrap();
    }
    let mut class = vec![if f.valid { "valid" } else { "invalid" }.to_string()];
    if f.semi_basic {
        class.push("semi-basic".to_string());
    }
    if f.basic {
        class.push("basic".to_string());
    }
    if f.valid && !f.simple {
        class.push("not simple".to_string());
    }
    match def.q_of() {
        Ok(q) => class.push(format!("q_H = {q}")),
        Err(_) => class.push("q_H undefined (every multiplier is 1)".to_string()),
    }
    writeln!(text, "class: {}", class.join(", ")).unwrap();
    emit(&cli.out, &text)?;
    if f.valid {
        Ok(())
    } else {
        Err(input_error("map is well-formed but not valid"))
    }
}

fn cmd_table(def: &MapDef, cli: &Cli, n_max: u64) -> Result<(), CliError> {
    let f = def.flags();
    if !(f.valid && f.fixes_zero) {
        return Err(input_error("the table needs a valid map that fixes zero"));
    }
    let rho = def.rho();
    // chi_B(0) = chi(0) = 0 exactly; larger n need the geometric-series form,
    // which only makes sense on semi-basic maps.
    let chi_b_of = |n: u64| -> Option<Rational> {
        if n == 0 {
            Some(Rational::zero())
        } else if f.semi_basic {
            match chi_b(def, n) {
                Ok(x) => Some(x),
                Err(ChiError::UnitSlope) => None,
                Err(e) => unreachable!("chi_b on {n}: {e}"),
            }
        } else {
            None
        }
    };

    let content = match cli.format {
        Format::Csv => {
            let mut out = String::from("n");
            for k in 0..rho {
                write!(out, ",count_{k}").unwrap();
            }
            out.push_str(",lambda,chi_num,chi_den,chi_b_num,chi_b_den,is_integer\n");
            for n in 0..=n_max {
                let s = DigitString::from_integer(n, rho);
                write!(out, "{n}").unwrap();
                for k in 0..rho {
                    write!(out, ",{}", s.count(k)).unwrap();
                }
                let chi = chi_of_n(def, n);
                let (cn, cd) = num_den(&chi);
                write!(out, ",{},{cn},{cd}", s.len()).unwrap();
                match chi_b_of(n) {
                    Some(x) => {
                        let (bn, bd) = num_den(&x);
                        writeln!(out, ",{bn},{bd},{}", x.is_integer()).unwrap();
                    }
                    None => out.push_str(",,,false\n"),
                }
            }
            out
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = (0..=n_max)
                .map(|n| {
                    let s = DigitString::from_integer(n, rho);
                    let counts: Vec<usize> = (0..rho).map(|k| s.count(k)).collect();
                    let chi = chi_of_n(def, n);
                    let (cn, cd) = num_den(&chi);
                    let (bn, bd, int) = match chi_b_of(n) {
                        Some(x) => {
                            let (bn, bd) = num_den(&x);
                            (Some(bn), Some(bd), x.is_integer())
                        }
                        None => (None, None, false),
                    };
                    serde_json::json!({
                        "n": n,
                        "counts": counts,
                        "lambda": s.len(),
                        "chi_num": cn,
                        "chi_den": cd,
                        "chi_b_num": bn,
                        "chi_b_den": bd,
                        "is_integer": int,
                    })
                })
                .collect();
            let mut text = serde_json::to_string_pretty(&rows).unwrap();
            text.push('\n');
            text
        }
    };
    emit(&cli.out, &content)?;
    eprintln!("table: {} rows for rho = {rho}", n_max + 1);
    Ok(())
}

fn cmd_search(def: &MapDef, cli: &Cli, n_max: u64) -> Result<(), CliError> {
    if !def.flags().semi_basic {
        return Err(input_error("search needs a semi-basic map"));
    }
    let limits = SearchLimits::default();
    let report = correspondence_search(def, n_max, &limits, cli.threads);
    let content = match cli.format {
        Format::Csv => search_table_csv(def, n_max, &limits, cli.threads),
        Format::Json => search_table_json(def, n_max, &limits, cli.threads),
    };
    emit(&cli.out, &content)?;

    let verified = report.hits.iter().filter(|h| h.verified).count();
    let mut summary = format!(
        "search: examined {} seeds, {} integer hits, {} verified, {} unit-slope skips",
        report.examined,
        report.hits.len(),
        verified,
        report.unit_slope.len()
    );
    if !report.map_is_basic {
        summary.push_str(" (map is semi-basic, not basic: hits need not be cycle members)");
    }
    eprintln!("{summary}");

    if report.map_is_basic {
        let unverified = report.hits.len() - verified;
        if unverified > 0 {
            return Err(violation(format!(
                "{unverified} integer hits on a basic map did not land on cycles"
            )));
        }
        let sign_breaches = report
            .hits
            .iter()
            .filter(|h| h.x.is_positive() != h.slope_less_than_one)
            .count();
        if sign_breaches > 0 {
            return Err(violation(format!(
                "{sign_breaches} hits break the sign law (x > 0 iff slope below one)"
            )));
        }
    }
    Ok(())
}

fn cmd_audit(def: &MapDef, cli: &Cli, max_len: u32, seed_bound: u64) -> Result<(), CliError> {
    if !def.flags().valid {
        return Err(input_error("audit needs a valid map"));
    }
    let report = wrong_value_audit(def, max_len, seed_bound);
    let content = match cli.format {
        Format::Csv => {
            let mut out = String::new();
            writeln!(out, "# max_len = {}", report.max_len).unwrap();
            writeln!(out, "# seed_bound = {}", report.seed_bound).unwrap();
            writeln!(out, "# evaluations = {}", report.evaluations).unwrap();
            writeln!(out, "# integer_wrong_values = {}", report.integer_wrong_values).unwrap();
            out.push_str("digits,seed,value\n");
            for w in &report.examples {
                let digits: Vec<String> =
                    w.string.digits().iter().map(|d| d.to_string()).collect();
                writeln!(out, "{},{},{}", digits.join(";"), w.seed, w.value).unwrap();
            }
            out
        }
        Format::Json => {
            let examples: Vec<serde_json::Value> = report
                .examples
                .iter()
                .map(|w| {
                    serde_json::json!({
                        "digits": w.string.digits(),
                        "seed": w.seed,
                        "value": w.value.to_string(),
                    })
                })
                .collect();
            let doc = serde_json::json!({
                "max_len": report.max_len,
                "seed_bound": report.seed_bound,
                "evaluations": report.evaluations,
                "integer_wrong_values": report.integer_wrong_values,
                "examples": examples,
            });
            let mut text = serde_json::to_string_pretty(&doc).unwrap();
            text.push('\n');
            text
        }
    };
    emit(&cli.out, &content)?;
    eprintln!(
        "audit: {} evaluations, {} integer wrong values",
        report.evaluations, report.integer_wrong_values
    );
    if def.flags().basic && report.integer_wrong_values > 0 {
        return Err(violation(format!(
            "{} integer wrong values on a basic map",
            report.integer_wrong_values
        )));
    }
    Ok(())
}

fn cmd_spectral(def: &MapDef, cli: &Cli, level: u32, depth: u32, tol: f64) -> Result<(), CliError> {
    if !def.flags().semi_basic {
        return Err(input_error("spectral needs a semi-basic map"));
    }
    if !(tol > 0.0) {
        return Err(input_error("--tol must be positive"));
    }
    let outcome = stationary_distribution(def, level, tol, STATIONARY_MAX_ITER)
        .map_err(|e| violation(format!("stationary law: {e}")))?;
    let dist = &outcome.distribution;
    let phi = phi_from_distribution(dist);
    let residual = functional_equation_residual(def, &phi);
    let (mass, energy) = parseval_check(dist, &phi);
    let parseval_gap = (mass - energy).abs();
    let empirical = empirical_distribution(def, level, depth, cli.threads);
    let tv = dist.total_variation(&empirical);

    let meta: Vec<(&str, String)> = vec![
        ("tol", format!("{tol:e}")),
        ("iterations", outcome.iterations.to_string()),
        ("step_residual", format!("{:e}", outcome.residual)),
        ("functional_equation_residual", format!("{residual:e}")),
        ("parseval_gap", format!("{parseval_gap:e}")),
        (
            "tv_against_empirical",
            format!("{tv:e} (depth {depth})"),
        ),
    ];
    let content = match cli.format {
        Format::Csv => {
            let mut out = distribution_csv(dist, &meta);
            out.push_str(&phi_csv(&phi, &[]));
            out
        }
        Format::Json => {
            let dist_doc: serde_json::Value =
                serde_json::from_str(&distribution_json(dist, &meta)).unwrap();
            let phi_doc: serde_json::Value = serde_json::from_str(&phi_json(&phi, &[])).unwrap();
            let doc = serde_json::json!({
                "distribution": dist_doc,
                "phi": phi_doc,
            });
            let mut text = serde_json::to_string_pretty(&doc).unwrap();
            text.push('\n');
            text
        }
    };
    emit(&cli.out, &content)?;
    eprintln!(
        "spectral level {level}: {} iterations, step {:.2e}, eq residual {residual:.2e}, \
         parseval gap {parseval_gap:.2e}, tv {tv:.4} at depth {depth}",
        outcome.iterations, outcome.residual
    );

    let mut failures = Vec::new();
    if !(residual < FUNCTIONAL_EQ_TOL) {
        failures.push(format!(
            "functional equation residual {residual:e} >= {FUNCTIONAL_EQ_TOL:e}"
        ));
    }
    if !(parseval_gap < PARSEVAL_TOL) {
        failures.push(format!("parseval gap {parseval_gap:e} >= {PARSEVAL_TOL:e}"));
    }
    if !(tv < TV_TOL) {
        failures.push(format!("total variation {tv:e} >= {TV_TOL:e}"));
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(violation(failures.join("; ")))
    }
}

fn cmd_denominators(def: &MapDef, cli: &Cli, n_max: u64) -> Result<(), CliError> {
    if !def.flags().semi_basic {
        return Err(input_error("denominators needs a semi-basic map"));
    }
    let rho = def.rho();
    let mut unit = 0u64;
    let mut dividing = 0u64;
    let rows: Vec<_> = (1..=n_max).map(|n| denominator_analysis(def, n)).collect();
    for row in &rows {
        if row.abs_d_is_one {
            unit += 1;
        }
        if row.divides_numerator {
            dividing += 1;
        }
    }
    let content = match cli.format {
        Format::Csv => {
            let mut out = String::from("n,lambda");
            for k in 0..rho {
                write!(out, ",count_{k}").unwrap();
            }
            out.push_str(",D,abs_D_is_one,divides_numerator,mu,mu_exponent\n");
            for row in &rows {
                write!(out, "{},{}", row.n, row.lambda).unwrap();
                for e in &row.exponents {
                    write!(out, ",{e}").unwrap();
                }
                write!(
                    out,
                    ",{},{},{}",
                    row.d, row.abs_d_is_one, row.divides_numerator
                )
                .unwrap();
                match &row.mihailescu_shape {
                    Some(gap) => writeln!(out, ",{},{}", gap.mu, gap.exponent).unwrap(),
                    None => out.push_str(",,\n"),
                }
            }
            out
        }
        Format::Json => {
            let docs: Vec<serde_json::Value> = rows
                .iter()
                .map(|row| {
                    let shape = row.mihailescu_shape.as_ref().map(|gap| {
                        serde_json::json!({"mu": gap.mu, "exponent": gap.exponent})
                    });
                    serde_json::json!({
                        "n": row.n,
                        "lambda": row.lambda,
                        "counts": row.exponents,
                        "d": row.d.to_string(),
                        "abs_d_is_one": row.abs_d_is_one,
                        "divides_numerator": row.divides_numerator,
                        "power_shape": shape,
                    })
                })
                .collect();
            let mut text = serde_json::to_string_pretty(&docs).unwrap();
            text.push('\n');
            text
        }
    };
    emit(&cli.out, &content)?;
    eprintln!(
        "denominators: {} rows, {unit} with |D| = 1, {dividing} dividing the cleared value",
        rows.len()
    );
    Ok(())
}
