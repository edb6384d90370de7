//! End-to-end runs of the chimap binary: golden tables, exit codes, and
//! worker-count determinism of the emitted files.

use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chimap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn validate_classifies_the_multiplier_maps() {
    let out = run(&["validate", "--map", &fixture("t3.json")]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout_of(&out);
    assert!(text.contains("mu = [1, 3]"), "{text}");
    assert!(text.contains("  basic: true"), "{text}");
    assert!(text.contains("class: valid, semi-basic, basic, q_H = 3"), "{text}");

    let out = run(&["validate", "--map", &fixture("t5.json")]);
    assert_eq!(exit_code(&out), 0);
    assert!(stdout_of(&out).contains("q_H = 5"));
}

#[test]
fn validate_reports_the_classical_map_as_not_simple() {
    let out = run(&["validate", "--map", &fixture("collatz.json")]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout_of(&out);
    assert!(text.contains("mu = [1, 6]"), "{text}");
    assert!(text.contains("  simple: false"), "{text}");
    assert!(text.contains("not simple"), "{text}");
    assert!(text.contains("semi-basic"), "{text}");
}

#[test]
fn inline_map_definitions_are_accepted() {
    let out = run(&[
        "validate",
        "--map",
        r#"{"rho":2,"branches":[{"a":1,"b":0,"d":2},{"a":7,"b":1,"d":2}]}"#,
    ]);
    assert_eq!(exit_code(&out), 0);
    assert!(stdout_of(&out).contains("q_H = 7"));
}

#[test]
fn input_problems_exit_with_code_two() {
    // Ill-formed definition (zero divisor).
    let out = run(&["validate", "--map", &fixture("bad.json")]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr_of(&out).contains("bad map definition"));

    // Unreadable path.
    let out = run(&["table", "--map", "/nonexistent/map.json"]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr_of(&out).contains("cannot read"));

    // No map at all.
    let out = run(&["search"]);
    assert_eq!(exit_code(&out), 2);

    // Zero worker threads.
    let out = run(&["search", "--map", &fixture("t3.json"), "--threads", "0"]);
    assert_eq!(exit_code(&out), 2);

    // Unknown flag: clap's own usage error.
    let out = run(&["table", "--map", &fixture("t3.json"), "--bogus"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn well_formed_but_invalid_maps_report_and_exit_two() {
    // mu_1 = 2*3/4 is not an integer, so the map cannot be valid.
    let out = run(&[
        "validate",
        "--map",
        r#"{"rho":2,"branches":[{"a":1,"b":0,"d":2},{"a":3,"b":1,"d":4}]}"#,
    ]);
    assert_eq!(exit_code(&out), 2);
    let text = stdout_of(&out);
    assert!(text.contains("  valid: false"), "{text}");
    assert!(stderr_of(&out).contains("not valid"));

    // The scanning commands refuse it up front.
    let out = run(&[
        "search",
        "--map",
        r#"{"rho":2,"branches":[{"a":1,"b":0,"d":2},{"a":3,"b":1,"d":4}]}"#,
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr_of(&out).contains("semi-basic"));
}

#[test]
fn table_matches_the_published_values_for_a_3() {
    let out = run(&["table", "--map", &fixture("t3.json"), "--n-max", "14"]);
    assert_eq!(exit_code(&out), 0);
    let expected = "\
n,count_0,count_1,lambda,chi_num,chi_den,chi_b_num,chi_b_den,is_integer
0,0,0,0,0,1,0,1,true
1,0,1,1,1,2,-1,1,true
2,1,1,2,1,4,1,1,true
3,0,2,2,5,4,-1,1,true
4,2,1,3,1,8,1,5,false
5,1,2,3,7,8,-7,1,true
6,1,2,3,5,8,-5,1,true
7,0,3,3,19,8,-1,1,true
8,3,1,4,1,16,1,13,false
9,2,2,4,11,16,11,7,false
10,2,2,4,7,16,1,1,true
11,1,3,4,29,16,-29,11,false
12,2,2,4,5,16,5,7,false
13,1,3,4,23,16,-23,11,false
14,1,3,4,19,16,-19,11,false
";
    assert_eq!(stdout_of(&out), expected);
}

#[test]
fn table_matches_the_published_values_for_a_5() {
    let out = run(&["table", "--map", &fixture("t5.json"), "--n-max", "14"]);
    assert_eq!(exit_code(&out), 0);
    let expected = "\
n,count_0,count_1,lambda,chi_num,chi_den,chi_b_num,chi_b_den,is_integer
0,0,0,0,0,1,0,1,true
1,0,1,1,1,2,-1,3,false
2,1,1,2,1,4,-1,1,true
3,0,2,2,7,4,-1,3,false
4,2,1,3,1,8,1,3,false
5,1,2,3,9,8,-9,17,false
6,1,2,3,7,8,-7,17,false
7,0,3,3,39,8,-1,3,false
8,3,1,4,1,16,1,11,false
9,2,2,4,13,16,-13,9,false
10,2,2,4,9,16,-1,1,true
11,1,3,4,53,16,-53,109,false
12,2,2,4,7,16,-7,9,false
13,1,3,4,43,16,-43,109,false
14,1,3,4,39,16,-39,109,false
";
    assert_eq!(stdout_of(&out), expected);
}

#[test]
fn table_json_rows_carry_the_same_values() {
    let out = run(&[
        "table", "--map", &fixture("t3.json"), "--n-max", "11", "--format", "json",
    ]);
    assert_eq!(exit_code(&out), 0);
    let rows: serde_json::Value = serde_json::from_str(&stdout_of(&out)).expect("json");
    let rows = rows.as_array().expect("array");
    assert_eq!(rows.len(), 12);
    assert_eq!(rows[0]["chi_b_num"], "0");
    assert_eq!(rows[11]["chi_num"], "29");
    assert_eq!(rows[11]["chi_den"], "16");
    assert_eq!(rows[11]["chi_b_num"], "-29");
    assert_eq!(rows[11]["chi_b_den"], "11");
    assert_eq!(rows[11]["is_integer"], false);
    assert_eq!(rows[7]["counts"], serde_json::json!([0, 3]));
}

#[test]
fn search_emits_hits_with_dynamic_verification() {
    let out = run(&["search", "--map", &fixture("t3.json"), "--n-max", "16"]);
    assert_eq!(exit_code(&out), 0);
    let expected = "\
n,x_num,x_den,is_integer,verified,cycle_min,cycle_len,D,abs_D_is_one
1,-1,1,true,true,-1,1,-1,true
2,1,1,true,true,1,2,1,true
3,-1,1,true,true,-1,1,-5,false
4,1,5,false,false,,,5,false
5,-7,1,true,true,-10,3,-1,true
6,-5,1,true,true,-10,3,-1,true
7,-1,1,true,true,-1,1,-19,false
8,1,13,false,false,,,13,false
9,11,7,false,false,,,7,false
10,1,1,true,true,1,2,7,false
11,-29,11,false,false,,,-11,false
12,5,7,false,false,,,7,false
13,-23,11,false,false,,,-11,false
14,-19,11,false,false,,,-11,false
15,-1,1,true,true,-1,1,-65,false
16,1,29,false,false,,,29,false
";
    assert_eq!(stdout_of(&out), expected);
    let summary = stderr_of(&out);
    assert!(summary.contains("examined 16 seeds, 8 integer hits, 8 verified"), "{summary}");
}

#[test]
fn search_on_the_classical_map_warns_but_succeeds() {
    let out = run(&["search", "--map", &fixture("collatz.json"), "--n-max", "8"]);
    assert_eq!(exit_code(&out), 0);
    let summary = stderr_of(&out);
    assert!(summary.contains("semi-basic, not basic"), "{summary}");
}

#[test]
fn search_output_is_identical_across_worker_counts() {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let mut bodies = Vec::new();
    for threads in ["1", "4", "8"] {
        let path = dir.join(format!("search-{threads}.csv"));
        let out = run(&[
            "search", "--map", &fixture("t3.json"), "--n-max", "2048",
            "--threads", threads, "--out", path.to_str().expect("utf-8 path"),
        ]);
        assert_eq!(exit_code(&out), 0);
        bodies.push(std::fs::read(&path).expect("output file"));
    }
    assert_eq!(bodies[0], bodies[1]);
    assert_eq!(bodies[0], bodies[2]);

    let mut json_bodies = Vec::new();
    for threads in ["1", "8"] {
        let path = dir.join(format!("search-{threads}.json"));
        let out = run(&[
            "search", "--map", &fixture("t3.json"), "--n-max", "512",
            "--threads", threads, "--format", "json",
            "--out", path.to_str().expect("utf-8 path"),
        ]);
        assert_eq!(exit_code(&out), 0);
        json_bodies.push(std::fs::read(&path).expect("output file"));
    }
    assert_eq!(json_bodies[0], json_bodies[1]);
}

#[test]
fn audit_is_quiet_on_a_basic_map_and_loud_on_the_classical_one() {
    let out = run(&[
        "audit", "--map", &fixture("t3.json"), "--max-len", "5", "--seed-bound", "20",
    ]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout_of(&out);
    assert!(text.contains("# integer_wrong_values = 0"), "{text}");

    let out = run(&[
        "audit", "--map", &fixture("collatz.json"), "--max-len", "3", "--seed-bound", "10",
    ]);
    // Wrong values are expected off the basic class; reported, not fatal.
    assert_eq!(exit_code(&out), 0);
    let text = stdout_of(&out);
    let count_line = text
        .lines()
        .find(|l| l.starts_with("# integer_wrong_values = "))
        .expect("count line");
    let count: u64 = count_line.rsplit(' ').next().unwrap().parse().unwrap();
    assert!(count > 0, "{text}");
    assert!(text.lines().any(|l| l.contains(';') || l.matches(',').count() == 2), "{text}");
}

#[test]
fn audit_json_lists_examples() {
    let out = run(&[
        "audit", "--map", &fixture("collatz.json"), "--max-len", "2", "--seed-bound", "5",
        "--format", "json",
    ]);
    assert_eq!(exit_code(&out), 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).expect("json");
    assert!(doc["integer_wrong_values"].as_u64().expect("count") > 0);
    assert!(doc["examples"].as_array().expect("examples").len() > 0);
}

#[test]
fn spectral_passes_its_own_checks_on_a_3() {
    let out = run(&["spectral", "--map", &fixture("t3.json"), "--level", "2", "--depth", "12"]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout_of(&out);
    assert!(text.contains("# q = 3"), "{text}");
    assert!(text.contains("# level = 2"), "{text}");
    assert!(text.contains("index,value"), "{text}");
    assert!(text.contains("index,re,im"), "{text}");
    assert!(stderr_of(&out).contains("parseval gap"));
}

#[test]
fn spectral_tolerance_breach_exits_three() {
    // A depth-1 empirical law is nowhere near stationary: the alarm must fire.
    let out = run(&["spectral", "--map", &fixture("t3.json"), "--level", "2", "--depth", "1"]);
    assert_eq!(exit_code(&out), 3);
    assert!(stderr_of(&out).contains("total variation"));
}

#[test]
fn spectral_json_nests_both_tables() {
    let out = run(&[
        "spectral", "--map", &fixture("t5.json"), "--level", "1", "--depth", "12",
        "--format", "json",
    ]);
    assert_eq!(exit_code(&out), 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).expect("json");
    let probs = doc["distribution"]["probabilities"].as_array().expect("probabilities");
    assert_eq!(probs.len(), 5);
    let values = doc["phi"]["values"].as_array().expect("phi values");
    assert_eq!(values.len(), 5);
    // Stationary law for the 5x + 1 map at level 1: (0, 1/15, 2/15, 8/15, 4/15).
    assert!((probs[3].as_f64().unwrap() - 8.0 / 15.0).abs() < 1e-9);
}

#[test]
fn denominators_table_shows_the_power_gap_structure() {
    let out = run(&["denominators", "--map", &fixture("t3.json"), "--n-max", "10"]);
    assert_eq!(exit_code(&out), 0);
    let expected = "\
n,lambda,count_0,count_1,D,abs_D_is_one,divides_numerator,mu,mu_exponent
1,1,0,1,-1,true,true,3,1
2,2,1,1,1,true,true,3,1
3,2,0,2,-5,false,true,3,2
4,3,2,1,5,false,false,3,1
5,3,1,2,-1,true,true,3,2
6,3,1,2,-1,true,true,3,2
7,3,0,3,-19,false,true,3,3
8,4,3,1,13,false,false,3,1
9,4,2,2,7,false,false,3,2
10,4,2,2,7,false,true,3,2
";
    assert_eq!(stdout_of(&out), expected);
    assert!(stderr_of(&out).contains("4 with |D| = 1"));
}

#[test]
fn denominators_json_carries_the_shape_field() {
    let out = run(&[
        "denominators", "--map", &fixture("t3.json"), "--n-max", "10", "--format", "json",
    ]);
    assert_eq!(exit_code(&out), 0);
    let rows: serde_json::Value = serde_json::from_str(&stdout_of(&out)).expect("json");
    let rows = rows.as_array().expect("array");
    assert_eq!(rows[9]["d"], "7");
    assert_eq!(rows[9]["divides_numerator"], true);
    assert_eq!(rows[9]["power_shape"]["mu"], 3);
    assert_eq!(rows[9]["power_shape"]["exponent"], 2);
}
