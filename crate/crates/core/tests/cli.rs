//! End-to-end behaviour of the command-line tool.

use std::io::Write;
use std::process::Command;

use causalreg::cli::{run, validate_report, ReportKind, EXIT_INPUT, EXIT_NEGATIVE, EXIT_NUMERICAL, EXIT_OK};
use serde_json::Value;

struct Outcome {
    code: i32,
    out: String,
    err: String,
}

fn call(args: &[&str]) -> Outcome {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(std::iter::once("causalreg").chain(args.iter().copied()), &mut out, &mut err);
    Outcome {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn json(o: &Outcome) -> Value {
    serde_json::from_str(&o.out).unwrap_or_else(|e| panic!("{e}: {}", o.out))
}

fn sets(v: &Value) -> Vec<Vec<String>> {
    serde_json::from_value(v["adjustment_sets"].clone()).unwrap()
}

#[test]
fn analyze_exit_codes_and_sets() {
    let o = call(&["analyze", "--dag", "fig1a"]);
    assert_eq!(o.code, EXIT_OK);
    assert_eq!(sets(&json(&o)), vec![vec!["L".to_string()]]);

    let o = call(&["analyze", "--dag", "fig2b"]);
    assert_eq!(o.code, EXIT_NEGATIVE);
    assert_eq!(json(&o)["identified"], false);

    let o = call(&["analyze", "--dag", "fig8c", "--conditioned", "S", "--minimal"]);
    assert_eq!(o.code, EXIT_OK);
    assert_eq!(sets(&json(&o)), vec![vec!["L1".to_string()], vec!["L2".to_string()]]);
}

#[test]
fn analyze_reads_files() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "# confounded\nL -> A\nL -> Y\nA -> Y").unwrap();
    let path = f.path().to_str().unwrap();
    let o = call(&["analyze", "--dag", path, "--exposure", "A", "--outcome", "Y"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.err);
    assert_eq!(sets(&json(&o)), vec![vec!["L".to_string()]]);

    let o = call(&["analyze", "--dag", path, "--exposure", "A", "--outcome", "Y", "--unmeasured", "L"]);
    assert_eq!(o.code, EXIT_NEGATIVE);
}

#[test]
fn input_errors_exit_one_with_message_on_stderr() {
    let mut cyclic = tempfile::NamedTempFile::new().unwrap();
    writeln!(cyclic, "A -> B\nB -> A").unwrap();
    for args in [
        vec!["analyze", "--dag", "no-such-file.dag"],
        vec!["analyze", "--dag", cyclic.path().to_str().unwrap(), "--exposure", "A", "--outcome", "B"],
        vec!["analyze", "--dag", "fig1a", "--exposure", "Q"],
        vec!["simulate", "--model", "setup1", "--n", "0"],
        vec!["fit", "--model", "setup1", "--formula", "Y ~ Nope"],
        vec!["collapse", "--table", "missing.csv"],
        vec!["bogus"],
    ] {
        let o = call(&args);
        assert_eq!(o.code, EXIT_INPUT, "{args:?}");
        assert!(o.out.is_empty(), "{args:?} wrote to stdout");
        assert!(!o.err.is_empty(), "{args:?} gave no message");
    }
}

#[test]
fn numerical_failures_exit_three() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "a,b,y\n1,2,0.5\n2,4,0.1\n3,6,0.9\n4,8,0.3").unwrap();
    let o = call(&["fit", "--data", f.path().to_str().unwrap(), "--formula", "y ~ a + b"]);
    assert_eq!(o.code, EXIT_NUMERICAL);
    assert!(o.err.contains('b'), "{}", o.err);

    let o = call(&["fit", "--model", "setup1", "--formula", "Y ~ A + A"]);
    assert_eq!(o.code, EXIT_INPUT);

    // A perfectly separating covariate.
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "x,y\n-2,0\n-1,0\n1,1\n2,1").unwrap();
    let o = call(&["fit", "--data", f.path().to_str().unwrap(), "--formula", "y ~ x", "--estimator", "logistic"]);
    assert_eq!(o.code, EXIT_NUMERICAL, "{}", o.err);

    let mut cfg = tempfile::NamedTempFile::new().unwrap();
    write!(
        cfg,
        r#"{{"seed": 1, "scenarios": [{{"label": "collinear", "model": "setup1",
            "formula": "Y ~ A + A^2", "estimator": "ols", "estimand": "ATE",
            "target": "A", "replications": 5, "n": 100}}]}}"#
    )
    .unwrap();
    let o = call(&["study", "--config", cfg.path().to_str().unwrap()]);
    assert_eq!(o.code, EXIT_NUMERICAL, "{}", o.err);
    assert_eq!(validate_report(&o.out), Ok(ReportKind::Study));
}

#[test]
fn missingness_verdicts() {
    let o = call(&["missingness", "--mdag", "fig5"]);
    assert_eq!(o.code, EXIT_OK);
    let v = json(&o);
    assert_eq!(v["complete_case"]["valid"], true);
    assert_eq!(v["complete_case"]["requires_positivity"], true);
}

#[test]
fn collapse_table1_odds_ratio() {
    let o = call(&["collapse", "--table", "table1", "--measure", "odds-ratio"]);
    assert_eq!(o.code, EXIT_NEGATIVE);
    let v = json(&o);
    let marginal = v["measures"][0]["marginal"].as_f64().unwrap();
    assert!((marginal - 2.25).abs() < 1e-9);

    let o = call(&["collapse", "--table", "table1", "--measure", "risk-difference"]);
    assert_eq!(o.code, EXIT_OK);
}

#[test]
fn simulate_writes_csv() {
    let o = call(&["simulate", "--model", "setup1", "--n", "5", "--seed", "1"]);
    assert_eq!(o.code, EXIT_OK);
    let lines: Vec<&str> = o.out.lines().collect();
    assert_eq!(lines.len(), 6);
    assert_eq!(lines[0], "L,A,Y");
    assert_eq!(o.out, call(&["simulate", "--model", "setup1", "--n", "5", "--seed", "1"]).out);
    assert_ne!(o.out, call(&["simulate", "--model", "setup1", "--n", "5", "--seed", "2"]).out);

    let o = call(&["simulate", "--model", "setup1", "--n", "5", "--set", "A=1"]);
    assert!(o.out.lines().skip(1).all(|l| l.split(',').nth(1) == Some("1")));
}

#[test]
fn every_json_report_validates() {
    let mut rows = tempfile::NamedTempFile::new().unwrap();
    writeln!(rows, "Z,A,Y\n1,1,1\n1,1,1\n1,1,0\n1,0,1\n0,0,1\n0,0,0\n0,0,0\n0,1,0").unwrap();
    let rows = rows.path().to_str().unwrap().to_string();
    let cases: Vec<(Vec<&str>, ReportKind)> = vec![
        (vec!["analyze", "--dag", "fig3"], ReportKind::Analyze),
        (vec!["missingness", "--mdag", "fig5"], ReportKind::Missingness),
        (vec!["collapse", "--table", "table1"], ReportKind::Collapse),
        (
            vec!["simulate", "--model", "setup5", "--true-effect", "log_MOR", "--oracle-n", "100000"],
            ReportKind::TrueEffect,
        ),
        (
            vec!["fit", "--model", "setup1", "--formula", "Y ~ A + L", "--positivity", "A", "--covariates", "L"],
            ReportKind::Fit,
        ),
        (vec!["fit", "--data", &rows, "--noncompliance", "Z,A,Y"], ReportKind::Noncompliance),
        (vec!["study", "--runs", "10", "--n", "200"], ReportKind::Study),
    ];
    for (args, kind) in cases {
        let o = call(&args);
        assert!(o.code == EXIT_OK || o.code == EXIT_NEGATIVE, "{args:?}: {}", o.err);
        assert_eq!(validate_report(&o.out), Ok(kind), "{args:?}");
        let v = json(&o);
        assert_eq!(v["schema_version"], 1);

        // The validator subcommand agrees, via a file.
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(o.out.as_bytes()).unwrap();
        let check = call(&["validate", f.path().to_str().unwrap()]);
        assert_eq!(check.code, EXIT_OK, "{args:?}: {}", check.err);
        assert_eq!(validate_report(&check.out), Ok(ReportKind::Validate));
    }
}

#[test]
fn validator_rejects_tampered_reports() {
    let o = call(&["analyze", "--dag", "fig1a"]);
    let mut v = json(&o);
    v["surprise"] = Value::Bool(true);
    assert!(validate_report(&v.to_string()).is_err());
    let mut v = json(&o);
    v["schema_version"] = Value::from(99);
    assert!(validate_report(&v.to_string()).is_err());
    assert!(validate_report("not json").is_err());
}

#[test]
fn noncompliance_report_matches_hand_arithmetic() {
    let mut rows = tempfile::NamedTempFile::new().unwrap();
    writeln!(rows, "Z,A,Y\n1,1,1\n1,1,1\n1,1,0\n1,0,1\n0,0,1\n0,0,0\n0,0,0\n0,1,0").unwrap();
    let o = call(&["fit", "--data", rows.path().to_str().unwrap(), "--noncompliance", "Z,A,Y"]);
    let e = &json(&o)["estimands"];
    assert_eq!(e["itt"].as_f64(), Some(0.5));
    assert_eq!(e["as_treated"].as_f64(), Some(0.0));
    assert_eq!(e["cace"].as_f64(), Some(0.5 / 0.75));
}

#[test]
fn study_json_is_byte_identical_across_worker_counts() {
    let base = ["study", "--seed", "7", "--runs", "40", "--n", "300"];
    let one = call(&[&base[..], &["--workers", "1"]].concat());
    let many = call(&[&base[..], &["--workers", "4"]].concat());
    assert_eq!(one.code, EXIT_OK);
    assert_eq!(one.out, many.out);
    let other_seed = call(&["study", "--seed", "8", "--runs", "40", "--n", "300"]);
    assert_ne!(one.out, other_seed.out);
}

#[test]
fn binary_uses_streams_and_seed_variable() {
    let exe = env!("CARGO_BIN_EXE_causalreg");
    let out = Command::new(exe)
        .args(["simulate", "--model", "setup1", "--n", "3"])
        .env("CAUSALREG_SEED", "42")
        .output()
        .unwrap();
    assert!(out.status.success());
    let explicit = Command::new(exe)
        .args(["simulate", "--model", "setup1", "--n", "3", "--seed", "42"])
        .env_remove("CAUSALREG_SEED")
        .output()
        .unwrap();
    assert_eq!(out.stdout, explicit.stdout);
    assert!(out.stderr.is_empty());

    let bad = Command::new(exe).args(["analyze", "--dag", "fig2b"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_NEGATIVE));
    let missing = Command::new(exe).args(["analyze", "--dag", "nowhere.txt"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(EXIT_INPUT));
    assert!(missing.stdout.is_empty());
    assert!(!missing.stderr.is_empty());
}
