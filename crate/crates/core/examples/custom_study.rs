//! A study described as JSON: does adding a collider to a correctly adjusted
//! model hurt, and how fast does the bias of the crude model shrink with n?

use causalreg::study::{run_study, StudyConfig};

const CONFIG: &str = r#"{
  "seed": 99,
  "oracle_n": 100000,
  "scenarios": [
    {"label": "adjusted", "model": "setup3", "formula": "Y ~ A + L",
     "estimator": "ols", "estimand": "ATE", "target": "A", "replications": 200, "n": 300},
    {"label": "adjusted + collider", "model": "setup3", "formula": "Y ~ A + L + L2",
     "estimator": "ols", "estimand": "ATE", "target": "A", "replications": 200, "n": 300},
    {"label": "crude, n=100", "model": "setup1", "formula": "Y ~ A",
     "estimator": "ols", "estimand": "ATE", "target": "A", "replications": 200, "n": 100},
    {"label": "crude, n=1000", "model": "setup1", "formula": "Y ~ A",
     "estimator": "ols", "estimand": "ATE", "target": "A", "replications": 200, "n": 1000}
  ]
}"#;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg: StudyConfig = serde_json::from_str(CONFIG)?;
    let report = run_study(&cfg, 2)?;
    print!("{}", report.render());

    let mut csv = Vec::new();
    report.write_estimates_csv(&mut csv)?;
    println!("{} per-replication rows", String::from_utf8(csv)?.lines().count() - 1);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
