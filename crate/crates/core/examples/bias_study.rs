//! The ten-scenario bias panel at reduced size.

use causalreg::study::{run_study, StudyConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = StudyConfig::default_panel(7, 100, 500);
    cfg.oracle_n = 200_000;
    let report = run_study(&cfg, 0)?;
    print!("{}", report.render());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
