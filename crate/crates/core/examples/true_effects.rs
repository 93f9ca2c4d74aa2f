//! Monte-Carlo true effects for the built-in models, next to the closed form
//! where one exists.

use causalreg::fixtures::MODELS;
use causalreg::scm::{true_effect, MIN_ORACLE_N};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for f in MODELS {
        let t = true_effect(&f.model(), f.exposure, f.outcome, f.estimand, MIN_ORACLE_N, 345)?;
        let exact = f.exact_effect().map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
        println!(
            "{:<8} {:<8} oracle {:>7.4} +/- {:.4}   exact {exact}",
            f.name, f.estimand, t.value, t.mc_se
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
