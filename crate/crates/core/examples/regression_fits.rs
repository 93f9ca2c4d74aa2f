//! Linear and logistic fits on simulated data, plus a propensity check.

use causalreg::estimators::{logistic_fit, ols_fit, positivity_check, DesignSpec};
use causalreg::fixtures::model_fixture;
use causalreg::scm::simulate;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let d = simulate(&model_fixture("setup1").unwrap().model(), 1000, 3)?;
    let fit = ols_fit(&d, &DesignSpec::parse("Y ~ A + L")?)?;
    for ((t, b), se) in fit.terms.iter().zip(&fit.coefficients).zip(&fit.std_errors) {
        println!("{t:<12} {b:>8.4} ({se:.4})");
    }

    let p = positivity_check(&d, "A", &["L"], 0.01)?;
    println!(
        "propensity range [{:.4}, {:.4}], {} of {} rows flagged",
        p.min_propensity, p.max_propensity, p.flagged_rows, p.n
    );

    let d5 = simulate(&model_fixture("setup5").unwrap().model(), 1000, 3)?;
    for f in ["Y ~ A", "Y ~ A + L"] {
        let fit = logistic_fit(&d5, &DesignSpec::parse(f)?)?;
        let conv = fit.convergence.as_ref().unwrap();
        println!(
            "{f:<10} log OR {:.4}  ({} iterations, last step {:.1e})",
            fit.coef("A").unwrap(),
            conv.iterations,
            conv.final_step
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
