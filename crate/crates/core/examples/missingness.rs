//! Classify a missingness graph and decide whether complete-case regression
//! is still valid.

use causalreg::fixtures::FIG5_MDAG;
use causalreg::missing::{classify_mechanism, complete_case_valid, implied_independencies, MDag};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let m = MDag::parse(FIG5_MDAG)?;
    let verdict = classify_mechanism(&m);
    println!("mechanism: {}", verdict.label);
    for w in &verdict.witnesses {
        println!("  because {w}");
    }
    for i in implied_independencies(&m) {
        println!("implies {i}");
    }
    let cc = complete_case_valid(&m, "A", "Y", ["L1", "L2"])?;
    println!("complete cases valid for Y ~ A + L1 + L2: {}", cc.valid);

    // If the outcome drives its own missingness, complete cases are biased.
    let augmented = MDag::parse(&format!("{FIG5_MDAG}Y -> C_Y\n"))?;
    let cc = complete_case_valid(&augmented, "A", "Y", ["L1", "L2"])?;
    println!("with Y -> C_Y: {}", cc.valid);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
