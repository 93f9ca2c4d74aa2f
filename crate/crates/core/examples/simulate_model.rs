//! Write a structural model, sample from it, and intervene on it.

use causalreg::scm::{simulate, Intervention, StructuralModel};

const MODEL: &str = "
L ~ normal(1, 1)
A ~ bernoulli(plogis(-0.5 + 2*L))
Y ~ normal(2 + A + 3*L + A*L, 1)
";

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let m = StructuralModel::parse(MODEL)?.with_name("modifier");
    println!("induced graph:\n{}", m.induced_dag().to_text());

    let d = simulate(&m, 5, 42)?;
    print!("{}", d.to_csv_string());

    let treated = m.intervene(Intervention { node: "A", value: 1.0 })?;
    print!("after setting A = 1:\n{}", treated.simplified().to_text());
    let d1 = simulate(&treated, 100_000, 42)?;
    println!("mean Y under A = 1: {:.3}", d1.mean("Y")?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
