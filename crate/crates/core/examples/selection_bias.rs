//! Study selection as a node that is always conditioned on.

use causalreg::fixtures::dag_fixture;
use causalreg::ident::{enumerate_adjustment_sets, EnumerateOptions};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let minimal = EnumerateOptions {
        minimal_only: true,
        ..Default::default()
    };
    for name in ["fig8a", "fig8b", "fig8c", "fig8d", "fig4c"] {
        let f = dag_fixture(name).unwrap();
        let sets = enumerate_adjustment_sets(&f.query()?, minimal)?;
        println!("{name}: conditioned on {:?}, minimal sets {sets:?}", f.conditioned);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
