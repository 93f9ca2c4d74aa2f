//! Risk difference, risk ratio and odds ratio in a stratified 2x2 table.

use causalreg::tables::{Measure, StratifiedTable};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/table1.csv");
    let table = StratifiedTable::from_csv(std::fs::File::open(path)?)?;
    print!("{}", table.render());
    for m in Measure::ALL {
        let r = table.effect_measure(m)?;
        println!(
            "{:<16} marginal {:.4}  collapsible {}  strictly {}",
            m.label(),
            r.marginal,
            r.collapsible,
            r.strictly_collapsible
        );
    }
    assert_eq!(table, StratifiedTable::table1());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
