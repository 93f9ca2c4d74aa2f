//! d-separation queries, checked against explicit path enumeration.

use causalreg::fixtures::dag_fixture;
use causalreg::graph::NodeSet;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    // A -> C <- L <- U -> Y
    let dag = dag_fixture("fig4c").unwrap().dag();
    let none: [&str; 0] = [];

    println!("A _||_ Y          : {}", dag.d_separated(["A"], ["Y"], none)?);
    println!("A _||_ Y | C      : {}", dag.d_separated(["A"], ["Y"], ["C"])?);
    println!("A _||_ Y | C, L   : {}", dag.d_separated(["A"], ["Y"], ["C", "L"])?);

    let z: NodeSet = ["C".to_string()].into();
    for path in dag.all_paths("A", "Y")? {
        let colliders = path.colliders();
        println!(
            "{path}: colliders {colliders:?}, blocked by {{C}}: {}",
            path.is_blocked_by(&dag, &z)?
        );
    }
    assert!(!dag.d_separated(["A"], ["Y"], ["C"])?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
