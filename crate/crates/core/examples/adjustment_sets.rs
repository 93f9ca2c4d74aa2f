//! Back-door paths and valid adjustment sets for a DAG written inline.

use causalreg::graph::parse_dag;
use causalreg::ident::{backdoor_paths, enumerate_adjustment_sets, satisfies_backdoor, CausalQuery, EnumerateOptions};
use causalreg::graph::NodeSet;

const DAG: &str = "
# two measured confounders, one unmeasured cause of the outcome
L1 -> A
L1 -> L2
U -> L2
U -> Y
L2 -> A
L2 -> Y
A -> Y
exposure: A
outcome: Y
";

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let q = CausalQuery::from_designations(parse_dag(DAG)?)?.with_unmeasured(["U"])?;

    println!("back-door paths:");
    for p in backdoor_paths(&q)? {
        println!("  {p}");
    }

    let l2_only: NodeSet = ["L2".to_string()].into();
    let both: NodeSet = ["L1".to_string(), "L2".to_string()].into();
    println!("adjust for {{L2}}:     {}", satisfies_backdoor(&q, &l2_only)?);
    println!("adjust for {{L1, L2}}: {}", satisfies_backdoor(&q, &both)?);

    let sets = enumerate_adjustment_sets(&q, EnumerateOptions::default())?;
    println!("valid sets: {sets:?}");
    assert_eq!(sets, vec![both]);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
