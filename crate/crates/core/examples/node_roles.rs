//! Which nodes are mediators, colliders, confounding-path members or safe to
//! adjust for, across the built-in graphs.

use causalreg::fixtures::DAGS;
use causalreg::ident::classify_roles;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for f in DAGS.iter().filter(|f| f.name.starts_with("fig6") || f.name == "fig4d") {
        println!("{} ({})", f.name, f.title);
        let roles = classify_roles(&f.query()?)?;
        for (node, r) in &roles.roles {
            let mut tags = Vec::new();
            if r.mediator {
                tags.push("mediator");
            }
            if r.descendant_of_mediator {
                tags.push("descendant of mediator");
            }
            if r.collider_on_ay_path {
                tags.push("collider");
            }
            if r.on_backdoor_path {
                tags.push("back-door");
            }
            if r.in_some_valid_adjustment_set {
                tags.push("adjustable");
            }
            println!("  {node:<4} {}", tags.join(", "));
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
