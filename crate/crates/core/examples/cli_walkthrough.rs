//! The command-line interface driven in-process, with exit codes.

use causalreg::cli::run;

fn call(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("causalreg").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8_lossy(&out).into_owned())
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for args in [
        &["analyze", "--dag", "fig1a"][..],
        &["analyze", "--dag", "fig2b"],
        &["analyze", "--dag", "fig8c", "--minimal"],
        &["missingness", "--mdag", "fig5"],
        &["collapse", "--table", "table1", "--measure", "odds-ratio"],
        &["simulate", "--model", "setup6", "--set", "A=0", "--print-model"],
        &["fit", "--model", "setup5", "--n", "2000", "--formula", "Y ~ A", "--estimator", "logistic"],
    ] {
        let (code, out) = call(args);
        println!("$ causalreg {}   -> exit {code}", args.join(" "));
        let lines: Vec<&str> = out.lines().take(12).collect();
        println!("{}\n", lines.join("\n"));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
