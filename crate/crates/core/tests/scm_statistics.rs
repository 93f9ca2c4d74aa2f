//! Distributional checks on simulated data.

use causalreg::fixtures::model_fixture;
use causalreg::scm::{parse_model, simulate, Intervention, StructuralModel};

/// Two-sample Kolmogorov-Smirnov statistic.
fn ks(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Critical value at level 0.01 for equal sample sizes `n`.
fn ks_critical(n: usize) -> f64 {
    1.628 * (2.0 / n as f64).sqrt()
}

fn set(m: &StructuralModel, node: &str, value: f64) -> StructuralModel {
    m.intervene(Intervention { node, value }).unwrap()
}

/// Compares every column of `m` before and after setting `node`, using
/// independent seeds so the comparison is a genuine two-sample test.
fn changed_columns(m: &StructuralModel, node: &str, value: f64) -> Vec<String> {
    const N: usize = 100_000;
    let before = simulate(m, N, 101).unwrap();
    let after = simulate(&set(m, node, value), N, 202).unwrap();
    m.names()
        .into_iter()
        .filter(|c| ks(before.column(c).unwrap(), after.column(c).unwrap()) > ks_critical(N))
        .collect()
}

#[test]
fn intervention_moves_only_descendants() {
    for (model, node, value) in [("setup1", "A", 1.0), ("setup6", "A", 0.0), ("setup3", "A", 1.0)] {
        let fx = model_fixture(model).unwrap();
        let m = fx.model();
        let desc = m.induced_dag().descendants(node).unwrap();
        for c in changed_columns(&m, node, value) {
            assert!(c == node || desc.contains(&c), "{model}: {c} changed");
        }
    }
}

#[test]
fn intervention_does_move_the_outcome() {
    let m = model_fixture("setup1").unwrap().model();
    let changed = changed_columns(&m, "A", 1.0);
    assert!(changed.contains(&"Y".to_string()));
    assert!(!changed.contains(&"L".to_string()));
}

#[test]
fn large_sample_means() {
    let m = model_fixture("setup1").unwrap().model();
    let d = simulate(&m, 1_000_000, 8).unwrap();
    assert!((d.mean("L").unwrap() - 1.0).abs() < 0.005);

    let coin = parse_model("B ~ bernoulli(plogis(0))").unwrap();
    let d = simulate(&coin, 1_000_000, 8).unwrap();
    assert!((d.mean("B").unwrap() - 0.5).abs() < 0.002);
}

#[test]
fn ks_statistic_sanity() {
    assert_eq!(ks(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), 0.0);
    assert_eq!(ks(&[0.0, 0.0], &[1.0, 1.0]), 1.0);
    assert!((ks(&[1.0, 2.0], &[2.0, 3.0]) - 0.5).abs() < 1e-12);
}
