//! Regression fits against independent reference computations.

mod common;

use causalreg::data::Dataset;
use causalreg::estimators::{
    logistic_fit, noncompliance_estimands, ols_fit, positivity_check, DesignSpec,
};
use causalreg::fixtures::model_fixture;
use causalreg::scm::{plogis, simulate};
use common::{gradient_ascent, hundred_rows, rows, score};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn irls_matches_gradient_ascent() {
    let d = hundred_rows();
    let fit = logistic_fit(&d, &DesignSpec::parse("Y ~ A + L").unwrap()).unwrap();
    let reference = gradient_ascent(&rows(&d, &["A", "L"]), d.column("Y").unwrap());
    for (a, b) in fit.coefficients.iter().zip(&reference) {
        assert!((a - b).abs() < 1e-6, "{:?} vs {reference:?}", fit.coefficients);
    }
}

#[test]
fn score_equations_vanish_at_the_fit() {
    let d = hundred_rows();
    let fit = logistic_fit(&d, &DesignSpec::parse("Y ~ A * L").unwrap()).unwrap();
    let mut x = rows(&d, &["A", "L"]);
    for r in &mut x {
        let inter = r[1] * r[2];
        r.push(inter);
    }
    for g in score(&x, d.column("Y").unwrap(), &fit.coefficients) {
        assert!(g.abs() < 1e-6, "{g}");
    }
}

#[test]
fn fits_ignore_row_order() {
    let d = hundred_rows();
    let mut order: Vec<usize> = (0..d.n_rows()).collect();
    let mut rng = common::rng(5);
    for i in (1..order.len()).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let shuffled = d.permute_rows(&order);
    let spec = DesignSpec::parse("Y ~ A + L").unwrap();
    let a = logistic_fit(&d, &spec).unwrap();
    let b = logistic_fit(&shuffled, &spec).unwrap();
    for (u, v) in a.coefficients.iter().zip(&b.coefficients) {
        assert!((u - v).abs() < 1e-9);
    }
    let spec = DesignSpec::parse("L ~ A + Y").unwrap();
    let a = ols_fit(&d, &spec).unwrap();
    let b = ols_fit(&shuffled, &spec).unwrap();
    for (u, v) in a.coefficients.iter().zip(&b.coefficients) {
        assert!((u - v).abs() < 1e-9);
    }
}

#[test]
fn ols_is_exact_without_noise() {
    let d = hundred_rows();
    let (a, l) = (d.column("A").unwrap(), d.column("L").unwrap());
    let w: Vec<f64> = a
        .iter()
        .zip(l)
        .map(|(a, l)| 2.0 + a - 0.5 * l + 3.0 * a * l + 0.25 * l * l)
        .collect();
    let mut d = d.clone();
    d.push_column("W", w).unwrap();
    let fit = ols_fit(&d, &DesignSpec::parse("W ~ A * L + L^2").unwrap()).unwrap();
    let expected = [
        ("(Intercept)", 2.0),
        ("A", 1.0),
        ("L", -0.5),
        ("A:L", 3.0),
        ("L^2", 0.25),
    ];
    for (term, v) in expected {
        assert!((fit.coef(term).unwrap() - v).abs() < 1e-10, "{term}");
    }
    assert!(fit.sigma.unwrap() < 1e-10);
}

#[test]
fn setup1_adjusted_coefficient_near_one() {
    let m = model_fixture("setup1").unwrap().model();
    let d = simulate(&m, 1000, 99).unwrap();
    let fit = ols_fit(&d, &DesignSpec::parse("Y ~ A + L").unwrap()).unwrap();
    assert!((fit.coef("A").unwrap() - 1.0).abs() < 0.15);
}

#[test]
fn positivity_flags_follow_confounding_strength() {
    let randomized = model_fixture("setup4b").unwrap().model();
    let d = simulate(&randomized, 2000, 3).unwrap();
    let r = positivity_check(&d, "A", &["L"], 0.01).unwrap();
    assert_eq!(r.flagged_rows, 0);
    // Assignment probability is plogis(-0.5) for everyone.
    let p = plogis(-0.5);
    assert!((r.min_propensity - p).abs() < 0.05 && (r.max_propensity - p).abs() < 0.05);

    let confounded = model_fixture("setup1").unwrap().model();
    let d = simulate(&confounded, 2000, 3).unwrap();
    let r = positivity_check(&d, "A", &["L"], 0.01).unwrap();
    assert!(r.flagged_rows > 0);
    assert_eq!(r.flagged_rows as f64 / r.n as f64, r.fraction_below + r.fraction_above);
}

fn trial() -> impl Strategy<Value = Dataset> {
    // Each row is (assigned, taken, outcome). The fixed prefix keeps every
    // subgroup nonempty and uptake strictly between 0 and 1.
    prop::collection::vec((0u8..2, 0u8..2, 0u8..2), 0..40).prop_map(|extra| {
        let fixed = [(1, 1, 1), (1, 0, 0), (0, 0, 1), (0, 1, 0)];
        let all: Vec<(u8, u8, u8)> = fixed.into_iter().chain(extra).collect();
        let col = |k: usize| -> Vec<f64> {
            all.iter().map(|r| f64::from([r.0, r.1, r.2][k])).collect()
        };
        Dataset::new([("Z", col(0)), ("A", col(1)), ("Y", col(2))]).unwrap()
    })
}

proptest! {
    #[test]
    fn complier_effect_is_at_least_itt(d in trial()) {
        let e = noncompliance_estimands(&d, "Z", "A", "Y").unwrap();
        prop_assert!(e.uptake > 0.0 && e.uptake <= 1.0);
        prop_assert!(e.cace.abs() >= e.itt.abs());
        prop_assert!((e.cace * e.uptake - e.itt).abs() < 1e-12);
    }
}
