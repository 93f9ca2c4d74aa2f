use serde::{Deserialize, Serialize};

use super::{logistic_fit, DesignSpec, FitError};
use crate::data::Dataset;
use crate::scm::plogis;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositivityReport {
    pub threshold: f64,
    pub n: usize,
    pub min_propensity: f64,
    pub max_propensity: f64,
    /// Share of rows with fitted propensity below `threshold`.
    pub fraction_below: f64,
    /// Share of rows with fitted propensity above `1 - threshold`.
    pub fraction_above: f64,
    pub flagged_rows: usize,
}

/// Fits a main-effects logistic propensity model and summarizes how close
/// fitted propensities come to 0 and 1.
pub fn positivity_check(
    data: &Dataset,
    exposure: &str,
    covariates: &[&str],
    threshold: f64,
) -> Result<PositivityReport, FitError> {
    let spec = DesignSpec::main_effects(exposure, covariates)?;
    let fit = logistic_fit(data, &spec)?;
    let (x, _) = spec.build(data)?;
    let beta = nalgebra::DVector::from_vec(fit.coefficients);
    let ps: Vec<f64> = (&x * beta).iter().map(|&e| plogis(e)).collect();
    let n = ps.len();
    let below = ps.iter().filter(|&&p| p < threshold).count();
    let above = ps.iter().filter(|&&p| p > 1.0 - threshold).count();
    let flagged = ps
        .iter()
        .filter(|&&p| p < threshold || p > 1.0 - threshold)
        .count();
    Ok(PositivityReport {
        threshold,
        n,
        min_propensity: ps.iter().copied().fold(f64::INFINITY, f64::min),
        max_propensity: ps.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        fraction_below: below as f64 / n as f64,
        fraction_above: above as f64 / n as f64,
        flagged_rows: flagged,
    })
}

/// Contrasts under non-compliance for binary assigned treatment, received
/// treatment and outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Noncompliance {
    /// P(Y=1 | assigned=1) - P(Y=1 | assigned=0).
    pub itt: f64,
    /// P(Y=1 | taken=1) - P(Y=1 | taken=0).
    pub as_treated: f64,
    /// P(Y=1 | taken=1, assigned=1) - P(Y=1 | taken=0, assigned=0).
    pub per_protocol: f64,
    /// ITT divided by P(taken=1 | assigned=1).
    pub cace: f64,
    /// P(taken=1 | assigned=1).
    pub uptake: f64,
}

pub fn noncompliance_estimands(
    data: &Dataset,
    assigned: &str,
    taken: &str,
    outcome: &str,
) -> Result<Noncompliance, FitError> {
    for c in [assigned, taken, outcome] {
        if !data.is_binary(c)? {
            return Err(FitError::NotBinary(c.to_string()));
        }
    }
    let (z, a, y) = (data.column(assigned)?, data.column(taken)?, data.column(outcome)?);

    let mean_where = |v: &[f64], label: String, keep: &dyn Fn(usize) -> bool| {
        let (mut s, mut k) = (0.0, 0usize);
        for i in (0..v.len()).filter(|&i| keep(i)) {
            s += v[i];
            k += 1;
        }
        if k == 0 {
            Err(FitError::EmptyGroup(label))
        } else {
            Ok(s / k as f64)
        }
    };

    let itt = mean_where(y, format!("{assigned}=1"), &|i| z[i] == 1.0)?
        - mean_where(y, format!("{assigned}=0"), &|i| z[i] == 0.0)?;
    let as_treated = mean_where(y, format!("{taken}=1"), &|i| a[i] == 1.0)?
        - mean_where(y, format!("{taken}=0"), &|i| a[i] == 0.0)?;
    let per_protocol = mean_where(y, format!("{taken}=1, {assigned}=1"), &|i| {
        a[i] == 1.0 && z[i] == 1.0
    })? - mean_where(y, format!("{taken}=0, {assigned}=0"), &|i| {
        a[i] == 0.0 && z[i] == 0.0
    })?;
    let uptake = mean_where(a, format!("{assigned}=1"), &|i| z[i] == 1.0)?;
    if uptake == 0.0 {
        return Err(FitError::EmptyGroup(format!("{taken}=1 among {assigned}=1")));
    }
    Ok(Noncompliance {
        itt,
        as_treated,
        per_protocol,
        cace: itt / uptake,
        uptake,
    })
}
