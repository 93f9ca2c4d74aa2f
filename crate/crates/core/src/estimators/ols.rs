use nalgebra::DMatrix;

use super::{collinear_columns, DesignSpec, FitError, FitResult};
use crate::data::Dataset;

/// Least squares through a thin QR factorization, with classical standard
/// errors.
pub fn ols_fit(data: &Dataset, spec: &DesignSpec) -> Result<FitResult, FitError> {
    let (x, y) = spec.build(data)?;
    let names = spec.term_names();
    let (n, p) = x.shape();
    if n <= p {
        return Err(FitError::TooFewRows { n, p });
    }
    let bad = collinear_columns(&x, &names);
    if !bad.is_empty() {
        return Err(FitError::RankDeficient(bad));
    }

    let qr = x.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let qty = q.transpose() * &y;
    let beta = r.solve_upper_triangular(&qty).ok_or(FitError::NonFinite)?;
    let resid = &y - &x * &beta;
    let rss = resid.norm_squared();
    let df = (n - p) as f64;
    let sigma2 = rss / df;

    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or(FitError::NonFinite)?;
    let cov_unscaled = &r_inv * r_inv.transpose();
    let se: Vec<f64> = (0..p).map(|i| (sigma2 * cov_unscaled[(i, i)]).sqrt()).collect();
    if beta.iter().chain(&se).any(|v| !v.is_finite()) {
        return Err(FitError::NonFinite);
    }

    Ok(FitResult {
        terms: names,
        coefficients: beta.iter().copied().collect(),
        std_errors: se,
        n,
        sigma: Some(sigma2.sqrt()),
        convergence: None,
    })
}
