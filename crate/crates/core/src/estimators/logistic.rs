use nalgebra::{DMatrix, DVector};

use super::{collinear_columns, Convergence, DesignSpec, FitError, FitResult};
use crate::data::Dataset;
use crate::scm::plogis;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrlsOptions {
    /// Converged once the largest coefficient change falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Coefficient norm treated as divergence.
    pub max_norm: f64,
}

impl Default for IrlsOptions {
    fn default() -> Self {
        IrlsOptions {
            tolerance: 1e-8,
            max_iterations: 25,
            max_norm: 1e3,
        }
    }
}

/// Maximum-likelihood logistic regression by Newton/IRLS from zero.
pub fn logistic_fit(data: &Dataset, spec: &DesignSpec) -> Result<FitResult, FitError> {
    logistic_fit_with(data, spec, IrlsOptions::default())
}

pub fn logistic_fit_with(
    data: &Dataset,
    spec: &DesignSpec,
    opts: IrlsOptions,
) -> Result<FitResult, FitError> {
    if !data.is_binary(&spec.outcome)? {
        return Err(FitError::NotBinary(spec.outcome.clone()));
    }
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

    let mut beta = DVector::zeros(p);
    let mut trace = Vec::new();
    let mut info;
    loop {
        let (grad, hess, _) = score_and_information(&x, &y, &beta);
        let chol = hess.cholesky().ok_or_else(|| {
            FitError::Separation("information matrix is singular".into())
        })?;
        let step = chol.solve(&grad);
        let size = step.amax();
        if !size.is_finite() {
            return Err(FitError::NonFinite);
        }
        beta += &step;
        trace.push(size);
        if beta.norm() > opts.max_norm {
            return Err(FitError::Separation(format!(
                "coefficient norm {:.3e} exceeds {:.0e}",
                beta.norm(),
                opts.max_norm
            )));
        }
        if size < opts.tolerance {
            info = score_and_information(&x, &y, &beta);
            break;
        }
        if trace.len() >= opts.max_iterations {
            return Err(FitError::NoConvergence {
                iterations: trace.len(),
                trace,
            });
        }
    }

    let fitted = &info.2;
    for class in [0.0, 1.0] {
        let rows: Vec<f64> = fitted
            .iter()
            .zip(y.iter())
            .filter(|(_, &yi)| yi == class)
            .map(|(&p, _)| p)
            .collect();
        if !rows.is_empty() && rows.iter().all(|&p| (p - class).abs() < 1e-10) {
            return Err(FitError::Separation(format!(
                "all rows with outcome {class} fitted within 1e-10 of {class}"
            )));
        }
    }

    let cov = info
        .1
        .clone()
        .try_inverse()
        .ok_or_else(|| FitError::Separation("information matrix is singular".into()))?;
    info.1 = DMatrix::zeros(0, 0);
    let se: Vec<f64> = (0..p).map(|i| cov[(i, i)].sqrt()).collect();
    if se.iter().any(|v| !v.is_finite()) {
        return Err(FitError::NonFinite);
    }
    Ok(FitResult {
        terms: names,
        coefficients: beta.iter().copied().collect(),
        std_errors: se,
        n,
        sigma: None,
        convergence: Some(Convergence {
            iterations: trace.len(),
            final_step: *trace.last().expect("at least one iteration"),
            trace,
        }),
    })
}

/// Score vector, Fisher information and fitted probabilities at `beta`.
fn score_and_information(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    beta: &DVector<f64>,
) -> (DVector<f64>, DMatrix<f64>, DVector<f64>) {
    let eta = x * beta;
    let prob = eta.map(plogis);
    let w = prob.map(|p| p * (1.0 - p));
    let grad = x.transpose() * (y - &prob);
    let mut xw = x.clone();
    for (mut row, wi) in xw.row_iter_mut().zip(w.iter()) {
        row *= *wi;
    }
    let hess = x.transpose() * xw;
    (grad, hess, prob)
}
