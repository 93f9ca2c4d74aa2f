//! Regression fits on [`Dataset`]s plus small diagnostics used by the
//! simulation harness.

mod diagnostics;
mod logistic;
mod ols;

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DataError, Dataset};

pub use diagnostics::{noncompliance_estimands, positivity_check, Noncompliance, PositivityReport};
pub use logistic::{logistic_fit, IrlsOptions};
pub use ols::ols_fit;

pub const INTERCEPT: &str = "(Intercept)";

#[derive(Debug, Error)]
pub enum FitError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("formula: {0}")]
    Formula(String),
    #[error("term `{0}` appears twice")]
    DuplicateTerm(String),
    #[error("{n} rows cannot support {p} coefficients")]
    TooFewRows { n: usize, p: usize },
    #[error("design matrix is rank deficient; collinear: {}", .0.join(", "))]
    RankDeficient(Vec<String>),
    #[error("column `{0}` is not binary")]
    NotBinary(String),
    #[error("separation detected: {0}")]
    Separation(String),
    #[error("no convergence after {iterations} iterations (step sizes {trace:?})")]
    NoConvergence { iterations: usize, trace: Vec<f64> },
    #[error("non-finite value during fitting")]
    NonFinite,
    #[error("no rows with {0}")]
    EmptyGroup(String),
}

impl FitError {
    /// Failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            FitError::RankDeficient(_)
                | FitError::Separation(_)
                | FitError::NoConvergence { .. }
                | FitError::NonFinite
                | FitError::TooFewRows { .. }
        )
    }
}

/// One regressor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignTerm {
    Main(String),
    Interaction(String, String),
    Square(String),
}

impl fmt::Display for DesignTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DesignTerm::Main(a) => f.write_str(a),
            DesignTerm::Interaction(a, b) => write!(f, "{a}:{b}"),
            DesignTerm::Square(a) => write!(f, "{a}^2"),
        }
    }
}

/// Outcome column and regressors; an intercept is always included.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub outcome: String,
    pub terms: Vec<DesignTerm>,
}

impl DesignSpec {
    pub fn new(outcome: &str, terms: Vec<DesignTerm>) -> Result<Self, FitError> {
        let spec = DesignSpec {
            outcome: outcome.to_string(),
            terms,
        };
        spec.check_duplicates()?;
        Ok(spec)
    }

    /// Main effects only.
    pub fn main_effects(outcome: &str, covariates: &[&str]) -> Result<Self, FitError> {
        Self::new(
            outcome,
            covariates.iter().map(|c| DesignTerm::Main(c.to_string())).collect(),
        )
    }

    /// Parses `Y ~ A + L + A:L + L^2`. `A*L` expands to `A + L + A:L`;
    /// `Y ~ 1` is intercept-only.
    pub fn parse(formula: &str) -> Result<Self, FitError> {
        let (lhs, rhs) = formula
            .split_once('~')
            .ok_or_else(|| FitError::Formula(format!("missing `~` in `{formula}`")))?;
        let outcome = lhs.trim();
        check_name(outcome)?;
        let mut terms = Vec::new();
        for piece in rhs.split('+').map(str::trim) {
            if piece.is_empty() {
                return Err(FitError::Formula(format!("empty term in `{formula}`")));
            }
            if piece == "1" {
                continue;
            }
            if let Some(base) = piece.strip_suffix("^2") {
                let base = base.trim();
                check_name(base)?;
                terms.push(DesignTerm::Square(base.to_string()));
            } else if let Some((a, b)) = piece.split_once(':') {
                let (a, b) = (a.trim(), b.trim());
                check_name(a)?;
                check_name(b)?;
                terms.push(interaction(a, b));
            } else if let Some((a, b)) = piece.split_once('*') {
                let (a, b) = (a.trim(), b.trim());
                check_name(a)?;
                check_name(b)?;
                terms.push(DesignTerm::Main(a.to_string()));
                terms.push(DesignTerm::Main(b.to_string()));
                terms.push(interaction(a, b));
            } else {
                check_name(piece)?;
                terms.push(DesignTerm::Main(piece.to_string()));
            }
        }
        Self::new(outcome, terms)
    }

    fn check_duplicates(&self) -> Result<(), FitError> {
        for (i, t) in self.terms.iter().enumerate() {
            if self.terms[..i].contains(t) {
                return Err(FitError::DuplicateTerm(t.to_string()));
            }
        }
        Ok(())
    }

    /// Coefficient names in design-matrix order, intercept first.
    pub fn term_names(&self) -> Vec<String> {
        std::iter::once(INTERCEPT.to_string())
            .chain(self.terms.iter().map(ToString::to_string))
            .collect()
    }

    /// Design matrix (with intercept column) and response vector.
    pub fn build(&self, data: &Dataset) -> Result<(DMatrix<f64>, DVector<f64>), FitError> {
        let y = DVector::from_column_slice(data.column(&self.outcome)?);
        let n = data.n_rows();
        let mut cols: Vec<Vec<f64>> = vec![vec![1.0; n]];
        for t in &self.terms {
            cols.push(match t {
                DesignTerm::Main(a) => data.column(a)?.to_vec(),
                DesignTerm::Square(a) => data.column(a)?.iter().map(|v| v * v).collect(),
                DesignTerm::Interaction(a, b) => {
                    let (x, z) = (data.column(a)?, data.column(b)?);
                    x.iter().zip(z).map(|(x, z)| x * z).collect()
                }
            });
        }
        let x = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
        Ok((x, y))
    }
}

impl fmt::Display for DesignSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ~ ", self.outcome)?;
        if self.terms.is_empty() {
            return f.write_str("1");
        }
        let parts: Vec<String> = self.terms.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(" + "))
    }
}

fn interaction(a: &str, b: &str) -> DesignTerm {
    DesignTerm::Interaction(a.to_string(), b.to_string())
}

fn check_name(s: &str) -> Result<(), FitError> {
    if crate::graph::valid_name(s) {
        Ok(())
    } else {
        Err(FitError::Formula(format!("`{s}` is not a column name")))
    }
}

/// Iteration record for iterative fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Convergence {
    pub iterations: usize,
    pub final_step: f64,
    /// Largest absolute coefficient change per iteration.
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitResult {
    pub terms: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub n: usize,
    /// Residual standard deviation (linear fits only).
    pub sigma: Option<f64>,
    pub convergence: Option<Convergence>,
}

impl FitResult {
    pub fn coef(&self, term: &str) -> Option<f64> {
        self.terms
            .iter()
            .position(|t| t == term)
            .map(|i| self.coefficients[i])
    }

    pub fn std_error(&self, term: &str) -> Option<f64> {
        self.terms
            .iter()
            .position(|t| t == term)
            .map(|i| self.std_errors[i])
    }
}

/// Which fitting routine a study scenario uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Ols,
    Logistic,
}

impl Estimator {
    pub fn fit(self, data: &Dataset, spec: &DesignSpec) -> Result<FitResult, FitError> {
        match self {
            Estimator::Ols => ols_fit(data, spec),
            Estimator::Logistic => logistic_fit(data, spec),
        }
    }
}

/// Names of columns that lie in the span of earlier columns (greedy
/// Gram-Schmidt with relative tolerance).
pub(crate) fn collinear_columns(x: &DMatrix<f64>, names: &[String]) -> Vec<String> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut out = Vec::new();
    for j in 0..x.ncols() {
        let col = x.column(j).into_owned();
        let norm = col.norm();
        let mut r = col.clone();
        for q in &basis {
            let d = q.dot(&r);
            r -= q * d;
        }
        let rn = r.norm();
        if norm == 0.0 || rn <= 1e-10 * norm {
            out.push(names[j].clone());
        } else {
            basis.push(r / rn);
        }
    }
    out
}
