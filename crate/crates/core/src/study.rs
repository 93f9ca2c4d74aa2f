//! Replicated simulation studies: simulate a model, fit a regression, and
//! compare the average estimate with the true causal contrast.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimators::{DesignSpec, Estimator, FitError};
use crate::fixtures::model_fixture;
use crate::scm::{derive_seed, simulate_replicate, true_effect, Estimand, ModelError, DEFAULT_ORACLE_N};

pub const SCHEMA_VERSION: u32 = 1;

/// Share of failed replications above which a scenario is abandoned.
pub const MAX_FAILURE_RATE: f64 = 0.01;

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("scenario `{label}`: {message}")]
    Invalid { label: String, message: String },
    #[error("scenario `{label}`: {source}")]
    Model {
        label: String,
        #[source]
        source: ModelError,
    },
    #[error("could not start worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Keep only rows where `column` equals `equals`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowFilter {
    pub column: String,
    pub equals: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub label: String,
    /// Built-in model name.
    pub model: String,
    pub formula: String,
    pub estimator: Estimator,
    pub estimand: Estimand,
    /// Coefficient whose estimates are collected.
    pub target: String,
    pub replications: usize,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub filters: Vec<RowFilter>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub seed: u64,
    #[serde(default = "default_oracle_seed")]
    pub oracle_seed: u64,
    #[serde(default = "default_oracle_n")]
    pub oracle_n: usize,
    pub scenarios: Vec<Scenario>,
}

fn default_oracle_seed() -> u64 {
    345
}

fn default_oracle_n() -> usize {
    DEFAULT_ORACLE_N
}

impl StudyConfig {
    /// The ten scenarios of the bias panel.
    pub fn default_panel(seed: u64, replications: usize, n: usize) -> Self {
        let s = |label: &str, model: &str, formula: &str, estimator, estimand| Scenario {
            label: label.to_string(),
            model: model.to_string(),
            formula: formula.to_string(),
            estimator,
            estimand,
            target: "A".to_string(),
            replications,
            n,
            filters: Vec::new(),
        };
        use Estimand::*;
        use Estimator::*;
        let mut cc = s("ATE, setup 7: MNAR+CC", "setup7", "Y ~ A + L1 + L2", Ols, Ate);
        cc.filters = ["C_Y", "C_A", "C_L2"]
            .iter()
            .map(|c| RowFilter {
                column: c.to_string(),
                equals: 1.0,
            })
            .collect();
        StudyConfig {
            seed,
            oracle_seed: default_oracle_seed(),
            oracle_n: default_oracle_n(),
            scenarios: vec![
                s("ATE, setup 1: simple", "setup1", "Y ~ A + L", Ols, Ate),
                s("ATE, setup 2: incorrect MS", "setup2", "Y ~ A + L", Ols, Ate),
                s("ATE, setup 3: collider structure", "setup3", "Y ~ A + L + L2", Ols, Ate),
                s("ATE, setup 4: effect modification (no random.)", "setup4", "Y ~ A + L", Ols, Ate),
                s("ATE, setup 4b: effect modification (random.)", "setup4b", "Y ~ A + L", Ols, Ate),
                s("MOR, setup 5: collapsibility, conditional", "setup5", "Y ~ A + L", Logistic, LogMor),
                s("MOR, setup 5: collapsibility, crude", "setup5", "Y ~ A", Logistic, LogMor),
                s("ATE, setup 6: mediation, conditional", "setup6", "Y ~ A + M", Ols, Ate),
                s("ATE, setup 6: mediation, crude", "setup6", "Y ~ A", Ols, Ate),
                cc,
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthSource {
    Exact,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Truth {
    pub value: f64,
    /// Zero for exact values.
    pub mc_se: f64,
    pub source: TruthSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioResult {
    pub label: String,
    pub model: String,
    pub formula: String,
    pub estimand: Estimand,
    pub n: usize,
    pub replications: usize,
    pub failures: usize,
    pub truth: Truth,
    pub mean_estimate: f64,
    pub bias: f64,
    /// Standard deviation of the estimates over the square root of the
    /// number of successful replications.
    pub mc_se: f64,
    /// Per-replication estimates; `None` marks a failed fit.
    #[serde(skip)]
    pub estimates: Vec<Option<f64>>,
}

impl ScenarioResult {
    /// Bias divided by its Monte-Carlo standard error, including the
    /// oracle's own uncertainty.
    pub fn z(&self) -> f64 {
        self.bias / self.combined_se()
    }

    pub fn combined_se(&self) -> f64 {
        self.mc_se.hypot(self.truth.mc_se)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbortedScenario {
    pub label: String,
    pub failures: usize,
    pub replications: usize,
    /// First few distinct error messages.
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiasReport {
    pub schema_version: u32,
    pub seed: u64,
    pub scenarios: Vec<ScenarioResult>,
    #[serde(default)]
    pub aborted: Vec<AbortedScenario>,
}

impl BiasReport {
    pub fn get(&self, label: &str) -> Option<&ScenarioResult> {
        self.scenarios.iter().find(|s| s.label == label)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn render(&self) -> String {
        let width = self
            .scenarios
            .iter()
            .map(|s| s.label.len())
            .chain(self.aborted.iter().map(|a| a.label.len()))
            .max()
            .unwrap_or(8)
            .max(8);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>9}  {:>9}  {:>9}  {:>8}  {:>7}  {:>5}",
            "scenario", "truth", "mean", "bias", "mc_se", "z", "fail"
        );
        for s in &self.scenarios {
            let _ = writeln!(
                out,
                "{:<width$}  {:>9.4}  {:>9.4}  {:>+9.4}  {:>8.4}  {:>+7.1}  {:>5}",
                s.label,
                s.truth.value,
                s.mean_estimate,
                s.bias,
                s.mc_se,
                s.z(),
                s.failures
            );
        }
        for a in &self.aborted {
            let _ = writeln!(
                out,
                "{:<width$}  aborted: {} of {} replications failed",
                a.label, a.failures, a.replications
            );
        }
        out
    }

    /// Long-format CSV of per-replication estimates.
    pub fn write_estimates_csv<W: Write>(&self, w: W) -> Result<(), StudyError> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| StudyError::Io(std::io::Error::other(e));
        wr.write_record(["scenario", "replication", "estimate"]).map_err(io)?;
        for s in &self.scenarios {
            for (r, e) in s.estimates.iter().enumerate() {
                let v = e.map(|v| format!("{v:?}")).unwrap_or_default();
                wr.write_record([s.label.as_str(), &(r + 1).to_string(), &v])
                    .map_err(io)?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}

/// Runs every scenario with `workers` threads (0 means all cores).
///
/// Each dataset is keyed by the master seed, the model name and the
/// replication index, so scenarios sharing a model see the same data and
/// results do not depend on the worker count or scenario order.
pub fn run_study(cfg: &StudyConfig, workers: usize) -> Result<BiasReport, StudyError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| StudyError::Pool(e.to_string()))?;
    pool.install(|| {
        let mut report = BiasReport {
            schema_version: SCHEMA_VERSION,
            seed: cfg.seed,
            scenarios: Vec::new(),
            aborted: Vec::new(),
        };
        for sc in &cfg.scenarios {
            match run_scenario(cfg, sc)? {
                Outcome::Done(r) => report.scenarios.push(r),
                Outcome::Aborted(a) => report.aborted.push(a),
            }
        }
        Ok(report)
    })
}

pub enum Outcome {
    Done(ScenarioResult),
    Aborted(AbortedScenario),
}

pub fn run_scenario(cfg: &StudyConfig, sc: &Scenario) -> Result<Outcome, StudyError> {
    let invalid = |message: String| StudyError::Invalid {
        label: sc.label.clone(),
        message,
    };
    let fixture = model_fixture(&sc.model).ok_or_else(|| invalid(format!("unknown model `{}`", sc.model)))?;
    if sc.replications < 1 {
        return Err(invalid("replications must be at least 1".into()));
    }
    if sc.n < 10 {
        return Err(invalid("n must be at least 10".into()));
    }
    let spec = DesignSpec::parse(&sc.formula).map_err(|e| invalid(e.to_string()))?;
    if !spec.term_names().contains(&sc.target) {
        return Err(invalid(format!("`{}` is not a term of `{}`", sc.target, sc.formula)));
    }
    let model = fixture.model();
    let names = model.names();
    for col in spec
        .term_names()
        .iter()
        .skip(1)
        .flat_map(|t| t.split([':', '^']))
        .chain(std::iter::once(spec.outcome.as_str()))
        .chain(sc.filters.iter().map(|f| f.column.as_str()))
    {
        if col != "2" && !names.iter().any(|n| n == col) {
            return Err(invalid(format!("model `{}` has no node `{col}`", sc.model)));
        }
    }

    let truth = match (sc.estimand == fixture.estimand, fixture.exact_effect()) {
        (true, Some(v)) => Truth {
            value: v,
            mc_se: 0.0,
            source: TruthSource::Exact,
        },
        _ => {
            let t = true_effect(
                &model,
                fixture.exposure,
                fixture.outcome,
                sc.estimand,
                cfg.oracle_n,
                cfg.oracle_seed,
            )
            .map_err(|source| StudyError::Model {
                label: sc.label.clone(),
                source,
            })?;
            Truth {
                value: t.value,
                mc_se: t.mc_se,
                source: TruthSource::Oracle,
            }
        }
    };

    let seed = derive_seed(cfg.seed, &sc.model);
    let results: Vec<Result<f64, String>> = (0..sc.replications)
        .into_par_iter()
        .map(|r| {
            let data = simulate_replicate(&model, sc.n, seed, r as u64 + 1).map_err(|e| e.to_string())?;
            let data = sc.filters.iter().fold(data, |d, f| {
                let col = d.column(&f.column).expect("checked above").to_vec();
                d.filter_rows(|i| col[i] == f.equals)
            });
            let fit = sc.estimator.fit(&data, &spec).map_err(|e: FitError| e.to_string())?;
            Ok(fit.coef(&sc.target).expect("target is a term"))
        })
        .collect();

    let estimates: Vec<Option<f64>> = results.iter().map(|r| r.as_ref().ok().copied()).collect();
    let failures = estimates.iter().filter(|e| e.is_none()).count();
    if failures as f64 > MAX_FAILURE_RATE * sc.replications as f64 || failures == sc.replications {
        let mut errors: Vec<String> = Vec::new();
        for e in results.iter().filter_map(|r| r.as_ref().err()) {
            if !errors.contains(e) {
                errors.push(e.clone());
            }
            if errors.len() == 5 {
                break;
            }
        }
        return Ok(Outcome::Aborted(AbortedScenario {
            label: sc.label.clone(),
            failures,
            replications: sc.replications,
            errors,
        }));
    }

    let ok: Vec<f64> = estimates.iter().flatten().copied().collect();
    let k = ok.len() as f64;
    let mean = ok.iter().sum::<f64>() / k;
    let sd = if ok.len() > 1 {
        (ok.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(Outcome::Done(ScenarioResult {
        label: sc.label.clone(),
        model: sc.model.clone(),
        formula: spec.to_string(),
        estimand: sc.estimand,
        n: sc.n,
        replications: sc.replications,
        failures,
        truth: truth.clone(),
        mean_estimate: mean,
        bias: mean - truth.value,
        mc_se: sd / k.sqrt(),
        estimates,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(reps: usize) -> StudyConfig {
        let mut cfg = StudyConfig::default_panel(7, reps, 200);
        cfg.oracle_n = 100_000;
        cfg
    }

    #[test]
    fn empty_config_gives_empty_report() {
        let cfg = StudyConfig {
            seed: 1,
            oracle_seed: 1,
            oracle_n: 100_000,
            scenarios: vec![],
        };
        let r = run_study(&cfg, 1).unwrap();
        assert!(r.scenarios.is_empty() && r.aborted.is_empty());
    }

    #[test]
    fn worker_count_does_not_change_values() {
        let mut cfg = small(20);
        cfg.scenarios.retain(|s| s.model != "setup5");
        let a = run_study(&cfg, 1).unwrap();
        let b = run_study(&cfg, 4).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.scenarios.len(), 8);
    }

    #[test]
    fn scenario_order_does_not_change_values() {
        let mut cfg = small(10);
        cfg.scenarios.retain(|s| s.model != "setup5");
        let a = run_study(&cfg, 2).unwrap();
        cfg.scenarios.reverse();
        let b = run_study(&cfg, 2).unwrap();
        for s in &a.scenarios {
            assert_eq!(Some(s), b.get(&s.label));
        }
    }

    #[test]
    fn rejects_bad_scenarios() {
        let mut cfg = small(5);
        cfg.scenarios.truncate(1);
        cfg.scenarios[0].target = "M".into();
        assert!(matches!(run_study(&cfg, 1), Err(StudyError::Invalid { .. })));
        cfg.scenarios[0].target = "A".into();
        cfg.scenarios[0].formula = "Y ~ A + Q".into();
        assert!(matches!(run_study(&cfg, 1), Err(StudyError::Invalid { .. })));
        cfg.scenarios[0].formula = "Y ~ A".into();
        cfg.scenarios[0].n = 5;
        assert!(run_study(&cfg, 1).is_err());
    }

    #[test]
    fn failing_fits_abort() {
        let mut cfg = small(5);
        cfg.scenarios.truncate(1);
        // A and A:A are collinear for a binary exposure.
        cfg.scenarios[0].formula = "Y ~ A + A^2".into();
        let r = run_study(&cfg, 1).unwrap();
        assert!(r.scenarios.is_empty());
        assert_eq!(r.aborted[0].failures, 5);
        assert!(r.aborted[0].errors[0].contains("A^2"));
    }

    #[test]
    fn json_round_trip() {
        let mut cfg = small(5);
        cfg.scenarios.truncate(2);
        let r = run_study(&cfg, 1).unwrap();
        let back: BiasReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back.to_json(), r.to_json());
        let cfg_back: StudyConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(cfg_back, cfg);
        let mut buf = Vec::new();
        r.write_estimates_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 11);
    }
}
