//! Command-line front end. [`run`] parses arguments, writes the report to
//! `out` and diagnostics to `err`, and returns the process exit code:
//! 0 success, 1 input error, 2 negative verdict, 3 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::Path as FsPath;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::estimators::{
    noncompliance_estimands, positivity_check, DesignSpec, Estimator, FitError, FitResult, Noncompliance,
    PositivityReport,
};
use crate::fixtures;
use crate::graph::{parse_dag, Dag, NodeSet};
use crate::ident::{backdoor_paths, classify_roles_with, enumerate_adjustment_sets, CausalQuery, EnumerateOptions, RoleReport};
use crate::missing::{
    classify_mechanism, complete_case_valid, implied_independencies, Independence, MDag, MechanismVerdict,
};
use crate::scm::{simulate_replicate, true_effect, Estimand, Intervention, ModelError, StructuralModel, DEFAULT_ORACLE_N};
use crate::study::{run_study, BiasReport, StudyConfig};
use crate::tables::{Measure, MeasureReport, StratifiedTable, EXACT_TOLERANCE};

pub const SCHEMA_VERSION: u32 = 1;
pub const SEED_ENV: &str = "CAUSALREG_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NEGATIVE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "causalreg", version, about = "Check whether regression coefficients identify causal effects")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Back-door paths, adjustment sets and node roles for a DAG.
    Analyze(AnalyzeArgs),
    /// Missingness mechanism and complete-case validity for an m-DAG.
    Missingness(MissingnessArgs),
    /// Stratum-specific and marginal effect measures of a 2x2xK table.
    Collapse(CollapseArgs),
    /// Draw data from a structural model, or compute its true effect.
    Simulate(SimulateArgs),
    /// Fit a regression, or compute non-compliance contrasts, on CSV data.
    Fit(FitArgs),
    /// Run a replicated bias study.
    Study(StudyArgs),
    /// Check that a JSON report matches its schema exactly.
    Validate(ValidateArgs),
    /// List built-in fixtures or print one.
    Fixtures(FixturesArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// DAG file or built-in name (e.g. fig1a).
    #[arg(long)]
    pub dag: String,
    #[arg(long)]
    pub exposure: Option<String>,
    #[arg(long)]
    pub outcome: Option<String>,
    /// Nodes unavailable for adjustment. Defaults to the fixture's list, or to
    /// nodes whose name starts with `U`.
    #[arg(long, value_delimiter = ',')]
    pub unmeasured: Option<Vec<String>>,
    /// Treat every node as measured.
    #[arg(long, conflicts_with = "unmeasured")]
    pub all_measured: bool,
    /// Nodes conditioned on by design, such as selection indicators.
    #[arg(long, value_delimiter = ',')]
    pub conditioned: Option<Vec<String>>,
    /// Report only inclusion-minimal adjustment sets.
    #[arg(long)]
    pub minimal: bool,
    /// Enumerate even with more than 20 candidate nodes.
    #[arg(long)]
    pub allow_large: bool,
}

#[derive(Debug, Args)]
pub struct MissingnessArgs {
    /// m-DAG file or built-in name (fig5).
    #[arg(long)]
    pub mdag: String,
    #[arg(long)]
    pub exposure: Option<String>,
    #[arg(long)]
    pub outcome: Option<String>,
    /// Regression covariates. Defaults to every other substantive measured node.
    #[arg(long, value_delimiter = ',')]
    pub covariates: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MeasureArg {
    All,
    RiskDifference,
    RiskRatio,
    OddsRatio,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Args)]
pub struct CollapseArgs {
    /// CSV with columns stratum,a,y,weight, or `table1`.
    #[arg(long)]
    pub table: String,
    #[arg(long, value_enum, default_value = "all")]
    pub measure: MeasureArg,
    /// Relative tolerance for equality verdicts.
    #[arg(long, default_value_t = EXACT_TOLERANCE)]
    pub tolerance: f64,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EstimandArg {
    #[value(name = "ATE")]
    Ate,
    #[value(name = "log_MOR")]
    LogMor,
}

impl From<EstimandArg> for Estimand {
    fn from(e: EstimandArg) -> Self {
        match e {
            EstimandArg::Ate => Estimand::Ate,
            EstimandArg::LogMor => Estimand::LogMor,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Model file or built-in name (setup1 ... setup7, setup4b).
    #[arg(long)]
    pub model: String,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub replication: u64,
    /// Intervention NODE=VALUE; repeatable, later ones win.
    #[arg(long = "set", value_name = "NODE=VALUE")]
    pub set: Vec<String>,
    /// Print the (intervened) model instead of data.
    #[arg(long)]
    pub print_model: bool,
    /// Report the interventional contrast instead of data.
    #[arg(long, value_enum)]
    pub true_effect: Option<EstimandArg>,
    #[arg(long)]
    pub exposure: Option<String>,
    #[arg(long)]
    pub outcome: Option<String>,
    #[arg(long, default_value_t = DEFAULT_ORACLE_N)]
    pub oracle_n: usize,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EstimatorArg {
    Ols,
    Logistic,
}

impl From<EstimatorArg> for Estimator {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Ols => Estimator::Ols,
            EstimatorArg::Logistic => Estimator::Logistic,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV with a header row.
    #[arg(long, conflicts_with = "model")]
    pub data: Option<String>,
    /// Simulate the data from this model instead.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 1)]
    pub seed: u64,
    /// Keep rows with COLUMN=VALUE; repeatable.
    #[arg(long = "filter", value_name = "COLUMN=VALUE")]
    pub filter: Vec<String>,
    /// e.g. "Y ~ A + L + A:L + L^2".
    #[arg(long)]
    pub formula: Option<String>,
    #[arg(long, value_enum, default_value = "ols")]
    pub estimator: EstimatorArg,
    /// Also fit a propensity model for this binary exposure.
    #[arg(long)]
    pub positivity: Option<String>,
    #[arg(long, value_delimiter = ',', requires = "positivity")]
    pub covariates: Vec<String>,
    #[arg(long, default_value_t = 0.01)]
    pub threshold: f64,
    /// ASSIGNED,TAKEN,OUTCOME columns; reports non-compliance contrasts.
    #[arg(long, value_delimiter = ',', num_args = 1, conflicts_with = "formula")]
    pub noncompliance: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    /// JSON study config, or `default` for the ten-scenario bias panel.
    #[arg(long, default_value = "default")]
    pub config: String,
    /// Master seed; overrides the config.
    #[arg(long, env = SEED_ENV)]
    pub seed: Option<u64>,
    /// Replications per scenario; overrides the config.
    #[arg(long)]
    pub runs: Option<usize>,
    /// Sample size per replication; overrides the config.
    #[arg(long)]
    pub n: Option<usize>,
    /// Worker threads (0 = all cores). Does not affect results.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Write per-replication estimates as CSV.
    #[arg(long)]
    pub estimates: Option<String>,
    /// Print the effective config and exit.
    #[arg(long)]
    pub print_config: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Report file, or `-` for stdin.
    pub file: String,
}

#[derive(Debug, Args)]
pub struct FixturesArgs {
    /// Fixture to print; lists all when omitted.
    pub name: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    Analyze,
    Missingness,
    Collapse,
    TrueEffect,
    Fit,
    Noncompliance,
    Study,
    Validate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryInfo {
    pub exposure: String,
    pub outcome: String,
    pub measured: NodeSet,
    pub unmeasured: NodeSet,
    pub conditioned: NodeSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeReport {
    pub schema_version: u32,
    pub report: ReportKind,
    pub query: QueryInfo,
    pub backdoor_paths: Vec<String>,
    pub minimal_only: bool,
    pub adjustment_sets: Vec<NodeSet>,
    pub identified: bool,
    pub roles: RoleReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompleteCaseReport {
    pub exposure: String,
    pub outcome: String,
    pub covariates: NodeSet,
    pub valid: bool,
    pub requires_positivity: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissingnessReport {
    pub schema_version: u32,
    pub report: ReportKind,
    pub mechanism: MechanismVerdict,
    pub independencies: Vec<Independence>,
    pub complete_case: CompleteCaseReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollapseReport {
    pub schema_version: u32,
    pub report: ReportKind,
    pub tolerance: f64,
    pub measures: Vec<MeasureReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrueEffectReport {
    pub schema_version: u32,
    pub report: ReportKind,
    pub model: String,
    pub exposure: String,
    pub outcome: String,
    pub estimand: Estimand,
    pub value: f64,
    pub mc_se: f64,
    pub n_oracle: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitReport {
    pub schema_version: u32,
    pub report: ReportKind,
    pub formula: String,
    pub estimator: Estimator,
    pub fit: FitResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positivity: Option<PositivityReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoncomplianceReport {
    pub schema_version: u32,
    pub report: ReportKind,
    pub assigned: String,
    pub taken: String,
    pub outcome: String,
    pub n: usize,
    pub estimands: Noncompliance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyReport {
    pub schema_version: u32,
    pub report: ReportKind,
    pub config: StudyConfig,
    pub result: BiasReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateReport {
    pub schema_version: u32,
    pub report: ReportKind,
    pub valid: bool,
    pub kind: ReportKind,
}

/// Error carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError {
        code: EXIT_INPUT,
        message: e.to_string(),
    }
}

fn numerical<E: std::fmt::Display>(e: E) -> CliError {
    CliError {
        code: EXIT_NUMERICAL,
        message: e.to_string(),
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        if e.is_numerical() {
            numerical(e)
        } else {
            input(e)
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::ProbabilityOutOfRange { .. }
            | ModelError::BadSd { .. }
            | ModelError::BadMean { .. }
            | ModelError::DegenerateArm { .. } => numerical(e),
            _ => input(e),
        }
    }
}

type CliResult = Result<i32, CliError>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = out.write_all(text.as_bytes());
            } else {
                let _ = err.write_all(text.as_bytes());
            }
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    match cmd {
        Command::Analyze(a) => analyze(a, out),
        Command::Missingness(a) => missingness(a, out),
        Command::Collapse(a) => collapse(a, out),
        Command::Simulate(a) => simulate(a, out),
        Command::Fit(a) => fit(a, out),
        Command::Study(a) => study(a, out, err),
        Command::Validate(a) => validate(a, out),
        Command::Fixtures(a) => list_fixtures(a, out),
    }
}

fn emit<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(input)?;
    match writeln!(out, "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(input(e)),
        _ => Ok(()),
    }
}

fn read_source(arg: &str) -> Result<String, CliError> {
    if arg == "-" {
        let mut s = String::new();
        std::io::Read::read_to_string(&mut std::io::stdin(), &mut s).map_err(input)?;
        return Ok(s);
    }
    fs::read_to_string(arg).map_err(|e| input(format!("{arg}: {e}")))
}

/// A built-in name wins unless a file of that name exists.
fn is_builtin(arg: &str, known: bool) -> bool {
    known && !FsPath::new(arg).exists()
}

fn analyze(a: AnalyzeArgs, out: &mut dyn Write) -> CliResult {
    let fixture = fixtures::dag_fixture(&a.dag).filter(|_| is_builtin(&a.dag, true));
    let mut dag: Dag = match fixture {
        Some(f) => f.dag(),
        None => parse_dag(&read_source(&a.dag)?).map_err(input)?,
    };
    if let Some(x) = &a.exposure {
        dag.set_exposure(x).map_err(input)?;
    }
    if let Some(y) = &a.outcome {
        dag.set_outcome(y).map_err(input)?;
    }
    let unmeasured: Vec<String> = if a.all_measured {
        Vec::new()
    } else if let Some(u) = a.unmeasured {
        u
    } else if let Some(f) = fixture {
        f.unmeasured.iter().map(|s| s.to_string()).collect()
    } else {
        dag.nodes().iter().filter(|n| n.starts_with('U')).cloned().collect()
    };
    let conditioned: Vec<String> = match (a.conditioned, fixture) {
        (Some(c), _) => c,
        (None, Some(f)) => f.conditioned.iter().map(|s| s.to_string()).collect(),
        (None, None) => Vec::new(),
    };
    let q = CausalQuery::from_designations(dag)
        .and_then(|q| q.with_unmeasured(unmeasured.iter().filter(|u| !conditioned.contains(u))))
        .and_then(|q| q.with_conditioned(&conditioned))
        .map_err(input)?;

    let opts = EnumerateOptions {
        minimal_only: a.minimal,
        allow_large: a.allow_large,
    };
    let sets = enumerate_adjustment_sets(&q, opts).map_err(input)?;
    let roles = classify_roles_with(&q, EnumerateOptions { minimal_only: false, ..opts }).map_err(input)?;
    let report = AnalyzeReport {
        schema_version: SCHEMA_VERSION,
        report: ReportKind::Analyze,
        query: QueryInfo {
            exposure: q.exposure().to_string(),
            outcome: q.outcome().to_string(),
            measured: q.measured().clone(),
            unmeasured: q.unmeasured(),
            conditioned: q.conditioned().clone(),
        },
        backdoor_paths: backdoor_paths(&q).map_err(input)?.iter().map(ToString::to_string).collect(),
        minimal_only: a.minimal,
        identified: !sets.is_empty(),
        adjustment_sets: sets,
        roles,
    };
    emit(out, &report)?;
    Ok(if report.identified { EXIT_OK } else { EXIT_NEGATIVE })
}

fn missingness(a: MissingnessArgs, out: &mut dyn Write) -> CliResult {
    let m = match fixtures::mdag_fixture(&a.mdag).filter(|_| is_builtin(&a.mdag, true)) {
        Some(m) => m,
        None => MDag::parse(&read_source(&a.mdag)?).map_err(input)?,
    };
    let exposure = a
        .exposure
        .or_else(|| m.dag().exposure().map(str::to_string))
        .ok_or_else(|| input("no exposure given and none designated in the m-DAG"))?;
    let outcome = a
        .outcome
        .or_else(|| m.dag().outcome().map(str::to_string))
        .ok_or_else(|| input("no outcome given and none designated in the m-DAG"))?;
    let covariates: NodeSet = match a.covariates {
        Some(c) => c.into_iter().collect(),
        None => m
            .substantive()
            .into_iter()
            .filter(|n| *n != exposure && *n != outcome && !m.unmeasured().contains(n))
            .collect(),
    };
    let cc = complete_case_valid(&m, &exposure, &outcome, &covariates).map_err(input)?;
    let report = MissingnessReport {
        schema_version: SCHEMA_VERSION,
        report: ReportKind::Missingness,
        mechanism: classify_mechanism(&m),
        independencies: implied_independencies(&m),
        complete_case: CompleteCaseReport {
            exposure,
            outcome,
            covariates,
            valid: cc.valid,
            requires_positivity: cc.requires_positivity,
        },
    };
    emit(out, &report)?;
    Ok(if cc.valid { EXIT_OK } else { EXIT_NEGATIVE })
}

fn collapse(a: CollapseArgs, out: &mut dyn Write) -> CliResult {
    let table = match fixtures::table_fixture(&a.table).filter(|_| is_builtin(&a.table, true)) {
        Some(t) => t,
        None => StratifiedTable::from_csv(read_source(&a.table)?.as_bytes()).map_err(input)?,
    };
    let measures: Vec<Measure> = match a.measure {
        MeasureArg::All => Measure::ALL.to_vec(),
        MeasureArg::RiskDifference => vec![Measure::RiskDifference],
        MeasureArg::RiskRatio => vec![Measure::RiskRatio],
        MeasureArg::OddsRatio => vec![Measure::OddsRatio],
    };
    let reports = measures
        .into_iter()
        .map(|m| table.effect_measure_with_tolerance(m, a.tolerance))
        .collect::<Result<Vec<_>, _>>()
        .map_err(numerical)?;
    let all_collapsible = reports.iter().all(|r| r.collapsible);
    match a.format {
        Format::Json => emit(
            out,
            &CollapseReport {
                schema_version: SCHEMA_VERSION,
                report: ReportKind::Collapse,
                tolerance: a.tolerance,
                measures: reports,
            },
        )?,
        Format::Text => {
            write!(out, "{}", table.render()).map_err(input)?;
            for r in &reports {
                let verdict = if r.strictly_collapsible {
                    "strictly collapsible"
                } else if r.collapsible {
                    "collapsible"
                } else {
                    "not collapsible"
                };
                let strata: Vec<String> = r.strata.iter().map(|s| format!("{}={:.2}", s.stratum, s.value)).collect();
                writeln!(
                    out,
                    "{:<16} {}  marginal={:.2}  {}",
                    r.measure.label(),
                    strata.join("  "),
                    r.marginal,
                    verdict
                )
                .map_err(input)?;
            }
        }
    }
    Ok(if all_collapsible { EXIT_OK } else { EXIT_NEGATIVE })
}

fn load_model(arg: &str) -> Result<(StructuralModel, Option<&'static fixtures::ModelFixture>), CliError> {
    match fixtures::model_fixture(arg).filter(|_| is_builtin(arg, true)) {
        Some(f) => Ok((f.model(), Some(f))),
        None => {
            let name = FsPath::new(arg)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| arg.to_string());
            Ok((StructuralModel::parse(&read_source(arg)?)?.with_name(name), None))
        }
    }
}

fn parse_assignment(s: &str) -> Result<(String, f64), CliError> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| input(format!("expected NAME=VALUE, got `{s}`")))?;
    let v: f64 = v.trim().parse().map_err(|_| input(format!("`{v}` is not a number")))?;
    Ok((k.trim().to_string(), v))
}

fn simulate(a: SimulateArgs, out: &mut dyn Write) -> CliResult {
    let (mut model, fixture) = load_model(&a.model)?;
    for s in &a.set {
        let (node, value) = parse_assignment(s)?;
        model = model.intervene(Intervention { node: &node, value })?;
    }
    if a.print_model {
        write!(out, "{}", model.simplified().to_text()).map_err(input)?;
        return Ok(EXIT_OK);
    }
    if let Some(est) = a.true_effect {
        let exposure = a
            .exposure
            .or_else(|| fixture.map(|f| f.exposure.to_string()))
            .ok_or_else(|| input("--exposure is required for a model file"))?;
        let outcome = a
            .outcome
            .or_else(|| fixture.map(|f| f.outcome.to_string()))
            .ok_or_else(|| input("--outcome is required for a model file"))?;
        let t = true_effect(&model, &exposure, &outcome, est.into(), a.oracle_n, a.seed)?;
        emit(
            out,
            &TrueEffectReport {
                schema_version: SCHEMA_VERSION,
                report: ReportKind::TrueEffect,
                model: model.name().unwrap_or_default().to_string(),
                exposure,
                outcome,
                estimand: est.into(),
                value: t.value,
                mc_se: t.mc_se,
                n_oracle: t.n,
                seed: a.seed,
            },
        )?;
        return Ok(EXIT_OK);
    }
    let data = simulate_replicate(&model, a.n, a.seed, a.replication)?;
    match a.out {
        Some(path) => {
            let f = fs::File::create(&path).map_err(|e| input(format!("{path}: {e}")))?;
            data.write_csv(std::io::BufWriter::new(f)).map_err(input)?;
        }
        None => data.write_csv(out).map_err(input)?,
    }
    Ok(EXIT_OK)
}

fn fit(a: FitArgs, out: &mut dyn Write) -> CliResult {
    let mut data = match (&a.data, &a.model) {
        (Some(path), _) => Dataset::read_csv(read_source(path)?.as_bytes()).map_err(input)?,
        (None, Some(m)) => simulate_replicate(&load_model(m)?.0, a.n, a.seed, 0)?,
        (None, None) => return Err(input("one of --data or --model is required")),
    };
    for f in &a.filter {
        let (col, value) = parse_assignment(f)?;
        let c = data.column(&col).map_err(input)?.to_vec();
        data = data.filter_rows(|i| c[i] == value);
    }

    if let Some(cols) = a.noncompliance {
        let [assigned, taken, outcome] = <[String; 3]>::try_from(cols)
            .map_err(|_| input("--noncompliance takes ASSIGNED,TAKEN,OUTCOME"))?;
        let e = noncompliance_estimands(&data, &assigned, &taken, &outcome)?;
        emit(
            out,
            &NoncomplianceReport {
                schema_version: SCHEMA_VERSION,
                report: ReportKind::Noncompliance,
                assigned,
                taken,
                outcome,
                n: data.n_rows(),
                estimands: e,
            },
        )?;
        return Ok(EXIT_OK);
    }

    let formula = a.formula.ok_or_else(|| input("--formula or --noncompliance is required"))?;
    let spec = DesignSpec::parse(&formula)?;
    let estimator: Estimator = a.estimator.into();
    let result = estimator.fit(&data, &spec)?;
    let positivity = match &a.positivity {
        Some(x) => {
            let covs: Vec<&str> = a.covariates.iter().map(String::as_str).collect();
            Some(positivity_check(&data, x, &covs, a.threshold)?)
        }
        None => None,
    };
    emit(
        out,
        &FitReport {
            schema_version: SCHEMA_VERSION,
            report: ReportKind::Fit,
            formula: spec.to_string(),
            estimator,
            fit: result,
            positivity,
        },
    )?;
    Ok(EXIT_OK)
}

fn study(a: StudyArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let mut cfg = if a.config == "default" && !FsPath::new("default").exists() {
        StudyConfig::default_panel(a.seed.unwrap_or(1), 1000, 1000)
    } else {
        serde_json::from_str::<StudyConfig>(&read_source(&a.config)?)
            .map_err(|e| input(format!("{}: {e}", a.config)))?
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    for sc in &mut cfg.scenarios {
        if let Some(r) = a.runs {
            sc.replications = r;
        }
        if let Some(n) = a.n {
            sc.n = n;
        }
    }
    if a.print_config {
        emit(out, &cfg)?;
        return Ok(EXIT_OK);
    }
    let result = run_study(&cfg, a.workers).map_err(input)?;
    if let Some(path) = &a.estimates {
        let f = fs::File::create(path).map_err(|e| input(format!("{path}: {e}")))?;
        result.write_estimates_csv(std::io::BufWriter::new(f)).map_err(input)?;
    }
    for ab in &result.aborted {
        let _ = writeln!(
            err,
            "scenario `{}` aborted: {} of {} replications failed; {}",
            ab.label,
            ab.failures,
            ab.replications,
            ab.errors.join("; ")
        );
    }
    let code = if result.aborted.is_empty() { EXIT_OK } else { EXIT_NUMERICAL };
    match a.format {
        Format::Json => emit(
            out,
            &StudyReport {
                schema_version: SCHEMA_VERSION,
                report: ReportKind::Study,
                config: cfg,
                result,
            },
        )?,
        Format::Text => write!(out, "{}", result.render()).map_err(input)?,
    }
    Ok(code)
}

fn round_trips<T: Serialize + DeserializeOwned>(v: &serde_json::Value) -> Result<(), String> {
    let typed: T = serde_json::from_value(v.clone()).map_err(|e| e.to_string())?;
    let back = serde_json::to_value(&typed).map_err(|e| e.to_string())?;
    if &back == v {
        Ok(())
    } else {
        Err("document does not survive a parse and re-serialization unchanged".into())
    }
}

/// Checks a report produced by this tool: known kind, current schema
/// version, no unknown or missing fields, lossless round trip.
pub fn validate_report(text: &str) -> Result<ReportKind, String> {
    let v: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let version = v.get("schema_version").and_then(|s| s.as_u64());
    if version != Some(SCHEMA_VERSION as u64) {
        return Err(format!("schema_version must be {SCHEMA_VERSION}"));
    }
    let kind: ReportKind = v
        .get("report")
        .cloned()
        .ok_or("missing `report` field")
        .and_then(|k| serde_json::from_value(k).map_err(|_| "unknown `report` kind"))?;
    match kind {
        ReportKind::Analyze => round_trips::<AnalyzeReport>(&v),
        ReportKind::Missingness => round_trips::<MissingnessReport>(&v),
        ReportKind::Collapse => round_trips::<CollapseReport>(&v),
        ReportKind::TrueEffect => round_trips::<TrueEffectReport>(&v),
        ReportKind::Fit => round_trips::<FitReport>(&v),
        ReportKind::Noncompliance => round_trips::<NoncomplianceReport>(&v),
        ReportKind::Study => round_trips::<StudyReport>(&v),
        ReportKind::Validate => round_trips::<ValidateReport>(&v),
    }?;
    Ok(kind)
}

fn validate(a: ValidateArgs, out: &mut dyn Write) -> CliResult {
    let kind = validate_report(&read_source(&a.file)?).map_err(input)?;
    emit(
        out,
        &ValidateReport {
            schema_version: SCHEMA_VERSION,
            report: ReportKind::Validate,
            valid: true,
            kind,
        },
    )?;
    Ok(EXIT_OK)
}

fn list_fixtures(a: FixturesArgs, out: &mut dyn Write) -> CliResult {
    let w = |out: &mut dyn Write, s: &str| write!(out, "{s}").map_err(input);
    let Some(name) = a.name else {
        for (kind, names) in fixtures::names() {
            w(out, &format!("{kind}: {}\n", names.join(" ")))?;
        }
        return Ok(EXIT_OK);
    };
    if let Some(f) = fixtures::dag_fixture(&name) {
        w(out, &format!("# {}\n{}", f.title, f.text))?;
        if !f.unmeasured.is_empty() {
            w(out, &format!("# unmeasured: {}\n", f.unmeasured.join(", ")))?;
        }
        if !f.conditioned.is_empty() {
            w(out, &format!("# conditioned: {}\n", f.conditioned.join(", ")))?;
        }
    } else if let Some(m) = fixtures::mdag_fixture(&name) {
        w(out, &m.to_text())?;
    } else if let Some(f) = fixtures::model_fixture(&name) {
        w(out, &format!("# {}\n{}", f.title, f.text))?;
    } else if let Some(t) = fixtures::table_fixture(&name) {
        w(out, &t.render())?;
    } else {
        return Err(input(format!("no fixture named `{name}`")));
    }
    Ok(EXIT_OK)
}
