//! Structural equation models sampled in declaration order.
//!
//! ```text
//! L ~ normal(1, 1)
//! A ~ bernoulli(plogis(-0.5 + 2*L))
//! Y ~ normal(2 + A + 3*L, 1)
//! ```
//!
//! `normal(mean)` uses sd 1. Statements may also be separated by `;`.

mod expr;
mod rng;

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Dataset;
use crate::graph::{Dag, GraphError};

pub use expr::{plogis, Expr, Term};
pub use rng::{derive_seed, StreamKey};

use expr::ExprParser;

/// Smallest oracle sample accepted by [`true_effect`].
pub const MIN_ORACLE_N: usize = 100_000;
/// Default oracle sample size.
pub const DEFAULT_ORACLE_N: usize = 1_000_000;

/// Rows per parallel work unit when simulating large samples.
const ROW_CHUNK: usize = 8192;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}, column {column}: unknown function `{name}`")]
    UnknownFunction {
        name: String,
        line: usize,
        column: usize,
    },
    #[error("line {line}, column {column}: unknown distribution `{name}`")]
    UnknownDistribution {
        name: String,
        line: usize,
        column: usize,
    },
    #[error("line {line}, column {column}: `{name}` is not declared")]
    UnknownVariable {
        name: String,
        line: usize,
        column: usize,
    },
    #[error("line {line}, column {column}: `{name}` is used before it is declared")]
    ForwardReference {
        name: String,
        line: usize,
        column: usize,
    },
    #[error("line {line}, column {column}: coefficient is not finite")]
    NonFinite { line: usize, column: usize },
    #[error("line {line}: `{name}` is declared twice")]
    DuplicateNode { name: String, line: usize },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("cannot set {node} to {value}: {reason}")]
    InvalidIntervention {
        node: String,
        value: f64,
        reason: &'static str,
    },
    #[error("node {node}, row {row}: probability {value} outside [0, 1]")]
    ProbabilityOutOfRange { node: String, row: usize, value: f64 },
    #[error("node {node}, row {row}: sd {value} is negative or not finite")]
    BadSd { node: String, row: usize, value: f64 },
    #[error("node {node}, row {row}: mean is not finite")]
    BadMean { node: String, row: usize },
    #[error("{0} is not binary")]
    NotBinary(String),
    #[error("outcome mean {p} under {arm} leaves the odds ratio undefined")]
    DegenerateArm { arm: &'static str, p: f64 },
    #[error("oracle sample size {0} is below {MIN_ORACLE_N}")]
    OracleTooSmall(usize),
    #[error("sample size must be at least 1")]
    ZeroRows,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    Normal { mean: Expr, sd: Expr },
    Bernoulli { prob: Expr },
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub name: String,
    pub dist: Distribution,
    /// Takes only the values 0 and 1. Survives interventions.
    pub binary: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intervention<'a> {
    pub node: &'a str,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StructuralModel {
    name: Option<String>,
    nodes: Vec<NodeSpec>,
    interventions: Vec<(String, f64)>,
}

impl StructuralModel {
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        parse_model(text)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.nodes
    }

    pub fn names(&self) -> Vec<String> {
        self.nodes.iter().map(|n| n.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Result<usize, ModelError> {
        self.nodes
            .iter()
            .position(|n| n.name == name)
            .ok_or_else(|| ModelError::UnknownNode(name.to_string()))
    }

    pub fn node(&self, name: &str) -> Result<&NodeSpec, ModelError> {
        Ok(&self.nodes[self.index_of(name)?])
    }

    pub fn is_binary(&self, name: &str) -> Result<bool, ModelError> {
        Ok(self.node(name)?.binary)
    }

    pub fn interventions(&self) -> &[(String, f64)] {
        &self.interventions
    }

    fn parents_of(&self, i: usize) -> Vec<usize> {
        match &self.nodes[i].dist {
            Distribution::Normal { mean, sd } => {
                let mut v = mean.variables();
                v.extend(sd.variables());
                v.sort_unstable();
                v.dedup();
                v
            }
            Distribution::Bernoulli { prob } => prob.variables(),
            Distribution::Fixed(_) => Vec::new(),
        }
    }

    /// One edge from every referenced node to the referencing node.
    pub fn induced_dag(&self) -> Dag {
        let mut dag = Dag::new();
        for (i, n) in self.nodes.iter().enumerate() {
            dag.add_node(&n.name).expect("names are valid");
            for p in self.parents_of(i) {
                dag.add_edge(&self.nodes[p].name, &n.name)
                    .expect("earlier-only references cannot form a cycle");
            }
        }
        dag
    }

    /// Replaces the target's distribution with a point mass. Other nodes
    /// keep their equations; a repeated intervention overwrites.
    pub fn intervene(&self, iv: Intervention<'_>) -> Result<Self, ModelError> {
        let i = self.index_of(iv.node)?;
        let bad = |reason| ModelError::InvalidIntervention {
            node: iv.node.to_string(),
            value: iv.value,
            reason,
        };
        if !iv.value.is_finite() {
            return Err(bad("value is not finite"));
        }
        if self.nodes[i].binary && iv.value != 0.0 && iv.value != 1.0 {
            return Err(bad("binary nodes take 0 or 1"));
        }
        let mut m = self.clone();
        m.nodes[i].dist = Distribution::Fixed(iv.value);
        m.interventions.retain(|(n, _)| n != iv.node);
        m.interventions.push((iv.node.to_string(), iv.value));
        Ok(m)
    }

    /// Equivalent model with every fixed value substituted into downstream
    /// equations, for display.
    pub fn simplified(&self) -> Self {
        let mut m = self.clone();
        for i in 0..m.nodes.len() {
            let Distribution::Fixed(v) = m.nodes[i].dist else {
                continue;
            };
            for node in &mut m.nodes[i + 1..] {
                node.dist = match &node.dist {
                    Distribution::Normal { mean, sd } => Distribution::Normal {
                        mean: mean.substitute(i, v),
                        sd: sd.substitute(i, v),
                    },
                    Distribution::Bernoulli { prob } => Distribution::Bernoulli {
                        prob: prob.substitute(i, v),
                    },
                    Distribution::Fixed(x) => Distribution::Fixed(*x),
                };
            }
        }
        m
    }

    /// Declaration text of one node.
    pub fn node_text(&self, name: &str) -> Result<String, ModelError> {
        let i = self.index_of(name)?;
        Ok(self.format_node(i))
    }

    fn format_node(&self, i: usize) -> String {
        let names = self.names();
        let n = &self.nodes[i];
        match &n.dist {
            Distribution::Normal { mean, sd } => format!(
                "{} ~ normal({}, {})",
                n.name,
                mean.display(&names),
                sd.display(&names)
            ),
            Distribution::Bernoulli { prob } => {
                format!("{} ~ bernoulli({})", n.name, prob.display(&names))
            }
            Distribution::Fixed(v) if n.binary => format!("{} ~ bernoulli({v})", n.name),
            Distribution::Fixed(v) => format!("{} ~ normal({v}, 0)", n.name),
        }
    }

    /// Model text that parses back to an equivalent model.
    pub fn to_text(&self) -> String {
        (0..self.nodes.len())
            .map(|i| self.format_node(i) + "\n")
            .collect()
    }
}

impl fmt::Display for StructuralModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Parses model text; see the module documentation for the format.
pub fn parse_model(text: &str) -> Result<StructuralModel, ModelError> {
    let statements = split_statements(text);
    let declared: Vec<&str> = statements
        .iter()
        .filter_map(|s| s.text.split_once('~').map(|(n, _)| n.trim()))
        .collect();

    let mut m = StructuralModel::default();
    for st in &statements {
        let (lhs, rhs) = st.text.split_once('~').ok_or_else(|| ModelError::Syntax {
            line: st.line,
            column: st.column,
            message: "expected `name ~ distribution(...)`".into(),
        })?;
        let name = lhs.trim();
        if name.is_empty() || !crate::graph::valid_name(name) {
            return Err(ModelError::Syntax {
                line: st.line,
                column: st.column,
                message: format!("invalid node name `{name}`"),
            });
        }
        if m.nodes.iter().any(|n| n.name == name) {
            return Err(ModelError::DuplicateNode {
                name: name.to_string(),
                line: st.line,
            });
        }
        let rhs_col = st.column + lhs.len() + 1;
        let spec = parse_distribution(name, rhs, st.line, rhs_col, &m, &declared)?;
        m.nodes.push(spec);
    }
    Ok(m)
}

struct Statement<'a> {
    text: &'a str,
    line: usize,
    /// Zero-based column of `text` within its line.
    column: usize,
}

fn split_statements(text: &str) -> Vec<Statement<'_>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("");
        let mut col = 0;
        for piece in body.split(';') {
            let lead = piece.len() - piece.trim_start().len();
            if !piece.trim().is_empty() {
                out.push(Statement {
                    text: piece.trim(),
                    line: i + 1,
                    column: col + lead,
                });
            }
            col += piece.len() + 1;
        }
    }
    out
}

fn parse_distribution(
    name: &str,
    rhs: &str,
    line: usize,
    column: usize,
    m: &StructuralModel,
    declared: &[&str],
) -> Result<NodeSpec, ModelError> {
    let lead = rhs.len() - rhs.trim_start().len();
    let column = column + lead;
    let rhs = rhs.trim();
    let syntax = |message: &str| ModelError::Syntax {
        line,
        column: column + 1,
        message: message.to_string(),
    };
    let open = rhs.find('(').ok_or_else(|| syntax("expected `normal(...)` or `bernoulli(...)`"))?;
    if !rhs.ends_with(')') {
        return Err(syntax("expected `)` at end of statement"));
    }
    let func = rhs[..open].trim();
    let args_src = &rhs[open + 1..rhs.len() - 1];
    let args = split_args(args_src, column + open + 1);

    let resolve = |s: &str| m.nodes.iter().position(|n| n.name == s);
    let parse_arg = |(src, col): &(&str, usize)| {
        ExprParser::parse(src, line, *col, &resolve).map_err(|e| match e {
            ModelError::UnknownVariable { name: v, line, column }
                if declared.contains(&v.as_str()) =>
            {
                ModelError::ForwardReference { name: v, line, column }
            }
            other => other,
        })
    };

    let dist = match (func, args.len()) {
        ("normal", 1) => Distribution::Normal {
            mean: parse_arg(&args[0])?,
            sd: Expr::constant(1.0),
        },
        ("normal", 2) => Distribution::Normal {
            mean: parse_arg(&args[0])?,
            sd: parse_arg(&args[1])?,
        },
        ("bernoulli", 1) => Distribution::Bernoulli {
            prob: parse_arg(&args[0])?,
        },
        ("normal" | "bernoulli", _) => {
            return Err(syntax(&format!("wrong number of arguments to {func}")))
        }
        _ => {
            return Err(ModelError::UnknownDistribution {
                name: func.to_string(),
                line,
                column: column + 1,
            })
        }
    };
    let binary = matches!(dist, Distribution::Bernoulli { .. });
    Ok(NodeSpec {
        name: name.to_string(),
        dist,
        binary,
    })
}

/// Splits on commas outside parentheses; returns pieces with their
/// zero-based columns.
fn split_args(src: &str, column: usize) -> Vec<(&str, usize)> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in src.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push((&src[start..i], column + start));
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push((&src[start..], column + start));
    out
}

/// `n` rows from replication 0 of `seed`.
pub fn simulate(m: &StructuralModel, n: usize, seed: u64) -> Result<Dataset, ModelError> {
    simulate_replicate(m, n, seed, 0)
}

/// `n` rows whose random draws are keyed by `(seed, node, replication)`.
pub fn simulate_replicate(
    m: &StructuralModel,
    n: usize,
    seed: u64,
    replication: u64,
) -> Result<Dataset, ModelError> {
    if n == 0 {
        return Err(ModelError::ZeroRows);
    }
    let k = m.nodes.len();
    let keys: Vec<StreamKey> = m
        .nodes
        .iter()
        .map(|s| StreamKey::new(seed, &s.name, replication))
        .collect();

    let mut rows = vec![0.0; n * k];
    if n >= 4 * ROW_CHUNK {
        rows.par_chunks_mut(ROW_CHUNK * k)
            .enumerate()
            .try_for_each(|(c, chunk)| fill_rows(m, &keys, chunk, c * ROW_CHUNK))?;
    } else {
        fill_rows(m, &keys, &mut rows, 0)?;
    }

    let columns = (0..k).map(|j| {
        let col: Vec<f64> = (0..n).map(|i| rows[i * k + j]).collect();
        (m.nodes[j].name.clone(), col)
    });
    let mut d = Dataset::new(columns).expect("names are unique");
    d.provenance.model = m.name.clone();
    d.provenance.seed = Some(seed);
    d.provenance.replication = Some(replication);
    d.provenance.interventions = m.interventions.clone();
    Ok(d)
}

/// Fills a row-major block starting at global row `first`.
fn fill_rows(
    m: &StructuralModel,
    keys: &[StreamKey],
    block: &mut [f64],
    first: usize,
) -> Result<(), ModelError> {
    let k = m.nodes.len();
    for (r, vals) in block.chunks_mut(k).enumerate() {
        let row = first + r;
        for (j, spec) in m.nodes.iter().enumerate() {
            vals[j] = match &spec.dist {
                Distribution::Fixed(v) => *v,
                Distribution::Normal { mean, sd } => {
                    let mu = mean.eval(vals);
                    let s = sd.eval(vals);
                    if !mu.is_finite() {
                        return Err(ModelError::BadMean {
                            node: spec.name.clone(),
                            row,
                        });
                    }
                    if !(s.is_finite() && s >= 0.0) {
                        return Err(ModelError::BadSd {
                            node: spec.name.clone(),
                            row,
                            value: s,
                        });
                    }
                    let z: f64 = keys[j].row(row as u64).sample(StandardNormal);
                    mu + s * z
                }
                Distribution::Bernoulli { prob } => {
                    let p = prob.eval(vals);
                    if !(0.0..=1.0).contains(&p) {
                        return Err(ModelError::ProbabilityOutOfRange {
                            node: spec.name.clone(),
                            row,
                            value: p,
                        });
                    }
                    let u: f64 = keys[j].row(row as u64).random();
                    if u < p {
                        1.0
                    } else {
                        0.0
                    }
                }
            };
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Estimand {
    #[serde(rename = "ATE")]
    Ate,
    #[serde(rename = "log_MOR")]
    LogMor,
}

impl fmt::Display for Estimand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimand::Ate => "ATE",
            Estimand::LogMor => "log_MOR",
        })
    }
}

/// Monte-Carlo value of an interventional contrast.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrueEffect {
    pub value: f64,
    pub mc_se: f64,
    pub n: usize,
}

/// Contrast of `outcome` between the models with `exposure` set to 1 and 0.
///
/// Both arms reuse the same random streams, so the per-row difference has
/// small variance and the standard error accounts for the pairing.
pub fn true_effect(
    m: &StructuralModel,
    exposure: &str,
    outcome: &str,
    estimand: Estimand,
    n_oracle: usize,
    seed: u64,
) -> Result<TrueEffect, ModelError> {
    if !m.is_binary(exposure)? {
        return Err(ModelError::NotBinary(exposure.to_string()));
    }
    m.index_of(outcome)?;
    if estimand == Estimand::LogMor && !m.is_binary(outcome)? {
        return Err(ModelError::NotBinary(outcome.to_string()));
    }
    if n_oracle < MIN_ORACLE_N {
        return Err(ModelError::OracleTooSmall(n_oracle));
    }
    let arm = |v| -> Result<Vec<f64>, ModelError> {
        let d = simulate(&m.intervene(Intervention { node: exposure, value: v })?, n_oracle, seed)?;
        Ok(d.column(outcome).expect("outcome exists").to_vec())
    };
    let y1 = arm(1.0)?;
    let y0 = arm(0.0)?;
    let n = n_oracle as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n;

    match estimand {
        Estimand::Ate => {
            let d: Vec<f64> = y1.iter().zip(&y0).map(|(a, b)| a - b).collect();
            let md = mean(&d);
            let var = d.iter().map(|x| (x - md).powi(2)).sum::<f64>() / (n - 1.0);
            Ok(TrueEffect {
                value: md,
                mc_se: (var / n).sqrt(),
                n: n_oracle,
            })
        }
        Estimand::LogMor => {
            let (p1, p0) = (mean(&y1), mean(&y0));
            for (arm, p) in [("exposure = 1", p1), ("exposure = 0", p0)] {
                if p <= 0.0 || p >= 1.0 {
                    return Err(ModelError::DegenerateArm { arm, p });
                }
            }
            let logit = |p: f64| (p / (1.0 - p)).ln();
            let g1 = 1.0 / (p1 * (1.0 - p1));
            let g0 = -1.0 / (p0 * (1.0 - p0));
            let cov = y1
                .iter()
                .zip(&y0)
                .map(|(a, b)| (a - p1) * (b - p0))
                .sum::<f64>()
                / (n - 1.0);
            let v1 = p1 * (1.0 - p1) * n / (n - 1.0);
            let v0 = p0 * (1.0 - p0) * n / (n - 1.0);
            let var = (g1 * g1 * v1 + g0 * g0 * v0 + 2.0 * g1 * g0 * cov) / n;
            Ok(TrueEffect {
                value: logit(p1) - logit(p0),
                mc_se: var.max(0.0).sqrt(),
                n: n_oracle,
            })
        }
    }
}
