//! Missingness DAGs: graphs augmented with response-indicator nodes.
//!
//! Each partially observed variable `X` has an indicator node (conventionally
//! `C_X`) equal to 1 when `X` is observed. Classification follows the
//! graphical MCAR/MAR/MNAR rules; complete-case validity for a regression of
//! the outcome is a d-separation check.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::parse::{node_name, parse_with};
use crate::graph::{Dag, GraphError, NodeSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MissingError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{0} is a missingness indicator, not a substantive variable")]
    NotSubstantive(String),
    #[error("indicator {indicator} has an edge into substantive node {child}")]
    IndicatorCause { indicator: String, child: String },
    #[error("{0} already has a missingness indicator")]
    DuplicateIndicator(String),
    #[error("{0} is already the indicator of another variable")]
    SharedIndicator(String),
    #[error("outcome {0} cannot also be a covariate")]
    OutcomeAsCovariate(String),
}

/// A DAG together with the indicator node of each partially observed variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MDag {
    dag: Dag,
    indicator_of: BTreeMap<String, String>,
    unmeasured: NodeSet,
}

impl MDag {
    /// `indicators` maps each partially observed variable to its indicator.
    /// Both must already be nodes of `dag`.
    pub fn new<I, K, V>(dag: Dag, indicators: I) -> Result<Self, MissingError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut m = MDag {
            dag,
            indicator_of: BTreeMap::new(),
            unmeasured: NodeSet::new(),
        };
        for (var, ind) in indicators {
            m.insert_indicator(var.as_ref(), ind.as_ref())?;
        }
        m.validate()?;
        Ok(m)
    }

    /// Declares latent nodes. They count as neither fully nor partially
    /// observed.
    pub fn with_unmeasured<I>(mut self, nodes: I) -> Result<Self, MissingError>
    where
        I: IntoIterator,
        I::Item: AsRef<str>,
    {
        for n in nodes {
            let n = n.as_ref();
            self.dag.require(n)?;
            if self.is_indicator(n) {
                return Err(MissingError::NotSubstantive(n.to_string()));
            }
            self.unmeasured.insert(n.to_string());
        }
        Ok(self)
    }

    /// Parses the DAG text format extended with `missing: X -> C_X` and
    /// `unmeasured: U1, U2` lines.
    pub fn parse(text: &str) -> Result<Self, MissingError> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        let mut latent: Vec<String> = Vec::new();
        let dag = parse_with(text, |line, key, value, dag| match key {
            "missing" => {
                let (var, ind) = value.split_once("->").ok_or_else(|| GraphError::Syntax {
                    line,
                    message: "expected `missing: X -> C_X`".into(),
                })?;
                let var = node_name(var.trim(), line)?;
                let ind = node_name(ind.trim(), line)?;
                dag.add_node(var)?;
                dag.add_node(ind)?;
                pairs.push((var.to_string(), ind.to_string()));
                Ok(())
            }
            "unmeasured" => {
                for name in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    dag.add_node(node_name(name, line)?)?;
                    latent.push(name.to_string());
                }
                Ok(())
            }
            _ => Err(GraphError::Syntax {
                line,
                message: format!("unknown directive `{key}:`"),
            }),
        })?;
        MDag::new(dag, pairs)?.with_unmeasured(latent)
    }

    /// Canonical text: the DAG's canonical form followed by sorted
    /// `missing:` and `unmeasured:` lines.
    pub fn to_text(&self) -> String {
        let mut out = self.dag.to_text();
        for (var, ind) in &self.indicator_of {
            out.push_str(&format!("missing: {var} -> {ind}\n"));
        }
        if !self.unmeasured.is_empty() {
            let names: Vec<&str> = self.unmeasured.iter().map(String::as_str).collect();
            out.push_str(&format!("unmeasured: {}\n", names.join(", ")));
        }
        out
    }

    fn insert_indicator(&mut self, var: &str, ind: &str) -> Result<(), MissingError> {
        self.dag.require(var)?;
        self.dag.require(ind)?;
        if var == ind {
            return Err(MissingError::NotSubstantive(ind.to_string()));
        }
        if self.indicator_of.contains_key(var) {
            return Err(MissingError::DuplicateIndicator(var.to_string()));
        }
        if self.indicator_of.values().any(|c| c == ind) {
            return Err(MissingError::SharedIndicator(ind.to_string()));
        }
        self.indicator_of.insert(var.to_string(), ind.to_string());
        Ok(())
    }

    fn validate(&self) -> Result<(), MissingError> {
        for (var, ind) in &self.indicator_of {
            if self.is_indicator(var) {
                return Err(MissingError::NotSubstantive(var.clone()));
            }
            for child in self.dag.children(ind)? {
                if !self.is_indicator(&child) {
                    return Err(MissingError::IndicatorCause {
                        indicator: ind.clone(),
                        child,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn indicator_of(&self) -> &BTreeMap<String, String> {
        &self.indicator_of
    }

    pub fn unmeasured(&self) -> &NodeSet {
        &self.unmeasured
    }

    pub fn is_indicator(&self, node: &str) -> bool {
        self.indicator_of.values().any(|c| c == node)
    }

    pub fn indicators(&self) -> NodeSet {
        self.indicator_of.values().cloned().collect()
    }

    /// Every node that is not an indicator.
    pub fn substantive(&self) -> NodeSet {
        self.dag
            .node_set()
            .into_iter()
            .filter(|n| !self.is_indicator(n))
            .collect()
    }

    /// Substantive, measured nodes without an indicator.
    pub fn fully_observed(&self) -> NodeSet {
        self.substantive()
            .into_iter()
            .filter(|n| !self.indicator_of.contains_key(n) && !self.unmeasured.contains(n))
            .collect()
    }

    /// Partially observed covariates: variables with an indicator other than
    /// the designated exposure and outcome.
    pub fn partially_observed_covariates(&self) -> NodeSet {
        let skip = [self.dag.exposure(), self.dag.outcome()];
        self.indicator_of
            .keys()
            .filter(|k| !skip.contains(&Some(k.as_str())))
            .cloned()
            .collect()
    }
}

impl fmt::Display for MDag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mechanism {
    #[serde(rename = "G-MCAR")]
    Mcar,
    #[serde(rename = "G-MAR")]
    Mar,
    #[serde(rename = "G-MNAR")]
    Mnar,
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mechanism::Mcar => "G-MCAR",
            Mechanism::Mar => "G-MAR",
            Mechanism::Mnar => "G-MNAR",
        })
    }
}

/// Graph feature supporting a verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Witness {
    Edge { from: String, to: String },
    Path { nodes: Vec<String> },
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Edge { from, to } => write!(f, "{from} -> {to}"),
            Witness::Path { nodes } => {
                // indicator <- latent -> observed
                write!(f, "{}", nodes.first().map(String::as_str).unwrap_or(""))?;
                for (i, n) in nodes.iter().enumerate().skip(1) {
                    let arrow = if i == 1 { " <- " } else { " -> " };
                    write!(f, "{arrow}{n}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismVerdict {
    pub label: Mechanism,
    /// For G-MCAR: empty. For G-MAR: the indicator edges that rule out
    /// G-MCAR. For G-MNAR: the features that rule out G-MAR.
    pub witnesses: Vec<Witness>,
}

/// Graphical missingness mechanism.
///
/// G-MCAR when no edge joins an indicator and a substantive node. G-MAR when
/// no edge joins an indicator and a partially observed covariate, and no
/// latent node points both into an indicator and into an observed variable.
pub fn classify_mechanism(m: &MDag) -> MechanismVerdict {
    let indicators = m.indicators();
    let substantive = m.substantive();
    let partial = m.partially_observed_covariates();
    let observed: NodeSet = substantive
        .iter()
        .filter(|n| !partial.contains(*n) && !m.unmeasured.contains(*n))
        .cloned()
        .collect();

    let mut touching = Vec::new();
    let mut violations = Vec::new();
    for (from, to) in m.dag.edges() {
        let other = match (indicators.contains(&from), indicators.contains(&to)) {
            (true, false) => &to,
            (false, true) => &from,
            _ => continue,
        };
        if !substantive.contains(other) {
            continue;
        }
        let w = Witness::Edge {
            from: from.clone(),
            to: to.clone(),
        };
        if partial.contains(other) {
            violations.push(w.clone());
        }
        touching.push(w);
    }

    for u in &m.unmeasured {
        let children = m.dag.children(u).expect("unmeasured nodes exist");
        for c in children.iter().filter(|c| indicators.contains(*c)) {
            for l in children.iter().filter(|l| observed.contains(*l)) {
                violations.push(Witness::Path {
                    nodes: vec![c.clone(), u.clone(), l.clone()],
                });
            }
        }
    }

    if touching.is_empty() {
        MechanismVerdict {
            label: Mechanism::Mcar,
            witnesses: Vec::new(),
        }
    } else if violations.is_empty() {
        MechanismVerdict {
            label: Mechanism::Mar,
            witnesses: touching,
        }
    } else {
        MechanismVerdict {
            label: Mechanism::Mnar,
            witnesses: violations,
        }
    }
}

/// `indicator ⫫ independent | given`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Independence {
    pub indicator: String,
    pub independent: NodeSet,
    pub given: NodeSet,
}

impl fmt::Display for Independence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |s: &NodeSet| s.iter().map(String::as_str).collect::<Vec<_>>().join(", ");
        write!(
            f,
            "{} _||_ {{{}}} | {{{}}}",
            self.indicator,
            join(&self.independent),
            join(&self.given)
        )
    }
}

/// For every indicator, the substantive nodes d-separated from it by its
/// parents. Indicators with nothing separated are omitted.
pub fn implied_independencies(m: &MDag) -> Vec<Independence> {
    let substantive = m.substantive();
    let mut out = Vec::new();
    for ind in m.indicator_of.values() {
        let given = m.dag.parents(ind).expect("indicator exists");
        let independent: NodeSet = substantive
            .iter()
            .filter(|v| !given.contains(*v))
            .filter(|v| {
                m.dag
                    .d_separated([ind.as_str()], [v.as_str()], &given)
                    .expect("disjoint by construction")
            })
            .cloned()
            .collect();
        if !independent.is_empty() {
            out.push(Independence {
                indicator: ind.clone(),
                independent,
                given,
            });
        }
    }
    out.sort_by(|a, b| a.indicator.cmp(&b.indicator));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompleteCaseVerdict {
    pub valid: bool,
    /// Observation probabilities must also be positive in every covariate
    /// stratum; the graph cannot show this.
    pub requires_positivity: bool,
}

/// Whether a regression of `outcome` on `exposure` and `covariates` fitted to
/// complete cases targets the full-data conditional mean: all indicators
/// d-separated from the outcome given the regressors.
pub fn complete_case_valid<I>(
    m: &MDag,
    exposure: &str,
    outcome: &str,
    covariates: I,
) -> Result<CompleteCaseVerdict, MissingError>
where
    I: IntoIterator,
    I::Item: AsRef<str>,
{
    let mut given = NodeSet::new();
    for v in std::iter::once(exposure.to_string())
        .chain(covariates.into_iter().map(|c| c.as_ref().to_string()))
    {
        m.dag.require(&v)?;
        if m.is_indicator(&v) {
            return Err(MissingError::NotSubstantive(v));
        }
        if v == outcome {
            return Err(MissingError::OutcomeAsCovariate(v));
        }
        given.insert(v);
    }
    m.dag.require(outcome)?;
    if m.is_indicator(outcome) {
        return Err(MissingError::NotSubstantive(outcome.to_string()));
    }
    let indicators = m.indicators();
    let valid = indicators.is_empty() || m.dag.d_separated(&indicators, [outcome], &given)?;
    Ok(CompleteCaseVerdict {
        valid,
        requires_positivity: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG5: &str = "\
L1 -> A
L2 -> A
A -> Y
L1 -> C_A
L2 -> C_A
L1 -> C_L2
A -> C_L2
L1 -> C_Y
L2 -> C_Y
A -> C_Y
missing: A -> C_A
missing: L2 -> C_L2
missing: Y -> C_Y
exposure: A
outcome: Y
";

    fn set(names: &[&str]) -> NodeSet {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn edge(from: &str, to: &str) -> Witness {
        Witness::Edge {
            from: from.into(),
            to: to.into(),
        }
    }

    #[test]
    fn partitions() {
        let m = MDag::parse(FIG5).unwrap();
        assert_eq!(m.indicators(), set(&["C_A", "C_L2", "C_Y"]));
        assert_eq!(m.substantive(), set(&["A", "L1", "L2", "Y"]));
        assert_eq!(m.fully_observed(), set(&["L1"]));
        assert_eq!(m.partially_observed_covariates(), set(&["L2"]));
    }

    #[test]
    fn built_in_mdag_is_mnar_through_l2() {
        let v = classify_mechanism(&MDag::parse(FIG5).unwrap());
        assert_eq!(v.label, Mechanism::Mnar);
        assert!(v.witnesses.contains(&edge("L2", "C_A")));
        assert!(v.witnesses.contains(&edge("L2", "C_Y")));
    }

    #[test]
    fn removing_l2_edges_gives_mar() {
        let text = FIG5
            .replace("L2 -> C_A\n", "")
            .replace("A -> C_L2\n", "")
            .replace("L2 -> C_Y\n", "");
        let v = classify_mechanism(&MDag::parse(&text).unwrap());
        assert_eq!(v.label, Mechanism::Mar);
        assert!(v.witnesses.contains(&edge("L1", "C_A")));
    }

    #[test]
    fn isolated_indicators_are_mcar() {
        let m = MDag::parse("L -> A\nA -> Y\nC_L\nmissing: L -> C_L").unwrap();
        let v = classify_mechanism(&m);
        assert_eq!(v.label, Mechanism::Mcar);
        assert!(v.witnesses.is_empty());
        let ind = implied_independencies(&m);
        assert_eq!(ind.len(), 1);
        assert_eq!(ind[0].independent, set(&["A", "L", "Y"]));
        assert!(ind[0].given.is_empty());
        assert!(complete_case_valid(&m, "A", "Y", ["L"]).unwrap().valid);
    }

    #[test]
    fn latent_common_cause_of_indicator_and_observed_is_mnar() {
        let m = MDag::parse("L1 -> A\nA -> Y\nU -> C_L2\nU -> L1\nL2 -> Y\nmissing: L2 -> C_L2\nunmeasured: U")
            .unwrap();
        let v = classify_mechanism(&m);
        assert_eq!(v.label, Mechanism::Mnar);
        assert_eq!(
            v.witnesses,
            vec![Witness::Path {
                nodes: vec!["C_L2".into(), "U".into(), "L1".into()]
            }]
        );
        assert_eq!(v.witnesses[0].to_string(), "C_L2 <- U -> L1");
    }

    #[test]
    fn built_in_mdag_independencies() {
        let ind = implied_independencies(&MDag::parse(FIG5).unwrap());
        let find = |c: &str| ind.iter().find(|i| i.indicator == c).unwrap();
        assert_eq!(find("C_L2").independent, set(&["L2", "Y"]));
        assert_eq!(find("C_L2").given, set(&["A", "L1"]));
        assert_eq!(find("C_A").independent, set(&["A", "Y"]));
        assert_eq!(find("C_A").given, set(&["L1", "L2"]));
        assert_eq!(find("C_Y").independent, set(&["Y"]));
        assert_eq!(find("C_Y").given, set(&["A", "L1", "L2"]));
        assert_eq!(find("C_Y").to_string(), "C_Y _||_ {Y} | {A, L1, L2}");
    }

    #[test]
    fn complete_cases_valid_until_outcome_drives_missingness() {
        let m = MDag::parse(FIG5).unwrap();
        let v = complete_case_valid(&m, "A", "Y", ["L1", "L2"]).unwrap();
        assert!(v.valid);
        assert!(v.requires_positivity);
        let m = MDag::parse(&format!("{FIG5}Y -> C_Y\n")).unwrap();
        assert!(!complete_case_valid(&m, "A", "Y", ["L1", "L2"]).unwrap().valid);
    }

    #[test]
    fn complete_case_errors() {
        let m = MDag::parse(FIG5).unwrap();
        assert_eq!(
            complete_case_valid(&m, "A", "Y", ["Y"]),
            Err(MissingError::OutcomeAsCovariate("Y".into()))
        );
        assert!(complete_case_valid(&m, "A", "Y", ["C_A"]).is_err());
    }

    #[test]
    fn indicator_may_not_cause_substantive_node() {
        let err = MDag::parse("L -> A\nC_L -> Y\nmissing: L -> C_L").unwrap_err();
        assert!(matches!(err, MissingError::IndicatorCause { .. }));
        assert!(MDag::parse("missing: L -> C\nmissing: L -> D").is_err());
        assert!(MDag::parse("missing: L -> C\nmissing: M -> C").is_err());
    }

    #[test]
    fn text_round_trip() {
        let m = MDag::parse(FIG5).unwrap();
        assert_eq!(MDag::parse(&m.to_text()).unwrap(), m);
        let v = serde_json::to_string(&classify_mechanism(&m)).unwrap();
        assert!(v.contains("\"G-MNAR\""));
    }
}
