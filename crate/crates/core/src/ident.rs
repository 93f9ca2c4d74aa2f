//! Back-door criterion, adjustment-set enumeration and variable roles for a
//! designated exposure and outcome.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Dag, GraphError, NodeSet, Path};

/// Candidate-set size above which enumeration refuses to run unless asked.
pub const MAX_ENUMERATION_CANDIDATES: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdentError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("exposure and outcome must differ (both are {0})")]
    SameEndpoints(String),
    #[error("{node} cannot be used here: {reason}")]
    InvalidNode { node: String, reason: &'static str },
    #[error("{count} candidate adjustment variables exceed the limit of {limit}; pass the override to enumerate anyway")]
    TooManyCandidates { count: usize, limit: usize },
}

/// An effect question asked of a graph.
///
/// `measured` are the nodes available for adjustment; `conditioned` are nodes
/// every analysis conditions on by design (selection indicators, complete-case
/// restriction).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalQuery {
    dag: Dag,
    exposure: String,
    outcome: String,
    measured: NodeSet,
    conditioned: NodeSet,
}

impl CausalQuery {
    /// A query in which every node other than the endpoints is measured.
    pub fn new(dag: Dag, exposure: &str, outcome: &str) -> Result<Self, IdentError> {
        dag.require(exposure)?;
        dag.require(outcome)?;
        if exposure == outcome {
            return Err(IdentError::SameEndpoints(exposure.to_string()));
        }
        let measured = dag
            .node_set()
            .into_iter()
            .filter(|n| n != exposure && n != outcome)
            .collect();
        Ok(Self {
            dag,
            exposure: exposure.to_string(),
            outcome: outcome.to_string(),
            measured,
            conditioned: NodeSet::new(),
        })
    }

    /// Uses the exposure and outcome designated in the graph itself.
    pub fn from_designations(dag: Dag) -> Result<Self, IdentError> {
        let exposure = dag.exposure().map(str::to_string).ok_or(IdentError::InvalidNode {
            node: "<exposure>".into(),
            reason: "graph has no exposure designation",
        })?;
        let outcome = dag.outcome().map(str::to_string).ok_or(IdentError::InvalidNode {
            node: "<outcome>".into(),
            reason: "graph has no outcome designation",
        })?;
        Self::new(dag, &exposure, &outcome)
    }

    /// Marks nodes as unavailable for adjustment.
    pub fn with_unmeasured<I>(mut self, nodes: I) -> Result<Self, IdentError>
    where
        I: IntoIterator,
        I::Item: AsRef<str>,
    {
        for n in nodes {
            let n = n.as_ref();
            self.dag.require(n)?;
            self.measured.remove(n);
        }
        Ok(self)
    }

    /// Adds nodes that are conditioned on by design.
    pub fn with_conditioned<I>(mut self, nodes: I) -> Result<Self, IdentError>
    where
        I: IntoIterator,
        I::Item: AsRef<str>,
    {
        for n in nodes {
            let n = n.as_ref();
            self.dag.require(n)?;
            if n == self.exposure || n == self.outcome {
                return Err(IdentError::InvalidNode {
                    node: n.to_string(),
                    reason: "exposure and outcome cannot be conditioned on",
                });
            }
            self.conditioned.insert(n.to_string());
        }
        Ok(self)
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn exposure(&self) -> &str {
        &self.exposure
    }

    pub fn outcome(&self) -> &str {
        &self.outcome
    }

    pub fn measured(&self) -> &NodeSet {
        &self.measured
    }

    pub fn conditioned(&self) -> &NodeSet {
        &self.conditioned
    }

    /// Nodes neither measured, conditioned, nor an endpoint.
    pub fn unmeasured(&self) -> NodeSet {
        self.dag
            .node_set()
            .into_iter()
            .filter(|n| {
                n != &self.exposure
                    && n != &self.outcome
                    && !self.measured.contains(n)
                    && !self.conditioned.contains(n)
            })
            .collect()
    }

    /// Measured variables that may enter an adjustment set: not an
    /// endpoint, not already conditioned, not a descendant of the exposure.
    pub fn candidates(&self) -> Result<NodeSet, IdentError> {
        let desc = self.dag.descendants(&self.exposure)?;
        Ok(self
            .measured
            .iter()
            .filter(|n| {
                *n != &self.exposure
                    && *n != &self.outcome
                    && !self.conditioned.contains(*n)
                    && !desc.contains(*n)
            })
            .cloned()
            .collect())
    }
}

/// Exposure-outcome paths whose first edge points into the exposure.
pub fn backdoor_paths(q: &CausalQuery) -> Result<Vec<Path>, IdentError> {
    Ok(q.dag
        .all_paths(&q.exposure, &q.outcome)?
        .into_iter()
        .filter(Path::starts_with_arrow_in)
        .collect())
}

/// Back-door criterion for `s`, evaluated with `s ∪ conditioned`:
/// every back-door path is blocked and no conditioning variable descends
/// from the exposure.
pub fn satisfies_backdoor(q: &CausalQuery, s: &NodeSet) -> Result<bool, IdentError> {
    let paths = backdoor_paths(q)?;
    let checker = BackdoorChecker::new(q, &paths)?;
    checker.check(s)
}

/// Back-door evaluation with the path list and descendant sets computed once.
struct BackdoorChecker<'a> {
    q: &'a CausalQuery,
    paths: &'a [Path],
    exposure_desc: NodeSet,
    desc: BTreeMap<String, NodeSet>,
}

impl<'a> BackdoorChecker<'a> {
    fn new(q: &'a CausalQuery, paths: &'a [Path]) -> Result<Self, IdentError> {
        let exposure_desc = q.dag.descendants(&q.exposure)?;
        let mut desc = BTreeMap::new();
        for p in paths {
            for c in p.colliders() {
                if !desc.contains_key(c) {
                    desc.insert(c.to_string(), q.dag.descendants(c)?);
                }
            }
        }
        Ok(Self {
            q,
            paths,
            exposure_desc,
            desc,
        })
    }

    fn check(&self, s: &NodeSet) -> Result<bool, IdentError> {
        for n in s {
            self.q.dag.require(n)?;
            if n == &self.q.exposure || n == &self.q.outcome {
                return Err(IdentError::InvalidNode {
                    node: n.clone(),
                    reason: "an adjustment set cannot contain the exposure or outcome",
                });
            }
            if !self.q.measured.contains(n) && !self.q.conditioned.contains(n) {
                return Err(IdentError::InvalidNode {
                    node: n.clone(),
                    reason: "node is not measured",
                });
            }
        }
        let z: NodeSet = s.union(&self.q.conditioned).cloned().collect();
        if z.iter().any(|n| self.exposure_desc.contains(n)) {
            return Ok(false);
        }
        Ok(self.paths.iter().all(|p| self.blocked(p, &z)))
    }

    fn blocked(&self, p: &Path, z: &NodeSet) -> bool {
        let colliders = p.colliders();
        p.interior().iter().any(|v| {
            if colliders.contains(&v.as_str()) {
                !(z.contains(v) || self.desc[v].iter().any(|d| z.contains(d)))
            } else {
                z.contains(v)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EnumerateOptions {
    /// Keep only inclusion-minimal sets.
    pub minimal_only: bool,
    /// Enumerate even when the candidate pool exceeds
    /// [`MAX_ENUMERATION_CANDIDATES`].
    pub allow_large: bool,
}

/// Every subset of the candidate pool satisfying the back-door criterion,
/// ordered by size and then lexicographically. An empty result means no
/// measured set identifies the effect.
pub fn enumerate_adjustment_sets(
    q: &CausalQuery,
    opts: EnumerateOptions,
) -> Result<Vec<NodeSet>, IdentError> {
    let pool: Vec<String> = q.candidates()?.into_iter().collect();
    if pool.len() > MAX_ENUMERATION_CANDIDATES && !opts.allow_large {
        return Err(IdentError::TooManyCandidates {
            count: pool.len(),
            limit: MAX_ENUMERATION_CANDIDATES,
        });
    }
    let paths = backdoor_paths(q)?;
    let checker = BackdoorChecker::new(q, &paths)?;

    let mut valid: Vec<NodeSet> = Vec::new();
    let total: u64 = 1u64 << pool.len();
    for mask in 0..total {
        let s: NodeSet = pool
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, n)| n.clone())
            .collect();
        if checker.check(&s)? {
            valid.push(s);
        }
    }
    valid.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    if opts.minimal_only {
        let mut minimal: Vec<NodeSet> = Vec::new();
        for s in valid {
            if !minimal.iter().any(|m| m.is_subset(&s)) {
                minimal.push(s);
            }
        }
        valid = minimal;
    }
    Ok(valid)
}

/// Path-level facts about one node relative to the exposure and outcome.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRoles {
    pub on_backdoor_path: bool,
    pub collider_on_ay_path: bool,
    pub mediator: bool,
    pub descendant_of_mediator: bool,
    pub descendant_of_exposure: bool,
    pub in_some_valid_adjustment_set: bool,
}

/// Roles for every node other than the exposure and outcome.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RoleReport {
    pub roles: BTreeMap<String, NodeRoles>,
}

impl RoleReport {
    pub fn get(&self, node: &str) -> Option<&NodeRoles> {
        self.roles.get(node)
    }
}

pub fn classify_roles(q: &CausalQuery) -> Result<RoleReport, IdentError> {
    classify_roles_with(q, EnumerateOptions::default())
}

pub fn classify_roles_with(
    q: &CausalQuery,
    opts: EnumerateOptions,
) -> Result<RoleReport, IdentError> {
    let dag = &q.dag;
    let all_paths = dag.all_paths(&q.exposure, &q.outcome)?;
    let exposure_desc = dag.descendants(&q.exposure)?;
    let sets = enumerate_adjustment_sets(
        q,
        EnumerateOptions {
            minimal_only: false,
            ..opts
        },
    )?;

    let mediators: NodeSet = exposure_desc
        .iter()
        .filter(|v| *v != &q.outcome)
        .filter(|v| dag.descendants(v).map(|d| d.contains(&q.outcome)).unwrap_or(false))
        .cloned()
        .collect();
    let mut below_mediator = NodeSet::new();
    for m in &mediators {
        below_mediator.extend(dag.descendants(m)?);
    }

    let mut report = RoleReport::default();
    for v in dag.node_set() {
        if v == q.exposure || v == q.outcome {
            continue;
        }
        let roles = NodeRoles {
            on_backdoor_path: all_paths
                .iter()
                .any(|p| p.starts_with_arrow_in() && p.interior().contains(&v)),
            collider_on_ay_path: all_paths.iter().any(|p| p.colliders().contains(&v.as_str())),
            mediator: mediators.contains(&v),
            descendant_of_mediator: below_mediator.contains(&v),
            descendant_of_exposure: exposure_desc.contains(&v),
            in_some_valid_adjustment_set: sets.iter().any(|s| s.contains(&v)),
        };
        report.roles.insert(v, roles);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_dag;

    fn set(names: &[&str]) -> NodeSet {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn query(text: &str) -> CausalQuery {
        CausalQuery::new(parse_dag(text).unwrap(), "A", "Y").unwrap()
    }

    const FIG1C: &str = "L1 -> A\nL1 -> L2\nU -> L2\nU -> Y\nL2 -> A\nL2 -> Y\nA -> Y";

    #[test]
    fn single_backdoor_path_for_measured_confounder() {
        let q = query("L -> A\nA -> Y\nL -> Y");
        let paths: Vec<String> = backdoor_paths(&q).unwrap().iter().map(|p| p.to_string()).collect();
        assert_eq!(paths, ["A <- L -> Y"]);
        assert!(satisfies_backdoor(&q, &set(&["L"])).unwrap());
        assert!(!satisfies_backdoor(&q, &set(&[])).unwrap());
    }

    #[test]
    fn randomized_exposure_has_no_backdoor_paths() {
        let q = query("A -> Y\nL -> Y");
        assert!(backdoor_paths(&q).unwrap().is_empty());
        assert!(satisfies_backdoor(&q, &set(&[])).unwrap());
    }

    #[test]
    fn four_backdoor_paths_through_l2() {
        let q = query(FIG1C).with_unmeasured(["U"]).unwrap();
        let paths: Vec<String> = backdoor_paths(&q).unwrap().iter().map(|p| p.to_string()).collect();
        assert_eq!(
            paths,
            [
                "A <- L1 -> L2 <- U -> Y",
                "A <- L1 -> L2 -> Y",
                "A <- L2 <- U -> Y",
                "A <- L2 -> Y",
            ]
        );
        assert!(!satisfies_backdoor(&q, &set(&["L2"])).unwrap());
        assert!(!satisfies_backdoor(&q, &set(&["L1"])).unwrap());
        assert!(satisfies_backdoor(&q, &set(&["L1", "L2"])).unwrap());
        assert_eq!(
            enumerate_adjustment_sets(&q, EnumerateOptions::default()).unwrap(),
            vec![set(&["L1", "L2"])]
        );
    }

    #[test]
    fn unmeasured_confounder_leaves_nothing() {
        let q = query("U -> A\nU -> Y\nA -> Y").with_unmeasured(["U"]).unwrap();
        assert!(enumerate_adjustment_sets(&q, EnumerateOptions::default())
            .unwrap()
            .is_empty());
        assert!(matches!(
            satisfies_backdoor(&q, &set(&["U"])),
            Err(IdentError::InvalidNode { .. })
        ));
    }

    #[test]
    fn post_treatment_non_descendant_is_usable() {
        let q = query("U -> A\nU -> L\nL -> Y\nA -> Y").with_unmeasured(["U"]).unwrap();
        assert_eq!(
            enumerate_adjustment_sets(&q, EnumerateOptions::default()).unwrap(),
            vec![set(&["L"])]
        );
    }

    #[test]
    fn selection_before_treatment() {
        let q = query("A -> Y\nL2 -> Y\nL2 -> A\nL1 -> A\nL1 -> S")
            .with_conditioned(["S"])
            .unwrap();
        let minimal = enumerate_adjustment_sets(
            &q,
            EnumerateOptions {
                minimal_only: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(minimal, vec![set(&["L2"])]);
    }

    #[test]
    fn m_bias_under_selection() {
        let q = query("A -> Y\nL2 -> Y\nL1 -> L2\nL1 -> A\nL1 -> S\nL2 -> S")
            .with_conditioned(["S"])
            .unwrap();
        assert!(!satisfies_backdoor(&q, &set(&[])).unwrap());
        assert!(satisfies_backdoor(&q, &set(&["L1"])).unwrap());
        assert!(satisfies_backdoor(&q, &set(&["L2"])).unwrap());
        let all = enumerate_adjustment_sets(&q, EnumerateOptions::default()).unwrap();
        assert_eq!(all, vec![set(&["L1"]), set(&["L2"]), set(&["L1", "L2"])]);
    }

    #[test]
    fn conditioning_on_exposure_descendant_by_design_fails() {
        let q = query("A -> C\nL -> C\nU -> L\nU -> Y")
            .with_unmeasured(["U"])
            .unwrap()
            .with_conditioned(["C"])
            .unwrap();
        assert!(!satisfies_backdoor(&q, &set(&[])).unwrap());
        assert!(enumerate_adjustment_sets(&q, EnumerateOptions::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn endpoints_rejected_in_sets() {
        let q = query("L -> A\nA -> Y\nL -> Y");
        assert!(satisfies_backdoor(&q, &set(&["A"])).is_err());
        assert!(satisfies_backdoor(&q, &set(&["Y"])).is_err());
        assert!(q.clone().with_conditioned(["A"]).is_err());
        assert!(CausalQuery::new(q.dag().clone(), "A", "A").is_err());
    }

    #[test]
    fn roles_for_mediator_and_its_descendant() {
        let q = query("A -> M\nM -> L\nM -> Y\nA -> Y");
        let r = classify_roles(&q).unwrap();
        assert!(r.get("M").unwrap().mediator);
        assert!(r.get("M").unwrap().descendant_of_exposure);
        let l = r.get("L").unwrap();
        assert!(l.descendant_of_mediator);
        assert!(!l.mediator);
        assert!(!l.in_some_valid_adjustment_set);
    }

    #[test]
    fn collider_role_on_backdoor_path() {
        let q = query("L1 -> A\nA -> L2\nL1 -> L2\nU -> L2\nU -> Y\nL2 -> Y\nA -> Y")
            .with_unmeasured(["U"])
            .unwrap();
        let r = classify_roles(&q).unwrap();
        let l2 = r.get("L2").unwrap();
        assert!(l2.collider_on_ay_path);
        assert!(l2.mediator);
        assert!(r.get("L1").unwrap().on_backdoor_path);
        assert!(r.get("L1").unwrap().in_some_valid_adjustment_set);
    }

    #[test]
    fn large_pools_need_override() {
        let mut text = String::from("A -> Y\n");
        for i in 0..21 {
            text.push_str(&format!("X{i} -> Y\n"));
        }
        let q = query(&text);
        assert!(matches!(
            enumerate_adjustment_sets(&q, EnumerateOptions::default()),
            Err(IdentError::TooManyCandidates { count: 21, .. })
        ));
    }
}
