//! Directed acyclic graphs: construction, validation, reachability, path
//! enumeration and d-separation.
//!
//! Node names are case-sensitive identifiers over `[A-Za-z0-9_]`. Every query
//! that returns a set of nodes returns it sorted, so reports are stable.

mod dsep;
pub(crate) mod parse;
mod paths;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parse::parse_dag;
pub use paths::{Orientation, Path};

/// Sorted set of node names.
pub type NodeSet = BTreeSet<String>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("cycle detected: {}", .cycle.join(" -> "))]
    Cycle { cycle: Vec<String> },
    #[error("{}duplicate edge {from} -> {to}", line_prefix(*.line))]
    DuplicateEdge {
        from: String,
        to: String,
        line: Option<usize>,
    },
    #[error("{}self-loop on {node}", line_prefix(*.line))]
    SelfLoop { node: String, line: Option<usize> },
    #[error("{}invalid node name {name:?}", line_prefix(*.line))]
    InvalidName { name: String, line: Option<usize> },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("node sets overlap on {0}")]
    OverlappingSets(String),
}

fn line_prefix(line: Option<usize>) -> String {
    line.map(|l| format!("line {l}: ")).unwrap_or_default()
}

pub fn valid_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A directed acyclic graph over named nodes.
///
/// Nodes keep their insertion order (first mention when parsed). Optional
/// exposure and outcome designations travel with the graph so a file can be
/// analysed without extra flags.
#[derive(Debug, Clone, Default)]
pub struct Dag {
    names: Vec<String>,
    index: HashMap<String, usize>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    exposure: Option<String>,
    outcome: Option<String>,
}

impl PartialEq for Dag {
    /// Graph equality: same node set, same edge set, same designations.
    /// Insertion order is not part of a graph's identity.
    fn eq(&self, other: &Self) -> bool {
        self.node_set() == other.node_set()
            && self.edges() == other.edges()
            && self.exposure == other.exposure
            && self.outcome == other.outcome
    }
}

impl Eq for Dag {}

impl Dag {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a graph from an edge list. Nodes appear in first-mention order.
    pub fn from_edges<'a, I>(edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut dag = Dag::new();
        for (from, to) in edges {
            dag.add_edge(from, to)?;
        }
        Ok(dag)
    }

    /// Adds a node if it is not present and returns its index.
    pub fn add_node(&mut self, name: &str) -> Result<usize, GraphError> {
        if let Some(&i) = self.index.get(name) {
            return Ok(i);
        }
        if !valid_name(name) {
            return Err(GraphError::InvalidName {
                name: name.to_string(),
                line: None,
            });
        }
        let i = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), i);
        self.parents.push(Vec::new());
        self.children.push(Vec::new());
        Ok(i)
    }

    /// Adds `from -> to`, creating missing nodes. Rejects self-loops,
    /// duplicates and any edge that would close a cycle.
    pub fn add_edge(&mut self, from: &str, to: &str) -> Result<(), GraphError> {
        if from == to {
            if !valid_name(from) {
                return Err(GraphError::InvalidName {
                    name: from.to_string(),
                    line: None,
                });
            }
            return Err(GraphError::SelfLoop {
                node: from.to_string(),
                line: None,
            });
        }
        let f = self.add_node(from)?;
        let t = self.add_node(to)?;
        if self.children[f].contains(&t) {
            return Err(GraphError::DuplicateEdge {
                from: from.to_string(),
                to: to.to_string(),
                line: None,
            });
        }
        if let Some(route) = self.directed_route(t, f) {
            let mut cycle: Vec<String> = route.iter().map(|&i| self.names[i].clone()).collect();
            cycle.push(self.names[t].clone());
            return Err(GraphError::Cycle { cycle });
        }
        insert_sorted(&mut self.children[f], t);
        insert_sorted(&mut self.parents[t], f);
        Ok(())
    }

    /// Removes `from -> to`; returns whether the edge existed.
    pub fn remove_edge(&mut self, from: &str, to: &str) -> bool {
        let (Some(&f), Some(&t)) = (self.index.get(from), self.index.get(to)) else {
            return false;
        };
        let Some(pos) = self.children[f].iter().position(|&c| c == t) else {
            return false;
        };
        self.children[f].remove(pos);
        self.parents[t].retain(|&p| p != f);
        true
    }

    pub fn set_exposure(&mut self, node: &str) -> Result<(), GraphError> {
        self.require(node)?;
        self.exposure = Some(node.to_string());
        Ok(())
    }

    pub fn set_outcome(&mut self, node: &str) -> Result<(), GraphError> {
        self.require(node)?;
        self.outcome = Some(node.to_string());
        Ok(())
    }

    pub fn exposure(&self) -> Option<&str> {
        self.exposure.as_deref()
    }

    pub fn outcome(&self) -> Option<&str> {
        self.outcome.as_deref()
    }

    pub fn nodes(&self) -> &[String] {
        &self.names
    }

    pub fn node_set(&self) -> NodeSet {
        self.names.iter().cloned().collect()
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.children.iter().map(Vec::len).sum()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn has_edge(&self, from: &str, to: &str) -> bool {
        match (self.index.get(from), self.index.get(to)) {
            (Some(&f), Some(&t)) => self.children[f].contains(&t),
            _ => false,
        }
    }

    /// All edges, sorted by (parent, child) name.
    pub fn edges(&self) -> BTreeSet<(String, String)> {
        self.children
            .iter()
            .enumerate()
            .flat_map(|(f, cs)| {
                cs.iter()
                    .map(move |&t| (self.names[f].clone(), self.names[t].clone()))
            })
            .collect()
    }

    pub fn parents(&self, v: &str) -> Result<NodeSet, GraphError> {
        let i = self.require(v)?;
        Ok(self.names_of(&self.parents[i]))
    }

    pub fn children(&self, v: &str) -> Result<NodeSet, GraphError> {
        let i = self.require(v)?;
        Ok(self.names_of(&self.children[i]))
    }

    /// Transitive closure over parents, excluding `v`.
    pub fn ancestors(&self, v: &str) -> Result<NodeSet, GraphError> {
        let i = self.require(v)?;
        let mask = self.closure(&[i], &self.parents);
        Ok(self.names_where(&mask, Some(i)))
    }

    /// Transitive closure over children, excluding `v`.
    pub fn descendants(&self, v: &str) -> Result<NodeSet, GraphError> {
        let i = self.require(v)?;
        let mask = self.closure(&[i], &self.children);
        Ok(self.names_where(&mask, Some(i)))
    }

    /// Nodes in a topological order; ties broken by insertion order.
    pub fn topological_order(&self) -> Vec<String> {
        let n = self.names.len();
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = ready.pop_first() {
            order.push(self.names[i].clone());
            for &c in &self.children[i] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        order
    }

    /// Copy of the graph with every edge out of `v` deleted.
    pub fn without_outgoing(&self, v: &str) -> Result<Dag, GraphError> {
        let i = self.require(v)?;
        let mut out = self.clone();
        for c in std::mem::take(&mut out.children[i]) {
            out.parents[c].retain(|&p| p != i);
        }
        Ok(out)
    }

    pub(crate) fn require(&self, v: &str) -> Result<usize, GraphError> {
        self.index
            .get(v)
            .copied()
            .ok_or_else(|| GraphError::UnknownNode(v.to_string()))
    }

    pub(crate) fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub(crate) fn parent_ids(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub(crate) fn child_ids(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    /// Marks every node reachable from `start` along `adjacency`, including
    /// the start nodes themselves.
    pub(crate) fn closure(&self, start: &[usize], adjacency: &[Vec<usize>]) -> Vec<bool> {
        let mut seen = vec![false; self.names.len()];
        let mut stack: Vec<usize> = start.to_vec();
        while let Some(v) = stack.pop() {
            if std::mem::replace(&mut seen[v], true) {
                continue;
            }
            stack.extend(adjacency[v].iter().copied().filter(|&w| !seen[w]));
        }
        seen
    }

    pub(crate) fn ancestor_mask(&self, start: &[usize]) -> Vec<bool> {
        self.closure(start, &self.parents)
    }

    fn names_of(&self, ids: &[usize]) -> NodeSet {
        ids.iter().map(|&i| self.names[i].clone()).collect()
    }

    fn names_where(&self, mask: &[bool], skip: Option<usize>) -> NodeSet {
        mask.iter()
            .enumerate()
            .filter(|&(i, &m)| m && Some(i) != skip)
            .map(|(i, _)| self.names[i].clone())
            .collect()
    }

    /// A directed route `from -> ... -> to`, if one exists.
    fn directed_route(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        let mut prev = vec![usize::MAX; self.names.len()];
        let mut stack = vec![from];
        prev[from] = from;
        while let Some(v) = stack.pop() {
            if v == to {
                let mut route = vec![to];
                let mut cur = to;
                while cur != from {
                    cur = prev[cur];
                    route.push(cur);
                }
                route.reverse();
                return Some(route);
            }
            for &c in &self.children[v] {
                if prev[c] == usize::MAX {
                    prev[c] = v;
                    stack.push(c);
                }
            }
        }
        None
    }

    /// Resolves a list of names into indices, rejecting unknown nodes.
    pub(crate) fn resolve<I>(&self, names: I) -> Result<Vec<usize>, GraphError>
    where
        I: IntoIterator,
        I::Item: AsRef<str>,
    {
        let mut ids: Vec<usize> = names
            .into_iter()
            .map(|n| self.require(n.as_ref()))
            .collect::<Result<_, _>>()?;
        ids.sort_unstable();
        ids.dedup();
        Ok(ids)
    }
}

fn insert_sorted(v: &mut Vec<usize>, x: usize) {
    let pos = v.partition_point(|&y| y < x);
    v.insert(pos, x);
}

impl fmt::Display for Dag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Plain edge list used in JSON reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeRef {
    pub from: String,
    pub to: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> Dag {
        Dag::from_edges([("A", "M"), ("M", "Y")]).unwrap()
    }

    #[test]
    fn descendants_and_ancestors_of_chain() {
        let d = chain();
        let desc: Vec<_> = d.descendants("A").unwrap().into_iter().collect();
        assert_eq!(desc, ["M", "Y"]);
        assert!(d.ancestors("A").unwrap().is_empty());
        assert_eq!(d.ancestors("Y").unwrap().len(), 2);
    }

    #[test]
    fn descendants_of_mediator_with_child() {
        let d = Dag::from_edges([("A", "M"), ("M", "L"), ("M", "Y"), ("A", "Y")]).unwrap();
        let desc: Vec<_> = d.descendants("M").unwrap().into_iter().collect();
        assert_eq!(desc, ["L", "Y"]);
    }

    #[test]
    fn unknown_node_is_an_error() {
        assert_eq!(
            chain().descendants("Q"),
            Err(GraphError::UnknownNode("Q".into()))
        );
    }

    #[test]
    fn rejects_cycles_and_names_them() {
        let mut d = chain();
        let err = d.add_edge("Y", "A").unwrap_err();
        assert_eq!(
            err,
            GraphError::Cycle {
                cycle: vec!["A".into(), "M".into(), "Y".into(), "A".into()]
            }
        );
        assert_eq!(d.edge_count(), 2);
    }

    #[test]
    fn rejects_self_loops_and_duplicates() {
        let mut d = chain();
        assert!(matches!(d.add_edge("A", "A"), Err(GraphError::SelfLoop { .. })));
        assert!(matches!(
            d.add_edge("A", "M"),
            Err(GraphError::DuplicateEdge { .. })
        ));
    }

    #[test]
    fn topological_order_respects_edges() {
        let d = Dag::from_edges([("L1", "A"), ("L1", "L2"), ("U", "L2"), ("L2", "A"), ("A", "Y")])
            .unwrap();
        let order = d.topological_order();
        let pos = |n: &str| order.iter().position(|x| x == n).unwrap();
        for (f, t) in d.edges() {
            assert!(pos(&f) < pos(&t));
        }
    }

    #[test]
    fn equality_ignores_insertion_order() {
        let a = Dag::from_edges([("A", "Y"), ("L", "A")]).unwrap();
        let b = Dag::from_edges([("L", "A"), ("A", "Y")]).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.nodes(), b.nodes());
    }

    #[test]
    fn without_outgoing_drops_only_those_edges() {
        let d = Dag::from_edges([("L", "A"), ("A", "Y"), ("L", "Y")]).unwrap();
        let m = d.without_outgoing("A").unwrap();
        assert!(!m.has_edge("A", "Y"));
        assert!(m.has_edge("L", "A"));
        assert_eq!(m.edge_count(), 2);
    }
}
