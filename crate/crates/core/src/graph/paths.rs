use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Dag, GraphError, NodeSet};

/// Direction of the edge between two consecutive path nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// `nodes[i] -> nodes[i + 1]`
    Forward,
    /// `nodes[i] <- nodes[i + 1]`
    Backward,
}

/// A simple path, traversed irrespective of edge direction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path {
    nodes: Vec<String>,
    orientations: Vec<Orientation>,
}

impl Path {
    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn orientations(&self) -> &[Orientation] {
        &self.orientations
    }

    /// Number of edges.
    pub fn len(&self) -> usize {
        self.orientations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orientations.is_empty()
    }

    /// True when the first edge points into the first node.
    pub fn starts_with_arrow_in(&self) -> bool {
        self.orientations.first() == Some(&Orientation::Backward)
    }

    /// True when every edge points away from the start.
    pub fn is_directed(&self) -> bool {
        self.orientations.iter().all(|o| *o == Orientation::Forward)
    }

    /// Interior nodes with both path edges pointing into them.
    pub fn colliders(&self) -> Vec<&str> {
        (1..self.nodes.len().saturating_sub(1))
            .filter(|&i| self.is_collider_at(i))
            .map(|i| self.nodes[i].as_str())
            .collect()
    }

    pub fn interior(&self) -> &[String] {
        match self.nodes.len() {
            0..=2 => &[],
            n => &self.nodes[1..n - 1],
        }
    }

    fn is_collider_at(&self, i: usize) -> bool {
        self.orientations[i - 1] == Orientation::Forward
            && self.orientations[i] == Orientation::Backward
    }

    /// Whether `z` blocks this path in `dag`: some chain or fork node lies in
    /// `z`, or some collider has neither itself nor a descendant in `z`.
    pub fn is_blocked_by(&self, dag: &Dag, z: &NodeSet) -> Result<bool, GraphError> {
        for i in 1..self.nodes.len().saturating_sub(1) {
            let v = &self.nodes[i];
            if self.is_collider_at(i) {
                let opened = z.contains(v) || dag.descendants(v)?.iter().any(|d| z.contains(d));
                if !opened {
                    return Ok(true);
                }
            } else if z.contains(v) {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(first) = self.nodes.first() {
            f.write_str(first)?;
        }
        for (o, n) in self.orientations.iter().zip(&self.nodes[1..]) {
            let arrow = match o {
                Orientation::Forward => " -> ",
                Orientation::Backward => " <- ",
            };
            write!(f, "{arrow}{n}")?;
        }
        Ok(())
    }
}

impl Dag {
    /// Every simple path between `x` and `y` regardless of edge direction,
    /// ordered lexicographically by node-name sequence.
    pub fn all_paths(&self, x: &str, y: &str) -> Result<Vec<Path>, GraphError> {
        let xi = self.require(x)?;
        let yi = self.require(y)?;
        if xi == yi {
            return Err(GraphError::OverlappingSets(x.to_string()));
        }
        let mut found = Vec::new();
        let mut on_path = vec![false; self.node_count()];
        let mut nodes = vec![xi];
        let mut orients = Vec::new();
        on_path[xi] = true;
        self.extend_paths(yi, &mut on_path, &mut nodes, &mut orients, &mut found);
        found.sort_by(|a: &Path, b: &Path| a.nodes.cmp(&b.nodes));
        Ok(found)
    }

    fn extend_paths(
        &self,
        target: usize,
        on_path: &mut [bool],
        nodes: &mut Vec<usize>,
        orients: &mut Vec<Orientation>,
        found: &mut Vec<Path>,
    ) {
        let v = *nodes.last().expect("path is never empty");
        if v == target {
            found.push(Path {
                nodes: nodes.iter().map(|&i| self.name(i).to_string()).collect(),
                orientations: orients.clone(),
            });
            return;
        }
        let steps = self
            .child_ids(v)
            .iter()
            .map(|&c| (c, Orientation::Forward))
            .chain(self.parent_ids(v).iter().map(|&p| (p, Orientation::Backward)));
        for (w, o) in steps.collect::<Vec<_>>() {
            if on_path[w] {
                continue;
            }
            on_path[w] = true;
            nodes.push(w);
            orients.push(o);
            self.extend_paths(target, on_path, nodes, orients, found);
            orients.pop();
            nodes.pop();
            on_path[w] = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fork_has_one_path() {
        let d = Dag::from_edges([("L", "A"), ("L", "Y")]).unwrap();
        let paths = d.all_paths("A", "Y").unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].nodes(), ["A", "L", "Y"]);
        assert_eq!(paths[0].to_string(), "A <- L -> Y");
        assert!(paths[0].starts_with_arrow_in());
    }

    #[test]
    fn confounded_effect_has_backdoor_then_direct_path() {
        let d = Dag::from_edges([("L", "A"), ("A", "Y"), ("L", "Y")]).unwrap();
        let paths: Vec<String> = d
            .all_paths("A", "Y")
            .unwrap()
            .iter()
            .map(ToString::to_string)
            .collect();
        assert_eq!(paths, ["A <- L -> Y", "A -> Y"]);
    }

    #[test]
    fn complete_dag_on_four_nodes_has_five_paths() {
        let d = Dag::from_edges([
            ("V0", "V1"),
            ("V0", "V2"),
            ("V0", "V3"),
            ("V1", "V2"),
            ("V1", "V3"),
            ("V2", "V3"),
        ])
        .unwrap();
        assert_eq!(d.all_paths("V0", "V3").unwrap().len(), 5);
        assert_eq!(d.all_paths("V1", "V2").unwrap().len(), 5);
    }

    #[test]
    fn same_endpoint_and_unknown_node_are_errors() {
        let d = Dag::from_edges([("A", "Y")]).unwrap();
        assert!(d.all_paths("A", "A").is_err());
        assert_eq!(
            d.all_paths("A", "Q"),
            Err(GraphError::UnknownNode("Q".into()))
        );
    }

    #[test]
    fn colliders_on_m_path() {
        let d = Dag::from_edges([("L1", "A"), ("L1", "S"), ("L2", "S"), ("L2", "Y")]).unwrap();
        let paths = d.all_paths("A", "Y").unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].colliders(), ["S"]);
        let none = NodeSet::new();
        let s: NodeSet = ["S".to_string()].into();
        assert!(paths[0].is_blocked_by(&d, &none).unwrap());
        assert!(!paths[0].is_blocked_by(&d, &s).unwrap());
    }
}
