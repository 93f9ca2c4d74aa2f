use super::{Dag, GraphError};

impl Dag {
    /// Tests whether `z` d-separates every node of `x` from every node of `y`.
    ///
    /// Linear-time reachability ("Bayes ball"): a trail may pass a
    /// non-collider outside `z`, and a collider that is in `z` or has a
    /// descendant in `z`.
    pub fn d_separated<X, Y, Z>(&self, x: X, y: Y, z: Z) -> Result<bool, GraphError>
    where
        X: IntoIterator,
        X::Item: AsRef<str>,
        Y: IntoIterator,
        Y::Item: AsRef<str>,
        Z: IntoIterator,
        Z::Item: AsRef<str>,
    {
        let x = self.resolve(x)?;
        let y = self.resolve(y)?;
        let z = self.resolve(z)?;
        for (a, b) in [(&x, &y), (&x, &z), (&y, &z)] {
            if let Some(&shared) = a.iter().find(|i| b.contains(i)) {
                return Err(GraphError::OverlappingSets(self.name(shared).to_string()));
            }
        }
        let reached = self.reachable(&x, &z);
        Ok(!y.iter().any(|&i| reached[i]))
    }

    /// Nodes connected to `sources` by an active trail given `z`.
    pub(crate) fn reachable(&self, sources: &[usize], z: &[usize]) -> Vec<bool> {
        let n = self.node_count();
        let mut in_z = vec![false; n];
        for &i in z {
            in_z[i] = true;
        }
        // z together with every ancestor of z: colliders here are open.
        let opens_collider = self.ancestor_mask(z);

        // Visit states: (node, arrived_from_child). Arriving from a child
        // means travelling against the edge ("up").
        let mut visited = vec![[false; 2]; n];
        let mut reached = vec![false; n];
        let mut stack: Vec<(usize, bool)> = sources.iter().map(|&s| (s, true)).collect();
        while let Some((v, up)) = stack.pop() {
            if std::mem::replace(&mut visited[v][up as usize], true) {
                continue;
            }
            if !in_z[v] {
                reached[v] = true;
            }
            if up {
                if !in_z[v] {
                    stack.extend(self.parent_ids(v).iter().map(|&p| (p, true)));
                    stack.extend(self.child_ids(v).iter().map(|&c| (c, false)));
                }
            } else {
                if !in_z[v] {
                    stack.extend(self.child_ids(v).iter().map(|&c| (c, false)));
                }
                if opens_collider[v] {
                    stack.extend(self.parent_ids(v).iter().map(|&p| (p, true)));
                }
            }
        }
        reached
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const NONE: [&str; 0] = [];

    #[test]
    fn chain_blocked_by_middle_node() {
        let d = Dag::from_edges([("A", "M"), ("M", "Y")]).unwrap();
        assert!(d.d_separated(["A"], ["Y"], ["M"]).unwrap());
        assert!(!d.d_separated(["A"], ["Y"], NONE).unwrap());
    }

    #[test]
    fn conditioning_on_collider_opens_path() {
        let d = Dag::from_edges([("A", "L"), ("Y", "L")]).unwrap();
        assert!(d.d_separated(["A"], ["Y"], NONE).unwrap());
        assert!(!d.d_separated(["A"], ["Y"], ["L"]).unwrap());
    }

    #[test]
    fn selection_on_collider_opens_long_path() {
        let d = Dag::from_edges([("A", "C"), ("L", "C"), ("U", "L"), ("U", "Y")]).unwrap();
        assert!(d.d_separated(["A"], ["Y"], NONE).unwrap());
        assert!(!d.d_separated(["A"], ["Y"], ["C"]).unwrap());
        assert!(d.d_separated(["A"], ["Y"], ["C", "U"]).unwrap());
    }

    #[test]
    fn descendant_of_collider_opens_path() {
        let d = Dag::from_edges([("A", "L"), ("Y", "L"), ("L", "D")]).unwrap();
        assert!(!d.d_separated(["A"], ["Y"], ["D"]).unwrap());
    }

    #[test]
    fn overlapping_and_unknown_sets_are_errors() {
        let d = Dag::from_edges([("A", "M"), ("M", "Y")]).unwrap();
        assert_eq!(
            d.d_separated(["A"], ["Y"], ["A"]),
            Err(GraphError::OverlappingSets("A".into()))
        );
        assert_eq!(
            d.d_separated(["A"], ["Q"], NONE),
            Err(GraphError::UnknownNode("Q".into()))
        );
    }

    #[test]
    fn symmetric_on_small_example() {
        let d = Dag::from_edges([("L1", "A"), ("L1", "L2"), ("U", "L2"), ("U", "Y"), ("L2", "A")])
            .unwrap();
        for z in [vec![], vec!["L2"], vec!["L1", "L2"], vec!["U"]] {
            assert_eq!(
                d.d_separated(["A"], ["Y"], &z).unwrap(),
                d.d_separated(["Y"], ["A"], &z).unwrap()
            );
        }
    }
}
