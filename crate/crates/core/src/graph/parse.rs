use super::{valid_name, Dag, GraphError};

/// Parses the line-oriented DAG text format.
///
/// ```text
/// # comment
/// L -> A
/// L -> Y
/// A -> Y
/// Z            # isolated node
/// exposure: A
/// outcome: Y
/// ```
pub fn parse_dag(text: &str) -> Result<Dag, GraphError> {
    parse_with(text, |line, key, _, _| {
        Err(GraphError::Syntax {
            line,
            message: format!("unknown directive `{key}:`"),
        })
    })
}

/// Shared parser. `directive` receives `(line, key, value, dag)` for every
/// `key: value` line other than `exposure`/`outcome`.
pub(crate) fn parse_with<F>(text: &str, mut directive: F) -> Result<Dag, GraphError>
where
    F: FnMut(usize, &str, &str, &mut Dag) -> Result<(), GraphError>,
{
    let mut dag = Dag::new();
    let mut exposure: Option<(usize, String)> = None;
    let mut outcome: Option<(usize, String)> = None;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some((key, value)) = body.split_once(':') {
            let key = key.trim();
            let value = value.trim();
            match key {
                "exposure" | "outcome" => {
                    let name = node_name(value, line)?;
                    dag.add_node(name).map_err(|e| at_line(e, line))?;
                    let slot = if key == "exposure" {
                        &mut exposure
                    } else {
                        &mut outcome
                    };
                    if slot.is_some() {
                        return Err(GraphError::Syntax {
                            line,
                            message: format!("`{key}` given more than once"),
                        });
                    }
                    *slot = Some((line, name.to_string()));
                }
                _ => directive(line, key, value, &mut dag)?,
            }
            continue;
        }
        if let Some((from, to)) = body.split_once("->") {
            let from = node_name(from.trim(), line)?;
            let to = node_name(to.trim(), line)?;
            dag.add_edge(from, to).map_err(|e| at_line(e, line))?;
        } else {
            let name = node_name(body, line)?;
            dag.add_node(name).map_err(|e| at_line(e, line))?;
        }
    }

    if let Some((_, e)) = &exposure {
        dag.set_exposure(e)?;
    }
    if let Some((line, o)) = &outcome {
        if exposure.as_ref().is_some_and(|(_, e)| e == o) {
            return Err(GraphError::Syntax {
                line: *line,
                message: "exposure and outcome must differ".into(),
            });
        }
        dag.set_outcome(o)?;
    }
    Ok(dag)
}

pub(crate) fn node_name(s: &str, line: usize) -> Result<&str, GraphError> {
    if s.is_empty() {
        return Err(GraphError::Syntax {
            line,
            message: "expected a node name".into(),
        });
    }
    if s.contains("->") || s.contains(char::is_whitespace) {
        return Err(GraphError::Syntax {
            line,
            message: format!("expected `X -> Y` or a single node, found `{s}`"),
        });
    }
    if !valid_name(s) {
        return Err(GraphError::InvalidName {
            name: s.to_string(),
            line: Some(line),
        });
    }
    Ok(s)
}

fn at_line(err: GraphError, line: usize) -> GraphError {
    match err {
        GraphError::DuplicateEdge { from, to, .. } => GraphError::DuplicateEdge {
            from,
            to,
            line: Some(line),
        },
        GraphError::SelfLoop { node, .. } => GraphError::SelfLoop {
            node,
            line: Some(line),
        },
        GraphError::InvalidName { name, .. } => GraphError::InvalidName {
            name,
            line: Some(line),
        },
        other => other,
    }
}

impl Dag {
    /// Parses the DAG text format; see [`parse_dag`].
    pub fn parse(text: &str) -> Result<Dag, GraphError> {
        parse_dag(text)
    }

    /// Canonical text form: sorted node lines, sorted edge lines, then the
    /// designations.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for n in self.node_set() {
            out.push_str(&n);
            out.push('\n');
        }
        for (f, t) in self.edges() {
            out.push_str(&format!("{f} -> {t}\n"));
        }
        if let Some(e) = self.exposure() {
            out.push_str(&format!("exposure: {e}\n"));
        }
        if let Some(o) = self.outcome() {
            out.push_str(&format!("outcome: {o}\n"));
        }
        out
    }
}
