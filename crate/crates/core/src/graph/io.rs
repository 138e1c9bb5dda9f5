use std::collections::{BTreeSet, HashMap};
use std::io::{self, Write};

use super::{Graph, GraphError, VertexSet};

/// A graph loaded from text together with the original vertex labels.
///
/// Labels are ordered numerically when every label is an unsigned
/// integer, lexicographically otherwise; vertex `i` carries `labels[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledGraph {
    pub graph: Graph,
    pub labels: Vec<String>,
}

impl LabeledGraph {
    /// Graph whose labels are its own identifiers.
    pub fn unlabeled(graph: Graph) -> Self {
        let labels = (0..graph.n()).map(|v| v.to_string()).collect();
        LabeledGraph { graph, labels }
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

fn order_labels(labels: BTreeSet<&str>) -> Vec<String> {
    let mut ordered: Vec<&str> = labels.into_iter().collect();
    let numeric: Option<Vec<u64>> = ordered.iter().map(|l| l.parse::<u64>().ok()).collect();
    if let Some(mut values) = numeric {
        values.sort_unstable();
        values.dedup();
        // "01" and "1" would collide under numeric order
        if values.len() == ordered.len() {
            ordered.sort_by_key(|l| l.parse::<u64>().unwrap());
        }
    }
    ordered.into_iter().map(str::to_owned).collect()
}

/// Parses the edge-list format: one `u v` pair per line, whitespace
/// separated; lines starting with `#` are comments. A line holding a single
/// label declares an isolated vertex. Repeated edges collapse.
pub fn parse_edge_list(text: &str) -> Result<LabeledGraph, GraphError> {
    let mut pairs: Vec<(&str, &str)> = Vec::new();
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            [v] => {
                seen.insert(v);
            }
            [u, v] => {
                if u == v {
                    return Err(GraphError::Parse {
                        line: lineno + 1,
                        message: format!("self-loop at {u}"),
                    });
                }
                seen.insert(u);
                seen.insert(v);
                pairs.push((u, v));
            }
            _ => {
                return Err(GraphError::Parse {
                    line: lineno + 1,
                    message: format!("expected `u v`, found {} tokens", tokens.len()),
                })
            }
        }
    }
    let labels = order_labels(seen);
    let index: HashMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let mut edges: Vec<(usize, usize)> = pairs
        .iter()
        .map(|(u, v)| {
            let (a, b) = (index[u], index[v]);
            (a.min(b), a.max(b))
        })
        .collect();
    edges.sort_unstable();
    edges.dedup();
    let graph = Graph::from_edges(labels.len(), &edges)?;
    Ok(LabeledGraph { graph, labels })
}

pub fn write_edge_list<W: Write>(out: &mut W, g: &LabeledGraph, header: &[String]) -> io::Result<()> {
    for line in header {
        writeln!(out, "# {line}")?;
    }
    for v in 0..g.graph.n() {
        if g.graph.degree(v) == 0 {
            writeln!(out, "{}", g.labels[v])?;
        }
    }
    for &(u, v) in g.graph.edges() {
        writeln!(out, "{} {}", g.labels[u], g.labels[v])?;
    }
    Ok(())
}

/// Parses a set file (one label per line, `#` comments) against a graph.
pub fn parse_vertex_set(text: &str, g: &LabeledGraph) -> Result<VertexSet, GraphError> {
    let index: HashMap<&str, usize> = g.labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let mut members = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match index.get(line) {
            Some(&v) => members.push(v),
            None => {
                return Err(GraphError::Parse {
                    line: lineno + 1,
                    message: format!("unknown vertex label {line:?}"),
                })
            }
        }
    }
    Ok(VertexSet::from_members(members))
}

pub fn write_vertex_set<W: Write>(out: &mut W, set: &VertexSet, g: &LabeledGraph) -> io::Result<()> {
    for v in set.iter() {
        writeln!(out, "{}", g.labels[v])?;
    }
    Ok(())
}
