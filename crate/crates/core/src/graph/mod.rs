//! Undirected simple graphs over dense vertex identifiers `0..n`, proper
//! colorings, and the structural queries the rest of the crate relies on.

mod io;

pub use io::{parse_edge_list, parse_vertex_set, write_edge_list, write_vertex_set, LabeledGraph};

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("vertex {vertex} out of range for graph with {n} vertices")]
    InvalidVertex { vertex: usize, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(usize, usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Immutable undirected simple graph.
///
/// Neighbor lists are sorted ascending; `edges` holds each edge once as
/// `(u, v)` with `u < v`, in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Builds a graph, rejecting self-loops, duplicate edges and
    /// out-of-range endpoints.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut adjacency = vec![Vec::new(); n];
        let mut normalized = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(GraphError::InvalidVertex { vertex: w, n });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            normalized.push((u.min(v), u.max(v)));
        }
        normalized.sort_unstable();
        if let Some(w) = normalized.windows(2).find(|w| w[0] == w[1]) {
            return Err(GraphError::DuplicateEdge(w[0].0, w[0].1));
        }
        for &(u, v) in &normalized {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Graph {
            adjacency,
            edges: normalized,
        })
    }

    pub fn empty(n: usize) -> Self {
        Graph {
            adjacency: vec![Vec::new(); n],
            edges: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n() && self.adjacency[u].binary_search(&v).is_ok()
    }

    pub fn max_degree(&self) -> usize {
        max_degree(self)
    }
}

/// Largest vertex degree; 0 for edgeless (and vertexless) graphs.
pub fn max_degree(g: &Graph) -> usize {
    g.adjacency.iter().map(Vec::len).max().unwrap_or(0)
}

/// A sorted, duplicate-free set of vertex identifiers.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexSet(Vec<usize>);

impl VertexSet {
    pub fn new() -> Self {
        VertexSet(Vec::new())
    }

    /// Builds a set from arbitrary members; duplicates collapse.
    pub fn from_members<I: IntoIterator<Item = usize>>(members: I) -> Self {
        let mut v: Vec<usize> = members.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        VertexSet(v)
    }

    pub fn from_mask(mask: &[bool]) -> Self {
        VertexSet(mask.iter().enumerate().filter_map(|(i, &b)| b.then_some(i)).collect())
    }

    pub fn all(n: usize) -> Self {
        VertexSet((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Membership mask of length `n`.
    pub fn to_mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for &v in &self.0 {
            mask[v] = true;
        }
        mask
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        VertexSet::from_members(self.iter().chain(other.iter()))
    }

    pub fn intersection(&self, other: &VertexSet) -> VertexSet {
        VertexSet(self.iter().filter(|&v| other.contains(v)).collect())
    }

    /// Checks every member is a vertex of a graph with `n` vertices.
    pub fn check_range(&self, n: usize) -> Result<(), GraphError> {
        match self.0.last() {
            Some(&v) if v >= n => Err(GraphError::InvalidVertex { vertex: v, n }),
            _ => Ok(()),
        }
    }
}

impl FromIterator<usize> for VertexSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        VertexSet::from_members(iter)
    }
}

/// An induced subgraph together with the map from its vertices back to
/// the identifiers of the graph it was cut from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subgraph {
    pub graph: Graph,
    /// `to_original[i]` is the identifier of local vertex `i` in the parent.
    pub to_original: Vec<usize>,
}

impl Subgraph {
    /// Translates a set of local identifiers into parent identifiers.
    pub fn lift(&self, local: &VertexSet) -> VertexSet {
        VertexSet::from_members(local.iter().map(|v| self.to_original[v]))
    }
}

/// `G[s]`: keeps exactly the edges with both endpoints in `s`. Local
/// identifiers follow the ascending order of `s`.
pub fn induced_subgraph(g: &Graph, s: &VertexSet) -> Result<Subgraph, GraphError> {
    s.check_range(g.n())?;
    let mut local = vec![usize::MAX; g.n()];
    for (i, v) in s.iter().enumerate() {
        local[v] = i;
    }
    let edges: Vec<(usize, usize)> = g
        .edges()
        .iter()
        .filter(|&&(u, v)| local[u] != usize::MAX && local[v] != usize::MAX)
        .map(|&(u, v)| (local[u], local[v]))
        .collect();
    let graph = Graph::from_edges(s.len(), &edges)?;
    Ok(Subgraph {
        graph,
        to_original: s.as_slice().to_vec(),
    })
}

/// A vertex coloring with colors in `[0, palette_size)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coloring {
    palette_size: u64,
    colors: Vec<u64>,
}

impl Coloring {
    pub fn new(palette_size: u64, colors: Vec<u64>) -> Result<Self, GraphError> {
        if palette_size == 0 && !colors.is_empty() {
            return Err(GraphError::InvalidInput("palette size must be positive".into()));
        }
        if let Some((v, &c)) = colors.iter().enumerate().find(|(_, &c)| c >= palette_size) {
            return Err(GraphError::InvalidInput(format!(
                "vertex {v} has color {c} outside palette of size {palette_size}"
            )));
        }
        Ok(Coloring {
            palette_size: palette_size.max(1),
            colors,
        })
    }

    /// Colors every vertex with its own identifier.
    pub fn identity(n: usize) -> Self {
        Coloring {
            palette_size: (n as u64).max(1),
            colors: (0..n as u64).collect(),
        }
    }

    pub fn palette_size(&self) -> u64 {
        self.palette_size
    }

    pub fn color(&self, v: usize) -> u64 {
        self.colors[v]
    }

    pub fn colors(&self) -> &[u64] {
        &self.colors
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    /// Restricts the coloring to the vertices of a subgraph.
    pub fn restrict(&self, sub: &Subgraph) -> Coloring {
        Coloring {
            palette_size: self.palette_size,
            colors: sub.to_original.iter().map(|&v| self.colors[v]).collect(),
        }
    }
}

/// True iff no edge of `g` is monochromatic.
pub fn validate_coloring(g: &Graph, col: &Coloring) -> Result<bool, GraphError> {
    if col.len() != g.n() {
        return Err(GraphError::InvalidInput(format!(
            "coloring covers {} vertices, graph has {}",
            col.len(),
            g.n()
        )));
    }
    Ok(g.edges().iter().all(|&(u, v)| col.color(u) != col.color(v)))
}

/// Outcome of checking a candidate 2-ruling set, with the first witness of
/// each kind of failure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RulingCheck {
    pub independent: bool,
    pub ruled: bool,
    pub conflict_edge: Option<(usize, usize)>,
    pub first_unruled: Option<usize>,
    /// Every vertex farther than 2 hops from the set, ascending.
    pub unruled: Vec<usize>,
}

impl RulingCheck {
    pub fn is_valid(&self) -> bool {
        self.independent && self.ruled
    }
}

pub fn check_two_ruling_set(g: &Graph, u: &VertexSet) -> Result<RulingCheck, GraphError> {
    u.check_range(g.n())?;
    let mask = u.to_mask(g.n());
    let conflict_edge = g.edges().iter().copied().find(|&(a, b)| mask[a] && mask[b]);

    // multi-source BFS truncated at depth 2
    let mut dist = vec![u8::MAX; g.n()];
    let mut queue = VecDeque::new();
    for v in u.iter() {
        dist[v] = 0;
        queue.push_back(v);
    }
    while let Some(v) = queue.pop_front() {
        if dist[v] == 2 {
            continue;
        }
        for &w in g.neighbors(v) {
            if dist[w] == u8::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    let unruled: Vec<usize> = (0..g.n()).filter(|&v| dist[v] == u8::MAX).collect();
    Ok(RulingCheck {
        independent: conflict_edge.is_none(),
        ruled: unruled.is_empty(),
        conflict_edge,
        first_unruled: unruled.first().copied(),
        unruled,
    })
}

/// True iff `u` is independent and every vertex lies within distance 2 of it.
pub fn is_two_ruling_set(g: &Graph, u: &VertexSet) -> bool {
    check_two_ruling_set(g, u).is_ok_and(|c| c.is_valid())
}

/// True iff `s` is independent and no vertex outside `s` can be added.
pub fn is_maximal_independent_set(g: &Graph, s: &VertexSet) -> bool {
    if s.check_range(g.n()).is_err() {
        return false;
    }
    let mask = s.to_mask(g.n());
    let independent = g.edges().iter().all(|&(a, b)| !(mask[a] && mask[b]));
    let maximal = (0..g.n()).all(|v| mask[v] || g.neighbors(v).iter().any(|&w| mask[w]));
    independent && maximal
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::Graph;

    pub fn path(n: usize) -> Graph {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::from_edges(n, &edges).unwrap()
    }

    pub fn cycle(n: usize) -> Graph {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::from_edges(n, &edges).unwrap()
    }

    pub fn star(leaves: usize) -> Graph {
        let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
        Graph::from_edges(leaves + 1, &edges).unwrap()
    }

    pub fn complete(n: usize) -> Graph {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v));
            }
        }
        Graph::from_edges(n, &edges).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn max_degree_examples() {
        assert_eq!(max_degree(&Graph::empty(3)), 0);
        assert_eq!(max_degree(&complete(3)), 2);
        assert_eq!(max_degree(&star(4)), 4);
    }

    #[test]
    fn rejects_malformed_edges() {
        assert_eq!(Graph::from_edges(2, &[(0, 0)]), Err(GraphError::SelfLoop(0)));
        assert_eq!(
            Graph::from_edges(2, &[(0, 1), (1, 0)]),
            Err(GraphError::DuplicateEdge(0, 1))
        );
        assert_eq!(
            Graph::from_edges(2, &[(0, 2)]),
            Err(GraphError::InvalidVertex { vertex: 2, n: 2 })
        );
    }

    #[test]
    fn induced_subgraph_examples() {
        let tri = complete(3);
        let sub = induced_subgraph(&tri, &VertexSet::from_members([0, 1])).unwrap();
        assert_eq!(sub.graph.m(), 1);
        assert_eq!(sub.to_original, vec![0, 1]);

        let sub = induced_subgraph(&tri, &VertexSet::new()).unwrap();
        assert_eq!(sub.graph.n(), 0);

        let sub = induced_subgraph(&path(3), &VertexSet::from_members([0, 2])).unwrap();
        assert_eq!((sub.graph.n(), sub.graph.m()), (2, 0));
        assert_eq!(sub.to_original, vec![0, 2]);

        assert_eq!(
            induced_subgraph(&tri, &VertexSet::from_members([5])).unwrap_err(),
            GraphError::InvalidVertex { vertex: 5, n: 3 }
        );
    }

    #[test]
    fn coloring_examples() {
        let edge = Graph::from_edges(2, &[(0, 1)]).unwrap();
        assert!(validate_coloring(&edge, &Coloring::new(2, vec![0, 1]).unwrap()).unwrap());
        assert!(!validate_coloring(&edge, &Coloring::new(6, vec![5, 5]).unwrap()).unwrap());
        let empty = Graph::empty(4);
        assert!(validate_coloring(&empty, &Coloring::new(1, vec![0; 4]).unwrap()).unwrap());
        assert!(matches!(
            validate_coloring(&edge, &Coloring::new(2, vec![0]).unwrap()),
            Err(GraphError::InvalidInput(_))
        ));
        assert!(Coloring::new(2, vec![0, 2]).is_err());
    }

    #[test]
    fn ruling_set_examples() {
        let s = star(3);
        assert!(is_two_ruling_set(&s, &VertexSet::from_members([0])));
        assert!(is_two_ruling_set(&s, &VertexSet::from_members([2])));

        let p = path(5);
        let check = check_two_ruling_set(&p, &VertexSet::from_members([0])).unwrap();
        assert!(check.independent);
        assert_eq!(check.first_unruled, Some(3));
        assert_eq!(check.unruled, vec![3, 4]);
        assert!(!is_two_ruling_set(&p, &VertexSet::from_members([0])));

        let check = check_two_ruling_set(&p, &VertexSet::from_members([1, 2, 4])).unwrap();
        assert_eq!(check.conflict_edge, Some((1, 2)));
        assert!(check.ruled);
    }

    fn arb_graph() -> impl Strategy<Value = Graph> {
        (1usize..24).prop_flat_map(|n| {
            proptest::collection::vec((0..n, 0..n), 0..3 * n).prop_map(move |pairs| {
                let mut edges: Vec<(usize, usize)> = pairs
                    .into_iter()
                    .filter(|(u, v)| u != v)
                    .map(|(u, v)| (u.min(v), u.max(v)))
                    .collect();
                edges.sort_unstable();
                edges.dedup();
                Graph::from_edges(n, &edges).unwrap()
            })
        })
    }

    fn greedy(g: &Graph) -> VertexSet {
        let mut taken = vec![false; g.n()];
        for v in 0..g.n() {
            if !g.neighbors(v).iter().any(|&w| taken[w]) {
                taken[v] = true;
            }
        }
        VertexSet::from_mask(&taken)
    }

    proptest! {
        #[test]
        fn induced_subgraph_composes(g in arb_graph(), a in any::<u64>(), b in any::<u64>()) {
            let n = g.n();
            let sa = VertexSet::from_members((0..n).filter(|v| a >> (v % 64) & 1 == 1));
            let sb = VertexSet::from_members((0..n).filter(|v| b >> (v % 64) & 1 == 1));
            let ga = induced_subgraph(&g, &sa).unwrap();
            // B restricted to A, expressed in A's local identifiers
            let local_b = VertexSet::from_members(
                ga.to_original.iter().enumerate().filter(|(_, &o)| sb.contains(o)).map(|(i, _)| i),
            );
            let gab = induced_subgraph(&ga.graph, &local_b).unwrap();
            let direct = induced_subgraph(&g, &sa.intersection(&sb)).unwrap();
            prop_assert_eq!(&gab.graph, &direct.graph);
            let lifted: Vec<usize> = gab.to_original.iter().map(|&i| ga.to_original[i]).collect();
            prop_assert_eq!(lifted, direct.to_original);
        }

        #[test]
        fn mis_is_two_ruling(g in arb_graph()) {
            let mis = greedy(&g);
            prop_assert!(is_maximal_independent_set(&g, &mis));
            prop_assert!(is_two_ruling_set(&g, &mis));
        }

        #[test]
        fn proper_coloring_survives_induction(g in arb_graph(), keep in any::<u64>()) {
            let col = Coloring::identity(g.n());
            prop_assert!(validate_coloring(&g, &col).unwrap());
            let s = VertexSet::from_members((0..g.n()).filter(|v| keep >> (v % 64) & 1 == 1));
            let sub = induced_subgraph(&g, &s).unwrap();
            prop_assert!(validate_coloring(&sub.graph, &col.restrict(&sub)).unwrap());
        }
    }
}
