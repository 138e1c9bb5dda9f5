//! Reproducible test-graph families. Every random generator takes an
//! explicit 64-bit seed for a ChaCha8 stream.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Graph, GraphError};

fn invalid(msg: String) -> GraphError {
    GraphError::InvalidInput(msg)
}

/// `rows × cols` grid, row-major identifiers.
pub fn grid(rows: usize, cols: usize) -> Result<Graph, GraphError> {
    if rows == 0 || cols == 0 {
        return Err(invalid(format!("grid needs positive sides, got {rows}x{cols}")));
    }
    let mut edges = Vec::with_capacity(2 * rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                edges.push((v, v + 1));
            }
            if r + 1 < rows {
                edges.push((v, v + cols));
            }
        }
    }
    Graph::from_edges(rows * cols, &edges)
}

/// G(n, p) where a pair is kept only while both endpoints are below `cap`.
/// Pairs are visited in lexicographic order.
pub fn gnp_capped(n: usize, p: f64, cap: usize, seed: u64) -> Result<Graph, GraphError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("edge probability {p} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut degree = vec![0usize; n];
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) && degree[u] < cap && degree[v] < cap {
                degree[u] += 1;
                degree[v] += 1;
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, &edges)
}

/// Configuration model with `d` stubs per vertex; self-loops and repeated
/// pairs are dropped, so degrees are at most `d`.
pub fn regular_ish(n: usize, d: usize, seed: u64) -> Result<Graph, GraphError> {
    if d >= n.max(1) {
        return Err(invalid(format!("degree {d} needs more than {n} vertices")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    stubs.shuffle(&mut rng);
    let mut edges = BTreeSet::new();
    for pair in stubs.chunks_exact(2) {
        let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
        if u != v {
            edges.insert((u, v));
        }
    }
    Graph::from_edges(n, &edges.into_iter().collect::<Vec<_>>())
}

/// `hubs` hubs, each adjacent to `degree` private leaves, plus random
/// leaf-to-leaf edges keeping every leaf at degree at most `min(3, degree)`.
/// Hub `h` is vertex `h * (degree + 1)`, its leaves follow it.
pub fn star_cluster(hubs: usize, degree: usize, seed: u64) -> Result<Graph, GraphError> {
    if hubs == 0 || degree == 0 {
        return Err(invalid(format!(
            "star cluster needs hubs and degree >= 1, got {hubs}, {degree}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let block = degree + 1;
    let n = hubs * block;
    let mut edges = BTreeSet::new();
    let mut leaves = Vec::with_capacity(hubs * degree);
    for h in 0..hubs {
        for i in 1..=degree {
            edges.insert((h * block, h * block + i));
            leaves.push(h * block + i);
        }
    }
    let cap = degree.min(3);
    let mut leaf_degree = vec![1usize; n];
    for _ in 0..leaves.len() {
        let a = leaves[rng.random_range(0..leaves.len())];
        let b = leaves[rng.random_range(0..leaves.len())];
        let (u, v) = (a.min(b), a.max(b));
        if u != v && leaf_degree[u] < cap && leaf_degree[v] < cap && edges.insert((u, v)) {
            leaf_degree[u] += 1;
            leaf_degree[v] += 1;
        }
    }
    Graph::from_edges(n, &edges.into_iter().collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_three_by_three() {
        let g = grid(3, 3).unwrap();
        assert_eq!((g.n(), g.m(), g.max_degree()), (9, 12, 4));
    }

    #[test]
    fn star_cluster_degree() {
        for (hubs, d) in [(1, 1), (3, 2), (4, 20), (2, 40)] {
            let g = star_cluster(hubs, d, 7).unwrap();
            assert_eq!(g.n(), hubs * (d + 1));
            assert_eq!(g.max_degree(), d);
        }
    }

    #[test]
    fn caps_hold() {
        let g = gnp_capped(100, 0.3, 6, 1).unwrap();
        assert!(g.max_degree() <= 6);
        assert!(g.m() > 200);
        let r = regular_ish(50, 5, 2).unwrap();
        assert!(r.max_degree() <= 5);
        assert!(gnp_capped(5, 1.5, 2, 0).is_err());
        assert!(regular_ish(3, 3, 0).is_err());
    }

    #[test]
    fn same_seed_same_graph() {
        assert_eq!(gnp_capped(60, 0.2, 8, 9).unwrap(), gnp_capped(60, 0.2, 8, 9).unwrap());
        assert_eq!(star_cluster(3, 17, 9).unwrap(), star_cluster(3, 17, 9).unwrap());
        assert_ne!(regular_ish(60, 4, 1).unwrap(), regular_ish(60, 4, 2).unwrap());
    }
}
