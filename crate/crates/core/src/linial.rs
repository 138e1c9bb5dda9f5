//! One-round Linial color reduction through polynomials over GF(q).
//!
//! A vertex with old color `c` reads `c` in base `q` as the coefficients of
//! a polynomial `p` of degree at most `t`, and picks the smallest `x` such
//! that no neighbor's polynomial takes the value `p(x)` at `x`. Its new color
//! is `x * q + p(x)`. Distinct polynomials of degree `<= t` agree on at most
//! `t` points and there are at most `Δ` neighbors, so `q > Δ t` always
//! leaves a free `x`.

use thiserror::Error;

use crate::graph::{validate_coloring, Coloring, Graph, GraphError};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum LinialError {
    #[error("input coloring is not proper")]
    NotProper,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("no free evaluation point for color {color} (q = {q}, t = {t})")]
    NoFreePoint { color: u64, q: u64, t: u32 },
}

/// Field size and polynomial degree for one reduction step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LinialStep {
    pub q: u64,
    pub t: u32,
}

impl LinialStep {
    /// `t = max(1, ceil(log κ / log(Δ + 1)))`, computed exactly as the least
    /// `t >= 1` with `(Δ + 1)^t >= κ`; `q` is the least prime above `Δ t`.
    pub fn for_palette(max_degree: usize, palette: u64) -> Self {
        let base = max_degree as u128 + 1;
        let mut t = 1u32;
        let mut power = base;
        while power < palette as u128 {
            power *= base;
            t += 1;
        }
        let q = next_prime_above(max_degree as u64 * t as u64);
        LinialStep { q, t }
    }

    pub fn palette(&self) -> u64 {
        self.q * self.q
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn next_prime_above(n: u64) -> u64 {
    let mut p = n + 1;
    while !is_prime(p) {
        p += 1;
    }
    p
}

fn eval_color_poly(color: u64, x: u64, step: LinialStep) -> u64 {
    // Horner over the base-q digits, most significant digit first
    let q = step.q;
    let mut digits = Vec::with_capacity(step.t as usize + 1);
    let mut c = color;
    for _ in 0..=step.t {
        digits.push(c % q);
        c /= q;
    }
    digits.iter().rev().fold(0, |acc, &d| (acc * x + d) % q)
}

/// New color of a vertex computed from its own old color and its
/// neighbors' old colors only.
pub fn linial_color(own: u64, neighbor_colors: &[u64], step: LinialStep) -> Result<u64, LinialError> {
    (0..step.q)
        .find(|&x| {
            let mine = eval_color_poly(own, x, step);
            neighbor_colors.iter().all(|&c| eval_color_poly(c, x, step) != mine)
        })
        .map(|x| x * step.q + eval_color_poly(own, x, step))
        .ok_or(LinialError::NoFreePoint {
            color: own,
            q: step.q,
            t: step.t,
        })
}

/// One reduction round. Edgeless graphs collapse to the single color 0.
pub fn linial_reduce(g: &Graph, col: &Coloring) -> Result<Coloring, LinialError> {
    if !validate_coloring(g, col)? {
        return Err(LinialError::NotProper);
    }
    let delta = g.max_degree();
    if delta == 0 {
        return Ok(Coloring::new(1, vec![0; g.n()])?);
    }
    let step = LinialStep::for_palette(delta, col.palette_size());
    let colors = (0..g.n())
        .map(|v| {
            let nbrs: Vec<u64> = g.neighbors(v).iter().map(|&w| col.color(w)).collect();
            linial_color(col.color(v), &nbrs, step)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Coloring::new(step.palette(), colors)?)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fixpoint {
    pub coloring: Coloring,
    /// Reduction rounds actually applied.
    pub rounds: usize,
    /// Palette sizes, starting with the input palette.
    pub palettes: Vec<u64>,
}

/// Applies reduction rounds while they strictly shrink the palette.
pub fn reduce_to_fixpoint(g: &Graph, col: &Coloring) -> Result<Fixpoint, LinialError> {
    if !validate_coloring(g, col)? {
        return Err(LinialError::NotProper);
    }
    let delta = g.max_degree();
    if delta == 0 {
        return Ok(Fixpoint {
            coloring: Coloring::new(1, vec![0; g.n()])?,
            rounds: 0,
            palettes: vec![col.palette_size(), 1],
        });
    }
    let mut current = col.clone();
    let mut palettes = vec![current.palette_size()];
    let mut rounds = 0;
    while LinialStep::for_palette(delta, current.palette_size()).palette() < current.palette_size() {
        current = linial_reduce(g, &current)?;
        palettes.push(current.palette_size());
        rounds += 1;
    }
    Ok(Fixpoint {
        coloring: current,
        rounds,
        palettes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::path;
    use proptest::prelude::*;

    #[test]
    fn isolated_vertex_takes_first_candidate() {
        let step = LinialStep { q: 3, t: 1 };
        assert_eq!(linial_color(0, &[], step), Ok(0));
    }

    #[test]
    fn single_edge_hand_run() {
        let g = path(2);
        let col = Coloring::new(2, vec![0, 1]).unwrap();
        let step = LinialStep::for_palette(1, 2);
        assert_eq!(step, LinialStep { q: 2, t: 1 });
        let out = linial_reduce(&g, &col).unwrap();
        // p_0 = 0 and p_1 = 1 differ at x = 0: colors (0, 0) and (0, 1)
        assert_eq!(out.colors(), &[0, 1]);
        assert_eq!(out.palette_size(), 4);
    }

    #[test]
    fn rejects_improper_input() {
        let g = path(3);
        let col = Coloring::new(3, vec![0, 0, 1]).unwrap();
        assert_eq!(linial_reduce(&g, &col), Err(LinialError::NotProper));
        assert_eq!(reduce_to_fixpoint(&g, &col), Err(LinialError::NotProper));
    }

    #[test]
    fn step_parameters() {
        // 5^4 = 625 >= 256 > 125
        assert_eq!(LinialStep::for_palette(4, 256), LinialStep { q: 17, t: 4 });
        assert_eq!(LinialStep::for_palette(2, 5000), LinialStep { q: 17, t: 8 });
        assert_eq!(LinialStep::for_palette(3, 1), LinialStep { q: 5, t: 1 });
    }

    #[test]
    fn fixpoint_palette_sequence_on_long_path() {
        // 5000 -> 17^2 -> 13^2 -> 11^2, then 11^2 again so it stops
        let g = path(5000);
        let fp = reduce_to_fixpoint(&g, &Coloring::identity(5000)).unwrap();
        assert_eq!(fp.palettes, vec![5000, 289, 169, 121]);
        assert_eq!(fp.rounds, 3);
        assert!(validate_coloring(&g, &fp.coloring).unwrap());
    }

    #[test]
    fn fixpoint_for_degree_four_stalls_at_289() {
        let n = 10_000;
        let edges: Vec<(usize, usize)> = (0..n).flat_map(|i| [(i, (i + 1) % n), (i, (i + 2) % n)]).collect();
        let g = Graph::from_edges(n, &edges).unwrap();
        assert_eq!(g.max_degree(), 4);
        let fp = reduce_to_fixpoint(&g, &Coloring::identity(n)).unwrap();
        assert_eq!(fp.palettes, vec![10_000, 841, 529, 289]);
        assert!(validate_coloring(&g, &fp.coloring).unwrap());

        // n = 256: the first step would already produce 17^2 > 256 colors
        assert_eq!(LinialStep::for_palette(4, 256).palette(), 289);
    }

    #[test]
    fn minimal_palette_is_left_alone() {
        let g = path(3);
        let col = Coloring::new(2, vec![0, 1, 0]).unwrap();
        let fp = reduce_to_fixpoint(&g, &col).unwrap();
        assert_eq!(fp.coloring, col);
        assert_eq!(fp.rounds, 0);
    }

    #[test]
    fn edgeless_graph_collapses_to_one_color() {
        let fp = reduce_to_fixpoint(&Graph::empty(4), &Coloring::identity(4)).unwrap();
        assert_eq!(fp.coloring.palette_size(), 1);
        assert_eq!(fp.coloring.colors(), &[0, 0, 0, 0]);
    }

    fn arb_graph() -> impl Strategy<Value = Graph> {
        (2usize..40).prop_flat_map(|n| {
            proptest::collection::vec((0..n, 0..n), 1..4 * n).prop_map(move |pairs| {
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

    proptest! {
        #[test]
        fn reduce_is_proper_and_local(g in arb_graph(), scale in 1u64..50) {
            // spread the identity colors so the palette is large
            let col = Coloring::new(g.n() as u64 * scale, (0..g.n() as u64).map(|c| c * scale).collect()).unwrap();
            let out = linial_reduce(&g, &col).unwrap();
            prop_assert!(validate_coloring(&g, &out).unwrap());
            if g.max_degree() > 0 {
                let step = LinialStep::for_palette(g.max_degree(), col.palette_size());
                prop_assert!(step.q > g.max_degree() as u64 * step.t as u64);
                for v in 0..g.n() {
                    let mut nbrs: Vec<u64> = g.neighbors(v).iter().map(|&w| col.color(w)).collect();
                    nbrs.reverse();
                    prop_assert_eq!(linial_color(col.color(v), &nbrs, step).unwrap(), out.color(v));
                }
            }
        }

        #[test]
        fn fixpoint_palette_never_grows(g in arb_graph()) {
            let fp = reduce_to_fixpoint(&g, &Coloring::identity(g.n())).unwrap();
            prop_assert!(validate_coloring(&g, &fp.coloring).unwrap());
            prop_assert!(fp.coloring.palette_size() <= g.n() as u64);
        }
    }
}
