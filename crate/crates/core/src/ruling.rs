//! Sparsify-and-hit 2-ruling set.
//!
//! While the active graph has maximum degree at least the degree floor:
//! color it, fix a seed so that the sample `Z` is sparse and hits every
//! high-degree vertex, ship `G[Z]` to the coordinator, take a greedy MIS `I`
//! of it, and deactivate `N⁺(I)` together with every high-degree vertex. The
//! low-degree remainder is finished by an MIS.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::derand::{
    default_chunk_bits, distributed_fix_seed, select_parameters, ChunkSchedule, DerandError, DerandTrace, Derandomizer,
    Epsilon, ParamOverrides, PreconditionReport,
};
use crate::graph::{induced_subgraph, Coloring, Graph, GraphError, Subgraph, VertexSet};
use crate::linial::{reduce_to_fixpoint, LinialError};
use crate::sim::{gather_subgraph, ModelConfig, ModelKind, Outbox, SimError, SimTranscript, Simulator};
use crate::DEFAULT_ENUMERATION_BUDGET;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FallbackStrategy {
    Gather,
    Sweep,
}

impl fmt::Display for FallbackStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FallbackStrategy::Gather => "gather",
            FallbackStrategy::Sweep => "sweep",
        })
    }
}

impl FromStr for FallbackStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gather" => Ok(FallbackStrategy::Gather),
            "sweep" => Ok(FallbackStrategy::Sweep),
            other => Err(format!("unknown fallback {other:?} (expected gather or sweep)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RulingConfig {
    pub mode: ModelKind,
    /// `c` in `S = ceil(c n log2 n)`.
    pub memory_const: f64,
    pub routing_rounds: usize,
    pub epsilon: Epsilon,
    pub confidence: u32,
    pub overrides: ParamOverrides,
    /// Bits per chunk; `floor(log2 n)` when unset.
    pub chunk_bits: Option<usize>,
    /// `c_loop` in the degree floor `max(16, ceil(log2^4 n) * c_loop)`.
    pub degree_floor_const: f64,
    pub fallback: FallbackStrategy,
    pub budget: u64,
}

impl Default for RulingConfig {
    fn default() -> Self {
        RulingConfig {
            mode: ModelKind::Mpc,
            memory_const: crate::sim::DEFAULT_MEMORY_CONST,
            routing_rounds: crate::sim::DEFAULT_ROUTING_ROUNDS,
            epsilon: Epsilon::ONE_THIRD,
            confidence: 1,
            overrides: ParamOverrides::default(),
            chunk_bits: None,
            degree_floor_const: 1.0,
            fallback: FallbackStrategy::Gather,
            budget: DEFAULT_ENUMERATION_BUDGET,
        }
    }
}

impl RulingConfig {
    pub fn model(&self, n: usize) -> Result<ModelConfig, SimError> {
        Ok(ModelConfig::for_mode(self.mode, n, self.memory_const)?.with_routing_rounds(self.routing_rounds))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RulingError {
    #[error("iteration {iteration}: E[Ψ] = {} is not below W = {}", report.expected_psi, report.weight)]
    PreconditionFailed {
        iteration: usize,
        report: Box<PreconditionReport>,
    },
    #[error("iteration cap {0} reached")]
    IterationCapExceeded(usize),
    #[error(transparent)]
    Derand(#[from] DerandError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Linial(#[from] LinialError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationStats {
    pub iteration: usize,
    pub active_vertices: usize,
    pub active_edges: usize,
    pub max_degree: usize,
    pub buckets: u64,
    pub degree_threshold: usize,
    pub k: usize,
    pub seed_bits: usize,
    pub chunks: usize,
    pub palette: u64,
    pub coloring_rounds: usize,
    pub seed: String,
    pub sample_size: usize,
    pub sample_edges: usize,
    pub high_degree: usize,
    pub bad_vertices: u64,
    pub mis_size: usize,
    pub removed: usize,
    pub rounds: usize,
    pub precondition: PreconditionReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FallbackStats {
    pub requested: FallbackStrategy,
    pub used: FallbackStrategy,
    pub vertices: usize,
    pub edges: usize,
    pub max_degree: usize,
    pub mis_size: usize,
    pub rounds: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RulingSetResult {
    pub set: VertexSet,
    pub initial_max_degree: usize,
    pub degree_floor: usize,
    pub iteration_cap: usize,
    pub iterations: Vec<IterationStats>,
    pub fallback: FallbackStats,
    pub total_rounds: usize,
    pub transcript: SimTranscript,
    pub traces: Vec<DerandTrace>,
}

/// `max(16, ceil(ceil(log2^4 n) * c_loop))`.
pub fn degree_floor(n: usize, c_loop: f64) -> usize {
    let log = (n.max(2) as f64).log2();
    let base = (log.powi(4) - 1e-9).ceil();
    ((base * c_loop).ceil() as usize).max(16)
}

/// `ceil(log_{6/5} log2 Δ0) + 2`.
pub fn iteration_cap(initial_max_degree: usize) -> usize {
    let log = (initial_max_degree.max(1) as f64).log2();
    if log <= 1.0 {
        return 2;
    }
    (log.ln() / (6.0f64 / 5.0).ln() - 1e-9).ceil() as usize + 2
}

/// Greedy MIS in ascending identifier order.
pub fn greedy_mis(g: &Graph) -> VertexSet {
    let mut blocked = vec![false; g.n()];
    let mut out = Vec::new();
    for v in 0..g.n() {
        if !blocked[v] {
            out.push(v);
            for &w in g.neighbors(v) {
                blocked[w] = true;
            }
        }
    }
    VertexSet::from_members(out)
}

/// MIS by sweeping the color classes in increasing order; a vertex joins
/// unless a neighbor joined in an earlier class.
pub fn color_sweep_mis(g: &Graph, col: &Coloring) -> Result<VertexSet, GraphError> {
    if col.len() != g.n() {
        return Err(GraphError::InvalidInput(format!(
            "coloring covers {} vertices, graph has {}",
            col.len(),
            g.n()
        )));
    }
    let mut order: Vec<usize> = (0..g.n()).collect();
    order.sort_by_key(|&v| (col.color(v), v));
    let mut blocked = vec![false; g.n()];
    let mut out = Vec::new();
    for v in order {
        if !blocked[v] {
            out.push(v);
            for &w in g.neighbors(v) {
                blocked[w] = true;
            }
        }
    }
    Ok(VertexSet::from_members(out))
}

struct Run<'a> {
    g: &'a Graph,
    config: &'a RulingConfig,
    sim: Simulator,
}

impl Run<'_> {
    fn machines(&self) -> usize {
        self.sim.config().machine_count
    }

    /// One metered round of single-word messages.
    fn round(&mut self, phase: &str, send: impl Fn(usize) -> Vec<usize>) -> Result<(), SimError> {
        let outboxes: Vec<Outbox<u64>> = (0..self.machines())
            .map(|m| send(m).into_iter().map(|to| (to, 1u64)).collect())
            .collect();
        self.sim.exchange(phase, outboxes, &[])?;
        Ok(())
    }

    /// Active vertices report their degree to the leader, which broadcasts
    /// the maximum back.
    fn degree_check(&mut self, sub: &Subgraph) -> Result<(), SimError> {
        let leader = self.sim.config().leader();
        let members: Vec<usize> = sub.to_original.clone();
        self.round("degree", |m| {
            if members.binary_search(&m).is_ok() {
                vec![leader]
            } else {
                vec![]
            }
        })?;
        self.round("degree", |m| if m == leader { members.clone() } else { vec![] })
    }

    /// Every active vertex sends one word to each active neighbor.
    fn neighbor_round(&mut self, phase: &str, sub: &Subgraph, senders: &[bool]) -> Result<(), SimError> {
        let n = self.machines();
        let mut targets: Vec<Vec<usize>> = vec![Vec::new(); n];
        for v in 0..sub.graph.n() {
            if senders[v] {
                targets[sub.to_original[v]] = sub.graph.neighbors(v).iter().map(|&w| sub.to_original[w]).collect();
            }
        }
        self.round(phase, |m| targets[m].clone())
    }

    fn coloring(&mut self, sub: &Subgraph) -> Result<(Coloring, usize), RulingError> {
        let ids: Vec<u64> = sub.to_original.iter().map(|&v| v as u64).collect();
        let start = Coloring::new(self.g.n() as u64, ids)?;
        let fp = reduce_to_fixpoint(&sub.graph, &start)?;
        let everyone = vec![true; sub.graph.n()];
        for _ in 0..fp.rounds {
            self.neighbor_round("coloring", sub, &everyone)?;
        }
        let mut rounds = fp.rounds;
        if fp.rounds > 0 {
            // neighbors learn each other's final colors
            self.neighbor_round("coloring", sub, &everyone)?;
            rounds += 1;
        }
        Ok((fp.coloring, rounds))
    }

    fn iteration(
        &mut self,
        index: usize,
        sub: &Subgraph,
        delta: usize,
    ) -> Result<(IterationStats, VertexSet, Vec<usize>, DerandTrace), RulingError> {
        let before = self.sim.rounds() - 2;
        let n = self.g.n();
        let (col, coloring_rounds) = self.coloring(sub)?;
        let params = select_parameters(
            n,
            delta,
            self.config.epsilon,
            self.config.confidence,
            col.palette_size(),
            &self.config.overrides,
        )?;
        let derand = Derandomizer::new(&sub.graph, &col, &params)?.with_budget(self.config.budget);
        let report = derand.check_precondition()?;
        if !report.ok {
            return Err(RulingError::PreconditionFailed {
                iteration: index,
                report: Box::new(report),
            });
        }
        let chunk_bits = self.config.chunk_bits.unwrap_or_else(|| default_chunk_bits(n));
        let schedule = ChunkSchedule::new(params.seed_bits(), chunk_bits)?;
        let (seed, trace) = distributed_fix_seed(
            &mut self.sim,
            &sub.graph,
            &col,
            &params,
            &schedule,
            &sub.to_original,
            self.config.budget,
        )?;
        let state = derand.psi_of_seed(&seed)?;
        let z = derand.sample(&seed)?;
        let leader = self.sim.config().leader();
        gather_subgraph(&mut self.sim, "gather", &sub.graph, &z, leader, &sub.to_original)?;
        let gz = induced_subgraph(&sub.graph, &z)?;
        let mis_local = gz.lift(&greedy_mis(&gz.graph));

        let local_n = sub.graph.n();
        let mut in_mis = vec![false; local_n];
        for v in mis_local.iter() {
            in_mis[v] = true;
        }
        let mis_machines: Vec<usize> = mis_local.iter().map(|v| sub.to_original[v]).collect();
        self.round("notify", |m| if m == leader { mis_machines.clone() } else { vec![] })?;
        self.neighbor_round("notify", sub, &in_mis)?;

        let high = derand.high_vertices();
        let mut removed = vec![false; local_n];
        for v in mis_local.iter() {
            removed[v] = true;
            for &w in sub.graph.neighbors(v) {
                removed[w] = true;
            }
        }
        for v in high.iter() {
            removed[v] = true;
        }
        // departing vertices tell their surviving neighbors
        let mut departing: Vec<Vec<usize>> = vec![Vec::new(); self.machines()];
        for v in (0..local_n).filter(|&v| removed[v]) {
            departing[sub.to_original[v]] = sub
                .graph
                .neighbors(v)
                .iter()
                .filter(|&&w| !removed[w])
                .map(|&w| sub.to_original[w])
                .collect();
        }
        self.round("depart", |m| departing[m].clone())?;

        let removed_original: Vec<usize> = (0..local_n)
            .filter(|&v| removed[v])
            .map(|v| sub.to_original[v])
            .collect();
        let stats = IterationStats {
            iteration: index,
            active_vertices: local_n,
            active_edges: sub.graph.m(),
            max_degree: delta,
            buckets: params.buckets(),
            degree_threshold: params.degree_threshold(),
            k: params.family().k(),
            seed_bits: params.seed_bits(),
            chunks: schedule.len(),
            palette: col.palette_size(),
            coloring_rounds,
            seed: seed.to_hex(),
            sample_size: z.len(),
            sample_edges: gz.graph.m(),
            high_degree: high.len(),
            bad_vertices: state.bad_count,
            mis_size: mis_local.len(),
            removed: removed_original.len(),
            rounds: self.sim.rounds() - before,
            precondition: report,
        };
        Ok((stats, sub.lift(&mis_local), removed_original, trace))
    }

    fn fallback(&mut self, sub: &Subgraph) -> Result<(FallbackStats, VertexSet), RulingError> {
        let before = self.sim.rounds();
        let requested = self.config.fallback;
        let leader = self.sim.config().leader();
        let words = sub.graph.n() + sub.graph.m();
        let fits = self.sim.config().mode == ModelKind::Clique || words <= self.sim.config().memory_words;
        let used = if requested == FallbackStrategy::Gather && fits {
            FallbackStrategy::Gather
        } else {
            FallbackStrategy::Sweep
        };
        let mis = if sub.graph.n() == 0 {
            VertexSet::new()
        } else if used == FallbackStrategy::Gather {
            gather_subgraph(
                &mut self.sim,
                "fallback",
                &sub.graph,
                &VertexSet::all(sub.graph.n()),
                leader,
                &sub.to_original,
            )?;
            let mis = greedy_mis(&sub.graph);
            let members: Vec<usize> = mis.iter().map(|v| sub.to_original[v]).collect();
            self.round("fallback", |m| if m == leader { members.clone() } else { vec![] })?;
            mis
        } else {
            let (col, _) = self.coloring(sub)?;
            let mis = color_sweep_mis(&sub.graph, &col)?;
            let mut in_mis = vec![false; sub.graph.n()];
            for v in mis.iter() {
                in_mis[v] = true;
            }
            for c in 0..col.palette_size() {
                let joining: Vec<bool> = (0..sub.graph.n()).map(|v| in_mis[v] && col.color(v) == c).collect();
                self.neighbor_round("fallback", sub, &joining)?;
            }
            mis
        };
        let stats = FallbackStats {
            requested,
            used,
            vertices: sub.graph.n(),
            edges: sub.graph.m(),
            max_degree: sub.graph.max_degree(),
            mis_size: mis.len(),
            rounds: self.sim.rounds() - before,
        };
        Ok((stats, sub.lift(&mis)))
    }
}

/// Computes a 2-ruling set of `g` inside the simulator selected by `config`.
pub fn deterministic_two_ruling_set(g: &Graph, config: &RulingConfig) -> Result<RulingSetResult, RulingError> {
    let n = g.n();
    let mut run = Run {
        g,
        config,
        sim: Simulator::new(config.model(n)?),
    };
    let floor = degree_floor(n, config.degree_floor_const);
    let initial_max_degree = g.max_degree();
    let cap = iteration_cap(initial_max_degree);
    let mut active = vec![true; n];
    let mut set: Vec<usize> = Vec::new();
    let mut iterations = Vec::new();
    let mut traces = Vec::new();

    let remainder = loop {
        let sub = induced_subgraph(g, &VertexSet::from_mask(&active))?;
        if sub.graph.n() == 0 {
            break sub;
        }
        run.degree_check(&sub)?;
        let delta = sub.graph.max_degree();
        if delta < floor || delta < 2 {
            break sub;
        }
        if iterations.len() == cap {
            return Err(RulingError::IterationCapExceeded(cap));
        }
        let (stats, mis, removed, trace) = run.iteration(iterations.len(), &sub, delta)?;
        set.extend(mis.iter());
        for v in removed {
            active[v] = false;
        }
        iterations.push(stats);
        traces.push(trace);
    };

    let (fallback, mis) = run.fallback(&remainder)?;
    set.extend(mis.iter());
    let transcript = run.sim.into_transcript();
    Ok(RulingSetResult {
        set: VertexSet::from_members(set),
        initial_max_degree,
        degree_floor: floor,
        iteration_cap: cap,
        iterations,
        fallback,
        total_rounds: transcript.total_rounds(),
        transcript,
        traces,
    })
}

/// `fallback_mis` on its own: an MIS of `g` by the configured strategy.
pub fn fallback_mis(g: &Graph, config: &RulingConfig) -> Result<VertexSet, RulingError> {
    let mut run = Run {
        g,
        config,
        sim: Simulator::new(config.model(g.n())?),
    };
    let sub = induced_subgraph(g, &VertexSet::all(g.n()))?;
    Ok(run.fallback(&sub)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::{complete, cycle, path, star};
    use crate::graph::{is_maximal_independent_set, is_two_ruling_set};

    fn loop_config(mode: ModelKind) -> RulingConfig {
        RulingConfig {
            mode,
            degree_floor_const: 0.0,
            overrides: ParamOverrides {
                k: Some(2),
                ..ParamOverrides::default()
            },
            ..RulingConfig::default()
        }
    }

    #[test]
    fn greedy_examples() {
        assert_eq!(greedy_mis(&complete(3)), VertexSet::from_members([0]));
        assert_eq!(greedy_mis(&path(3)), VertexSet::from_members([0, 2]));
        assert_eq!(greedy_mis(&Graph::empty(3)), VertexSet::from_members([0, 1, 2]));
    }

    #[test]
    fn sweep_on_four_cycle() {
        let col = Coloring::new(2, vec![0, 1, 0, 1]).unwrap();
        assert_eq!(
            color_sweep_mis(&cycle(4), &col).unwrap(),
            VertexSet::from_members([0, 2])
        );
    }

    #[test]
    fn floors_and_caps() {
        assert_eq!(degree_floor(4, 1.0), 16);
        assert_eq!(degree_floor(5, 1.0), 30);
        assert_eq!(degree_floor(1 << 10, 1.0), 10_000);
        assert_eq!(degree_floor(512, 0.0), 16);
        // log2 256 = 8, log_{1.2} 8 = 11.4
        assert_eq!(iteration_cap(256), 14);
        assert_eq!(iteration_cap(2), 2);
    }

    #[test]
    fn five_cycle_skips_the_loop() {
        let g = cycle(5);
        for mode in [ModelKind::Mpc, ModelKind::Clique] {
            let res = deterministic_two_ruling_set(
                &g,
                &RulingConfig {
                    mode,
                    ..RulingConfig::default()
                },
            )
            .unwrap();
            assert!(res.iterations.is_empty());
            assert_eq!(res.set, VertexSet::from_members([0, 2]));
            assert!(is_two_ruling_set(&g, &res.set));
            res.transcript.audit(&RulingConfig::default().model(5).unwrap()).ok();
        }
    }

    #[test]
    fn edgeless_graph_takes_everything() {
        let res = deterministic_two_ruling_set(&Graph::empty(4), &RulingConfig::default()).unwrap();
        assert_eq!(res.set, VertexSet::all(4));
    }

    #[test]
    fn star_enters_the_loop() {
        let g = star(40);
        for mode in [ModelKind::Mpc, ModelKind::Clique] {
            let config = loop_config(mode);
            let res = deterministic_two_ruling_set(&g, &config).unwrap();
            assert_eq!(res.iterations.len(), 1, "{mode}");
            assert_eq!(res.iterations[0].bad_vertices, 0);
            assert!(is_two_ruling_set(&g, &res.set));
            res.transcript.audit(&config.model(g.n()).unwrap()).unwrap();
        }
    }

    #[test]
    fn fallback_strategies_both_give_an_mis() {
        let g = cycle(9);
        for fallback in [FallbackStrategy::Gather, FallbackStrategy::Sweep] {
            for mode in [ModelKind::Mpc, ModelKind::Clique] {
                let mis = fallback_mis(
                    &g,
                    &RulingConfig {
                        mode,
                        fallback,
                        ..RulingConfig::default()
                    },
                )
                .unwrap();
                assert!(is_maximal_independent_set(&g, &mis));
            }
        }
        let gather = fallback_mis(&path(3), &RulingConfig::default()).unwrap();
        assert_eq!(gather, VertexSet::from_members([0, 2]));
    }

    #[test]
    fn oversized_gather_switches_to_sweep() {
        let g = complete(30);
        let config = RulingConfig {
            memory_const: 1.0,
            ..RulingConfig::default()
        };
        let res = deterministic_two_ruling_set(&g, &config).unwrap();
        assert_eq!(res.fallback.used, FallbackStrategy::Sweep);
        assert!(is_two_ruling_set(&g, &res.set));
    }
}
