//! Seed fixing by the method of conditional expectations.
//!
//! For a seed `s` let `Z` be the vertices whose color hashes to bucket 0.
//! The potential is `Ψ = E_A + W · bad`, where `E_A` counts edges inside
//! `Z` and `bad` counts vertices of degree at least the threshold that are
//! outside `Z` and have no neighbor in `Z`. All conditional expectations are
//! kept as exact integer sums over the uncommitted seed bits.

mod distributed;
mod params;
mod terms;
mod trace;

pub use distributed::{distributed_fix_seed, DISTRIBUTED_ROUNDS_PER_CHUNK};
pub use params::{
    bellare_rompel_bound, bucket_bits_for, default_chunk_bits, degree_threshold, independence_degree,
    select_parameters, ChunkSchedule, Epsilon, ParamOverrides, SamplerParams, DEFAULT_W_EXPONENT, MAX_CHUNK_BITS,
};
pub use terms::{chunk_sums, TermSet, TermSums};
pub use trace::{ChunkRecord, DerandTrace};

use num_rational::Ratio;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{validate_coloring, Coloring, Graph, GraphError, VertexSet};
use crate::kwise::{evaluate, HashError, Seed};
use crate::sim::SimError;
use crate::DEFAULT_ENUMERATION_BUDGET;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DerandError {
    #[error("maximum degree {max_degree} is below 2")]
    DegenerateGraph { max_degree: usize },
    #[error("independence degree {0} must be even and at least 4")]
    InvalidK(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("palette of {palette} colors exceeds hash domain {domain}")]
    DomainTooSmall { palette: u64, domain: u64 },
    #[error("coloring is not proper")]
    NotProper,
    #[error("enumerating 2^{bits} completions exceeds budget {budget}")]
    EnumerationBudgetExceeded { bits: usize, budget: u64 },
    #[error("{candidates} candidates per chunk exceed {machines} machines")]
    CandidateOverflow { candidates: usize, machines: usize },
    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),
    #[error(transparent)]
    Hash(#[from] HashError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Potential of one fully committed seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PotentialState {
    pub edge_count: u64,
    /// High-degree vertices outside `Z` with no neighbor in `Z`.
    pub bad_count: u64,
    /// High-degree vertices with no neighbor in `Z`, members of `Z` included.
    pub unhit_count: u64,
    #[serde(serialize_with = "trace::u128_as_string")]
    pub psi: u128,
}

/// Exact expectations under a uniformly random seed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreconditionReport {
    pub seed_bits: usize,
    pub weight: u128,
    pub high_vertices: usize,
    pub expected_edges: Ratio<u128>,
    /// Sum over high-degree vertices of `Pr[u ∉ Z and N(u) ∩ Z = ∅]`.
    pub expected_bad: Ratio<u128>,
    /// Sum over high-degree vertices of `Pr[N(u) ∩ Z = ∅]`.
    pub expected_unhit: Ratio<u128>,
    pub expected_psi: Ratio<u128>,
    /// `E[Ψ] < W`: the fixed seed then leaves no bad vertex.
    pub ok: bool,
}

fn ratio_str(r: &Ratio<u128>) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn ratio_f64(r: &Ratio<u128>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

impl Serialize for PreconditionReport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(None)?;
        m.serialize_entry("expected_bad", &ratio_str(&self.expected_bad))?;
        m.serialize_entry("expected_edges", &ratio_str(&self.expected_edges))?;
        m.serialize_entry("expected_psi", &ratio_str(&self.expected_psi))?;
        m.serialize_entry("expected_psi_approx", &ratio_f64(&self.expected_psi))?;
        m.serialize_entry("expected_unhit", &ratio_str(&self.expected_unhit))?;
        m.serialize_entry("high_vertices", &self.high_vertices)?;
        m.serialize_entry("ok", &self.ok)?;
        m.serialize_entry("seed_bits", &self.seed_bits)?;
        m.serialize_entry("weight", &self.weight.to_string())?;
        m.end()
    }
}

/// Sampler bound to one graph and coloring.
#[derive(Clone, Debug)]
pub struct Derandomizer<'a> {
    graph: &'a Graph,
    coloring: &'a Coloring,
    params: &'a SamplerParams,
    budget: u64,
    terms: TermSet,
}

pub(crate) fn check_inputs(g: &Graph, col: &Coloring, params: &SamplerParams) -> Result<(), DerandError> {
    if !validate_coloring(g, col)? {
        return Err(DerandError::NotProper);
    }
    let domain = params.family().domain_size();
    if col.palette_size() > domain {
        return Err(DerandError::DomainTooSmall {
            palette: col.palette_size(),
            domain,
        });
    }
    Ok(())
}

/// Terms vertex `v` contributes: its edges to higher-numbered neighbors and,
/// when `v` has high degree, its bad event.
pub(crate) fn vertex_terms(g: &Graph, col: &Coloring, params: &SamplerParams, v: usize, terms: &mut TermSet) {
    for &w in g.neighbors(v) {
        if w > v {
            terms.add_pair(col.color(v), col.color(w), 1);
        }
    }
    if g.degree(v) >= params.degree_threshold() {
        let colors = std::iter::once(col.color(v)).chain(g.neighbors(v).iter().map(|&w| col.color(w)));
        terms.add_miss(colors, 1);
    }
}

fn pow2(e: usize) -> Result<u128, DerandError> {
    if e >= 128 {
        Err(DerandError::Overflow("2^r seeds"))
    } else {
        Ok(1u128 << e)
    }
}

impl<'a> Derandomizer<'a> {
    pub fn new(graph: &'a Graph, coloring: &'a Coloring, params: &'a SamplerParams) -> Result<Self, DerandError> {
        check_inputs(graph, coloring, params)?;
        let mut terms = TermSet::new();
        for v in 0..graph.n() {
            vertex_terms(graph, coloring, params, v, &mut terms);
        }
        Ok(Derandomizer {
            graph,
            coloring,
            params,
            budget: DEFAULT_ENUMERATION_BUDGET,
            terms,
        })
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn params(&self) -> &SamplerParams {
        self.params
    }

    pub fn is_high(&self, v: usize) -> bool {
        self.graph.degree(v) >= self.params.degree_threshold()
    }

    pub fn high_vertices(&self) -> VertexSet {
        (0..self.graph.n()).filter(|&v| self.is_high(v)).collect()
    }

    /// `Z`: the vertices whose color falls in bucket 0.
    pub fn sample(&self, seed: &Seed) -> Result<VertexSet, DerandError> {
        let family = self.params.family();
        let mut z = Vec::new();
        for v in 0..self.graph.n() {
            if evaluate(family, seed, self.coloring.color(v))? == 0 {
                z.push(v);
            }
        }
        Ok(VertexSet::from_members(z))
    }

    pub fn psi_of_seed(&self, seed: &Seed) -> Result<PotentialState, DerandError> {
        let mask = self.sample(seed)?.to_mask(self.graph.n());
        let edge_count = self.graph.edges().iter().filter(|&&(u, v)| mask[u] && mask[v]).count() as u64;
        let (mut bad_count, mut unhit_count) = (0u64, 0u64);
        for u in 0..self.graph.n() {
            if self.is_high(u) && !self.graph.neighbors(u).iter().any(|&w| mask[w]) {
                unhit_count += 1;
                if !mask[u] {
                    bad_count += 1;
                }
            }
        }
        let psi = (bad_count as u128)
            .checked_mul(self.params.weight())
            .and_then(|w| w.checked_add(edge_count as u128))
            .ok_or(DerandError::Overflow("potential"))?;
        Ok(PotentialState {
            edge_count,
            bad_count,
            unhit_count,
            psi,
        })
    }

    /// Ψ summed over every completion of `prefix`.
    pub fn conditional_psi_sum(&self, prefix: &Seed) -> Result<u128, DerandError> {
        Ok(self.candidate_sums(prefix, 0)?[0])
    }

    /// Ψ summed over every completion of `prefix` extended by each value of
    /// the next `len` bits.
    pub fn candidate_sums(&self, prefix: &Seed, len: usize) -> Result<Vec<u128>, DerandError> {
        chunk_sums(self.params.family(), &self.terms, prefix, len, self.budget)?
            .iter()
            .map(|s| s.combine(self.params.weight()))
            .collect()
    }

    pub fn check_precondition(&self) -> Result<PreconditionReport, DerandError> {
        let family = self.params.family();
        let prefix = Seed::uncommitted(family);
        let r = family.seed_bits();
        let total = pow2(r)?;
        let sums = chunk_sums(family, &self.terms, &prefix, 0, self.budget)?[0];
        let mut unhit = TermSet::new();
        for u in 0..self.graph.n() {
            if self.is_high(u) {
                unhit.add_miss(self.graph.neighbors(u).iter().map(|&w| self.coloring.color(w)), 1);
            }
        }
        let unhit_sum = chunk_sums(family, &unhit, &prefix, 0, self.budget)?[0].misses;
        let weight = self.params.weight();
        let psi_sum = sums.combine(weight)?;
        let ok = match weight.checked_mul(total) {
            Some(bound) => psi_sum < bound,
            None => true,
        };
        Ok(PreconditionReport {
            seed_bits: r,
            weight,
            high_vertices: self.high_vertices().len(),
            expected_edges: Ratio::new(sums.pairs, total),
            expected_bad: Ratio::new(sums.misses, total),
            expected_unhit: Ratio::new(unhit_sum, total),
            expected_psi: Ratio::new(psi_sum, total),
            ok,
        })
    }

    /// Fixes the seed chunk by chunk, keeping the candidate with the least
    /// conditional sum (smallest value on ties).
    pub fn fix_seed(&self, schedule: &ChunkSchedule) -> Result<(Seed, DerandTrace), DerandError> {
        let family = self.params.family();
        check_schedule(schedule, family.seed_bits())?;
        let mut seed = Seed::uncommitted(family);
        let mut trace = DerandTrace {
            seed_bits: family.seed_bits(),
            initial_sum: self.conditional_psi_sum(&seed)?,
            chunks: Vec::with_capacity(schedule.len()),
        };
        for (index, &(start_bit, bits)) in schedule.ranges().iter().enumerate() {
            let candidate_sums = self.candidate_sums(&seed, bits)?;
            let chosen = argmin(&candidate_sums);
            seed.commit(bits, chosen)?;
            trace.chunks.push(ChunkRecord {
                index,
                start_bit,
                bits,
                candidate_sums,
                chosen,
            });
        }
        Ok((seed, trace))
    }
}

pub(crate) fn check_schedule(schedule: &ChunkSchedule, r: usize) -> Result<(), DerandError> {
    let covered: usize = schedule.ranges().iter().map(|&(_, len)| len).sum();
    if covered != r {
        return Err(DerandError::InvalidArgument(format!(
            "schedule covers {covered} bits, seed has {r}"
        )));
    }
    Ok(())
}

/// First index of the minimum.
pub(crate) fn argmin(sums: &[u128]) -> u64 {
    let mut best = 0;
    for (v, s) in sums.iter().enumerate() {
        if *s < sums[best] {
            best = v;
        }
    }
    best as u64
}

pub fn psi_of_seed(
    g: &Graph,
    col: &Coloring,
    params: &SamplerParams,
    seed: &Seed,
) -> Result<PotentialState, DerandError> {
    Derandomizer::new(g, col, params)?.psi_of_seed(seed)
}

pub fn conditional_psi_sum(
    g: &Graph,
    col: &Coloring,
    params: &SamplerParams,
    prefix: &Seed,
) -> Result<u128, DerandError> {
    Derandomizer::new(g, col, params)?.conditional_psi_sum(prefix)
}

pub fn check_precondition(
    g: &Graph,
    col: &Coloring,
    params: &SamplerParams,
) -> Result<PreconditionReport, DerandError> {
    Derandomizer::new(g, col, params)?.check_precondition()
}

pub fn fix_seed(
    g: &Graph,
    col: &Coloring,
    params: &SamplerParams,
    schedule: &ChunkSchedule,
) -> Result<(Seed, DerandTrace), DerandError> {
    Derandomizer::new(g, col, params)?.fix_seed(schedule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::{complete, cycle, path, star};
    use crate::kwise::FamilyParams;

    fn params(k: usize, b: u32, out: u32, threshold: usize, weight: u128) -> SamplerParams {
        let family = FamilyParams::new(k, b, out, 1 << b).unwrap();
        SamplerParams::new(family, Epsilon::ONE_THIRD, 1, threshold, weight).unwrap()
    }

    fn all_seeds(p: &SamplerParams) -> impl Iterator<Item = Seed> + '_ {
        (0..1u128 << p.seed_bits()).map(move |i| Seed::from_index(p.family(), i).unwrap())
    }

    #[test]
    fn single_edge_instance() {
        let g = path(2);
        let col = Coloring::new(4, vec![1, 2]).unwrap();
        let p = params(2, 2, 1, 5, 16);
        let d = Derandomizer::new(&g, &col, &p).unwrap();
        assert_eq!(d.conditional_psi_sum(&Seed::uncommitted(p.family())).unwrap(), 4);
        let report = d.check_precondition().unwrap();
        assert_eq!(report.expected_edges, Ratio::new(1, 4));
        assert_eq!(report.expected_bad, Ratio::from_integer(0));
        assert!(report.ok);
        let (seed, trace) = d.fix_seed(&ChunkSchedule::new(4, 1).unwrap()).unwrap();
        assert_eq!(d.psi_of_seed(&seed).unwrap().psi, 0);
        assert_eq!(trace.chunks.len(), 4);
    }

    #[test]
    fn extreme_seeds() {
        let g = star(4);
        let col = Coloring::identity(5);
        let p = params(2, 3, 1, 3, 1000);
        let d = Derandomizer::new(&g, &col, &p).unwrap();
        let zero = Seed::from_coefficients(p.family(), vec![0, 0]).unwrap();
        assert_eq!(
            d.psi_of_seed(&zero).unwrap(),
            PotentialState {
                edge_count: 4,
                bad_count: 0,
                unhit_count: 0,
                psi: 4
            }
        );
        let one = Seed::from_coefficients(p.family(), vec![1, 0]).unwrap();
        assert_eq!(
            d.psi_of_seed(&one).unwrap(),
            PotentialState {
                edge_count: 0,
                bad_count: 1,
                unhit_count: 1,
                psi: 1000
            }
        );
    }

    #[test]
    fn fully_fixed_prefix_is_the_seed_value() {
        let g = cycle(6);
        let col = Coloring::identity(6);
        let p = params(2, 3, 1, 2, 50);
        let d = Derandomizer::new(&g, &col, &p).unwrap();
        for seed in all_seeds(&p) {
            assert_eq!(d.conditional_psi_sum(&seed).unwrap(), d.psi_of_seed(&seed).unwrap().psi);
        }
    }

    #[test]
    fn sums_match_enumeration_and_split_exactly() {
        let g = complete(5);
        let col = Coloring::identity(5);
        let p = params(3, 3, 1, 4, 7);
        let d = Derandomizer::new(&g, &col, &p).unwrap();
        let brute: u128 = all_seeds(&p).map(|s| d.psi_of_seed(&s).unwrap().psi).sum();
        let root = Seed::uncommitted(p.family());
        assert_eq!(d.conditional_psi_sum(&root).unwrap(), brute);
        for j in 0..p.seed_bits() {
            let prefix = root.extended(j, (0b1_0110_1101 >> (9 - j)) as u64).unwrap();
            let kids = d.candidate_sums(&prefix, 1).unwrap();
            assert_eq!(kids[0] + kids[1], d.conditional_psi_sum(&prefix).unwrap());
        }
    }

    #[test]
    fn expected_edges_is_m_over_f_squared() {
        let g = complete(6);
        let col = Coloring::identity(6);
        let p = params(2, 3, 1, 100, 16);
        let report = check_precondition(&g, &col, &p).unwrap();
        assert_eq!(report.expected_edges, Ratio::new(15, 4));
        assert_eq!(report.high_vertices, 0);
        assert!(report.ok);
    }

    #[test]
    fn star_center_miss_probability() {
        // f = 2 with 4 leaves and k = 8 >= 5 points: full independence
        let g = star(4);
        let col = Coloring::identity(5);
        let p = params(8, 3, 1, 4, 1 << 20);
        let report = check_precondition(&g, &col, &p).unwrap();
        assert_eq!(report.expected_unhit, Ratio::new(1, 16));
        assert_eq!(report.expected_bad, Ratio::new(1, 32));
    }

    #[test]
    fn fix_seed_meets_expectation_and_tie_breaks_low() {
        let g = cycle(7);
        let col = Coloring::new(3, vec![0, 1, 0, 1, 0, 1, 2]).unwrap();
        let p = params(2, 2, 1, 2, 3);
        let d = Derandomizer::new(&g, &col, &p).unwrap();
        let (seed, trace) = d.fix_seed(&ChunkSchedule::new(4, 2).unwrap()).unwrap();
        let final_psi = d.psi_of_seed(&seed).unwrap().psi;
        assert!(final_psi << 4 <= trace.initial_sum);
        for c in &trace.chunks {
            let min = *c.candidate_sums.iter().min().unwrap();
            assert_eq!(
                c.chosen as usize,
                c.candidate_sums.iter().position(|&s| s == min).unwrap()
            );
        }
        assert_eq!(trace.chunks.last().unwrap().chosen_sum(), final_psi);
    }

    #[test]
    fn one_vertex_graph() {
        let g = Graph::empty(1);
        let col = Coloring::identity(1);
        let p = params(2, 1, 1, 1, 1);
        let (seed, _) = fix_seed(&g, &col, &p, &ChunkSchedule::new(2, 1).unwrap()).unwrap();
        assert_eq!(psi_of_seed(&g, &col, &p, &seed).unwrap().psi, 0);
    }

    #[test]
    fn input_validation() {
        let g = path(3);
        let p = params(2, 2, 1, 2, 1);
        let improper = Coloring::new(3, vec![0, 0, 1]).unwrap();
        assert_eq!(
            Derandomizer::new(&g, &improper, &p).unwrap_err(),
            DerandError::NotProper
        );
        let wide = Coloring::new(9, vec![0, 8, 1]).unwrap();
        assert_eq!(
            Derandomizer::new(&g, &wide, &p).unwrap_err(),
            DerandError::DomainTooSmall { palette: 9, domain: 4 }
        );
        let col = Coloring::identity(3);
        assert!(fix_seed(&g, &col, &p, &ChunkSchedule::new(3, 1).unwrap()).is_err());
    }
}
