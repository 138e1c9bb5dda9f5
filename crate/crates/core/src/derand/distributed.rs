//! Seed fixing run as a node program. Per chunk:
//!
//! 1. every machine sends, to the machine numbered `v`, its share of the
//!    conditional sum for candidate `v`;
//! 2. machine `v` adds the shares and forwards the total to the leader;
//! 3. the leader broadcasts the minimizing candidate.
//!
//! Shares partition the terms of the centralized potential, so the totals
//! and therefore the chosen seed are identical to [`super::fix_seed`].

use super::{argmin, check_inputs, check_schedule, chunk_sums, vertex_terms, ChunkRecord, DerandError, DerandTrace};
use super::{ChunkSchedule, SamplerParams, TermSet};
use crate::graph::{Coloring, Graph};
use crate::kwise::{FamilyParams, Seed};
use crate::sim::{Inbox, NodeProgram, Outbox, Payload, Simulator};

pub const DISTRIBUTED_ROUNDS_PER_CHUNK: usize = 3;

#[derive(Clone, Copy, Debug)]
pub enum ChunkMsg {
    Share(u128),
    Total(u128),
    Choice(u64),
}

impl Payload for ChunkMsg {
    fn words(&self) -> usize {
        1
    }
}

struct ChunkNode<'a> {
    id: usize,
    machines: usize,
    leader: usize,
    candidates: usize,
    family: &'a FamilyParams,
    weight: u128,
    budget: u64,
    terms: &'a TermSet,
    prefix: &'a Seed,
    len: usize,
    shares: Vec<u128>,
    assigned: u128,
    totals: Vec<u128>,
    chosen: Option<u64>,
    round: usize,
    error: Option<DerandError>,
}

impl ChunkNode<'_> {
    fn fail(&mut self, e: DerandError) {
        if self.error.is_none() {
            self.error = Some(e);
        }
    }

    fn compute_shares(&mut self) -> Result<Vec<u128>, DerandError> {
        if self.terms.is_empty() {
            return Ok(vec![0; self.candidates]);
        }
        chunk_sums(self.family, self.terms, self.prefix, self.len, self.budget)?
            .iter()
            .map(|s| s.combine(self.weight))
            .collect()
    }
}

impl NodeProgram for ChunkNode<'_> {
    type Msg = ChunkMsg;
    type Output = (Option<u64>, Vec<u128>, Option<DerandError>);

    fn send(&mut self, round: usize) -> Outbox<ChunkMsg> {
        match round {
            1 => {
                self.shares = match self.compute_shares() {
                    Ok(s) => s,
                    Err(e) => {
                        self.fail(e);
                        vec![0; self.candidates]
                    }
                };
                if self.terms.is_empty() {
                    return Vec::new();
                }
                (0..self.candidates)
                    .filter(|&v| v != self.id)
                    .map(|v| (v, ChunkMsg::Share(self.shares[v])))
                    .collect()
            }
            2 if self.id < self.candidates && self.id != self.leader => {
                vec![(self.leader, ChunkMsg::Total(self.assigned))]
            }
            3 if self.id == self.leader => {
                let choice = argmin(&self.totals);
                self.chosen = Some(choice);
                (0..self.machines)
                    .filter(|&m| m != self.id)
                    .map(|m| (m, ChunkMsg::Choice(choice)))
                    .collect()
            }
            _ => Vec::new(),
        }
    }

    fn receive(&mut self, round: usize, inbox: Inbox<ChunkMsg>) {
        self.round = round;
        match round {
            1 if self.id < self.candidates => {
                let mut total = self.shares[self.id];
                for (_, msg) in inbox {
                    if let ChunkMsg::Share(x) = msg {
                        total = match total.checked_add(x) {
                            Some(t) => t,
                            None => {
                                self.fail(DerandError::Overflow("candidate total"));
                                total
                            }
                        };
                    }
                }
                self.assigned = total;
            }
            2 if self.id == self.leader => {
                self.totals = vec![0; self.candidates];
                self.totals[self.leader] = self.assigned;
                for (from, msg) in inbox {
                    if let ChunkMsg::Total(x) = msg {
                        self.totals[from] = x;
                    }
                }
            }
            3 => {
                for (_, msg) in inbox {
                    if let ChunkMsg::Choice(c) = msg {
                        self.chosen = Some(c);
                    }
                }
            }
            _ => {}
        }
    }

    fn is_done(&self) -> bool {
        self.round >= DISTRIBUTED_ROUNDS_PER_CHUNK
    }

    fn memory_words(&self) -> usize {
        self.terms.words() + self.shares.len() + self.totals.len() + 1
    }

    fn into_output(self) -> Self::Output {
        (self.chosen, self.totals, self.error)
    }
}

/// Runs seed fixing on `sim`. Vertex `v` of `g` lives on machine
/// `placement[v]`; machine 0 leads. Charges exactly
/// [`DISTRIBUTED_ROUNDS_PER_CHUNK`] rounds per chunk.
pub fn distributed_fix_seed(
    sim: &mut Simulator,
    g: &Graph,
    col: &Coloring,
    params: &SamplerParams,
    schedule: &ChunkSchedule,
    placement: &[usize],
    budget: u64,
) -> Result<(Seed, DerandTrace), DerandError> {
    check_inputs(g, col, params)?;
    let family = params.family();
    check_schedule(schedule, family.seed_bits())?;
    let machines = sim.config().machine_count;
    let candidates = 1usize << schedule.max_len();
    if candidates > machines {
        return Err(DerandError::CandidateOverflow { candidates, machines });
    }
    if placement.len() != g.n() || placement.iter().any(|&m| m >= machines) {
        return Err(DerandError::InvalidArgument(
            "vertex placement does not match the machines".into(),
        ));
    }
    let mut shares = vec![TermSet::new(); machines];
    for v in 0..g.n() {
        vertex_terms(g, col, params, v, &mut shares[placement[v]]);
    }
    let leader = sim.config().leader();

    let mut seed = Seed::uncommitted(family);
    let mut trace = DerandTrace {
        seed_bits: family.seed_bits(),
        initial_sum: 0,
        chunks: Vec::with_capacity(schedule.len()),
    };
    for (index, &(start_bit, bits)) in schedule.ranges().iter().enumerate() {
        let mut programs: Vec<ChunkNode> = shares
            .iter()
            .enumerate()
            .map(|(id, terms)| ChunkNode {
                id,
                machines,
                leader,
                candidates: 1 << bits,
                family,
                weight: params.weight(),
                budget,
                terms,
                prefix: &seed,
                len: bits,
                shares: Vec::new(),
                assigned: 0,
                totals: Vec::new(),
                chosen: None,
                round: 0,
                error: None,
            })
            .collect();
        sim.run("derand", &mut programs)?;
        let mut chosen = Vec::with_capacity(machines);
        let mut totals = Vec::new();
        for (id, p) in programs.into_iter().enumerate() {
            let (c, t, err) = p.into_output();
            if let Some(e) = err {
                return Err(e);
            }
            if id == leader {
                totals = t;
            }
            chosen.push(c);
        }
        let choice = chosen[leader].expect("leader chooses after three rounds");
        debug_assert!(chosen.iter().all(|&c| c == Some(choice)));
        if index == 0 {
            trace.initial_sum = totals
                .iter()
                .try_fold(0u128, |a, &b| a.checked_add(b))
                .ok_or(DerandError::Overflow("initial sum"))?;
        }
        seed.commit(bits, choice)?;
        trace.chunks.push(ChunkRecord {
            index,
            start_bit,
            bits,
            candidate_sums: totals,
            chosen: choice,
        });
    }
    Ok((seed, trace))
}
