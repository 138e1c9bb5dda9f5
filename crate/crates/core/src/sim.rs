//! Lock-step simulator for the linear-memory MPC and Congested Clique
//! models.
//!
//! Every round each machine hands the simulator an outbox; the simulator
//! checks the model's caps, records per-machine word counts and delivers
//! inboxes sorted by sender. Messages a machine addresses to itself are
//! local and never metered. Local computation is free.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, VertexSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Linear-memory MPC: `S = Õ(n)` words per machine, per-round send and
    /// receive volume capped at `S`.
    Mpc,
    /// Congested Clique: one word per ordered machine pair per round.
    Clique,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Mpc => "mpc",
            ModelKind::Clique => "clique",
        })
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mpc" => Ok(ModelKind::Mpc),
            "clique" => Ok(ModelKind::Clique),
            other => Err(format!("unknown model {other:?} (expected mpc or clique)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CapacityKind {
    Send,
    Receive,
    Memory,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("round {round}: machine {machine} {kind:?} volume {words} exceeds capacity {capacity}")]
    CapacityViolation {
        round: usize,
        machine: usize,
        words: usize,
        capacity: usize,
        kind: CapacityKind,
    },
    #[error("round {round}: {words} words from machine {from} to {to} exceed the per-pair cap {cap}")]
    BandwidthViolation {
        round: usize,
        from: usize,
        to: usize,
        words: usize,
        cap: usize,
    },
    #[error("round {round}: machine {machine} does not exist")]
    UnknownMachine { round: usize, machine: usize },
    #[error("expected {expected} programs, got {got}")]
    ProgramCount { expected: usize, got: usize },
    #[error("round limit {0} reached")]
    RoundLimit(usize),
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelConfig {
    pub mode: ModelKind,
    pub machine_count: usize,
    /// Per-machine memory `S` in words; enforced in MPC mode only.
    pub memory_words: usize,
    pub word_bits: u32,
    /// Words per ordered pair per round; enforced in Clique mode only.
    pub pair_cap_words: usize,
    /// Rounds charged per batch of the routing primitive in Clique mode.
    pub routing_rounds: usize,
    pub max_rounds: usize,
}

pub const DEFAULT_MEMORY_CONST: f64 = 4.0;
pub const DEFAULT_ROUTING_ROUNDS: usize = 2;

fn word_bits_for(n: usize) -> u32 {
    (usize::BITS - n.max(2).saturating_sub(1).leading_zeros()).max(1)
}

impl ModelConfig {
    /// MPC with one machine per vertex and `S = ceil(c n log2 n)` words.
    pub fn mpc(n: usize, memory_const: f64) -> Result<Self, SimError> {
        if memory_const.is_nan() || memory_const <= 0.0 {
            return Err(SimError::InvalidConfig("memory constant must be positive".into()));
        }
        let log = (n.max(2) as f64).log2();
        Ok(ModelConfig {
            mode: ModelKind::Mpc,
            machine_count: n.max(1),
            memory_words: (memory_const * n.max(1) as f64 * log).ceil() as usize,
            word_bits: word_bits_for(n),
            pair_cap_words: usize::MAX,
            routing_rounds: 1,
            max_rounds: 1_000_000,
        })
    }

    pub fn clique(n: usize) -> Self {
        ModelConfig {
            mode: ModelKind::Clique,
            machine_count: n.max(1),
            memory_words: usize::MAX,
            word_bits: word_bits_for(n),
            pair_cap_words: 1,
            routing_rounds: DEFAULT_ROUTING_ROUNDS,
            max_rounds: 1_000_000,
        }
    }

    pub fn for_mode(mode: ModelKind, n: usize, memory_const: f64) -> Result<Self, SimError> {
        match mode {
            ModelKind::Mpc => Self::mpc(n, memory_const),
            ModelKind::Clique => Ok(Self::clique(n)),
        }
    }

    pub fn with_routing_rounds(mut self, rounds: usize) -> Self {
        if self.mode == ModelKind::Clique {
            self.routing_rounds = rounds.max(1);
        }
        self
    }

    pub fn leader(&self) -> usize {
        0
    }
}

/// Anything that can travel between machines, measured in words.
pub trait Payload {
    fn words(&self) -> usize;
}

impl Payload for u64 {
    fn words(&self) -> usize {
        1
    }
}

impl Payload for u128 {
    fn words(&self) -> usize {
        1
    }
}

impl<T: Payload> Payload for Vec<T> {
    fn words(&self) -> usize {
        self.iter().map(Payload::words).sum()
    }
}

/// Per-round accounting. Vectors are indexed by machine.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoundRecord {
    pub round: usize,
    pub phase: String,
    pub sent: Vec<usize>,
    pub received: Vec<usize>,
    pub peak_memory: Vec<usize>,
    pub max_pair_words: usize,
    /// Set on the first round of a routed batch: number of batches, each
    /// moving at most `machine_count - 1` words into or out of a machine.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub routed_batches: Option<usize>,
    /// Continuation rounds charged by the routing primitive.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub relay: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SimTranscript {
    pub rounds: Vec<RoundRecord>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TranscriptSummary {
    pub total_rounds: usize,
    pub total_words: usize,
    pub max_sent: usize,
    pub max_received: usize,
    pub peak_memory: usize,
    pub rounds_by_phase: BTreeMap<String, usize>,
}

impl SimTranscript {
    pub fn total_rounds(&self) -> usize {
        self.rounds.len()
    }

    pub fn rounds_in_phase(&self, phase: &str) -> usize {
        self.rounds.iter().filter(|r| r.phase == phase).count()
    }

    pub fn summary(&self) -> TranscriptSummary {
        let mut rounds_by_phase = BTreeMap::new();
        for r in &self.rounds {
            *rounds_by_phase.entry(r.phase.clone()).or_insert(0) += 1;
        }
        let max_of = |f: fn(&RoundRecord) -> &Vec<usize>| {
            self.rounds.iter().flat_map(|r| f(r).iter().copied()).max().unwrap_or(0)
        };
        TranscriptSummary {
            total_rounds: self.rounds.len(),
            total_words: self.rounds.iter().map(|r| r.sent.iter().sum::<usize>()).sum(),
            max_sent: max_of(|r| &r.sent),
            max_received: max_of(|r| &r.received),
            peak_memory: max_of(|r| &r.peak_memory),
            rounds_by_phase,
        }
    }

    /// One JSON object per round.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.rounds {
            out.push_str(&serde_json::to_string(r).expect("round records serialize"));
            out.push('\n');
        }
        out
    }

    /// Replays the recorded volumes against the caps of `config`.
    pub fn audit(&self, config: &ModelConfig) -> Result<(), SimError> {
        let spread = config.machine_count.saturating_sub(1).max(1);
        for r in &self.rounds {
            let sent_total: usize = r.sent.iter().sum();
            let received_total: usize = r.received.iter().sum();
            if sent_total != received_total {
                return Err(SimError::InvalidConfig(format!(
                    "round {}: {sent_total} words sent but {received_total} received",
                    r.round
                )));
            }
            for m in 0..r.sent.len() {
                if let Some(batches) = r.routed_batches {
                    for (words, kind) in [(r.sent[m], CapacityKind::Send), (r.received[m], CapacityKind::Receive)] {
                        if words > batches * spread {
                            return Err(SimError::CapacityViolation {
                                round: r.round,
                                machine: m,
                                words,
                                capacity: batches * spread,
                                kind,
                            });
                        }
                    }
                }
                if config.mode == ModelKind::Mpc {
                    for (words, kind) in [
                        (r.sent[m], CapacityKind::Send),
                        (r.received[m], CapacityKind::Receive),
                        (r.peak_memory[m], CapacityKind::Memory),
                    ] {
                        if words > config.memory_words {
                            return Err(SimError::CapacityViolation {
                                round: r.round,
                                machine: m,
                                words,
                                capacity: config.memory_words,
                                kind,
                            });
                        }
                    }
                }
            }
            if config.mode == ModelKind::Clique
                && r.routed_batches.is_none()
                && !r.relay
                && r.max_pair_words > config.pair_cap_words
            {
                return Err(SimError::BandwidthViolation {
                    round: r.round,
                    from: 0,
                    to: 0,
                    words: r.max_pair_words,
                    cap: config.pair_cap_words,
                });
            }
        }
        Ok(())
    }
}

pub type Outbox<M> = Vec<(usize, M)>;
pub type Inbox<M> = Vec<(usize, M)>;

/// A deterministic per-machine program driven in lock step.
pub trait NodeProgram: Send {
    type Msg: Payload + Send;
    type Output;

    /// Messages to send in `round` (1-based within this run).
    fn send(&mut self, round: usize) -> Outbox<Self::Msg>;
    /// Messages delivered at the end of `round`, sorted by sender.
    fn receive(&mut self, round: usize, inbox: Inbox<Self::Msg>);
    fn is_done(&self) -> bool;
    /// Words of local state held between rounds.
    fn memory_words(&self) -> usize {
        0
    }
    fn into_output(self) -> Self::Output;
}

#[derive(Clone, Debug)]
pub struct Simulator {
    config: ModelConfig,
    transcript: SimTranscript,
}

impl Simulator {
    pub fn new(config: ModelConfig) -> Self {
        Simulator {
            config,
            transcript: SimTranscript::default(),
        }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn transcript(&self) -> &SimTranscript {
        &self.transcript
    }

    pub fn into_transcript(self) -> SimTranscript {
        self.transcript
    }

    pub fn rounds(&self) -> usize {
        self.transcript.rounds.len()
    }

    fn next_round(&self) -> usize {
        self.transcript.rounds.len() + 1
    }

    fn check_round_limit(&self) -> Result<(), SimError> {
        if self.transcript.rounds.len() >= self.config.max_rounds {
            Err(SimError::RoundLimit(self.config.max_rounds))
        } else {
            Ok(())
        }
    }

    /// Charges `count` silent rounds (all machines idle or computing).
    pub fn idle(&mut self, phase: &str, count: usize) -> Result<(), SimError> {
        let n = self.config.machine_count;
        for _ in 0..count {
            self.check_round_limit()?;
            let round = self.next_round();
            self.transcript.rounds.push(RoundRecord {
                round,
                phase: phase.to_owned(),
                sent: vec![0; n],
                received: vec![0; n],
                peak_memory: vec![0; n],
                max_pair_words: 0,
                routed_batches: None,
                relay: false,
            });
        }
        Ok(())
    }

    /// Meters and delivers one synchronous round. `resident[m]` is the
    /// memory machine `m` holds before delivery (empty slice: zero).
    pub fn exchange<M: Payload>(
        &mut self,
        phase: &str,
        outboxes: Vec<Outbox<M>>,
        resident: &[usize],
    ) -> Result<Vec<Inbox<M>>, SimError> {
        self.deliver(phase, outboxes, resident, false)
    }

    /// Routing primitive. In MPC this is a single exchange; in the Clique it
    /// is charged `routing_rounds` per batch, where a batch moves at most
    /// `machine_count - 1` words into and out of each machine.
    pub fn route<M: Payload>(
        &mut self,
        phase: &str,
        outboxes: Vec<Outbox<M>>,
        resident: &[usize],
    ) -> Result<Vec<Inbox<M>>, SimError> {
        match self.config.mode {
            ModelKind::Mpc => self.deliver(phase, outboxes, resident, false),
            ModelKind::Clique => self.deliver(phase, outboxes, resident, true),
        }
    }

    fn deliver<M: Payload>(
        &mut self,
        phase: &str,
        outboxes: Vec<Outbox<M>>,
        resident: &[usize],
        routed: bool,
    ) -> Result<Vec<Inbox<M>>, SimError> {
        self.check_round_limit()?;
        let n = self.config.machine_count;
        if outboxes.len() != n {
            return Err(SimError::ProgramCount {
                expected: n,
                got: outboxes.len(),
            });
        }
        let round = self.next_round();
        let mut sent = vec![0usize; n];
        let mut received = vec![0usize; n];
        let mut pair_words: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut inboxes: Vec<Inbox<M>> = (0..n).map(|_| Vec::new()).collect();
        for (from, outbox) in outboxes.into_iter().enumerate() {
            for (to, msg) in outbox {
                if to >= n {
                    return Err(SimError::UnknownMachine { round, machine: to });
                }
                if to != from {
                    let w = msg.words();
                    sent[from] += w;
                    received[to] += w;
                    *pair_words.entry((from, to)).or_insert(0) += w;
                }
                inboxes[to].push((from, msg));
            }
        }
        let peak_memory: Vec<usize> = (0..n)
            .map(|m| resident.get(m).copied().unwrap_or(0) + received[m])
            .collect();
        let max_pair = pair_words.values().copied().max().unwrap_or(0);

        let spread = n.saturating_sub(1).max(1);
        let batches = if routed {
            let worst = sent.iter().chain(received.iter()).copied().max().unwrap_or(0);
            worst.div_ceil(spread).max(1)
        } else {
            1
        };

        if self.config.mode == ModelKind::Mpc {
            let cap = self.config.memory_words;
            for m in 0..n {
                for (words, kind) in [
                    (sent[m], CapacityKind::Send),
                    (received[m], CapacityKind::Receive),
                    (peak_memory[m], CapacityKind::Memory),
                ] {
                    if words > cap {
                        return Err(SimError::CapacityViolation {
                            round,
                            machine: m,
                            words,
                            capacity: cap,
                            kind,
                        });
                    }
                }
            }
        } else if !routed {
            if let Some((&(from, to), &words)) = pair_words.iter().find(|(_, &w)| w > self.config.pair_cap_words) {
                return Err(SimError::BandwidthViolation {
                    round,
                    from,
                    to,
                    words,
                    cap: self.config.pair_cap_words,
                });
            }
        }

        let charged = if routed {
            batches * self.config.routing_rounds
        } else {
            1
        };
        if self.transcript.rounds.len() + charged > self.config.max_rounds {
            return Err(SimError::RoundLimit(self.config.max_rounds));
        }
        self.transcript.rounds.push(RoundRecord {
            round,
            phase: phase.to_owned(),
            sent,
            received,
            peak_memory,
            max_pair_words: max_pair,
            routed_batches: routed.then_some(batches),
            relay: false,
        });
        for _ in 1..charged {
            let round = self.next_round();
            self.transcript.rounds.push(RoundRecord {
                round,
                phase: phase.to_owned(),
                sent: vec![0; n],
                received: vec![0; n],
                peak_memory: vec![0; n],
                max_pair_words: 0,
                routed_batches: None,
                relay: true,
            });
        }
        Ok(inboxes)
    }

    /// Drives `programs` (one per machine) until all are done; returns the
    /// number of rounds used.
    pub fn run<P: NodeProgram>(&mut self, phase: &str, programs: &mut [P]) -> Result<usize, SimError> {
        if programs.len() != self.config.machine_count {
            return Err(SimError::ProgramCount {
                expected: self.config.machine_count,
                got: programs.len(),
            });
        }
        let mut local_round = 0;
        while programs.iter().any(|p| !p.is_done()) {
            local_round += 1;
            let outboxes: Vec<Outbox<P::Msg>> = programs
                .par_iter_mut()
                .map(|p| if p.is_done() { Vec::new() } else { p.send(local_round) })
                .collect();
            let resident: Vec<usize> = programs.iter().map(|p| p.memory_words()).collect();
            let inboxes = self.exchange(phase, outboxes, &resident)?;
            programs
                .par_iter_mut()
                .zip(inboxes)
                .for_each(|(p, inbox)| p.receive(local_round, inbox));
        }
        Ok(local_round)
    }
}

/// Runs programs on a fresh simulator.
pub fn run_program<P: NodeProgram>(
    config: ModelConfig,
    mut programs: Vec<P>,
) -> Result<(Vec<P::Output>, SimTranscript), SimError> {
    let mut sim = Simulator::new(config);
    sim.run("program", &mut programs)?;
    let outputs = programs.into_iter().map(NodeProgram::into_output).collect();
    Ok((outputs, sim.into_transcript()))
}

/// Ships `G[s]` to machine `target`: every member sends its identifier and
/// its induced edges to higher-numbered members, one word each. Vertex `v`
/// of `g` lives on machine `placement[v]`. Returns the rounds charged.
pub fn gather_subgraph(
    sim: &mut Simulator,
    phase: &str,
    g: &Graph,
    s: &VertexSet,
    target: usize,
    placement: &[usize],
) -> Result<usize, SimError> {
    let n = sim.config().machine_count;
    let mask = s.to_mask(g.n());
    let mut outboxes: Vec<Outbox<Vec<u64>>> = (0..n).map(|_| Vec::new()).collect();
    let mut resident = vec![0usize; n];
    for v in s.iter() {
        let mut words = vec![v as u64];
        words.extend(g.neighbors(v).iter().filter(|&&w| w > v && mask[w]).map(|&w| w as u64));
        let machine = placement[v];
        if machine == target {
            resident[target] += words.len();
        }
        outboxes[machine].push((target, words));
    }
    let before = sim.rounds();
    sim.route(phase, outboxes, &resident)?;
    Ok(sim.rounds() - before)
}
