use serde::{Serialize, Serializer};

pub(crate) fn u128_as_string<S: Serializer>(v: &u128, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn u128s_as_strings<S: Serializer>(v: &[u128], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| x.to_string()))
}

/// One step of seed fixing: the scaled conditional sum of every candidate
/// value of the chunk, and the value kept.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ChunkRecord {
    pub index: usize,
    pub start_bit: usize,
    pub bits: usize,
    /// `candidate_sums[v]` sums the potential over all completions of the
    /// prefix extended by `v`.
    #[serde(serialize_with = "u128s_as_strings")]
    pub candidate_sums: Vec<u128>,
    pub chosen: u64,
}

impl ChunkRecord {
    pub fn chosen_sum(&self) -> u128 {
        self.candidate_sums[self.chosen as usize]
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DerandTrace {
    pub seed_bits: usize,
    /// Potential summed over all `2^r` seeds.
    #[serde(serialize_with = "u128_as_string")]
    pub initial_sum: u128,
    pub chunks: Vec<ChunkRecord>,
}

#[derive(Serialize)]
struct ChunkLine<'a> {
    chunk: usize,
    start_bit: usize,
    bits: usize,
    candidates: Vec<u64>,
    #[serde(serialize_with = "u128s_as_strings")]
    sums: &'a [u128],
    chosen: u64,
}

impl DerandTrace {
    /// Sum the chunk was chosen from: the previous chunk's chosen sum, or the
    /// initial sum for the first chunk.
    pub fn parent_sum(&self, i: usize) -> u128 {
        if i == 0 {
            self.initial_sum
        } else {
            self.chunks[i - 1].chosen_sum()
        }
    }

    /// One JSON object per chunk. Sums are decimal strings.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for c in &self.chunks {
            let line = ChunkLine {
                chunk: c.index,
                start_bit: c.start_bit,
                bits: c.bits,
                candidates: (0..c.candidate_sums.len() as u64).collect(),
                sums: &c.candidate_sums,
                chosen: c.chosen,
            };
            out.push_str(&serde_json::to_string(&line).expect("chunk records serialize"));
            out.push('\n');
        }
        out
    }
}
