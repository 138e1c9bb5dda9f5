//! Brute-force checks over the whole seed space.

use num_bigint::BigUint;
use num_rational::Ratio;
use rayon::prelude::*;
use thiserror::Error;

use crate::derand::{DerandError, DerandTrace, Derandomizer, PotentialState, SamplerParams};
use crate::graph::{Coloring, Graph};
use crate::kwise::{FamilyParams, Seed};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("enumerating 2^{bits} seeds exceeds budget {budget}")]
    BudgetExceeded { bits: usize, budget: u64 },
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Derand(#[from] DerandError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Statistic {
    EdgeCount,
    BadCount,
    UnhitCount,
    Psi,
}

impl Statistic {
    fn of(&self, s: &PotentialState) -> u128 {
        match self {
            Statistic::EdgeCount => s.edge_count as u128,
            Statistic::BadCount => s.bad_count as u128,
            Statistic::UnhitCount => s.unhit_count as u128,
            Statistic::Psi => s.psi,
        }
    }
}

fn check_budget(bits: usize, budget: u64) -> Result<(), OracleError> {
    if bits >= 64 || (1u64 << bits) > budget {
        Err(OracleError::BudgetExceeded { bits, budget })
    } else {
        Ok(())
    }
}

/// Exact mean of `stat` over all `2^r` seeds, evaluating each seed directly.
pub fn enumerate_expectation(
    g: &Graph,
    col: &Coloring,
    params: &SamplerParams,
    stat: Statistic,
    budget: u64,
) -> Result<Ratio<u128>, OracleError> {
    let r = params.seed_bits();
    check_budget(r, budget)?;
    let d = Derandomizer::new(g, col, params)?;
    let family = params.family();
    let total = (0..1u64 << r)
        .into_par_iter()
        .map(|i| -> Result<u128, OracleError> {
            let seed = Seed::from_index(family, i as u128).map_err(DerandError::from)?;
            Ok(stat.of(&d.psi_of_seed(&seed)?))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(Ratio::new(total, 1u128 << r))
}

fn check_shape(trace: &DerandTrace) -> Result<(), OracleError> {
    let mut next = 0;
    for (i, c) in trace.chunks.iter().enumerate() {
        if c.index != i || c.start_bit != next {
            return Err(OracleError::InvalidTrace(format!("chunk {i} is out of sequence")));
        }
        if c.bits == 0 || c.bits >= usize::BITS as usize || c.candidate_sums.len() != 1 << c.bits {
            return Err(OracleError::InvalidTrace(format!(
                "chunk {i} lists {} sums for {} bits",
                c.candidate_sums.len(),
                c.bits
            )));
        }
        if c.chosen as usize >= c.candidate_sums.len() {
            return Err(OracleError::InvalidTrace(format!(
                "chunk {i} chose {} out of range",
                c.chosen
            )));
        }
        next += c.bits;
    }
    if !trace.chunks.is_empty() && next != trace.seed_bits {
        return Err(OracleError::InvalidTrace(format!(
            "chunks cover {next} of {} seed bits",
            trace.seed_bits
        )));
    }
    Ok(())
}

/// True iff every chunk picks a minimal candidate and the normalized
/// conditional expectation never increases along the chosen path.
pub fn verify_monotone_trace(trace: &DerandTrace) -> Result<bool, OracleError> {
    check_shape(trace)?;
    for (i, c) in trace.chunks.iter().enumerate() {
        let chosen = c.chosen_sum();
        if c.candidate_sums.iter().any(|&s| s < chosen) {
            return Ok(false);
        }
        // chosen / 2^(r - end) <= parent / 2^(r - start)
        let scaled = BigUint::from(chosen) << c.bits;
        if scaled > BigUint::from(trace.parent_sum(i)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// True iff every chunk's candidate sums add up to its parent sum exactly.
pub fn verify_martingale(trace: &DerandTrace) -> Result<bool, OracleError> {
    check_shape(trace)?;
    Ok(trace.chunks.iter().enumerate().all(|(i, c)| {
        let sum: BigUint = c.candidate_sums.iter().map(|&s| BigUint::from(s)).sum();
        sum == BigUint::from(trace.parent_sum(i))
    }))
}

fn subsets(domain: u64, size: usize) -> Vec<Vec<u64>> {
    fn rec(start: u64, domain: u64, size: usize, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for x in start..domain {
            if domain - x < (size - cur.len()) as u64 {
                break;
            }
            cur.push(x);
            rec(x + 1, domain, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, domain, size, &mut Vec::new(), &mut out);
    out
}

/// True iff every set of at most `level` distinct domain points has an
/// exactly uniform joint bucket law over all seeds.
pub fn verify_kwise_at(params: &FamilyParams, level: usize, budget: u64) -> Result<bool, OracleError> {
    let r = params.seed_bits();
    check_budget(r, budget)?;
    let domain = params.domain_size();
    if level as u64 > domain {
        return Err(OracleError::InvalidArgument(format!(
            "level {level} exceeds domain size {domain}"
        )));
    }
    let d = domain as usize;
    let table: Vec<u8> = (0..1u64 << r)
        .into_par_iter()
        .flat_map_iter(|i| {
            let seed = Seed::from_index(params, i as u128).expect("index fits the seed");
            (0..domain)
                .map(|x| (params.eval_raw(seed.coefficients(), x) & params.bucket_mask()) as u8)
                .collect::<Vec<_>>()
        })
        .collect();
    let f = params.buckets() as usize;
    for size in 1..=level {
        let cells = f.pow(size as u32);
        let seeds = 1usize << r;
        if !seeds.is_multiple_of(cells) {
            return Ok(false);
        }
        let expected = (seeds / cells) as u64;
        let uniform = subsets(domain, size).par_iter().all(|pts| {
            let mut counts = vec![0u64; cells];
            for row in table.chunks_exact(d) {
                let idx = pts.iter().fold(0usize, |acc, &x| acc * f + row[x as usize] as usize);
                counts[idx] += 1;
            }
            counts.iter().all(|&c| c == expected)
        });
        if !uniform {
            return Ok(false);
        }
    }
    Ok(true)
}

/// [`verify_kwise_at`] at the family's own independence degree.
pub fn verify_kwise(params: &FamilyParams, budget: u64) -> Result<bool, OracleError> {
    verify_kwise_at(params, params.k().min(params.domain_size() as usize), budget)
}
