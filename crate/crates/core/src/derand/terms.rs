//! Exact sums of indicator terms over every completion of a seed prefix.
//!
//! Two kinds of terms appear in the potential:
//!
//! * `pair(x, y)`: both points land in bucket 0. The low bucket bits of
//!   `h(x)` are GF(2)-affine in the seed bits, so the number of completions
//!   satisfying the event is `2^(free - rank)` when the affine system is
//!   consistent and 0 otherwise. No enumeration is needed.
//! * `miss(P)`: no point of `P` lands in bucket 0. When every point of `P`
//!   meets enough fully uncommitted coefficients the law is uniform and the
//!   count has a closed form; otherwise completions are enumerated in Gray
//!   code order over bitsets of bucket bits.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use super::DerandError;
use crate::kwise::{FamilyParams, Seed};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TermSet {
    points: Vec<u64>,
    index: HashMap<u64, usize>,
    pairs: BTreeMap<(usize, usize), u64>,
    misses: BTreeMap<Vec<usize>, u64>,
}

impl TermSet {
    pub fn new() -> Self {
        Self::default()
    }

    fn intern(&mut self, x: u64) -> usize {
        if let Some(&i) = self.index.get(&x) {
            return i;
        }
        self.points.push(x);
        self.index.insert(x, self.points.len() - 1);
        self.points.len() - 1
    }

    /// Adds `mult` copies of the event "`x` and `y` both selected".
    pub fn add_pair(&mut self, x: u64, y: u64, mult: u64) {
        debug_assert_ne!(x, y);
        let (a, b) = (self.intern(x), self.intern(y));
        *self.pairs.entry((a.min(b), a.max(b))).or_insert(0) += mult;
    }

    /// Adds `mult` copies of the event "no point of `xs` selected". Repeated
    /// points collapse.
    pub fn add_miss(&mut self, xs: impl IntoIterator<Item = u64>, mult: u64) {
        let mut ids: Vec<usize> = xs.into_iter().map(|x| self.intern(x)).collect();
        ids.sort_unstable();
        ids.dedup();
        *self.misses.entry(ids).or_insert(0) += mult;
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty() && self.misses.is_empty()
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn miss_count(&self) -> usize {
        self.misses.len()
    }

    /// Storage in words.
    pub fn words(&self) -> usize {
        self.points.len() + 3 * self.pairs.len() + self.misses.keys().map(|p| p.len() + 1).sum::<usize>()
    }
}

/// Per-candidate sums of pair and miss indicators over all completions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TermSums {
    pub pairs: u128,
    pub misses: u128,
}

impl TermSums {
    /// `pairs + weight * misses`.
    pub fn combine(&self, weight: u128) -> Result<u128, DerandError> {
        weight
            .checked_mul(self.misses)
            .and_then(|w| w.checked_add(self.pairs))
            .ok_or(DerandError::Overflow("potential sum"))
    }
}

fn pow2(e: usize) -> Result<u128, DerandError> {
    if e >= 128 {
        Err(DerandError::Overflow("2^e completions"))
    } else {
        Ok(1u128 << e)
    }
}

struct Layout {
    /// First uncommitted bit.
    j: usize,
    /// Chunk length.
    len: usize,
    /// First suffix bit.
    jj: usize,
    r: usize,
    out: u32,
    mask: u64,
}

impl Layout {
    fn suffix(&self) -> usize {
        self.r - self.jj
    }

    /// Value bit of a candidate that sets chunk position `i` (MSB first).
    fn candidate_bit(&self, i: usize) -> usize {
        self.len - 1 - i
    }
}

/// Bucket bits of `h(x)` as an affine function of the free bits.
struct AffinePoint {
    /// Low bits of `h(x)` with every uncommitted bit zero.
    base: u64,
    /// Low bits contributed by each chunk position.
    chunk: Vec<u64>,
    /// Row `l`: the suffix bits that feed bucket bit `l`.
    rows: Vec<Vec<u64>>,
}

fn affine_point(family: &FamilyParams, prefix: &Seed, layout: &Layout, x: u64) -> AffinePoint {
    let base = family.eval_raw(prefix.coefficients(), x) & layout.mask;
    let chunk = (layout.j..layout.jj)
        .map(|p| family.bit_contribution(p, x) & layout.mask)
        .collect();
    let words = layout.suffix().div_ceil(64);
    let mut rows = vec![vec![0u64; words]; layout.out as usize];
    for p in layout.jj..layout.r {
        let c = family.bit_contribution(p, x) & layout.mask;
        let s = p - layout.jj;
        for (l, row) in rows.iter_mut().enumerate() {
            if (c >> l) & 1 == 1 {
                row[s / 64] |= 1u64 << (s % 64);
            }
        }
    }
    AffinePoint { base, chunk, rows }
}

/// Gaussian elimination over GF(2). Returns the rank and, for each row that
/// reduced to zero, the set of original rows summing to zero.
fn eliminate(rows: impl IntoIterator<Item = Vec<u64>>) -> (usize, Vec<u64>) {
    let mut pivots: Vec<(usize, Vec<u64>, u64)> = Vec::new();
    let mut deps = Vec::new();
    for (i, mut row) in rows.into_iter().enumerate() {
        let mut origin = 1u64 << i;
        for (bit, prow, porigin) in &pivots {
            if (row[bit / 64] >> (bit % 64)) & 1 == 1 {
                row.iter_mut().zip(prow).for_each(|(a, b)| *a ^= b);
                origin ^= porigin;
            }
        }
        match row.iter().position(|&w| w != 0) {
            Some(w) => {
                let bit = w * 64 + row[w].trailing_zeros() as usize;
                pivots.push((bit, row, origin));
            }
            None => deps.push(origin),
        }
    }
    (pivots.len(), deps)
}

/// `out[v]` = `base` XOR the contributions of the chunk positions set in `v`.
fn candidate_table(layout: &Layout, base: u64, chunk: &[u64]) -> Vec<u64> {
    let count = 1usize << layout.len;
    let mut table = vec![0u64; count];
    table[0] = base;
    for v in 1..count {
        let t = v.trailing_zeros() as usize;
        let pos = layout.len - 1 - t;
        table[v] = table[v & (v - 1)] ^ chunk[pos];
    }
    table
}

fn pair_sums(family: &FamilyParams, terms: &TermSet, prefix: &Seed, layout: &Layout) -> Result<Vec<u128>, DerandError> {
    let count = 1usize << layout.len;
    let mut used: Vec<usize> = terms.pairs.keys().flat_map(|&(a, b)| [a, b]).collect();
    used.sort_unstable();
    used.dedup();
    let affine: HashMap<usize, (AffinePoint, Vec<u64>)> = used
        .par_iter()
        .map(|&i| {
            let ap = affine_point(family, prefix, layout, terms.points[i]);
            let table = candidate_table(layout, ap.base, &ap.chunk);
            (i, (ap, table))
        })
        .collect();
    let out = layout.out as usize;
    let suffix = layout.suffix();
    terms
        .pairs
        .par_iter()
        .try_fold(
            || vec![0u128; count],
            |mut acc, (&(a, b), &mult)| -> Result<Vec<u128>, DerandError> {
                let (pa, ta) = &affine[&a];
                let (pb, tb) = &affine[&b];
                let (rank, deps) = eliminate(pa.rows.iter().chain(&pb.rows).cloned());
                let each = pow2(suffix - rank)?
                    .checked_mul(mult as u128)
                    .ok_or(DerandError::Overflow("pair sum"))?;
                for (v, slot) in acc.iter_mut().enumerate() {
                    let rhs = ta[v] | tb[v] << out;
                    if deps.iter().all(|d| (rhs & d).count_ones().is_multiple_of(2)) {
                        *slot = slot.checked_add(each).ok_or(DerandError::Overflow("pair sum"))?;
                    }
                }
                Ok(acc)
            },
        )
        .try_reduce(
            || vec![0u128; count],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x = x.checked_add(y).ok_or(DerandError::Overflow("pair sum"))?;
                }
                Ok(a)
            },
        )
}

/// Miss terms whose points see enough fully free coefficients: the bucket
/// values are then uniform and independent.
fn closed_form_miss(layout: &Layout, family: &FamilyParams, points: &[u64]) -> Option<u128> {
    let b = family.field_bits() as usize;
    let first_free = layout.jj.div_ceil(b);
    let free_coeffs = family.k().saturating_sub(first_free);
    if points.len() > free_coeffs || (first_free > 0 && points.contains(&0)) {
        return None;
    }
    let f = family.buckets() as u128;
    let e = layout.suffix() - points.len() * layout.out as usize;
    let mut value = pow2(e).ok()?;
    for _ in 0..points.len() {
        value = value.checked_mul(f - 1)?;
    }
    Some(value)
}

struct MissEnum {
    words: usize,
    out: usize,
    /// `planes[l * words + w]`: bucket bit `l` of the points in word `w`.
    base: Vec<u64>,
    /// Per free position (from `j`), the planes it flips.
    flips: Vec<Vec<u64>>,
    valid: Vec<u64>,
    terms: Vec<(Vec<(usize, u64)>, u64)>,
}

impl MissEnum {
    fn build(
        family: &FamilyParams,
        prefix: &Seed,
        layout: &Layout,
        points: &[u64],
        terms: Vec<(Vec<usize>, u64)>,
    ) -> Self {
        let words = points.len().div_ceil(64).max(1);
        let out = layout.out as usize;
        let mut base = vec![0u64; out * words];
        let mut flips = vec![vec![0u64; out * words]; layout.r - layout.j];
        for (i, &x) in points.iter().enumerate() {
            let (w, bit) = (i / 64, 1u64 << (i % 64));
            let h = family.eval_raw(prefix.coefficients(), x) & layout.mask;
            for l in 0..out {
                if (h >> l) & 1 == 1 {
                    base[l * words + w] |= bit;
                }
            }
            for (p, flip) in (layout.j..layout.r).zip(flips.iter_mut()) {
                let c = family.bit_contribution(p, x) & layout.mask;
                for l in 0..out {
                    if (c >> l) & 1 == 1 {
                        flip[l * words + w] |= bit;
                    }
                }
            }
        }
        let mut valid = vec![0u64; words];
        for i in 0..points.len() {
            valid[i / 64] |= 1u64 << (i % 64);
        }
        let terms = terms
            .into_iter()
            .map(|(ids, mult)| {
                let mut masks: BTreeMap<usize, u64> = BTreeMap::new();
                for i in ids {
                    *masks.entry(i / 64).or_insert(0) |= 1u64 << (i % 64);
                }
                (masks.into_iter().collect(), mult)
            })
            .collect();
        MissEnum {
            words,
            out,
            base,
            flips,
            valid,
            terms,
        }
    }

    fn score(&self, state: &[u64], selected: &mut [u64]) -> u128 {
        for (w, sel) in selected.iter_mut().enumerate() {
            let mut any = 0;
            for l in 0..self.out {
                any |= state[l * self.words + w];
            }
            *sel = !any & self.valid[w];
        }
        self.terms
            .iter()
            .filter(|(masks, _)| masks.iter().all(|&(w, m)| selected[w] & m == 0))
            .map(|&(_, mult)| mult as u128)
            .sum()
    }

    /// Sum over completions, per candidate.
    fn run(&self, layout: &Layout) -> Vec<u128> {
        let suffix = layout.suffix();
        let outer = suffix.min(10usize.saturating_sub(layout.len));
        let inner = suffix - outer;
        let tasks = 1usize << (layout.len + outer);
        let per_task: Vec<u128> = (0..tasks)
            .into_par_iter()
            .map(|t| {
                let v = t >> outer;
                let w = t & ((1usize << outer) - 1);
                let mut state = self.base.clone();
                let flip = |pos: usize, state: &mut [u64]| {
                    state.iter_mut().zip(&self.flips[pos]).for_each(|(a, b)| *a ^= b);
                };
                for i in 0..layout.len {
                    if (v >> layout.candidate_bit(i)) & 1 == 1 {
                        flip(i, &mut state);
                    }
                }
                for o in 0..outer {
                    if (w >> (outer - 1 - o)) & 1 == 1 {
                        flip(layout.len + o, &mut state);
                    }
                }
                let mut selected = vec![0u64; self.words];
                let mut total = self.score(&state, &mut selected);
                for i in 1..1usize << inner {
                    flip(layout.len + outer + i.trailing_zeros() as usize, &mut state);
                    total += self.score(&state, &mut selected);
                }
                total
            })
            .collect();
        per_task.chunks(1 << outer).map(|c| c.iter().sum()).collect()
    }
}

/// Sums of every term over all completions of `prefix` extended by each of
/// the `2^len` candidate values of the next `len` bits. Enumeration of
/// `2^(r - j)` completions is only performed for miss terms without a
/// closed form, and is capped by `budget`.
pub fn chunk_sums(
    family: &FamilyParams,
    terms: &TermSet,
    prefix: &Seed,
    len: usize,
    budget: u64,
) -> Result<Vec<TermSums>, DerandError> {
    let r = family.seed_bits();
    let j = prefix.fixed_bits();
    if j + len > r || len > super::params::MAX_CHUNK_BITS {
        return Err(DerandError::InvalidArgument(format!(
            "chunk of {len} bits after {j} of {r} committed bits"
        )));
    }
    let layout = Layout {
        j,
        len,
        jj: j + len,
        r,
        out: family.bucket_bits(),
        mask: family.bucket_mask(),
    };
    let count = 1usize << len;

    let pairs = if terms.pairs.is_empty() {
        vec![0u128; count]
    } else {
        pair_sums(family, terms, prefix, &layout)?
    };

    let mut fixed_misses = 0u128;
    let mut slow: Vec<(Vec<usize>, u64)> = Vec::new();
    for (ids, &mult) in &terms.misses {
        let xs: Vec<u64> = ids.iter().map(|&i| terms.points[i]).collect();
        match closed_form_miss(&layout, family, &xs) {
            Some(v) => {
                fixed_misses = v
                    .checked_mul(mult as u128)
                    .and_then(|v| v.checked_add(fixed_misses))
                    .ok_or(DerandError::Overflow("miss sum"))?;
            }
            None => slow.push((ids.clone(), mult)),
        }
    }

    let mut misses = vec![fixed_misses; count];
    if !slow.is_empty() {
        let free = r - j;
        if free >= 64 || (1u64 << free) > budget {
            return Err(DerandError::EnumerationBudgetExceeded { bits: free, budget });
        }
        let mut used: Vec<usize> = slow.iter().flat_map(|(ids, _)| ids.iter().copied()).collect();
        used.sort_unstable();
        used.dedup();
        let remap: HashMap<usize, usize> = used.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let points: Vec<u64> = used.iter().map(|&i| terms.points[i]).collect();
        let slow = slow
            .into_iter()
            .map(|(ids, m)| (ids.iter().map(|i| remap[i]).collect(), m))
            .collect();
        let enumerator = MissEnum::build(family, prefix, &layout, &points, slow);
        for (m, add) in misses.iter_mut().zip(enumerator.run(&layout)) {
            *m = m.checked_add(add).ok_or(DerandError::Overflow("miss sum"))?;
        }
    }

    Ok(pairs
        .into_iter()
        .zip(misses)
        .map(|(pairs, misses)| TermSums { pairs, misses })
        .collect())
}
