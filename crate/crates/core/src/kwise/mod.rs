//! k-wise independent hash family `h(x) = a_0 + a_1 x + ... + a_{k-1} x^{k-1}`
//! over GF(2^b), truncated to its low `bucket_bits` bits.
//!
//! A seed is the concatenation of the `k` coefficients, `a_0` first and each
//! coefficient most-significant bit first. Seed bit `p` therefore lives in
//! coefficient `p / b` at bit `b - 1 - p % b`. Bits are committed in that
//! order, so a partially fixed seed always has a committed prefix.

mod field;

pub use field::{field_mul, is_irreducible, FieldSpec, MAX_FIELD_BITS};

use num_rational::Ratio;
use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum HashError {
    #[error("unsupported field width {0} (supported: 1..=32)")]
    UnsupportedWidth(u32),
    #[error("modulus {modulus:#x} is not an irreducible polynomial of degree {bits}")]
    NotIrreducible { bits: u32, modulus: u64 },
    #[error("invalid family parameters: {0}")]
    InvalidParams(String),
    #[error("seed has {fixed} of {total} bits committed")]
    SeedNotCommitted { fixed: usize, total: usize },
    #[error("{points} points exceed independence degree {k}")]
    TooManyPoints { points: usize, k: usize },
    #[error("point {0} repeated")]
    DuplicatePoint(u64),
    #[error("point {point} outside domain of size {domain_size}")]
    PointOutOfDomain { point: u64, domain_size: u64 },
    #[error("enumerating 2^{bits} seeds exceeds budget {budget}")]
    BudgetExceeded { bits: usize, budget: u64 },
    #[error("malformed seed: {0}")]
    MalformedSeed(String),
}

/// Parameters of one member family: independence degree, field, bucket
/// count `f = 2^bucket_bits` and hashed domain `[0, domain_size)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FamilyParams {
    k: usize,
    field: FieldSpec,
    bucket_bits: u32,
    domain_size: u64,
}

fn bits_for(domain_size: u64) -> u32 {
    if domain_size <= 1 {
        1
    } else {
        64 - (domain_size - 1).leading_zeros()
    }
}

impl FamilyParams {
    pub fn new(k: usize, field_bits: u32, bucket_bits: u32, domain_size: u64) -> Result<Self, HashError> {
        let field = FieldSpec::new(field_bits)?;
        if k == 0 {
            return Err(HashError::InvalidParams("k must be at least 1".into()));
        }
        if bucket_bits > field_bits {
            return Err(HashError::InvalidParams(format!(
                "bucket bits {bucket_bits} exceed field width {field_bits}"
            )));
        }
        if domain_size == 0 || domain_size > field.order() {
            return Err(HashError::InvalidParams(format!(
                "domain size {domain_size} does not fit GF(2^{field_bits})"
            )));
        }
        Ok(FamilyParams {
            k,
            field,
            bucket_bits,
            domain_size,
        })
    }

    /// Smallest field covering both the domain and the bucket range.
    pub fn for_domain(k: usize, domain_size: u64, bucket_bits: u32) -> Result<Self, HashError> {
        let bits = bits_for(domain_size).max(bucket_bits).max(1);
        Self::new(k, bits, bucket_bits, domain_size)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn field_bits(&self) -> u32 {
        self.field.bits()
    }

    pub fn bucket_bits(&self) -> u32 {
        self.bucket_bits
    }

    pub fn buckets(&self) -> u64 {
        1u64 << self.bucket_bits
    }

    pub fn bucket_mask(&self) -> u64 {
        self.buckets() - 1
    }

    pub fn domain_size(&self) -> u64 {
        self.domain_size
    }

    /// Seed length `r = k * b` in bits.
    pub fn seed_bits(&self) -> usize {
        self.k * self.field.bits() as usize
    }

    /// Field value contributed to `h(x)` by seed bit `p` when that bit is 1.
    pub fn bit_contribution(&self, p: usize, x: u64) -> u64 {
        let b = self.field.bits() as usize;
        let unit = 1u64 << (b - 1 - p % b);
        self.field.mul(unit, self.field.pow(x, (p / b) as u64))
    }

    /// Horner evaluation of the full field value for explicit coefficients.
    pub fn eval_raw(&self, coefficients: &[u64], x: u64) -> u64 {
        coefficients.iter().rev().fold(0, |acc, &a| self.field.mul(acc, x) ^ a)
    }
}

/// A seed with a committed prefix; uncommitted bits are stored as zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Seed {
    coefficients: Vec<u64>,
    field_bits: u32,
    fixed: usize,
}

impl Seed {
    pub fn uncommitted(params: &FamilyParams) -> Self {
        Seed {
            coefficients: vec![0; params.k()],
            field_bits: params.field_bits(),
            fixed: 0,
        }
    }

    pub fn from_coefficients(params: &FamilyParams, coefficients: Vec<u64>) -> Result<Self, HashError> {
        if coefficients.len() != params.k() {
            return Err(HashError::MalformedSeed(format!(
                "expected {} coefficients, got {}",
                params.k(),
                coefficients.len()
            )));
        }
        if let Some(a) = coefficients.iter().find(|&&a| a >= params.field().order()) {
            return Err(HashError::MalformedSeed(format!(
                "coefficient {a} outside GF(2^{})",
                params.field_bits()
            )));
        }
        Ok(Seed {
            coefficients,
            field_bits: params.field_bits(),
            fixed: params.seed_bits(),
        })
    }

    /// Fully committed seed whose bit string, read as a big-endian integer,
    /// equals `index`. Requires `r <= 128`.
    pub fn from_index(params: &FamilyParams, index: u128) -> Result<Self, HashError> {
        let r = params.seed_bits();
        if r > 128 || (r < 128 && index >> r != 0) {
            return Err(HashError::MalformedSeed(format!("index does not fit {r} bits")));
        }
        let mut seed = Seed::uncommitted(params);
        for p in 0..r {
            seed.set_bit(p, (index >> (r - 1 - p)) & 1 == 1);
        }
        seed.fixed = r;
        Ok(seed)
    }

    pub fn total_bits(&self) -> usize {
        self.coefficients.len() * self.field_bits as usize
    }

    pub fn fixed_bits(&self) -> usize {
        self.fixed
    }

    pub fn is_committed(&self) -> bool {
        self.fixed == self.total_bits()
    }

    pub fn coefficients(&self) -> &[u64] {
        &self.coefficients
    }

    pub fn bit(&self, p: usize) -> bool {
        let b = self.field_bits as usize;
        (self.coefficients[p / b] >> (b - 1 - p % b)) & 1 == 1
    }

    fn set_bit(&mut self, p: usize, value: bool) {
        let b = self.field_bits as usize;
        let mask = 1u64 << (b - 1 - p % b);
        if value {
            self.coefficients[p / b] |= mask;
        } else {
            self.coefficients[p / b] &= !mask;
        }
    }

    /// Commits the next `len` bits to `value`, most significant bit first.
    pub fn commit(&mut self, len: usize, value: u64) -> Result<(), HashError> {
        if self.fixed + len > self.total_bits() || len > 64 || (len < 64 && value >> len != 0) {
            return Err(HashError::MalformedSeed(format!(
                "cannot commit {len} bits with value {value} after {} of {} bits",
                self.fixed,
                self.total_bits()
            )));
        }
        for i in 0..len {
            self.set_bit(self.fixed + i, (value >> (len - 1 - i)) & 1 == 1);
        }
        self.fixed += len;
        Ok(())
    }

    /// Returns a copy with the next `len` bits committed.
    pub fn extended(&self, len: usize, value: u64) -> Result<Seed, HashError> {
        let mut s = self.clone();
        s.commit(len, value)?;
        Ok(s)
    }

    /// Lowercase hex of the committed bit string, `a_0` first, left-padded
    /// with zero bits to `ceil(r / 4)` digits.
    pub fn to_hex(&self) -> String {
        let r = self.total_bits();
        let digits = r.div_ceil(4);
        let pad = digits * 4 - r;
        let mut out = String::with_capacity(digits);
        for d in 0..digits {
            let mut nibble = 0u32;
            for j in 0..4 {
                let pos = d * 4 + j;
                let bit = pos >= pad && self.bit(pos - pad);
                nibble = nibble << 1 | bit as u32;
            }
            out.push(std::char::from_digit(nibble, 16).unwrap());
        }
        out
    }

    pub fn from_hex(params: &FamilyParams, hex: &str) -> Result<Seed, HashError> {
        let r = params.seed_bits();
        let digits = r.div_ceil(4);
        if hex.len() != digits {
            return Err(HashError::MalformedSeed(format!(
                "expected {digits} hex digits, got {}",
                hex.len()
            )));
        }
        let pad = digits * 4 - r;
        let mut seed = Seed::uncommitted(params);
        for (d, ch) in hex.chars().enumerate() {
            let nibble = ch
                .to_digit(16)
                .filter(|_| !ch.is_ascii_uppercase())
                .ok_or_else(|| HashError::MalformedSeed(format!("bad hex digit {ch:?}")))?;
            for j in 0..4 {
                let pos = d * 4 + j;
                let bit = (nibble >> (3 - j)) & 1 == 1;
                if pos < pad {
                    if bit {
                        return Err(HashError::MalformedSeed("nonzero padding bits".into()));
                    }
                } else {
                    seed.set_bit(pos - pad, bit);
                }
            }
        }
        seed.fixed = r;
        Ok(seed)
    }
}

/// Bucket of `x` under a fully committed seed. Bucket 0 is the selection
/// event used by the sampler.
pub fn evaluate(params: &FamilyParams, seed: &Seed, x: u64) -> Result<u64, HashError> {
    if !seed.is_committed() {
        return Err(HashError::SeedNotCommitted {
            fixed: seed.fixed_bits(),
            total: seed.total_bits(),
        });
    }
    if x >= params.domain_size() {
        return Err(HashError::PointOutOfDomain {
            point: x,
            domain_size: params.domain_size(),
        });
    }
    Ok(params.eval_raw(seed.coefficients(), x) & params.bucket_mask())
}

/// Exact joint law of the bucket tuple of some domain points under a
/// uniformly random seed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointLaw {
    buckets: u64,
    arity: usize,
    /// Seed counts per tuple; tuple `(y_0, .., y_{p-1})` sits at index
    /// `sum y_i * f^(p-1-i)`.
    counts: Vec<u64>,
    total: u64,
}

impl JointLaw {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn probability(&self, tuple: &[u64]) -> Ratio<u64> {
        assert_eq!(tuple.len(), self.arity);
        let idx = tuple
            .iter()
            .fold(0usize, |acc, &y| acc * self.buckets as usize + y as usize);
        Ratio::new(self.counts[idx], self.total)
    }

    /// True iff every bucket tuple has probability exactly `f^-arity`.
    pub fn is_uniform(&self) -> bool {
        let cells = self.counts.len() as u64;
        self.total.is_multiple_of(cells) && self.counts.iter().all(|&c| c * cells == self.total)
    }
}

pub(crate) fn check_budget(bits: usize, budget: u64) -> Result<(), HashError> {
    if bits >= 64 || (1u64 << bits) > budget {
        Err(HashError::BudgetExceeded { bits, budget })
    } else {
        Ok(())
    }
}

/// Joint bucket law of up to `k` distinct points, by enumerating all `2^r`
/// seeds.
pub fn joint_distribution(params: &FamilyParams, points: &[u64], budget: u64) -> Result<JointLaw, HashError> {
    if points.len() > params.k() {
        return Err(HashError::TooManyPoints {
            points: points.len(),
            k: params.k(),
        });
    }
    for (i, &x) in points.iter().enumerate() {
        if x >= params.domain_size() {
            return Err(HashError::PointOutOfDomain {
                point: x,
                domain_size: params.domain_size(),
            });
        }
        if points[..i].contains(&x) {
            return Err(HashError::DuplicatePoint(x));
        }
    }
    let r = params.seed_bits();
    check_budget(r, budget)?;
    let f = params.buckets() as usize;
    let cells = f.pow(points.len() as u32);
    let mut counts = vec![0u64; cells];
    for index in 0..1u128 << r {
        let seed = Seed::from_index(params, index)?;
        let idx = points.iter().fold(0usize, |acc, &x| {
            acc * f + (params.eval_raw(seed.coefficients(), x) & params.bucket_mask()) as usize
        });
        counts[idx] += 1;
    }
    Ok(JointLaw {
        buckets: f as u64,
        arity: points.len(),
        counts,
        total: 1u64 << r,
    })
}
