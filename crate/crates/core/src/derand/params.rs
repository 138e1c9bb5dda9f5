use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use serde::Serialize;

use super::DerandError;
use crate::kwise::FamilyParams;

/// Exponent `ε ∈ (0, 1]` kept as an exact fraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Epsilon {
    num: u32,
    den: u32,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl Epsilon {
    pub const ONE_THIRD: Epsilon = Epsilon { num: 1, den: 3 };

    pub fn new(num: u32, den: u32) -> Result<Self, DerandError> {
        if num == 0 || den == 0 || num > den {
            return Err(DerandError::InvalidArgument(format!(
                "epsilon {num}/{den} outside (0, 1]"
            )));
        }
        let g = gcd(num as u64, den as u64) as u32;
        Ok(Epsilon {
            num: num / g,
            den: den / g,
        })
    }

    pub fn numerator(&self) -> u32 {
        self.num
    }

    pub fn denominator(&self) -> u32 {
        self.den
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl Default for Epsilon {
    fn default() -> Self {
        Epsilon::ONE_THIRD
    }
}

impl fmt::Display for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl Serialize for Epsilon {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Accepts `a/b` or a decimal such as `0.25`.
impl FromStr for Epsilon {
    type Err = DerandError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || DerandError::InvalidArgument(format!("cannot parse epsilon {s:?}"));
        if let Some((a, b)) = s.split_once('/') {
            return Epsilon::new(
                a.trim().parse().map_err(|_| bad())?,
                b.trim().parse().map_err(|_| bad())?,
            );
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if frac.len() > 9 || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let den = 10u64.pow(frac.len() as u32);
        let int: u64 = if int.is_empty() {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        let frac_val: u64 = if frac.is_empty() {
            0
        } else {
            frac.parse().map_err(|_| bad())?
        };
        let num = int * den + frac_val;
        let g = gcd(num, den).max(1);
        Epsilon::new(
            u32::try_from(num / g).map_err(|_| bad())?,
            u32::try_from(den / g).map_err(|_| bad())?,
        )
    }
}

/// Sampler configuration for one loop iteration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SamplerParams {
    #[serde(skip)]
    family: FamilyParams,
    epsilon: Epsilon,
    confidence: u32,
    degree_threshold: usize,
    #[serde(serialize_with = "super::trace::u128_as_string")]
    weight: u128,
}

impl SamplerParams {
    pub fn new(
        family: FamilyParams,
        epsilon: Epsilon,
        confidence: u32,
        degree_threshold: usize,
        weight: u128,
    ) -> Result<Self, DerandError> {
        if degree_threshold == 0 {
            return Err(DerandError::InvalidArgument(
                "degree threshold must be at least 1".into(),
            ));
        }
        if weight == 0 {
            return Err(DerandError::InvalidArgument("weight W must be at least 1".into()));
        }
        Ok(SamplerParams {
            family,
            epsilon,
            confidence,
            degree_threshold,
            weight,
        })
    }

    pub fn family(&self) -> &FamilyParams {
        &self.family
    }

    pub fn epsilon(&self) -> Epsilon {
        self.epsilon
    }

    pub fn confidence(&self) -> u32 {
        self.confidence
    }

    pub fn buckets(&self) -> u64 {
        self.family.buckets()
    }

    pub fn degree_threshold(&self) -> usize {
        self.degree_threshold
    }

    pub fn weight(&self) -> u128 {
        self.weight
    }

    pub fn seed_bits(&self) -> usize {
        self.family.seed_bits()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ParamOverrides {
    pub k: Option<usize>,
    pub w_exponent: Option<u32>,
    pub weight: Option<u128>,
}

pub const DEFAULT_W_EXPONENT: u32 = 4;

fn floor_log2(x: u64) -> u32 {
    63 - x.leading_zeros()
}

/// `max(4, ceil((32c/ε) log2 n / log2 Δ))` rounded up to even.
pub fn independence_degree(n: usize, delta: usize, epsilon: Epsilon, confidence: u32) -> usize {
    let raw = 32.0 * confidence as f64 / epsilon.value() * (n as f64).log2() / (delta as f64).log2();
    let k = (raw - 1e-9).ceil().max(0.0) as usize;
    let k = k + (k & 1);
    k.max(4)
}

/// Bucket count exponent: `f = 2^floor(log2 sqrt Δ)`.
pub fn bucket_bits_for(delta: usize) -> u32 {
    floor_log2(delta.max(1) as u64) / 2
}

/// Least integer `T` with `T >= f Δ^ε`.
pub fn degree_threshold(buckets: u64, delta: usize, epsilon: Epsilon) -> usize {
    let den = epsilon.denominator();
    let target = BigUint::from(buckets).pow(den) * BigUint::from(delta as u64).pow(epsilon.numerator());
    let mut t = target.nth_root(den);
    if t.pow(den) < target {
        t += 1u32;
    }
    usize::try_from(t).unwrap_or(usize::MAX)
}

/// Sampler parameters for a graph with `n` vertices and maximum degree
/// `delta`, hashing colors from a palette of `palette` colors.
pub fn select_parameters(
    n: usize,
    delta: usize,
    epsilon: Epsilon,
    confidence: u32,
    palette: u64,
    overrides: &ParamOverrides,
) -> Result<SamplerParams, DerandError> {
    if delta < 2 {
        return Err(DerandError::DegenerateGraph { max_degree: delta });
    }
    if n < 2 {
        return Err(DerandError::InvalidArgument(format!("need n >= 2, got {n}")));
    }
    let k = overrides
        .k
        .unwrap_or_else(|| independence_degree(n, delta, epsilon, confidence));
    let bucket_bits = bucket_bits_for(delta);
    let family = FamilyParams::for_domain(k, palette.max(1), bucket_bits)?;
    let threshold = degree_threshold(family.buckets(), delta, epsilon);
    let weight = match overrides.weight {
        Some(w) => w,
        None => {
            let exp = overrides.w_exponent.unwrap_or(DEFAULT_W_EXPONENT);
            (n as u128)
                .checked_pow(exp)
                .ok_or(DerandError::Overflow("weight n^w"))?
        }
    };
    SamplerParams::new(family, epsilon, confidence, threshold, weight)
}

/// Tail bound `8 ((kμ + k²) / λ²)^(k/2)` for sums of k-wise independent
/// indicators, clamped to `[0, 1]`.
pub fn bellare_rompel_bound(k: usize, mu: f64, lambda: f64) -> Result<f64, DerandError> {
    if k < 4 || k % 2 == 1 {
        return Err(DerandError::InvalidK(k));
    }
    if lambda.is_nan() || lambda <= 0.0 || mu.is_nan() || mu < 0.0 {
        return Err(DerandError::InvalidArgument(format!(
            "need mu >= 0 and lambda > 0, got mu = {mu}, lambda = {lambda}"
        )));
    }
    let k_f = k as f64;
    let ratio = (k_f * mu + k_f * k_f) / (lambda * lambda);
    let bound = 8.0 * ratio.powi((k / 2) as i32);
    Ok(if bound.is_nan() { 1.0 } else { bound.clamp(0.0, 1.0) })
}

/// Partition of the seed bits into consecutive chunks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ChunkSchedule {
    chunk_bits: usize,
    ranges: Vec<(usize, usize)>,
}

pub const MAX_CHUNK_BITS: usize = 30;

impl ChunkSchedule {
    pub fn new(seed_bits: usize, chunk_bits: usize) -> Result<Self, DerandError> {
        if chunk_bits == 0 || chunk_bits > MAX_CHUNK_BITS {
            return Err(DerandError::InvalidArgument(format!(
                "chunk bits must be in 1..={MAX_CHUNK_BITS}, got {chunk_bits}"
            )));
        }
        let ranges = (0..seed_bits)
            .step_by(chunk_bits)
            .map(|start| (start, chunk_bits.min(seed_bits - start)))
            .collect();
        Ok(ChunkSchedule { chunk_bits, ranges })
    }

    /// Chunks of `floor(log2 n)` bits (at least one).
    pub fn for_graph(seed_bits: usize, n: usize) -> Result<Self, DerandError> {
        Self::new(seed_bits, default_chunk_bits(n))
    }

    pub fn chunk_bits(&self) -> usize {
        self.chunk_bits
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    /// `(first bit, length)` of each chunk in commit order.
    pub fn ranges(&self) -> &[(usize, usize)] {
        &self.ranges
    }

    pub fn max_len(&self) -> usize {
        self.ranges.iter().map(|&(_, len)| len).max().unwrap_or(0)
    }
}

pub fn default_chunk_bits(n: usize) -> usize {
    (floor_log2(n.max(2) as u64) as usize).clamp(1, MAX_CHUNK_BITS)
}
