use std::sync::OnceLock;

use super::HashError;

/// Low-weight irreducible polynomials over GF(2), indexed by degree.
/// Bit `i` is the coefficient of `x^i`.
const MODULI: [u64; 33] = [
    0,
    0x3,         // x + 1
    0x7,         // x^2 + x + 1
    0xB,         // x^3 + x + 1
    0x13,        // x^4 + x + 1
    0x25,        // x^5 + x^2 + 1
    0x43,        // x^6 + x + 1
    0x83,        // x^7 + x + 1
    0x11B,       // x^8 + x^4 + x^3 + x + 1
    0x211,       // x^9 + x^4 + 1
    0x409,       // x^10 + x^3 + 1
    0x805,       // x^11 + x^2 + 1
    0x1009,      // x^12 + x^3 + 1
    0x201B,      // x^13 + x^4 + x^3 + x + 1
    0x4021,      // x^14 + x^5 + 1
    0x8003,      // x^15 + x + 1
    0x1002B,     // x^16 + x^5 + x^3 + x + 1
    0x20009,     // x^17 + x^3 + 1
    0x40081,     // x^18 + x^7 + 1
    0x80027,     // x^19 + x^5 + x^2 + x + 1
    0x100009,    // x^20 + x^3 + 1
    0x200005,    // x^21 + x^2 + 1
    0x400003,    // x^22 + x + 1
    0x800021,    // x^23 + x^5 + 1
    0x100001B,   // x^24 + x^4 + x^3 + x + 1
    0x2000009,   // x^25 + x^3 + 1
    0x400001B,   // x^26 + x^4 + x^3 + x + 1
    0x8000027,   // x^27 + x^5 + x^2 + x + 1
    0x10000009,  // x^28 + x^3 + 1
    0x20000005,  // x^29 + x^2 + 1
    0x40000003,  // x^30 + x + 1
    0x80000009,  // x^31 + x^3 + 1
    0x10000008D, // x^32 + x^7 + x^3 + x^2 + 1
];

pub const MAX_FIELD_BITS: u32 = 32;

fn degree(p: u64) -> i32 {
    63 - p.leading_zeros() as i32
}

fn poly_rem(mut a: u64, d: u64) -> u64 {
    let dd = degree(d);
    while a != 0 && degree(a) >= dd {
        a ^= d << (degree(a) - dd);
    }
    a
}

/// Irreducibility over GF(2) by trial division with every polynomial of
/// degree `1..=deg/2`.
pub fn is_irreducible(poly: u64) -> bool {
    let deg = degree(poly);
    if deg < 1 {
        return false;
    }
    let half = deg / 2;
    (2u64..(1u64 << (half + 1))).all(|d| poly_rem(poly, d) != 0)
}

/// GF(2^b) described by its width and reduction polynomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FieldSpec {
    bits: u32,
    modulus: u64,
}

impl FieldSpec {
    /// Field of width `bits` using the built-in modulus table. The modulus
    /// is checked for irreducibility on first use of each width.
    pub fn new(bits: u32) -> Result<Self, HashError> {
        static CHECKED: [OnceLock<bool>; 33] = [const { OnceLock::new() }; 33];
        if bits == 0 || bits > MAX_FIELD_BITS {
            return Err(HashError::UnsupportedWidth(bits));
        }
        let modulus = MODULI[bits as usize];
        if !*CHECKED[bits as usize].get_or_init(|| is_irreducible(modulus)) {
            return Err(HashError::NotIrreducible { bits, modulus });
        }
        Ok(FieldSpec { bits, modulus })
    }

    pub fn with_modulus(bits: u32, modulus: u64) -> Result<Self, HashError> {
        if bits == 0 || bits > MAX_FIELD_BITS {
            return Err(HashError::UnsupportedWidth(bits));
        }
        if degree(modulus) != bits as i32 || !is_irreducible(modulus) {
            return Err(HashError::NotIrreducible { bits, modulus });
        }
        Ok(FieldSpec { bits, modulus })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn order(&self) -> u64 {
        1u64 << self.bits
    }

    /// Carry-less product reduced modulo the field polynomial.
    #[inline]
    pub fn mul(&self, mut a: u64, mut b: u64) -> u64 {
        debug_assert!(a < self.order() && b < self.order());
        let top = 1u64 << self.bits;
        let mut acc = 0;
        while b != 0 {
            if b & 1 == 1 {
                acc ^= a;
            }
            b >>= 1;
            a <<= 1;
            if a & top != 0 {
                a ^= self.modulus;
            }
        }
        acc
    }

    pub fn pow(&self, base: u64, mut exp: u64) -> u64 {
        let (mut acc, mut sq) = (1u64, base);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, sq);
            }
            sq = self.mul(sq, sq);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via `a^(2^b - 2)`; `None` for zero.
    pub fn inverse(&self, a: u64) -> Option<u64> {
        (a != 0).then(|| self.pow(a, self.order() - 2))
    }
}

pub fn field_mul(spec: &FieldSpec, a: u64, b: u64) -> u64 {
    spec.mul(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_moduli_are_irreducible() {
        for bits in 1..=MAX_FIELD_BITS {
            assert_eq!(degree(MODULI[bits as usize]), bits as i32);
            assert!(FieldSpec::new(bits).is_ok(), "width {bits}");
        }
        assert_eq!(FieldSpec::new(0), Err(HashError::UnsupportedWidth(0)));
        assert_eq!(FieldSpec::new(33), Err(HashError::UnsupportedWidth(33)));
    }

    #[test]
    fn reducible_modulus_rejected() {
        // x^4 + 1 = (x + 1)^4
        assert!(FieldSpec::with_modulus(4, 0x11).is_err());
        assert!(!is_irreducible(0x5)); // x^2 + 1
        assert!(is_irreducible(0x7));
    }

    #[test]
    fn gf8_hand_reduction() {
        let f = FieldSpec::new(3).unwrap();
        assert_eq!(f.modulus(), 0b1011);
        // x * x^2 = x^3 = x + 1
        assert_eq!(field_mul(&f, 0b010, 0b100), 0b011);
        for a in 0..8 {
            assert_eq!(f.mul(a, 1), a);
            assert_eq!(f.mul(a, 0), 0);
        }
    }

    #[test]
    fn small_fields_satisfy_field_axioms() {
        for bits in 1..=8 {
            let f = FieldSpec::new(bits).unwrap();
            let q = f.order();
            for a in 0..q {
                if a != 0 {
                    let inv = f.inverse(a).unwrap();
                    assert_eq!(f.mul(a, inv), 1, "inverse of {a} in GF(2^{bits})");
                }
                for b in 0..q {
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                }
            }
            for a in 0..q {
                for b in 0..q {
                    let ab = f.mul(a, b);
                    for c in 0..q {
                        assert_eq!(f.mul(ab, c), f.mul(a, f.mul(b, c)));
                        assert_eq!(f.mul(a, b ^ c), ab ^ f.mul(a, c));
                    }
                }
            }
        }
    }
}
