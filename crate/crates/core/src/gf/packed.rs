//! Bit-packed vectors over `GF(2^e)`.
//!
//! A vector of length `n` over `GF(2^e)` is stored as `n * e` bits, coordinate
//! `i` occupying bits `i*e .. (i+1)*e` in the element's index encoding, so
//! vector addition is a word-wise XOR.

use super::{Field, FieldElement};

/// A packed vector over `GF(2^e)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PackedVec {
    words: Vec<u64>,
    len: usize,
    e: u32,
}

impl PackedVec {
    pub fn zero(len: usize, e: u32) -> Self {
        let bits = len * e as usize;
        PackedVec { words: vec![0; bits.div_ceil(64).max(1)], len, e }
    }

    /// Packs a coordinate vector. Panics unless the field has characteristic 2.
    pub fn pack(field: &Field, v: &[FieldElement]) -> Self {
        assert_eq!(field.p(), 2, "packed vectors need characteristic 2");
        let e = field.e();
        let mut out = Self::zero(v.len(), e);
        for (i, x) in v.iter().enumerate() {
            out.set(i, *x);
        }
        out
    }

    pub fn unpack(&self) -> Vec<FieldElement> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn get(&self, i: usize) -> FieldElement {
        let e = self.e as usize;
        let mut idx = 0u32;
        for b in 0..e {
            let bit = i * e + b;
            idx |= (((self.words[bit / 64] >> (bit % 64)) & 1) as u32) << b;
        }
        FieldElement(idx)
    }

    pub fn set(&mut self, i: usize, x: FieldElement) {
        let e = self.e as usize;
        for b in 0..e {
            let bit = i * e + b;
            let mask = 1u64 << (bit % 64);
            if (x.0 >> b) & 1 == 1 {
                self.words[bit / 64] |= mask;
            } else {
                self.words[bit / 64] &= !mask;
            }
        }
    }

    /// In-place addition.
    pub fn add_assign(&mut self, other: &PackedVec) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }
}

/// Parity of the AND of two packed `GF(2)` words: the standard dot product.
#[inline]
pub fn dot_gf2(a: u128, b: u128) -> u8 {
    ((a & b).count_ones() & 1) as u8
}

/// Rank over `GF(2)` of rows packed as `u128` bitmasks.
pub fn rank_gf2(rows: &[u128]) -> usize {
    let mut basis: Vec<u128> = Vec::with_capacity(rows.len());
    for &r in rows {
        let mut v = r;
        for &b in &basis {
            // b's leading bit is unique across the basis
            let lead = 127 - b.leading_zeros();
            if (v >> lead) & 1 == 1 {
                v ^= b;
            }
        }
        if v != 0 {
            // keep basis sorted by decreasing leading bit so the sweep is a full reduction
            let lead = 127 - v.leading_zeros();
            let pos = basis
                .iter()
                .position(|b| 127 - b.leading_zeros() < lead)
                .unwrap_or(basis.len());
            basis.insert(pos, v);
        }
    }
    basis.len()
}
