use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{bits_to_string, parity, string_to_bits};
use crate::error::{dim, invalid, Result};

/// A vector in F2^len, `1 <= len <= 64`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BitVec {
    len: u32,
    bits: u64,
}

impl BitVec {
    pub fn new(len: u32, bits: u64) -> Result<Self> {
        if len == 0 || len > 64 {
            return Err(invalid(format!("bit vector length {len} outside 1..=64")));
        }
        if len < 64 && bits >> len != 0 {
            return Err(invalid(format!("value {bits:#x} does not fit in {len} bits")));
        }
        Ok(BitVec { len, bits })
    }

    pub fn zeros(len: u32) -> Result<Self> {
        Self::new(len, 0)
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn get(&self, i: u32) -> bool {
        i < self.len && self.bits >> i & 1 == 1
    }

    pub fn xor(&self, other: &BitVec) -> Result<BitVec> {
        if self.len != other.len {
            return Err(dim(format!("xor of lengths {} and {}", self.len, other.len)));
        }
        Ok(BitVec { len: self.len, bits: self.bits ^ other.bits })
    }
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&bits_to_string(self.bits, self.len))
    }
}

impl std::str::FromStr for BitVec {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        let (bits, len) = string_to_bits(s).ok_or_else(|| invalid(format!("not a bit string: {s:?}")))?;
        BitVec::new(len, bits)
    }
}

impl Serialize for BitVec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitVec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Serialize for BitMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.data.iter().map(|&r| crate::f2::bits_to_string(r, self.cols)))
    }
}

impl<'de> Deserialize<'de> for BitMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<BitVec> = Vec::deserialize(d)?;
        let cols = rows.first().map(BitVec::len).ok_or_else(|| serde::de::Error::custom("empty matrix"))?;
        if rows.iter().any(|r| r.len() != cols) {
            return Err(serde::de::Error::custom("ragged matrix rows"));
        }
        BitMatrix::new(rows.len() as u32, cols, rows.iter().map(BitVec::bits).collect()).map_err(serde::de::Error::custom)
    }
}

/// A `rows x cols` matrix over F2 with `cols <= 64`; row `i` is stored as a
/// word whose bit `j` is entry `(i, j)`. The rank is computed once at
/// construction.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: u32,
    cols: u32,
    data: Vec<u64>,
    rank: u32,
}

impl BitMatrix {
    pub fn new(rows: u32, cols: u32, data: Vec<u64>) -> Result<Self> {
        if rows == 0 || cols == 0 || cols > 64 {
            return Err(invalid(format!("matrix shape {rows}x{cols} unsupported")));
        }
        if data.len() != rows as usize {
            return Err(dim(format!("{} row words for {rows} rows", data.len())));
        }
        if cols < 64 && data.iter().any(|r| r >> cols != 0) {
            return Err(invalid("row word exceeds column count"));
        }
        let rank = rank_of(&data);
        Ok(BitMatrix { rows, cols, data, rank })
    }

    pub fn identity(n: u32) -> Result<Self> {
        Self::new(n, n, (0..n).map(|i| 1u64 << i).collect())
    }

    pub fn random<R: Rng + ?Sized>(rows: u32, cols: u32, rng: &mut R) -> Result<Self> {
        let mask = if cols == 64 { u64::MAX } else { (1u64 << cols) - 1 };
        Self::new(rows, cols, (0..rows).map(|_| rng.gen::<u64>() & mask).collect())
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn cols(&self) -> u32 {
        self.cols
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn row_words(&self) -> &[u64] {
        &self.data
    }

    pub fn get(&self, i: u32, j: u32) -> bool {
        self.data[i as usize] >> j & 1 == 1
    }

    /// `A x` for `x` in F2^cols, returned as a word of `rows` bits (rows <= 64).
    pub fn mul_word(&self, x: u64) -> u64 {
        debug_assert!(self.rows <= 64);
        self.data.iter().enumerate().fold(0u64, |acc, (i, r)| acc | parity(r & x) << i)
    }

    pub fn mul_vec(&self, x: &BitVec) -> Result<BitVec> {
        if x.len() != self.cols {
            return Err(dim(format!("vector of length {} against {} columns", x.len(), self.cols)));
        }
        if self.rows > 64 {
            return Err(invalid("product longer than 64 bits"));
        }
        BitVec::new(self.rows, self.mul_word(x.bits()))
    }
}

fn rank_of(rows: &[u64]) -> u32 {
    let mut basis: Vec<u64> = Vec::new();
    for &r in rows {
        let mut v = r;
        for &b in &basis {
            v = v.min(v ^ b);
        }
        if v != 0 {
            basis.push(v);
            basis.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    basis.len() as u32
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bitvec_string_convention() {
        let v: BitVec = "10".parse().unwrap();
        assert_eq!(v.bits(), 1);
        assert!(v.get(0) && !v.get(1));
        assert_eq!(v.to_string(), "10");
        assert!(BitVec::new(2, 4).is_err());
        assert!("".parse::<BitVec>().is_err());
    }

    #[test]
    fn rank_cases() {
        assert_eq!(BitMatrix::identity(5).unwrap().rank(), 5);
        let m = BitMatrix::new(3, 3, vec![0b011, 0b110, 0b101]).unwrap();
        assert_eq!(m.rank(), 2);
        let m = BitMatrix::new(2, 4, vec![0, 0]).unwrap();
        assert_eq!(m.rank(), 0);
    }

    #[test]
    fn mul_matches_definition() {
        let m = BitMatrix::new(2, 3, vec![0b101, 0b011]).unwrap();
        // x = (1,1,0): row0 = x0 + x2 = 1, row1 = x0 + x1 = 0
        assert_eq!(m.mul_word(0b011), 0b01);
    }
}
