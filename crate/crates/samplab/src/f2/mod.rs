//! GF(2) vectors and matrices, multilinear polynomials in algebraic normal
//! form, and the binary extension fields GF(2^w).
//!
//! Bit convention: string position `i` (0-based, leftmost first) is bit `i`
//! of the integer encoding, so `"10"` encodes the integer 1.

mod bits;
mod gf2w;
mod poly;

pub use bits::{BitMatrix, BitVec};
pub use gf2w::{gf2w_mul, Gf2w, Gf2wElem, MODULI};
pub use poly::{addr_polynomial, affine_substitute, compose, F2Poly, F2PolyMap, PolyMapFile};

pub(crate) fn parity(x: u64) -> u64 {
    (x.count_ones() & 1) as u64
}

/// Renders the low `len` bits of `x` as a string, position 0 first.
pub fn bits_to_string(x: u64, len: u32) -> String {
    (0..len).map(|i| if x >> i & 1 == 1 { '1' } else { '0' }).collect()
}

pub fn string_to_bits(s: &str) -> Option<(u64, u32)> {
    if s.is_empty() || s.len() > 64 {
        return None;
    }
    let mut v = 0u64;
    for (i, c) in s.chars().enumerate() {
        match c {
            '0' => {}
            '1' => v |= 1 << i,
            _ => return None,
        }
    }
    Some((v, s.len() as u32))
}
