use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Irreducible moduli for GF(2^w), `w = 1..=32`, indexed by `w`, written as
/// full polynomials including the leading `x^w` term. The entry is the
/// trinomial `x^w + x^a + 1` with the smallest `a` when one exists, otherwise
/// the pentanomial `x^w + x^a + x^b + x^c + 1` that is lexicographically
/// smallest in `(a, b, c)`; `w = 1` uses `x + 1`. Version 1 of the table.
pub const MODULI: [u64; 33] = [
    0,
    0x3,
    0x7,
    0xb,
    0x13,
    0x25,
    0x43,
    0x83,
    0x11b,
    0x203,
    0x409,
    0x805,
    0x1009,
    0x201b,
    0x4021,
    0x8003,
    0x1002b,
    0x20009,
    0x40009,
    0x80027,
    0x100009,
    0x200005,
    0x400003,
    0x800021,
    0x100001b,
    0x2000009,
    0x400001b,
    0x8000027,
    0x10000003,
    0x20000005,
    0x40000003,
    0x80000009,
    0x10000008d,
];

/// The field GF(2^w) under the table modulus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Gf2w {
    w: u32,
}

impl Gf2w {
    pub fn new(w: u32) -> Result<Self> {
        if !(1..=32).contains(&w) {
            return Err(invalid(format!("field exponent {w} outside 1..=32")));
        }
        Ok(Gf2w { w })
    }

    pub fn w(&self) -> u32 {
        self.w
    }

    pub fn modulus(&self) -> u64 {
        MODULI[self.w as usize]
    }

    pub fn modulus_id(&self) -> String {
        format!("gf2^{}:{:#x}", self.w, self.modulus())
    }

    pub fn order(&self) -> u64 {
        1u64 << self.w
    }

    /// Carry-less product reduced by the modulus. Inputs must be `< 2^w`.
    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        let w = self.w;
        let mut prod: u64 = 0;
        let mut a = a;
        let mut b = b;
        while b != 0 {
            if b & 1 == 1 {
                prod ^= a;
            }
            b >>= 1;
            a <<= 1;
            if a >> w & 1 == 1 {
                a ^= self.modulus();
            }
        }
        prod
    }

    pub fn pow(&self, a: u64, mut e: u64) -> u64 {
        let mut base = a;
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via `a^(2^w - 2)`; `None` for zero.
    pub fn inv(&self, a: u64) -> Option<u64> {
        if a == 0 {
            None
        } else {
            Some(self.pow(a, self.order() - 2))
        }
    }

    pub fn elem(&self, value: u64) -> Result<Gf2wElem> {
        Gf2wElem::new(self.w, value)
    }
}

/// An element of GF(2^w).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Gf2wElem {
    pub w: u32,
    pub value: u64,
}

impl Gf2wElem {
    pub fn new(w: u32, value: u64) -> Result<Self> {
        Gf2w::new(w)?;
        if value >> w != 0 {
            return Err(invalid(format!("{value:#x} is not an element of GF(2^{w})")));
        }
        Ok(Gf2wElem { w, value })
    }

    pub fn field(&self) -> Gf2w {
        Gf2w { w: self.w }
    }

    pub fn add(&self, other: &Gf2wElem) -> Result<Gf2wElem> {
        if self.w != other.w {
            return Err(Error::FieldMismatch(self.w, other.w));
        }
        Ok(Gf2wElem { w: self.w, value: self.value ^ other.value })
    }
}

pub fn gf2w_mul(a: Gf2wElem, b: Gf2wElem) -> Result<Gf2wElem> {
    if a.w != b.w {
        return Err(Error::FieldMismatch(a.w, b.w));
    }
    Ok(Gf2wElem { w: a.w, value: a.field().mul(a.value, b.value) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_products() {
        let f = Gf2w::new(3).unwrap();
        assert_eq!(f.modulus(), 0b1011);
        assert_eq!(f.mul(0b010, 0b100), 0b011);
        assert_eq!(f.mul(0b110, 1), 0b110);
        assert_eq!(f.mul(0b110, 0), 0);
    }

    #[test]
    fn inverses_exist_for_w_up_to_8() {
        for w in 1..=8 {
            let f = Gf2w::new(w).unwrap();
            for a in 1..f.order() {
                let i = f.inv(a).unwrap();
                assert_eq!(f.mul(a, i), 1, "w={w} a={a}");
            }
        }
    }

    #[test]
    fn mismatched_fields_rejected() {
        let a = Gf2wElem::new(3, 1).unwrap();
        let b = Gf2wElem::new(4, 1).unwrap();
        assert_eq!(gf2w_mul(a, b), Err(Error::FieldMismatch(3, 4)));
    }
}
