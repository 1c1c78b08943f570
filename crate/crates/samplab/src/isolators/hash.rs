use serde::{Deserialize, Serialize};

use super::tables::{BoolFnTable, MultiOutFnTable};
use crate::error::{invalid, Error, Result};
use crate::f2::{BitVec, Gf2w};

/// The `t`-wise uniform family `x -> low m bits of sum_j a_j x^j` over
/// GF(2^n), `j < t`. Member `i` has coefficients `a_j = (i >> jn) mod 2^n`,
/// so iterating `i` upward walks the coefficients in canonical order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashFamily {
    n: u32,
    m: u32,
    t: u32,
}

/// One member, serialized as `{n, m, t, coeffs, modulus_id}` with hex
/// coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashMember {
    pub n: u32,
    pub m: u32,
    pub t: u32,
    pub coeffs: Vec<String>,
    pub modulus_id: String,
}

impl HashFamily {
    pub fn new(n: u32, m: u32, t: u32) -> Result<Self> {
        if n == 0 || n > 24 || m == 0 || m > n || t == 0 || t as u64 * n as u64 > 63 {
            return Err(invalid(format!("hash family needs 1 <= m <= n <= 24 and 1 <= t*n <= 63 (n={n}, m={m}, t={t})")));
        }
        Ok(HashFamily { n, m, t })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    /// `2^(tn)`.
    pub fn size(&self) -> u64 {
        1 << (self.t * self.n)
    }

    pub fn field(&self) -> Gf2w {
        Gf2w::new(self.n).expect("checked in new")
    }

    pub fn coeffs(&self, i: u64) -> Vec<u64> {
        let mask = (1u64 << self.n) - 1;
        (0..self.t).map(|j| i >> (j * self.n) & mask).collect()
    }

    pub fn eval(&self, coeffs: &[u64], x: u64) -> u64 {
        let f = self.field();
        let v = coeffs.iter().rev().fold(0u64, |acc, &a| f.mul(acc, x) ^ a);
        v & ((1u64 << self.m) - 1)
    }

    pub fn table(&self, i: u64) -> Result<MultiOutFnTable> {
        if i >= self.size() {
            return Err(Error::Invalid(format!("member {i} outside a family of size {}", self.size())));
        }
        let c = self.coeffs(i);
        MultiOutFnTable::from_fn(self.n, self.m, |x| self.eval(&c, x))
    }

    /// `g(x) = 1(h_i(x) = 0^m)`.
    pub fn isolator(&self, i: u64) -> Result<BoolFnTable> {
        self.table(i)?.indicator(0)
    }

    pub fn member(&self, i: u64) -> HashMember {
        let width = self.n.div_ceil(4) as usize;
        HashMember {
            n: self.n,
            m: self.m,
            t: self.t,
            coeffs: self.coeffs(i).iter().map(|a| format!("{a:0width$x}")).collect(),
            modulus_id: self.field().modulus_id(),
        }
    }
}

/// Inner product over GF(2^m): both inputs are cut into `m`-bit blocks
/// (zero-padded at the end) and `sum_i x_i y_i` is returned as `m` bits.
pub fn ip_hash(x: &BitVec, y: &BitVec, m: u32) -> Result<BitVec> {
    if x.len() != y.len() {
        return Err(crate::error::dim(format!("inputs of {} and {} bits", x.len(), y.len())));
    }
    let f = Gf2w::new(m)?;
    BitVec::new(m, ip_word(&f, x.bits(), y.bits(), x.len()))
}

fn ip_word(f: &Gf2w, x: u64, y: u64, n: u32) -> u64 {
    let m = f.w();
    let mask = (1u64 << m) - 1;
    (0..n.div_ceil(m)).fold(0u64, |acc, j| {
        let (a, b) = ((x >> (j * m)) & mask, (y >> (j * m)) & mask);
        acc ^ f.mul(a, b)
    })
}

/// `ip_hash` as a table on `2n` input bits: `x` in the low `n` positions,
/// `y` in the high ones.
pub fn ip_table(n: u32, m: u32) -> Result<MultiOutFnTable> {
    let f = Gf2w::new(m)?;
    let mask = (1u64 << n) - 1;
    MultiOutFnTable::from_fn(2 * n, m, |v| ip_word(&f, v & mask, v >> n, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashMap;

    fn bv(s: &str) -> BitVec {
        s.parse().unwrap()
    }

    #[test]
    fn ip_examples() {
        assert_eq!(ip_hash(&bv("1101"), &bv("0000"), 2).unwrap().bits(), 0);
        assert_eq!(ip_hash(&bv("11"), &bv("10"), 1).unwrap().to_string(), "1");
        // GF(4) through a discrete-log table for the generator X
        let exp = [1u64, 2, 3];
        let log = |v: u64| exp.iter().position(|&e| e == v).unwrap();
        let mul = |a: u64, b: u64| if a == 0 || b == 0 { 0 } else { exp[(log(a) + log(b)) % 3] };
        let x = [1u64, 3]; // blocks "10", "11"
        let y = [2u64, 1]; // blocks "01", "10"
        let expected = mul(x[0], y[0]) ^ mul(x[1], y[1]);
        let got = ip_hash(&bv("1011"), &bv("0110"), 2).unwrap();
        assert_eq!(got.bits(), expected);
        assert_eq!(got.to_string(), "10");
    }

    #[test]
    fn padding_keeps_original_coordinates() {
        // n = 3, m = 2: the second block is (x_3, 0)
        let a = ip_hash(&bv("011"), &bv("111"), 2).unwrap();
        let b = ip_hash(&bv("0110"), &bv("1110"), 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn t_wise_uniform_on_small_fields() {
        for (n, m, t) in [(2, 1, 2), (3, 2, 2), (3, 1, 3), (4, 2, 2), (3, 3, 3)] {
            let fam = HashFamily::new(n, m, t).unwrap();
            let pts: Vec<u64> = (0..1u64 << n).collect();
            let tuples: Vec<Vec<u64>> = match t {
                2 => pts.iter().flat_map(|&a| pts.iter().filter(move |&&b| b != a).map(move |&b| vec![a, b])).collect(),
                _ => pts
                    .iter()
                    .flat_map(|&a| {
                        let pts = pts.clone();
                        pts.clone().into_iter().filter(move |&b| b != a).flat_map(move |b| {
                            pts.clone().into_iter().filter(move |&c| c != a && c != b).map(move |c| vec![a, b, c])
                        })
                    })
                    .collect(),
            };
            let tables: Vec<MultiOutFnTable> = (0..fam.size()).map(|i| fam.table(i).unwrap()).collect();
            for tup in tuples.iter().step_by(5) {
                let mut hist: HashMap<Vec<u64>, u64> = HashMap::new();
                for tab in &tables {
                    *hist.entry(tup.iter().map(|&x| tab.get(x)).collect()).or_default() += 1;
                }
                assert_eq!(hist.len(), 1 << (m * t), "n={n} t={t} tuple {tup:?}");
                assert!(hist.values().all(|&c| c == fam.size() >> (m * t)));
            }
        }
    }

    #[test]
    fn member_json() {
        let fam = HashFamily::new(4, 1, 2).unwrap();
        let m = fam.member(0x5a);
        assert_eq!(m.coeffs, vec!["a", "5"]);
        assert_eq!(m.modulus_id, fam.field().modulus_id());
    }

    proptest! {
        #[test]
        fn m1_is_gf2_inner_product(n in 1u32..=32, x in any::<u64>(), y in any::<u64>()) {
            let mask = (1u64 << n) - 1;
            let (x, y) = (x & mask, y & mask);
            let got = ip_hash(&BitVec::new(n, x).unwrap(), &BitVec::new(n, y).unwrap(), 1).unwrap();
            prop_assert_eq!(got.bits(), ((x & y).count_ones() & 1) as u64);
            if n <= 8 {
                prop_assert_eq!(ip_table(n, 1).unwrap().get(x | y << n), got.bits());
            }
        }
    }
}
