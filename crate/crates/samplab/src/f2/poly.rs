use serde::{Deserialize, Serialize};

use super::{BitMatrix, BitVec};
use crate::error::{dim, invalid, Result};

/// A multilinear polynomial over F2 in algebraic normal form. Each monomial
/// is a word whose set bits are its variables; the word 0 is the constant 1.
/// Monomials are kept sorted and distinct.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct F2Poly {
    n_vars: u32,
    monomials: Vec<u64>,
}

fn var_mask(n_vars: u32) -> u64 {
    if n_vars >= 64 {
        u64::MAX
    } else {
        (1u64 << n_vars) - 1
    }
}

/// Sorts and cancels equal pairs (x + x = 0).
fn xor_canonical(mut ms: Vec<u64>) -> Vec<u64> {
    ms.sort_unstable();
    let mut out = Vec::with_capacity(ms.len());
    let mut i = 0;
    while i < ms.len() {
        let mut j = i;
        while j < ms.len() && ms[j] == ms[i] {
            j += 1;
        }
        if (j - i) % 2 == 1 {
            out.push(ms[i]);
        }
        i = j;
    }
    out
}

impl F2Poly {
    pub fn new(n_vars: u32, mut monomials: Vec<u64>) -> Result<Self> {
        if n_vars > 64 {
            return Err(invalid(format!("{n_vars} variables exceeds 64")));
        }
        let mask = var_mask(n_vars);
        if let Some(m) = monomials.iter().find(|&&m| m & !mask != 0) {
            return Err(invalid(format!("monomial {m:#x} uses a variable index >= {n_vars}")));
        }
        monomials.sort_unstable();
        if monomials.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("duplicate monomial"));
        }
        Ok(F2Poly { n_vars, monomials })
    }

    /// Builds from sorted index lists; an empty list is the constant 1.
    pub fn from_index_lists(n_vars: u32, lists: &[Vec<u32>]) -> Result<Self> {
        let mut ms = Vec::with_capacity(lists.len());
        for l in lists {
            if l.windows(2).any(|w| w[0] >= w[1]) {
                return Err(invalid(format!("monomial {l:?} is not a sorted index set")));
            }
            let mut m = 0u64;
            for &i in l {
                if i >= n_vars {
                    return Err(invalid(format!("variable index {i} >= {n_vars}")));
                }
                m |= 1 << i;
            }
            ms.push(m);
        }
        Self::new(n_vars, ms)
    }

    pub(crate) fn from_xor_terms(n_vars: u32, terms: Vec<u64>) -> Self {
        F2Poly { n_vars, monomials: xor_canonical(terms) }
    }

    pub fn zero(n_vars: u32) -> Self {
        F2Poly { n_vars, monomials: vec![] }
    }

    pub fn one(n_vars: u32) -> Self {
        F2Poly { n_vars, monomials: vec![0] }
    }

    pub fn var(n_vars: u32, i: u32) -> Result<Self> {
        Self::new(n_vars, vec![1u64 << i])
    }

    /// ANF of a function of the variables `vars` given by its truth table;
    /// bit `a` of `table` is the value at the assignment whose bit `j` feeds `vars[j]`.
    pub fn from_truth_table(n_vars: u32, vars: &[u32], table: u64) -> Result<Self> {
        let k = vars.len() as u32;
        if k > 6 {
            return Err(invalid("truth tables are limited to 6 variables"));
        }
        if vars.iter().any(|&v| v >= n_vars) {
            return Err(invalid("truth-table variable out of range"));
        }
        let size = 1usize << k;
        let mut coef: Vec<u8> = (0..size).map(|a| (table >> a & 1) as u8).collect();
        for j in 0..k {
            for a in 0..size {
                if a >> j & 1 == 1 {
                    coef[a] ^= coef[a ^ (1 << j)];
                }
            }
        }
        let mut ms = Vec::new();
        for (a, &c) in coef.iter().enumerate() {
            if c == 1 {
                let mut m = 0u64;
                for (j, &v) in vars.iter().enumerate() {
                    if a >> j & 1 == 1 {
                        m |= 1 << v;
                    }
                }
                ms.push(m);
            }
        }
        Self::new(n_vars, ms)
    }

    pub fn n_vars(&self) -> u32 {
        self.n_vars
    }

    pub fn monomials(&self) -> &[u64] {
        &self.monomials
    }

    pub fn index_lists(&self) -> Vec<Vec<u32>> {
        self.monomials
            .iter()
            .map(|&m| (0..64).filter(|i| m >> i & 1 == 1).collect())
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.monomials.is_empty()
    }

    /// Degree of the zero polynomial is reported as 0.
    pub fn degree(&self) -> u32 {
        self.monomials.iter().map(|m| m.count_ones()).max().unwrap_or(0)
    }

    /// Union of the variables that appear.
    pub fn support(&self) -> u64 {
        self.monomials.iter().fold(0, |a, m| a | m)
    }

    #[inline]
    pub fn eval_word(&self, x: u64) -> bool {
        let mut acc = false;
        for &m in &self.monomials {
            acc ^= x & m == m;
        }
        acc
    }

    pub fn eval(&self, x: &BitVec) -> Result<bool> {
        if x.len() != self.n_vars {
            return Err(dim(format!("input of length {} for {} variables", x.len(), self.n_vars)));
        }
        Ok(self.eval_word(x.bits()))
    }

    pub fn add(&self, other: &F2Poly) -> Result<F2Poly> {
        self.same_vars(other)?;
        let mut t = self.monomials.clone();
        t.extend_from_slice(&other.monomials);
        Ok(Self::from_xor_terms(self.n_vars, t))
    }

    /// Product with multilinear reduction `x^2 = x`.
    pub fn mul(&self, other: &F2Poly) -> Result<F2Poly> {
        self.same_vars(other)?;
        let mut t = Vec::with_capacity(self.monomials.len() * other.monomials.len());
        for &a in &self.monomials {
            for &b in &other.monomials {
                t.push(a | b);
            }
        }
        Ok(Self::from_xor_terms(self.n_vars, t))
    }

    fn same_vars(&self, other: &F2Poly) -> Result<()> {
        if self.n_vars != other.n_vars {
            return Err(dim(format!("{} vs {} variables", self.n_vars, other.n_vars)));
        }
        Ok(())
    }
}

/// A polynomial map F2^r -> F2^n whose components all have degree at most
/// `degree_bound`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "PolyMapFile", into = "PolyMapFile")]
pub struct F2PolyMap {
    n_inputs: u32,
    outputs: Vec<F2Poly>,
    degree_bound: u32,
}

impl F2PolyMap {
    pub fn new(n_inputs: u32, outputs: Vec<F2Poly>, degree_bound: u32) -> Result<Self> {
        if outputs.is_empty() || outputs.len() > 64 {
            return Err(invalid(format!("{} outputs; expected 1..=64", outputs.len())));
        }
        for (j, p) in outputs.iter().enumerate() {
            if p.n_vars != n_inputs {
                return Err(dim(format!("output {j} has {} variables, map has {n_inputs}", p.n_vars)));
            }
            if p.degree() > degree_bound {
                return Err(invalid(format!(
                    "output {j} has degree {} above the bound {degree_bound}",
                    p.degree()
                )));
            }
        }
        Ok(F2PolyMap { n_inputs, outputs, degree_bound })
    }

    /// Same as `new` with the bound set to the actual degree.
    pub fn tight(n_inputs: u32, outputs: Vec<F2Poly>) -> Result<Self> {
        let d = outputs.iter().map(F2Poly::degree).max().unwrap_or(0);
        Self::new(n_inputs, outputs, d)
    }

    pub fn identity(n: u32) -> Result<Self> {
        let outs = (0..n).map(|i| F2Poly::var(n, i)).collect::<Result<Vec<_>>>()?;
        Self::new(n, outs, 1)
    }

    pub fn n_inputs(&self) -> u32 {
        self.n_inputs
    }

    pub fn n_outputs(&self) -> u32 {
        self.outputs.len() as u32
    }

    pub fn outputs(&self) -> &[F2Poly] {
        &self.outputs
    }

    pub fn degree_bound(&self) -> u32 {
        self.degree_bound
    }

    pub fn degree(&self) -> u32 {
        self.outputs.iter().map(F2Poly::degree).max().unwrap_or(0)
    }

    /// Output word: bit `j` is component `j`.
    #[inline]
    pub fn eval_word(&self, x: u64) -> u64 {
        self.outputs
            .iter()
            .enumerate()
            .fold(0u64, |acc, (j, p)| acc | (p.eval_word(x) as u64) << j)
    }

    pub fn eval(&self, x: &BitVec) -> Result<BitVec> {
        if x.len() != self.n_inputs {
            return Err(dim(format!("input of length {} for {} inputs", x.len(), self.n_inputs)));
        }
        BitVec::new(self.n_outputs(), self.eval_word(x.bits()))
    }
}

/// JSON shape of a polynomial map: monomials as sorted 0-based index lists,
/// `[]` is the constant-1 monomial and a `null` output is the zero polynomial.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolyMapFile {
    pub n_inputs: u32,
    pub degree_bound: u32,
    pub outputs: Vec<Option<Vec<Vec<u32>>>>,
}

impl TryFrom<PolyMapFile> for F2PolyMap {
    type Error = crate::Error;
    fn try_from(f: PolyMapFile) -> Result<Self> {
        let outs = f
            .outputs
            .iter()
            .map(|o| match o {
                None => Ok(F2Poly::zero(f.n_inputs)),
                Some(l) => F2Poly::from_index_lists(f.n_inputs, l),
            })
            .collect::<Result<Vec<_>>>()?;
        F2PolyMap::new(f.n_inputs, outs, f.degree_bound)
    }
}

impl From<F2PolyMap> for PolyMapFile {
    fn from(m: F2PolyMap) -> Self {
        PolyMapFile {
            n_inputs: m.n_inputs,
            degree_bound: m.degree_bound,
            outputs: m.outputs.iter().map(|p| Some(p.index_lists())).collect(),
        }
    }
}

/// The map `h(x) = f(Ax + b)`, expanded symbolically.
pub fn affine_substitute(f: &F2PolyMap, a: &BitMatrix, b: &BitVec) -> Result<F2PolyMap> {
    if a.rows() != f.n_inputs || b.len() != f.n_inputs {
        return Err(dim(format!(
            "substitution needs {} rows and offset length; got {} and {}",
            f.n_inputs,
            a.rows(),
            b.len()
        )));
    }
    let l = a.cols();
    let linear: Vec<F2Poly> = (0..f.n_inputs)
        .map(|i| {
            let row = a.row_words()[i as usize];
            let mut t: Vec<u64> = (0..l).filter(|j| row >> j & 1 == 1).map(|j| 1u64 << j).collect();
            if b.get(i) {
                t.push(0);
            }
            F2Poly::from_xor_terms(l, t)
        })
        .collect();
    substitute(f, &linear, l, f.degree_bound)
}

/// `outer(inner(x))`.
pub fn compose(outer: &F2PolyMap, inner: &F2PolyMap) -> Result<F2PolyMap> {
    if outer.n_inputs != inner.n_outputs() {
        return Err(dim(format!(
            "outer map reads {} inputs, inner map writes {}",
            outer.n_inputs,
            inner.n_outputs()
        )));
    }
    substitute(outer, &inner.outputs, inner.n_inputs, outer.degree_bound * inner.degree_bound.max(1))
}

fn substitute(f: &F2PolyMap, images: &[F2Poly], n_vars: u32, degree_bound: u32) -> Result<F2PolyMap> {
    let mut outs = Vec::with_capacity(f.outputs.len());
    for p in &f.outputs {
        let mut acc: Vec<u64> = Vec::new();
        for &m in &p.monomials {
            let mut term = F2Poly::one(n_vars);
            for i in 0..64 {
                if m >> i & 1 == 1 {
                    term = term.mul(&images[i as usize])?;
                }
            }
            acc.extend_from_slice(&term.monomials);
        }
        outs.push(F2Poly::from_xor_terms(n_vars, acc));
    }
    F2PolyMap::new(n_vars, outs, degree_bound)
}

/// `addr_{n,t}` as a polynomial map of degree `t + 1` on inputs laid out as
/// `(A_1, ..., A_t, b_1, ..., b_t, u)` with `u` the fresh `n`-bit fallback.
pub fn addr_polynomial(n: u32, t: u32) -> Result<F2PolyMap> {
    let vars = t * (n + 1) + n;
    if n == 0 || t == 0 || vars > 64 {
        return Err(invalid(format!("addr_{{{n},{t}}} needs 1..=64 polynomial inputs")));
    }
    let b = |i: u32| F2Poly::var(vars, t * n + i);
    let mut none_before = F2Poly::one(vars);
    let mut selectors = Vec::new();
    for i in 0..t {
        selectors.push(none_before.mul(&b(i)?)?);
        let not_b = b(i)?.add(&F2Poly::one(vars))?;
        none_before = none_before.mul(&not_b)?;
    }
    let mut outs = Vec::new();
    for j in 0..n {
        let mut out = none_before.mul(&F2Poly::var(vars, t * (n + 1) + j)?)?;
        for (i, s) in selectors.iter().enumerate() {
            out = out.add(&s.mul(&F2Poly::var(vars, i as u32 * n + j)?)?)?;
        }
        outs.push(out);
    }
    F2PolyMap::new(vars, outs, t + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bv(s: &str) -> BitVec {
        s.parse().unwrap()
    }

    #[test]
    fn eval_examples() {
        // x1 is the first variable, index 0
        let p = F2Poly::from_index_lists(2, &[vec![0]]).unwrap();
        assert!(p.eval(&bv("10")).unwrap());
        let p = F2Poly::from_index_lists(2, &[vec![], vec![0, 1]]).unwrap();
        assert!(!p.eval(&bv("11")).unwrap());
        let or = F2Poly::from_index_lists(2, &[vec![0], vec![1], vec![0, 1]]).unwrap();
        let table: Vec<bool> = (0..4).map(|x| or.eval_word(x)).collect();
        assert_eq!(table, vec![false, true, true, true]);
        assert!(p.eval(&bv("1")).is_err());
    }

    #[test]
    fn rejects_malformed_monomials() {
        assert!(F2Poly::new(2, vec![1, 1]).is_err());
        assert!(F2Poly::new(2, vec![4]).is_err());
        assert!(F2Poly::from_index_lists(3, &[vec![1, 0]]).is_err());
        let p = F2Poly::from_index_lists(2, &[vec![0, 1]]).unwrap();
        assert!(F2PolyMap::new(2, vec![p], 1).is_err());
    }

    #[test]
    fn idempotent_substitution() {
        let f = F2PolyMap::new(2, vec![F2Poly::from_index_lists(2, &[vec![0, 1]]).unwrap()], 2).unwrap();
        let a = BitMatrix::new(2, 1, vec![1, 1]).unwrap();
        let h = affine_substitute(&f, &a, &BitVec::zeros(2).unwrap()).unwrap();
        assert_eq!(h.outputs()[0], F2Poly::var(1, 0).unwrap());
        let id = affine_substitute(&f, &BitMatrix::identity(2).unwrap(), &BitVec::zeros(2).unwrap()).unwrap();
        assert_eq!(id, f);
    }

    #[test]
    fn truth_table_round_trip() {
        for table in 0..256u64 {
            let p = F2Poly::from_truth_table(5, &[4, 0, 2], table).unwrap();
            for x in 0..32u64 {
                let a = (x >> 4 & 1) | (x & 1) << 1 | (x >> 2 & 1) << 2;
                assert_eq!(p.eval_word(x), table >> a & 1 == 1);
            }
            assert!(p.support() & !0b10101 == 0);
        }
    }

    #[test]
    fn addr_polynomial_truth_table() {
        let (n, t) = (2u32, 2u32);
        let p = addr_polynomial(n, t).unwrap();
        assert_eq!(p.degree(), t + 1);
        for x in 0..1u64 << p.n_inputs() {
            let a = [x & 3, x >> 2 & 3];
            let b = [x >> 4 & 1, x >> 5 & 1];
            let u = x >> 6 & 3;
            let want = if b[0] == 1 { a[0] } else if b[1] == 1 { a[1] } else { u };
            assert_eq!(p.eval_word(x), want);
        }
    }

    #[test]
    fn json_shape() {
        let f = F2PolyMap::new(
            2,
            vec![F2Poly::from_index_lists(2, &[vec![], vec![0, 1]]).unwrap(), F2Poly::zero(2)],
            2,
        )
        .unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"n_inputs":2,"degree_bound":2,"outputs":[[[],[0,1]],[]]}"#);
        let back: F2PolyMap = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        let with_null: F2PolyMap =
            serde_json::from_str(r#"{"n_inputs":2,"degree_bound":2,"outputs":[[[],[0,1]],null]}"#).unwrap();
        assert_eq!(with_null, f);
    }
}
