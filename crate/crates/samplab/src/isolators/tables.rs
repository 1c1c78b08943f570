use serde::{Deserialize, Serialize};

use crate::dist::ExactDist;
use crate::error::{invalid, Error, Result};
use crate::f2::{bits_to_string, string_to_bits};

pub const TABLE_BITS_MAX: u32 = 24;

fn check_n(n: u32) -> Result<()> {
    if n > TABLE_BITS_MAX {
        return Err(Error::SizeCap(format!("{n}-bit table exceeds the {TABLE_BITS_MAX}-bit cap")));
    }
    Ok(())
}

/// A boolean function on `{0,1}^n` as a truth table indexed by the input word.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "BoolFnFile", into = "BoolFnFile")]
pub struct BoolFnTable {
    n: u32,
    words: Vec<u64>,
}

/// JSON shape `{n, table}`. Hex digit `j` of `table` holds entries
/// `4j .. 4j+3`, entry `4j+i` in bit `i` of the digit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoolFnFile {
    pub n: u32,
    pub table: String,
}

impl BoolFnTable {
    pub fn from_fn(n: u32, mut f: impl FnMut(u64) -> bool) -> Result<Self> {
        check_n(n)?;
        let size = 1u64 << n;
        let mut words = vec![0u64; size.div_ceil(64) as usize];
        for x in 0..size {
            if f(x) {
                words[(x / 64) as usize] |= 1 << (x % 64);
            }
        }
        Ok(BoolFnTable { n, words })
    }

    pub fn from_bits(n: u32, bits: &[bool]) -> Result<Self> {
        if bits.len() as u64 != 1u64 << n.min(63) {
            return Err(invalid(format!("table for n = {n} needs {} entries", 1u64 << n.min(63))));
        }
        Self::from_fn(n, |x| bits[x as usize])
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn size(&self) -> u64 {
        1 << self.n
    }

    #[inline]
    pub fn get(&self, x: u64) -> bool {
        self.words[(x / 64) as usize] >> (x % 64) & 1 == 1
    }

    /// Number of inputs mapped to 1.
    pub fn ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// `Pr[f(X) = 1]`.
    pub fn accept_prob(&self, x: &ExactDist) -> Result<crate::Q> {
        if x.n() != self.n {
            return Err(crate::error::dim(format!("{}-bit table on {}-bit distribution", self.n, x.n())));
        }
        Ok(x.mass_where(|v| self.get(v as u64)))
    }

    pub fn to_hex(&self) -> String {
        let digits = self.size().div_ceil(4);
        (0..digits)
            .map(|j| {
                let v = (0..4).filter(|i| 4 * j + i < self.size() && self.get(4 * j + i)).fold(0u32, |a, i| a | 1 << i);
                char::from_digit(v, 16).unwrap()
            })
            .collect()
    }

    pub fn from_hex(n: u32, s: &str) -> Result<Self> {
        check_n(n)?;
        let size = 1u64 << n;
        if s.len() as u64 != size.div_ceil(4) {
            return Err(invalid(format!("table for n = {n} needs {} hex digits", size.div_ceil(4))));
        }
        let digits: Vec<u32> = s
            .chars()
            .map(|c| c.to_digit(16).ok_or_else(|| invalid(format!("bad hex digit {c:?}"))))
            .collect::<Result<_>>()?;
        if size < 4 && digits[0] >> size != 0 {
            return Err(invalid("hex table sets entries beyond the domain"));
        }
        Self::from_fn(n, |x| digits[(x / 4) as usize] >> (x % 4) & 1 == 1)
    }
}

impl TryFrom<BoolFnFile> for BoolFnTable {
    type Error = Error;
    fn try_from(f: BoolFnFile) -> Result<Self> {
        BoolFnTable::from_hex(f.n, &f.table)
    }
}

impl From<BoolFnTable> for BoolFnFile {
    fn from(t: BoolFnTable) -> Self {
        BoolFnFile { n: t.n, table: t.to_hex() }
    }
}

/// A function `{0,1}^n -> {0,1}^m` as a table of output words.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "MultiOutFile", into = "MultiOutFile")]
pub struct MultiOutFnTable {
    n: u32,
    m: u32,
    values: Vec<u64>,
}

/// JSON shape `{n, m, values}` with each value an `m`-character bit string.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MultiOutFile {
    pub n: u32,
    pub m: u32,
    pub values: Vec<String>,
}

impl MultiOutFnTable {
    pub fn new(n: u32, m: u32, values: Vec<u64>) -> Result<Self> {
        check_n(n)?;
        if m == 0 || m > n.max(1) {
            return Err(invalid(format!("output length {m} must lie in 1..={}", n.max(1))));
        }
        if values.len() as u64 != 1u64 << n {
            return Err(invalid(format!("table for n = {n} needs {} entries", 1u64 << n)));
        }
        if values.iter().any(|&v| v >> m != 0) {
            return Err(invalid(format!("table value wider than {m} bits")));
        }
        Ok(MultiOutFnTable { n, m, values })
    }

    pub fn from_fn(n: u32, m: u32, f: impl FnMut(u64) -> u64) -> Result<Self> {
        check_n(n)?;
        Self::new(n, m, (0..1u64 << n).map(f).collect())
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    #[inline]
    pub fn get(&self, x: u64) -> u64 {
        self.values[x as usize]
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    /// `1(f(x) = z)`.
    pub fn indicator(&self, z: u64) -> Result<BoolFnTable> {
        if z >> self.m != 0 {
            return Err(invalid(format!("z wider than {} bits", self.m)));
        }
        BoolFnTable::from_fn(self.n, |x| self.get(x) == z)
    }

    /// Distribution of `f(X)`.
    pub fn push(&self, x: &ExactDist) -> Result<ExactDist> {
        if x.n() != self.n {
            return Err(crate::error::dim(format!("{}-bit table on {}-bit distribution", self.n, x.n())));
        }
        x.push_forward(self.m, |v| self.values[v] as usize)
    }
}

impl TryFrom<MultiOutFile> for MultiOutFnTable {
    type Error = Error;
    fn try_from(f: MultiOutFile) -> Result<Self> {
        let values = f
            .values
            .iter()
            .map(|s| match string_to_bits(s) {
                Some((v, len)) if len == f.m => Ok(v),
                _ => Err(invalid(format!("value {s:?} is not a {}-bit string", f.m))),
            })
            .collect::<Result<_>>()?;
        MultiOutFnTable::new(f.n, f.m, values)
    }
}

impl From<MultiOutFnTable> for MultiOutFile {
    fn from(t: MultiOutFnTable) -> Self {
        let values = t.values.iter().map(|&v| bits_to_string(v, t.m)).collect();
        MultiOutFile { n: t.n, m: t.m, values }
    }
}
