use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{CommSpec, RobpSpec};
use crate::dist::{mixture_collapse, ExactDist, Mixture};
use crate::error::{invalid, Error, Result};
use crate::f2::F2PolyMap;

/// Seed spaces above `2^SEED_BITS_MAX` are not enumerated.
pub const SEED_BITS_MAX: u32 = 24;

/// A polynomial map in which every output reads at most `delta` inputs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LocalFile", into = "LocalFile")]
pub struct LocalSource {
    map: F2PolyMap,
    delta: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocalFile {
    pub map: F2PolyMap,
    pub delta: u32,
}

impl LocalSource {
    pub fn new(map: F2PolyMap, delta: u32) -> Result<Self> {
        for (j, p) in map.outputs().iter().enumerate() {
            let reads = p.support().count_ones();
            if reads > delta {
                return Err(invalid(format!("output {j} reads {reads} inputs; locality bound is {delta}")));
            }
        }
        Ok(LocalSource { map, delta })
    }

    pub fn map(&self) -> &F2PolyMap {
        &self.map
    }

    pub fn delta(&self) -> u32 {
        self.delta
    }
}

impl TryFrom<LocalFile> for LocalSource {
    type Error = Error;
    fn try_from(f: LocalFile) -> Result<Self> {
        LocalSource::new(f.map, f.delta)
    }
}

impl From<LocalSource> for LocalFile {
    fn from(l: LocalSource) -> Self {
        LocalFile { map: l.map, delta: l.delta }
    }
}

/// A sampler driven by uniform seed bits, or an explicit mixture.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "model", content = "body", rename_all = "lowercase")]
pub enum SourceSpec {
    Polynomial(F2PolyMap),
    Local(LocalSource),
    Robp(RobpSpec),
    Comm(CommSpec),
    Mixture(Mixture),
}

impl SourceSpec {
    pub fn output_bits(&self) -> u32 {
        match self {
            SourceSpec::Polynomial(m) => m.n_outputs(),
            SourceSpec::Local(l) => l.map().n_outputs(),
            SourceSpec::Robp(r) => r.output_bits(),
            SourceSpec::Comm(c) => c.output_bits(),
            SourceSpec::Mixture(m) => m.n(),
        }
    }

    /// Number of uniform seed bits; `None` for explicit mixtures.
    pub fn seed_bits(&self) -> Option<u32> {
        match self {
            SourceSpec::Polynomial(m) => Some(m.n_inputs()),
            SourceSpec::Local(l) => Some(l.map().n_inputs()),
            SourceSpec::Robp(r) => Some(r.steps()),
            SourceSpec::Comm(c) => Some(c.r_a() + c.r_b()),
            SourceSpec::Mixture(_) => None,
        }
    }

    /// Output word for a seed word.
    pub fn eval_seed(&self, seed: u64) -> Option<u64> {
        match self {
            SourceSpec::Polynomial(m) => Some(m.eval_word(seed)),
            SourceSpec::Local(l) => Some(l.map().eval_word(seed)),
            SourceSpec::Robp(r) => Some(r.eval(seed)),
            SourceSpec::Comm(c) => {
                let a = seed & ((1u64 << c.r_a()) - 1);
                Some(c.eval(a, seed >> c.r_a()))
            }
            SourceSpec::Mixture(_) => None,
        }
    }
}

/// The exact distribution of the source's output, by enumerating seeds.
pub fn exact_output(src: &SourceSpec) -> Result<ExactDist> {
    let n = src.output_bits();
    match src {
        SourceSpec::Mixture(m) => Ok(mixture_collapse(m)),
        _ => {
            let r = src.seed_bits().unwrap();
            if r > SEED_BITS_MAX {
                return Err(Error::Budget(format!("seed space 2^{r} exceeds 2^{SEED_BITS_MAX}")));
            }
            if n > crate::dist::MAX_BITS {
                return Err(Error::SizeCap(format!("{n} output bits")));
            }
            let mut counts = vec![0u64; 1 << n];
            for seed in 0..1u64 << r {
                counts[src.eval_seed(seed).unwrap() as usize] += 1;
            }
            ExactDist::from_dyadic(n, r, counts)
        }
    }
}

/// One draw from the source. Explicit mixtures are sampled through a 53-bit
/// floating point inverse CDF; seed-driven sources are sampled exactly.
pub fn sample<R: Rng + ?Sized>(src: &SourceSpec, rng: &mut R) -> u64 {
    match src {
        SourceSpec::Mixture(m) => {
            let pick = |rng: &mut R, probs: &mut dyn Iterator<Item = f64>| {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut last = 0;
                for (i, p) in probs.enumerate() {
                    acc += p;
                    if p > 0.0 {
                        last = i;
                    }
                    if u < acc {
                        return i;
                    }
                }
                last
            };
            let w = pick(rng, &mut m.weights().iter().map(crate::rational::to_f64));
            let part = &m.parts()[w];
            pick(rng, &mut (0..part.size()).map(|x| crate::rational::to_f64(&part.prob(x)))) as u64
        }
        _ => {
            let r = src.seed_bits().unwrap();
            let seed = if r == 0 { 0 } else { rng.gen::<u64>() >> (64 - r) };
            src.eval_seed(seed).unwrap()
        }
    }
}
