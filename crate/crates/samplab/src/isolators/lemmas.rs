use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::isolator::{light_accept_mass, IsolatorClaim, IsolatorSpec, Verified};
use super::tables::MultiOutFnTable;
use crate::dist::{has_min_entropy, mixture_collapse, tv_distance, ExactDist, Mixture, Threshold};
use crate::error::{dim, invalid, precondition, Error, Result};
use crate::f2::{BitMatrix, BitVec, F2PolyMap};
use crate::rational::{pow2, pow2_neg, qi, serde_q, serde_q_opt, Exponent, Q};
use crate::sources::{exact_output, ClassModel, SourceSpec};

fn binom_le(l: u32, d: u32) -> BigInt {
    let mut total = BigInt::zero();
    let mut c = BigInt::one();
    for i in 0..=d.min(l) {
        total += &c;
        c = c * BigInt::from(l - i) / BigInt::from(i + 1);
    }
    total
}

/// Inputs of the hash-family counting inequality.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lemma44Params {
    /// `N = 2^n`.
    pub big_n: BigInt,
    /// `K = 2^k`.
    pub big_k: BigInt,
    #[serde(with = "serde_q")]
    pub p: Q,
    pub t: u32,
    pub ell: u32,
    pub d: u32,
    pub n: u32,
    #[serde(with = "serde_q")]
    pub alpha: Q,
    #[serde(with = "serde_q")]
    pub beta: Q,
    /// Constant of the `t`-wise tail inequality; the condition is
    /// `lhs < 1 / tail`.
    pub tail: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lemma44 {
    #[serde(with = "serde_q")]
    pub first: Q,
    #[serde(with = "serde_q")]
    pub second: Q,
    #[serde(with = "serde_q")]
    pub lhs: Q,
    pub holds: bool,
}

/// Exact left side of
/// `((Npt + t^2) / (N^2 (p - alpha)^2))^(t/2)
///   + 2^(binom(ell, <= d) n) ((Kpt + t^2) / (K^2 (beta - p)^2))^(t/2) < 1/tail`.
pub fn lemma44_inequality(p: &Lemma44Params) -> Result<Lemma44> {
    if !(p.alpha < p.p && p.p < p.beta) {
        return Err(precondition("need alpha < p < beta"));
    }
    if p.t < 4 || p.t % 2 == 1 {
        return Err(precondition("t must be an even integer >= 4"));
    }
    if !p.big_n.is_positive() || !p.big_k.is_positive() || p.tail == 0 {
        return Err(invalid("N, K and the tail constant must be positive"));
    }
    let t = qi(p.t as i64);
    let half = p.t / 2;
    let big_n = Q::from_integer(p.big_n.clone());
    let big_k = Q::from_integer(p.big_k.clone());
    let gap_a = &p.p - &p.alpha;
    let gap_b = &p.beta - &p.p;
    let base1 = (&big_n * &p.p * &t + &t * &t) / (&big_n * &big_n * &gap_a * &gap_a);
    let base2 = (&big_k * &p.p * &t + &t * &t) / (&big_k * &big_k * &gap_b * &gap_b);
    let first = num_traits::pow(base1, half as usize);
    let exponent: usize = (binom_le(p.ell, p.d) * BigInt::from(p.n)).try_into().map_err(|_| Error::SizeCap("union-bound exponent".into()))?;
    let count = Q::from_integer(BigInt::one() << exponent);
    let second = count * num_traits::pow(base2, half as usize);
    let lhs = &first + &second;
    let holds = lhs.clone() * qi(p.tail as i64) < Q::one();
    Ok(Lemma44 { first, second, lhs, holds })
}

/// `ceil(n + 3 log2(1/eps))`: the least `l` with `2^l eps^3 >= 2^n`.
pub fn reduction_length(n: u32, eps: &Q) -> Result<u32> {
    if !eps.is_positive() || *eps >= Q::one() {
        return Err(precondition("eps must lie in (0, 1)"));
    }
    let cube = eps * eps * eps;
    let target = pow2(n as i64);
    let mut l = n;
    while pow2(l as i64) * &cube < target {
        l += 1;
    }
    Ok(l)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputReduction {
    pub ell: u32,
    /// `r x ell` matrix with full column rank.
    pub a: BitMatrix,
    pub b: BitVec,
    #[serde(with = "serde_q")]
    pub achieved_tv: Q,
    pub success: bool,
    pub tried: u64,
}

/// Searches for `h(x) = f(Ax + b)` on `ell` inputs with
/// `TV(f(U^r), h(U^ell)) <= 2 eps`. Candidate 0 is the coordinate embedding
/// with `b = 0`; later candidates draw full-rank `A` by rejection and
/// uniform `b` from a seeded stream. Stops at the first success, otherwise
/// reports the best of `budget` candidates.
pub fn input_reduce(f: &F2PolyMap, eps: &Q, ell: Option<u32>, budget: u64, seed: u64) -> Result<InputReduction> {
    if !eps.is_positive() || *eps > Q::new(1.into(), 4.into()) {
        return Err(precondition("eps must lie in (0, 1/4]"));
    }
    let r = f.n_inputs();
    let n = f.n_outputs();
    let ell = match ell {
        Some(l) => l,
        None => reduction_length(n, eps)?,
    };
    if r <= ell {
        return Err(precondition(format!("need r > ell (r = {r}, ell = {ell})")));
    }
    if r > 24 || budget == 0 {
        return Err(Error::Budget("input reduction needs r <= 24 and a positive budget".into()));
    }
    let target = exact_output(&SourceSpec::Polynomial(f.clone()))?;
    let goal = eps * qi(2);
    let eval = |a: &BitMatrix, b: u64| -> Result<Q> {
        let counts = (0..1u64 << ell).fold(vec![0u64; 1 << n], |mut c, y| {
            c[f.eval_word(a.mul_word(y) ^ b) as usize] += 1;
            c
        });
        tv_distance(&target, &ExactDist::from_dyadic(n, ell, counts)?)
    };
    let embed = BitMatrix::new(r, ell, (0..r).map(|i| if i < ell { 1u64 << i } else { 0 }).collect())?;
    let mut best = (eval(&embed, 0)?, embed, 0u64);
    let mut tried = 1u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while best.0 > goal && tried < budget {
        let a = loop {
            let a = BitMatrix::random(r, ell, &mut rng)?;
            if a.rank() == ell {
                break a;
            }
        };
        let b = rng.gen::<u64>() & ((1u64 << r) - 1);
        let tv = eval(&a, b)?;
        tried += 1;
        if tv < best.0 {
            best = (tv, a, b);
        }
    }
    let success = best.0 <= goal;
    Ok(InputReduction { ell, a: best.1, b: BitVec::new(r, best.2)?, achieved_tv: best.0, success, tried })
}

/// From an `(alpha, beta, k-1)`-isolator for degree-`d` sources with at most
/// `4(k+1)` inputs, the claim `(alpha, beta + 2^-k, k)` for all degree-`d`
/// sources.
pub fn lift_isolator(iso: &IsolatorSpec, k: i64) -> Result<IsolatorClaim> {
    if iso.verified == Verified::Unverified {
        return Err(precondition("the bounded-input isolator is not verified"));
    }
    if k < 1 {
        return Err(precondition("k must be a positive integer"));
    }
    if iso.k != Exponent::int(k - 1) {
        return Err(precondition(format!("isolator has k = {}, lifting to k = {k} needs k - 1", iso.k)));
    }
    match iso.class.model {
        ClassModel::Polynomial { r_max, .. } if r_max as i64 >= 4 * (k + 1) => {}
        ClassModel::Polynomial { r_max, .. } => {
            return Err(precondition(format!("class allows {r_max} inputs; the lift needs 4(k+1) = {}", 4 * (k + 1))))
        }
        _ => return Err(precondition("lifting applies to polynomial classes")),
    }
    Ok(IsolatorClaim::new(iso.function()?, iso.alpha.clone(), &iso.beta + pow2(-k), Exponent::int(k)))
}

/// `Iso(x) = 1(rExt(x) = z)` with the parameters `(2^-m - eps, 2^-m + delta, k)`.
pub fn iso_from_rext(rext: &MultiOutFnTable, z: &BitVec, eps: &Q, delta: &Q, k: &Exponent) -> Result<IsolatorClaim> {
    if z.len() != rext.m() {
        return Err(dim(format!("z has {} bits, extractor outputs {}", z.len(), rext.m())));
    }
    let p = pow2(-(rext.m() as i64));
    Ok(IsolatorClaim::new(rext.indicator(z.bits())?, &p - eps, &p + delta, k.clone()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartTag {
    Constant,
    HighEntropy,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixtureBound {
    #[serde(with = "serde_q")]
    pub bound: Q,
    #[serde(with = "serde_q")]
    pub measured: Q,
    /// Largest extractor error over the high-entropy parts.
    #[serde(with = "serde_q_opt")]
    pub part_error: Option<Q>,
    pub holds: bool,
}

/// For a mixture whose parts are constant or have min-entropy `k`, with
/// `Ext` an `(eps, k)`-extractor on the high-entropy parts, the bound
/// `2^-m + eps + l 2^-k' + 2 gamma` on `Pr[X in L and Ext(X) = z]`, where
/// `L` is the light set of the collapsed mixture at `2^-k'` and `l` the
/// number of parts. The measured side is exact.
pub fn mixture_isolator_bound(
    ext: &MultiOutFnTable,
    mixture: &Mixture,
    tags: &[PartTag],
    z: u64,
    eps: &Q,
    k: &Exponent,
    k_prime: &Exponent,
    gamma: &Q,
) -> Result<MixtureBound> {
    if tags.len() != mixture.len() {
        return Err(dim(format!("{} tags for {} parts", tags.len(), mixture.len())));
    }
    let uniform = ExactDist::uniform(ext.m())?;
    let mut part_error: Option<Q> = None;
    for (i, (part, tag)) in mixture.parts().iter().zip(tags).enumerate() {
        match tag {
            PartTag::Constant if part.point_mass_at().is_none() => {
                return Err(precondition(format!("part {i} is tagged constant but is not a point mass")))
            }
            PartTag::HighEntropy => {
                if !has_min_entropy(part, k) {
                    return Err(precondition(format!("part {i} has min-entropy below {k}")));
                }
                let e = tv_distance(&ext.push(part)?, &uniform)?;
                if e > *eps {
                    return Err(precondition(format!("extractor error {e} on part {i} exceeds eps")));
                }
                if part_error.as_ref().is_none_or(|p| e > *p) {
                    part_error = Some(e);
                }
            }
            _ => {}
        }
    }
    let (light, _) = pow2_neg(&k_prime.0, true);
    let bound = pow2(-(ext.m() as i64)) + eps + qi(mixture.len() as i64) * light + gamma * qi(2);
    let x = mixture_collapse(mixture);
    let measured = light_accept_mass(&ext.indicator(z)?, &x, &Threshold::from_exponent(k_prime))?;
    let holds = measured <= bound;
    Ok(MixtureBound { bound, measured, part_error, holds })
}

/// Exponents of the two-source robustness bound.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoSourceParams {
    pub k: i64,
    pub k0: i64,
    pub k1: i64,
    pub k2: i64,
    #[serde(with = "serde_q")]
    pub eps: Q,
    pub z: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoSourceBound {
    #[serde(with = "serde_q")]
    pub measured: Q,
    #[serde(with = "serde_q")]
    pub bound: Q,
    pub holds: bool,
}

fn two_source_shape(x: &ExactDist, y: &ExactDist, ext: &MultiOutFnTable) -> Result<u32> {
    let n = x.n();
    if y.n() != n || ext.n() != 2 * n {
        return Err(dim(format!("sources of {} and {} bits for a {}-bit extractor", x.n(), y.n(), ext.n())));
    }
    Ok(n)
}

/// `Pr[(X, Y) in L and Ext(X, Y) = z]` for independent `X, Y`, with `L` the
/// light set of the product at `2^-k`, against
/// `2^-(k2 - n - 1) + max(2^-m + eps, 2^-(k1 - k0))`.
pub fn two_source_robust_bound(x: &ExactDist, y: &ExactDist, ext: &MultiOutFnTable, p: &TwoSourceParams) -> Result<TwoSourceBound> {
    let n = two_source_shape(x, y, ext)?;
    if p.k <= p.k1 + p.k2 || p.k1 <= p.k0 {
        return Err(precondition("need k > k1 + k2 and k1 > k0"));
    }
    let threshold = pow2(-p.k);
    let px = x.probs();
    let py = y.probs();
    let mut measured = Q::zero();
    for (a, pa) in px.iter().enumerate() {
        if pa.is_zero() {
            continue;
        }
        for (b, pb) in py.iter().enumerate() {
            if pb.is_zero() || ext.get(a as u64 | (b as u64) << n) != p.z {
                continue;
            }
            let joint = pa * pb;
            if joint <= threshold {
                measured += joint;
            }
        }
    }
    let extract = pow2(-(ext.m() as i64)) + &p.eps;
    let gap = pow2(-(p.k1 - p.k0));
    let bound = pow2(-(p.k2 - n as i64 - 1)) + if extract > gap { extract } else { gap };
    let holds = measured <= bound;
    Ok(TwoSourceBound { measured, bound, holds })
}

/// The error the two-source bound needs on its middle case: when both
/// `Pr[X in L1_X]` and `Pr[Y in L1_Y]` are at least `2^(k0 - k1)`, the TV
/// distance of `Ext` on the two conditioned sources from uniform, where
/// `L1 = {2^-k2 < Pr <= 2^-k1}`. `None` when that case does not arise.
pub fn conditioned_extractor_error(x: &ExactDist, y: &ExactDist, ext: &MultiOutFnTable, k0: i64, k1: i64, k2: i64) -> Result<Option<Q>> {
    let n = two_source_shape(x, y, ext)?;
    let hi = pow2(-k1);
    let lo = pow2(-k2);
    let band = |d: &ExactDist| -> Vec<bool> {
        (0..d.size())
            .map(|v| {
                let pv = d.prob(v);
                pv > lo && pv <= hi
            })
            .collect()
    };
    let (bx, by) = (band(x), band(y));
    let need = pow2(k0 - k1);
    if x.mass_where(|v| bx[v]) < need || y.mass_where(|v| by[v]) < need {
        return Ok(None);
    }
    let cx = x.condition(|v| bx[v]).expect("positive mass");
    let cy = y.condition(|v| by[v]).expect("positive mass");
    let joint = crate::dist::product(&cx, &cy)?;
    let out = joint.push_forward(ext.m(), |v| ext.get(v as u64) as usize)?;
    debug_assert_eq!(joint.n(), 2 * n);
    Ok(Some(tv_distance(&out, &ExactDist::uniform(ext.m())?)?))
}

/// From an `(alpha, beta, k - t)`-isolator for a class of mixture parts, the
/// claim `(alpha, 2^-(t - l) + beta, k)` for mixtures of at most `2^l` parts.
/// Non-integral `t - l` is rounded up, which keeps the claim sound.
pub fn comm_isolator_bound(iso: &IsolatorSpec, ell: u32, t_shift: &Q) -> Result<IsolatorClaim> {
    if iso.verified == Verified::Unverified {
        return Err(precondition("the product-part isolator is not verified"));
    }
    if !t_shift.is_positive() {
        return Err(precondition("t must be positive"));
    }
    let (mass, _) = pow2_neg(&(t_shift - qi(ell as i64)), true);
    Ok(IsolatorClaim::new(iso.function()?, iso.alpha.clone(), mass + &iso.beta, Exponent(&iso.k.0 + t_shift)))
}

/// How flat sources are chosen for the robustness check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum FlatMode {
    Exhaustive,
    Sample { count: u64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlatVerdict {
    pub checked: u64,
    /// Supports with `|S| >= 2^k`, where `L` is everything.
    pub high_branch: u64,
    /// Supports with `|S| < 2^k`, where no support point is light.
    pub low_branch: u64,
    #[serde(with = "serde_q")]
    pub max_high: Q,
    #[serde(with = "serde_q")]
    pub bound: Q,
    pub first_violation: Option<Vec<u32>>,
    pub holds: bool,
}

fn flat_supports(n: u32, min: u32, max: u32, mode: &FlatMode, budget: u64) -> Result<Vec<Vec<u32>>> {
    let size = 1u32 << n;
    let (min, max) = (min.max(1), max.min(size));
    if min > max {
        return Err(invalid("empty support-size range"));
    }
    match mode {
        FlatMode::Exhaustive => {
            if n > 5 {
                return Err(Error::Budget("exhaustive flat enumeration needs n <= 5".into()));
            }
            let count: u128 = (min..=max).map(|s| binom_le(size, s) - binom_le(size, s - 1)).sum::<BigInt>().try_into().unwrap_or(u128::MAX);
            if count > budget as u128 {
                return Err(Error::Budget(format!("{count} flat sources exceed the budget {budget}")));
            }
            Ok((1u64..1u64 << size)
                .filter(|m| (min..=max).contains(&m.count_ones()))
                .map(|m| (0..size).filter(|i| m >> i & 1 == 1).collect())
                .collect())
        }
        FlatMode::Sample { count, seed } => {
            if *count > budget {
                return Err(Error::Budget(format!("{count} flat sources exceed the budget {budget}")));
            }
            Ok((0..*count)
                .map(|i| {
                    let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                    rng.set_stream(i);
                    let s = rng.gen_range(min..=max);
                    let mut v: Vec<u32> = sample_indices(&mut rng, size as usize, s as usize).into_iter().map(|x| x as u32).collect();
                    v.sort_unstable();
                    v
                })
                .collect())
        }
    }
}

/// Checks `Pr[X in L and Ext(X) = z] <= 2^-m + eps` over flat sources with
/// support sizes in `min..=max`, through the two cases of the flat-source
/// argument: large supports make every point light, small ones make none.
pub fn flat_robustness_check(ext: &MultiOutFnTable, z: u64, eps: &Q, k: u32, min: u32, max: u32, mode: &FlatMode, budget: u64) -> Result<FlatVerdict> {
    let n = ext.n();
    let supports = flat_supports(n, min, max, mode, budget)?;
    let bound = pow2(-(ext.m() as i64)) + eps;
    let mut v = FlatVerdict {
        checked: 0,
        high_branch: 0,
        low_branch: 0,
        max_high: Q::zero(),
        bound: bound.clone(),
        first_violation: None,
        holds: true,
    };
    for s in supports {
        v.checked += 1;
        if (s.len() as u64) >> k != 0 {
            v.high_branch += 1;
            let hits = s.iter().filter(|&&x| ext.get(x as u64) == z).count();
            let mass = Q::new(hits.into(), s.len().into());
            if mass > bound && v.first_violation.is_none() {
                v.first_violation = Some(s.clone());
                v.holds = false;
            }
            if mass > v.max_high {
                v.max_high = mass;
            }
        } else {
            v.low_branch += 1;
        }
    }
    Ok(v)
}

/// Largest `TV(Ext(U_S), U^m)` over all supports with `|S| >= 2^k`.
pub fn flat_extractor_error(ext: &MultiOutFnTable, k: u32, budget: u64) -> Result<Q> {
    let n = ext.n();
    let supports = flat_supports(n, 1u32.checked_shl(k).unwrap_or(u32::MAX), 1 << n, &FlatMode::Exhaustive, budget)?;
    let m = ext.m();
    let mut worst = Q::zero();
    for s in supports {
        let mut hist = vec![0i64; 1 << m];
        for &x in &s {
            hist[ext.get(x as u64) as usize] += 1;
        }
        // TV = sum over outputs of max(0, 1/2^m - c/|S|) = sum max(0, |S| - c 2^m) / (|S| 2^m)
        let len = s.len() as i64;
        let over: i64 = hist.iter().map(|&c| (len - (c << m)).max(0)).sum();
        let tv = Q::new(over.into(), (len << m).into());
        if tv > worst {
            worst = tv;
        }
    }
    Ok(worst)
}
