use num_bigint::BigInt;
use num_traits::One;
use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dist::ExactDist;
use crate::error::{dim, invalid, Error, Result};
use crate::rational::{serde_q, serde_q_vec, Q};
use crate::sources::ClassSpec;
use crate::sweep::Jobs;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountingSearchReport {
    pub class: String,
    pub n: u32,
    pub s: u32,
    pub trials: u32,
    pub seed: u64,
    pub members: u64,
    pub best_trial: u32,
    pub best_support: Vec<u32>,
    /// `min over members of TV(U_S, X)` for the best support.
    #[serde(with = "serde_q")]
    pub worst_tv: Q,
    pub worst_member: u64,
    #[serde(with = "serde_q_vec")]
    pub per_trial: Vec<Q>,
    /// `1 - s/2^(n-1) - 2 tau` with `2 M exp(-2 tau^2 s) = 1`: the distance the
    /// union-bound argument guarantees for some support of this size.
    pub target: f64,
}

/// Largest overlap `sum_{y in S} min(X(y), 1/s)` so far, kept as an exact
/// fraction `num / (s 2^e)` when `X` is dyadic.
#[derive(Clone, Debug)]
enum Overlap {
    Dyadic { num: u128, e: u32 },
    General(Q),
}

impl Overlap {
    fn value(&self, s: u32) -> Q {
        match self {
            Overlap::Dyadic { num, e } => Q::new(BigInt::from(*num), BigInt::from(s) << *e),
            Overlap::General(v) => v.clone(),
        }
    }

    /// `self > other`, exactly.
    fn exceeds(&self, other: &Overlap, s: u32) -> bool {
        match (self, other) {
            (Overlap::Dyadic { num: a, e: ea }, Overlap::Dyadic { num: b, e: eb }) => {
                let l = (*ea).max(*eb);
                (a << (l - ea)) > (b << (l - eb))
            }
            _ => self.value(s) > other.value(s),
        }
    }
}

struct Support {
    words: Vec<u64>,
}

impl Support {
    fn new(n: u32, points: &[u32]) -> Self {
        let mut words = vec![0u64; ((1usize << n) + 63) / 64];
        for &p in points {
            words[p as usize / 64] |= 1 << (p % 64);
        }
        Support { words }
    }

    fn contains(&self, x: usize) -> bool {
        self.words[x / 64] >> (x % 64) & 1 == 1
    }
}

fn overlap(x: &ExactDist, atoms: &[(usize, u64)], s: u32, support: &Support) -> Overlap {
    if let Some((e, _)) = x.dyadic() {
        let cap = 1u128 << e;
        let num = atoms.iter().filter(|(y, _)| support.contains(*y)).map(|&(_, c)| cap.min(s as u128 * c as u128)).sum();
        return Overlap::Dyadic { num, e };
    }
    let inv = Q::new(1.into(), (s as i64).into());
    let v = atoms
        .iter()
        .filter(|(y, _)| support.contains(*y))
        .map(|&(y, _)| {
            let p = x.prob(y);
            if p < inv {
                p
            } else {
                inv.clone()
            }
        })
        .sum();
    Overlap::General(v)
}

fn atoms_of(x: &ExactDist) -> Vec<(usize, u64)> {
    match x.dyadic() {
        Some((_, nums)) => nums.iter().enumerate().filter(|(_, &c)| c != 0).map(|(y, &c)| (y, c)).collect(),
        None => (0..x.size()).filter(|&y| !x.is_zero_at(y)).map(|y| (y, 0)).collect(),
    }
}

type Best = Vec<Option<(Overlap, u64)>>;

fn sweep(class: &ClassSpec, n: u32, s: u32, supports: &[Support], jobs: Jobs) -> Result<(u64, Best)> {
    if class.view_bits()? != n {
        return Err(dim(format!("class outputs {} bits, supports live in {{0,1}}^{n}", class.view_bits()?)));
    }
    let compiled = class.compile()?;
    let blank = || (0u64, vec![None; supports.len()]);
    compiled.fold_members(
        jobs,
        blank,
        |(mut members, mut best): (u64, Best), i, dists| {
            for x in dists {
                members += 1;
                let atoms = atoms_of(&x);
                for (slot, sup) in best.iter_mut().zip(supports) {
                    let o = overlap(&x, &atoms, s, sup);
                    if slot.as_ref().is_none_or(|(b, _)| o.exceeds(b, s)) {
                        *slot = Some((o, i));
                    }
                }
            }
            Ok((members, best))
        },
        |(ma, a), (mb, b)| {
            let merged = a
                .into_iter()
                .zip(b)
                .map(|(x, y)| match (x, y) {
                    (Some(x), Some(y)) => Some(if y.0.exceeds(&x.0, s) { y } else { x }),
                    (x, y) => x.or(y),
                })
                .collect();
            (ma + mb, merged)
        },
    )
}

fn check_support_size(n: u32, s: u32) -> Result<()> {
    if n == 0 || n > 12 {
        return Err(invalid("counting search needs 1 <= n <= 12"));
    }
    if s == 0 || s as u64 > 1u64 << n {
        return Err(invalid(format!("support size {s} outside 1..=2^{n}")));
    }
    Ok(())
}

/// `min over members of TV(U_S, X)` for one support, with the first member
/// attaining it.
pub fn support_worst_tv(class: &ClassSpec, n: u32, support: &[u32], jobs: Jobs) -> Result<(Q, u64)> {
    let s = support.len() as u32;
    check_support_size(n, s)?;
    if ExactDist::flat(n, support).is_err() {
        return Err(invalid("support points must be distinct strings of n bits"));
    }
    let (_, best) = sweep(class, n, s, &[Support::new(n, support)], jobs)?;
    let (o, i) = best.into_iter().next().flatten().ok_or_else(|| Error::Invalid("empty class".into()))?;
    Ok((Q::one() - o.value(s), i))
}

fn draw_support(n: u32, s: u32, seed: u64, trial: u32) -> Vec<u32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    let mut v: Vec<u32> = sample_indices(&mut rng, 1usize << n, s as usize).into_iter().map(|x| x as u32).collect();
    v.sort_unstable();
    v
}

/// Draws `trials` random supports of size `s` and keeps the one whose
/// uniform distribution is farthest from its nearest class member.
pub fn counting_search(class: &ClassSpec, n: u32, s: u32, trials: u32, seed: u64, jobs: Jobs) -> Result<CountingSearchReport> {
    check_support_size(n, s)?;
    if trials == 0 {
        return Err(invalid("at least one trial is needed"));
    }
    let points: Vec<Vec<u32>> = (0..trials).map(|i| draw_support(n, s, seed, i)).collect();
    let supports: Vec<Support> = points.iter().map(|p| Support::new(n, p)).collect();
    let (members, best) = sweep(class, n, s, &supports, jobs)?;
    let mut per_trial = Vec::with_capacity(trials as usize);
    let mut chosen: Option<(u32, Q, u64)> = None;
    for (i, b) in best.into_iter().enumerate() {
        let (o, m) = b.ok_or_else(|| Error::Invalid("empty class".into()))?;
        let tv = Q::one() - o.value(s);
        if chosen.as_ref().is_none_or(|(_, c, _)| tv > *c) {
            chosen = Some((i as u32, tv.clone(), m));
        }
        per_trial.push(tv);
    }
    let (best_trial, worst_tv, worst_member) = chosen.expect("trials > 0");
    let m = members.max(1) as f64;
    let tau = ((2.0 * m).ln() / (2.0 * s as f64)).sqrt();
    let target = 1.0 - s as f64 / (1u64 << (n - 1)) as f64 - 2.0 * tau;
    Ok(CountingSearchReport {
        class: class.id(),
        n,
        s,
        trials,
        seed,
        members,
        best_trial,
        best_support: points[best_trial as usize].clone(),
        worst_tv,
        worst_member,
        per_trial,
        target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::tv_distance;
    use num_traits::Zero;
    use crate::rational::q;
    use crate::sources::{ClassModel, EnumMode};

    fn explicit(d: Vec<ExactDist>) -> ClassSpec {
        ClassSpec::new(ClassModel::Explicit { dists: d }, EnumMode::Exhaustive)
    }

    #[test]
    fn uniform_class_closed_form() {
        let class = explicit(vec![ExactDist::uniform(5).unwrap()]);
        let r = counting_search(&class, 5, 12, 6, 3, Jobs(1)).unwrap();
        assert!(r.per_trial.iter().all(|v| *v == q(20, 32)));
        let all: Vec<u32> = (0..32).collect();
        assert_eq!(support_worst_tv(&class, 5, &all, Jobs(1)).unwrap().0, Q::zero());
    }

    #[test]
    fn matches_direct_tv_on_degree_one_class() {
        let class = ClassSpec::new(ClassModel::Polynomial { n: 4, d: 1, r_min: 1, r_max: 2 }, EnumMode::Exhaustive);
        let compiled = class.compile().unwrap();
        let r = counting_search(&class, 4, 5, 4, 9, Jobs(2)).unwrap();
        for (trial, got) in r.per_trial.iter().enumerate() {
            let d = ExactDist::flat(4, &draw_support(4, 5, 9, trial as u32)).unwrap();
            let direct = (0..compiled.len()).map(|i| tv_distance(&compiled.member_output(i).unwrap(), &d).unwrap()).min().unwrap();
            assert_eq!(*got, direct);
        }
        assert_eq!(r, counting_search(&class, 4, 5, 4, 9, Jobs(1)).unwrap());
    }

    #[test]
    fn general_rationals_take_the_slow_path() {
        let third = ExactDist::new(2, vec![q(1, 3), q(2, 3), Q::zero(), Q::zero()]).unwrap();
        let class = explicit(vec![third.clone()]);
        let (tv, _) = support_worst_tv(&class, 2, &[0, 2], Jobs(1)).unwrap();
        assert_eq!(tv, tv_distance(&third, &ExactDist::flat(2, &[0, 2]).unwrap()).unwrap());
    }

    #[test]
    fn nested_supports_need_not_decrease() {
        // against a point mass, growing S = {1} to {0, 1} to {0, 1, 2, 3}
        // moves the distance 1 -> 1/2 -> 3/4
        let class = explicit(vec![ExactDist::point(2, 0).unwrap()]);
        let chain: Vec<Q> = [vec![1], vec![0, 1], vec![0, 1, 2, 3]].iter().map(|s| support_worst_tv(&class, 2, s, Jobs(1)).unwrap().0).collect();
        assert_eq!(chain, vec![Q::one(), q(1, 2), q(3, 4)]);
    }
}
