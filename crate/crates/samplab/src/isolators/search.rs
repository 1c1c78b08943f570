use num_traits::One;
use serde::{Deserialize, Serialize};

use super::hash::{HashFamily, HashMember};
use super::isolator::{verify_isolator_on_profile, ClassProfile, Verification};
use crate::error::{dim, Result};
use crate::rational::{serde_q, Exponent, Q};
use crate::sweep::{map_reduce_chunked, Jobs};

/// Acceptance and worst light mass of one family member.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberStat {
    pub index: u64,
    #[serde(with = "serde_q")]
    pub acceptance: Q,
    #[serde(with = "serde_q")]
    pub worst_light_mass: Q,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Found {
    pub index: u64,
    pub member: HashMember,
    pub verification: Verification,
}

/// Result of walking a hash family. `found` is `None` when the family or
/// the budget ran out; `stats` covers every member tried.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub found: Option<Found>,
    pub tried: u64,
    pub stats: Vec<MemberStat>,
}

impl SearchOutcome {
    pub fn exhausted(&self) -> bool {
        self.found.is_none()
    }
}

const BLOCK: u64 = 256;

/// Tries `g_i(x) = 1(h_i(x) = 0^m)` for `i = 0, 1, ...` in family order and
/// returns the first member that passes `verify_isolator` against the
/// class profile. Members are checked in parallel blocks; the answer is the
/// lowest passing index regardless of `jobs`.
pub fn search_isolator(
    family: &HashFamily,
    alpha: &Q,
    beta: &Q,
    k: &Exponent,
    profile: &ClassProfile,
    budget: u64,
    jobs: Jobs,
) -> Result<SearchOutcome> {
    if profile.spec.view_bits()? != family.n() {
        return Err(dim(format!("{}-bit family on a {}-bit class", family.n(), profile.spec.view_bits()?)));
    }
    let mut stats = Vec::new();
    if *alpha > Q::one() {
        return Ok(SearchOutcome { found: None, tried: 0, stats });
    }
    let limit = budget.min(family.size());
    let mut start = 0u64;
    while start < limit {
        let end = limit.min(start + BLOCK);
        let block: Vec<Result<(MemberStat, Verification)>> = map_reduce_chunked(
            start..end,
            1,
            jobs,
            |r| {
                r.map(|i| {
                    let g = family.isolator(i)?;
                    let v = verify_isolator_on_profile(&g, alpha, beta, k, profile)?;
                    let stat = MemberStat { index: i, acceptance: v.acceptance.clone(), worst_light_mass: v.worst_light_mass.clone() };
                    Ok((stat, v))
                })
                .collect::<Vec<_>>()
            },
            |mut a, b| {
                a.extend(b);
                a
            },
            Vec::new(),
        );
        for item in block {
            let (stat, v) = item?;
            let index = stat.index;
            stats.push(stat);
            if v.passed() {
                let member = family.member(index);
                return Ok(SearchOutcome { found: Some(Found { index, member, verification: v }), tried: index + 1, stats });
            }
        }
        start = end;
    }
    Ok(SearchOutcome { found: None, tried: limit, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::ExactDist;
    use crate::isolators::{class_profile, verify_isolator};
    use crate::rational::q;
    use crate::sources::{ClassModel, ClassSpec, EnumMode};

    #[test]
    fn uniform_class_search_is_confirmed() {
        let class = ClassSpec::new(ClassModel::Explicit { dists: vec![ExactDist::uniform(4).unwrap()] }, EnumMode::Exhaustive);
        let profile = class_profile(&class, Jobs(1)).unwrap();
        let fam = HashFamily::new(4, 1, 2).unwrap();
        let out = search_isolator(&fam, &q(1, 4), &q(3, 4), &Exponent::int(4), &profile, 1 << 8, Jobs(2)).unwrap();
        let found = out.found.expect("a member with acceptance in [1/4, 3/4]");
        let g = fam.isolator(found.index).unwrap();
        let again = verify_isolator(&g, &q(1, 4), &q(3, 4), &Exponent::int(4), &class, Jobs(1)).unwrap();
        assert!(again.passed());
        assert_eq!(out.tried, found.index + 1);
        assert_eq!(out.stats.len() as u64, out.tried);
    }

    #[test]
    fn impossible_alpha_tries_nothing() {
        let class = ClassSpec::new(ClassModel::Explicit { dists: vec![ExactDist::uniform(3).unwrap()] }, EnumMode::Exhaustive);
        let profile = class_profile(&class, Jobs(1)).unwrap();
        let fam = HashFamily::new(3, 1, 2).unwrap();
        let out = search_isolator(&fam, &q(3, 2), &Q::one(), &Exponent::int(1), &profile, 64, Jobs(1)).unwrap();
        assert!(out.exhausted());
        assert_eq!(out.tried, 0);
    }

    #[test]
    fn result_does_not_depend_on_jobs() {
        let class = ClassSpec::new(ClassModel::Polynomial { n: 3, d: 1, r_min: 1, r_max: 3 }, EnumMode::Exhaustive);
        let profile = class_profile(&class, Jobs(1)).unwrap();
        let fam = HashFamily::new(3, 1, 2).unwrap();
        let a = search_isolator(&fam, &q(1, 4), &q(5, 8), &Exponent::int(2), &profile, 64, Jobs(1)).unwrap();
        let b = search_isolator(&fam, &q(1, 4), &q(5, 8), &Exponent::int(2), &profile, 64, Jobs(4)).unwrap();
        assert_eq!(a, b);
        if let Some(f) = &a.found {
            let g = fam.isolator(f.index).unwrap();
            assert!(verify_isolator(&g, &q(1, 4), &q(5, 8), &Exponent::int(2), &class, Jobs(1)).unwrap().passed());
        }
    }
}
