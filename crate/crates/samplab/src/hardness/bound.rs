use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use super::hard::build_hard_dist;
use crate::dist::tv_distance;
use crate::error::{dim, invalid, precondition, Result};
use crate::isolators::{IsolatorSpec, Verified};
use crate::rational::{pow2, qi, serde_q, serde_q_opt, Q};
use crate::sources::{ClassSpec, ClassView};
use crate::sweep::Jobs;

fn check_hypotheses(alpha: &Q, beta: &Q, k: i64, n: u32, t: u32) -> Result<()> {
    let unit = |v: &Q| !v.is_negative() && *v <= Q::one();
    if !unit(alpha) || !unit(beta) {
        return Err(precondition("alpha and beta must lie in [0, 1]"));
    }
    if t == 0 || k < 1 || n == 0 {
        return Err(precondition("t, k and n must be positive integers"));
    }
    if k > n as i64 - 1 {
        return Err(precondition(format!("need k <= n - 1 (k = {k}, n = {n})")));
    }
    Ok(())
}

/// `1 - (1 - alpha)^(t+1) - 2^-(n-k) (2 t^3 + 1) - beta`, possibly negative.
pub fn theorem_bound(alpha: &Q, beta: &Q, k: i64, n: u32, t: u32) -> Result<Q> {
    check_hypotheses(alpha, beta, k, n, t)?;
    let t3 = qi(t as i64).pow(3);
    Ok(Q::one() - num_traits::pow(Q::one() - alpha, t as usize + 1) - pow2(k - n as i64) * (t3 * qi(2) + Q::one()) - beta)
}

/// The bound next to the quantities its derivation combines.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundTerms {
    #[serde(with = "serde_q")]
    pub general: Q,
    /// `2 alpha - alpha^2 - 2^-(n-k-2) - beta`, only for `t = 1`.
    #[serde(with = "serde_q_opt")]
    pub single_block: Option<Q>,
    /// `(1 - alpha)^(t+1)`, bounding `Pr[Iso(addr(D)) = 0]`.
    #[serde(with = "serde_q")]
    pub iso_zero: Q,
    /// `t^2 2^-(n - (log t + k + 1))`: some `D_i` is heavy for some `X_j`.
    #[serde(with = "serde_q")]
    pub heavy_blocks: Q,
    /// `2^-(n-k)`: the fallback block is heavy for `addr(X)`.
    #[serde(with = "serde_q")]
    pub heavy_fallback: Q,
    /// `1 - iso_zero - heavy_blocks - beta - heavy_fallback`.
    #[serde(with = "serde_q")]
    pub proof_internal: Q,
    pub vacuous: bool,
}

pub fn theorem_bound_terms(alpha: &Q, beta: &Q, k: i64, n: u32, t: u32) -> Result<BoundTerms> {
    let general = theorem_bound(alpha, beta, k, n, t)?;
    let iso_zero = num_traits::pow(Q::one() - alpha, t as usize + 1);
    // 2^(log t) = t exactly, so the exponent stays rational
    let tq = qi(t as i64);
    let heavy_blocks = &tq * &tq * &tq * pow2(k + 1 - n as i64);
    let heavy_fallback = pow2(k - n as i64);
    let proof_internal = Q::one() - &iso_zero - &heavy_blocks - beta - &heavy_fallback;
    let single_block = (t == 1).then(|| alpha * qi(2) - alpha * alpha - pow2(k + 2 - n as i64) - beta);
    let vacuous = !general.is_positive();
    Ok(BoundTerms { general, single_block, iso_zero, heavy_blocks, heavy_fallback, proof_internal, vacuous })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceTv {
    pub member: u64,
    #[serde(with = "serde_q")]
    pub tv: Q,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundReport {
    pub class: String,
    pub n: u32,
    pub t: u32,
    pub k: i64,
    #[serde(with = "serde_q")]
    pub alpha: Q,
    #[serde(with = "serde_q")]
    pub beta: Q,
    pub terms: BoundTerms,
    #[serde(with = "serde_q")]
    pub rhs: Q,
    pub members: u64,
    /// Every member's distance, when requested.
    pub per_source: Option<Vec<SourceTv>>,
    #[serde(with = "serde_q_opt")]
    pub min_tv: Option<Q>,
    pub argmin: Option<u64>,
    pub violations: u64,
    pub first_violation: Option<SourceTv>,
    pub certified: bool,
}

struct Sweep {
    members: u64,
    min: Option<SourceTv>,
    violations: u64,
    first_violation: Option<SourceTv>,
    per_source: Vec<SourceTv>,
}

impl Sweep {
    fn empty() -> Self {
        Sweep { members: 0, min: None, violations: 0, first_violation: None, per_source: Vec::new() }
    }

    fn merge(mut self, other: Sweep) -> Sweep {
        self.members += other.members;
        self.violations += other.violations;
        self.first_violation = self.first_violation.or(other.first_violation);
        self.min = match (self.min, other.min) {
            (Some(a), Some(b)) => Some(if b.tv < a.tv { b } else { a }),
            (a, b) => a.or(b),
        };
        self.per_source.extend(other.per_source);
        self
    }
}

/// Measures `TV(X, D)` for every member of `class` against the bound of the
/// supplied isolator, which must be exhaustively verified on the addressed
/// class `{addr(X)}` at an integral `k`.
pub fn certify_theorem(iso: &IsolatorSpec, t: u32, class: &ClassSpec, record: bool, jobs: Jobs) -> Result<BoundReport> {
    if iso.verified != Verified::VerifiedExhaustive {
        return Err(precondition("certification needs an exhaustively verified isolator"));
    }
    if class.view != ClassView::Output {
        return Err(invalid("the certified class must use the output view"));
    }
    if iso.class != class.clone().with_view(ClassView::Addr { t }) {
        return Err(precondition(format!("isolator was verified on {}, not on addr of {}", iso.class.id(), class.id())));
    }
    let n = iso.n;
    if class.view_bits()? != t * (n + 1) {
        return Err(dim(format!("class outputs {} bits, D has {}", class.view_bits()?, t * (n + 1))));
    }
    let k = iso.k.as_integer().ok_or_else(|| precondition("the bound needs an integral k"))?;
    let terms = theorem_bound_terms(&iso.alpha, &iso.beta, k, n, t)?;
    let rhs = terms.general.clone();
    let d = build_hard_dist(&iso.function()?, t)?.dist;
    let compiled = class.compile()?;
    let sweep = compiled.fold_members(
        jobs,
        Sweep::empty,
        |mut acc, i, dists| {
            for x in dists {
                let tv = tv_distance(&x, &d)?;
                acc.members += 1;
                if tv < rhs {
                    acc.violations += 1;
                    if acc.first_violation.is_none() {
                        acc.first_violation = Some(SourceTv { member: i, tv: tv.clone() });
                    }
                }
                if acc.min.as_ref().is_none_or(|m| tv < m.tv) {
                    acc.min = Some(SourceTv { member: i, tv: tv.clone() });
                }
                if record {
                    acc.per_source.push(SourceTv { member: i, tv });
                }
            }
            Ok(acc)
        },
        Sweep::merge,
    )?;
    let certified = sweep.violations == 0;
    let (min_tv, argmin) = match sweep.min {
        Some(m) => (Some(m.tv), Some(m.member)),
        None => (None, None),
    };
    Ok(BoundReport {
        class: class.id(),
        n,
        t,
        k,
        alpha: iso.alpha.clone(),
        beta: iso.beta.clone(),
        terms,
        rhs,
        members: sweep.members,
        per_source: record.then_some(sweep.per_source),
        min_tv,
        argmin,
        violations: sweep.violations,
        first_violation: sweep.first_violation,
        certified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;
    use crate::dist::ExactDist;
    use crate::isolators::{verify_isolator, BoolFnTable};
    use crate::rational::{q, Exponent};
    use crate::sources::{ClassModel, EnumMode};

    #[test]
    fn formula_arithmetic() {
        assert_eq!(theorem_bound(&q(1, 2), &q(1, 2), 2, 10, 1).unwrap(), q(61, 256));
        let v = theorem_bound(&Q::zero(), &q(1, 3), 2, 10, 2).unwrap();
        assert_eq!(v, -q(1, 3) - q(17, 256));
        assert!(theorem_bound(&q(1, 2), &q(1, 2), 10, 10, 1).is_err());
        assert!(theorem_bound(&q(3, 2), &q(1, 2), 1, 10, 1).is_err());
    }

    #[test]
    fn single_block_form_is_weaker_by_one_quarter_unit() {
        for (a, b, k, n) in [(q(1, 2), q(1, 2), 2, 10), (q(1, 8), q(1, 16), 1, 3), (q(3, 4), Q::zero(), 3, 9)] {
            let t = theorem_bound_terms(&a, &b, k, n, 1).unwrap();
            // 3 * 2^-(n-k) against 4 * 2^-(n-k)
            assert_eq!(t.general - t.single_block.unwrap(), pow2(k - n as i64));
            assert_eq!(t.proof_internal, theorem_bound(&a, &b, k, n, 1).unwrap());
        }
        let t = theorem_bound_terms(&q(1, 4), &q(1, 8), 2, 12, 3).unwrap();
        assert!(t.single_block.is_none());
        assert_eq!(t.proof_internal, t.general);
    }

    fn explicit(d: Vec<ExactDist>) -> ClassSpec {
        ClassSpec::new(ClassModel::Explicit { dists: d }, EnumMode::Exhaustive)
    }

    #[test]
    fn uniform_product_against_d() {
        // the product of uniforms on t(n+1) bits: Iso bits are independent of blocks
        let (n, t) = (3u32, 2u32);
        let class = explicit(vec![ExactDist::uniform(t * (n + 1)).unwrap()]);
        let f = BoolFnTable::from_fn(n, |x| x < 4).unwrap();
        let addr = class.clone().with_view(ClassView::Addr { t });
        let v = verify_isolator(&f, &q(1, 2), &q(1, 2), &Exponent::int(1), &addr, Jobs(1)).unwrap();
        assert!(v.passed());
        let r = certify_theorem(&v.spec, t, &class, true, Jobs(1)).unwrap();
        // each block bit matches Iso with probability 1/2, so the overlap is 2^-t
        assert_eq!(r.min_tv, Some(Q::one() - pow2(-(t as i64))));
        assert!(r.certified && r.terms.vacuous);
        assert_eq!(r.per_source.unwrap().len(), 1);
    }

    #[test]
    fn rejects_unverified_or_mismatched() {
        let class = explicit(vec![ExactDist::uniform(4).unwrap()]);
        let f = BoolFnTable::from_fn(3, |x| x == 0).unwrap();
        let v = verify_isolator(&f, &q(1, 8), &Q::one(), &Exponent::int(1), &class.clone().with_view(ClassView::Addr { t: 1 }), Jobs(1)).unwrap();
        let mut unverified = v.spec.clone();
        unverified.verified = Verified::Unverified;
        assert!(certify_theorem(&unverified, 1, &class, false, Jobs(1)).is_err());
        let other = explicit(vec![ExactDist::point(4, 0).unwrap()]);
        assert!(certify_theorem(&v.spec, 1, &other, false, Jobs(1)).is_err());
        assert!(certify_theorem(&v.spec, 1, &class, false, Jobs(1)).unwrap().certified);
    }

    #[test]
    fn small_degree_one_sweep_is_certified_and_job_independent() {
        let class = ClassSpec::new(ClassModel::Polynomial { n: 6, d: 1, r_min: 1, r_max: 2 }, EnumMode::Exhaustive);
        let addr = class.clone().with_view(ClassView::Addr { t: 2 });
        let f = BoolFnTable::from_fn(2, |x| x == 1).unwrap();
        let probe = verify_isolator(&f, &q(1, 4), &Q::one(), &Exponent::int(1), &addr, Jobs(1)).unwrap();
        let v = verify_isolator(&f, &q(1, 4), &probe.worst_light_mass, &Exponent::int(1), &addr, Jobs(1)).unwrap();
        let a = certify_theorem(&v.spec, 2, &class, false, Jobs(1)).unwrap();
        let b = certify_theorem(&v.spec, 2, &class, false, Jobs(3)).unwrap();
        assert_eq!(a, b);
        assert!(a.certified);
        assert_eq!(a.members, class.count().unwrap());
    }
}
