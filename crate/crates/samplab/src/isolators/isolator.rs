use std::collections::HashMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::tables::{BoolFnTable, MultiOutFnTable};
use crate::dist::{has_min_entropy, tv_distance, ExactDist, Threshold};
use crate::error::{dim, Result};
use crate::rational::{pow2, serde_q, serde_q_opt, Exponent, Q};
use crate::sources::{Class, ClassSpec, EnumMode};
use crate::sweep::Jobs;

/// How an isolator's parameters were established.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verified {
    Unverified,
    VerifiedExhaustive,
    VerifiedSampled,
}

/// A member that breaks condition 2, with its measured light mass.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub member: u64,
    #[serde(with = "serde_q")]
    pub light_mass: Q,
}

/// An `(alpha, beta, k)`-isolator for a class: `Pr[Iso(U^n) = 1] >= alpha`,
/// and every source `X` in the class has `Pr[X in L and Iso(X) = 1] <= beta`
/// where `L = {x : Pr[X = x] <= 2^-k}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsolatorSpec {
    pub n: u32,
    pub table: String,
    #[serde(with = "serde_q")]
    pub alpha: Q,
    #[serde(with = "serde_q")]
    pub beta: Q,
    pub k: Exponent,
    pub class: ClassSpec,
    pub verified: Verified,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl IsolatorSpec {
    pub fn function(&self) -> Result<BoolFnTable> {
        BoolFnTable::from_hex(self.n, &self.table)
    }

    /// Parameter combinations that are legal but suspicious.
    pub fn flags(&self) -> Vec<String> {
        param_flags(&self.alpha, &self.beta)
    }
}

pub(crate) fn param_flags(alpha: &Q, beta: &Q) -> Vec<String> {
    let mut f = Vec::new();
    if *alpha <= Q::zero() {
        f.push("alpha <= 0: acceptance condition is vacuous".to_string());
    }
    if alpha > beta {
        f.push("alpha exceeds beta".to_string());
    }
    if *beta >= Q::one() {
        f.push("beta >= 1: light-mass condition is vacuous".to_string());
    }
    f
}

/// Parameters claimed for a table by a lemma, not yet checked against a
/// class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsolatorClaim {
    pub table: BoolFnTable,
    #[serde(with = "serde_q")]
    pub alpha: Q,
    #[serde(with = "serde_q")]
    pub beta: Q,
    pub k: Exponent,
    pub flags: Vec<String>,
}

impl IsolatorClaim {
    pub fn new(table: BoolFnTable, alpha: Q, beta: Q, k: Exponent) -> Self {
        let flags = param_flags(&alpha, &beta);
        IsolatorClaim { table, alpha, beta, k, flags }
    }

    /// Checks the claim exhaustively (or by sampling) on a finite class.
    pub fn verify_on(&self, class: &ClassSpec, jobs: Jobs) -> Result<Verification> {
        verify_isolator(&self.table, &self.alpha, &self.beta, &self.k, class, jobs)
    }
}

/// Outcome of checking both isolator conditions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verification {
    pub spec: IsolatorSpec,
    #[serde(with = "serde_q")]
    pub acceptance: Q,
    pub acceptance_ok: bool,
    /// Largest light mass over the class, and the first member attaining it.
    #[serde(with = "serde_q")]
    pub worst_light_mass: Q,
    pub worst_member: Option<u64>,
    pub members: u64,
    pub light_ok: bool,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.acceptance_ok && self.light_ok
    }
}

/// `Pr[X in L and f(X) = 1]` with `L` the light set of `X` at `2^-k`.
pub fn light_accept_mass(f: &BoolFnTable, x: &ExactDist, threshold: &Threshold) -> Result<Q> {
    if x.n() != f.n() {
        return Err(dim(format!("{}-bit isolator on {}-bit source", f.n(), x.n())));
    }
    Ok(x.light_mass_where(threshold, |v| f.get(v as u64)))
}

/// Running maximum with the earliest index kept on ties.
#[derive(Clone, Debug)]
struct Worst {
    mass: Q,
    member: Option<u64>,
    first_violation: Option<(u64, Q)>,
    members: u64,
}

impl Worst {
    fn empty() -> Self {
        Worst { mass: Q::zero(), member: None, first_violation: None, members: 0 }
    }

    fn push(&mut self, i: u64, mass: Q, beta: &Q) {
        if mass > *beta && self.first_violation.is_none() {
            self.first_violation = Some((i, mass.clone()));
        }
        if self.member.is_none() || mass > self.mass {
            self.mass = mass;
            self.member = Some(i);
        }
    }

    fn merge(mut self, other: Worst) -> Worst {
        self.members += other.members;
        if self.first_violation.is_none() {
            self.first_violation = other.first_violation;
        }
        if other.member.is_some() && (self.member.is_none() || other.mass > self.mass) {
            self.mass = other.mass;
            self.member = other.member;
        }
        self
    }
}

fn verified_kind(class: &ClassSpec) -> Verified {
    match class.mode {
        EnumMode::Sample { .. } => Verified::VerifiedSampled,
        _ => Verified::VerifiedExhaustive,
    }
}

/// Checks condition 1 exactly on `U^n` and condition 2 on every member the
/// class enumerates (every view distribution of every member). The verdict
/// is `verified_*` only when both hold.
pub fn verify_isolator(f: &BoolFnTable, alpha: &Q, beta: &Q, k: &Exponent, class: &ClassSpec, jobs: Jobs) -> Result<Verification> {
    let compiled = class.compile()?;
    if compiled.spec().view_bits()? != f.n() {
        return Err(dim(format!("{}-bit isolator on a {}-bit class", f.n(), compiled.spec().view_bits()?)));
    }
    let threshold = Threshold::from_exponent(k);
    let worst = compiled.fold_members(
        jobs,
        Worst::empty,
        |mut w, i, dists| {
            w.members += 1;
            for d in &dists {
                w.push(i, light_accept_mass(f, d, &threshold)?, beta);
            }
            Ok(w)
        },
        Worst::merge,
    )?;
    Ok(finish(f, alpha, beta, k, class, worst))
}

fn finish(f: &BoolFnTable, alpha: &Q, beta: &Q, k: &Exponent, class: &ClassSpec, worst: Worst) -> Verification {
    let acceptance = Q::new(f.ones().into(), f.size().into());
    let acceptance_ok = acceptance >= *alpha;
    let light_ok = worst.first_violation.is_none();
    let verified = if acceptance_ok && light_ok { verified_kind(class) } else { Verified::Unverified };
    let witness = worst.first_violation.map(|(member, light_mass)| Witness { member, light_mass });
    Verification {
        spec: IsolatorSpec {
            n: f.n(),
            table: f.to_hex(),
            alpha: alpha.clone(),
            beta: beta.clone(),
            k: k.clone(),
            class: class.clone(),
            verified,
            witness,
        },
        acceptance,
        acceptance_ok,
        worst_light_mass: worst.mass,
        worst_member: worst.member,
        members: worst.members,
        light_ok,
    }
}

/// The distinct view distributions of a class, each with the first member
/// index that produced it, in order of first appearance.
#[derive(Clone, Debug)]
pub struct ClassProfile {
    pub spec: ClassSpec,
    pub members: u64,
    pub dists: Vec<(u64, ExactDist)>,
}

#[derive(Default)]
struct Distinct {
    order: Vec<(u64, ExactDist)>,
    seen: HashMap<ExactDist, usize>,
    members: u64,
}

impl Distinct {
    fn insert(&mut self, i: u64, d: ExactDist) {
        if !self.seen.contains_key(&d) {
            self.seen.insert(d.clone(), self.order.len());
            self.order.push((i, d));
        }
    }

    fn merge(mut self, other: Distinct) -> Distinct {
        self.members += other.members;
        for (i, d) in other.order {
            self.insert(i, d);
        }
        self
    }
}

pub fn class_profile(class: &ClassSpec, jobs: Jobs) -> Result<ClassProfile> {
    let compiled: Class = class.compile()?;
    let acc = compiled.fold_members(
        jobs,
        Distinct::default,
        |mut acc, i, dists| {
            acc.members += 1;
            for d in dists {
                acc.insert(i, d);
            }
            Ok(acc)
        },
        Distinct::merge,
    )?;
    Ok(ClassProfile { spec: class.clone(), members: acc.members, dists: acc.order })
}

/// `verify_isolator` against a precomputed profile; the witness and worst
/// member are reported by class member index, as in the direct sweep.
pub fn verify_isolator_on_profile(f: &BoolFnTable, alpha: &Q, beta: &Q, k: &Exponent, profile: &ClassProfile) -> Result<Verification> {
    let threshold = Threshold::from_exponent(k);
    let mut worst = Worst::empty();
    for (i, d) in &profile.dists {
        worst.push(*i, light_accept_mass(f, d, &threshold)?, beta);
    }
    worst.members = profile.members;
    Ok(finish(f, alpha, beta, k, &profile.spec, worst))
}

/// Measured parameters of a multi-output function as a robust extractor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobustReport {
    /// Largest `TV(Ext(X), U^m)` over members with min-entropy at least `k`.
    #[serde(with = "serde_q_opt")]
    pub extractor_error: Option<Q>,
    /// Largest `Pr[X in L and Ext(X) = z] - 2^-m` over all members.
    #[serde(with = "serde_q")]
    pub robust_excess: Q,
    pub high_entropy_members: u64,
    pub members: u64,
    pub holds: bool,
}

/// Checks the `(eps, delta, k)`-robust extractor conditions over a class.
pub fn verify_robust_extractor(
    ext: &MultiOutFnTable,
    z: u64,
    eps: &Q,
    delta: &Q,
    k: &Exponent,
    class: &ClassSpec,
    jobs: Jobs,
) -> Result<RobustReport> {
    let compiled = class.compile()?;
    let threshold = Threshold::from_exponent(k);
    let uniform = ExactDist::uniform(ext.m())?;
    let hit = ext.indicator(z)?;
    let p = pow2(-(ext.m() as i64));
    type Acc = (Option<Q>, Q, u64, u64);
    let (err, excess, high, members) = compiled.fold_members(
        jobs,
        || -> Acc { (None, -Q::one(), 0, 0) },
        |(mut err, mut excess, mut high, mut members), _i, dists| {
            for d in &dists {
                members += 1;
                if has_min_entropy(d, k) {
                    high += 1;
                    let tv = tv_distance(&ext.push(d)?, &uniform)?;
                    if err.as_ref().is_none_or(|e| tv > *e) {
                        err = Some(tv);
                    }
                }
                let e = light_accept_mass(&hit, d, &threshold)? - &p;
                if e > excess {
                    excess = e;
                }
            }
            Ok((err, excess, high, members))
        },
        |a, b| {
            let err = match (a.0, b.0) {
                (Some(x), Some(y)) => Some(if y > x { y } else { x }),
                (x, y) => x.or(y),
            };
            (err, if b.1 > a.1 { b.1 } else { a.1 }, a.2 + b.2, a.3 + b.3)
        },
    )?;
    let holds = err.as_ref().is_none_or(|e| e <= eps) && excess <= *delta;
    Ok(RobustReport { extractor_error: err, robust_excess: excess, high_entropy_members: high, members, holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use crate::sources::ClassModel;

    fn uniform_class(n: u32) -> ClassSpec {
        ClassSpec::new(ClassModel::Explicit { dists: vec![ExactDist::uniform(n).unwrap()] }, EnumMode::Exhaustive)
    }

    #[test]
    fn first_bit_zero_on_uniform() {
        // 1(x_1 = 0): string position 0 is bit 0 of the index
        let f = BoolFnTable::from_fn(2, |x| x & 1 == 0).unwrap();
        let v = verify_isolator(&f, &q(1, 2), &q(1, 2), &Exponent::int(2), &uniform_class(2), Jobs(1)).unwrap();
        assert!(v.passed());
        assert_eq!(v.spec.verified, Verified::VerifiedExhaustive);
        assert_eq!(v.worst_light_mass, q(1, 2));
        let v = verify_isolator(&f, &q(1, 2), &q(1, 4), &Exponent::int(2), &uniform_class(2), Jobs(1)).unwrap();
        assert_eq!(v.spec.witness, Some(Witness { member: 0, light_mass: q(1, 2) }));
        assert_eq!(v.spec.verified, Verified::Unverified);
    }

    #[test]
    fn zero_function_fails_acceptance() {
        let f = BoolFnTable::from_fn(3, |_| false).unwrap();
        let v = verify_isolator(&f, &q(1, 100), &Q::one(), &Exponent::int(1), &uniform_class(3), Jobs(1)).unwrap();
        assert!(!v.acceptance_ok);
        assert!(!v.passed());
    }

    #[test]
    fn point_indicator_on_degree_one_class() {
        let f = BoolFnTable::from_fn(3, |x| x == 0).unwrap();
        let class = ClassSpec::new(ClassModel::Polynomial { n: 3, d: 1, r_min: 1, r_max: 3 }, EnumMode::Exhaustive);
        let v = verify_isolator(&f, &q(1, 8), &Q::one(), &Exponent::int(1), &class, Jobs(2)).unwrap();
        assert!(v.passed());
        assert_eq!(v.members, 64 + 512 + 4096);
        // light at 2^-1 and mapping to 0^3: two-point affine lines through 0 give 1/2
        assert_eq!(v.worst_light_mass, q(1, 2));
        let profile = class_profile(&class, Jobs(3)).unwrap();
        let w = verify_isolator_on_profile(&f, &q(1, 8), &q(1, 4), &Exponent::int(1), &profile).unwrap();
        let direct = verify_isolator(&f, &q(1, 8), &q(1, 4), &Exponent::int(1), &class, Jobs(1)).unwrap();
        assert_eq!(w, direct);
    }
}
