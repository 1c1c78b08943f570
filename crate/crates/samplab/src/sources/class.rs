use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::affine::AffineSubspaces;
use super::comm::{comm_to_mixture, CommNode, CommSpec, Party};
use super::robp::RobpSpec;
use super::spec::{exact_output, LocalSource, SourceSpec};
use super::addr::addr_dist;
use crate::dist::ExactDist;
use crate::error::{invalid, Error, Result};
use crate::f2::{F2Poly, F2PolyMap};
use crate::sweep::{map_reduce, Jobs};

pub const DEFAULT_BUDGET: u64 = 1 << 24;

/// A family of sources with size caps.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ClassModel {
    /// Degree-`d` maps `{0,1}^r -> {0,1}^n` for `r_min <= r <= r_max`.
    Polynomial { n: u32, d: u32, r_min: u32, r_max: u32 },
    /// Maps `{0,1}^r -> {0,1}^n` whose outputs each read at most `delta` inputs.
    Local { r: u32, n: u32, delta: u32 },
    /// Width-`2^s` programs with the given per-step label lengths.
    Robp { s: u32, label_lens: Vec<u32> },
    /// Protocols with full trees of depth `min_cost..=cost`. With
    /// `alternating`, only the root speaker is free.
    Comm {
        min_cost: u32,
        cost: u32,
        r_a: u32,
        r_b: u32,
        n_a: u32,
        n_b: u32,
        #[serde(default)]
        alternating: bool,
    },
    Explicit { dists: Vec<ExactDist> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum EnumMode {
    /// Every member once, in canonical order.
    Exhaustive,
    /// Every distinct output distribution once; degree-1 polynomial and
    /// explicit classes only.
    Distinct,
    /// `count` members drawn independently; member `i` depends only on
    /// `(seed, i)`.
    Sample { count: u64, seed: u64 },
}

/// What a member contributes to a sweep.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "view", rename_all = "snake_case")]
pub enum ClassView {
    /// The member's output distribution.
    Output,
    /// `addr_{n,t}` of the output, with `n = bits / t - 1`.
    Addr { t: u32 },
    /// The product parts of a communication source's mixture.
    ProductParts,
}

fn default_budget() -> u64 {
    DEFAULT_BUDGET
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub model: ClassModel,
    #[serde(default = "default_mode")]
    pub mode: EnumMode,
    #[serde(default = "default_view")]
    pub view: ClassView,
    #[serde(default = "default_budget")]
    pub budget: u64,
}

fn default_mode() -> EnumMode {
    EnumMode::Exhaustive
}

fn default_view() -> ClassView {
    ClassView::Output
}

/// A member either as a sampler or, in distinct mode, as its distribution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MemberRef {
    Source(SourceSpec),
    Dist(ExactDist),
}

/// Precomputed tables for index decoding.
enum Plan {
    Polynomial { n: u32, d: u32, blocks: Vec<PolyBlock> },
    Local { r: u32, n: u32, funcs: Vec<F2Poly> },
    Robp { s: u32, label_lens: Vec<u32> },
    Comm { min_cost: u32, cost: u32, r_a: u32, r_b: u32, n_a: u32, n_b: u32, alternating: bool },
    Affine(AffineSubspaces),
    Explicit(Vec<ExactDist>),
}

struct PolyBlock {
    r: u32,
    start: u128,
    monomials: Vec<u64>,
    /// `mon_table[x]` has bit `k` set when monomial `k` is 1 at input `x`.
    mon_table: Vec<u128>,
}

impl ClassSpec {
    pub fn new(model: ClassModel, mode: EnumMode) -> Self {
        ClassSpec { model, mode, view: ClassView::Output, budget: DEFAULT_BUDGET }
    }

    pub fn with_view(mut self, view: ClassView) -> Self {
        self.view = view;
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    /// Short stable identifier used in reports.
    pub fn id(&self) -> String {
        let model = match &self.model {
            ClassModel::Polynomial { n, d, r_min, r_max } => format!("polynomial(n={n},d={d},r={r_min}..{r_max})"),
            ClassModel::Local { r, n, delta } => format!("local(r={r},n={n},delta={delta})"),
            ClassModel::Robp { s, label_lens } => format!("robp(s={s},labels={label_lens:?})"),
            ClassModel::Comm { min_cost, cost, r_a, r_b, n_a, n_b, alternating } => format!(
                "comm(cost={min_cost}..{cost},r={r_a}+{r_b},n={n_a}+{n_b}{})",
                if *alternating { ",alternating" } else { "" }
            ),
            ClassModel::Explicit { dists } => format!("explicit({})", dists.len()),
        };
        let mode = match &self.mode {
            EnumMode::Exhaustive => "exhaustive".to_string(),
            EnumMode::Distinct => "distinct".to_string(),
            EnumMode::Sample { count, seed } => format!("sample({count},seed={seed})"),
        };
        let view = match &self.view {
            ClassView::Output => "output".to_string(),
            ClassView::Addr { t } => format!("addr(t={t})"),
            ClassView::ProductParts => "parts".to_string(),
        };
        format!("{model}/{mode}/{view}")
    }

    /// Output length of the members before the view is applied.
    pub fn member_bits(&self) -> Result<u32> {
        Ok(match &self.model {
            ClassModel::Polynomial { n, .. } | ClassModel::Local { n, .. } => *n,
            ClassModel::Robp { label_lens, .. } => label_lens.iter().sum(),
            ClassModel::Comm { n_a, n_b, .. } => n_a + n_b,
            ClassModel::Explicit { dists } => dists.first().ok_or_else(|| invalid("empty explicit class"))?.n(),
        })
    }

    /// Length of the distributions produced by `member_dists`.
    pub fn view_bits(&self) -> Result<u32> {
        let bits = self.member_bits()?;
        match self.view {
            ClassView::Addr { t } => {
                if t == 0 || bits % t != 0 || bits / t < 2 {
                    return Err(invalid(format!("{bits} bits do not split into {t} addr blocks")));
                }
                Ok(bits / t - 1)
            }
            _ => Ok(bits),
        }
    }

    /// Compiles the class, checking caps and the enumeration budget.
    pub fn compile(&self) -> Result<Class> {
        let plan = self.plan()?;
        let space = plan.count()?;
        let len = match &self.mode {
            EnumMode::Sample { count, .. } => *count,
            _ => u64::try_from(space.ok_or_else(|| Error::Budget("class size overflows".into()))?)
                .map_err(|_| Error::Budget("class size exceeds 2^64".into()))?,
        };
        if len > self.budget {
            return Err(Error::Budget(format!("{} enumerates {len} members; budget is {}", self.id(), self.budget)));
        }
        if matches!(self.view, ClassView::ProductParts) && !matches!(self.model, ClassModel::Comm { .. }) {
            return Err(invalid("product parts exist only for communication classes"));
        }
        self.view_bits()?;
        Ok(Class { spec: self.clone(), plan, space, len })
    }

    /// Number of members the enumeration visits.
    pub fn count(&self) -> Result<u64> {
        Ok(self.compile()?.len())
    }

    fn plan(&self) -> Result<Plan> {
        let distinct = matches!(self.mode, EnumMode::Distinct);
        Ok(match &self.model {
            ClassModel::Polynomial { n, d, r_min, r_max } => {
                let (n, d) = (*n, *d);
                if n == 0 || n > 24 || *r_min == 0 || r_min > r_max || *r_max > 24 {
                    return Err(invalid("polynomial class needs 1 <= r_min <= r_max <= 24 and 1 <= n <= 24"));
                }
                if distinct {
                    if d != 1 {
                        return Err(invalid("distinct enumeration is implemented for degree-1 classes"));
                    }
                    return Ok(Plan::Affine(AffineSubspaces::new(n, *r_max)?));
                }
                let mut blocks = Vec::new();
                let mut start = 0u128;
                for r in *r_min..=*r_max {
                    let monomials: Vec<u64> = (0..1u64 << r).filter(|m| m.count_ones() <= d).collect();
                    if monomials.len() > 128 {
                        return Err(Error::SizeCap(format!("{} monomials at r = {r}", monomials.len())));
                    }
                    let mon_table = if r <= 16 {
                        (0..1u64 << r)
                            .map(|x| {
                                monomials
                                    .iter()
                                    .enumerate()
                                    .filter(|(_, &m)| m & x == m)
                                    .fold(0u128, |acc, (k, _)| acc | 1 << k)
                            })
                            .collect()
                    } else {
                        Vec::new()
                    };
                    blocks.push(PolyBlock { r, start, monomials, mon_table });
                    let bits = n as usize * blocks.last().unwrap().monomials.len();
                    start = if bits >= 128 || start == u128::MAX {
                        u128::MAX
                    } else {
                        start.saturating_add(1u128 << bits)
                    };
                }
                Plan::Polynomial { n, d, blocks }
            }
            ClassModel::Local { r, n, delta } => {
                if *r == 0 || *r > 24 || *n == 0 || *n > 24 || *delta > 4 {
                    return Err(invalid("local class needs 1 <= r, n <= 24 and delta <= 4"));
                }
                if distinct {
                    return Err(invalid("distinct enumeration is implemented for degree-1 classes"));
                }
                Plan::Local { r: *r, n: *n, funcs: local_functions(*r, *delta)? }
            }
            ClassModel::Robp { s, label_lens } => {
                if *s > 4 || label_lens.is_empty() || label_lens.iter().sum::<u32>() > 24 {
                    return Err(invalid("robp class needs s <= 4 and 1..=24 output bits"));
                }
                if distinct {
                    return Err(invalid("distinct enumeration is implemented for degree-1 classes"));
                }
                Plan::Robp { s: *s, label_lens: label_lens.clone() }
            }
            &ClassModel::Comm { min_cost, cost, r_a, r_b, n_a, n_b, alternating } => {
                if min_cost > cost || cost > 8 || r_a > 8 || r_b > 8 || n_a + n_b == 0 || n_a + n_b > 24 {
                    return Err(invalid("comm class needs min_cost <= cost <= 8, r <= 8 per side and 1..=24 output bits"));
                }
                if distinct {
                    return Err(invalid("distinct enumeration is implemented for degree-1 classes"));
                }
                Plan::Comm { min_cost, cost, r_a, r_b, n_a, n_b, alternating }
            }
            ClassModel::Explicit { dists } => {
                let n = dists.first().ok_or_else(|| invalid("empty explicit class"))?.n();
                if dists.iter().any(|d| d.n() != n) {
                    return Err(invalid("explicit class mixes bit-lengths"));
                }
                let mut v = dists.clone();
                if distinct {
                    let mut seen = std::collections::HashSet::new();
                    v.retain(|d| seen.insert(d.clone()));
                }
                Plan::Explicit(v)
            }
        })
    }
}

/// Every function of `r` inputs reading at most `delta` of them, once each,
/// grouped by the exact set of inputs read (smaller sets first).
fn local_functions(r: u32, delta: u32) -> Result<Vec<F2Poly>> {
    let mut sets: Vec<u64> = (0..1u64 << r).filter(|s| s.count_ones() <= delta).collect();
    sets.sort_by_key(|&s| (s.count_ones(), (0..64).filter(|i| s >> i & 1 == 1).collect::<Vec<u32>>()));
    let mut out = Vec::new();
    for set in sets {
        let vars: Vec<u32> = (0..r).filter(|i| set >> i & 1 == 1).collect();
        let k = vars.len() as u32;
        for table in 0..1u64 << (1u32 << k) {
            let p = F2Poly::from_truth_table(r, &vars, table)?;
            if p.support() == set {
                out.push(p);
            }
        }
    }
    Ok(out)
}

fn comm_leaf_count(r_a: u32, r_b: u32, n_a: u32, n_b: u32) -> Option<u128> {
    let bits = (n_a as u64) * (1u64 << r_a) + (n_b as u64) * (1u64 << r_b);
    (bits < 128).then(|| 1u128 << bits)
}

/// Number of full protocol trees of depth `c`, the root speaker forced when
/// `forced` is set.
fn comm_tree_count(c: u32, forced: Option<Party>, p: (u32, u32, u32, u32, bool)) -> Option<u128> {
    let (r_a, r_b, n_a, n_b, alternating) = p;
    if c == 0 {
        return comm_leaf_count(r_a, r_b, n_a, n_b);
    }
    let mut total = 0u128;
    for sp in [Party::Alice, Party::Bob] {
        if forced.is_some_and(|f| f != sp) {
            continue;
        }
        let r = if sp == Party::Alice { r_a } else { r_b };
        let next = alternating.then_some(other(sp));
        let child = comm_tree_count(c - 1, next, p)?;
        let msg = if (1u64 << r) < 128 { 1u128 << (1u64 << r) } else { return None };
        total = total.checked_add(msg.checked_mul(child.checked_mul(child)?)?)?;
    }
    Some(total)
}

fn other(p: Party) -> Party {
    match p {
        Party::Alice => Party::Bob,
        Party::Bob => Party::Alice,
    }
}

fn comm_decode(mut i: u128, c: u32, forced: Option<Party>, p: (u32, u32, u32, u32, bool)) -> CommNode {
    let (r_a, r_b, n_a, n_b, alternating) = p;
    if c == 0 {
        let table = |code: u128, r: u32, n: u32| -> Vec<u64> {
            (0..1u64 << r).map(|s| if n == 0 { 0 } else { (code >> (s * n as u64) & ((1u128 << n) - 1)) as u64 }).collect()
        };
        let bob_space = 1u128 << (n_b as u64 * (1u64 << r_b));
        return CommNode::Leaf { alice: table(i / bob_space, r_a, n_a), bob: table(i % bob_space, r_b, n_b) };
    }
    for sp in [Party::Alice, Party::Bob] {
        if forced.is_some_and(|f| f != sp) {
            continue;
        }
        let r = if sp == Party::Alice { r_a } else { r_b };
        let next = alternating.then_some(other(sp));
        let child = comm_tree_count(c - 1, next, p).unwrap();
        let block = (1u128 << (1u64 << r)) * child * child;
        if i >= block {
            i -= block;
            continue;
        }
        let msg = i / (child * child);
        let rest = i % (child * child);
        let message = (0..1u64 << r).map(|s| (msg >> s & 1) as u8).collect();
        let kids = [rest / child, rest % child].map(|k| comm_decode(k, c - 1, next, p));
        return CommNode::Speak { speaker: sp, message, children: Box::new(kids) };
    }
    unreachable!("protocol index out of range")
}

impl Plan {
    /// Size of the exhaustive (or distinct) space; `None` on overflow.
    fn count(&self) -> Result<Option<u128>> {
        Ok(match self {
            Plan::Polynomial { n, blocks, .. } => {
                let last = blocks.last().unwrap();
                let bits = *n as usize * last.monomials.len();
                if last.start == u128::MAX || bits >= 128 {
                    None
                } else {
                    last.start.checked_add(1u128 << bits)
                }
            }
            Plan::Local { n, funcs, .. } => (funcs.len() as u128).checked_pow(*n),
            Plan::Robp { s, label_lens } => {
                let w = 1u128 << s;
                let mut total = Some(1u128);
                for (i, &l) in label_lens.iter().enumerate() {
                    let width = if i == 0 { 1 } else { w };
                    let per_edge = w << l;
                    total = total.and_then(|t| t.checked_mul(per_edge.checked_pow(2 * width as u32)?));
                }
                total
            }
            &Plan::Comm { min_cost, cost, r_a, r_b, n_a, n_b, alternating } => {
                let mut total = Some(0u128);
                for c in min_cost..=cost {
                    total = total.and_then(|t| t.checked_add(comm_tree_count(c, None, (r_a, r_b, n_a, n_b, alternating))?));
                }
                total
            }
            Plan::Affine(a) => Some(a.len() as u128),
            Plan::Explicit(v) => Some(v.len() as u128),
        })
    }
}

/// A compiled class: random access to members in canonical order.
pub struct Class {
    spec: ClassSpec,
    plan: Plan,
    space: Option<u128>,
    len: u64,
}

impl Class {
    pub fn spec(&self) -> &ClassSpec {
        &self.spec
    }

    /// Number of members visited.
    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Index into the exhaustive space for member `i`.
    fn resolve(&self, i: u64) -> Result<Option<u128>> {
        if i >= self.len {
            return Err(invalid(format!("member {i} out of range 0..{}", self.len)));
        }
        Ok(match self.spec.mode {
            EnumMode::Sample { seed, .. } => match self.space {
                Some(space) => Some(member_rng(seed, i).gen_range(0..space)),
                None => None,
            },
            _ => Some(i as u128),
        })
    }

    pub fn member(&self, i: u64) -> Result<MemberRef> {
        let idx = self.resolve(i)?;
        let Some(idx) = idx else {
            let EnumMode::Sample { seed, .. } = self.spec.mode else { unreachable!() };
            return self.random_member(&mut member_rng(seed, i));
        };
        Ok(match &self.plan {
            Plan::Polynomial { n, d, blocks } => {
                let (block, masks) = poly_decode(blocks, *n, idx);
                let outs = masks
                    .iter()
                    .map(|&mask| {
                        let ms = (0..block.monomials.len()).filter(|k| mask >> k & 1 == 1).map(|k| block.monomials[k]).collect();
                        F2Poly::new(block.r, ms)
                    })
                    .collect::<Result<Vec<_>>>()?;
                MemberRef::Source(SourceSpec::Polynomial(F2PolyMap::new(block.r, outs, *d)?))
            }
            Plan::Local { r, n, funcs } => {
                let base = funcs.len() as u128;
                let mut code = idx;
                let mut outs = vec![F2Poly::zero(*r); *n as usize];
                for j in (0..*n as usize).rev() {
                    outs[j] = funcs[(code % base) as usize].clone();
                    code /= base;
                }
                let delta = match self.spec.model {
                    ClassModel::Local { delta, .. } => delta,
                    _ => unreachable!(),
                };
                let map = F2PolyMap::tight(*r, outs)?;
                MemberRef::Source(SourceSpec::Local(LocalSource::new(map, delta)?))
            }
            Plan::Robp { s, label_lens } => MemberRef::Source(SourceSpec::Robp(robp_decode(*s, label_lens, idx)?)),
            &Plan::Comm { min_cost, cost, r_a, r_b, n_a, n_b, alternating } => {
                let p = (r_a, r_b, n_a, n_b, alternating);
                let mut rest = idx;
                let mut tree = None;
                for c in min_cost..=cost {
                    let cnt = comm_tree_count(c, None, p).unwrap();
                    if rest < cnt {
                        tree = Some(comm_decode(rest, c, None, p));
                        break;
                    }
                    rest -= cnt;
                }
                let root = tree.ok_or_else(|| invalid("protocol index out of range"))?;
                MemberRef::Source(SourceSpec::Comm(CommSpec::new(r_a, r_b, n_a, n_b, root)?))
            }
            Plan::Affine(a) => MemberRef::Dist(a.dist(idx as u64)?),
            Plan::Explicit(v) => MemberRef::Dist(v[idx as usize].clone()),
        })
    }

    /// Model-specific sampling used when the exhaustive space overflows.
    fn random_member(&self, rng: &mut ChaCha8Rng) -> Result<MemberRef> {
        match &self.spec.model {
            ClassModel::Robp { s, label_lens } => Ok(MemberRef::Source(SourceSpec::Robp(RobpSpec::random(rng, *s, label_lens)?))),
            &ClassModel::Comm { min_cost, cost, r_a, r_b, n_a, n_b, .. } => {
                let c = rng.gen_range(min_cost..=cost);
                let root = CommNode::random(rng, c, r_a, r_b, n_a, n_b);
                Ok(MemberRef::Source(SourceSpec::Comm(CommSpec::new(r_a, r_b, n_a, n_b, root)?)))
            }
            ClassModel::Polynomial { n, d, r_min, r_max } => {
                let r = rng.gen_range(*r_min..=*r_max);
                let monomials: Vec<u64> = (0..1u64 << r).filter(|m| m.count_ones() <= *d).collect();
                let outs = (0..*n)
                    .map(|_| F2Poly::new(r, monomials.iter().copied().filter(|_| rng.gen()).collect()))
                    .collect::<Result<Vec<_>>>()?;
                Ok(MemberRef::Source(SourceSpec::Polynomial(F2PolyMap::new(r, outs, *d)?)))
            }
            _ => Err(Error::Budget("class size overflows the sampler".into())),
        }
    }

    /// Output distribution of member `i` before the view.
    pub fn member_output(&self, i: u64) -> Result<ExactDist> {
        if let (Plan::Polynomial { n, blocks, .. }, Some(idx)) = (&self.plan, self.resolve(i)?) {
            let (block, masks) = poly_decode(blocks, *n, idx);
            if !block.mon_table.is_empty() {
                let mut counts = vec![0u64; 1 << n];
                for &mv in &block.mon_table {
                    let mut y = 0usize;
                    for (j, &m) in masks.iter().enumerate() {
                        y |= (((m & mv).count_ones() & 1) as usize) << j;
                    }
                    counts[y] += 1;
                }
                return ExactDist::from_dyadic(*n, block.r, counts);
            }
        }
        match self.member(i)? {
            MemberRef::Source(s) => exact_output(&s),
            MemberRef::Dist(d) => Ok(d),
        }
    }

    /// Distributions contributed by member `i` under the class view.
    pub fn member_dists(&self, i: u64) -> Result<Vec<ExactDist>> {
        match self.spec.view {
            ClassView::Output => Ok(vec![self.member_output(i)?]),
            ClassView::Addr { t } => {
                let d = self.member_output(i)?;
                let n = d.n() / t - 1;
                Ok(vec![addr_dist(&d, n, t)?])
            }
            ClassView::ProductParts => match self.member(i)? {
                MemberRef::Source(SourceSpec::Comm(c)) => Ok(comm_to_mixture(&c)?.parts().to_vec()),
                _ => Err(invalid("product parts exist only for communication classes")),
            },
        }
    }

    /// Folds every member's view distributions; chunks are folded from
    /// `init()` and combined in index order, so the result does not depend on
    /// `jobs`.
    pub fn fold_members<T, F, R>(&self, jobs: Jobs, init: impl Fn() -> T + Sync, step: F, reduce: R) -> Result<T>
    where
        T: Send,
        F: Fn(T, u64, Vec<ExactDist>) -> Result<T> + Sync,
        R: Fn(T, T) -> T,
    {
        map_reduce(
            0..self.len,
            jobs,
            |range| {
                let mut acc = init();
                for i in range {
                    acc = step(acc, i, self.member_dists(i)?)?;
                }
                Ok(acc)
            },
            |a: Result<T>, b: Result<T>| Ok(reduce(a?, b?)),
            Ok(init()),
        )
    }
}

fn member_rng(seed: u64, i: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i);
    rng
}

/// Canonical polynomial order: by input count, then the output masks over
/// the ascending monomial list, output 0 most significant.
fn poly_decode(blocks: &[PolyBlock], n: u32, idx: u128) -> (&PolyBlock, Vec<u128>) {
    let b = &blocks[blocks.partition_point(|b| b.start <= idx) - 1];
    let m = b.monomials.len();
    let code = idx - b.start;
    let mask = if m >= 128 { u128::MAX } else { (1u128 << m) - 1 };
    let masks = (0..n as usize)
        .map(|j| {
            let shift = (n as usize - 1 - j) * m;
            if shift >= 128 {
                0
            } else {
                code >> shift & mask
            }
        })
        .collect();
    (b, masks)
}

/// Mixed-radix decoding over (layer, vertex, bit) in order, each edge a
/// target and label with the target most significant.
fn robp_decode(s: u32, label_lens: &[u32], mut idx: u128) -> Result<RobpSpec> {
    use super::robp::{RobpEdge, RobpFile};
    let w = 1u32 << s;
    let mut widths = vec![1u32];
    widths.extend(std::iter::repeat(w).take(label_lens.len()));
    let mut edges = Vec::new();
    for (layer, &l) in label_lens.iter().enumerate() {
        let per_edge = (w as u128) << l;
        let mut digits = Vec::new();
        for _ in 0..2 * widths[layer] {
            digits.push(idx % per_edge);
            idx /= per_edge;
        }
        for (k, dgt) in digits.into_iter().rev().enumerate() {
            let (vertex, bit) = (k as u32 / 2, (k % 2) as u8);
            let target = (dgt >> l) as u32;
            let label = crate::f2::bits_to_string((dgt & ((1u128 << l) - 1)) as u64, l);
            edges.push(RobpEdge { layer: layer as u32, vertex, bit, target, label: if l == 0 { String::new() } else { label } });
        }
    }
    RobpSpec::try_from(RobpFile { widths, label_lens: label_lens.to_vec(), edges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sources::affine_subspace_count;
    use std::collections::HashSet;

    fn poly(n: u32, d: u32, r_min: u32, r_max: u32, mode: EnumMode) -> Class {
        ClassSpec::new(ClassModel::Polynomial { n, d, r_min, r_max }, mode).compile().unwrap()
    }

    #[test]
    fn degree_one_counts() {
        let c = poly(1, 1, 1, 1, EnumMode::Exhaustive);
        assert_eq!(c.len(), 4);
        let outs: HashSet<Vec<Vec<Vec<u32>>>> = (0..4)
            .map(|i| match c.member(i).unwrap() {
                MemberRef::Source(SourceSpec::Polynomial(m)) => m.outputs().iter().map(|p| p.index_lists()).collect(),
                _ => panic!(),
            })
            .collect();
        assert_eq!(outs.len(), 4);
        let c = poly(3, 1, 3, 3, EnumMode::Exhaustive);
        let mut seen = HashSet::new();
        for i in 0..c.len() {
            let MemberRef::Source(s) = c.member(i).unwrap() else { panic!() };
            assert!(seen.insert(serde_json::to_string(&s).unwrap()));
        }
        assert_eq!(seen.len(), 4096);
    }

    #[test]
    fn fast_path_matches_enumeration() {
        let c = poly(3, 2, 1, 3, EnumMode::Sample { count: 300, seed: 9 });
        for i in 0..c.len() {
            let MemberRef::Source(s) = c.member(i).unwrap() else { panic!() };
            assert_eq!(c.member_output(i).unwrap(), exact_output(&s).unwrap());
        }
    }

    #[test]
    fn distinct_mode_covers_every_degree_one_output() {
        let ex = poly(2, 1, 1, 2, EnumMode::Exhaustive);
        let all: HashSet<ExactDist> = (0..ex.len()).map(|i| ex.member_output(i).unwrap()).collect();
        let di = poly(2, 1, 1, 2, EnumMode::Distinct);
        let distinct: Vec<ExactDist> = (0..di.len()).map(|i| di.member_output(i).unwrap()).collect();
        assert_eq!(distinct.len(), all.len());
        assert_eq!(distinct.into_iter().collect::<HashSet<_>>(), all);
        assert_eq!(affine_subspace_count(2, 2), 4 + 6 + 1);
    }

    #[test]
    fn comm_cost_one_matches_hand_count() {
        let spec = ClassSpec::new(
            ClassModel::Comm { min_cost: 1, cost: 1, r_a: 1, r_b: 1, n_a: 1, n_b: 1, alternating: false },
            EnumMode::Exhaustive,
        );
        let c = spec.compile().unwrap();
        assert_eq!(c.len(), 2048);
        let got: HashSet<CommSpec> = (0..c.len())
            .map(|i| match c.member(i).unwrap() {
                MemberRef::Source(SourceSpec::Comm(p)) => p,
                _ => panic!(),
            })
            .collect();
        // hand enumeration: speaker, message table, two leaves of four tables each
        let mut hand = HashSet::new();
        let tables: Vec<Vec<u64>> = (0..4).map(|t| vec![t & 1, t >> 1]).collect();
        let leaves: Vec<CommNode> = tables
            .iter()
            .flat_map(|a| tables.iter().map(move |b| CommNode::Leaf { alice: a.clone(), bob: b.clone() }))
            .collect();
        for speaker in [Party::Alice, Party::Bob] {
            for m in 0..4u8 {
                for l0 in &leaves {
                    for l1 in &leaves {
                        let root = CommNode::Speak { speaker, message: vec![m & 1, m >> 1], children: Box::new([l0.clone(), l1.clone()]) };
                        hand.insert(CommSpec::new(1, 1, 1, 1, root).unwrap());
                    }
                }
            }
        }
        assert_eq!(got, hand);
    }

    #[test]
    fn robp_class_is_exhaustive_and_distinct() {
        let spec = ClassSpec::new(ClassModel::Robp { s: 1, label_lens: vec![1, 1] }, EnumMode::Exhaustive);
        let c = spec.compile().unwrap();
        // layer 0: 2 edges * (2 targets * 2 labels); layer 1: 4 edges * (2 * 2)
        assert_eq!(c.len(), 4u64.pow(2) * 4u64.pow(4));
        let set: HashSet<_> = (0..c.len()).map(|i| c.member(i).unwrap()).map(|m| format!("{m:?}")).collect();
        assert_eq!(set.len() as u64, c.len());
    }

    #[test]
    fn local_functions_are_unique_and_local() {
        let f = local_functions(3, 2).unwrap();
        // constants 2, single-variable non-constant 3 * 2, two-variable exact 3 * 10
        assert_eq!(f.len(), 2 + 6 + 30);
        assert_eq!(f.iter().collect::<HashSet<_>>().len(), f.len());
    }

    #[test]
    fn sampling_is_reproducible_and_budget_enforced() {
        let a = poly(3, 2, 2, 4, EnumMode::Sample { count: 20, seed: 5 });
        let b = poly(3, 2, 2, 4, EnumMode::Sample { count: 20, seed: 5 });
        for i in 0..20 {
            assert_eq!(a.member(i).unwrap(), b.member(i).unwrap());
        }
        let big = ClassSpec::new(ClassModel::Polynomial { n: 3, d: 2, r_min: 1, r_max: 6 }, EnumMode::Exhaustive);
        assert!(matches!(big.compile(), Err(Error::Budget(_))));
    }

    #[test]
    fn fold_is_independent_of_jobs() {
        let c = poly(2, 1, 1, 3, EnumMode::Exhaustive);
        let run = |j| {
            c.fold_members(Jobs(j), Vec::new, |mut v, i, d| {
                v.push((i, d[0].max_prob()));
                Ok(v)
            }, |mut a, b| {
                a.extend(b);
                a
            })
            .unwrap()
        };
        assert_eq!(run(1), run(4));
    }
}
