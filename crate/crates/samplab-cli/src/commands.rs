use std::fmt::Write as _;

use serde_json::json;

use samplab::dist::{light_set, min_entropy, smooth as smoothing, tv_distance, tv_positive_part, ExactDist, Mixture};
use samplab::f2::{bits_to_string, BitVec, F2PolyMap};
use samplab::hardness::{self, theorem_bound_terms};
use samplab::isolators::{self, class_profile, BoolFnTable, HashFamily, IsolatorSpec, MultiOutFnTable, TwoSourceParams, Verified};
use samplab::rational::format_q;
use samplab::sources::{self, addr_dist, exact_output as output_of, ClassSpec, CommSpec, RobpSpec, SourceSpec};
use samplab::Q;

use crate::args::*;
use crate::report::{config_err, Done, Inputs, Outcome, Verdict};
use crate::Ctx;

fn req<'a, T>(v: &'a Option<T>, name: &str) -> Outcome<&'a T> {
    v.as_ref().ok_or_else(|| config_err(format!("missing parameter `{name}`")))
}

fn rat(v: &Option<Rat>, name: &str) -> Outcome<Q> {
    req(v, name).map(|r| r.0.clone())
}

fn dist_csv(d: &ExactDist) -> String {
    let mut s = String::from("x,string,prob\n");
    for x in 0..d.size() {
        let _ = writeln!(s, "{x},{},{}", bits_to_string(x as u64, d.n()), format_q(&d.prob(x)));
    }
    s
}

fn class(inputs: &mut Inputs, ctx: &Ctx, path: &std::path::Path) -> Outcome<ClassSpec> {
    let c: ClassSpec = inputs.json("class", path)?;
    Ok(match ctx.budget {
        Some(b) => c.with_budget(b),
        None => c,
    })
}

fn isolator_spec(inputs: &mut Inputs, ctx: &Ctx, path: &std::path::Path) -> Outcome<IsolatorSpec> {
    let mut s: IsolatorSpec = inputs.json("isolator", path)?;
    if let Some(b) = ctx.budget {
        s.class = s.class.with_budget(b);
    }
    Ok(s)
}

/// An isolator file's `verified` flag is a claim; lemmas that depend on it
/// get a fresh verification instead.
fn checked_isolator(inputs: &mut Inputs, ctx: &Ctx, path: &std::path::Path) -> Outcome<IsolatorSpec> {
    let s = isolator_spec(inputs, ctx, path)?;
    if s.verified == Verified::Unverified {
        return Err(config_err("the isolator is marked unverified"));
    }
    let v = isolators::verify_isolator(&s.function()?, &s.alpha, &s.beta, &s.k, &s.class, ctx.jobs)?;
    if !v.passed() {
        return Err(config_err("the isolator does not verify on its class"));
    }
    Ok(v.spec)
}

pub fn tv(a: &TvArgs, _: &Ctx, inputs: &mut Inputs) -> Outcome<Done> {
    let p: ExactDist = inputs.json("p", req(&a.p, "p")?)?;
    let q: ExactDist = inputs.json("q", req(&a.q, "q")?)?;
    let tv = tv_distance(&p, &q)?;
    let pos = tv_positive_part(&p, &q)?;
    Done::new(Verdict::Ok, json!({"tv": format_q(&tv), "positive_part": format_q(&pos)}))
}

pub fn entropy(a: &EntropyArgs, _: &Ctx, inputs: &mut Inputs) -> Outcome<Done> {
    let d: ExactDist = inputs.json("dist", req(&a.dist, "dist")?)?;
    let light = a.k.as_ref().map(|k| light_set(&d, k)).transpose()?;
    Done::new(Verdict::Ok, json!({"min_entropy": min_entropy(&d), "light_set": light}))
}

pub fn smooth(a: &SmoothArgs, _: &Ctx, inputs: &mut Inputs) -> Outcome<Done> {
    let d: ExactDist = inputs.json("dist", req(&a.dist, "dist")?)?;
    let m = smoothing(&d, *req(&a.k, "k")?);
    let mut csv = String::from("x,bucket,bucket_mass\n");
    for (x, b) in m.bucket_of.iter().enumerate() {
        let _ = writeln!(csv, "{x},{b},{}", format_q(&m.bucket_mass[*b as usize]));
    }
    Ok(Done::new(Verdict::Ok, &m)?.with_csv(csv))
}

pub fn exact_output(a: &ExactOutputArgs, _: &Ctx, inputs: &mut Inputs) -> Outcome<Done> {
    let src: SourceSpec = inputs.json("source", req(&a.source, "source")?)?;
    let d = output_of(&src)?;
    Ok(Done::new(Verdict::Ok, &d)?.with_csv(dist_csv(&d)))
}

pub fn addr(a: &AddrArgs, _: &Ctx, inputs: &mut Inputs) -> Outcome<Done> {
    let x = match (&a.source, &a.dist) {
        (Some(s), None) => output_of(&inputs.json::<SourceSpec>("source", s)?)?,
        (None, Some(d)) => inputs.json::<ExactDist>("dist", d)?,
        _ => return Err(config_err("give exactly one of `source` and `dist`")),
    };
    let d = addr_dist(&x, *req(&a.n, "n")?, *req(&a.t, "t")?)?;
    Ok(Done::new(Verdict::Ok, &d)?.with_csv(dist_csv(&d)))
}

pub fn enumerate(a: &EnumerateArgs, ctx: &Ctx, inputs: &mut Inputs) -> Outcome<Done> {
    let spec = class(inputs, ctx, req(&a.class, "class")?)?;
    let c = spec.compile()?;
    let limit = a.limit.unwrap_or(0).min(c.len());
    let members = (0..limit)
        .map(|i| Ok(json!({"index": i, "dists": c.member_dists(i)?})))
        .collect::<samplab::Result<Vec<_>>>()?;
    Done::new(Verdict::Ok, json!({"class": spec.id(), "count": c.len(), "members": members}))
}

pub fn verify_isolator(a: &VerifyIsolatorArgs, ctx: &Ctx, inputs: &mut Inputs) -> Outcome<Done> {
    let s = isolator_spec(inputs, ctx, req(&a.isolator, "isolator")?)?;
    let v = isolators::verify_isolator(&s.function()?, &s.alpha, &s.beta, &s.k, &s.class, ctx.jobs)?;
    Done::new(Verdict::from_holds(v.passed()), &v)
}

pub fn search_isolator(a: &SearchIsolatorArgs, ctx: &Ctx, inputs: &mut Inputs) -> Outcome<Done> {
    let spec = class(inputs, ctx, req(&a.class, "class")?)?;
    let fam = HashFamily::new(*req(&a.n, "n")?, *req(&a.m, "m")?, *req(&a.t, "t")?)?;
    let profile = class_profile(&spec, ctx.jobs)?;
    let budget = ctx.budget.unwrap_or(fam.size()).min(fam.size());
    let out = isolators::search_isolator(&fam, &rat(&a.alpha, "alpha")?, &rat(&a.beta, "beta")?, req(&a.k, "k")?, &profile, budget, ctx.jobs)?;
    let verdict = match &out.found {
        Some(_) => Verdict::Holds,
        None if out.tried > 0 && out.tried < fam.size() => Verdict::OutOfBudget,
        None => Verdict::Violated,
    };
    Done::new(verdict, &out)
}

pub fn input_reduce(a: &InputReduceArgs, ctx: &Ctx, inputs: &mut Inputs) -> Outcome<Done> {
    let f: F2PolyMap = inputs.json("map", req(&a.map, "map")?)?;
    let r = isolators::input_reduce(&f, &rat(&a.eps, "eps")?, a.ell, ctx.budget.unwrap_or(1024), ctx.seed)?;
    Done::new(if r.success { Verdict::Holds } else { Verdict::OutOfBudget }, &r)
}

fn confirm(claim: &isolators::IsolatorClaim, verify: Option<ClassSpec>, ctx: &Ctx) -> Outcome<Done> {
    match verify {
        Some(c) => {
            let v = claim.verify_on(&c, ctx.jobs)?;
            Done::new(Verdict::from_holds(v.passed()), json!({"claim": claim, "verification": v}))
        }
        None => Done::new(Verdict::Ok, json!({"claim": claim})),
    }
}

pub fn lift(a: &LiftArgs, ctx: &Ctx, inputs: &mut Inputs) -> Outcome<Done> {
    let s = checked_isolator(inputs, ctx, req(&a.isolator, "isolator")?)?;
    let claim = isolators::lift_isolator(&s, *req(&a.k, "k")?)?;
    let verify = a.verify_class.as_ref().map(|p| class(inputs, ctx, p)).transpose()?;
    confirm(&claim, verify, ctx)
}

pub fn iso_from_rext(a: &IsoFromRextArgs, ctx: &Ctx, inputs: &mut Inputs) -> Outcome<Done> {
    let rext: MultiOutFnTable = inputs.json("rext", req(&a.rext, "rext")?)?;
    let z: BitVec = req(&a.z, "z")?.parse()?;
    let claim = isolators::iso_from_rext(&rext, &z, &rat(&a.eps, "eps")?, &rat(&a.delta, "delta")?, req(&a.k, "k")?)?;
    let verify = a.verify_class.as_ref().map(|p| class(inputs, ctx, p)).transpose()?;
    confirm(&claim, verify, ctx)
}

pub fn mixture_bound(a: &MixtureBoundArgs, _: &Ctx, inputs: &mut Inputs) -> Outcome<Done> {
    let ext: MultiOutFnTable = inputs.json("ext", req(&a.ext, "ext")?)?;
    let mix: Mixture = inputs.json("mixture", req(&a.mixture, "mixture")?)?;
    let tags = MixtureBoundArgs::parsed_tags(req(&a.tags, "tags")?).map_err(config_err)?;
    let gamma = a.gamma.as_ref().map(|g| g.0.clone()).unwrap_or_default();
    let r = isolators::mixture_isolator_bound(
        &ext,
        &mix,
        &tags,
        a.z.unwrap_or(0),
        &rat(&a.eps, "eps")?,
        req(&a.k, "k")?,
        req(&a.k_prime, "k_prime")?,
        &gamma,
    )?;
    Done::new(Verdict::from_holds(r.holds), &r)
}

pub fn two_source(a: &TwoSourceArgs, _: &Ctx, inputs: &mut Inputs) -> Outcome<Done> {
    let x: ExactDist = inputs.json("x", req(&a.x, "x")?)?;
    let y: ExactDist = inputs.json("y", req(&a.y, "y")?)?;
    let ext: MultiOutFnTable = inputs.json("ext", req(&a.ext, "ext")?)?;
    let p = TwoSourceParams {
        k: *req(&a.k, "k")?,
        k0: *req(&a.k0, "k0")?,
        k1: *req(&a.k1, "k1")?,
        k2: *req(&a.k2, "k2")?,
        eps: rat(&a.eps, "eps")?,
        z: a.z.unwrap_or(0),
    };
    let r = isolators::two_source_robust_bound(&x, &y, &ext, &p)?;
    let conditioned = isolators::conditioned_extractor_error(&x, &y, &ext, p.k0, p.k1, p.k2)?;
    Done::new(Verdict::from_holds(r.holds), json!({"bound": r, "conditioned_extractor_error": conditioned.map(|e| format_q(&e))}))
}

pub fn comm_mixture(a: &CommMixtureArgs, _: &Ctx, inputs: &mut Inputs) -> Outcome<Done> {
    let c: CommSpec = inputs.json("protocol", req(&a.protocol, "protocol")?)?;
    let mix = sources::comm_to_mixture(&c)?;
    let matches = samplab::dist::mixture_collapse(&mix) == output_of(&SourceSpec::Comm(c.clone()))?;
    let within = (mix.len() as u64) <= 1u64 << c.cost();
    Done::new(
        Verdict::from_holds(matches && within),
        json!({"cost": c.cost(), "parts": mix.len(), "collapse_matches_output": matches, "mixture": mix}),
    )
}

pub fn robp_cut(a: &RobpCutArgs, _: &Ctx, inputs: &mut Inputs) -> Outcome<Done> {
    let r: RobpSpec = inputs.json("robp", req(&a.robp, "robp")?)?;
    let c = sources::robp_partition_to_comm(&r, *req(&a.cut, "cut")?)?;
    let preserved = output_of(&SourceSpec::Robp(r.clone()))? == output_of(&SourceSpec::Comm(c.clone()))?;
    let within = c.cost() <= r.space() + 1;
    Done::new(
        Verdict::from_holds(preserved && within),
        json!({"space": r.space(), "cost": c.cost(), "output_preserved": preserved, "protocol": c}),
    )
}

pub fn build_hard_dist(a: &BuildHardDistArgs, _: &Ctx, inputs: &mut Inputs) -> Outcome<Done> {
    let iso: BoolFnTable = inputs.json("iso", req(&a.iso, "iso")?)?;
    let h = hardness::build_hard_dist(&iso, *req(&a.t, "t")?)?;
    let csv = dist_csv(&h.dist);
    Ok(Done::new(Verdict::Ok, &h)?.with_csv(csv))
}

pub fn bound(a: &BoundArgs, _: &Ctx, _: &mut Inputs) -> Outcome<Done> {
    let terms = theorem_bound_terms(&rat(&a.alpha, "alpha")?, &rat(&a.beta, "beta")?, *req(&a.k, "k")?, *req(&a.n, "n")?, *req(&a.t, "t")?)?;
    Done::new(Verdict::Ok, &terms)
}

pub fn certify_theorem(a: &CertifyTheoremArgs, ctx: &Ctx, inputs: &mut Inputs) -> Outcome<Done> {
    let s = checked_isolator(inputs, ctx, req(&a.isolator, "isolator")?)?;
    let spec = class(inputs, ctx, req(&a.class, "class")?)?;
    let record = a.record.unwrap_or(false) || ctx.format == Format::Csv;
    let r = hardness::certify_theorem(&s, *req(&a.t, "t")?, &spec, record, ctx.jobs)?;
    let mut csv = String::from("member,tv\n");
    for row in r.per_source.iter().flatten() {
        let _ = writeln!(csv, "{},{}", row.member, format_q(&row.tv));
    }
    Ok(Done::new(Verdict::from_holds(r.certified), &r)?.with_csv(csv))
}

pub fn counting_search(a: &CountingSearchArgs, ctx: &Ctx, inputs: &mut Inputs) -> Outcome<Done> {
    let spec = class(inputs, ctx, req(&a.class, "class")?)?;
    let r = hardness::counting_search(&spec, *req(&a.n, "n")?, *req(&a.s, "s")?, *req(&a.trials, "trials")?, ctx.seed, ctx.jobs)?;
    let mut csv = String::from("trial,worst_tv\n");
    for (i, v) in r.per_trial.iter().enumerate() {
        let _ = writeln!(csv, "{i},{}", format_q(v));
    }
    Ok(Done::new(Verdict::Ok, &r)?.with_csv(csv))
}
