use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::dist::{ExactDist, Threshold};
use crate::error::{Error, Result};
use crate::isolators::BoolFnTable;
use crate::rational::{pow2, qi, Q};
use crate::sources::addr_dist;

/// `D = (U_1, ..., U_t, Iso(U_1), ..., Iso(U_t))`: block `U_i` occupies bits
/// `i*n .. (i+1)*n`, and `Iso(U_i)` sits at bit `t*n + i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HardDistSpec {
    pub iso: BoolFnTable,
    pub n: u32,
    pub t: u32,
    pub dist: ExactDist,
}

pub fn build_hard_dist(iso: &BoolFnTable, t: u32) -> Result<HardDistSpec> {
    let n = iso.n();
    if n == 0 || t == 0 {
        return Err(crate::error::invalid("n and t must be positive"));
    }
    let bits = t * (n + 1);
    if bits > 24 {
        return Err(Error::SizeCap(format!("t(n+1) = {bits} exceeds 24")));
    }
    let mask = (1u64 << n) - 1;
    let nums = (0..1u64 << bits)
        .map(|v| {
            let consistent = (0..t).all(|i| iso.get(v >> (i * n) & mask) == (v >> (t * n + i) & 1 == 1));
            consistent as u64
        })
        .collect();
    let dist = ExactDist::from_dyadic(bits, t * n, nums)?;
    Ok(HardDistSpec { iso: iso.clone(), n, t, dist })
}

/// `(Pr[Iso(addr(D)) = 0], Pr[Iso(U^n) = 0]^(t+1))`, both exact.
pub fn addr_iso_zero(iso: &BoolFnTable, t: u32) -> Result<(Q, Q)> {
    let hard = build_hard_dist(iso, t)?;
    let y = addr_dist(&hard.dist, hard.n, t)?;
    let lhs = Q::one() - iso.accept_prob(&y)?;
    let base = Q::one() - iso.accept_prob(&ExactDist::uniform(hard.n)?)?;
    Ok((lhs, num_traits::pow(base, t as usize + 1)))
}

/// Checks `cap_i L_{X_i} ⊆ L_{addr(X)}` for a source on `t(n+1)` bits, with
/// `L_{X_i}` at threshold `2^-(log t + k + 1) = 1 / (t 2^(k+1))` and
/// `L_{addr(X)}` at `2^-k`. Returns the first string in the intersection
/// that is heavy for `addr(X)`.
pub fn light_containment(x: &ExactDist, n: u32, t: u32, k: i64) -> Result<Option<u32>> {
    let y = addr_dist(x, n, t)?;
    let inner = Threshold::exact(pow2(-(k + 1)) / qi(t as i64));
    let outer = Threshold::pow2(k);
    let blocks = (0..t).map(|i| x.marginal(i * n, n)).collect::<Result<Vec<_>>>()?;
    Ok((0..1usize << n).find(|&z| blocks.iter().all(|b| b.is_light(z, &inner)) && !y.is_light(z, &outer)).map(|z| z as u32))
}
