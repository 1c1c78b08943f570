use num_traits::Zero;

use super::{exact_output, SourceSpec};
use crate::dist::ExactDist;
use crate::error::{dim, Result};
use crate::f2::{addr_polynomial, compose, F2Poly, F2PolyMap};
use crate::rational::{pow2, Q};

fn check_shape(bits: u32, n: u32, t: u32) -> Result<()> {
    if n == 0 || t == 0 || bits != t * (n + 1) {
        return Err(dim(format!("addr_{{{n},{t}}} reads {} bits, got {bits}", t * (n + 1))));
    }
    Ok(())
}

/// Exact distribution of `addr_{n,t}(X)`. The input lays out blocks
/// `A_1..A_t` in the low `t*n` positions followed by selectors `b_1..b_t`;
/// the output is `A_i` for the first `i` with `b_i = 1`, otherwise a fresh
/// uniform string.
pub fn addr_dist(x: &ExactDist, n: u32, t: u32) -> Result<ExactDist> {
    check_shape(x.n(), n, t)?;
    let mask = (1usize << n) - 1;
    let select = |v: usize| -> Option<usize> {
        let b = v >> (t * n);
        (b != 0).then(|| (v >> (b.trailing_zeros() * n)) & mask)
    };
    if let Some((e, nums)) = x.dyadic() {
        if e + n <= 62 {
            let mut out = vec![0u64; 1 << n];
            let mut fallback = 0u64;
            for (v, &c) in nums.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                match select(v) {
                    Some(a) => out[a] += c << n,
                    None => fallback += c,
                }
            }
            out.iter_mut().for_each(|o| *o += fallback);
            return ExactDist::from_dyadic(n, e + n, out);
        }
    }
    let mut out = vec![Q::zero(); 1 << n];
    let mut fallback = Q::zero();
    for v in 0..x.size() {
        let p = x.prob(v);
        if p.is_zero() {
            continue;
        }
        match select(v) {
            Some(a) => out[a] += p,
            None => fallback += p,
        }
    }
    let share = fallback * pow2(-(n as i64));
    out.iter_mut().for_each(|o| *o += &share);
    ExactDist::new(n, out)
}

/// `addr_{n,t}` applied to the output of a source on `t(n+1)` bits.
pub fn addr_compose(src: &SourceSpec, n: u32, t: u32) -> Result<ExactDist> {
    check_shape(src.output_bits(), n, t)?;
    addr_dist(&exact_output(src)?, n, t)
}

/// The polynomial source `addr_{n,t}(x(y), u)` on inputs `(y, u)`, where `u`
/// is the fresh `n`-bit fallback. Degree at most `(t + 1) * deg x`.
pub fn addr_source_polynomial(x: &F2PolyMap, n: u32, t: u32) -> Result<F2PolyMap> {
    check_shape(x.n_outputs(), n, t)?;
    let r = x.n_inputs();
    let vars = r + n;
    let mut inner = Vec::with_capacity((x.n_outputs() + n) as usize);
    for p in x.outputs() {
        inner.push(F2Poly::new(vars, p.monomials().to_vec())?);
    }
    for j in 0..n {
        inner.push(F2Poly::var(vars, r + j)?);
    }
    let inner = F2PolyMap::new(vars, inner, x.degree_bound().max(1))?;
    compose(&addr_polynomial(n, t)?, &inner)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::product;

    #[test]
    fn uniform_blocks_stay_uniform() {
        let u = product(&ExactDist::uniform(1).unwrap(), &ExactDist::uniform(1).unwrap()).unwrap();
        assert_eq!(addr_dist(&u, 1, 1).unwrap(), ExactDist::uniform(1).unwrap());
    }

    #[test]
    fn second_block_selected() {
        // A_1 = 00, A_2 = 11, b = (0, 1); string positions 0..6
        let x: u32 = "001101".chars().enumerate().map(|(i, c)| ((c == '1') as u32) << i).sum();
        let d = addr_dist(&ExactDist::point(6, x).unwrap(), 2, 2).unwrap();
        assert_eq!(d.point_mass_at(), Some(0b11));
    }

    #[test]
    fn fallback_is_uniform() {
        // A_1 = 01, b_1 = 0
        let d = addr_dist(&ExactDist::point(3, 0b010).unwrap(), 2, 1).unwrap();
        assert_eq!(d, ExactDist::uniform(2).unwrap());
    }

    #[test]
    fn polynomial_form_matches_exact_composition() {
        let x = F2PolyMap::tight(
            3,
            vec![
                F2Poly::from_index_lists(3, &[vec![0], vec![1]]).unwrap(),
                F2Poly::from_index_lists(3, &[vec![2]]).unwrap(),
                F2Poly::from_index_lists(3, &[vec![], vec![0]]).unwrap(),
            ],
        )
        .unwrap();
        let direct = addr_compose(&SourceSpec::Polynomial(x.clone()), 2, 1).unwrap();
        let poly = addr_source_polynomial(&x, 2, 1).unwrap();
        assert!(poly.degree() <= 2);
        assert_eq!(exact_output(&SourceSpec::Polynomial(poly)).unwrap(), direct);
        assert!(addr_dist(&ExactDist::uniform(4).unwrap(), 2, 1).is_err());
    }
}
