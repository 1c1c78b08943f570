use crate::dist::ExactDist;
use crate::error::{invalid, Result};

/// Random-access enumeration of the affine subspaces of `F_2^n` with
/// dimension at most `max_dim`; these are exactly the output distributions of
/// degree-1 sources. A subspace is indexed by its reduced echelon basis:
/// dimension, pivot set, the free entries right of each pivot and a coset
/// offset supported off the pivots.
#[derive(Clone, Debug)]
pub struct AffineSubspaces {
    n: u32,
    blocks: Vec<Block>,
    total: u64,
}

#[derive(Clone, Debug)]
struct Block {
    start: u64,
    pivots: u64,
}

impl AffineSubspaces {
    pub fn new(n: u32, max_dim: u32) -> Result<Self> {
        if n == 0 || n > 16 {
            return Err(invalid("affine subspace enumeration supports 1..=16 bits"));
        }
        let max_dim = max_dim.min(n);
        let mut blocks = Vec::new();
        let mut total = 0u64;
        for k in 0..=max_dim {
            let mut sets: Vec<u64> = (0..1u64 << n).filter(|m| m.count_ones() == k).collect();
            sets.sort_by_key(|&m| pivot_key(m));
            for pivots in sets {
                let free_bits = free_positions(n, pivots).iter().map(|v| v.count_ones()).sum::<u32>() + (n - k);
                blocks.push(Block { start: total, pivots });
                total += 1u64 << free_bits;
            }
        }
        Ok(AffineSubspaces { n, blocks, total })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn len(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Basis vectors and coset offset of subspace `i`.
    pub fn get(&self, i: u64) -> (Vec<u64>, u64) {
        assert!(i < self.total, "affine subspace index out of range");
        let b = &self.blocks[self.blocks.partition_point(|b| b.start <= i) - 1];
        let mut code = i - b.start;
        let mut basis = Vec::new();
        for (p, free) in (0..self.n).filter(|p| b.pivots >> p & 1 == 1).zip(free_positions(self.n, b.pivots)) {
            let mut row = 1u64 << p;
            for q in (0..self.n).filter(|q| free >> q & 1 == 1) {
                row |= (code & 1) << q;
                code >>= 1;
            }
            basis.push(row);
        }
        let mut offset = 0u64;
        for q in (0..self.n).filter(|q| b.pivots >> q & 1 == 0) {
            offset |= (code & 1) << q;
            code >>= 1;
        }
        (basis, offset)
    }

    /// The points of subspace `i`, ascending.
    pub fn points(&self, i: u64) -> Vec<u32> {
        let (basis, offset) = self.get(i);
        let mut pts: Vec<u32> = (0..1u64 << basis.len())
            .map(|c| {
                let mut v = offset;
                for (j, row) in basis.iter().enumerate() {
                    if c >> j & 1 == 1 {
                        v ^= row;
                    }
                }
                v as u32
            })
            .collect();
        pts.sort_unstable();
        pts
    }

    /// Uniform distribution on subspace `i`.
    pub fn dist(&self, i: u64) -> Result<ExactDist> {
        ExactDist::flat(self.n, &self.points(i))
    }
}

fn pivot_key(m: u64) -> Vec<u32> {
    (0..64).filter(|p| m >> p & 1 == 1).collect()
}

/// For each pivot (ascending), the non-pivot positions after it.
fn free_positions(n: u32, pivots: u64) -> Vec<u64> {
    let full = (1u64 << n) - 1;
    (0..n)
        .filter(|p| pivots >> p & 1 == 1)
        .map(|p| full & !pivots & !((2u64 << p) - 1))
        .collect()
}

/// Number of affine subspaces of `F_2^n` with dimension at most `max_dim`.
pub fn affine_subspace_count(n: u32, max_dim: u32) -> u64 {
    let mut total = 0u64;
    for k in 0..=max_dim.min(n) {
        // Gaussian binomial [n choose k]_2
        let mut num = 1u128;
        let mut den = 1u128;
        for i in 0..k {
            num *= (1u128 << (n - i)) - 1;
            den *= (1u128 << (i + 1)) - 1;
        }
        total += (num / den) as u64 * (1u64 << (n - k));
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn counts_match_gaussian_binomials() {
        assert_eq!(affine_subspace_count(3, 3), 8 + 28 + 14 + 1);
        for n in 1..=5 {
            for d in 0..=n {
                assert_eq!(AffineSubspaces::new(n, d).unwrap().len(), affine_subspace_count(n, d));
            }
        }
    }

    #[test]
    fn members_are_distinct_affine_sets() {
        let s = AffineSubspaces::new(4, 4).unwrap();
        let mut seen = BTreeSet::new();
        for i in 0..s.len() {
            let pts = s.points(i);
            let base = pts[0];
            let lin: BTreeSet<u32> = pts.iter().map(|p| p ^ base).collect();
            for a in &lin {
                for b in &lin {
                    assert!(lin.contains(&(a ^ b)));
                }
            }
            assert!(seen.insert(pts));
        }
    }
}
