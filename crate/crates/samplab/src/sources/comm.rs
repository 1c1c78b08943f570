use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{ExactDist, Mixture};
use crate::error::{invalid, Error, Result};
use crate::rational::dyadic;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Alice,
    Bob,
}

/// A node of a protocol tree. A speaking node sends the bit
/// `message[seed]` computed from the speaker's private seed and continues in
/// `children[bit]`. A leaf lists both parties' outputs as tables indexed by
/// their private seeds.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CommNode {
    Speak { speaker: Party, message: Vec<u8>, children: Box<[CommNode; 2]> },
    Leaf { alice: Vec<u64>, bob: Vec<u64> },
}

impl CommNode {
    fn depth(&self) -> u32 {
        match self {
            CommNode::Speak { children, .. } => 1 + children[0].depth().max(children[1].depth()),
            CommNode::Leaf { .. } => 0,
        }
    }

    /// Protocol tree of depth `cost` with every table drawn uniformly.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, cost: u32, r_a: u32, r_b: u32, n_a: u32, n_b: u32) -> CommNode {
        let table = |rng: &mut R, r: u32, n: u32| -> Vec<u64> {
            (0..1u64 << r).map(|_| if n == 0 { 0 } else { rng.gen::<u64>() >> (64 - n) }).collect()
        };
        if cost == 0 {
            return CommNode::Leaf { alice: table(rng, r_a, n_a), bob: table(rng, r_b, n_b) };
        }
        let speaker = if rng.gen() { Party::Alice } else { Party::Bob };
        let r = if speaker == Party::Alice { r_a } else { r_b };
        let message = (0..1u64 << r).map(|_| rng.gen_range(0..2u8)).collect();
        let kids = [(); 2].map(|_| CommNode::random(rng, cost - 1, r_a, r_b, n_a, n_b));
        CommNode::Speak { speaker, message, children: Box::new(kids) }
    }
}

/// Two parties with `r_a` and `r_b` private uniform bits run a protocol tree;
/// Alice's output occupies the low `n_a` positions and Bob's the next `n_b`.
/// Output lengths do not depend on the transcript.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "CommFile", into = "CommFile")]
pub struct CommSpec {
    r_a: u32,
    r_b: u32,
    n_a: u32,
    n_b: u32,
    root: CommNode,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CommFile {
    pub r_a: u32,
    pub r_b: u32,
    pub n_a: u32,
    pub n_b: u32,
    pub root: CommNode,
}

impl CommSpec {
    pub fn new(r_a: u32, r_b: u32, n_a: u32, n_b: u32, root: CommNode) -> Result<Self> {
        if r_a > 20 || r_b > 20 {
            return Err(Error::SizeCap("more than 20 private bits per party".into()));
        }
        if n_a + n_b == 0 || n_a + n_b > 64 {
            return Err(invalid("total output length must be within 1..=64"));
        }
        fn check(node: &CommNode, r_a: u32, r_b: u32, n_a: u32, n_b: u32) -> Result<()> {
            match node {
                CommNode::Speak { speaker, message, children } => {
                    let r = if *speaker == Party::Alice { r_a } else { r_b };
                    if message.len() != 1 << r {
                        return Err(invalid(format!("message table needs {} entries", 1u64 << r)));
                    }
                    if message.iter().any(|&b| b > 1) {
                        return Err(invalid("message entries must be bits"));
                    }
                    children.iter().try_for_each(|c| check(c, r_a, r_b, n_a, n_b))
                }
                CommNode::Leaf { alice, bob } => {
                    for (who, t, r, n) in [("alice", alice, r_a, n_a), ("bob", bob, r_b, n_b)] {
                        if t.len() != 1 << r {
                            return Err(invalid(format!("{who} output table needs {} entries", 1u64 << r)));
                        }
                        if n < 64 && t.iter().any(|&v| v >> n != 0) {
                            return Err(invalid(format!("{who} output wider than {n} bits")));
                        }
                    }
                    Ok(())
                }
            }
        }
        check(&root, r_a, r_b, n_a, n_b)?;
        Ok(CommSpec { r_a, r_b, n_a, n_b, root })
    }

    pub fn r_a(&self) -> u32 {
        self.r_a
    }

    pub fn r_b(&self) -> u32 {
        self.r_b
    }

    pub fn n_a(&self) -> u32 {
        self.n_a
    }

    pub fn n_b(&self) -> u32 {
        self.n_b
    }

    pub fn root(&self) -> &CommNode {
        &self.root
    }

    pub fn output_bits(&self) -> u32 {
        self.n_a + self.n_b
    }

    /// Communication cost: the depth of the tree.
    pub fn cost(&self) -> u32 {
        self.root.depth()
    }

    pub fn eval(&self, a: u64, b: u64) -> u64 {
        let mut node = &self.root;
        loop {
            match node {
                CommNode::Speak { speaker, message, children } => {
                    let seed = if *speaker == Party::Alice { a } else { b };
                    node = &children[message[seed as usize] as usize];
                }
                CommNode::Leaf { alice, bob } => return alice[a as usize] | bob[b as usize] << self.n_a,
            }
        }
    }
}

impl TryFrom<CommFile> for CommSpec {
    type Error = Error;
    fn try_from(f: CommFile) -> Result<Self> {
        CommSpec::new(f.r_a, f.r_b, f.n_a, f.n_b, f.root)
    }
}

impl From<CommSpec> for CommFile {
    fn from(c: CommSpec) -> Self {
        CommFile { r_a: c.r_a, r_b: c.r_b, n_a: c.n_a, n_b: c.n_b, root: c.root }
    }
}

/// Conditioned on a transcript, the consistent seeds form a rectangle, so the
/// output is a product of an Alice part and a Bob part. One mixture part per
/// reachable transcript, in depth-first order with bit 0 first.
pub fn comm_to_mixture(c: &CommSpec) -> Result<Mixture> {
    let mut weights = Vec::new();
    let mut parts = Vec::new();
    // consistent seeds as bitsets, one bit per seed
    let full = |r: u32| -> Vec<u64> {
        let seeds = 1usize << r;
        let mut w = vec![u64::MAX; seeds.div_ceil(64)];
        if seeds % 64 != 0 {
            w[seeds / 64] = (1u64 << (seeds % 64)) - 1;
        }
        w
    };
    let mut stack = vec![(&c.root, full(c.r_a), full(c.r_b))];
    while let Some((node, a_ok, b_ok)) = stack.pop() {
        match node {
            CommNode::Speak { speaker, message, children } => {
                let own = if *speaker == Party::Alice { &a_ok } else { &b_ok };
                let mut ones = vec![0u64; own.len()];
                for (i, &m) in message.iter().enumerate() {
                    ones[i / 64] |= ((m == 1) as u64) << (i % 64);
                }
                for bit in [1u8, 0] {
                    let mine: Vec<u64> = own.iter().zip(&ones).map(|(&o, &m)| o & if bit == 1 { m } else { !m }).collect();
                    if mine.iter().all(|&w| w == 0) {
                        continue;
                    }
                    let (na, nb) = if *speaker == Party::Alice { (mine, b_ok.clone()) } else { (a_ok.clone(), mine) };
                    stack.push((&children[bit as usize], na, nb));
                }
            }
            CommNode::Leaf { alice, bob } => {
                let side = |ok: &[u64], table: &[u64], n: u32| -> (u64, Vec<u64>) {
                    let mut counts = vec![0u64; 1 << n];
                    for (i, &v) in table.iter().enumerate() {
                        if ok[i / 64] >> (i % 64) & 1 == 1 {
                            counts[v as usize] += 1;
                        }
                    }
                    (ok.iter().map(|w| w.count_ones() as u64).sum(), counts)
                };
                let (wa, ca) = side(&a_ok, alice, c.n_a);
                let (wb, cb) = side(&b_ok, bob, c.n_b);
                weights.push(dyadic(wa * wb, c.r_a + c.r_b));
                // product of the two sides: Alice's bits low, Bob's high
                let mut joint = vec![0u64; 1 << (c.n_a + c.n_b)];
                for (y, &vb) in cb.iter().enumerate() {
                    for (x, &va) in ca.iter().enumerate() {
                        joint[x | y << c.n_a] = va * vb;
                    }
                }
                parts.push(ExactDist::from_counts(c.n_a + c.n_b, joint)?);
            }
        }
    }
    Mixture::new(weights, parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{mixture_collapse, product};
    use crate::sources::{exact_output, SourceSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cost_zero_is_single_product() {
        let root = CommNode::Leaf { alice: vec![0, 1], bob: vec![1, 1] };
        let c = CommSpec::new(1, 1, 1, 1, root).unwrap();
        let m = comm_to_mixture(&c).unwrap();
        assert_eq!(m.len(), 1);
        let expected = product(&ExactDist::uniform(1).unwrap(), &ExactDist::point(1, 1).unwrap()).unwrap();
        assert_eq!(m.parts()[0], expected);
    }

    #[test]
    fn echo_protocol_has_two_point_parts() {
        let leaf = |v: u64| CommNode::Leaf { alice: vec![v, v], bob: vec![v, v] };
        let root = CommNode::Speak { speaker: Party::Alice, message: vec![0, 1], children: Box::new([leaf(0), leaf(1)]) };
        let c = CommSpec::new(1, 1, 1, 1, root).unwrap();
        let m = comm_to_mixture(&c).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.weights(), &[dyadic(1, 1), dyadic(1, 1)]);
        assert_eq!(m.parts()[0].point_mass_at(), Some(0b00));
        assert_eq!(m.parts()[1].point_mass_at(), Some(0b11));
    }

    #[test]
    fn random_protocols_collapse_to_direct_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for i in 0..200 {
            let cost = i % 4;
            let root = CommNode::random(&mut rng, cost, 2, 3, 2, 1);
            let c = CommSpec::new(2, 3, 2, 1, root).unwrap();
            let m = comm_to_mixture(&c).unwrap();
            assert!(m.len() <= 1 << cost);
            assert_eq!(mixture_collapse(&m), exact_output(&SourceSpec::Comm(c)).unwrap());
        }
    }

    #[test]
    fn many_seeds_per_side() {
        // 2^7 and 2^9 seeds span several bitset words
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for cost in 0..4 {
            let root = CommNode::random(&mut rng, cost, 7, 9, 2, 2);
            let c = CommSpec::new(7, 9, 2, 2, root).unwrap();
            let m = comm_to_mixture(&c).unwrap();
            assert!(m.len() <= 1 << cost);
            assert_eq!(mixture_collapse(&m), exact_output(&SourceSpec::Comm(c)).unwrap());
        }
    }

    #[test]
    fn json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = CommSpec::new(1, 1, 1, 1, CommNode::random(&mut rng, 2, 1, 1, 1, 1)).unwrap();
        let s = serde_json::to_string(&SourceSpec::Comm(c.clone())).unwrap();
        assert_eq!(serde_json::from_str::<SourceSpec>(&s).unwrap(), SourceSpec::Comm(c));
    }
}
