use rand::Rng;
use serde::{Deserialize, Serialize};

use super::comm::{CommNode, CommSpec, Party};
use crate::error::{invalid, precondition, Error, Result};
use crate::f2::{bits_to_string, string_to_bits};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct Edge {
    target: u32,
    label: u64,
}

/// A layered read-once branching program emitting edge labels. Layer 0 holds
/// the single start vertex; step `i` moves from layer `i` to layer `i + 1`
/// along the edge selected by seed bit `i` and emits `label_lens[i]` bits.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RobpFile", into = "RobpFile")]
pub struct RobpSpec {
    widths: Vec<u32>,
    label_lens: Vec<u32>,
    edges: Vec<Vec<[Edge; 2]>>,
}

/// One edge of the JSON edge list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobpEdge {
    pub layer: u32,
    pub vertex: u32,
    pub bit: u8,
    pub target: u32,
    pub label: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RobpFile {
    pub widths: Vec<u32>,
    pub label_lens: Vec<u32>,
    pub edges: Vec<RobpEdge>,
}

impl RobpSpec {
    fn validate(widths: Vec<u32>, label_lens: Vec<u32>, edges: Vec<Vec<[Edge; 2]>>) -> Result<Self> {
        if widths.len() < 2 || widths[0] != 1 {
            return Err(invalid("need at least two layers and a single start vertex"));
        }
        let steps = widths.len() - 1;
        if label_lens.len() != steps || edges.len() != steps {
            return Err(invalid("one label length and one edge layer per step"));
        }
        if widths.iter().any(|&w| w == 0) {
            return Err(invalid("empty layer"));
        }
        if label_lens.iter().sum::<u32>() > 64 {
            return Err(invalid("more than 64 output bits"));
        }
        for i in 0..steps {
            if edges[i].len() != widths[i] as usize {
                return Err(invalid(format!("layer {i} needs edges for {} vertices", widths[i])));
            }
            for pair in &edges[i] {
                for e in pair {
                    if e.target >= widths[i + 1] {
                        return Err(invalid(format!("edge from layer {i} targets missing vertex {}", e.target)));
                    }
                    if label_lens[i] < 64 && e.label >> label_lens[i] != 0 {
                        return Err(invalid(format!("label longer than {} bits in layer {i}", label_lens[i])));
                    }
                }
            }
        }
        Ok(RobpSpec { widths, label_lens, edges })
    }

    /// Uniformly random program with `steps` steps, width `2^s` after the
    /// start layer and the given per-step label lengths.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, s: u32, label_lens: &[u32]) -> Result<Self> {
        let steps = label_lens.len();
        let mut widths = vec![1u32];
        widths.extend(std::iter::repeat(1u32 << s).take(steps));
        let edges = (0..steps)
            .map(|i| {
                (0..widths[i])
                    .map(|_| {
                        let mut e = || Edge {
                            target: rng.gen_range(0..widths[i + 1]),
                            label: if label_lens[i] == 0 { 0 } else { rng.gen::<u64>() >> (64 - label_lens[i]) },
                        };
                        [e(), e()]
                    })
                    .collect()
            })
            .collect();
        Self::validate(widths, label_lens.to_vec(), edges)
    }

    pub fn steps(&self) -> u32 {
        self.label_lens.len() as u32
    }

    pub fn widths(&self) -> &[u32] {
        &self.widths
    }

    pub fn label_lens(&self) -> &[u32] {
        &self.label_lens
    }

    pub fn output_bits(&self) -> u32 {
        self.label_lens.iter().sum()
    }

    /// Space `s` with width `<= 2^s`.
    pub fn space(&self) -> u32 {
        let w = *self.widths.iter().max().unwrap();
        32 - (w - 1).leading_zeros()
    }

    /// Walks steps `from..to` starting at `vertex`, consuming seed bits from
    /// bit 0 of `seed`; returns the end vertex and the emitted labels.
    fn walk(&self, from: usize, to: usize, mut vertex: u32, seed: u64) -> (u32, u64) {
        let mut out = 0u64;
        let mut pos = 0u32;
        for (j, i) in (from..to).enumerate() {
            let e = self.edges[i][vertex as usize][(seed >> j & 1) as usize];
            out |= e.label << pos;
            pos += self.label_lens[i];
            vertex = e.target;
        }
        (vertex, out)
    }

    pub fn eval(&self, seed: u64) -> u64 {
        self.walk(0, self.label_lens.len(), 0, seed).1
    }

    /// Output bit position at the end of each step prefix.
    fn offsets(&self) -> Vec<u32> {
        let mut v = vec![0u32];
        for &l in &self.label_lens {
            v.push(v.last().unwrap() + l);
        }
        v
    }
}

impl TryFrom<RobpFile> for RobpSpec {
    type Error = Error;
    fn try_from(f: RobpFile) -> Result<Self> {
        let steps = f.label_lens.len();
        if f.widths.len() != steps + 1 {
            return Err(invalid("widths must list one more layer than label_lens"));
        }
        let mut slots: Vec<Vec<[Option<Edge>; 2]>> = (0..steps).map(|i| vec![[None, None]; f.widths[i] as usize]).collect();
        for e in &f.edges {
            let label = if e.label.is_empty() {
                0
            } else {
                string_to_bits(&e.label).ok_or_else(|| invalid(format!("bad label {:?}", e.label)))?.0
            };
            if e.label.len() as u32 != *f.label_lens.get(e.layer as usize).unwrap_or(&u32::MAX) {
                return Err(invalid(format!("label {:?} has the wrong length for layer {}", e.label, e.layer)));
            }
            let slot = slots
                .get_mut(e.layer as usize)
                .and_then(|l| l.get_mut(e.vertex as usize))
                .and_then(|v| v.get_mut(e.bit as usize))
                .ok_or_else(|| invalid(format!("edge ({}, {}, {}) out of range", e.layer, e.vertex, e.bit)))?;
            if slot.is_some() {
                return Err(invalid(format!("duplicate edge ({}, {}, {})", e.layer, e.vertex, e.bit)));
            }
            *slot = Some(Edge { target: e.target, label });
        }
        let edges = slots
            .into_iter()
            .map(|l| {
                l.into_iter()
                    .map(|[a, b]| match (a, b) {
                        (Some(a), Some(b)) => Ok([a, b]),
                        _ => Err(invalid("every vertex needs both outgoing edges")),
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        RobpSpec::validate(f.widths, f.label_lens, edges)
    }
}

impl From<RobpSpec> for RobpFile {
    fn from(r: RobpSpec) -> Self {
        let mut edges = Vec::new();
        for (i, layer) in r.edges.iter().enumerate() {
            for (v, pair) in layer.iter().enumerate() {
                for (bit, e) in pair.iter().enumerate() {
                    let label = if r.label_lens[i] == 0 { String::new() } else { bits_to_string(e.label, r.label_lens[i]) };
                    edges.push(RobpEdge { layer: i as u32, vertex: v as u32, bit: bit as u8, target: e.target, label });
                }
            }
        }
        RobpFile { widths: r.widths, label_lens: r.label_lens, edges }
    }
}

/// Splits the output at bit position `cut`. Alice runs the walk up to the
/// cut with her own seed bits, emits the prefix and sends the index of the
/// vertex she reached in `ceil(log2 width)` bits; Bob continues from that
/// vertex with his seed bits and emits the suffix.
pub fn robp_partition_to_comm(r: &RobpSpec, cut: u32) -> Result<CommSpec> {
    let offsets = r.offsets();
    let c = offsets
        .iter()
        .position(|&o| o == cut)
        .ok_or_else(|| precondition(format!("cut {cut} is not on a layer boundary")))?;
    let steps = r.steps() as usize;
    let (r_a, r_b) = (c as u32, (steps - c) as u32);
    if r_a > 24 || r_b > 24 {
        return Err(Error::Budget("more than 24 seed bits on one side".into()));
    }
    let width = r.widths[c];
    let msg_bits = 32 - (width - 1).leading_zeros();
    let alice_walk: Vec<(u32, u64)> = (0..1u64 << r_a).map(|a| r.walk(0, c, 0, a)).collect();
    let alice_out: Vec<u64> = alice_walk.iter().map(|w| w.1).collect();
    fn build(
        r: &RobpSpec,
        c: usize,
        depth: u32,
        msg_bits: u32,
        prefix: u32,
        alice_walk: &[(u32, u64)],
        alice_out: &[u64],
        r_b: u32,
    ) -> CommNode {
        if depth == msg_bits {
            let start = if prefix < r.widths[c] { prefix } else { 0 };
            let bob = (0..1u64 << r_b).map(|b| r.walk(c, r.label_lens.len(), start, b).1).collect();
            return CommNode::Leaf { alice: alice_out.to_vec(), bob };
        }
        let message = alice_walk.iter().map(|w| (w.0 >> depth & 1) as u8).collect();
        let kids = [0u32, 1].map(|bit| build(r, c, depth + 1, msg_bits, prefix | bit << depth, alice_walk, alice_out, r_b));
        CommNode::Speak { speaker: Party::Alice, message, children: Box::new(kids) }
    }
    let root = build(r, c, 0, msg_bits, 0, &alice_walk, &alice_out, r_b);
    CommSpec::new(r_a, r_b, cut, r.output_bits() - cut, root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sources::{exact_output, SourceSpec};

    fn two_layer() -> RobpSpec {
        let f = RobpFile {
            widths: vec![1, 2, 2],
            label_lens: vec![1, 2],
            edges: vec![
                RobpEdge { layer: 0, vertex: 0, bit: 0, target: 0, label: "0".into() },
                RobpEdge { layer: 0, vertex: 0, bit: 1, target: 1, label: "1".into() },
                RobpEdge { layer: 1, vertex: 0, bit: 0, target: 0, label: "00".into() },
                RobpEdge { layer: 1, vertex: 0, bit: 1, target: 1, label: "01".into() },
                RobpEdge { layer: 1, vertex: 1, bit: 0, target: 0, label: "11".into() },
                RobpEdge { layer: 1, vertex: 1, bit: 1, target: 1, label: "11".into() },
            ],
        };
        RobpSpec::try_from(f).unwrap()
    }

    #[test]
    fn two_layer_cut_preserves_output() {
        let r = two_layer();
        let d = exact_output(&SourceSpec::Robp(r.clone())).unwrap();
        let c = robp_partition_to_comm(&r, 1).unwrap();
        assert_eq!(c.cost(), 1);
        assert_eq!(exact_output(&SourceSpec::Comm(c)).unwrap(), d);
        assert!(robp_partition_to_comm(&r, 2).is_err());
    }

    #[test]
    fn json_round_trip() {
        let r = two_layer();
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<RobpSpec>(&s).unwrap(), r);
        let bad = s.replace("\"target\":1", "\"target\":5");
        assert!(serde_json::from_str::<RobpSpec>(&bad).is_err());
    }
}
