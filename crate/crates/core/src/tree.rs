//! Finite filtered probability spaces as rooted trees.
//!
//! Nodes are stored in depth-first preorder (children in input order), so
//! the leaves below any node form a contiguous range and leaf order is
//! stable across runs. Claims are flat vectors of width `w` per leaf.

use std::collections::HashMap;
use std::ops::Range;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{serde_q, Rational, Vector};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TreeError {
    #[error("node {0:?} appears more than once")]
    DuplicateId(String),
    #[error("node {node:?} has non-positive transition probability {prob}")]
    ZeroProbability { node: String, prob: String },
    #[error("node {node:?} is not connected to the root")]
    DisconnectedNode { node: String },
    #[error("node {node:?} has time {found}, expected {expected}")]
    TimeSkew {
        node: String,
        expected: usize,
        found: usize,
    },
    #[error("children of {node:?} have total probability {sum}")]
    NonUnitBranch { node: String, sum: String },
    #[error("tree has no nodes")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    pub time: usize,
    #[serde(default, with = "opt_q", skip_serializing_if = "Option::is_none")]
    pub prob: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeSpec {
    #[serde(rename = "T")]
    pub horizon: usize,
    pub nodes: Vec<NodeSpec>,
}

mod opt_q {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match q {
            Some(q) => serde_q::serialize(q, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        serde_q::deserialize(d).map(Some)
    }
}

#[derive(Debug, Clone)]
pub struct Node {
    pub id: String,
    pub parent: Option<usize>,
    pub time: usize,
    /// One-step transition probability from the parent (1 at the root).
    pub prob: Rational,
    /// Unconditional probability `P(u)`.
    pub abs_prob: Rational,
    pub children: Vec<usize>,
    pub leaves: Range<usize>,
}

#[derive(Debug, Clone)]
pub struct FilteredTree {
    horizon: usize,
    nodes: Vec<Node>,
    leaves: Vec<usize>,
    by_time: Vec<Vec<usize>>,
    index: HashMap<String, usize>,
    leaf_probs: Vector,
}

pub const ROOT_ID: &str = "root";

impl FilteredTree {
    pub fn build(spec: &TreeSpec) -> Result<Self, TreeError> {
        if spec.nodes.is_empty() && spec.horizon > 0 {
            return Err(TreeError::Empty);
        }
        let mut specs: Vec<NodeSpec> = spec.nodes.clone();
        let mut seen = HashMap::new();
        for (i, n) in specs.iter().enumerate() {
            if seen.insert(n.id.clone(), i).is_some() {
                return Err(TreeError::DuplicateId(n.id.clone()));
            }
        }
        let roots: Vec<usize> = (0..specs.len()).filter(|&i| specs[i].parent.is_none()).collect();
        let root = match roots.as_slice() {
            [] => {
                if seen.contains_key(ROOT_ID) {
                    return Err(TreeError::DisconnectedNode {
                        node: ROOT_ID.to_string(),
                    });
                }
                specs.insert(
                    0,
                    NodeSpec {
                        id: ROOT_ID.to_string(),
                        parent: None,
                        time: 0,
                        prob: None,
                    },
                );
                seen = specs.iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect();
                0
            }
            [r] => *r,
            [_, second, ..] => {
                return Err(TreeError::DisconnectedNode {
                    node: specs[*second].id.clone(),
                })
            }
        };
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); specs.len()];
        for (i, n) in specs.iter().enumerate() {
            if let Some(p) = &n.parent {
                match seen.get(p) {
                    Some(&pi) => children[pi].push(i),
                    None => return Err(TreeError::DisconnectedNode { node: n.id.clone() }),
                }
            }
        }
        if specs[root].time != 0 {
            return Err(TreeError::TimeSkew {
                node: specs[root].id.clone(),
                expected: 0,
                found: specs[root].time,
            });
        }
        if let Some(p) = &specs[root].prob {
            if !p.is_one() {
                return Err(TreeError::NonUnitBranch {
                    node: specs[root].id.clone(),
                    sum: crate::rational::fmt_rational(p),
                });
            }
        }

        // Depth-first preorder from the root.
        let mut order = Vec::with_capacity(specs.len());
        let mut new_index = vec![usize::MAX; specs.len()];
        let mut stack = vec![root];
        while let Some(i) = stack.pop() {
            new_index[i] = order.len();
            order.push(i);
            for &c in children[i].iter().rev() {
                stack.push(c);
            }
        }
        if order.len() != specs.len() {
            let lost = (0..specs.len()).find(|&i| new_index[i] == usize::MAX).unwrap();
            return Err(TreeError::DisconnectedNode {
                node: specs[lost].id.clone(),
            });
        }

        let mut nodes: Vec<Node> = Vec::with_capacity(order.len());
        for &i in &order {
            let s = &specs[i];
            let parent = s.parent.as_ref().map(|p| new_index[seen[p]]);
            let prob = match (parent, &s.prob) {
                (None, _) => Rational::one(),
                (Some(_), Some(p)) => p.clone(),
                (Some(_), None) => {
                    return Err(TreeError::ZeroProbability {
                        node: s.id.clone(),
                        prob: "missing".into(),
                    })
                }
            };
            if !prob.is_positive() {
                return Err(TreeError::ZeroProbability {
                    node: s.id.clone(),
                    prob: crate::rational::fmt_rational(&prob),
                });
            }
            if let Some(p) = parent {
                let expected = nodes[p].time + 1;
                if s.time != expected {
                    return Err(TreeError::TimeSkew {
                        node: s.id.clone(),
                        expected,
                        found: s.time,
                    });
                }
            }
            if s.time > spec.horizon {
                return Err(TreeError::TimeSkew {
                    node: s.id.clone(),
                    expected: spec.horizon,
                    found: s.time,
                });
            }
            let abs_prob = match parent {
                Some(p) => &nodes[p].abs_prob * &prob,
                None => Rational::one(),
            };
            nodes.push(Node {
                id: s.id.clone(),
                parent,
                time: s.time,
                prob,
                abs_prob,
                children: children[i].iter().map(|&c| new_index[c]).collect(),
                leaves: 0..0,
            });
        }

        let mut leaves = Vec::new();
        for (k, n) in nodes.iter().enumerate() {
            if n.children.is_empty() {
                if n.time != spec.horizon {
                    return Err(TreeError::TimeSkew {
                        node: n.id.clone(),
                        expected: spec.horizon,
                        found: n.time,
                    });
                }
                leaves.push(k);
            } else {
                let sum: Rational = n.children.iter().map(|&c| nodes[c].prob.clone()).sum();
                if !sum.is_one() {
                    return Err(TreeError::NonUnitBranch {
                        node: n.id.clone(),
                        sum: crate::rational::fmt_rational(&sum),
                    });
                }
            }
        }
        // Leaf ranges: preorder makes descendants contiguous.
        let mut next_leaf = 0;
        let mut ranges = vec![0..0; nodes.len()];
        fn assign(k: usize, nodes: &[Node], ranges: &mut [Range<usize>], next: &mut usize) {
            let start = *next;
            if nodes[k].children.is_empty() {
                *next += 1;
            }
            for &c in &nodes[k].children {
                assign(c, nodes, ranges, next);
            }
            ranges[k] = start..*next;
        }
        assign(0, &nodes, &mut ranges, &mut next_leaf);
        for (n, r) in nodes.iter_mut().zip(ranges) {
            n.leaves = r;
        }
        let mut by_time = vec![Vec::new(); spec.horizon + 1];
        for (k, n) in nodes.iter().enumerate() {
            by_time[n.time].push(k);
        }
        let index = nodes.iter().enumerate().map(|(k, n)| (n.id.clone(), k)).collect();
        let leaf_probs = leaves.iter().map(|&k| nodes[k].abs_prob.clone()).collect();
        Ok(FilteredTree {
            horizon: spec.horizon,
            nodes,
            leaves,
            by_time,
            index,
            leaf_probs,
        })
    }

    /// A tree where every node at time `t` has `branching[t]` equally likely children.
    pub fn uniform(branching: &[usize]) -> Self {
        let mut nodes = Vec::new();
        let mut frontier = vec![ROOT_ID.to_string()];
        for (t, &b) in branching.iter().enumerate() {
            let mut next = Vec::new();
            for p in &frontier {
                for c in 0..b {
                    let id = if p == ROOT_ID {
                        format!("n{c}")
                    } else {
                        format!("{p}{c}")
                    };
                    nodes.push(NodeSpec {
                        id: id.clone(),
                        parent: Some(p.clone()),
                        time: t + 1,
                        prob: Some(crate::rational::frac(1, b as i64)),
                    });
                    next.push(id);
                }
            }
            frontier = next;
        }
        Self::build(&TreeSpec {
            horizon: branching.len(),
            nodes,
        })
        .expect("uniform tree is valid")
    }

    pub fn to_spec(&self) -> TreeSpec {
        TreeSpec {
            horizon: self.horizon,
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeSpec {
                    id: n.id.clone(),
                    parent: n.parent.map(|p| self.nodes[p].id.clone()),
                    time: n.time,
                    prob: n.parent.map(|_| n.prob.clone()),
                })
                .collect(),
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn node(&self, k: usize) -> &Node {
        &self.nodes[k]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn find(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn nodes_at(&self, t: usize) -> &[usize] {
        &self.by_time[t]
    }

    /// Node index of leaf number `w`.
    pub fn leaf_node(&self, w: usize) -> usize {
        self.leaves[w]
    }

    pub fn leaf_probs(&self) -> &[Rational] {
        &self.leaf_probs
    }

    /// The time-`t` ancestor of leaf `w`.
    pub fn ancestor_of_leaf(&self, w: usize, t: usize) -> usize {
        let mut k = self.leaves[w];
        while self.nodes[k].time > t {
            k = self.nodes[k].parent.expect("non-root");
        }
        k
    }

    /// Index of each leaf's time-`t` ancestor within `nodes_at(t)`.
    pub fn partition_at(&self, t: usize) -> Vec<usize> {
        let mut out = vec![0; self.num_leaves()];
        for (pos, &u) in self.by_time[t].iter().enumerate() {
            for w in self.nodes[u].leaves.clone() {
                out[w] = pos;
            }
        }
        out
    }

    /// `Σ_{ω∈u} P(ω) X(ω)` for a flat claim of the given width.
    pub fn mass(&self, x: &[Rational], width: usize, u: usize) -> Vector {
        let mut acc = vec![Rational::zero(); width];
        for w in self.nodes[u].leaves.clone() {
            let p = &self.leaf_probs[w];
            for i in 0..width {
                let v = &x[w * width + i];
                if !v.is_zero() {
                    acc[i] += p * v;
                }
            }
        }
        acc
    }

    /// Plain leaf sum `Σ_{ω∈u} X(ω)`, for vectors already in mass coordinates.
    pub fn node_sum(&self, x: &[Rational], width: usize, u: usize) -> Vector {
        let mut acc = vec![Rational::zero(); width];
        for w in self.nodes[u].leaves.clone() {
            for i in 0..width {
                acc[i] += &x[w * width + i];
            }
        }
        acc
    }

    /// `E_P[X | F_t]` at each time-`t` node, in `nodes_at(t)` order.
    pub fn cond_expect(&self, x: &[Rational], width: usize, t: usize) -> Vec<Vector> {
        self.by_time[t]
            .iter()
            .map(|&u| {
                let pu = &self.nodes[u].abs_prob;
                self.mass(x, width, u).into_iter().map(|m| m / pu).collect()
            })
            .collect()
    }

    /// Unnormalized variant: `E_P[X 1_u]` at each time-`t` node.
    pub fn cond_mass(&self, x: &[Rational], width: usize, t: usize) -> Vec<Vector> {
        self.by_time[t].iter().map(|&u| self.mass(x, width, u)).collect()
    }

    /// Lifts one value per time-`t` node to a terminal claim.
    pub fn embed(&self, t: usize, values: &[Vector]) -> Vector {
        let width = values.first().map_or(0, Vec::len);
        let mut out = vec![Rational::zero(); self.num_leaves() * width];
        for (&u, v) in self.by_time[t].iter().zip(values) {
            for w in self.nodes[u].leaves.clone() {
                out[w * width..(w + 1) * width].clone_from_slice(v);
            }
        }
        out
    }

    /// `v` copied onto the leaves of node `u`, zero elsewhere.
    pub fn embed_node(&self, u: usize, v: &[Rational]) -> Vector {
        let width = v.len();
        let mut out = vec![Rational::zero(); self.num_leaves() * width];
        for w in self.nodes[u].leaves.clone() {
            out[w * width..(w + 1) * width].clone_from_slice(v);
        }
        out
    }

    /// Pointwise product of a flat claim with the leaf probabilities.
    pub fn to_mass(&self, x: &[Rational], width: usize) -> Vector {
        x.iter()
            .enumerate()
            .map(|(k, v)| v * &self.leaf_probs[k / width])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int, vec_from_ints};

    fn spec(json: &str) -> TreeSpec {
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn trivial_tree() {
        let t = FilteredTree::build(&spec(r#"{"T":0,"nodes":[]}"#)).unwrap();
        assert_eq!(t.num_leaves(), 1);
        assert_eq!(t.leaf_probs(), &[int(1)]);
    }

    #[test]
    fn coin_and_two_period() {
        let coin = FilteredTree::uniform(&[2]);
        assert_eq!(coin.leaf_probs(), &[frac(1, 2), frac(1, 2)]);
        assert_eq!(
            coin.cond_expect(&vec_from_ints(&[4, -2]), 1, 0),
            vec![vec![int(1)]]
        );
        let f2 = FilteredTree::uniform(&[2, 2]);
        assert_eq!(f2.leaf_probs(), &[frac(1, 4), frac(1, 4), frac(1, 4), frac(1, 4)]);
        assert_eq!(
            f2.cond_expect(&vec_from_ints(&[0, 12, 12, 0]), 1, 1),
            vec![vec![int(6)], vec![int(6)]]
        );
        assert_eq!(
            f2.embed(1, &[vec![int(1)], vec![int(2)]]),
            vec_from_ints(&[1, 1, 2, 2])
        );
    }

    #[test]
    fn explicit_root_and_errors() {
        let ok = spec(
            r#"{"T":1,"nodes":[{"id":"r","time":0},{"id":"a","parent":"r","time":1,"prob":"1/3"},{"id":"b","parent":"r","time":1,"prob":"2/3"}]}"#,
        );
        let t = FilteredTree::build(&ok).unwrap();
        assert_eq!(t.node(0).id, "r");

        let bad_sum = spec(
            r#"{"T":1,"nodes":[{"id":"a","parent":"root","time":1,"prob":"1/3"},{"id":"b","parent":"root","time":1,"prob":"1/3"}]}"#,
        );
        assert!(matches!(
            FilteredTree::build(&bad_sum),
            Err(TreeError::NonUnitBranch { .. })
        ));

        let zero = spec(
            r#"{"T":1,"nodes":[{"id":"a","parent":"root","time":1,"prob":"0"},{"id":"b","parent":"root","time":1,"prob":"1"}]}"#,
        );
        assert!(matches!(
            FilteredTree::build(&zero),
            Err(TreeError::ZeroProbability { .. })
        ));

        let skew = spec(r#"{"T":2,"nodes":[{"id":"a","parent":"root","time":1,"prob":"1"}]}"#);
        assert!(matches!(
            FilteredTree::build(&skew),
            Err(TreeError::TimeSkew { .. })
        ));

        let orphan = spec(
            r#"{"T":1,"nodes":[{"id":"a","parent":"root","time":1,"prob":"1"},{"id":"b","parent":"zzz","time":1,"prob":"1"}]}"#,
        );
        assert!(matches!(
            FilteredTree::build(&orphan),
            Err(TreeError::DisconnectedNode { .. })
        ));

        let dup = spec(
            r#"{"T":1,"nodes":[{"id":"a","parent":"root","time":1,"prob":"1/2"},{"id":"a","parent":"root","time":1,"prob":"1/2"}]}"#,
        );
        assert!(matches!(
            FilteredTree::build(&dup),
            Err(TreeError::DuplicateId(_))
        ));
    }

    #[test]
    fn roundtrip_spec() {
        let f2 = FilteredTree::uniform(&[2, 3]);
        let again = FilteredTree::build(&f2.to_spec()).unwrap();
        assert_eq!(again.leaf_probs(), f2.leaf_probs());
        assert_eq!(again.num_nodes(), f2.num_nodes());
    }
}
