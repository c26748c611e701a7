//! Seeded random instances: trees, scenario sets, numeraires, claims and
//! arbitrage-free bid-ask markets.

use std::sync::Arc;

use num_traits::{One, Zero};
use rand::Rng;

use crate::market::BidAskProcess;
use crate::rational::{frac, int, Rational, Vector};
use crate::risk::{Numeraire, ScenarioSet};
use crate::tree::{FilteredTree, NodeSpec, TreeSpec};

fn random_probs(rng: &mut impl Rng, n: usize) -> Vec<Rational> {
    let w: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=4)).collect();
    let total: i64 = w.iter().sum();
    w.iter().map(|&x| frac(x, total)).collect()
}

/// A tree of horizon `1..=max_t` (a single node when `max_t = 0`) with at most `max_leaves` leaves and
/// random branching probabilities.
pub fn random_tree(
    rng: &mut impl Rng,
    max_t: usize,
    max_leaves: usize,
    max_branch: usize,
) -> Arc<FilteredTree> {
    let horizon = if max_t == 0 { 0 } else { rng.gen_range(1..=max_t) };
    let mut nodes = Vec::new();
    let mut frontier = vec!["root".to_string()];
    for t in 1..=horizon {
        let mut next = Vec::new();
        let budget_per = (max_leaves / frontier.len()).max(1);
        for p in &frontier {
            let remaining_levels = horizon - t;
            let cap = if remaining_levels == 0 {
                budget_per
            } else {
                // Leave room for at least binary branching later.
                (budget_per >> remaining_levels).max(1)
            };
            let b = rng.gen_range(1..=max_branch.min(cap).max(1));
            let probs = random_probs(rng, b);
            for (c, prob) in probs.into_iter().enumerate() {
                let id = format!("{p}.{c}");
                nodes.push(NodeSpec {
                    id: id.clone(),
                    parent: Some(p.clone()),
                    time: t,
                    prob: Some(prob),
                });
                next.push(id);
            }
        }
        frontier = next;
    }
    Arc::new(FilteredTree::build(&TreeSpec { horizon, nodes }).unwrap())
}

/// `k` random densities whose supports jointly cover every leaf.
pub fn random_scenarios(rng: &mut impl Rng, tree: &Arc<FilteredTree>, k: usize) -> ScenarioSet {
    let l = tree.num_leaves();
    let mut masses: Vec<Vec<i64>> = (0..k)
        .map(|_| {
            (0..l)
                .map(|_| {
                    if rng.gen_bool(0.3) {
                        0
                    } else {
                        rng.gen_range(1..=4)
                    }
                })
                .collect()
        })
        .collect();
    for m in masses.iter_mut() {
        if m.iter().all(|&x| x == 0) {
            m[rng.gen_range(0..l)] = 1;
        }
    }
    for w in 0..l {
        if masses.iter().all(|m| m[w] == 0) {
            let j = rng.gen_range(0..k);
            masses[j][w] = rng.gen_range(1..=3);
        }
    }
    let densities = masses
        .iter()
        .map(|m| {
            let total: i64 = m.iter().sum();
            m.iter()
                .zip(tree.leaf_probs())
                .map(|(&x, p)| frac(x, total) / p)
                .collect()
        })
        .collect();
    ScenarioSet::new(tree.clone(), densities).unwrap()
}

pub fn random_numeraire(rng: &mut impl Rng, l: usize, width: usize) -> Numeraire {
    let mut values = Vec::with_capacity(l * width);
    for _ in 0..l {
        values.push(int(1));
        for _ in 1..width {
            values.push(frac(rng.gen_range(1..=6), rng.gen_range(1..=3)));
        }
    }
    Numeraire::new(l, width, values).unwrap()
}

pub fn random_claim(rng: &mut impl Rng, n: usize, range: i64) -> Vector {
    (0..n)
        .map(|_| frac(rng.gen_range(-range * 2..=range * 2), 2))
        .collect()
}

/// A bid-ask market with a strictly positive consistent price system by
/// construction: `P`-martingale mid prices `S` with proportional spreads.
pub fn random_market(rng: &mut impl Rng, tree: &Arc<FilteredTree>, d: usize) -> BidAskProcess {
    let w = d + 1;
    let n = tree.num_nodes();
    let mut s: Vec<Vector> = vec![Vec::new(); n];
    for leaf in 0..tree.num_leaves() {
        let mut v = vec![int(1)];
        for _ in 0..d {
            v.push(frac(rng.gen_range(1..=8), rng.gen_range(1..=4)));
        }
        s[tree.leaf_node(leaf)] = v;
    }
    for t in (0..tree.horizon()).rev() {
        for &u in tree.nodes_at(t) {
            let mut avg = vec![Rational::zero(); w];
            for &c in &tree.node(u).children {
                for (a, x) in avg.iter_mut().zip(&s[c]) {
                    *a += &tree.node(c).prob * x;
                }
            }
            s[u] = avg;
        }
    }
    let spreads = [frac(0, 1), frac(1, 20), frac(1, 10), frac(1, 4)];
    let matrices = (0..n)
        .map(|u| {
            (0..w)
                .map(|i| {
                    (0..w)
                        .map(|j| {
                            if i == j {
                                Rational::one()
                            } else {
                                let sp = &spreads[rng.gen_range(0..spreads.len())];
                                &s[u][j] / &s[u][i] * (Rational::one() + sp)
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    BidAskProcess::new(tree.clone(), w, matrices).unwrap()
}
