#![allow(dead_code)]

use std::path::PathBuf;

use conerisk_core::dd::hrep_to_vrep;
use conerisk_core::ftap::TradingConeProcess;
use conerisk_core::io::{parse_fixture, Fixture};
use conerisk_core::rational::{Rational, Vector};
use conerisk_core::risk::ScenarioSet;
use num_traits::{Signed, Zero};
use rand_chacha::ChaCha8Rng;

#[allow(unused_imports)]
pub use conerisk_core::sample::*;

pub fn fixture(name: &str) -> Fixture {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_fixture(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

/// `ρ_t(X)` at each time-`t` node by one-step backward recursion under
/// every generator separately (transition probabilities `Q(c)/Q(u)`),
/// maximized over the generators charging the node. Shares no code with
/// the library's risk evaluation.
pub fn rho_oracle(s: &ScenarioSet, x: &[Rational], t: usize) -> Vec<Rational> {
    let tree = s.tree();
    let n = tree.num_nodes();
    let mut best: Vec<Option<Rational>> = vec![None; n];
    for dens in s.densities() {
        // Unconditional mass of every node under this generator.
        let mut q = vec![Rational::zero(); n];
        for leaf in 0..tree.num_leaves() {
            let m = &dens[leaf] * &tree.leaf_probs()[leaf];
            let mut a = Some(tree.leaf_node(leaf));
            while let Some(u) = a {
                q[u] += &m;
                a = tree.node(u).parent;
            }
        }
        let mut value = vec![Rational::zero(); n];
        for leaf in 0..tree.num_leaves() {
            value[tree.leaf_node(leaf)] = x[leaf].clone();
        }
        for tt in (0..tree.horizon()).rev() {
            for &u in tree.nodes_at(tt) {
                if q[u].is_zero() {
                    continue;
                }
                let mut v = Rational::zero();
                for &c in &tree.node(u).children {
                    if !q[c].is_zero() {
                        v += &q[c] / &q[u] * &value[c];
                    }
                }
                value[u] = v;
            }
        }
        for &u in tree.nodes_at(t) {
            if q[u].is_positive() && best[u].as_ref().map_or(true, |b| value[u] > *b) {
                best[u] = Some(value[u].clone());
            }
        }
    }
    tree.nodes_at(t)
        .iter()
        .map(|&u| best[u].clone().expect("every node is charged"))
        .collect()
}

/// Superhedging price as `max z·X / Σ_ω z^i(ω)` over the extreme rays of
/// the price-system cone, enumerated by double description on
/// `{z : g·z ≤ 0}` for every embedded trading-cone generator `g`. `None`
/// when some ray with `Σ z^i = 0` pairs positively with `X` (no finite
/// hedge).
pub fn superhedge_oracle(proc: &TradingConeProcess, x: &[Rational], i: usize) -> Option<Rational> {
    let tree = proc.tree();
    let w = proc.width();
    let n = tree.num_leaves() * w;
    let mut ineqs = Vec::new();
    let mut eqs = Vec::new();
    for u in 0..tree.num_nodes() {
        let g = proc.at(u).generators();
        ineqs.extend(g.rays.iter().map(|r| tree.embed_node(u, r)));
        eqs.extend(g.lineality.iter().map(|l| tree.embed_node(u, l)));
    }
    let v = hrep_to_vrep(n, &ineqs, &eqs);
    let pair = |z: &Vector| -> (Rational, Rational) {
        let val: Rational = z.iter().zip(x).map(|(a, b)| a * b).sum();
        let norm: Rational = (0..tree.num_leaves()).map(|leaf| z[leaf * w + i].clone()).sum();
        (val, norm)
    };
    let mut best = Rational::zero();
    let mut found = false;
    for l in &v.lineality {
        if !pair(l).0.is_zero() {
            return None;
        }
    }
    for r in &v.rays {
        let (val, norm) = pair(r);
        if norm.is_zero() {
            if val.is_positive() {
                return None;
            }
            continue;
        }
        let p = val / norm;
        if !found || p > best {
            best = p;
            found = true;
        }
    }
    found.then_some(best)
}
