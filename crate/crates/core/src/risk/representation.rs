//! Representability of the acceptance cone as a sum of step cones, and the
//! explicit decomposition of acceptable claims.

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::{acceptance_portfolio_cone, step_cones, Numeraire, RiskError, ScenarioSet, StepCones};
use crate::cones::{Comparison, PolyCone};
use crate::lp::{LinearProgram, LpOutcome, Relation, Sense};
use crate::rational::{dot, neg, serde_qvec, Rational, Vector};
use crate::tree::FilteredTree;

/// `⊕_u embed(K(u))` as a generator-form cone in portfolio claim space.
pub fn step_cone_sum(tree: &FilteredTree, k: &StepCones) -> PolyCone {
    let w = k.width;
    let mut rays = Vec::new();
    let mut lin = Vec::new();
    for u in 0..tree.num_nodes() {
        let g = k.at(u).generators();
        rays.extend(g.rays.iter().map(|r| tree.embed_node(u, r)));
        lin.extend(g.lineality.iter().map(|l| tree.embed_node(u, l)));
    }
    PolyCone::from_generators_with_lineality(tree.num_leaves() * w, rays, lin)
        .expect("embedded cones share the claim space")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RepresentabilityReport {
    pub verdict: bool,
    /// `left` is `𝒜(V)`, `right` is `⊕_t K_t`.
    pub certificate: Comparison,
}

/// Decides `𝒜(V) = ⊕_t K_t`. The sum is polyhedral, hence closed.
pub fn is_representable(s: &ScenarioSet, v: &Numeraire) -> RepresentabilityReport {
    let tree = s.tree();
    let acc = acceptance_portfolio_cone(s, v);
    let sum = step_cone_sum(tree, &step_cones(s, v));
    // Generators of 𝒜(V) are cheap (few facets), so both inclusions run on
    // generators: 𝒜 ⊆ ⊕K by LP, ⊕K ⊆ 𝒜 by facet evaluation.
    acc.generators();
    let certificate = acc.compare(&sum).expect("same claim space");
    RepresentabilityReport {
        verdict: certificate.equal,
        certificate,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecomposeTarget {
    /// A scalar claim `X`, decomposed as `Σ_t π_t·V`.
    Scalar(Vector),
    /// A portfolio claim `Y`, decomposed as `Σ_t π_t`.
    Portfolio(Vector),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NodePortfolio {
    pub node: String,
    pub time: usize,
    #[serde(with = "serde_qvec")]
    pub value: Vector,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "camelCase")]
pub enum Decomposition {
    /// `π(u) ∈ K(u)` at every node, and the cumulative reserves
    /// `R_t(u) = Σ_{a ⪯ u} π(a)`.
    #[serde(rename_all = "camelCase")]
    Feasible {
        pi: Vec<NodePortfolio>,
        reserves: Vec<NodePortfolio>,
    },
    /// `y` with `y·Σ_u embed(π(u)) ≤ 0` (or `y·(Σ π·V) ≤ 0`) for every
    /// admissible `π`, and `y·target > 0`.
    Infeasible {
        #[serde(with = "serde_qvec")]
        separator: Vector,
    },
}

impl Decomposition {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Decomposition::Feasible { .. })
    }
}

/// Finds `π(u) ∈ K(u)` for every node with `Σ_u embed(π(u)) = Y` (portfolio
/// target) or `Σ_u embed(π(u))·V = X` (scalar target), by exact LP.
pub fn decompose(
    s: &ScenarioSet,
    v: &Numeraire,
    target: &DecomposeTarget,
) -> Result<Decomposition, RiskError> {
    let tree = s.tree();
    let w = v.width();
    let l = tree.num_leaves();
    let (rows_per_leaf, values) = match target {
        DecomposeTarget::Scalar(x) => (1, x),
        DecomposeTarget::Portfolio(y) => (w, y),
    };
    if values.len() != l * rows_per_leaf {
        return Err(RiskError::WrongLength {
            expected: l * rows_per_leaf,
            found: values.len(),
        });
    }
    let k = step_cones(s, v);
    let nn = tree.num_nodes();
    let nv = nn * w;
    let mut lp = LinearProgram::new(nv, Sense::Maximize);
    lp.set_all_free();
    for u in 0..nn {
        let f = k.at(u).facets();
        for h in &f.inequalities {
            let terms: Vec<(usize, Rational)> = h
                .iter()
                .enumerate()
                .map(|(i, c)| (u * w + i, c.clone()))
                .collect();
            lp.add_sparse(&terms, Relation::Le, Rational::zero());
        }
    }
    let first_eq = lp.constraints().len();
    for leaf in 0..l {
        let mut ancestors = Vec::new();
        let mut a = Some(tree.leaf_node(leaf));
        while let Some(u) = a {
            ancestors.push(u);
            a = tree.node(u).parent;
        }
        match target {
            DecomposeTarget::Scalar(_) => {
                let terms: Vec<(usize, Rational)> = ancestors
                    .iter()
                    .flat_map(|&u| (0..w).map(move |i| (u * w + i, v.at(leaf)[i].clone())))
                    .collect();
                lp.add_sparse(&terms, Relation::Eq, values[leaf].clone());
            }
            DecomposeTarget::Portfolio(_) => {
                for i in 0..w {
                    let terms: Vec<(usize, Rational)> =
                        ancestors.iter().map(|&u| (u * w + i, Rational::one())).collect();
                    lp.add_sparse(&terms, Relation::Eq, values[leaf * w + i].clone());
                }
            }
        }
    }
    match lp.solve() {
        LpOutcome::Optimal(sol) => {
            let pi_of = |u: usize| sol.x[u * w..(u + 1) * w].to_vec();
            let mut pi = Vec::with_capacity(nn);
            let mut reserves = Vec::with_capacity(nn);
            let mut cumulative: Vec<Vector> = vec![Vec::new(); nn];
            for t in 0..=tree.horizon() {
                for &u in tree.nodes_at(t) {
                    let node = tree.node(u);
                    let own = pi_of(u);
                    let r = match node.parent {
                        Some(p) => crate::rational::add(&cumulative[p], &own),
                        None => own.clone(),
                    };
                    pi.push(NodePortfolio {
                        node: node.id.clone(),
                        time: t,
                        value: own,
                    });
                    reserves.push(NodePortfolio {
                        node: node.id.clone(),
                        time: t,
                        value: r.clone(),
                    });
                    cumulative[u] = r;
                }
            }
            Ok(Decomposition::Feasible { pi, reserves })
        }
        LpOutcome::Infeasible { farkas } => Ok(Decomposition::Infeasible {
            separator: neg(&farkas[first_eq..]),
        }),
        LpOutcome::Unbounded { .. } => unreachable!("zero objective"),
    }
}

/// Re-checks a decomposition by exact arithmetic: membership of every
/// `π(u)` in `K(u)` and re-summation to the target; for an infeasibility
/// answer, that the separator is nonpositive on every step cone's
/// generators and positive on the target.
pub fn verify_decomposition(
    s: &ScenarioSet,
    v: &Numeraire,
    target: &DecomposeTarget,
    dec: &Decomposition,
) -> bool {
    let tree = s.tree();
    let w = v.width();
    let k = step_cones(s, v);
    match dec {
        Decomposition::Feasible { pi, .. } => {
            let mut total = vec![Rational::zero(); tree.num_leaves() * w];
            for np in pi {
                let Some(u) = tree.find(&np.node) else {
                    return false;
                };
                if k.at(u).violated_facet(&np.value).is_some() {
                    return false;
                }
                let e = tree.embed_node(u, &np.value);
                for (a, b) in total.iter_mut().zip(e) {
                    *a += b;
                }
            }
            match target {
                DecomposeTarget::Portfolio(y) => &total == y,
                DecomposeTarget::Scalar(x) => &v.value_of(&total) == x,
            }
        }
        Decomposition::Infeasible { separator } => {
            let (image, tgt): (Box<dyn Fn(&Vector) -> Vector>, &Vector) = match target {
                DecomposeTarget::Portfolio(y) => (Box::new(|e: &Vector| e.clone()), y),
                DecomposeTarget::Scalar(x) => (Box::new(|e: &Vector| v.value_of(e)), x),
            };
            if !dot(separator, tgt).is_positive() {
                return false;
            }
            (0..tree.num_nodes()).all(|u| {
                let g = k.at(u).generators();
                g.rays
                    .iter()
                    .all(|r| !dot(separator, &image(&tree.embed_node(u, r))).is_positive())
                    && g.lineality
                        .iter()
                        .all(|l| dot(separator, &image(&tree.embed_node(u, l))).is_zero())
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, vec_from_ints};
    use std::sync::Arc;

    #[test]
    fn negative_claim_sits_at_the_leaves() {
        let tree = Arc::new(FilteredTree::uniform(&[2]));
        let s = ScenarioSet::singleton_p(tree.clone());
        let v = Numeraire::cash(2);
        let x = DecomposeTarget::Scalar(vec_from_ints(&[-1, -3]));
        let dec = decompose(&s, &v, &x).unwrap();
        assert!(verify_decomposition(&s, &v, &x, &dec));
        // With d = 0 the single measure P leaves (1, −1) acceptable at time 0
        // but not reachable by nonpositive adjustments.
        assert!(!is_representable(&s, &v).verdict);
        assert!(is_representable(&ScenarioSet::all_measures(tree), &v).verdict);
    }

    #[test]
    fn avar_on_two_periods_is_not_representable() {
        let tree = Arc::new(FilteredTree::uniform(&[2, 2]));
        let mut dens = Vec::new();
        for i in 0..4 {
            for j in i + 1..4 {
                let mut d = vec![int(0); 4];
                d[i] = int(2);
                d[j] = int(2);
                dens.push(d);
            }
        }
        let s = ScenarioSet::new(tree, dens).unwrap();
        let v = Numeraire::cash(4);
        let rep = is_representable(&s, &v);
        assert!(!rep.verdict);
        let crate::cones::Inclusion::Fails { witness, .. } = &rep.certificate.left_in_right else {
            panic!("expected 𝒜 ⊄ ⊕K");
        };
        let t = DecomposeTarget::Portfolio(witness.clone());
        let dec = decompose(&s, &v, &t).unwrap();
        assert!(!dec.is_feasible());
        assert!(verify_decomposition(&s, &v, &t, &dec));
    }
}
