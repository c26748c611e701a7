//! Optional pre-images, stabilization hulls, optional pastings and the
//! stability checker.

use std::collections::HashMap;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{acceptance_dual_cone, check_time, Numeraire, RiskError, ScenarioSet};
use crate::cones::{cone_intersect, Certificate, Comparison, Facets, Generators, PolyCone};
use crate::lp::{LinearProgram, LpOutcome, Relation, Sense};
use crate::rational::{int, is_zero_vec, serde_qmat, serde_qvec, Rational, Vector};
use crate::tree::FilteredTree;

/// Closed convex hull of `M_t(D)` for a cone `D` in claim space (mass
/// coordinates, width `w` per leaf): every time-`t` node aggregate must lie
/// in the cone of aggregates of `D`'s generators. Both representations are
/// assembled node by node.
pub fn optional_preimage(tree: &FilteredTree, d: &PolyCone, width: usize, t: usize) -> PolyCone {
    let n = d.dim();
    debug_assert_eq!(n, tree.num_leaves() * width);
    let g = d.generators();
    let mut gens = Generators::default();
    let mut facets = Facets::default();
    for &u in tree.nodes_at(t) {
        let node = tree.node(u);
        let restrict = |v: &Vector| -> Vector {
            let mut out = vec![Rational::zero(); n];
            for w in node.leaves.clone() {
                out[w * width..(w + 1) * width].clone_from_slice(&v[w * width..(w + 1) * width]);
            }
            out
        };
        for r in &g.rays {
            let rv = restrict(r);
            if !is_zero_vec(&rv) {
                gens.rays.push(rv);
            }
        }
        for l in &g.lineality {
            let lv = restrict(l);
            if !is_zero_vec(&lv) {
                gens.lineality.push(lv);
            }
        }
        let first = node.leaves.start;
        for w in node.leaves.clone().skip(1) {
            for i in 0..width {
                let mut v = vec![Rational::zero(); n];
                v[w * width + i] = Rational::one();
                v[first * width + i] = -Rational::one();
                gens.lineality.push(v);
            }
        }
        let local = PolyCone::from_generators_with_lineality(
            width,
            g.rays.iter().map(|r| tree.node_sum(r, width, u)).collect(),
            g.lineality.iter().map(|l| tree.node_sum(l, width, u)).collect(),
        )
        .expect("aggregates have the node width");
        let f = local.facets();
        for h in &f.inequalities {
            facets.inequalities.push(tree.embed_node(u, h));
        }
        for e in &f.equalities {
            facets.equalities.push(tree.embed_node(u, e));
        }
    }
    PolyCone::from_parts(n, gens, facets)
}

/// `[D] = ⋂_t conv M_t(D)`, in facet form.
pub fn stabilization_hull(tree: &FilteredTree, d: &PolyCone, width: usize) -> PolyCone {
    let pre: Vec<PolyCone> = (0..=tree.horizon())
        .map(|t| optional_preimage(tree, d, width, t))
        .collect();
    let refs: Vec<&PolyCone> = pre.iter().collect();
    cone_intersect(d.dim(), &refs).expect("same claim space")
}

/// A stopping time encoded as an antichain of nodes met by every path exactly once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoppingTime {
    nodes: Vec<usize>,
}

impl StoppingTime {
    pub fn new(tree: &FilteredTree, mut nodes: Vec<usize>) -> Result<Self, RiskError> {
        nodes.sort_unstable();
        nodes.dedup();
        let mut hit = vec![0usize; tree.num_leaves()];
        for &u in &nodes {
            if u >= tree.num_nodes() {
                return Err(RiskError::NotAStoppingTime(format!("unknown node index {u}")));
            }
            for w in tree.node(u).leaves.clone() {
                hit[w] += 1;
            }
        }
        if let Some(w) = hit.iter().position(|&h| h != 1) {
            return Err(RiskError::NotAStoppingTime(format!(
                "leaf {:?} is stopped {} times",
                tree.node(tree.leaf_node(w)).id,
                hit[w]
            )));
        }
        Ok(StoppingTime { nodes })
    }

    pub fn constant(tree: &FilteredTree, t: usize) -> Self {
        StoppingTime {
            nodes: tree.nodes_at(t).to_vec(),
        }
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }
}

/// Density of the optional pasting `Λ^{Q¹}_τ R Λ^{Q²} / Λ^{Q²}_{(τ+1)∧T}`.
///
/// `r` gives the one-step density on each child of every non-terminal node
/// of `tau`. On a leaf the conditional law of `Q²` is the point mass, so the
/// ratio is 1 there.
pub fn paste(
    tree: &FilteredTree,
    density1: &[Rational],
    density2: &[Rational],
    tau: &StoppingTime,
    r: &[(usize, Rational)],
) -> Result<Vector, RiskError> {
    let l = tree.num_leaves();
    for d in [density1, density2] {
        if d.len() != l {
            return Err(RiskError::WrongLength {
                expected: l,
                found: d.len(),
            });
        }
    }
    let r: HashMap<usize, Rational> = r.iter().cloned().collect();
    let q1 = tree.to_mass(density1, 1);
    let q2 = tree.to_mass(density2, 1);
    let mass = |q: &Vector, u: usize| -> Rational { tree.node(u).leaves.clone().map(|w| q[w].clone()).sum() };
    let mut out = vec![Rational::zero(); l];
    for &u in tau.nodes() {
        let node = tree.node(u);
        if node.children.is_empty() {
            out[node.leaves.start] = density1[node.leaves.start].clone();
            continue;
        }
        let mut total = Rational::zero();
        for &c in &node.children {
            let rc = r.get(&c).cloned().ok_or_else(|| RiskError::BadOneStepDensity {
                node: tree.node(c).id.clone(),
                reason: "missing value".into(),
            })?;
            if rc.is_negative() {
                return Err(RiskError::BadOneStepDensity {
                    node: tree.node(c).id.clone(),
                    reason: "negative value".into(),
                });
            }
            total += &tree.node(c).prob * &rc;
        }
        if !total.is_one() {
            return Err(RiskError::BadOneStepDensity {
                node: node.id.clone(),
                reason: format!(
                    "conditional expectation is {}",
                    crate::rational::fmt_rational(&total)
                ),
            });
        }
        let lambda1_u = mass(&q1, u) / &node.abs_prob;
        for &c in &node.children {
            let cn = tree.node(c);
            let factor = &lambda1_u * &r[&c];
            if cn.children.is_empty() {
                out[cn.leaves.start] = factor;
                continue;
            }
            let q2c = mass(&q2, c);
            for w in cn.leaves.clone() {
                if factor.is_zero() {
                    continue;
                }
                if q2c.is_zero() {
                    return Err(RiskError::UndefinedConditional { leaf: w });
                }
                let lambda2_c = &q2c / &cn.abs_prob;
                out[w] = &factor * &density2[w] / lambda2_c;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CrossCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StabilityReport {
    pub verdict: bool,
    /// `left` is `D = 𝒜(V)*`, `right` is its stabilization hull `[D]`.
    pub certificate: Comparison,
    pub cross_checks: Vec<CrossCheck>,
}

/// Decides optional V-m-stability as `D = [D]` for `D = 𝒜(V)*`. When
/// stable, additionally pastes `samples` random pairs of scenario measures
/// at random stopping times under the V-matching condition and confirms
/// each pasted measure lies in the convex hull of the generators.
pub fn is_optionally_stable(s: &ScenarioSet, v: &Numeraire, samples: usize, seed: u64) -> StabilityReport {
    let tree = s.tree();
    let d = acceptance_dual_cone(s, v);
    let hull = stabilization_hull(tree, &d, v.width());
    // Both cones in both forms: each inclusion is then decided by evaluating
    // generators against facets, which is far cheaper than one LP per facet.
    d.facets();
    hull.generators();
    let certificate = d.compare(&hull).expect("same claim space");
    let mut cross_checks = Vec::new();
    if certificate.equal && samples > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut formed = 0;
        let mut failures = Vec::new();
        let mut attempts = 0;
        while formed < samples && attempts < samples * 10 {
            attempts += 1;
            let Some((label, density)) = random_optional_pasting(s, v, &mut rng) else {
                continue;
            };
            formed += 1;
            // Q lies in the convex hull of the generators iff Q·V⊙P lies in D.
            let mass = tree.to_mass(&density, 1);
            let qv: Vector = mass
                .iter()
                .enumerate()
                .flat_map(|(leaf, q)| v.at(leaf).iter().map(move |x| q * x))
                .collect();
            if d.violated_facet(&qv).is_some() {
                failures.push(label);
            }
        }
        cross_checks.push(CrossCheck {
            name: "random optional pastings stay in the scenario set".into(),
            passed: failures.is_empty(),
            detail: if failures.is_empty() {
                format!("{formed} pastings checked")
            } else {
                format!(
                    "{} of {formed} pastings escaped: {}",
                    failures.len(),
                    failures.join("; ")
                )
            },
        });
    }
    StabilityReport {
        verdict: certificate.equal,
        certificate,
        cross_checks,
    }
}

fn random_stopping_time(tree: &FilteredTree, rng: &mut ChaCha8Rng) -> StoppingTime {
    let mut nodes = Vec::new();
    let mut stack = vec![tree.root()];
    while let Some(u) = stack.pop() {
        let node = tree.node(u);
        if node.children.is_empty() || rng.gen_range(0..3) == 0 {
            nodes.push(u);
        } else {
            stack.extend(node.children.iter().copied());
        }
    }
    StoppingTime { nodes }
}

/// Draws `Q¹, Q²` among the generators, a stopping time, and a one-step
/// density matching `E[V | F_τ]` under `Q¹` (a random vertex of the feasible
/// polytope at each stopped node). `None` if the matching system is empty.
fn random_optional_pasting(s: &ScenarioSet, v: &Numeraire, rng: &mut ChaCha8Rng) -> Option<(String, Vector)> {
    let tree = s.tree();
    let k1 = rng.gen_range(0..s.len());
    let k2 = rng.gen_range(0..s.len());
    let tau = random_stopping_time(tree, rng);
    let w = v.width();
    let q1 = &s.masses()[k1];
    let q2 = &s.masses()[k2];
    let cond_v = |q: &Vector, u: usize| -> Option<Vector> {
        let mut acc = vec![Rational::zero(); w];
        let mut m = Rational::zero();
        for leaf in tree.node(u).leaves.clone() {
            m += &q[leaf];
            for (a, vi) in acc.iter_mut().zip(v.at(leaf)) {
                *a += &q[leaf] * vi;
            }
        }
        if m.is_zero() {
            None
        } else {
            Some(acc.into_iter().map(|a| a / &m).collect())
        }
    };
    let mut r = Vec::new();
    for &u in tau.nodes() {
        let node = tree.node(u);
        if node.children.is_empty() {
            continue;
        }
        let Some(target) = cond_v(q1, u) else {
            // Q¹(u) = 0: the pasted density vanishes below u whatever R is,
            // so spread R over children that Q² charges.
            let charged: Vec<usize> = node
                .children
                .iter()
                .copied()
                .filter(|&c| cond_v(q2, c).is_some())
                .collect();
            let total: Rational = charged.iter().map(|&c| tree.node(c).prob.clone()).sum();
            for &c in &node.children {
                let val = if charged.contains(&c) {
                    Rational::one() / &total
                } else {
                    Rational::zero()
                };
                r.push((c, val));
            }
            continue;
        };
        let children = &node.children;
        let mut lp = LinearProgram::new(children.len(), Sense::Maximize);
        let mut obj = Vec::with_capacity(children.len());
        for _ in children {
            obj.push(int(rng.gen_range(-3..=3)));
        }
        lp.set_objective(obj);
        let probs: Vector = children.iter().map(|&c| tree.node(c).prob.clone()).collect();
        lp.add(probs.clone(), Relation::Eq, Rational::one());
        let child_v: Vec<Option<Vector>> = children.iter().map(|&c| cond_v(q2, c)).collect();
        for i in 0..w {
            let row: Vector = probs
                .iter()
                .zip(&child_v)
                .map(|(p, cv)| match cv {
                    Some(cv) => p * &cv[i],
                    None => Rational::zero(),
                })
                .collect();
            lp.add(row, Relation::Eq, target[i].clone());
        }
        for (j, cv) in child_v.iter().enumerate() {
            if cv.is_none() {
                let mut row = vec![Rational::zero(); children.len()];
                row[j] = Rational::one();
                lp.add(row, Relation::Eq, Rational::zero());
            }
        }
        let sol = lp.solve().optimal()?;
        for (&c, val) in children.iter().zip(sol.x) {
            r.push((c, val));
        }
    }
    let density = paste(tree, &s.densities()[k1], &s.densities()[k2], &tau, &r).ok()?;
    let stopped: Vec<&str> = tau.nodes().iter().map(|&u| tree.node(u).id.as_str()).collect();
    Some((format!("Q{k1} then Q{k2} at {{{}}}", stopped.join(",")), density))
}

/// Output of the backward recursion proving `Z ∈ D` from `Z ∈ ⋂_t M_t(D)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StabilityWitness {
    #[serde(with = "serde_qvec")]
    pub beta0: Vector,
    /// `β_t` at each time-`t` node.
    #[serde(with = "serde_qmat")]
    pub beta: Vec<Vector>,
    /// `Z^t ∈ D` with `E[Z|F_t] = β_t E[Z^t|F_t]`.
    #[serde(with = "serde_qmat")]
    pub components: Vec<Vector>,
    /// `ξ^t`, each a member of `D`.
    #[serde(with = "serde_qmat")]
    pub xi: Vec<Vector>,
    pub certificates: Vec<Certificate>,
}

/// Finds `Z^t ∈ D` and `β_t ≥ 0` with `agg_u(Z) = β_t(u) agg_u(Z^t)` at
/// every time-`t` node, maximizing the smallest `1/β_t(u)` (capped at 1)
/// over nodes where `Z` has mass.
fn preimage_component(
    tree: &FilteredTree,
    d: &PolyCone,
    width: usize,
    z: &[Rational],
    t: usize,
) -> Result<(Vector, Vector), RiskError> {
    let g = d.generators();
    let nr = g.rays.len();
    let nl = g.lineality.len();
    let nodes = tree.nodes_at(t);
    let aggs: Vec<Vector> = nodes.iter().map(|&u| tree.node_sum(z, width, u)).collect();
    let active: Vec<usize> = (0..nodes.len()).filter(|&j| !is_zero_vec(&aggs[j])).collect();
    if active.is_empty() {
        return Ok((
            vec![Rational::zero(); d.dim()],
            vec![Rational::zero(); nodes.len()],
        ));
    }
    // Variables: rays coefficients, lineality coefficients, γ per active node, δ.
    let nv = nr + nl + active.len() + 1;
    let delta = nv - 1;
    let mut lp = LinearProgram::new(nv, Sense::Maximize);
    for j in nr..nr + nl {
        lp.set_free(j);
    }
    lp.set_free(delta);
    lp.set_objective_coeff(delta, Rational::one());
    let gen_aggs: Vec<Vec<Vector>> = g
        .rays
        .iter()
        .chain(&g.lineality)
        .map(|v| nodes.iter().map(|&u| tree.node_sum(v, width, u)).collect())
        .collect();
    for (a, &j) in active.iter().enumerate() {
        for i in 0..width {
            let mut row = vec![Rational::zero(); nv];
            for (k, ga) in gen_aggs.iter().enumerate() {
                row[k] = ga[j][i].clone();
            }
            row[nr + nl + a] = -aggs[j][i].clone();
            lp.add(row, Relation::Eq, Rational::zero());
        }
        let mut row = vec![Rational::zero(); nv];
        row[nr + nl + a] = Rational::one();
        row[delta] = -Rational::one();
        lp.add(row, Relation::Ge, Rational::zero());
    }
    if nr > 0 {
        let mut row = vec![Rational::zero(); nv];
        for x in row.iter_mut().take(nr) {
            *x = Rational::one();
        }
        lp.add(row, Relation::Eq, Rational::one());
    }
    let mut cap = vec![Rational::zero(); nv];
    cap[delta] = Rational::one();
    lp.add(cap, Relation::Le, Rational::one());
    let sol = match lp.solve() {
        LpOutcome::Optimal(sol) if sol.value.is_positive() => sol,
        _ => return Err(RiskError::NotInPreimage { t }),
    };
    let mut comp = vec![Rational::zero(); d.dim()];
    for (k, v) in g.rays.iter().chain(&g.lineality).enumerate() {
        let c = &sol.x[k];
        if c.is_zero() {
            continue;
        }
        for (x, vi) in comp.iter_mut().zip(v) {
            *x += c * vi;
        }
    }
    let mut beta = vec![Rational::zero(); nodes.len()];
    for (a, &j) in active.iter().enumerate() {
        beta[j] = Rational::one() / &sol.x[nr + nl + a];
    }
    Ok((comp, beta))
}

/// Backward recursion `ξ^T = Z^T`, `ξ^t = 1_{F_t} κ_t ξ^{t+1} + 1_{F_t^c} Z^t`
/// with `F_t = {β_t > 0}` and `κ_t = β_{t+1}/β_t`, ending in `Z = β_0 ξ^0`.
/// Every `ξ^t` is checked for membership in `D`.
pub fn build_stability_witness(
    tree: &FilteredTree,
    d: &PolyCone,
    width: usize,
    z: &[Rational],
) -> Result<StabilityWitness, RiskError> {
    let n = tree.num_leaves() * width;
    if z.len() != n {
        return Err(RiskError::WrongLength {
            expected: n,
            found: z.len(),
        });
    }
    check_time(tree, 0)?;
    let horizon = tree.horizon();
    let mut components = Vec::with_capacity(horizon + 1);
    let mut beta = Vec::with_capacity(horizon + 1);
    for t in 0..=horizon {
        let (c, b) = preimage_component(tree, d, width, z, t)?;
        components.push(c);
        beta.push(b);
    }
    let mut xi: Vec<Vector> = vec![Vec::new(); horizon + 1];
    let mut certificates = vec![Certificate::SatisfiesFacets; horizon + 1];
    xi[horizon] = components[horizon].clone();
    let check = |t: usize, x: &Vector| -> Result<Certificate, RiskError> {
        let m = d.member(x).expect("claim space dimension");
        if m.member {
            Ok(m.certificate)
        } else {
            Err(RiskError::NotStable { t })
        }
    };
    certificates[horizon] = check(horizon, &xi[horizon])?;
    for t in (0..horizon).rev() {
        let mut next = vec![Rational::zero(); n];
        for (j, &u) in tree.nodes_at(t).iter().enumerate() {
            let node = tree.node(u);
            let bu = &beta[t][j];
            if bu.is_positive() {
                for &c in &node.children {
                    let cj = tree.nodes_at(t + 1).iter().position(|&x| x == c).unwrap();
                    let kappa = &beta[t + 1][cj] / bu;
                    for w in tree.node(c).leaves.clone() {
                        for i in 0..width {
                            next[w * width + i] = &kappa * &xi[t + 1][w * width + i];
                        }
                    }
                }
            } else {
                for w in node.leaves.clone() {
                    for i in 0..width {
                        next[w * width + i] = components[t][w * width + i].clone();
                    }
                }
            }
        }
        certificates[t] = check(t, &next)?;
        xi[t] = next;
    }
    let beta0 = beta[0].clone();
    let rebuilt: Vector = xi[0].iter().map(|x| x * &beta0[0]).collect();
    if rebuilt != z {
        return Err(RiskError::NotStable { t: 0 });
    }
    Ok(StabilityWitness {
        beta0,
        beta,
        components,
        xi,
        certificates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, vec_from_ints};
    use std::sync::Arc;

    #[test]
    fn paste_trivial_cases() {
        let tree = FilteredTree::uniform(&[2, 2]);
        let q = vec_from_ints(&[2, 0, 1, 1]);
        let p = vec_from_ints(&[1, 1, 1, 1]);
        // τ ≡ T: the first measure comes back.
        let at_t = StoppingTime::constant(&tree, 2);
        assert_eq!(paste(&tree, &q, &p, &at_t, &[]).unwrap(), q);
        // Pasting a measure with itself using its own one-step density.
        let at0 = StoppingTime::constant(&tree, 0);
        let kids = &tree.node(0).children;
        let r = vec![(kids[0], int(1)), (kids[1], int(1))];
        assert_eq!(paste(&tree, &q, &q, &at0, &r).unwrap(), q);
        // Fair reweighting of children with Q2 = AVaR vertex.
        let v = vec_from_ints(&[2, 0, 2, 0]);
        let r = vec![(kids[0], frac(1, 2)), (kids[1], frac(3, 2))];
        assert_eq!(
            paste(&tree, &p, &v, &at0, &r).unwrap(),
            vec_from_ints(&[1, 0, 3, 0])
        );
        let bad = vec![(kids[0], int(1)), (kids[1], int(0))];
        assert!(matches!(
            paste(&tree, &p, &v, &at0, &bad),
            Err(RiskError::BadOneStepDensity { .. })
        ));
        let dead = vec_from_ints(&[4, 0, 0, 0]);
        let r = vec![(kids[0], int(1)), (kids[1], int(1))];
        assert!(matches!(
            paste(&tree, &p, &dead, &at0, &r),
            Err(RiskError::UndefinedConditional { .. })
        ));
    }

    #[test]
    fn stopping_time_validation() {
        let tree = FilteredTree::uniform(&[2, 2]);
        let kids = tree.node(0).children.clone();
        assert!(StoppingTime::new(&tree, vec![0, kids[0]]).is_err());
        assert!(StoppingTime::new(&tree, vec![kids[0]]).is_err());
        let grand = tree.node(kids[1]).children.clone();
        assert!(StoppingTime::new(&tree, vec![kids[0], grand[0], grand[1]]).is_ok());
    }

    #[test]
    fn all_measures_is_stable() {
        let tree = Arc::new(FilteredTree::uniform(&[2, 2]));
        let s = ScenarioSet::all_measures(tree.clone());
        let v = Numeraire::cash(4);
        let rep = is_optionally_stable(&s, &v, 8, 1);
        assert!(rep.verdict);
        assert!(rep.cross_checks.iter().all(|c| c.passed));
    }

    #[test]
    fn witness_scaling() {
        let tree = FilteredTree::uniform(&[2]);
        let g = vec_from_ints(&[1, 3]);
        let d = PolyCone::from_generators(2, vec![g.clone()]).unwrap();
        let w = build_stability_witness(&tree, &d, 1, &vec_from_ints(&[2, 6])).unwrap();
        assert_eq!(w.beta0, vec![int(2)]);
        assert_eq!(w.xi[0], g);
        let w = build_stability_witness(&tree, &d, 1, &g).unwrap();
        assert_eq!(w.beta0, vec![int(1)]);
        assert_eq!(w.xi[0], g);
    }
}
