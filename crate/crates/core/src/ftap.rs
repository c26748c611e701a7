//! Trading cone processes, consistent price systems, arbitrage, null
//! strategies and superhedging.
//!
//! Strategies are flat vectors of length `num_nodes·(d+1)`, node-major in the
//! tree's preorder. Price systems are stored as `Z(u)` per node; the
//! terminal pairing with claims uses mass coordinates `P(ω)Z_T(ω)`.

use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::cones::{Certificate, PolyCone};
use crate::linalg::nullspace;
use crate::lp::{LinearProgram, LpOutcome, Relation, Sense};
use crate::rational::{dot, serde_q, serde_qvec, unit, Rational, Vector};
use crate::risk::{CrossCheck, StepCones};
use crate::tree::FilteredTree;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FtapError {
    #[error("expected one cone per node ({expected}), found {found}")]
    WrongCount { expected: usize, found: usize },
    #[error("cone at node {node:?} lives in dimension {found}, expected {expected}")]
    DimensionMismatch {
        node: String,
        expected: usize,
        found: usize,
    },
    #[error("cone at node {node:?} does not contain -e_{component}")]
    NoFreeDisposal { node: String, component: usize },
    #[error("claim has {found} entries, expected {expected}")]
    WrongLength { expected: usize, found: usize },
    #[error("numeraire index {index} out of range for width {width}")]
    BadNumeraire { index: usize, width: usize },
    #[error("the market admits arbitrage: the price is unbounded below")]
    Arbitrage {
        /// Direction in claim-price space along which the price decreases.
        ray: Vector,
    },
    #[error("the claim cannot be superhedged in this numeraire")]
    Unhedgeable {
        /// `y` with `y·X > 0`, `y^i` summing to zero and `y` nonpositive on
        /// every embedded trading cone: mass coordinates.
        separator: Vector,
    },
}

/// One cone per node, each containing `−(Q_+)^{d+1}`.
#[derive(Debug, Clone)]
pub struct TradingConeProcess {
    tree: Arc<FilteredTree>,
    width: usize,
    cones: Vec<PolyCone>,
}

impl TradingConeProcess {
    pub fn new(tree: Arc<FilteredTree>, width: usize, cones: Vec<PolyCone>) -> Result<Self, FtapError> {
        if cones.len() != tree.num_nodes() {
            return Err(FtapError::WrongCount {
                expected: tree.num_nodes(),
                found: cones.len(),
            });
        }
        for (u, c) in cones.iter().enumerate() {
            let node = tree.node(u).id.clone();
            if c.dim() != width {
                return Err(FtapError::DimensionMismatch {
                    node,
                    expected: width,
                    found: c.dim(),
                });
            }
            for i in 0..width {
                let e = crate::rational::neg(&unit(width, i));
                if c.violated_facet(&e).is_some() {
                    return Err(FtapError::NoFreeDisposal { node, component: i });
                }
            }
        }
        Ok(TradingConeProcess { tree, width, cones })
    }

    pub fn from_step_cones(tree: Arc<FilteredTree>, k: &StepCones) -> Result<Self, FtapError> {
        Self::new(tree, k.width, k.cones.clone())
    }

    pub fn tree(&self) -> &Arc<FilteredTree> {
        &self.tree
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn at(&self, u: usize) -> &PolyCone {
        &self.cones[u]
    }

    pub fn cones(&self) -> &[PolyCone] {
        &self.cones
    }

    fn num_vars(&self) -> usize {
        self.tree.num_nodes() * self.width
    }

    /// `⊕_u embed(C(u))`: claims attainable from zero endowment.
    pub fn attainable_cone(&self) -> PolyCone {
        let mut rays = Vec::new();
        let mut lin = Vec::new();
        for (u, c) in self.cones.iter().enumerate() {
            let g = c.generators();
            rays.extend(g.rays.iter().map(|r| self.tree.embed_node(u, r)));
            lin.extend(g.lineality.iter().map(|l| self.tree.embed_node(u, l)));
        }
        PolyCone::from_generators_with_lineality(self.tree.num_leaves() * self.width, rays, lin)
            .expect("embedded cones share the claim space")
    }

    /// Terminal values of consistent price systems in mass coordinates: the
    /// dual of the attainable cone.
    pub fn price_system_cone(&self) -> PolyCone {
        self.attainable_cone().dual()
    }

    /// `Σ_u embed(ξ(u))` of a flat strategy.
    pub fn terminal_claim(&self, xi: &[Rational]) -> Vector {
        let w = self.width;
        let mut out = vec![Rational::zero(); self.tree.num_leaves() * w];
        for u in 0..self.tree.num_nodes() {
            let part = &xi[u * w..(u + 1) * w];
            if part.iter().all(Zero::is_zero) {
                continue;
            }
            for leaf in self.tree.node(u).leaves.clone() {
                for i in 0..w {
                    out[leaf * w + i] += &part[i];
                }
            }
        }
        out
    }

    /// Adds `h·ξ(u) ≤ 0` (and lineality equalities) for every node's facets.
    fn add_cone_rows(&self, lp: &mut LinearProgram) {
        let w = self.width;
        for (u, c) in self.cones.iter().enumerate() {
            let f = c.facets();
            for (rows, rel) in [(&f.inequalities, Relation::Le), (&f.equalities, Relation::Eq)] {
                for h in rows {
                    let terms: Vec<(usize, Rational)> = h
                        .iter()
                        .enumerate()
                        .filter(|(_, c)| !c.is_zero())
                        .map(|(i, c)| (u * w + i, c.clone()))
                        .collect();
                    lp.add_sparse(&terms, rel, Rational::zero());
                }
            }
        }
    }

    /// Rows `Σ_{a ∋ ω} ξ(a)_i` for every leaf and component, leaf-major.
    fn terminal_rows(&self) -> Vec<Vec<(usize, Rational)>> {
        let w = self.width;
        let mut out = Vec::new();
        for leaf in 0..self.tree.num_leaves() {
            let mut path = Vec::new();
            let mut a = Some(self.tree.leaf_node(leaf));
            while let Some(u) = a {
                path.push(u);
                a = self.tree.node(u).parent;
            }
            for i in 0..w {
                out.push(path.iter().map(|&u| (u * w + i, Rational::one())).collect());
            }
        }
        out
    }

    pub fn strategy_steps(&self, xi: &[Rational]) -> Vec<StrategyStep> {
        let w = self.width;
        (0..self.tree.num_nodes())
            .map(|u| StrategyStep {
                node: self.tree.node(u).id.clone(),
                time: self.tree.node(u).time,
                xi: xi[u * w..(u + 1) * w].to_vec(),
            })
            .collect()
    }

    /// Every `ξ(u)` in `C(u)`.
    pub fn is_admissible(&self, xi: &[Rational]) -> bool {
        let w = self.width;
        xi.len() == self.num_vars()
            && (0..self.tree.num_nodes())
                .all(|u| self.cones[u].violated_facet(&xi[u * w..(u + 1) * w]).is_none())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyStep {
    pub node: String,
    pub time: usize,
    #[serde(with = "serde_qvec")]
    pub xi: Vector,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeValue {
    pub node: String,
    pub time: usize,
    #[serde(with = "serde_qvec")]
    pub value: Vector,
}

/// An adapted `Q^{d+1}`-valued martingale with `Z(u) ∈ C(u)*`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PriceSystem {
    #[serde(rename = "Z")]
    pub z: Vec<NodeValue>,
    /// `min_{u,i} Z^i(u)`.
    #[serde(with = "serde_q")]
    pub delta: Rational,
    pub strictly_positive: bool,
    /// `Z(u)` as a nonnegative combination of the facet normals of `C(u)`.
    pub certificates: Vec<Certificate>,
}

impl PriceSystem {
    /// Builds the price process from any family `Z(u)` (indexed by node),
    /// attaching dual membership certificates. `None` if some `Z(u)` is
    /// outside `C(u)*`.
    pub fn from_nodes(proc: &TradingConeProcess, z: Vec<Vector>) -> Option<Self> {
        let tree = proc.tree();
        let mut certificates = Vec::with_capacity(z.len());
        for (u, zu) in z.iter().enumerate() {
            proc.at(u).facets();
            let m = proc.at(u).dual().member(zu).ok()?;
            if !m.member {
                return None;
            }
            certificates.push(m.certificate);
        }
        let delta = z.iter().flatten().min().cloned().unwrap_or_else(Rational::zero);
        Some(PriceSystem {
            z: z.into_iter()
                .enumerate()
                .map(|(u, value)| NodeValue {
                    node: tree.node(u).id.clone(),
                    time: tree.node(u).time,
                    value,
                })
                .collect(),
            strictly_positive: delta.is_positive(),
            delta,
            certificates,
        })
    }

    /// `Z(u) = E_P[Z_T 1_u] / P(u)` from a terminal value in mass coordinates.
    pub fn from_terminal_mass(proc: &TradingConeProcess, mass: &[Rational]) -> Option<Self> {
        let tree = proc.tree();
        let w = proc.width();
        let z = (0..tree.num_nodes())
            .map(|u| {
                let pu = &tree.node(u).abs_prob;
                tree.node_sum(mass, w, u).into_iter().map(|m| m / pu).collect()
            })
            .collect();
        Self::from_nodes(proc, z)
    }

    pub fn at(&self, u: usize) -> &[Rational] {
        &self.z[u].value
    }

    /// `P(ω) Z_T(ω)`, flat leaf-major.
    pub fn terminal_mass(&self, tree: &FilteredTree) -> Vector {
        let mut out = Vec::new();
        for leaf in 0..tree.num_leaves() {
            let p = &tree.leaf_probs()[leaf];
            out.extend(self.at(tree.leaf_node(leaf)).iter().map(|z| z * p));
        }
        out
    }
}

/// Exact re-check: martingale identities, certificates, nonzero root.
pub fn verify_price_system(proc: &TradingConeProcess, ps: &PriceSystem) -> bool {
    let tree = proc.tree();
    let w = proc.width();
    if ps.z.len() != tree.num_nodes() || ps.certificates.len() != tree.num_nodes() {
        return false;
    }
    for u in 0..tree.num_nodes() {
        let node = tree.node(u);
        if ps.z[u].node != node.id || ps.at(u).len() != w {
            return false;
        }
        let m = crate::cones::Membership {
            member: true,
            certificate: ps.certificates[u].clone(),
        };
        if !proc.at(u).dual().verify_membership(ps.at(u), &m) {
            return false;
        }
        if !node.children.is_empty() {
            let mut avg = vec![Rational::zero(); w];
            for &c in &node.children {
                for (a, z) in avg.iter_mut().zip(ps.at(c)) {
                    *a += &tree.node(c).prob * z;
                }
            }
            if avg != ps.at(u) {
                return false;
            }
        }
    }
    let min = ps.z.iter().flat_map(|n| n.value.iter()).min().cloned();
    min.as_ref() == Some(&ps.delta)
        && ps.strictly_positive == ps.delta.is_positive()
        && !ps.at(tree.root()).iter().all(Zero::is_zero)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "camelCase")]
pub enum CpsOutcome {
    Consistent(PriceSystem),
    /// No nonzero consistent price system; LP Farkas multipliers.
    Infeasible {
        #[serde(with = "serde_qvec")]
        farkas: Vector,
    },
}

/// Maximizes `δ` over consistent price systems with `Σ_i Z^i_0 = 1` and
/// `Z^i(u) ≥ δ` everywhere.
pub fn consistent_price_system(proc: &TradingConeProcess) -> CpsOutcome {
    let tree = proc.tree();
    let w = proc.width();
    let nz = proc.num_vars();
    let delta = nz;
    let mut lp = LinearProgram::new(nz + 1, Sense::Maximize);
    lp.set_free(delta);
    lp.set_objective_coeff(delta, Rational::one());
    for u in 0..tree.num_nodes() {
        let node = tree.node(u);
        if !node.children.is_empty() {
            for i in 0..w {
                let mut terms = vec![(u * w + i, Rational::one())];
                terms.extend(
                    node.children
                        .iter()
                        .map(|&c| (c * w + i, -tree.node(c).prob.clone())),
                );
                lp.add_sparse(&terms, Relation::Eq, Rational::zero());
            }
        }
        let g = proc.at(u).generators();
        for (rows, rel) in [(&g.rays, Relation::Le), (&g.lineality, Relation::Eq)] {
            for r in rows {
                let terms: Vec<(usize, Rational)> = r
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| !c.is_zero())
                    .map(|(i, c)| (u * w + i, c.clone()))
                    .collect();
                lp.add_sparse(&terms, rel, Rational::zero());
            }
        }
        for i in 0..w {
            lp.add_sparse(
                &[(u * w + i, Rational::one()), (delta, -Rational::one())],
                Relation::Ge,
                Rational::zero(),
            );
        }
    }
    let root = tree.root();
    let norm: Vec<(usize, Rational)> = (0..w).map(|i| (root * w + i, Rational::one())).collect();
    lp.add_sparse(&norm, Relation::Eq, Rational::one());
    match lp.solve() {
        LpOutcome::Optimal(sol) => {
            let z = (0..tree.num_nodes())
                .map(|u| sol.x[u * w..(u + 1) * w].to_vec())
                .collect();
            let mut ps = PriceSystem::from_nodes(proc, z).expect("LP enforces dual membership");
            debug_assert!(ps.delta >= sol.value);
            ps.strictly_positive = ps.delta.is_positive();
            CpsOutcome::Consistent(ps)
        }
        LpOutcome::Infeasible { farkas } => CpsOutcome::Infeasible { farkas },
        LpOutcome::Unbounded { .. } => unreachable!("δ is capped by the normalization"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ArbitrageWitness {
    /// A nonnegative nonzero attainable claim.
    #[serde(with = "serde_qvec")]
    pub claim: Vector,
    pub strategy: Vec<StrategyStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ArbitrageReport {
    pub arbitrage_free: bool,
    /// Present when a strictly positive consistent price system exists.
    pub price_system: Option<PriceSystem>,
    pub witness: Option<ArbitrageWitness>,
    pub cross_check: CrossCheck,
}

/// Decides `(⊕C) ∩ Q^n_+ = {0}` by maximizing `Σ X` over attainable claims
/// in the unit box, and cross-checks against the strict price system LP.
pub fn arbitrage_check(proc: &TradingConeProcess) -> ArbitrageReport {
    let nv = proc.num_vars();
    let mut lp = LinearProgram::new(nv, Sense::Maximize);
    lp.set_all_free();
    proc.add_cone_rows(&mut lp);
    let mut objective = vec![Rational::zero(); nv];
    for terms in proc.terminal_rows() {
        for (j, c) in &terms {
            objective[*j] += c;
        }
        lp.add_sparse(&terms, Relation::Ge, Rational::zero());
        lp.add_sparse(&terms, Relation::Le, Rational::one());
    }
    lp.set_objective(objective);
    let sol = lp
        .solve()
        .optimal()
        .expect("ξ = 0 is feasible and the box bounds the objective");
    let witness = sol.value.is_positive().then(|| ArbitrageWitness {
        claim: proc.terminal_claim(&sol.x),
        strategy: proc.strategy_steps(&sol.x),
    });
    let price_system = match consistent_price_system(proc) {
        CpsOutcome::Consistent(ps) if ps.strictly_positive => Some(ps),
        _ => None,
    };
    let agree = witness.is_none() == price_system.is_some();
    let cross_check = CrossCheck {
        name: "strict price system ⟺ no positive attainable claim".into(),
        passed: agree,
        detail: if agree {
            String::new()
        } else {
            format!(
                "positive-claim LP value {}, strict price system {}",
                crate::rational::fmt_rational(&sol.value),
                if price_system.is_some() { "found" } else { "absent" }
            )
        },
    };
    ArbitrageReport {
        arbitrage_free: witness.is_none(),
        price_system,
        witness,
        cross_check,
    }
}

/// Re-checks an arbitrage witness: admissible, sums to the claim, claim
/// nonnegative and nonzero.
pub fn verify_arbitrage_witness(proc: &TradingConeProcess, wit: &ArbitrageWitness) -> bool {
    let xi: Vector = wit.strategy.iter().flat_map(|s| s.xi.iter().cloned()).collect();
    proc.is_admissible(&xi)
        && proc.terminal_claim(&xi) == wit.claim
        && wit.claim.iter().all(|c| !c.is_negative())
        && wit.claim.iter().any(Signed::is_positive)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NullSpaceReport {
    pub vector_space: bool,
    /// Basis of the lineality space of the null strategies, flat.
    #[serde(with = "crate::rational::serde_qmat")]
    pub basis: Vec<Vector>,
    /// A null strategy whose negation is not one, when `vector_space` fails.
    pub witness: Option<Vec<StrategyStep>>,
}

/// Whether `N = {ξ ∈ Π C(u) : Σ embed ξ(u) = 0}` is a linear space.
pub fn null_space_check(proc: &TradingConeProcess) -> NullSpaceReport {
    let tree = proc.tree();
    let w = proc.width();
    let nv = proc.num_vars();
    let mut lp = LinearProgram::new(nv, Sense::Maximize);
    lp.set_all_free();
    proc.add_cone_rows(&mut lp);
    let terminal = proc.terminal_rows();
    for terms in &terminal {
        lp.add_sparse(terms, Relation::Eq, Rational::zero());
    }
    let mut objective = vec![Rational::zero(); nv];
    let mut lin_rows = Vec::new();
    for u in 0..tree.num_nodes() {
        let f = proc.at(u).facets();
        for h in &f.inequalities {
            let terms: Vec<(usize, Rational)> = h
                .iter()
                .enumerate()
                .map(|(i, c)| (u * w + i, -c.clone()))
                .collect();
            for (j, c) in &terms {
                objective[*j] += c;
            }
            lp.add_sparse(&terms, Relation::Le, Rational::one());
            let mut row = vec![Rational::zero(); nv];
            row[u * w..(u + 1) * w].clone_from_slice(h);
            lin_rows.push(row);
        }
        for e in &f.equalities {
            let mut row = vec![Rational::zero(); nv];
            row[u * w..(u + 1) * w].clone_from_slice(e);
            lin_rows.push(row);
        }
    }
    lp.set_objective(objective);
    let sol = lp
        .solve()
        .optimal()
        .expect("ξ = 0 is feasible and each term is capped");
    for terms in &terminal {
        let mut row = vec![Rational::zero(); nv];
        for (j, c) in terms {
            row[*j] = c.clone();
        }
        lin_rows.push(row);
    }
    let basis = nullspace(&lin_rows, nv);
    let vector_space = sol.value.is_zero();
    NullSpaceReport {
        vector_space,
        basis,
        witness: (!vector_space).then(|| proc.strategy_steps(&sol.x)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SuperhedgeDual {
    /// Consistent price process normalized to `Z^i_0 = 1`.
    #[serde(rename = "Z")]
    pub z: Vec<NodeValue>,
    /// `P(ω)Z_T(ω)`, flat.
    #[serde(with = "serde_qvec")]
    pub mass: Vector,
    /// `Σ_ω mass(ω)·X(ω)`.
    #[serde(with = "serde_q")]
    pub value: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SuperhedgeReport {
    pub numeraire: usize,
    #[serde(with = "serde_q")]
    pub price: Rational,
    pub strategy: Vec<StrategyStep>,
    pub dual: SuperhedgeDual,
}

/// Minimal `x` with `X − x·e_i ∈ ⊕C`, i.e. `x·e_i` at the root plus
/// admissible trades delivers the liability `X` exactly. The LP dual is a
/// consistent price system normalized in numeraire `i`; both values agree.
pub fn superhedge(
    proc: &TradingConeProcess,
    x: &[Rational],
    numeraire: usize,
) -> Result<SuperhedgeReport, FtapError> {
    let tree = proc.tree();
    let w = proc.width();
    let l = tree.num_leaves();
    if x.len() != l * w {
        return Err(FtapError::WrongLength {
            expected: l * w,
            found: x.len(),
        });
    }
    if numeraire >= w {
        return Err(FtapError::BadNumeraire {
            index: numeraire,
            width: w,
        });
    }
    let nv = proc.num_vars();
    let price = nv;
    let mut lp = LinearProgram::new(nv + 1, Sense::Minimize);
    lp.set_all_free();
    lp.set_objective_coeff(price, Rational::one());
    proc.add_cone_rows(&mut lp);
    let first_eq = lp.constraints().len();
    for (k, mut terms) in proc.terminal_rows().into_iter().enumerate() {
        if k % w == numeraire {
            terms.push((price, Rational::one()));
        }
        lp.add_sparse(&terms, Relation::Eq, x[k].clone());
    }
    match lp.solve() {
        LpOutcome::Optimal(sol) => {
            let mass = sol.duals[first_eq..].to_vec();
            let value = dot(&mass, x);
            debug_assert_eq!(value, sol.value);
            let ps = PriceSystem::from_terminal_mass(proc, &mass)
                .expect("LP duals form a consistent price system");
            Ok(SuperhedgeReport {
                numeraire,
                price: sol.x[price].clone(),
                strategy: proc.strategy_steps(&sol.x[..nv]),
                dual: SuperhedgeDual { z: ps.z, mass, value },
            })
        }
        LpOutcome::Infeasible { farkas } => Err(FtapError::Unhedgeable {
            separator: crate::rational::neg(&farkas[first_eq..]),
        }),
        LpOutcome::Unbounded { ray, .. } => Err(FtapError::Arbitrage { ray }),
    }
}

/// Re-checks a superhedging report: admissible strategy replicating
/// `X − price·e_i`, dual in the price system cone with `Z^i_0 = 1`, and
/// equal primal and dual values.
pub fn verify_superhedge(proc: &TradingConeProcess, x: &[Rational], rep: &SuperhedgeReport) -> bool {
    let w = proc.width();
    let xi: Vector = rep.strategy.iter().flat_map(|s| s.xi.iter().cloned()).collect();
    if !proc.is_admissible(&xi) {
        return false;
    }
    let mut replicated = proc.terminal_claim(&xi);
    for leaf in 0..proc.tree().num_leaves() {
        replicated[leaf * w + rep.numeraire] += &rep.price;
    }
    if replicated != x {
        return false;
    }
    let Some(ps) = PriceSystem::from_terminal_mass(proc, &rep.dual.mass) else {
        return false;
    };
    ps.at(proc.tree().root())[rep.numeraire].is_one()
        && dot(&rep.dual.mass, x) == rep.dual.value
        && rep.dual.value == rep.price
}

/// Re-checks an [`FtapError::Unhedgeable`] separator: `y·X > 0`, the
/// numeraire components of `y` sum to zero and `y` is nonpositive on every
/// embedded trading cone.
pub fn verify_unhedgeable(
    proc: &TradingConeProcess,
    x: &[Rational],
    numeraire: usize,
    y: &[Rational],
) -> bool {
    let tree = proc.tree();
    let w = proc.width();
    if y.len() != x.len() || x.len() != tree.num_leaves() * w || numeraire >= w {
        return false;
    }
    let norm: Rational = (0..tree.num_leaves()).map(|leaf| &y[leaf * w + numeraire]).sum();
    norm.is_zero()
        && dot(y, x).is_positive()
        && (0..tree.num_nodes()).all(|u| {
            let g = proc.at(u).generators();
            g.rays
                .iter()
                .all(|r| !dot(y, &tree.embed_node(u, r)).is_positive())
                && g.lineality
                    .iter()
                    .all(|l| dot(y, &tree.embed_node(u, l)).is_zero())
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int, vec_from_ints};
    use crate::risk::{step_cones, Numeraire, ScenarioSet};

    fn coin() -> Arc<FilteredTree> {
        Arc::new(FilteredTree::uniform(&[2]))
    }

    fn disposal(tree: &Arc<FilteredTree>, w: usize) -> TradingConeProcess {
        let cones = (0..tree.num_nodes())
            .map(|_| {
                PolyCone::from_generators(w, (0..w).map(|i| crate::rational::neg(&unit(w, i))).collect())
                    .unwrap()
            })
            .collect();
        TradingConeProcess::new(tree.clone(), w, cones).unwrap()
    }

    #[test]
    fn cash_only_market() {
        let tree = coin();
        let proc = disposal(&tree, 1);
        let CpsOutcome::Consistent(ps) = consistent_price_system(&proc) else {
            panic!("expected a price system");
        };
        assert_eq!(ps.delta, int(1));
        assert!(verify_price_system(&proc, &ps));
        let rep = arbitrage_check(&proc);
        assert!(rep.arbitrage_free && rep.cross_check.passed);
        let x = vec_from_ints(&[4, -2]);
        let sh = superhedge(&proc, &x, 0).unwrap();
        assert_eq!(sh.price, int(4));
        assert!(verify_superhedge(&proc, &x, &sh));
        assert!(null_space_check(&proc).vector_space);
    }

    #[test]
    fn f3_price_system() {
        let tree = coin();
        let v = Numeraire::new(2, 2, vec![int(1), frac(3, 2), int(1), int(1)]).unwrap();
        let s = ScenarioSet::singleton_p(tree.clone());
        let proc = TradingConeProcess::from_step_cones(tree, &step_cones(&s, &v)).unwrap();
        let CpsOutcome::Consistent(ps) = consistent_price_system(&proc) else {
            panic!("expected a price system");
        };
        assert_eq!(ps.at(0), &[frac(4, 9), frac(5, 9)]);
        assert_eq!(ps.delta, frac(4, 9));
        assert!(verify_price_system(&proc, &ps));
    }

    #[test]
    fn round_trip_profit() {
        let tree = Arc::new(FilteredTree::uniform(&[1]));
        // Buy one unit of asset 1 for 1/2 of asset 0, sell it back for 1.
        let c = PolyCone::from_generators(
            2,
            vec![
                vec_from_ints(&[-1, 0]),
                vec_from_ints(&[0, -1]),
                vec![frac(-1, 2), int(1)],
                vec_from_ints(&[1, -1]),
            ],
        )
        .unwrap();
        let proc = TradingConeProcess::new(tree, 2, vec![c.clone(), c]).unwrap();
        assert!(matches!(
            consistent_price_system(&proc),
            CpsOutcome::Infeasible { .. }
        ));
        let rep = arbitrage_check(&proc);
        assert!(!rep.arbitrage_free && rep.cross_check.passed);
        assert!(verify_arbitrage_witness(&proc, rep.witness.as_ref().unwrap()));
        // Every exchange is reversible, so the null strategies are linear.
        assert!(null_space_check(&proc).vector_space);
    }

    #[test]
    fn spread_kills_round_trips() {
        let tree = Arc::new(FilteredTree::uniform(&[1]));
        let c = PolyCone::from_generators(
            2,
            vec![
                vec_from_ints(&[-1, 0]),
                vec_from_ints(&[0, -1]),
                vec_from_ints(&[-2, 1]),
                vec_from_ints(&[1, -1]),
            ],
        )
        .unwrap();
        let proc = TradingConeProcess::new(tree, 2, vec![c.clone(), c]).unwrap();
        let rep = null_space_check(&proc);
        assert!(rep.vector_space && rep.basis.is_empty());
        assert!(arbitrage_check(&proc).arbitrage_free);
    }
}
