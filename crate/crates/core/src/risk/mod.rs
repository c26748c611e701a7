//! Conditional coherent risk measures given by finitely many scenario
//! densities, their acceptance cones and step cones.

use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use crate::cones::PolyCone;
use crate::rational::{fmt_rational, Rational, Vector};
use crate::tree::FilteredTree;

mod generic;
mod representation;
mod stability;

pub use generic::{generic_scenario_set, GenericScenarioSet, NodeBox};
pub use representation::{
    decompose, is_representable, step_cone_sum, verify_decomposition, DecomposeTarget, Decomposition,
    NodePortfolio, RepresentabilityReport,
};
pub use stability::{
    build_stability_witness, is_optionally_stable, optional_preimage, paste, stabilization_hull, CrossCheck,
    StabilityReport, StabilityWitness, StoppingTime,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RiskError {
    #[error("expected {expected} values, found {found}")]
    WrongLength { expected: usize, found: usize },
    #[error("scenario set has no generators")]
    NoGenerators,
    #[error("density {generator} is negative at leaf {leaf}")]
    NegativeDensity { generator: usize, leaf: usize },
    #[error("density {generator} has P-expectation {value}, expected 1")]
    NotNormalized { generator: usize, value: String },
    #[error("no generator charges node {node:?}")]
    UnchargedNode { node: String },
    #[error("no generator charges node {node:?}")]
    DeadNode { node: String },
    #[error("numeraire component {component} is not positive at leaf {leaf}")]
    NonPositiveNumeraire { leaf: usize, component: usize },
    #[error("time {t} is beyond the horizon {horizon}")]
    BadTime { t: usize, horizon: usize },
    #[error("the constrained set of measures is empty")]
    EmptySet,
    #[error("pasting is undefined at leaf {leaf}: conditional law of Q2 is 0/0 on a charged path")]
    UndefinedConditional { leaf: usize },
    #[error("node set is not a stopping time: {0}")]
    NotAStoppingTime(String),
    #[error("one-step density invalid at node {node:?}: {reason}")]
    BadOneStepDensity { node: String, reason: String },
    #[error("claim is not in the optional pre-image at time {t}")]
    NotInPreimage { t: usize },
    #[error("stability recursion left the cone at time {t}")]
    NotStable { t: usize },
    #[error("box for node {node:?} is malformed: {reason}")]
    BadBox { node: String, reason: String },
}

/// Finitely many probability densities with respect to `P`; the modelled
/// scenario set is their convex hull.
#[derive(Debug, Clone)]
pub struct ScenarioSet {
    tree: Arc<FilteredTree>,
    densities: Vec<Vector>,
    masses: Vec<Vector>,
}

impl ScenarioSet {
    pub fn new(tree: Arc<FilteredTree>, densities: Vec<Vector>) -> Result<Self, RiskError> {
        if densities.is_empty() {
            return Err(RiskError::NoGenerators);
        }
        let l = tree.num_leaves();
        let mut masses = Vec::with_capacity(densities.len());
        for (k, d) in densities.iter().enumerate() {
            if d.len() != l {
                return Err(RiskError::WrongLength {
                    expected: l,
                    found: d.len(),
                });
            }
            if let Some(w) = d.iter().position(Signed::is_negative) {
                return Err(RiskError::NegativeDensity {
                    generator: k,
                    leaf: w,
                });
            }
            let m = tree.to_mass(d, 1);
            let total: Rational = m.iter().sum();
            if !total.is_one() {
                return Err(RiskError::NotNormalized {
                    generator: k,
                    value: fmt_rational(&total),
                });
            }
            masses.push(m);
        }
        for (u, node) in tree.nodes().iter().enumerate() {
            let charged = masses
                .iter()
                .any(|m| node.leaves.clone().any(|w| m[w].is_positive()));
            if !charged {
                return Err(RiskError::UnchargedNode {
                    node: tree.node(u).id.clone(),
                });
            }
        }
        Ok(ScenarioSet {
            tree,
            densities,
            masses,
        })
    }

    /// Every measure absolutely continuous with respect to `P`.
    pub fn all_measures(tree: Arc<FilteredTree>) -> Self {
        let l = tree.num_leaves();
        let densities = (0..l)
            .map(|w| {
                let mut d = vec![Rational::zero(); l];
                d[w] = Rational::one() / &tree.leaf_probs()[w];
                d
            })
            .collect();
        Self::new(tree, densities).expect("point masses form a valid set")
    }

    pub fn singleton_p(tree: Arc<FilteredTree>) -> Self {
        let l = tree.num_leaves();
        Self::new(tree, vec![vec![Rational::one(); l]]).expect("P is a valid set")
    }

    pub fn tree(&self) -> &Arc<FilteredTree> {
        &self.tree
    }

    pub fn densities(&self) -> &[Vector] {
        &self.densities
    }

    /// `Q_k(ω) = Λ_k(ω) P(ω)`.
    pub fn masses(&self) -> &[Vector] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.densities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.densities.is_empty()
    }

    /// `Q_k(u)`.
    pub fn node_mass(&self, k: usize, u: usize) -> Rational {
        self.tree
            .node(u)
            .leaves
            .clone()
            .map(|w| self.masses[k][w].clone())
            .sum()
    }
}

/// Terminal values of the `d + 1` numéraires, strictly positive, flat leaf-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Numeraire {
    width: usize,
    values: Vector,
}

impl Numeraire {
    pub fn new(num_leaves: usize, width: usize, values: Vector) -> Result<Self, RiskError> {
        if width == 0 || values.len() != num_leaves * width {
            return Err(RiskError::WrongLength {
                expected: num_leaves * width.max(1),
                found: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_positive()) {
            return Err(RiskError::NonPositiveNumeraire {
                leaf: k / width,
                component: k % width,
            });
        }
        Ok(Numeraire { width, values })
    }

    pub fn cash(num_leaves: usize) -> Self {
        Numeraire {
            width: 1,
            values: vec![Rational::one(); num_leaves],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn at(&self, w: usize) -> &[Rational] {
        &self.values[w * self.width..(w + 1) * self.width]
    }

    /// Leafwise `Y(ω)·V(ω)` of a portfolio claim.
    pub fn value_of(&self, y: &[Rational]) -> Vector {
        y.chunks(self.width)
            .zip(self.values.chunks(self.width))
            .map(|(a, b)| crate::rational::dot(a, b))
            .collect()
    }
}

fn check_time(tree: &FilteredTree, t: usize) -> Result<(), RiskError> {
    if t > tree.horizon() {
        return Err(RiskError::BadTime {
            t,
            horizon: tree.horizon(),
        });
    }
    Ok(())
}

/// `ρ_t(X)` at each time-`t` node (in `nodes_at(t)` order), together with
/// the index of a maximizing generator.
pub fn rho_with_argmax(
    s: &ScenarioSet,
    x: &[Rational],
    t: usize,
) -> Result<Vec<(Rational, usize)>, RiskError> {
    let tree = s.tree();
    check_time(tree, t)?;
    if x.len() != tree.num_leaves() {
        return Err(RiskError::WrongLength {
            expected: tree.num_leaves(),
            found: x.len(),
        });
    }
    tree.nodes_at(t)
        .iter()
        .map(|&u| {
            let mut best: Option<(Rational, usize)> = None;
            for (k, m) in s.masses().iter().enumerate() {
                let mut qu = Rational::zero();
                let mut num = Rational::zero();
                for w in tree.node(u).leaves.clone() {
                    if m[w].is_zero() {
                        continue;
                    }
                    qu += &m[w];
                    num += &m[w] * &x[w];
                }
                if qu.is_zero() {
                    continue;
                }
                let val = num / qu;
                if best.as_ref().map_or(true, |(b, _)| val > *b) {
                    best = Some((val, k));
                }
            }
            best.ok_or_else(|| RiskError::DeadNode {
                node: tree.node(u).id.clone(),
            })
        })
        .collect()
}

pub fn rho(s: &ScenarioSet, x: &[Rational], t: usize) -> Result<Vector, RiskError> {
    Ok(rho_with_argmax(s, x, t)?.into_iter().map(|(v, _)| v).collect())
}

/// `ρ_0 ∘ ρ_1 ∘ ⋯ ∘ ρ_{T−1}(X)` by backward recursion.
pub fn compose_rho(s: &ScenarioSet, x: &[Rational]) -> Result<Rational, RiskError> {
    let tree = s.tree();
    let mut y = x.to_vec();
    for t in (0..tree.horizon()).rev() {
        let r: Vec<Vector> = rho(s, &y, t)?.into_iter().map(|v| vec![v]).collect();
        y = tree.embed(t, &r);
    }
    if y.len() != tree.num_leaves() {
        return Err(RiskError::WrongLength {
            expected: tree.num_leaves(),
            found: y.len(),
        });
    }
    Ok(y[0].clone())
}

/// Generators of `𝒜(V)*` in mass coordinates: `Q_k(ω) V(ω)`, flattened.
pub fn dual_generators(s: &ScenarioSet, v: &Numeraire) -> Vec<Vector> {
    let w = v.width();
    s.masses()
        .iter()
        .map(|m| {
            let mut g = Vec::with_capacity(m.len() * w);
            for (leaf, q) in m.iter().enumerate() {
                for vi in v.at(leaf) {
                    g.push(q * vi);
                }
            }
            g
        })
        .collect()
}

/// `𝒜(V) = {Y : E_{Q_k}[Y·V] ≤ 0 for all k}` in facet form over portfolio
/// claims in `Q^{L(d+1)}`.
pub fn acceptance_portfolio_cone(s: &ScenarioSet, v: &Numeraire) -> PolyCone {
    let n = s.tree().num_leaves() * v.width();
    PolyCone::from_facets(n, dual_generators(s, v), Vec::new()).expect("dimensions agree")
}

/// `𝒜(V)* = cone{Q_k V}` in generator form.
pub fn acceptance_dual_cone(s: &ScenarioSet, v: &Numeraire) -> PolyCone {
    let n = s.tree().num_leaves() * v.width();
    PolyCone::from_generators(n, dual_generators(s, v)).expect("dimensions agree")
}

/// Per-node portfolio cones `K(u) = {y : y·E_P[Λ_k V 1_u] ≤ 0 ∀k}`.
#[derive(Debug, Clone)]
pub struct StepCones {
    pub width: usize,
    /// Indexed by tree node.
    pub cones: Vec<PolyCone>,
}

impl StepCones {
    pub fn at(&self, u: usize) -> &PolyCone {
        &self.cones[u]
    }
}

/// The aggregated dual vectors `E_P[Λ_k V 1_u]` for every node.
pub fn node_dual_vectors(s: &ScenarioSet, v: &Numeraire, u: usize) -> Vec<Vector> {
    let tree = s.tree();
    let w = v.width();
    dual_generators(s, v)
        .iter()
        .map(|g| tree.node_sum(g, w, u))
        .collect()
}

pub fn step_cones(s: &ScenarioSet, v: &Numeraire) -> StepCones {
    let tree = s.tree();
    let w = v.width();
    let gens = dual_generators(s, v);
    let cones = (0..tree.num_nodes())
        .map(|u| {
            let facets = gens.iter().map(|g| tree.node_sum(g, w, u)).collect();
            PolyCone::from_facets(w, facets, Vec::new()).expect("dimensions agree")
        })
        .collect();
    StepCones { width: w, cones }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int, vec_from_ints};

    fn coin() -> Arc<FilteredTree> {
        Arc::new(FilteredTree::uniform(&[2]))
    }

    #[test]
    fn rho_single_measure_and_avar() {
        let p = ScenarioSet::singleton_p(coin());
        assert_eq!(rho(&p, &vec_from_ints(&[4, -2]), 0).unwrap(), vec![int(1)]);
        let avar = ScenarioSet::new(
            coin(),
            vec![
                vec_from_ints(&[2, 0]),
                vec_from_ints(&[0, 2]),
                vec_from_ints(&[1, 1]),
            ],
        )
        .unwrap();
        for m in -3..=3 {
            let x = vec_from_ints(&[4 + m, -2 + m]);
            assert_eq!(rho(&avar, &x, 0).unwrap(), vec![int(4 + m)]);
        }
        assert_eq!(
            rho(&avar, &vec_from_ints(&[0, 0]), 1).unwrap(),
            vec![int(0), int(0)]
        );
    }

    #[test]
    fn validation() {
        assert!(matches!(
            ScenarioSet::new(coin(), vec![vec_from_ints(&[1, 0])]),
            Err(RiskError::NotNormalized { .. })
        ));
        assert!(matches!(
            ScenarioSet::new(coin(), vec![vec_from_ints(&[2, 0])]),
            Err(RiskError::UnchargedNode { .. })
        ));
        assert!(matches!(
            ScenarioSet::new(coin(), vec![vec_from_ints(&[3, -1])]),
            Err(RiskError::NegativeDensity { .. })
        ));
        assert!(Numeraire::new(2, 1, vec_from_ints(&[1, 0])).is_err());
    }

    #[test]
    fn step_cone_of_f3() {
        let tree = coin();
        let v = Numeraire::new(2, 2, vec![int(1), frac(3, 2), int(1), int(1)]).unwrap();
        let s = ScenarioSet::singleton_p(tree);
        let k = step_cones(&s, &v);
        let expected = PolyCone::from_facets(2, vec![vec![int(1), frac(5, 4)]], Vec::new()).unwrap();
        assert!(crate::cones::cone_equal(k.at(0), &expected).unwrap().equal);
        let leaf = k.at(1);
        assert_eq!(leaf.facets().inequalities, vec![vec_from_ints(&[2, 3])]);
    }
}
