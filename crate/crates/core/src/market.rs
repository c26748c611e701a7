//! Bid-ask markets, the coin-spin augmentation, extension of consistent
//! price systems and extraction of the equivalent scenario set.

use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::cones::{Comparison, PolyCone};
use crate::ftap::{
    consistent_price_system, null_space_check, CpsOutcome, FtapError, NullSpaceReport, PriceSystem,
    TradingConeProcess,
};
use crate::rational::{fmt_rational, int, neg, serde_q, serde_qmat, serde_qvec, unit, Rational, Vector};
use crate::risk::{acceptance_dual_cone, stabilization_hull, Numeraire, RiskError, ScenarioSet};
use crate::tree::{FilteredTree, NodeSpec, TreeError, TreeSpec};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MarketError {
    #[error("expected one bid-ask matrix per node ({expected}), found {found}")]
    WrongCount { expected: usize, found: usize },
    #[error("bid-ask matrix at node {node:?}: {reason}")]
    BadMatrix { node: String, reason: String },
    #[error("epsilon must lie strictly between 0 and 1, found {0}")]
    BadEpsilon(String),
    #[error("price system is not strictly inside the spread at leaf {leaf:?}, asset {asset}")]
    NotInterior { leaf: String, asset: usize },
    #[error("the price system is not consistent with the trading cones")]
    InconsistentPriceSystem,
    #[error("the input market admits arbitrage")]
    ArbitrageInInput,
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Ftap(#[from] FtapError),
    #[error(transparent)]
    Risk(#[from] RiskError),
}

/// `π^{ij}(u)`: units of asset `i` paid for one unit of asset `j` at node `u`.
#[derive(Debug, Clone)]
pub struct BidAskProcess {
    tree: Arc<FilteredTree>,
    width: usize,
    matrices: Vec<Vec<Vector>>,
}

impl BidAskProcess {
    /// `matrices` is indexed by tree node.
    pub fn new(
        tree: Arc<FilteredTree>,
        width: usize,
        matrices: Vec<Vec<Vector>>,
    ) -> Result<Self, MarketError> {
        if matrices.len() != tree.num_nodes() {
            return Err(MarketError::WrongCount {
                expected: tree.num_nodes(),
                found: matrices.len(),
            });
        }
        for (u, m) in matrices.iter().enumerate() {
            let bad = |reason: String| MarketError::BadMatrix {
                node: tree.node(u).id.clone(),
                reason,
            };
            if m.len() != width || m.iter().any(|r| r.len() != width) {
                return Err(bad(format!("expected a {width}×{width} matrix")));
            }
            for i in 0..width {
                if !m[i][i].is_one() {
                    return Err(bad(format!("diagonal entry {i} is not 1")));
                }
                for j in 0..width {
                    if !m[i][j].is_positive() {
                        return Err(bad(format!("entry ({i},{j}) is not positive")));
                    }
                }
            }
        }
        Ok(BidAskProcess {
            tree,
            width,
            matrices,
        })
    }

    pub fn tree(&self) -> &Arc<FilteredTree> {
        &self.tree
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn matrix(&self, u: usize) -> &[Vector] {
        &self.matrices[u]
    }

    pub fn pi(&self, u: usize, i: usize, j: usize) -> &Rational {
        &self.matrices[u][i][j]
    }
}

/// The cone spanned by `−e_i` and `e_j − π^{ij} e_i`.
pub fn bid_ask_cone(pi: &[Vector]) -> PolyCone {
    let w = pi.len();
    let mut gens: Vec<Vector> = (0..w).map(|i| neg(&unit(w, i))).collect();
    for i in 0..w {
        for j in 0..w {
            if i != j {
                let mut g = unit(w, j);
                g[i] = -pi[i][j].clone();
                gens.push(g);
            }
        }
    }
    PolyCone::from_generators(w, gens).expect("generators have the matrix width")
}

pub fn trading_cones(market: &BidAskProcess) -> TradingConeProcess {
    let cones = (0..market.tree.num_nodes())
        .map(|u| bid_ask_cone(market.matrix(u)))
        .collect();
    TradingConeProcess::new(market.tree.clone(), market.width, cones)
        .expect("bid-ask cones contain free disposal")
}

/// The market extended by one period of `d` independent fair coins.
#[derive(Debug, Clone)]
pub struct AugmentedMarket {
    pub original: BidAskProcess,
    pub tree: Arc<FilteredTree>,
    pub epsilon: Rational,
    /// Original node index for every augmented node up to time `T`.
    pub node_map: Vec<Option<usize>>,
    /// Original leaf and coin outcome (bit `i − 1` is asset `i`) per augmented leaf.
    pub coins: Vec<(usize, Vec<bool>)>,
    /// `Ṽ`, flat leaf-major over augmented leaves.
    pub v_tilde: Vector,
    /// `V = Ṽ / Σ_j Ṽ^j`.
    pub numeraire: Numeraire,
}

fn coin_label(bits: &[bool]) -> String {
    if bits.is_empty() {
        return String::new();
    }
    let s: String = bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
    format!("b{s}")
}

/// `ṽ^i` for coin outcome `b` of asset `i ≥ 1` at an original terminal node.
fn v_tilde_component(pi: &[Vector], i: usize, heads: bool, eps: &Rational) -> Rational {
    if heads {
        (Rational::one() + eps) * &pi[0][i]
    } else {
        (Rational::one() - eps) / &pi[i][0]
    }
}

pub fn augment_market(market: &BidAskProcess, epsilon: &Rational) -> Result<AugmentedMarket, MarketError> {
    if !epsilon.is_positive() || epsilon >= &Rational::one() {
        return Err(MarketError::BadEpsilon(fmt_rational(epsilon)));
    }
    let tree = market.tree();
    let w = market.width();
    let d = w - 1;
    let mut spec = tree.to_spec();
    let share = Rational::new(1.into(), num_bigint::BigInt::from(1u64) << d);
    for leaf in 0..tree.num_leaves() {
        let id = &tree.node(tree.leaf_node(leaf)).id;
        for m in 0..1usize << d {
            let bits: Vec<bool> = (0..d).map(|i| m >> (d - 1 - i) & 1 == 1).collect();
            spec.nodes.push(NodeSpec {
                id: format!("{id}#{}", coin_label(&bits)),
                parent: Some(id.clone()),
                time: tree.horizon() + 1,
                prob: Some(share.clone()),
            });
        }
    }
    spec.horizon += 1;
    let aug = Arc::new(FilteredTree::build(&spec)?);
    let node_map = aug
        .nodes()
        .iter()
        .map(|n| (n.time <= tree.horizon()).then(|| tree.find(&n.id).expect("original node")))
        .collect();
    let mut coins = Vec::with_capacity(aug.num_leaves());
    let mut v_tilde = Vec::with_capacity(aug.num_leaves() * w);
    let mut v = Vec::with_capacity(aug.num_leaves() * w);
    for leaf in 0..aug.num_leaves() {
        let node = aug.node(aug.leaf_node(leaf));
        let parent = tree
            .find(&aug.node(node.parent.expect("coin nodes have parents")).id)
            .expect("original leaf");
        let orig_leaf = tree.node(parent).leaves.start;
        let label = node.id.rsplit_once('#').map_or("", |(_, b)| b);
        let bits: Vec<bool> = label.chars().skip(1).map(|c| c == '1').collect();
        let pi = market.matrix(parent);
        let mut vt = vec![Rational::one()];
        for i in 1..w {
            vt.push(v_tilde_component(pi, i, bits[i - 1], epsilon));
        }
        let total: Rational = vt.iter().sum();
        v.extend(vt.iter().map(|x| x / &total));
        v_tilde.extend(vt);
        coins.push((orig_leaf, bits));
    }
    let numeraire = Numeraire::new(aug.num_leaves(), w, v)?;
    Ok(AugmentedMarket {
        original: market.clone(),
        tree: aug,
        epsilon: epsilon.clone(),
        node_map,
        coins,
        v_tilde,
        numeraire,
    })
}

impl AugmentedMarket {
    pub fn width(&self) -> usize {
        self.original.width()
    }

    pub fn v_tilde_at(&self, leaf: usize) -> &[Rational] {
        let w = self.width();
        &self.v_tilde[leaf * w..(leaf + 1) * w]
    }

    /// `(ṽ^i(ω,0), ṽ^i(ω,1))` at an original leaf.
    pub fn bracket(&self, orig_leaf: usize, i: usize) -> (Rational, Rational) {
        let tree = self.original.tree();
        let pi = self.original.matrix(tree.leaf_node(orig_leaf));
        (
            v_tilde_component(pi, i, false, &self.epsilon),
            v_tilde_component(pi, i, true, &self.epsilon),
        )
    }

    /// `ṽ^i(·,0) < 1/π^{i0}_T ≤ π^{0i}_T < ṽ^i(·,1)` at every original leaf,
    /// and every augmented leaf carries the matching bracket end.
    pub fn bracket_holds(&self) -> bool {
        let tree = self.original.tree();
        let w = self.width();
        let ends_ok = (0..tree.num_leaves()).all(|leaf| {
            let u = tree.leaf_node(leaf);
            (1..w).all(|i| {
                let (lo, hi) = self.bracket(leaf, i);
                let bid = Rational::one() / self.original.pi(u, i, 0);
                let ask = self.original.pi(u, 0, i);
                lo < bid && &bid <= ask && ask < &hi
            })
        });
        let leaves_ok = self.coins.iter().enumerate().all(|(k, (orig, bits))| {
            let vt = self.v_tilde_at(k);
            vt[0].is_one()
                && (1..w).all(|i| {
                    let (lo, hi) = self.bracket(*orig, i);
                    vt[i] == if bits[i - 1] { hi } else { lo }
                })
        });
        ends_ok && leaves_ok
    }

    /// Original cones at times `≤ T`, frictionless cones `{y : y·Ṽ ≤ 0}`
    /// at `T + 1`.
    pub fn trading_cones(&self) -> TradingConeProcess {
        let w = self.width();
        let cones = (0..self.tree.num_nodes())
            .map(|u| match self.node_map[u] {
                Some(o) => bid_ask_cone(self.original.matrix(o)),
                None => {
                    let leaf = self.tree.node(u).leaves.start;
                    let vt = self.v_tilde_at(leaf);
                    let pi: Vec<Vector> = (0..w)
                        .map(|i| (0..w).map(|j| &vt[j] / &vt[i]).collect())
                        .collect();
                    bid_ask_cone(&pi)
                }
            })
            .collect();
        TradingConeProcess::new(self.tree.clone(), w, cones).expect("bid-ask cones")
    }

    pub fn dump(&self) -> AugmentedDump {
        AugmentedDump {
            tree: self.tree.to_spec(),
            epsilon: self.epsilon.clone(),
            leaves: self
                .coins
                .iter()
                .enumerate()
                .map(|(k, (_, bits))| AugmentedLeaf {
                    id: self.tree.node(self.tree.leaf_node(k)).id.clone(),
                    coins: bits.iter().map(|&b| u8::from(b)).collect(),
                    v_tilde: self.v_tilde_at(k).to_vec(),
                    v: self.numeraire.at(k).to_vec(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AugmentedLeaf {
    pub id: String,
    pub coins: Vec<u8>,
    #[serde(with = "serde_qvec")]
    pub v_tilde: Vector,
    #[serde(with = "serde_qvec")]
    pub v: Vector,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AugmentedDump {
    pub tree: TreeSpec,
    #[serde(with = "serde_q")]
    pub epsilon: Rational,
    pub leaves: Vec<AugmentedLeaf>,
}

/// `θ(ω,i)` for every original leaf with `Z^0_T(ω) > 0`; `None` where the
/// price system vanishes.
fn heads_probabilities(
    a: &AugmentedMarket,
    z_terminal: &[Rational],
) -> Result<Vec<Option<Vector>>, MarketError> {
    let tree = a.original.tree();
    let w = a.width();
    (0..tree.num_leaves())
        .map(|leaf| {
            let z = &z_terminal[leaf * w..(leaf + 1) * w];
            if z[0].is_zero() {
                return Ok(None);
            }
            let mut theta = Vec::with_capacity(w - 1);
            for i in 1..w {
                let (lo, hi) = a.bracket(leaf, i);
                let zbar = &z[i] / &z[0];
                if zbar <= lo || zbar >= hi {
                    return Err(MarketError::NotInterior {
                        leaf: tree.node(tree.leaf_node(leaf)).id.clone(),
                        asset: i,
                    });
                }
                theta.push((zbar - &lo) / (hi - lo));
            }
            Ok(Some(theta))
        })
        .collect()
}

/// `λ^Z = 2^d Π θ_i^{b_i}(1 − θ_i)^{1 − b_i}`.
fn lambda(theta: &[Rational], bits: &[bool]) -> Rational {
    let mut l = Rational::one();
    for (t, &b) in theta.iter().zip(bits) {
        l *= int(2) * if b { t.clone() } else { Rational::one() - t };
    }
    l
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Extension {
    pub price_system: PriceSystem,
    /// `θ` per original leaf.
    #[serde(with = "serde_qmat")]
    pub theta: Vec<Vector>,
    /// `λ^Z` per augmented leaf.
    #[serde(with = "serde_qvec")]
    pub lambda: Vector,
    /// `E[λ^Z | F_T] = 1` at every original leaf.
    pub lambda_mean_one: bool,
    /// `Z_T = E[Z_{T+1} | F_T]` and the whole process is a martingale.
    pub martingale: bool,
}

/// Extends a strictly consistent price system of the original market to
/// the augmented market via `Z_{T+1} = Z^0_T λ^Z Ṽ`.
pub fn extend_price_system(z: &PriceSystem, a: &AugmentedMarket) -> Result<Extension, MarketError> {
    let orig = a.original.tree();
    let w = a.width();
    let z_terminal: Vector = (0..orig.num_leaves())
        .flat_map(|leaf| z.at(orig.leaf_node(leaf)).to_vec())
        .collect();
    let theta = heads_probabilities(a, &z_terminal)?;
    let mut lambdas = Vec::with_capacity(a.tree.num_leaves());
    let mut nodes: Vec<Vector> = Vec::with_capacity(a.tree.num_nodes());
    for u in 0..a.tree.num_nodes() {
        match a.node_map[u] {
            Some(o) => nodes.push(z.at(o).to_vec()),
            None => nodes.push(Vec::new()),
        }
    }
    for (k, (leaf, bits)) in a.coins.iter().enumerate() {
        let u = a.tree.leaf_node(k);
        let z0 = &z_terminal[leaf * w];
        let (l, value) = match &theta[*leaf] {
            Some(th) => {
                let l = lambda(th, bits);
                let c = z0 * &l;
                (l, a.v_tilde_at(k).iter().map(|v| v * &c).collect())
            }
            None => (Rational::one(), vec![Rational::zero(); w]),
        };
        lambdas.push(l);
        nodes[u] = value;
    }
    let proc = a.trading_cones();
    let ps = PriceSystem::from_nodes(&proc, nodes).ok_or(MarketError::InconsistentPriceSystem)?;
    let share = &a.tree.node(a.tree.leaf_node(0)).prob;
    let lambda_mean_one = (0..orig.num_leaves()).all(|leaf| {
        let total: Rational = a
            .coins
            .iter()
            .zip(&lambdas)
            .filter(|((o, _), _)| o == &leaf)
            .map(|(_, l)| l * share)
            .sum();
        total.is_one()
    });
    let martingale = is_martingale(&a.tree, &ps, w);
    Ok(Extension {
        price_system: ps,
        theta: theta.into_iter().map(Option::unwrap_or_default).collect(),
        lambda: lambdas,
        lambda_mean_one,
        martingale,
    })
}

fn is_martingale(tree: &FilteredTree, ps: &PriceSystem, w: usize) -> bool {
    (0..tree.num_nodes()).all(|u| {
        let node = tree.node(u);
        if node.children.is_empty() {
            return true;
        }
        let mut avg = vec![Rational::zero(); w];
        for &c in &node.children {
            for (a, z) in avg.iter_mut().zip(ps.at(c)) {
                *a += &tree.node(c).prob * z;
            }
        }
        avg == ps.at(u)
    })
}

#[derive(Debug, Clone)]
pub struct MarketScenarios {
    pub set: ScenarioSet,
    pub numeraire: Numeraire,
    /// Extreme consistent price systems of the original market plus the
    /// max-δ one, terminal values in mass coordinates with `Σ_j Z^j_0 = 1`.
    pub price_systems: Vec<Vector>,
    /// Densities of `Q^Z` before any stabilization.
    pub raw_densities: Vec<Vector>,
    /// True when the raw set was replaced by its stabilization hull.
    pub stabilized: bool,
}

/// `dQ^Z/dP̃ = Z^0_T λ^Z Σ_j ṽ^j / Σ_j Z^j_0` from a terminal price system
/// in mass coordinates.
fn density_of(a: &AugmentedMarket, mass: &[Rational]) -> Result<Vector, MarketError> {
    let orig = a.original.tree();
    let w = a.width();
    let probs = orig.leaf_probs();
    let z_terminal: Vector = mass.iter().enumerate().map(|(k, m)| m / &probs[k / w]).collect();
    let z0: Rational = mass.iter().sum();
    let theta = heads_probabilities(a, &z_terminal)?;
    Ok(a.coins
        .iter()
        .enumerate()
        .map(|(k, (leaf, bits))| match &theta[*leaf] {
            Some(th) => {
                let total: Rational = a.v_tilde_at(k).iter().sum();
                &z_terminal[leaf * w] * lambda(th, bits) * total / &z0
            }
            None => Rational::zero(),
        })
        .collect())
}

/// The scenario set `{Q^Z}` over extreme consistent price systems, with the
/// normalized numeraires `V`. For `d ≥ 2` the generated dual cone is
/// replaced by its stabilization hull.
pub fn market_scenario_set(a: &AugmentedMarket) -> Result<MarketScenarios, MarketError> {
    let proc = trading_cones(&a.original);
    let strict = match consistent_price_system(&proc) {
        CpsOutcome::Consistent(ps) if ps.strictly_positive => ps,
        _ => return Err(MarketError::ArbitrageInInput),
    };
    let orig = a.original.tree();
    let cone = proc.price_system_cone();
    let mut price_systems: Vec<Vector> = cone
        .generators()
        .rays
        .iter()
        .map(|r| {
            let total: Rational = r.iter().sum();
            r.iter().map(|x| x / &total).collect()
        })
        .collect();
    let star = strict.terminal_mass(orig);
    if !price_systems.contains(&star) {
        price_systems.push(star);
    }
    let raw_densities = price_systems
        .iter()
        .map(|m| density_of(a, m))
        .collect::<Result<Vec<_>, _>>()?;
    let raw = ScenarioSet::new(a.tree.clone(), raw_densities.clone())?;
    let w = a.width();
    if w <= 2 {
        return Ok(MarketScenarios {
            set: raw,
            numeraire: a.numeraire.clone(),
            price_systems,
            raw_densities,
            stabilized: false,
        });
    }
    let d = acceptance_dual_cone(&raw, &a.numeraire);
    let hull = stabilization_hull(&a.tree, &d, w);
    let probs = a.tree.leaf_probs();
    let v = &a.numeraire;
    let mut densities = Vec::new();
    for r in &hull.generators().rays {
        // Leafwise the hull lies on the ray through V, so the first
        // component recovers the scalar mass.
        let q: Vector = (0..a.tree.num_leaves())
            .map(|leaf| &r[leaf * w] / &v.at(leaf)[0])
            .collect();
        let total: Rational = q.iter().sum();
        densities.push(
            q.iter()
                .zip(probs)
                .map(|(x, p)| x / &total / p)
                .collect::<Vector>(),
        );
    }
    densities.sort();
    Ok(MarketScenarios {
        set: ScenarioSet::new(a.tree.clone(), densities)?,
        numeraire: a.numeraire.clone(),
        price_systems,
        raw_densities,
        stabilized: true,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EquivalenceReport {
    pub verdict: bool,
    /// `left` is `B_T(π) = ⊕_t C_t`, `right` is `𝒜_Q(V) ∩ L(F_T)`, both on
    /// original leaves.
    pub certificate: Comparison,
    pub null_strategies: NullSpaceReport,
    pub stabilized: bool,
}

/// `𝒜_Q(V) ∩ L(F_T)` as a cone of portfolio claims on the original leaves:
/// `Σ_{ω'} Q_k(ω,ω') V(ω,ω')·X(ω) ≤ 0` summed over `ω`.
pub fn measurable_acceptance_cone(a: &AugmentedMarket, s: &MarketScenarios) -> PolyCone {
    let orig = a.original.tree();
    let w = a.width();
    let mut facets = Vec::with_capacity(s.set.len());
    for m in s.set.masses() {
        let mut h = vec![Rational::zero(); orig.num_leaves() * w];
        for (k, (leaf, _)) in a.coins.iter().enumerate() {
            for i in 0..w {
                h[leaf * w + i] += &m[k] * &s.numeraire.at(k)[i];
            }
        }
        facets.push(h);
    }
    PolyCone::from_facets(orig.num_leaves() * w, facets, Vec::new()).expect("claim dimension")
}

/// Decides `B_T(π) = 𝒜_Q(V) ∩ L(F_T)` with certificates both ways.
pub fn verify_market_equivalence(
    market: &BidAskProcess,
    epsilon: &Rational,
) -> Result<EquivalenceReport, MarketError> {
    let a = augment_market(market, epsilon)?;
    let s = market_scenario_set(&a)?;
    let proc = trading_cones(market);
    let left = proc.attainable_cone();
    let right = measurable_acceptance_cone(&a, &s);
    for c in [&left, &right] {
        c.facets();
        c.generators();
    }
    let certificate = left.compare(&right).expect("same claim space");
    Ok(EquivalenceReport {
        verdict: certificate.equal,
        certificate,
        null_strategies: null_space_check(&proc),
        stabilized: s.stabilized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, vec_from_ints};

    fn matrix(a: Rational, b: Rational) -> Vec<Vector> {
        vec![vec![int(1), a], vec![b, int(1)]]
    }

    #[test]
    fn cone_generators() {
        let c = bid_ask_cone(&matrix(int(2), int(1)));
        let expected = PolyCone::from_generators(
            2,
            vec![
                vec_from_ints(&[-1, 0]),
                vec_from_ints(&[0, -1]),
                vec_from_ints(&[-2, 1]),
                vec_from_ints(&[1, -1]),
            ],
        )
        .unwrap();
        assert!(crate::cones::cone_equal(&c, &expected).unwrap().equal);
        let frictionless = bid_ask_cone(&matrix(int(1), int(1)));
        let f = frictionless.facets().clone();
        let h = PolyCone::from_facets(2, f.inequalities, f.equalities).unwrap();
        assert_eq!(h.generators().lineality.len(), 1);
    }

    #[test]
    fn augmentation_values() {
        let tree = Arc::new(FilteredTree::uniform(&[1]));
        let m = vec![matrix(int(3), int(2)); 2];
        let market = BidAskProcess::new(tree, 2, m).unwrap();
        let a = augment_market(&market, &frac(1, 10)).unwrap();
        assert_eq!(a.bracket(0, 1), (frac(9, 20), frac(33, 10)));
        assert!(a.bracket_holds());
        assert_eq!(a.tree.node(a.tree.leaf_node(1)).id, "n0#b1");
        assert!(augment_market(&market, &int(1)).is_err());
    }

    #[test]
    fn single_currency() {
        let point = Arc::new(FilteredTree::uniform(&[]));
        let market = BidAskProcess::new(point, 1, vec![vec![vec![int(1)]]]).unwrap();
        let a = augment_market(&market, &frac(1, 10)).unwrap();
        assert_eq!(a.tree.num_leaves(), 1);
        let s = market_scenario_set(&a).unwrap();
        assert_eq!(s.set.densities(), &[vec_from_ints(&[1])]);

        // Any nonnegative martingale is consistent, so the extreme systems
        // are the point masses, joined by the constant one.
        let tree = Arc::new(FilteredTree::uniform(&[2]));
        let market = BidAskProcess::new(tree, 1, vec![vec![vec![int(1)]]; 3]).unwrap();
        let a = augment_market(&market, &frac(1, 10)).unwrap();
        let s = market_scenario_set(&a).unwrap();
        assert_eq!(s.set.len(), 3);
        assert!(s.set.densities().contains(&vec_from_ints(&[1, 1])));
        assert!(verify_market_equivalence(&market, &frac(1, 10)).unwrap().verdict);
    }
}
