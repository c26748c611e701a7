//! Scenario sets defined by conditional-expectation boxes, and the
//! average-value-at-risk set.

use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use super::{RiskError, ScenarioSet};
use crate::dd::hrep_to_vrep;
use crate::rational::{Rational, Vector};
use crate::tree::FilteredTree;

/// Interval constraint `lower ≤ E_Q[X | u] ≤ upper`, componentwise.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeBox {
    pub node: usize,
    pub lower: Vector,
    pub upper: Vector,
}

#[derive(Debug, Clone)]
pub struct GenericScenarioSet {
    pub set: ScenarioSet,
    /// Whether each generator charges every leaf, i.e. is equivalent to `P`.
    pub equivalent: Vec<bool>,
}

fn normalize_rays(tree: &FilteredTree, rays: Vec<Vector>, l: usize) -> Vec<Vector> {
    let mut out: Vec<Vector> = rays
        .into_iter()
        .map(|r| {
            let total: Rational = r[..l].iter().sum();
            r[..l]
                .iter()
                .zip(tree.leaf_probs())
                .map(|(q, p)| q / &total / p)
                .collect()
        })
        .collect();
    out.sort();
    out
}

/// Vertices of `{Q : Q ≪ P, E_Q[X^i | u] ∈ [a, b] for every box}`. The
/// conditional constraints are linearized as `Σ_{ω∈u} Q(ω)(X^i(ω) − b) ≤ 0`
/// and `Σ_{ω∈u} Q(ω)(a − X^i(ω)) ≤ 0`.
pub fn generic_scenario_set(
    tree: Arc<FilteredTree>,
    x: &[Rational],
    width: usize,
    boxes: &[NodeBox],
) -> Result<GenericScenarioSet, RiskError> {
    let l = tree.num_leaves();
    if x.len() != l * width {
        return Err(RiskError::WrongLength {
            expected: l * width,
            found: x.len(),
        });
    }
    let mut ineqs: Vec<Vector> = (0..l)
        .map(|w| {
            let mut v = vec![Rational::zero(); l];
            v[w] = -Rational::one();
            v
        })
        .collect();
    for b in boxes {
        let node = tree.node(b.node);
        if b.lower.len() != width || b.upper.len() != width {
            return Err(RiskError::BadBox {
                node: node.id.clone(),
                reason: format!("expected {width} components"),
            });
        }
        for i in 0..width {
            if b.lower[i] > b.upper[i] {
                return Err(RiskError::BadBox {
                    node: node.id.clone(),
                    reason: format!("empty interval in component {i}"),
                });
            }
            let mut hi = vec![Rational::zero(); l];
            let mut lo = vec![Rational::zero(); l];
            for w in node.leaves.clone() {
                hi[w] = &x[w * width + i] - &b.upper[i];
                lo[w] = &b.lower[i] - &x[w * width + i];
            }
            ineqs.push(hi);
            ineqs.push(lo);
        }
    }
    let v = hrep_to_vrep(l, &ineqs, &[]);
    debug_assert!(v.lineality.is_empty());
    if v.rays.is_empty() {
        return Err(RiskError::EmptySet);
    }
    let densities = normalize_rays(&tree, v.rays, l);
    let equivalent = densities
        .iter()
        .map(|d| d.iter().all(Signed::is_positive))
        .collect();
    let set = ScenarioSet::new(tree, densities).map_err(|e| match e {
        RiskError::UnchargedNode { .. } => RiskError::EmptySet,
        other => other,
    })?;
    Ok(GenericScenarioSet { set, equivalent })
}

impl ScenarioSet {
    /// Extreme points of `{Λ : 0 ≤ Λ ≤ 1/α, E_P[Λ] = 1}`, the scenario set of
    /// average value at risk at level `α ∈ (0, 1]`.
    pub fn avar(tree: Arc<FilteredTree>, alpha: &Rational) -> Result<Self, RiskError> {
        let l = tree.num_leaves();
        assert!(
            alpha.is_positive() && *alpha <= Rational::one(),
            "alpha in (0, 1]"
        );
        // Variables (Q(ω)..., s) with Σ Q = s and Q(ω) ≤ s P(ω)/α.
        let mut ineqs = Vec::new();
        for w in 0..l {
            let mut lo = vec![Rational::zero(); l + 1];
            lo[w] = -Rational::one();
            ineqs.push(lo);
            let mut hi = vec![Rational::zero(); l + 1];
            hi[w] = Rational::one();
            hi[l] = -(&tree.leaf_probs()[w] / alpha);
            ineqs.push(hi);
        }
        let mut eq = vec![Rational::one(); l + 1];
        eq[l] = -Rational::one();
        let v = hrep_to_vrep(l + 1, &ineqs, &[eq]);
        let densities = normalize_rays(&tree, v.rays, l);
        ScenarioSet::new(tree, densities)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int, vec_from_ints};

    #[test]
    fn avar_vertices_on_four_leaves() {
        let tree = Arc::new(FilteredTree::uniform(&[2, 2]));
        let s = ScenarioSet::avar(tree, &frac(1, 2)).unwrap();
        assert_eq!(s.len(), 6);
        for d in s.densities() {
            assert_eq!(d.iter().filter(|x| **x == int(2)).count(), 2);
        }
    }

    #[test]
    fn vacuous_boxes_give_all_measures() {
        let tree = Arc::new(FilteredTree::uniform(&[3]));
        let x = vec_from_ints(&[2, 1, 0]);
        let b = NodeBox {
            node: 0,
            lower: vec![int(0)],
            upper: vec![int(2)],
        };
        let g = generic_scenario_set(tree, &x, 1, &[b]).unwrap();
        assert_eq!(g.set.len(), 3);
        assert!(g.equivalent.iter().all(|e| !e));
    }

    #[test]
    fn empty_box_is_rejected() {
        let tree = Arc::new(FilteredTree::uniform(&[2]));
        let x = vec_from_ints(&[1, 2]);
        let b = NodeBox {
            node: 0,
            lower: vec![int(5)],
            upper: vec![int(6)],
        };
        assert!(matches!(
            generic_scenario_set(tree, &x, 1, &[b]),
            Err(RiskError::EmptySet)
        ));
    }
}
