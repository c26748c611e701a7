//! Polyhedral convex cones in `Q^n` with lazily converted generator and
//! facet representations, and certificates for every membership and
//! inclusion answer.
//!
//! Polar convention: `C* = {y : y·x ≤ 0 for all x ∈ C}`. Facet form is
//! `{x : h·x ≤ 0 (h ∈ inequalities), e·x = 0 (e ∈ equalities)}`.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::dd::hrep_to_vrep;
use crate::lp::{LinearProgram, LpOutcome, Relation, Sense};
use crate::rational::{dot, is_zero_vec, neg, primitive, serde_qmat, serde_qvec, Rational, Vector};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConeError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Generators {
    #[serde(with = "serde_qmat")]
    pub rays: Vec<Vector>,
    #[serde(with = "serde_qmat")]
    pub lineality: Vec<Vector>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Facets {
    #[serde(with = "serde_qmat")]
    pub inequalities: Vec<Vector>,
    #[serde(with = "serde_qmat")]
    pub equalities: Vec<Vector>,
}

#[derive(Debug, Clone)]
pub struct PolyCone {
    dim: usize,
    gens: OnceLock<Generators>,
    facets: OnceLock<Facets>,
}

/// Evidence attached to a membership answer.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Certificate {
    /// `x = Σ rays[k]·g_k + Σ lineality[j]·l_j` with `rays ≥ 0`.
    Coefficients {
        #[serde(with = "serde_qvec")]
        rays: Vector,
        #[serde(with = "serde_qvec")]
        lineality: Vector,
    },
    /// `x` satisfies every facet inequality and equality.
    SatisfiesFacets,
    /// `y` with `y·x > 0` and `y·c ≤ 0` on the whole cone.
    Separator {
        #[serde(with = "serde_qvec")]
        y: Vector,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Membership {
    pub member: bool,
    pub certificate: Certificate,
}

/// How an inclusion `inner ⊆ outer` was established.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "route", content = "items", rename_all = "camelCase")]
pub enum InclusionProof {
    /// Each generator of `inner` (lineality both ways), with its
    /// membership certificate in `outer`.
    Generators(Vec<(CertVec, Certificate)>),
    /// Each facet normal of `outer` (equalities both ways), as a member of
    /// the cone spanned by `inner`'s facet normals.
    Facets(Vec<(CertVec, Certificate)>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct CertVec(#[serde(with = "serde_qvec")] pub Vector);

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "holds", rename_all = "camelCase")]
pub enum Inclusion {
    #[serde(rename = "true")]
    Holds { proof: InclusionProof },
    /// `witness ∈ inner`, `separator·witness > 0`, `separator·c ≤ 0` on `outer`.
    #[serde(rename = "false")]
    Fails {
        #[serde(with = "serde_qvec")]
        witness: Vector,
        #[serde(with = "serde_qvec")]
        separator: Vector,
    },
}

impl Inclusion {
    pub fn holds(&self) -> bool {
        matches!(self, Inclusion::Holds { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Comparison {
    pub equal: bool,
    pub left_in_right: Inclusion,
    pub right_in_left: Inclusion,
}

fn check_dim(expected: usize, v: &[Rational]) -> Result<(), ConeError> {
    if v.len() != expected {
        return Err(ConeError::DimensionMismatch {
            expected,
            found: v.len(),
        });
    }
    Ok(())
}

fn canonical_rays(vs: Vec<Vector>) -> Vec<Vector> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for v in vs {
        if is_zero_vec(&v) {
            continue;
        }
        let p = primitive(&v);
        if seen.insert(p.clone()) {
            out.push(p);
        }
    }
    out
}

fn canonical_lines(vs: Vec<Vector>) -> Vec<Vector> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for v in vs {
        if is_zero_vec(&v) {
            continue;
        }
        let p = crate::rational::primitive_line(&v);
        if seen.insert(p.clone()) {
            out.push(p);
        }
    }
    out
}

impl PolyCone {
    pub fn from_generators(dim: usize, rays: Vec<Vector>) -> Result<Self, ConeError> {
        Self::from_generators_with_lineality(dim, rays, Vec::new())
    }

    pub fn from_generators_with_lineality(
        dim: usize,
        rays: Vec<Vector>,
        lineality: Vec<Vector>,
    ) -> Result<Self, ConeError> {
        for v in rays.iter().chain(&lineality) {
            check_dim(dim, v)?;
        }
        let gens = Generators {
            rays: canonical_rays(rays),
            lineality: canonical_lines(lineality),
        };
        Ok(PolyCone {
            dim,
            gens: OnceLock::from(gens),
            facets: OnceLock::new(),
        })
    }

    pub fn from_facets(
        dim: usize,
        inequalities: Vec<Vector>,
        equalities: Vec<Vector>,
    ) -> Result<Self, ConeError> {
        for v in inequalities.iter().chain(&equalities) {
            check_dim(dim, v)?;
        }
        let facets = Facets {
            inequalities: canonical_rays(inequalities),
            equalities: canonical_lines(equalities),
        };
        Ok(PolyCone {
            dim,
            gens: OnceLock::new(),
            facets: OnceLock::from(facets),
        })
    }

    /// Both representations at once; the caller guarantees they describe
    /// the same cone.
    pub fn from_parts(dim: usize, gens: Generators, facets: Facets) -> Self {
        PolyCone {
            dim,
            gens: OnceLock::from(gens),
            facets: OnceLock::from(facets),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self::from_generators(dim, Vec::new()).expect("no vectors")
    }

    pub fn full(dim: usize) -> Self {
        Self::from_facets(dim, Vec::new(), Vec::new()).expect("no vectors")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_generators(&self) -> bool {
        self.gens.get().is_some()
    }

    pub fn has_facets(&self) -> bool {
        self.facets.get().is_some()
    }

    /// Generator form, computed by double description on first use.
    pub fn generators(&self) -> &Generators {
        self.gens.get_or_init(|| {
            let f = self.facets.get().expect("cone has a representation");
            let v = hrep_to_vrep(self.dim, &f.inequalities, &f.equalities);
            Generators {
                rays: v.rays,
                lineality: v.lineality,
            }
        })
    }

    /// Facet form, computed by double description on the polar on first use.
    pub fn facets(&self) -> &Facets {
        self.facets.get_or_init(|| {
            let g = self.gens.get().expect("cone has a representation");
            let v = hrep_to_vrep(self.dim, &g.rays, &g.lineality);
            Facets {
                inequalities: v.rays,
                equalities: v.lineality,
            }
        })
    }

    /// Rays plus both orientations of each lineality vector.
    pub fn all_generators(&self) -> Vec<Vector> {
        let g = self.generators();
        let mut out = g.rays.clone();
        for l in &g.lineality {
            out.push(l.clone());
            out.push(neg(l));
        }
        out
    }

    /// Facet inequalities plus both orientations of each equality.
    pub fn all_facets(&self) -> Vec<Vector> {
        let f = self.facets();
        let mut out = f.inequalities.clone();
        for e in &f.equalities {
            out.push(e.clone());
            out.push(neg(e));
        }
        out
    }

    pub fn dual(&self) -> PolyCone {
        let gens = self.facets.get().map(|f| Generators {
            rays: f.inequalities.clone(),
            lineality: f.equalities.clone(),
        });
        let facets = self.gens.get().map(|g| Facets {
            inequalities: g.rays.clone(),
            equalities: g.lineality.clone(),
        });
        let out = PolyCone {
            dim: self.dim,
            gens: OnceLock::new(),
            facets: OnceLock::new(),
        };
        if let Some(g) = gens {
            let _ = out.gens.set(g);
        }
        if let Some(f) = facets {
            let _ = out.facets.set(f);
        }
        out
    }

    /// A facet (or oriented equality) violated by `x`, if any.
    pub fn violated_facet(&self, x: &[Rational]) -> Option<Vector> {
        let f = self.facets();
        for h in &f.inequalities {
            if dot(h, x).is_positive() {
                return Some(h.clone());
            }
        }
        for e in &f.equalities {
            let v = dot(e, x);
            if v.is_positive() {
                return Some(e.clone());
            }
            if v.is_negative() {
                return Some(neg(e));
            }
        }
        None
    }

    pub fn member(&self, x: &[Rational]) -> Result<Membership, ConeError> {
        check_dim(self.dim, x)?;
        if self.has_generators() {
            Ok(self.member_by_lp(x))
        } else {
            Ok(self.member_by_facets(x))
        }
    }

    fn member_by_facets(&self, x: &[Rational]) -> Membership {
        match self.violated_facet(x) {
            Some(y) => Membership {
                member: false,
                certificate: Certificate::Separator { y },
            },
            None => Membership {
                member: true,
                certificate: Certificate::SatisfiesFacets,
            },
        }
    }

    fn member_by_lp(&self, x: &[Rational]) -> Membership {
        let g = self.generators();
        let nr = g.rays.len();
        let nl = g.lineality.len();
        if nr + nl == 0 {
            return if is_zero_vec(x) {
                Membership {
                    member: true,
                    certificate: Certificate::Coefficients {
                        rays: Vec::new(),
                        lineality: Vec::new(),
                    },
                }
            } else {
                Membership {
                    member: false,
                    certificate: Certificate::Separator { y: x.to_vec() },
                }
            };
        }
        let mut lp = LinearProgram::new(nr + nl, Sense::Maximize);
        for j in nr..nr + nl {
            lp.set_free(j);
        }
        for i in 0..self.dim {
            let row: Vector = g.rays.iter().chain(&g.lineality).map(|v| v[i].clone()).collect();
            lp.add(row, Relation::Eq, x[i].clone());
        }
        match lp.solve() {
            LpOutcome::Optimal(sol) => {
                let mut c = sol.x;
                let lin = c.split_off(nr);
                Membership {
                    member: true,
                    certificate: Certificate::Coefficients {
                        rays: c,
                        lineality: lin,
                    },
                }
            }
            LpOutcome::Infeasible { farkas } => Membership {
                member: false,
                certificate: Certificate::Separator { y: neg(&farkas) },
            },
            LpOutcome::Unbounded { .. } => unreachable!("zero objective"),
        }
    }

    /// Re-checks a membership certificate by direct arithmetic.
    pub fn verify_membership(&self, x: &[Rational], m: &Membership) -> bool {
        if x.len() != self.dim {
            return false;
        }
        match (&m.certificate, m.member) {
            (Certificate::Coefficients { rays, lineality }, true) => {
                let g = self.generators();
                if rays.len() != g.rays.len()
                    || lineality.len() != g.lineality.len()
                    || rays.iter().any(Signed::is_negative)
                {
                    return false;
                }
                let mut sum = vec![Rational::zero(); self.dim];
                for (c, v) in rays.iter().zip(&g.rays).chain(lineality.iter().zip(&g.lineality)) {
                    if c.is_zero() {
                        continue;
                    }
                    for (s, vi) in sum.iter_mut().zip(v) {
                        *s += c * vi;
                    }
                }
                sum == x
            }
            (Certificate::SatisfiesFacets, true) => self.violated_facet(x).is_none(),
            (Certificate::Separator { y }, false) => {
                y.len() == self.dim && dot(y, x).is_positive() && self.is_valid_inequality(y)
            }
            _ => false,
        }
    }

    /// `y·c ≤ 0` for every `c` in the cone, i.e. `y` lies in the dual.
    pub fn is_valid_inequality(&self, y: &[Rational]) -> bool {
        match self.gens.get() {
            Some(g) => {
                g.rays.iter().all(|r| !dot(y, r).is_positive())
                    && g.lineality.iter().all(|l| dot(y, l).is_zero())
            }
            None => facet_cone(self).member_by_lp(y).member,
        }
    }

    /// Decides `self ⊆ outer`.
    pub fn included_in(&self, outer: &PolyCone) -> Result<Inclusion, ConeError> {
        if self.dim != outer.dim {
            return Err(ConeError::DimensionMismatch {
                expected: outer.dim,
                found: self.dim,
            });
        }
        if !self.has_generators() {
            return Ok(facet_route(self, outer));
        }
        let eval = outer.has_facets();
        let mut items = Vec::new();
        for g in self.all_generators() {
            let m = if eval {
                outer.member_by_facets(&g)
            } else {
                outer.member_by_lp(&g)
            };
            match m.certificate {
                Certificate::Separator { y } => {
                    return Ok(Inclusion::Fails {
                        witness: g,
                        separator: y,
                    })
                }
                c => items.push((CertVec(g), c)),
            }
        }
        Ok(Inclusion::Holds {
            proof: InclusionProof::Generators(items),
        })
    }

    pub fn verify_inclusion(&self, outer: &PolyCone, inc: &Inclusion) -> bool {
        match inc {
            Inclusion::Fails { witness, separator } => {
                self.contains_by_facets_or_lp(witness)
                    && dot(separator, witness).is_positive()
                    && outer.is_valid_inequality(separator)
            }
            Inclusion::Holds {
                proof: InclusionProof::Generators(items),
            } => {
                let gens = self.all_generators();
                gens.len() == items.len()
                    && gens.iter().zip(items).all(|(g, (v, c))| {
                        *g == v.0
                            && outer.verify_membership(
                                g,
                                &Membership {
                                    member: true,
                                    certificate: c.clone(),
                                },
                            )
                    })
            }
            Inclusion::Holds {
                proof: InclusionProof::Facets(items),
            } => {
                let inner_dual = facet_cone(self);
                let hs = outer.all_facets();
                hs.len() == items.len()
                    && hs.iter().zip(items).all(|(h, (v, c))| {
                        *h == v.0
                            && inner_dual.verify_membership(
                                h,
                                &Membership {
                                    member: true,
                                    certificate: c.clone(),
                                },
                            )
                    })
            }
        }
    }

    fn contains_by_facets_or_lp(&self, x: &[Rational]) -> bool {
        if self.has_facets() {
            self.violated_facet(x).is_none()
        } else {
            self.member_by_lp(x).member
        }
    }

    /// Inclusion both ways.
    pub fn compare(&self, other: &PolyCone) -> Result<Comparison, ConeError> {
        let left_in_right = self.included_in(other)?;
        let right_in_left = other.included_in(self)?;
        Ok(Comparison {
            equal: left_in_right.holds() && right_in_left.holds(),
            left_in_right,
            right_in_left,
        })
    }

    pub fn dump(&self) -> ConeDump {
        ConeDump {
            dim: self.dim,
            generators: self.gens.get().cloned(),
            facets: self.facets.get().cloned(),
        }
    }
}

/// The cone spanned by `c`'s facet normals, i.e. `c*` in generator form.
fn facet_cone(c: &PolyCone) -> PolyCone {
    let f = c.facets();
    PolyCone {
        dim: c.dim,
        gens: OnceLock::from(Generators {
            rays: f.inequalities.clone(),
            lineality: f.equalities.clone(),
        }),
        facets: OnceLock::new(),
    }
}

/// `inner ⊆ outer` iff every facet of `outer` lies in `inner*`. A failed LP
/// yields `y ∈ inner` with `h·y > 0` for the offending facet `h` of `outer`.
fn facet_route(inner: &PolyCone, outer: &PolyCone) -> Inclusion {
    let inner_dual = facet_cone(inner);
    let mut items = Vec::new();
    for h in outer.all_facets() {
        let m = inner_dual.member_by_lp(&h);
        match m.certificate {
            Certificate::Separator { y } => {
                return Inclusion::Fails {
                    witness: y,
                    separator: h,
                }
            }
            c => items.push((CertVec(h), c)),
        }
    }
    Inclusion::Holds {
        proof: InclusionProof::Facets(items),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConeDump {
    pub dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generators: Option<Generators>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub facets: Option<Facets>,
}

pub fn dual_cone(c: &PolyCone) -> PolyCone {
    c.dual()
}

pub fn cone_sum(dim: usize, cs: &[&PolyCone]) -> Result<PolyCone, ConeError> {
    let mut rays = Vec::new();
    let mut lin = Vec::new();
    for c in cs {
        if c.dim != dim {
            return Err(ConeError::DimensionMismatch {
                expected: dim,
                found: c.dim,
            });
        }
        let g = c.generators();
        rays.extend(g.rays.iter().cloned());
        lin.extend(g.lineality.iter().cloned());
    }
    PolyCone::from_generators_with_lineality(dim, rays, lin)
}

pub fn cone_intersect(dim: usize, cs: &[&PolyCone]) -> Result<PolyCone, ConeError> {
    let mut ineqs = Vec::new();
    let mut eqs = Vec::new();
    for c in cs {
        if c.dim != dim {
            return Err(ConeError::DimensionMismatch {
                expected: dim,
                found: c.dim,
            });
        }
        let f = c.facets();
        ineqs.extend(f.inequalities.iter().cloned());
        eqs.extend(f.equalities.iter().cloned());
    }
    PolyCone::from_facets(dim, ineqs, eqs)
}

pub fn cone_equal(a: &PolyCone, b: &PolyCone) -> Result<Comparison, ConeError> {
    a.compare(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::vec_from_ints;

    fn quadrant() -> PolyCone {
        PolyCone::from_generators(2, vec![vec_from_ints(&[1, 0]), vec_from_ints(&[0, 1])]).unwrap()
    }

    #[test]
    fn canonical_generators() {
        let c = PolyCone::from_generators(2, vec![vec_from_ints(&[1, 1]), vec_from_ints(&[2, 2])]).unwrap();
        assert_eq!(c.generators().rays, vec![vec_from_ints(&[1, 1])]);
        assert!(PolyCone::from_generators(2, vec![vec_from_ints(&[1])]).is_err());
        assert!(PolyCone::from_generators(2, vec![])
            .unwrap()
            .all_generators()
            .is_empty());
    }

    #[test]
    fn duals() {
        let q = quadrant().dual();
        let neg_q =
            PolyCone::from_generators(2, vec![vec_from_ints(&[-1, 0]), vec_from_ints(&[0, -1])]).unwrap();
        assert!(cone_equal(&q, &neg_q).unwrap().equal);

        let c = PolyCone::from_generators(2, vec![vec_from_ints(&[1, 1]), vec_from_ints(&[1, -1])]).unwrap();
        let expected =
            PolyCone::from_generators(2, vec![vec_from_ints(&[-1, -1]), vec_from_ints(&[-1, 1])]).unwrap();
        let mut rays = c.dual().generators().rays.clone();
        rays.sort();
        assert_eq!(rays, vec![vec_from_ints(&[-1, -1]), vec_from_ints(&[-1, 1])]);
        assert!(cone_equal(&c.dual(), &expected).unwrap().equal);

        let z = PolyCone::zero(2).dual();
        assert!(cone_equal(&z, &PolyCone::full(2)).unwrap().equal);
    }

    #[test]
    fn membership_certificates() {
        let q = quadrant();
        let m = q.member(&vec_from_ints(&[1, 2])).unwrap();
        assert!(m.member);
        assert_eq!(
            m.certificate,
            Certificate::Coefficients {
                rays: vec_from_ints(&[1, 2]),
                lineality: vec![]
            }
        );
        let x = vec_from_ints(&[-1, 1]);
        let m = q.member(&x).unwrap();
        assert!(!m.member);
        assert!(q.verify_membership(&x, &m));
        let Certificate::Separator { y } = &m.certificate else {
            panic!()
        };
        assert_eq!(y, &vec_from_ints(&[-1, 0]));
        assert!(q.member(&vec_from_ints(&[0, 0])).unwrap().member);
    }

    #[test]
    fn sums_and_intersections() {
        let e1 = PolyCone::from_generators(2, vec![vec_from_ints(&[1, 0])]).unwrap();
        let e2 = PolyCone::from_generators(2, vec![vec_from_ints(&[0, 1])]).unwrap();
        let me1 = PolyCone::from_generators(2, vec![vec_from_ints(&[-1, 0])]).unwrap();
        assert!(
            cone_equal(&cone_sum(2, &[&e1, &e2]).unwrap(), &quadrant())
                .unwrap()
                .equal
        );
        let axis = cone_sum(2, &[&e1, &me1]).unwrap();
        assert_eq!(axis.facets().equalities.len(), 1);
        assert!(axis.facets().inequalities.is_empty());

        let half = PolyCone::from_facets(2, vec![vec_from_ints(&[1, 0])], vec![]).unwrap();
        let cap = cone_intersect(2, &[&quadrant(), &half]).unwrap();
        assert!(cone_equal(&cap, &e2).unwrap().equal);
        let negq = quadrant().dual();
        let z = cone_intersect(2, &[&quadrant(), &negq]).unwrap();
        assert!(z.all_generators().is_empty());
    }

    #[test]
    fn equality_certificates() {
        let q = quadrant();
        let q3 = PolyCone::from_generators(
            2,
            vec![
                vec_from_ints(&[1, 0]),
                vec_from_ints(&[1, 1]),
                vec_from_ints(&[0, 1]),
            ],
        )
        .unwrap();
        assert!(cone_equal(&q, &q3).unwrap().equal);
        let half = PolyCone::from_facets(2, vec![vec_from_ints(&[0, -1])], vec![]).unwrap();
        let cmp = cone_equal(&q, &half).unwrap();
        assert!(!cmp.equal);
        assert!(cmp.left_in_right.holds());
        assert!(q.verify_inclusion(&half, &cmp.left_in_right));
        assert!(half.verify_inclusion(&q, &cmp.right_in_left));
        let Inclusion::Fails { witness, .. } = &cmp.right_in_left else {
            panic!()
        };
        assert!(witness[0].is_negative());
    }

    #[test]
    fn facet_route_inclusion() {
        let a =
            PolyCone::from_facets(2, vec![vec_from_ints(&[-1, 0]), vec_from_ints(&[0, -1])], vec![]).unwrap();
        let b = PolyCone::from_facets(2, vec![vec_from_ints(&[-1, 0])], vec![]).unwrap();
        let inc = a.included_in(&b).unwrap();
        assert!(inc.holds());
        assert!(a.verify_inclusion(&b, &inc));
        let inc = b.included_in(&a).unwrap();
        assert!(!inc.holds());
        assert!(b.verify_inclusion(&a, &inc));
    }
}
