//! Double description: from `{x : a·x ≤ 0, e·x = 0}` to a lineality basis
//! plus extreme rays, in primitive integer arithmetic.

use fixedbitset::FixedBitSet;
use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::rational::{primitive_bigint, primitive_int, Rational, Vector};

type IVec = Vec<BigInt>;

fn idot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    let mut acc = BigInt::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            acc += x * y;
        }
    }
    acc
}

/// `alpha * x + beta * y`, reduced to primitive form.
fn combine(alpha: &BigInt, x: &[BigInt], beta: &BigInt, y: &[BigInt]) -> IVec {
    let v = x.iter().zip(y).map(|(a, b)| alpha * a + beta * b).collect();
    primitive_bigint(v)
}

struct Ray {
    v: IVec,
    zeros: FixedBitSet,
}

/// Result of a conversion. Rays are extreme rays of the pointed part (modulo
/// the lineality space), each in primitive integer form.
#[derive(Debug, Clone, Default)]
pub struct VRep {
    pub lineality: Vec<Vector>,
    pub rays: Vec<Vector>,
}

fn to_rational(v: IVec) -> Vector {
    v.into_iter().map(Rational::from_integer).collect()
}

/// Extreme rays and lineality basis of `{x ∈ Q^dim : a·x ≤ 0 (a ∈ ineqs), e·x = 0 (e ∈ eqs)}`.
pub fn hrep_to_vrep(dim: usize, ineqs: &[Vector], eqs: &[Vector]) -> VRep {
    let ineqs: Vec<IVec> = ineqs
        .iter()
        .map(|a| primitive_int(a))
        .filter(|a| a.iter().any(|x| !x.is_zero()))
        .collect();
    let eqs: Vec<IVec> = eqs
        .iter()
        .map(|a| primitive_int(a))
        .filter(|a| a.iter().any(|x| !x.is_zero()))
        .collect();
    let m = ineqs.len();

    let mut lin: Vec<IVec> = (0..dim)
        .map(|i| {
            let mut v = vec![BigInt::zero(); dim];
            v[i] = BigInt::from(1);
            v
        })
        .collect();
    let mut rays: Vec<Ray> = Vec::new();

    for e in &eqs {
        if let Some(k) = lin.iter().position(|l| !idot(e, l).is_zero()) {
            let l0 = lin.swap_remove(k);
            let el0 = idot(e, &l0);
            lin = lin
                .into_iter()
                .map(|l| {
                    let el = idot(e, &l);
                    if el.is_zero() {
                        l
                    } else {
                        combine(&el0, &l, &-el, &l0)
                    }
                })
                .collect();
            // No rays exist yet while equalities are processed first.
            continue;
        }
        // Only reachable once lineality is exhausted in the direction of e.
        rays = restrict(rays, e, None);
    }

    for (idx, a) in ineqs.iter().enumerate() {
        if let Some(k) = lin.iter().position(|l| !idot(a, l).is_zero()) {
            let mut l0 = lin.swap_remove(k);
            if idot(a, &l0).is_positive() {
                l0 = l0.into_iter().map(|x| -x).collect();
            }
            // a·l0 < 0 now.
            let al0 = idot(a, &l0);
            let neg_al0 = -al0.clone();
            lin = lin
                .into_iter()
                .map(|l| {
                    let al = idot(a, &l);
                    if al.is_zero() {
                        l
                    } else {
                        combine(&al0, &l, &-al, &l0)
                    }
                })
                .collect();
            for r in rays.iter_mut() {
                let ar = idot(a, &r.v);
                if !ar.is_zero() {
                    r.v = combine(&neg_al0, &r.v, &ar, &l0);
                }
                r.zeros.insert(idx);
            }
            let mut zeros = FixedBitSet::with_capacity(m);
            zeros.insert_range(0..idx);
            rays.push(Ray { v: l0, zeros });
            continue;
        }
        rays = restrict(rays, a, Some((idx, m)));
    }

    VRep {
        lineality: lin.into_iter().map(to_rational).collect(),
        rays: rays.into_iter().map(|r| to_rational(r.v)).collect(),
    }
}

/// One double-description step against `a·x ≤ 0` (or `a·x = 0` when
/// `index` is `None`).
fn restrict(rays: Vec<Ray>, a: &[BigInt], index: Option<(usize, usize)>) -> Vec<Ray> {
    let mut plus = Vec::new();
    let mut zero = Vec::new();
    let mut minus = Vec::new();
    for r in rays {
        let s = idot(a, &r.v);
        if s.is_zero() {
            zero.push(r);
        } else if s.is_negative() {
            plus.push((r, s));
        } else {
            minus.push((r, s));
        }
    }
    let mut out: Vec<Ray> = Vec::new();
    if !minus.is_empty() && !plus.is_empty() {
        let all: Vec<&FixedBitSet> = plus
            .iter()
            .map(|(r, _)| &r.zeros)
            .chain(zero.iter().map(|r| &r.zeros))
            .chain(minus.iter().map(|(r, _)| &r.zeros))
            .collect();
        for (pi, (p, sp)) in plus.iter().enumerate() {
            for (ni, (n, sn)) in minus.iter().enumerate() {
                let mut common = p.zeros.clone();
                common.intersect_with(&n.zeros);
                let n_index = plus.len() + zero.len() + ni;
                let adjacent = all
                    .iter()
                    .enumerate()
                    .all(|(w, z)| w == pi || w == n_index || !common.is_subset(z));
                if !adjacent {
                    continue;
                }
                // sn·p − sp·n with sp < 0 < sn: both coefficients positive.
                let v = combine(sn, &p.v, &-sp.clone(), &n.v);
                let mut zeros = common;
                if let Some((idx, _)) = index {
                    zeros.insert(idx);
                }
                out.push(Ray { v, zeros });
            }
        }
    }
    for mut r in zero {
        if let Some((idx, _)) = index {
            r.zeros.insert(idx);
        }
        out.push(r);
    }
    if index.is_some() {
        out.extend(plus.into_iter().map(|(r, _)| r));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::vec_from_ints;

    fn sorted(mut v: Vec<Vector>) -> Vec<Vector> {
        v.sort();
        v
    }

    #[test]
    fn quadrant() {
        let r = hrep_to_vrep(2, &[vec_from_ints(&[-1, 0]), vec_from_ints(&[0, -1])], &[]);
        assert!(r.lineality.is_empty());
        assert_eq!(
            sorted(r.rays),
            vec![vec_from_ints(&[0, 1]), vec_from_ints(&[1, 0])]
        );
    }

    #[test]
    fn halfplane_has_lineality() {
        let r = hrep_to_vrep(2, &[vec_from_ints(&[1, 0])], &[]);
        assert_eq!(r.lineality.len(), 1);
        assert_eq!(r.rays.len(), 1);
        assert_eq!(r.rays[0][0], crate::rational::int(-1));
    }

    #[test]
    fn dual_of_two_rays() {
        // {y : y1 + y2 ≤ 0, y1 − y2 ≤ 0} = cone{(−1,−1), (−1,1)}
        let r = hrep_to_vrep(2, &[vec_from_ints(&[1, 1]), vec_from_ints(&[1, -1])], &[]);
        assert!(r.lineality.is_empty());
        assert_eq!(
            sorted(r.rays),
            vec![vec_from_ints(&[-1, -1]), vec_from_ints(&[-1, 1])]
        );
    }

    #[test]
    fn square_pyramid() {
        // Cone over a square: x3 ≥ |x1|, x3 ≥ |x2| has four extreme rays.
        let ineqs = vec![
            vec_from_ints(&[1, 0, -1]),
            vec_from_ints(&[-1, 0, -1]),
            vec_from_ints(&[0, 1, -1]),
            vec_from_ints(&[0, -1, -1]),
        ];
        let r = hrep_to_vrep(3, &ineqs, &[]);
        assert!(r.lineality.is_empty());
        assert_eq!(
            sorted(r.rays),
            vec![
                vec_from_ints(&[-1, -1, 1]),
                vec_from_ints(&[-1, 1, 1]),
                vec_from_ints(&[1, -1, 1]),
                vec_from_ints(&[1, 1, 1]),
            ]
        );
    }

    #[test]
    fn equalities_and_zero_cone() {
        let r = hrep_to_vrep(2, &[vec_from_ints(&[-1, 0])], &[vec_from_ints(&[0, 1])]);
        assert_eq!(r.rays, vec![vec_from_ints(&[1, 0])]);
        let z = hrep_to_vrep(
            2,
            &[vec_from_ints(&[-1, 0]), vec_from_ints(&[1, 0])],
            &[vec_from_ints(&[0, 1])],
        );
        assert!(z.rays.is_empty() && z.lineality.is_empty());
    }
}
