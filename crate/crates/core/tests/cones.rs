use conerisk_core::cones::{cone_intersect, cone_sum, PolyCone};
use conerisk_core::rational::{int, Vector};
use proptest::prelude::*;

fn small_vec(dim: usize) -> impl Strategy<Value = Vector> {
    proptest::collection::vec(-3i64..=3, dim).prop_map(|v| v.into_iter().map(int).collect())
}

fn cone(dim: usize) -> impl Strategy<Value = PolyCone> {
    proptest::collection::vec(small_vec(dim), 1..5)
        .prop_map(move |rays| PolyCone::from_generators(dim, rays).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bipolar(c in cone(3)) {
        prop_assert!(c.dual().dual().compare(&c).unwrap().equal);
    }

    #[test]
    fn facets_reproduce_the_cone(c in cone(3)) {
        let f = c.facets().clone();
        let h = PolyCone::from_facets(3, f.inequalities, f.equalities).unwrap();
        let cmp = h.compare(&c).unwrap();
        prop_assert!(cmp.equal);
        prop_assert!(h.verify_inclusion(&c, &cmp.left_in_right));
        prop_assert!(c.verify_inclusion(&h, &cmp.right_in_left));
    }

    #[test]
    fn sum_and_intersection_are_dual(a in cone(3), b in cone(3)) {
        let sum = cone_sum(3, &[&a, &b]).unwrap();
        let meet = cone_intersect(3, &[&a.dual(), &b.dual()]).unwrap();
        prop_assert!(sum.dual().compare(&meet).unwrap().equal);
    }

    #[test]
    fn membership_certificates_check(c in cone(3), x in small_vec(3)) {
        let m = c.member(&x).unwrap();
        prop_assert!(c.verify_membership(&x, &m));
        prop_assert_eq!(m.member, c.violated_facet(&x).is_none());
    }
}

#[test]
fn failed_inclusion_has_a_separator() {
    let quadrant = PolyCone::from_generators(2, vec![vec![int(1), int(0)], vec![int(0), int(1)]]).unwrap();
    let half = PolyCone::from_generators(2, vec![vec![int(1), int(0)], vec![int(-1), int(1)]]).unwrap();
    let inc = half.included_in(&quadrant).unwrap();
    assert!(!inc.holds());
    assert!(half.verify_inclusion(&quadrant, &inc));
    assert!(quadrant.included_in(&half).unwrap().holds());
}
