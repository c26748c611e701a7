mod common;

use common::fixture;
use conerisk_core::rational::{frac, int, vec_from_ints};
use conerisk_core::risk::{compose_rho, is_optionally_stable, is_representable, rho};

#[test]
fn coin_expectation() {
    let s = fixture("coin.json").scenarios.unwrap();
    assert_eq!(rho(&s, &vec_from_ints(&[4, -2]), 0).unwrap(), vec![int(1)]);
    assert_eq!(
        rho(&s, &vec_from_ints(&[4, -2]), 1).unwrap(),
        vec_from_ints(&[4, -2])
    );
}

#[test]
fn coin_avar_takes_the_worse_outcome() {
    let s = fixture("coin_avar.json").scenarios.unwrap();
    assert_eq!(rho(&s, &vec_from_ints(&[4, -2]), 0).unwrap(), vec![int(4)]);
    assert_eq!(compose_rho(&s, &vec_from_ints(&[4, -2])).unwrap(), int(4));
}

#[test]
fn stability_verdicts() {
    for (name, stable) in [
        ("all_measures.json", true),
        ("trinomial.json", true),
        ("avar_quad.json", false),
    ] {
        let f = fixture(name);
        let (s, v) = (f.scenarios.unwrap(), f.numeraire.unwrap());
        let rep = is_optionally_stable(&s, &v, 4, 1);
        assert_eq!(rep.verdict, stable, "{name}");
        assert!(rep.cross_checks.iter().all(|c| c.passed), "{name}");
        assert_eq!(is_representable(&s, &v).verdict, stable, "{name}");
    }
}

#[test]
fn avar_quad_is_time_inconsistent() {
    let f = fixture("avar_quad.json");
    let s = f.scenarios.unwrap();
    let l = s.tree().num_leaves();
    // Some claim has a nested value strictly above the one-shot value.
    let found = (0..1 << l).any(|bits: u32| {
        let x: Vec<_> = (0..l)
            .map(|k| if bits >> k & 1 == 1 { int(-1) } else { frac(1, 2) })
            .collect();
        compose_rho(&s, &x).unwrap() > rho(&s, &x, 0).unwrap()[0]
    });
    assert!(found);
}
