mod common;

use common::fixture;
use conerisk_core::ftap::{
    arbitrage_check, consistent_price_system, superhedge, verify_arbitrage_witness, verify_price_system,
    verify_superhedge, CpsOutcome,
};
use conerisk_core::market::{
    augment_market, extend_price_system, trading_cones, verify_market_equivalence, MarketError,
};
use conerisk_core::rational::{frac, int, vec_from_ints};

#[test]
fn f4_price_system_extends() {
    let f = fixture("f4.json");
    let market = f.market.unwrap();
    let proc = trading_cones(&market);
    let CpsOutcome::Consistent(z) = consistent_price_system(&proc) else {
        panic!("f4 admits a consistent price system");
    };
    assert!(z.strictly_positive && verify_price_system(&proc, &z));
    let a = augment_market(&market, f.epsilon.as_ref().unwrap()).unwrap();
    assert!(a.bracket_holds());
    let ext = extend_price_system(&z, &a).unwrap();
    assert!(ext.lambda_mean_one && ext.martingale);
    assert!(verify_price_system(&a.trading_cones(), &ext.price_system));
}

#[test]
fn equivalence_on_fixtures() {
    for name in ["f4.json", "binomial.json", "f5.json"] {
        let f = fixture(name);
        let eq = verify_market_equivalence(&f.market.unwrap(), f.epsilon.as_ref().unwrap()).unwrap();
        assert!(eq.verdict, "{name}");
    }
}

#[test]
fn round_trip_is_arbitrage() {
    let market = fixture("round_trip.json").market.unwrap();
    let proc = trading_cones(&market);
    let rep = arbitrage_check(&proc);
    assert!(!rep.arbitrage_free);
    assert!(verify_arbitrage_witness(&proc, rep.witness.as_ref().unwrap()));
    assert!(matches!(
        verify_market_equivalence(&market, &frac(1, 10)),
        Err(MarketError::ArbitrageInInput)
    ));
}

#[test]
fn binomial_call_replicates() {
    // Risk-neutral up probability is 1/3, so a claim paying one unit of cash
    // in the up state costs 1/3 and one unit of the asset there costs 2/3.
    let proc = trading_cones(&fixture("binomial.json").market.unwrap());
    let cash_up = vec_from_ints(&[1, 0, 0, 0]);
    let rep = superhedge(&proc, &cash_up, 0).unwrap();
    assert_eq!(rep.price, frac(1, 3));
    assert!(verify_superhedge(&proc, &cash_up, &rep));
    let asset_up = vec_from_ints(&[0, 1, 0, 0]);
    assert_eq!(superhedge(&proc, &asset_up, 0).unwrap().price, frac(2, 3));
    // Priced in units of the asset, whose time-0 value is 1.
    assert_eq!(superhedge(&proc, &asset_up, 1).unwrap().price, frac(2, 3));
}

#[test]
fn spread_widens_the_hedge() {
    let proc = trading_cones(&fixture("f4.json").market.unwrap());
    let x = vec_from_ints(&[0, 1, 0, 1]);
    let rep = superhedge(&proc, &x, 0).unwrap();
    assert!(verify_superhedge(&proc, &x, &rep));
    // Buying the asset outright at time 0 costs 11/10 and always hedges.
    assert!(rep.price <= frac(11, 10));
    assert!(rep.price > int(0));
}
