use std::path::PathBuf;

use conerisk_core::cones::{Comparison, PolyCone};
use conerisk_core::ftap::{
    arbitrage_check, consistent_price_system, null_space_check, superhedge, verify_arbitrage_witness,
    verify_price_system, verify_superhedge, verify_unhedgeable, ArbitrageReport, CpsOutcome, FtapError,
    PriceSystem, TradingConeProcess,
};
use conerisk_core::io::{parse_claim, parse_fixture, Fixture};
use conerisk_core::market::{
    augment_market, extend_price_system, market_scenario_set, measurable_acceptance_cone, trading_cones,
    verify_market_equivalence, AugmentedMarket, BidAskProcess, MarketError,
};
use conerisk_core::rational::{fmt_rational, frac, parse_rational, DisplayVec, Rational, Vector};
use conerisk_core::risk::{
    acceptance_dual_cone, acceptance_portfolio_cone, compose_rho, decompose, is_optionally_stable,
    is_representable, rho_with_argmax, stabilization_hull, step_cone_sum, step_cones, verify_decomposition,
    DecomposeTarget, Numeraire, ScenarioSet,
};
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use crate::{sweep, Command, Failure, Outcome, Recheck};

pub fn q(x: &Rational) -> Value {
    Value::String(fmt_rational(x))
}

pub fn qv(v: &[Rational]) -> Value {
    Value::Array(v.iter().map(q).collect())
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

pub fn input_file(cmd: &Command) -> Option<&PathBuf> {
    use Command::*;
    match cmd {
        Validate { file }
        | Rho { file, .. }
        | Compose { file, .. }
        | CheckStability { file, .. }
        | CheckRepresentability { file }
        | Decompose { file, .. }
        | CheckArbitrage { file }
        | Superhedge { file, .. }
        | Augment { file, .. }
        | ExtractScenarios { file, .. }
        | VerifyEquivalence { file, .. } => Some(file),
        Sweep(_) => None,
    }
}

/// Command name and its parameters as they appear in the report.
pub fn describe(cmd: &Command) -> (&'static str, Value) {
    use Command::*;
    match cmd {
        Validate { .. } => ("validate", json!({})),
        Rho { claim, t, .. } => ("rho", json!({ "claim": claim.claim, "t": t })),
        Compose { claim, .. } => ("compose", json!({ "claim": claim.claim })),
        CheckStability { samples, seed, .. } => {
            ("check-stability", json!({ "samples": samples, "seed": seed }))
        }
        CheckRepresentability { .. } => ("check-representability", json!({})),
        Decompose { claim, .. } => ("decompose", json!({ "claim": claim.claim })),
        CheckArbitrage { .. } => ("check-arbitrage", json!({})),
        Superhedge { claim, numeraire, .. } => (
            "superhedge",
            json!({ "claim": claim.claim, "numeraire": numeraire }),
        ),
        Augment { epsilon, .. } => ("augment", json!({ "epsilon": epsilon.epsilon })),
        ExtractScenarios { epsilon, .. } => ("extract-scenarios", json!({ "epsilon": epsilon.epsilon })),
        VerifyEquivalence { epsilon, .. } => ("verify-equivalence", json!({ "epsilon": epsilon.epsilon })),
        Sweep(args) => ("sweep", to_value(args)),
    }
}

pub fn dispatch(cmd: &Command, text: Option<&str>, recheck: bool) -> Result<Outcome, Failure> {
    use Command::*;
    if let Sweep(args) = cmd {
        return sweep::run(args);
    }
    let f = parse_fixture(text.expect("file commands read their input")).map_err(Failure::input)?;
    match cmd {
        Validate { .. } => Ok(validate(&f)),
        Rho { claim, t, .. } => rho(&f, &claim.claim, *t, recheck),
        Compose { claim, .. } => compose(&f, &claim.claim),
        CheckStability { samples, seed, .. } => check_stability(&f, *samples, *seed, recheck),
        CheckRepresentability { .. } => check_representability(&f, recheck),
        Decompose { claim, .. } => decompose_claim(&f, &claim.claim, recheck),
        CheckArbitrage { .. } => check_arbitrage(&f, recheck),
        Superhedge { claim, numeraire, .. } => superhedge_claim(&f, &claim.claim, *numeraire, recheck),
        Augment { epsilon, .. } => augment(&f, epsilon.epsilon.as_deref(), recheck),
        ExtractScenarios { epsilon, .. } => extract(&f, epsilon.epsilon.as_deref(), recheck),
        VerifyEquivalence { epsilon, .. } => equivalence(&f, epsilon.epsilon.as_deref(), recheck),
        Sweep(_) => unreachable!(),
    }
}

fn scenario_set(f: &Fixture) -> Result<&ScenarioSet, Failure> {
    f.scenarios
        .as_ref()
        .ok_or_else(|| Failure::Input("fixture has no \"densities\"".into()))
}

fn scenarios(f: &Fixture) -> Result<(&ScenarioSet, &Numeraire), Failure> {
    let s = scenario_set(f)?;
    let v = f
        .numeraire
        .as_ref()
        .ok_or_else(|| Failure::Input("fixture has no \"V\" (required when d > 0)".into()))?;
    Ok((s, v))
}

fn market(f: &Fixture) -> Result<&BidAskProcess, Failure> {
    f.market
        .as_ref()
        .ok_or_else(|| Failure::Input("fixture has no bid-ask matrices \"pi\"".into()))
}

fn claim(text: &str, expected: &[usize]) -> Result<Vector, Failure> {
    let x = parse_claim(text).map_err(|e| Failure::Input(format!("--claim: {e}")))?;
    if !expected.contains(&x.len()) {
        let want: Vec<String> = expected.iter().map(usize::to_string).collect();
        return Err(Failure::Input(format!(
            "--claim: expected {} entries, found {}",
            want.join(" or "),
            x.len()
        )));
    }
    Ok(x)
}

fn epsilon(f: &Fixture, arg: Option<&str>) -> Result<Rational, Failure> {
    let e = match arg {
        Some(s) => parse_rational(s).map_err(|e| Failure::Input(format!("--epsilon: {}", e.0)))?,
        None => f.epsilon.clone().unwrap_or_else(|| frac(1, 10)),
    };
    if !e.is_positive() || e >= Rational::one() {
        return Err(Failure::Input(
            "--epsilon: must lie strictly between 0 and 1".into(),
        ));
    }
    Ok(e)
}

/// The market's trading cones, or the step cones of the scenario set.
fn process(f: &Fixture) -> Result<TradingConeProcess, Failure> {
    if let Some(m) = &f.market {
        return Ok(trading_cones(m));
    }
    let (s, v) = scenarios(f)?;
    TradingConeProcess::from_step_cones(f.tree.clone(), &step_cones(s, v)).map_err(Failure::input)
}

fn check_comparison(rc: &mut Recheck, a: &PolyCone, b: &PolyCone, c: &Comparison, what: &str) {
    rc.check(
        a.verify_inclusion(b, &c.left_in_right),
        &format!("{what}: left in right"),
    );
    rc.check(
        b.verify_inclusion(a, &c.right_in_left),
        &format!("{what}: right in left"),
    );
}

fn validate(f: &Fixture) -> Outcome {
    let tree = &f.tree;
    let result = json!({
        "horizon": tree.horizon(),
        "nodes": tree.num_nodes(),
        "leaves": tree.num_leaves(),
        "width": f.width,
        "generators": f.scenarios.as_ref().map(ScenarioSet::len),
        "numeraire": f.numeraire.is_some(),
        "market": f.market.is_some(),
        "epsilon": f.epsilon.as_ref().map(q),
    });
    let mut parts = vec![format!(
        "valid: T = {}, {} nodes, {} leaves, {} asset(s)",
        tree.horizon(),
        tree.num_nodes(),
        tree.num_leaves(),
        f.width
    )];
    if let Some(s) = &f.scenarios {
        parts.push(format!("{} scenario generator(s)", s.len()));
    }
    if f.market.is_some() {
        parts.push("bid-ask market".into());
    }
    Outcome {
        verdict: Some(true),
        result,
        summary: parts.join(", "),
        recheck: None,
    }
}

fn rho(f: &Fixture, claim_text: &str, t: usize, recheck: bool) -> Result<Outcome, Failure> {
    let s = scenario_set(f)?;
    let tree = s.tree();
    let x = claim(claim_text, &[tree.num_leaves()])?;
    let values = rho_with_argmax(s, &x, t).map_err(Failure::input)?;
    let nodes = tree.nodes_at(t);
    let rows: Vec<Value> = nodes
        .iter()
        .zip(&values)
        .map(|(&u, (v, k))| json!({ "node": tree.node(u).id, "value": q(v), "argmax": k }))
        .collect();
    let summary = if values.len() == 1 {
        fmt_rational(&values[0].0)
    } else {
        nodes
            .iter()
            .zip(&values)
            .map(|(&u, (v, _))| format!("{} {}", tree.node(u).id, fmt_rational(v)))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let rc = recheck.then(|| {
        // The reported value is attained by the named generator and no
        // generator charging the node does better.
        let mut rc = Recheck::new();
        for (&u, (v, k)) in nodes.iter().zip(&values) {
            let cond = |m: &Vector| -> Option<Rational> {
                let leaves = tree.node(u).leaves.clone();
                let mass: Rational = leaves.clone().map(|w| &m[w]).sum();
                (!mass.is_zero()).then(|| leaves.map(|w| &m[w] * &x[w]).sum::<Rational>() / mass)
            };
            rc.check(
                cond(&s.masses()[*k]).as_ref() == Some(v),
                "argmax attains the value",
            );
            rc.check(
                s.masses().iter().filter_map(cond).all(|e| &e <= v),
                "no generator exceeds the value",
            );
        }
        rc
    });
    Ok(Outcome {
        verdict: None,
        result: json!({ "t": t, "values": rows }),
        summary,
        recheck: rc,
    })
}

fn compose(f: &Fixture, claim_text: &str) -> Result<Outcome, Failure> {
    let s = scenario_set(f)?;
    let x = claim(claim_text, &[s.tree().num_leaves()])?;
    let c = compose_rho(s, &x).map_err(Failure::input)?;
    let r0 = rho_with_argmax(s, &x, 0).map_err(Failure::input)?[0].0.clone();
    Ok(Outcome {
        verdict: None,
        result: json!({ "composed": q(&c), "rho0": q(&r0), "gap": q(&(&c - &r0)) }),
        summary: format!("composed {} vs rho_0 {}", fmt_rational(&c), fmt_rational(&r0)),
        recheck: None,
    })
}

fn check_stability(f: &Fixture, samples: usize, seed: u64, recheck: bool) -> Result<Outcome, Failure> {
    let (s, v) = scenarios(f)?;
    let rep = is_optionally_stable(s, v, samples, seed);
    let summary = if rep.verdict {
        let details: Vec<&str> = rep.cross_checks.iter().map(|c| c.detail.as_str()).collect();
        if details.is_empty() {
            "optionally stable".to_string()
        } else {
            format!("optionally stable; {}", details.join("; "))
        }
    } else {
        "not optionally stable: the stabilization hull contains a dual element outside the scenario cone"
            .into()
    };
    let rc = recheck.then(|| {
        let mut rc = Recheck::new();
        let d = acceptance_dual_cone(s, v);
        let hull = stabilization_hull(s.tree(), &d, v.width());
        check_comparison(&mut rc, &d, &hull, &rep.certificate, "D against [D]");
        for c in &rep.cross_checks {
            rc.check(c.passed, &c.name);
        }
        rc
    });
    Ok(Outcome {
        verdict: Some(rep.verdict),
        result: to_value(&rep),
        summary,
        recheck: rc,
    })
}

fn check_representability(f: &Fixture, recheck: bool) -> Result<Outcome, Failure> {
    let (s, v) = scenarios(f)?;
    let rep = is_representable(s, v);
    let rc = recheck.then(|| {
        let mut rc = Recheck::new();
        let acc = acceptance_portfolio_cone(s, v);
        let sum = step_cone_sum(s.tree(), &step_cones(s, v));
        check_comparison(
            &mut rc,
            &acc,
            &sum,
            &rep.certificate,
            "acceptance cone against step-cone sum",
        );
        rc
    });
    Ok(Outcome {
        verdict: Some(rep.verdict),
        summary: if rep.verdict {
            "representable: the acceptance cone is the sum of the step cones".into()
        } else {
            "not representable: some acceptable claim is no sum of step-cone portfolios".into()
        },
        result: to_value(&rep),
        recheck: rc,
    })
}

fn decompose_claim(f: &Fixture, claim_text: &str, recheck: bool) -> Result<Outcome, Failure> {
    let (s, v) = scenarios(f)?;
    let l = s.tree().num_leaves();
    let x = claim(claim_text, &[l, l * v.width()])?;
    let target = if x.len() == l && v.width() > 1 {
        DecomposeTarget::Scalar(x)
    } else {
        DecomposeTarget::Portfolio(x)
    };
    let dec = decompose(s, v, &target).map_err(Failure::input)?;
    let rc = recheck.then(|| {
        let mut rc = Recheck::new();
        rc.check(verify_decomposition(s, v, &target, &dec), "decomposition");
        rc
    });
    Ok(Outcome {
        verdict: Some(dec.is_feasible()),
        summary: if dec.is_feasible() {
            "decomposable into step-cone portfolios".into()
        } else {
            "not decomposable: separator attached".into()
        },
        result: to_value(&dec),
        recheck: rc,
    })
}

fn arbitrage_recheck(rc: &mut Recheck, proc: &TradingConeProcess, rep: &ArbitrageReport) {
    if let Some(ps) = &rep.price_system {
        rc.check(verify_price_system(proc, ps), "consistent price system");
    }
    if let Some(w) = &rep.witness {
        rc.check(verify_arbitrage_witness(proc, w), "arbitrage witness");
    }
    rc.check(rep.cross_check.passed, &rep.cross_check.name);
}

fn check_arbitrage(f: &Fixture, recheck: bool) -> Result<Outcome, Failure> {
    let proc = process(f)?;
    let rep = arbitrage_check(&proc);
    let null = null_space_check(&proc);
    let rc = recheck.then(|| {
        let mut rc = Recheck::new();
        arbitrage_recheck(&mut rc, &proc, &rep);
        rc
    });
    let summary = if rep.arbitrage_free {
        format!(
            "arbitrage-free; null strategies {}",
            if null.vector_space {
                "form a vector space"
            } else {
                "do not form a vector space"
            }
        )
    } else {
        format!(
            "arbitrage: attainable claim {}",
            DisplayVec(&rep.witness.as_ref().map(|w| w.claim.clone()).unwrap_or_default())
        )
    };
    Ok(Outcome {
        verdict: Some(rep.arbitrage_free),
        result: json!({ "arbitrage": to_value(&rep), "null_strategies": to_value(&null) }),
        summary,
        recheck: rc,
    })
}

fn superhedge_claim(
    f: &Fixture,
    claim_text: &str,
    numeraire: usize,
    recheck: bool,
) -> Result<Outcome, Failure> {
    let proc = process(f)?;
    let n = proc.tree().num_leaves() * proc.width();
    let x = claim(claim_text, &[n])?;
    let mut rc = recheck.then(Recheck::new);
    match superhedge(&proc, &x, numeraire) {
        Ok(rep) => {
            if let Some(rc) = rc.as_mut() {
                rc.check(verify_superhedge(&proc, &x, &rep), "hedge and dual price system");
            }
            Ok(Outcome {
                verdict: None,
                summary: fmt_rational(&rep.price),
                result: to_value(&rep),
                recheck: rc,
            })
        }
        Err(FtapError::Unhedgeable { separator }) => {
            if let Some(rc) = rc.as_mut() {
                rc.check(verify_unhedgeable(&proc, &x, numeraire, &separator), "separator");
            }
            Ok(Outcome {
                verdict: Some(false),
                summary: format!("no superhedge in numeraire {numeraire}: separator attached"),
                result: json!({ "unhedgeable": { "separator": qv(&separator) } }),
                recheck: rc,
            })
        }
        Err(FtapError::Arbitrage { .. }) => {
            let arb = arbitrage_check(&proc);
            if let Some(rc) = rc.as_mut() {
                arbitrage_recheck(rc, &proc, &arb);
            }
            Ok(Outcome {
                verdict: Some(false),
                summary: "the market admits arbitrage; the price is unbounded below".into(),
                result: json!({ "arbitrage": to_value(&arb) }),
                recheck: rc,
            })
        }
        Err(e) => Err(Failure::input(e)),
    }
}

/// Exit-1 outcome for a market without a strictly consistent price system.
fn arbitrage_outcome(proc: &TradingConeProcess, recheck: bool) -> Outcome {
    let arb = arbitrage_check(proc);
    let rc = recheck.then(|| {
        let mut rc = Recheck::new();
        arbitrage_recheck(&mut rc, proc, &arb);
        rc
    });
    Outcome {
        verdict: Some(false),
        summary: "the market admits no strictly consistent price system".into(),
        result: json!({ "arbitrage": to_value(&arb) }),
        recheck: rc,
    }
}

fn augmented<'a>(
    f: &'a Fixture,
    eps: Option<&str>,
) -> Result<(&'a BidAskProcess, Rational, AugmentedMarket), Failure> {
    let m = market(f)?;
    let e = epsilon(f, eps)?;
    let a = augment_market(m, &e).map_err(Failure::input)?;
    Ok((m, e, a))
}

fn augment(f: &Fixture, eps: Option<&str>, recheck: bool) -> Result<Outcome, Failure> {
    let (m, _, a) = augmented(f, eps)?;
    let proc = trading_cones(m);
    let extension = match consistent_price_system(&proc) {
        CpsOutcome::Consistent(z) if z.strictly_positive => {
            Some(extend_price_system(&z, &a).map_err(|e| Failure::Internal(e.to_string()))?)
        }
        _ => None,
    };
    let holds = a.bracket_holds();
    let rc = recheck.then(|| {
        let mut rc = Recheck::new();
        rc.check(holds, "bracket invariant");
        if let Some(ext) = &extension {
            rc.check(
                ext.martingale
                    && ext.lambda_mean_one
                    && verify_price_system(&a.trading_cones(), &ext.price_system),
                "extended price system",
            );
        }
        rc
    });
    Ok(Outcome {
        verdict: Some(holds),
        summary: format!(
            "augmented tree: {} leaves; bracket invariant {}",
            a.tree.num_leaves(),
            if holds { "holds" } else { "fails" }
        ),
        result: json!({ "augmented": to_value(&a.dump()), "extension": extension.as_ref().map(to_value) }),
        recheck: rc,
    })
}

fn extract(f: &Fixture, eps: Option<&str>, recheck: bool) -> Result<Outcome, Failure> {
    let (m, _, a) = augmented(f, eps)?;
    let ms = match market_scenario_set(&a) {
        Ok(ms) => ms,
        Err(MarketError::ArbitrageInInput) => return Ok(arbitrage_outcome(&trading_cones(m), recheck)),
        Err(e) => return Err(Failure::Internal(e.to_string())),
    };
    let l = a.tree.num_leaves();
    let w = a.width();
    let v_rows: Vec<Value> = (0..l).map(|k| qv(ms.numeraire.at(k))).collect();
    let densities: Vec<Value> = ms.set.densities().iter().map(|d| qv(d)).collect();
    let mut fixture = to_value(&a.tree.to_spec());
    fixture["d"] = json!(w - 1);
    fixture["densities"] = Value::Array(densities.clone());
    fixture["V"] = Value::Array(v_rows.clone());
    let rc = recheck.then(|| {
        let mut rc = Recheck::new();
        let proc = trading_cones(m);
        for mass in &ms.price_systems {
            rc.check(
                PriceSystem::from_terminal_mass(&proc, mass).is_some(),
                "extreme consistent price system",
            );
        }
        rc
    });
    Ok(Outcome {
        verdict: None,
        summary: format!(
            "{} scenario density(ies) on {} augmented leaves{}",
            ms.set.len(),
            l,
            if ms.stabilized { " (stabilized)" } else { "" }
        ),
        result: json!({
            "stabilized": ms.stabilized,
            "price_systems": ms.price_systems.iter().map(|p| qv(p)).collect::<Vec<_>>(),
            "fixture": fixture,
        }),
        recheck: rc,
    })
}

fn equivalence(f: &Fixture, eps: Option<&str>, recheck: bool) -> Result<Outcome, Failure> {
    let (m, e, a) = augmented(f, eps)?;
    let rep = match verify_market_equivalence(m, &e) {
        Ok(r) => r,
        Err(MarketError::ArbitrageInInput) => return Ok(arbitrage_outcome(&trading_cones(m), recheck)),
        Err(e) => return Err(Failure::Internal(e.to_string())),
    };
    let rc = recheck.then(|| {
        let mut rc = Recheck::new();
        match market_scenario_set(&a) {
            Ok(ms) => {
                let left = trading_cones(m).attainable_cone();
                let right = measurable_acceptance_cone(&a, &ms);
                check_comparison(
                    &mut rc,
                    &left,
                    &right,
                    &rep.certificate,
                    "attainable against acceptable",
                );
            }
            Err(_) => rc.check(false, "scenario extraction"),
        }
        rc
    });
    Ok(Outcome {
        verdict: Some(rep.verdict),
        summary: if rep.verdict {
            "equivalent: attainable claims equal the extracted acceptance cone".into()
        } else {
            "not equivalent: inclusion certificate attached".into()
        },
        result: to_value(&rep),
        recheck: rc,
    })
}
