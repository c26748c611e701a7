//! Randomized property battery. Instance `k` draws from its own ChaCha
//! stream, so reports do not depend on the thread count.

use std::collections::BTreeMap;
use std::sync::Arc;

use clap::{Args, ValueEnum};
use conerisk_core::cones::{Comparison, PolyCone};
use conerisk_core::ftap::{
    arbitrage_check, consistent_price_system, superhedge, verify_price_system, verify_superhedge, CpsOutcome,
    TradingConeProcess,
};
use conerisk_core::market::{augment_market, extend_price_system, trading_cones, BidAskProcess};
use conerisk_core::rational::{frac, int, DisplayVec};
use conerisk_core::risk::{
    acceptance_dual_cone, acceptance_portfolio_cone, decompose, is_optionally_stable, is_representable,
    optional_preimage, stabilization_hull, step_cone_sum, step_cones, verify_decomposition, DecomposeTarget,
    Numeraire, ScenarioSet,
};
use conerisk_core::sample::{random_claim, random_market, random_numeraire, random_scenarios, random_tree};
use conerisk_core::tree::FilteredTree;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::commands::qv;
use crate::{Failure, Outcome};

#[derive(Args, Clone, Serialize)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub instances: usize,
    /// Largest horizon drawn; 0 gives single-node trees.
    #[arg(long, default_value_t = 2)]
    pub horizon: usize,
    /// At most 16.
    #[arg(long, default_value_t = 6)]
    pub max_leaves: usize,
    /// Largest number of extra assets `d`, at most 2.
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    /// Largest number of scenario generators, at most 12.
    #[arg(long, default_value_t = 4)]
    pub generators: usize,
    #[arg(long, value_enum, default_value_t = Recipe::Random)]
    pub recipe: Recipe,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Recipe {
    /// Random finite scenario sets.
    Random,
    /// Average value at risk at level 1/2 on two-period binary trees with a
    /// heavy first branch, which is never stable.
    Unstable,
}

const PROPERTIES: [&str; 6] = [
    "bipolar",
    "acceptance-dual",
    "step-cone-duality",
    "three-way",
    "ftap-duality",
    "augmentation",
];

#[derive(Default)]
struct InstanceResult {
    /// Property name to outcome; `Err` carries the counterexample.
    outcomes: Vec<(&'static str, Result<(), String>)>,
    verdicts: Option<(bool, bool, bool)>,
    spec: Value,
}

fn validate(args: &SweepArgs) -> Result<(), Failure> {
    let bad = |m: &str| Err(Failure::Input(m.into()));
    if args.max_leaves == 0 || args.max_leaves > 16 {
        return bad("--max-leaves must lie in 1..=16");
    }
    if args.d > 2 {
        return bad("--d must be at most 2");
    }
    if args.generators == 0 || args.generators > 12 {
        return bad("--generators must lie in 1..=12");
    }
    if args.horizon > 4 {
        return bad("--horizon must be at most 4");
    }
    Ok(())
}

pub fn run(args: &SweepArgs) -> Result<Outcome, Failure> {
    validate(args)?;
    let results: Vec<InstanceResult> = (0..args.instances)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            rng.set_stream(k as u64);
            instance(args, &mut rng)
        })
        .collect();

    let mut counts: BTreeMap<&str, (usize, usize)> = PROPERTIES.iter().map(|&p| (p, (0, 0))).collect();
    let mut counterexamples = Vec::new();
    let mut verdicts = BTreeMap::new();
    for (k, r) in results.iter().enumerate() {
        for (name, outcome) in &r.outcomes {
            let c = counts.get_mut(name).expect("known property");
            c.0 += 1;
            match outcome {
                Ok(()) => c.1 += 1,
                Err(detail) => counterexamples.push(json!({
                    "instance": k,
                    "property": name,
                    "detail": detail,
                    "fixture": r.spec,
                })),
            }
        }
        if let Some((a, _, _)) = r.verdicts {
            *verdicts
                .entry(if a { "stable" } else { "unstable" })
                .or_insert(0usize) += 1;
        }
    }
    let properties: Vec<Value> = counts
        .iter()
        .map(|(name, (checked, passed))| json!({ "name": name, "checked": checked, "passed": passed }))
        .collect();
    let ok = counterexamples.is_empty();
    let summary = format!(
        "{} instance(s): {}; three-way verdicts {}",
        args.instances,
        if ok {
            "all properties pass".to_string()
        } else {
            format!("{} counterexample(s)", counterexamples.len())
        },
        verdicts
            .iter()
            .map(|(k, v)| format!("{v} {k}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    Ok(Outcome {
        verdict: Some(ok),
        result: json!({
            "instances": args.instances,
            "properties": properties,
            "verdicts": verdicts,
            "counterexamples": counterexamples,
        }),
        summary,
        recheck: None,
    })
}

fn fixture_spec(tree: &FilteredTree, s: &ScenarioSet, v: &Numeraire) -> Value {
    let mut spec = serde_json::to_value(tree.to_spec()).expect("tree specs serialize");
    spec["d"] = json!(v.width() - 1);
    spec["densities"] = Value::Array(s.densities().iter().map(|d| qv(d)).collect());
    spec["V"] = Value::Array((0..tree.num_leaves()).map(|k| qv(v.at(k))).collect());
    spec
}

/// Two-period binary tree whose first branch has probability at least 1/2,
/// with `ρ = AVaR_{1/2}` and cash as the only numéraire.
fn unstable_instance(rng: &mut ChaCha8Rng) -> (Arc<FilteredTree>, ScenarioSet, Numeraire) {
    use conerisk_core::tree::{NodeSpec, TreeSpec};
    let p = |rng: &mut ChaCha8Rng, lo: i64| frac(rng.gen_range(lo..=5), 6);
    let mut nodes = Vec::new();
    let first = p(rng, 3);
    for (id, prob) in [("u", first.clone()), ("d", int(1) - first)] {
        nodes.push(NodeSpec {
            id: id.into(),
            parent: Some("root".into()),
            time: 1,
            prob: Some(prob),
        });
        let q = p(rng, 1);
        for (c, prob) in [("1", q.clone()), ("2", int(1) - q)] {
            nodes.push(NodeSpec {
                id: format!("{id}{c}"),
                parent: Some(id.into()),
                time: 2,
                prob: Some(prob),
            });
        }
    }
    let tree = Arc::new(FilteredTree::build(&TreeSpec { horizon: 2, nodes }).expect("valid tree"));
    let s = ScenarioSet::avar(tree.clone(), &frac(1, 2)).expect("valid level");
    let v = Numeraire::cash(tree.num_leaves());
    (tree, s, v)
}

fn same(a: &PolyCone, b: &PolyCone, c: &Comparison) -> bool {
    c.equal && certificates_hold(a, b, c)
}

fn instance(args: &SweepArgs, rng: &mut ChaCha8Rng) -> InstanceResult {
    let (tree, s, v) = match args.recipe {
        Recipe::Random => {
            let tree = random_tree(rng, args.horizon, args.max_leaves, 3);
            let k = rng.gen_range(1..=args.generators);
            let s = random_scenarios(rng, &tree, k);
            let w = rng.gen_range(1..=args.d + 1);
            let v = random_numeraire(rng, tree.num_leaves(), w);
            (tree, s, v)
        }
        Recipe::Unstable => unstable_instance(rng),
    };
    let mut r = InstanceResult {
        spec: fixture_spec(&tree, &s, &v),
        ..Default::default()
    };
    let w = v.width();
    let d = acceptance_dual_cone(&s, &v);

    let bidual = d.dual().dual();
    let c = bidual.compare(&d).expect("same space");
    r.outcomes.push((
        "bipolar",
        if same(&bidual, &d, &c) {
            Ok(())
        } else {
            Err("D** differs from D".into())
        },
    ));

    let acc = acceptance_portfolio_cone(&s, &v);
    let g = acc.generators();
    let polar = PolyCone::from_facets(acc.dim(), g.rays.clone(), g.lineality.clone()).expect("same space");
    let c = polar.compare(&d).expect("same space");
    r.outcomes.push((
        "acceptance-dual",
        if same(&polar, &d, &c) {
            Ok(())
        } else {
            Err("dual of the acceptance cone differs from the generated cone".into())
        },
    ));

    let steps = step_cones(&s, &v);
    let step_duality = (0..=tree.horizon()).try_for_each(|t| {
        let mut rays = Vec::new();
        let mut lin = Vec::new();
        for &u in tree.nodes_at(t) {
            let g = steps.at(u).generators();
            rays.extend(g.rays.iter().map(|x| tree.embed_node(u, x)));
            lin.extend(g.lineality.iter().map(|x| tree.embed_node(u, x)));
        }
        let k = PolyCone::from_generators_with_lineality(acc.dim(), rays, lin).expect("same space");
        let rhs = optional_preimage(&tree, &d, w, t).dual();
        let c = k.compare(&rhs).expect("same space");
        if same(&k, &rhs, &c) {
            Ok(())
        } else {
            Err(format!("K_{t} differs from the dual of the optional pre-image"))
        }
    });
    r.outcomes.push(("step-cone-duality", step_duality));

    let stab = is_optionally_stable(&s, &v, 5, rng.gen());
    let hull = stabilization_hull(&tree, &d, w);
    let rep = is_representable(&s, &v);
    let sum = step_cone_sum(&tree, &steps);
    let mut decomposable = true;
    let mut dec_ok = true;
    for g in acc.all_generators() {
        let target = DecomposeTarget::Portfolio(g);
        match decompose(&s, &v, &target) {
            Ok(dec) => {
                dec_ok &= verify_decomposition(&s, &v, &target, &dec);
                decomposable &= dec.is_feasible();
            }
            Err(_) => dec_ok = false,
        }
    }
    let verdicts = (stab.verdict, rep.verdict, decomposable);
    let three_way = if !certificates_hold(&d, &hull, &stab.certificate)
        || !certificates_hold(&acc, &sum, &rep.certificate)
    {
        Err("a certificate does not re-verify".into())
    } else if !dec_ok {
        Err("a decomposition certificate does not re-verify".into())
    } else if stab.cross_checks.iter().any(|c| !c.passed) {
        Err("random pasting left the scenario set".into())
    } else if !(verdicts.0 == verdicts.1 && verdicts.1 == verdicts.2) {
        Err(format!(
            "stable {}, representable {}, decomposable {}",
            verdicts.0, verdicts.1, verdicts.2
        ))
    } else {
        Ok(())
    };
    r.outcomes.push(("three-way", three_way));
    r.verdicts = Some(verdicts);

    let proc = TradingConeProcess::from_step_cones(tree.clone(), &steps).expect("step cones allow disposal");
    r.outcomes.push(("ftap-duality", ftap(&proc, rng)));

    if args.recipe == Recipe::Random {
        // Markets are kept small: augmentation multiplies leaves by 2^d.
        let d = rng.gen_range(0..=args.d);
        let mtree = random_tree(rng, args.horizon.min(2), if d == 2 { 2 } else { 4 }, 2);
        let market = random_market(rng, &mtree, d);
        r.outcomes.push(("augmentation", augmentation(&market)));
    }
    r
}

/// Verifies both inclusion certificates, whatever the verdict.
fn certificates_hold(a: &PolyCone, b: &PolyCone, c: &Comparison) -> bool {
    a.verify_inclusion(b, &c.left_in_right) && b.verify_inclusion(a, &c.right_in_left)
}

fn ftap(proc: &TradingConeProcess, rng: &mut ChaCha8Rng) -> Result<(), String> {
    let arb = arbitrage_check(proc);
    if !arb.arbitrage_free || !arb.cross_check.passed {
        return Err("step cones admit arbitrage".into());
    }
    let n = proc.tree().num_leaves() * proc.width();
    let x = random_claim(rng, n, 5);
    let rep = superhedge(proc, &x, 0).map_err(|e| format!("superhedge {}: {e}", DisplayVec(&x)))?;
    if rep.price != rep.dual.value || !verify_superhedge(proc, &x, &rep) {
        return Err(format!("superhedge {}: primal and dual disagree", DisplayVec(&x)));
    }
    Ok(())
}

fn augmentation(market: &BidAskProcess) -> Result<(), String> {
    let a = augment_market(market, &frac(1, 10)).map_err(|e| e.to_string())?;
    if !a.bracket_holds() {
        return Err("bracket invariant fails".into());
    }
    let proc = trading_cones(market);
    let CpsOutcome::Consistent(z) = consistent_price_system(&proc) else {
        return Err("no consistent price system".into());
    };
    let ext = extend_price_system(&z, &a).map_err(|e| e.to_string())?;
    if !ext.martingale || !ext.lambda_mean_one || !verify_price_system(&a.trading_cones(), &ext.price_system)
    {
        return Err("extended price system is not a consistent martingale".into());
    }
    Ok(())
}
