//! Fixture files: a tree plus optional scenario set, numeraires, bid-ask
//! matrices and the augmentation parameter, all in one JSON object.
//!
//! ```json
//! {"T": 1,
//!  "nodes": [{"id": "u", "parent": "root", "time": 1, "prob": "1/2"}, ...],
//!  "densities": [["2", "0"], ...],
//!  "d": 1, "V": [["1", "3/2"], ["1", "1"]],
//!  "pi": [{"node": "root", "matrix": [["1", "2"], ["1", "1"]]}, ...],
//!  "epsilon": "1/10"}
//! ```
//!
//! `densities` may also be `"all"`, `"P"`, `{"avar": "1/2"}` or
//! `{"X": [[...per leaf...]], "boxes": [{"node": "u", "lower": [...], "upper": [...]}]}`.

use std::sync::Arc;

use num_traits::{One, Signed};
use serde::Deserialize;

use crate::market::{BidAskProcess, MarketError};
use crate::rational::{parse_rational, serde_q, serde_qmat, serde_qvec, Rational, Vector};
use crate::risk::{generic_scenario_set, NodeBox, Numeraire, RiskError, ScenarioSet};
use crate::tree::{FilteredTree, TreeError, TreeSpec};

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error("JSON error at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("tree: {0}")]
    Tree(#[from] TreeError),
    #[error("scenario set: {0}")]
    Risk(#[from] RiskError),
    #[error("market: {0}")]
    Market(#[from] MarketError),
    #[error("{field}: {reason}")]
    Schema { field: String, reason: String },
}

impl From<serde_json::Error> for FixtureError {
    fn from(e: serde_json::Error) -> Self {
        FixtureError::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

fn schema(field: &str, reason: impl Into<String>) -> FixtureError {
    FixtureError::Schema {
        field: field.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct BoxSpec {
    pub node: String,
    #[serde(with = "serde_qvec")]
    pub lower: Vector,
    #[serde(with = "serde_qvec")]
    pub upper: Vector,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum DensitySpec {
    Named(String),
    List(#[serde(with = "serde_qmat")] Vec<Vector>),
    Avar {
        #[serde(with = "serde_q")]
        avar: Rational,
    },
    Generic {
        #[serde(rename = "X", with = "serde_qmat")]
        x: Vec<Vector>,
        boxes: Vec<BoxSpec>,
    },
}

#[derive(Debug, Clone, Deserialize)]
pub struct PiSpec {
    pub node: String,
    #[serde(with = "serde_qmat")]
    pub matrix: Vec<Vector>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct FixtureSpec {
    #[serde(flatten)]
    pub tree: TreeSpec,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub densities: Option<DensitySpec>,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default, rename = "V", with = "opt_qmat")]
    pub v: Option<Vec<Vector>>,
    #[serde(default)]
    pub pi: Option<Vec<PiSpec>>,
    #[serde(default, with = "opt_q")]
    pub epsilon: Option<Rational>,
}

mod opt_q {
    use super::*;
    use serde::Deserializer;

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        serde_q::deserialize(d).map(Some)
    }
}

mod opt_qmat {
    use super::*;
    use serde::Deserializer;

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<Vector>>, D::Error> {
        serde_qmat::deserialize(d).map(Some)
    }
}

/// A parsed and validated fixture.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub tree: Arc<FilteredTree>,
    pub description: Option<String>,
    pub scenarios: Option<ScenarioSet>,
    /// From `V`, or cash when `d = 0` and no `V` is given.
    pub numeraire: Option<Numeraire>,
    /// `d + 1`.
    pub width: usize,
    pub market: Option<BidAskProcess>,
    pub epsilon: Option<Rational>,
}

pub fn parse_fixture(text: &str) -> Result<Fixture, FixtureError> {
    let spec: FixtureSpec = serde_json::from_str(text)?;
    build_fixture(&spec)
}

pub fn build_fixture(spec: &FixtureSpec) -> Result<Fixture, FixtureError> {
    let tree = Arc::new(FilteredTree::build(&spec.tree)?);
    let l = tree.num_leaves();
    let width = match (spec.d, &spec.v) {
        (Some(d), _) => d + 1,
        (None, Some(v)) => v.first().map_or(1, Vec::len),
        (None, None) => spec
            .pi
            .as_ref()
            .and_then(|p| p.first())
            .map_or(1, |p| p.matrix.len()),
    };
    let numeraire = match &spec.v {
        Some(v) => {
            if v.len() != l {
                return Err(schema("V", format!("expected {l} leaves, found {}", v.len())));
            }
            if let Some(k) = v.iter().position(|row| row.len() != width) {
                return Err(schema(
                    "V",
                    format!("leaf {k} has the wrong number of components"),
                ));
            }
            Some(Numeraire::new(l, width, v.concat())?)
        }
        None if width == 1 => Some(Numeraire::cash(l)),
        None => None,
    };
    let scenarios = match &spec.densities {
        None => None,
        Some(DensitySpec::Named(name)) => match name.as_str() {
            "all" => Some(ScenarioSet::all_measures(tree.clone())),
            "P" => Some(ScenarioSet::singleton_p(tree.clone())),
            other => return Err(schema("densities", format!("unknown set {other:?}"))),
        },
        Some(DensitySpec::List(dens)) => Some(ScenarioSet::new(tree.clone(), dens.clone())?),
        Some(DensitySpec::Avar { avar }) => {
            if !avar.is_positive() || avar > &Rational::one() {
                return Err(schema("densities.avar", "level must lie in (0, 1]"));
            }
            Some(ScenarioSet::avar(tree.clone(), avar)?)
        }
        Some(DensitySpec::Generic { x, boxes }) => {
            if x.len() != l {
                return Err(schema("densities.X", format!("expected {l} leaves")));
            }
            let xw = x.first().map_or(1, Vec::len);
            let mut nb = Vec::with_capacity(boxes.len());
            for b in boxes {
                let node = tree
                    .find(&b.node)
                    .ok_or_else(|| schema("densities.boxes", format!("unknown node {:?}", b.node)))?;
                nb.push(NodeBox {
                    node,
                    lower: b.lower.clone(),
                    upper: b.upper.clone(),
                });
            }
            Some(generic_scenario_set(tree.clone(), &x.concat(), xw, &nb)?.set)
        }
    };
    let market = match &spec.pi {
        None => None,
        Some(entries) => {
            let mut matrices: Vec<Option<Vec<Vector>>> = vec![None; tree.num_nodes()];
            for e in entries {
                let u = tree
                    .find(&e.node)
                    .ok_or_else(|| schema("pi", format!("unknown node {:?}", e.node)))?;
                if matrices[u].replace(e.matrix.clone()).is_some() {
                    return Err(schema("pi", format!("node {:?} listed twice", e.node)));
                }
            }
            let mut full = Vec::with_capacity(matrices.len());
            for (u, m) in matrices.into_iter().enumerate() {
                full.push(
                    m.ok_or_else(|| schema("pi", format!("no matrix for node {:?}", tree.node(u).id)))?,
                );
            }
            Some(BidAskProcess::new(tree.clone(), width, full)?)
        }
    };
    if let Some(e) = &spec.epsilon {
        if !e.is_positive() || e >= &Rational::one() {
            return Err(schema("epsilon", "must lie strictly between 0 and 1"));
        }
    }
    Ok(Fixture {
        tree,
        description: spec.description.clone(),
        scenarios,
        numeraire,
        width,
        market,
        epsilon: spec.epsilon.clone(),
    })
}

/// A claim given as a flat JSON array, or as one array per leaf. Entries
/// are integers or `"num/den"` strings.
pub fn parse_claim(text: &str) -> Result<Vector, FixtureError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let mut out = Vec::new();
    flatten_claim(&value, &mut out)?;
    Ok(out)
}

fn flatten_claim(v: &serde_json::Value, out: &mut Vector) -> Result<(), FixtureError> {
    match v {
        serde_json::Value::Array(items) => items.iter().try_for_each(|i| flatten_claim(i, out)),
        serde_json::Value::String(s) => {
            out.push(parse_rational(s).map_err(|e| schema("claim", e.0))?);
            Ok(())
        }
        serde_json::Value::Number(n) => {
            let q = n
                .as_i64()
                .map(crate::rational::int)
                .ok_or_else(|| schema("claim", format!("{n} is not an integer; use \"p/q\"")))?;
            out.push(q);
            Ok(())
        }
        other => Err(schema("claim", format!("unexpected value {other}"))),
    }
}
