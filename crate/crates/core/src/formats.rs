//! JSON file formats. Rationals are always `"num/den"` strings; JSON numbers
//! are rejected wherever a probability is expected. Output objects use
//! sorted keys.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::expost::ExpostResult;
use crate::fractional::FractionalReport;
use crate::gen::X3CInstance;
use crate::instance::{validate_instance, Instance, ValidationReport, WeakOrder};
use crate::matching::{DeterministicMatching, StabilityReport};
use crate::randmatch::{Decomposition, RandomMatching};
use crate::rational::{self, serde_rat, Rat};
use crate::robust::{RobustResult, RobustWitness};

fn parse_err(e: serde_json::Error) -> Error {
    Error::Parse(e.to_string())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    agents: Vec<String>,
    items: Vec<String>,
    #[serde(default)]
    preferences: BTreeMap<String, Vec<Vec<String>>>,
    #[serde(default)]
    priorities: BTreeMap<String, Vec<Vec<String>>>,
    #[serde(default)]
    complete: bool,
}

/// Reads an instance without validating it.
pub fn parse_instance_unchecked(text: &str) -> Result<Instance> {
    let f: InstanceFile = serde_json::from_str(text).map_err(parse_err)?;
    let orders = |m: BTreeMap<String, Vec<Vec<String>>>| -> BTreeMap<String, WeakOrder> {
        m.into_iter().map(|(k, v)| (k, WeakOrder::new(v))).collect()
    };
    Ok(Instance::new(f.agents, f.items, orders(f.preferences), orders(f.priorities), f.complete))
}

/// Reads an instance and rejects it unless it validates.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let inst = parse_instance_unchecked(text)?;
    let report = validate_instance(&inst);
    if !report.ok {
        let details: Vec<String> = report.violations.iter().map(|v| format!("{}: {}", v.code, v.detail)).collect();
        return Err(Error::InvalidInstance(details.join("; ")));
    }
    Ok(inst)
}

pub fn instance_to_json(inst: &Instance) -> Value {
    let orders = |m: &BTreeMap<String, WeakOrder>| -> BTreeMap<String, Vec<Vec<String>>> {
        m.iter().map(|(k, v)| (k.clone(), v.tiers().to_vec())).collect()
    };
    json!({
        "agents": inst.agents(),
        "items": inst.items(),
        "preferences": orders(inst.prefs()),
        "priorities": orders(inst.prios()),
        "complete": inst.complete_flag(),
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryFile {
    agent: String,
    item: String,
    #[serde(with = "serde_rat")]
    p: Rat,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixFile {
    n: usize,
    entries: Vec<EntryFile>,
}

fn read_matrix(text: &str) -> Result<MatrixFile> {
    serde_json::from_str(text).map_err(parse_err)
}

/// Reads a matrix over the instance's agents and items; `n` must be the
/// number of agents.
pub fn parse_matrix(text: &str, inst: &Instance) -> Result<RandomMatching> {
    let f = read_matrix(text)?;
    if f.n != inst.n_agents() {
        return Err(Error::DimensionMismatch { expected: inst.n_agents(), found: f.n });
    }
    let triples: Vec<(String, String, Rat)> = f.entries.into_iter().map(|e| (e.agent, e.item, e.p)).collect();
    RandomMatching::from_named(inst, &triples)
}

/// Reads a square matrix without an instance. Agents and items are the
/// names used by the entries, sorted; there must be exactly `n` of each.
pub fn parse_matrix_standalone(text: &str) -> Result<RandomMatching> {
    let f = read_matrix(text)?;
    let mut agents: Vec<String> = f.entries.iter().map(|e| e.agent.clone()).collect();
    let mut items: Vec<String> = f.entries.iter().map(|e| e.item.clone()).collect();
    agents.sort();
    agents.dedup();
    items.sort();
    items.dedup();
    if agents.len() != f.n || items.len() != f.n {
        return Err(Error::DimensionMismatch { expected: f.n, found: agents.len().max(items.len()) });
    }
    let mut entries = vec![vec![rational::zero(); f.n]; f.n];
    for e in f.entries {
        let i = agents.binary_search(&e.agent).expect("collected");
        let o = items.binary_search(&e.item).expect("collected");
        if rational::is_positive(&entries[i][o]) {
            return Err(Error::InvalidMatrix(format!("duplicate entry ({}, {})", e.agent, e.item)));
        }
        entries[i][o] = e.p;
    }
    RandomMatching::new(agents, items, entries)
}

/// Nonzero entries in row-major order.
pub fn matrix_to_json(p: &RandomMatching) -> Value {
    let mut entries = Vec::new();
    for (i, a) in p.agents().iter().enumerate() {
        for (o, x) in p.items().iter().enumerate() {
            let v = p.get(i, o);
            if !v.eq(&rational::zero()) {
                entries.push(json!({"agent": a, "item": x, "p": rational::format_rat(v)}));
            }
        }
    }
    json!({"n": p.n(), "entries": entries})
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatchingFile {
    matching: BTreeMap<String, String>,
}

pub fn parse_matching(text: &str, inst: &Instance) -> Result<DeterministicMatching> {
    let f: MatchingFile = serde_json::from_str(text).map_err(parse_err)?;
    let pairs: Vec<(String, String)> = f.matching.into_iter().collect();
    DeterministicMatching::from_pairs(inst, &pairs)
}

fn matching_map(m: &DeterministicMatching, agents: &[String], items: &[String]) -> Value {
    let map: BTreeMap<&str, &str> = m.named_pairs(agents, items).into_iter().collect();
    json!(map)
}

/// `{"matching": {agent: item}}`.
pub fn matching_to_json(m: &DeterministicMatching, agents: &[String], items: &[String]) -> Value {
    json!({"matching": matching_map(m, agents, items)})
}

pub fn decomposition_to_json(d: &Decomposition) -> Value {
    let terms: Vec<Value> = d
        .terms
        .iter()
        .map(|t| {
            json!({
                "weight": rational::format_rat(&t.weight),
                "matching": matching_map(&t.matching, &d.agents, &d.items),
                "weakly_stable": t.weakly_stable,
                "strongly_stable": t.strongly_stable,
            })
        })
        .collect();
    json!({"terms": terms, "stable_probability": rational::format_rat(&d.stable_probability)})
}

/// Reads an X3C instance and validates it.
pub fn parse_x3c(text: &str) -> Result<X3CInstance> {
    let x: X3CInstance = serde_json::from_str(text).map_err(parse_err)?;
    x.validate()?;
    Ok(x)
}

pub fn x3c_to_json(x: &X3CInstance) -> Value {
    json!({"elements": x.elements, "sets": x.sets})
}

pub fn validation_to_json(r: &ValidationReport) -> Value {
    let violations: Vec<Value> = r.violations.iter().map(|v| json!({"code": v.code, "detail": v.detail})).collect();
    json!({"ok": r.ok, "violations": violations})
}

pub fn stability_to_json(r: &StabilityReport) -> Value {
    let pairs: Vec<Value> = r
        .blocking_pairs
        .iter()
        .map(|b| json!({"agent": b.agent_name, "item": b.item_name, "kind": b.kind.as_str()}))
        .collect();
    json!({"stable": r.stable, "blocking_pairs": pairs})
}

pub fn fractional_to_json(r: &FractionalReport) -> Value {
    let violations: Vec<Value> = r
        .violations
        .iter()
        .map(|v| {
            json!({
                "agent": v.agent,
                "item": v.item,
                "lhs": rational::format_rat(&v.lhs),
                "condition": v.condition.as_str(),
            })
        })
        .collect();
    json!({"satisfied": r.satisfied, "violations": violations})
}

pub fn witness_to_json(w: &RobustWitness, agents: &[String], items: &[String]) -> Value {
    json!({"agent": w.agent, "item": w.item, "matching": matching_map(&w.matching, agents, items)})
}

pub fn robust_to_json(r: &RobustResult, agents: &[String], items: &[String]) -> Value {
    let witness = r.witness.as_ref().map_or(Value::Null, |w| witness_to_json(w, agents, items));
    json!({"robust": r.robust, "witness": witness})
}

pub fn expost_to_json(r: &ExpostResult) -> Value {
    json!({
        "max_stable_probability": rational::format_rat(&r.max_stable_probability),
        "stable_probability": rational::format_rat(&r.decomposition.stable_probability),
        "is_expost_stable": r.is_expost_stable,
        "columns": r.columns,
        "decomposition": decomposition_to_json(&r.decomposition),
    })
}

/// `{"error": {"kind", "message"}}`.
pub fn error_to_json(e: &Error) -> Value {
    json!({"error": {"kind": e.kind(), "message": e.to_string()}})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{fixtures, gen_example1};
    use crate::rational::rat;

    #[test]
    fn instance_round_trip() {
        let ex = gen_example1();
        let text = instance_to_json(&ex.instance).to_string();
        assert_eq!(parse_instance(&text).unwrap(), ex.instance);
    }

    #[test]
    fn matrix_round_trip_and_standalone() {
        let ex = gen_example1();
        let text = matrix_to_json(&ex.p_improved).to_string();
        assert_eq!(parse_matrix(&text, &ex.instance).unwrap(), ex.p_improved);
        assert_eq!(parse_matrix_standalone(&text).unwrap(), ex.p_improved);
    }

    #[test]
    fn floats_are_rejected() {
        let inst = fixtures::agree2();
        let text = r#"{"n":2,"entries":[{"agent":"a","item":"x","p":0.5}]}"#;
        assert!(matches!(parse_matrix(text, &inst), Err(Error::Parse(_))));
        let text = r#"{"n":2,"entries":[{"agent":"a","item":"x","p":"0.5"}]}"#;
        assert!(matches!(parse_matrix(text, &inst), Err(Error::Parse(_))));
    }

    #[test]
    fn matching_round_trip() {
        let ex = gen_example1();
        let v = matching_to_json(&ex.m1, ex.instance.agents(), ex.instance.items());
        assert_eq!(v["matching"]["b"], "o4");
        assert_eq!(parse_matching(&v.to_string(), &ex.instance).unwrap(), ex.m1);
    }

    #[test]
    fn invalid_instance_is_an_error() {
        let text = r#"{"agents":["a"],"items":["x"],"preferences":{"a":[["z"]]},"priorities":{},"complete":false}"#;
        assert!(matches!(parse_instance(text), Err(Error::InvalidInstance(_))));
        assert!(parse_instance_unchecked(text).is_ok());
    }

    #[test]
    fn decomposition_json_shape() {
        let inst = fixtures::agree2();
        let (id, swap) = fixtures::both_matchings_2();
        let d = Decomposition::new(
            inst.agents().to_vec(),
            inst.items().to_vec(),
            vec![(rat(1, 2), id), (rat(1, 2), swap)],
            Some(&inst),
        );
        let v = decomposition_to_json(&d);
        assert_eq!(v["stable_probability"], "1/2");
        assert_eq!(v["terms"][0]["weight"], "1/2");
        assert_eq!(v["terms"][0]["weakly_stable"], true);
        assert_eq!(v["terms"][1]["matching"]["a"], "y");
    }
}
