//! WebAssembly bindings for the browser demo. Every export takes and
//! returns JSON strings; errors come back as JavaScript exceptions.

use omlab::beta_partition;
use omlab::bundled;
use omlab::graph::{Digraph, NodeLabels};
use omlab::io::{family_to_json, parse_family};
use omlab::model::{generate_bounded_omissions, is_convex, EventFamily, OmissionMetric};
use omlab::oracle::{min_consensus_rounds, verify_chain, OracleOutcome};
use omlab::solvability::{broadcast_rounds, check_broadcastable, check_consensus, DEFAULT_GAME_NODE_LIMIT};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Generated families above this size are refused.
const FAMILY_CAP: usize = 4096;
/// Execution budget for the in-browser protocol search.
const ORACLE_BUDGET: u64 = 1 << 18;

pub fn bundled_json(name: &str) -> Result<String, String> {
    bundled::family(name).map(|f| family_to_json(&f)).ok_or_else(|| format!("unknown example {name}"))
}

pub fn generate_json(shape: &str, size: usize, f: usize, metric: &str) -> Result<String, String> {
    let graph = match shape {
        "complete" => Digraph::complete(size),
        "cycle" => Digraph::cycle(size),
        "hypercube" => Digraph::hypercube(size),
        other => return Err(format!("unknown shape {other}")),
    }
    .map_err(|e| e.to_string())?;
    let metric: OmissionMetric = metric.parse()?;
    let labels = NodeLabels::numeric(graph.node_count());
    let family = generate_bounded_omissions(&graph, &labels, f, metric, FAMILY_CAP).map_err(|e| e.to_string())?;
    Ok(family_to_json(&family))
}

fn load(text: &str) -> Result<EventFamily, String> {
    parse_family(text).map_err(|e| e.to_string())
}

pub fn analyze_json(family: &str) -> Result<String, String> {
    let family = load(family)?;
    let labels = family.labels();
    let rounds = if family.node_count() <= DEFAULT_GAME_NODE_LIMIT {
        (0..family.node_count())
            .map(|u| {
                broadcast_rounds(&family, u, DEFAULT_GAME_NODE_LIMIT)
                    .map(|r| json!({ "node": labels.get(u), "rounds": r.finite() }))
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?
    } else {
        Vec::new()
    };
    let events: Vec<_> = (0..family.len())
        .map(|i| {
            json!({
                "name": family.name(i),
                "arcs": family.event(i).arcs().map(|(s, t)| [labels.get(s), labels.get(t)]).collect::<Vec<_>>(),
                "sources": family.sources_of(i).iter().map(|v| labels.get(v)).collect::<Vec<_>>(),
            })
        })
        .collect();
    let consensus = check_consensus(&family);
    let broadcast = check_broadcastable(&family);
    let value = json!({
        "nodes": labels.as_slice(),
        "events": events,
        "convex": is_convex(&family).is_convex(),
        "consensus": consensus.report(&family),
        "consensus_text": consensus.explain(&family),
        "broadcast": broadcast.report(&family),
        "broadcast_rounds": rounds,
        "beta": beta_partition(&family).report(&family),
    });
    Ok(value.to_string())
}

pub fn oracle_json(family: &str, max_horizon: usize) -> Result<String, String> {
    let family = load(family)?;
    let result = min_consensus_rounds(&family, max_horizon, ORACLE_BUDGET).map_err(|e| e.to_string())?;
    let mut report = result.report(&family);
    if let OracleOutcome::UnsolvableUpTo { chain, .. } = &result.outcome {
        report["chain_text"] = json!(chain.display(&family));
        report["chain_verified"] = json!(verify_chain(chain, &family));
    }
    Ok(report.to_string())
}

#[wasm_bindgen]
pub fn bundled_family(name: &str) -> Result<String, JsValue> {
    bundled_json(name).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn generate(shape: &str, size: usize, f: usize, metric: &str) -> Result<String, JsValue> {
    generate_json(shape, size, f, metric).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn analyze(family: &str) -> Result<String, JsValue> {
    analyze_json(family).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn search_consensus(family: &str, max_horizon: usize) -> Result<String, JsValue> {
    oracle_json(family, max_horizon).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analyze_bundled() {
        let text = bundled_json("H-2node").unwrap();
        let v: serde_json::Value = serde_json::from_str(&analyze_json(&text).unwrap()).unwrap();
        assert_eq!(v["consensus"]["answer"], "NecessaryConditionHolds");
        assert_eq!(v["beta"]["classes"].as_array().unwrap().len(), 2);
        assert_eq!(v["events"][0]["sources"], json!(["black"]));
    }

    #[test]
    fn generate_and_search() {
        let text = generate_json("complete", 3, 1, "global").unwrap();
        let v: serde_json::Value = serde_json::from_str(&oracle_json(&text, 3).unwrap()).unwrap();
        assert_eq!(v["outcome"]["solvable"], true);
        let o1 = bundled_json("O1-2node").unwrap();
        let v: serde_json::Value = serde_json::from_str(&oracle_json(&o1, 2).unwrap()).unwrap();
        assert_eq!(v["chain_verified"], true);
        assert!(generate_json("star", 3, 1, "global").is_err());
        assert!(analyze_json("{").is_err());
    }
}
