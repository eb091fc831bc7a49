//! JSON file formats and DOT export.
//!
//! Graph files look like `{"nodes": ["a","b"], "arcs": [["a","b"]]}`; family
//! files wrap a graph and a list of named events, each given by its arcs.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Arc, Digraph, NodeLabels};
use crate::model::{EventFamily, ModelError};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphFile {
    pub nodes: Vec<String>,
    pub arcs: Vec<[String; 2]>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventEntry {
    pub name: String,
    pub arcs: Vec<[String; 2]>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyFile {
    pub graph: GraphFile,
    pub events: Vec<EventEntry>,
}

fn resolve_arcs(labels: &NodeLabels, arcs: &[[String; 2]]) -> Result<Vec<Arc>, ModelError> {
    arcs.iter().map(|[s, t]| Ok((labels.index_of(s)?, labels.index_of(t)?))).collect()
}

fn label_arcs(labels: &NodeLabels, g: &Digraph) -> Vec<[String; 2]> {
    g.arcs().map(|(s, t)| [labels.get(s).to_string(), labels.get(t).to_string()]).collect()
}

impl GraphFile {
    pub fn to_graph(&self) -> Result<(Digraph, NodeLabels), ModelError> {
        let labels = NodeLabels::new(self.nodes.clone())?;
        let arcs = resolve_arcs(&labels, &self.arcs)?;
        Ok((Digraph::from_arcs(labels.len(), arcs)?, labels))
    }

    pub fn from_graph(g: &Digraph, labels: &NodeLabels) -> Self {
        GraphFile { nodes: labels.as_slice().to_vec(), arcs: label_arcs(labels, g) }
    }
}

impl FamilyFile {
    pub fn to_family(&self) -> Result<EventFamily, ModelError> {
        let (base, labels) = self.graph.to_graph()?;
        let events = self
            .events
            .iter()
            .map(|e| {
                let arcs = resolve_arcs(&labels, &e.arcs)?;
                Ok((e.name.clone(), Digraph::from_arcs(labels.len(), arcs)?))
            })
            .collect::<Result<Vec<_>, ModelError>>()?;
        EventFamily::new(base, labels, events)
    }

    pub fn from_family(family: &EventFamily) -> Self {
        let labels = family.labels();
        FamilyFile {
            graph: GraphFile::from_graph(family.base(), labels),
            events: family
                .events()
                .iter()
                .enumerate()
                .map(|(i, e)| EventEntry { name: family.name(i).to_string(), arcs: label_arcs(labels, e) })
                .collect(),
        }
    }
}

pub fn parse_graph(text: &str) -> Result<(Digraph, NodeLabels), FormatError> {
    let file: GraphFile = serde_json::from_str(text)?;
    Ok(file.to_graph()?)
}

pub fn parse_family(text: &str) -> Result<EventFamily, FormatError> {
    let file: FamilyFile = serde_json::from_str(text)?;
    Ok(file.to_family()?)
}

pub fn family_to_json(family: &EventFamily) -> String {
    serde_json::to_string_pretty(&FamilyFile::from_family(family)).expect("family serializes")
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// DOT rendering of one graph; arcs listed in `highlight` are drawn bold.
pub fn graph_to_dot(name: &str, g: &Digraph, labels: &NodeLabels, highlight: &[Arc]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", quote(name));
    for v in 0..g.node_count() {
        let _ = writeln!(out, "  {};", quote(labels.get(v)));
    }
    for (s, t) in g.arcs() {
        let style = if highlight.contains(&(s, t)) { " [penwidth=2.5]" } else { "" };
        let _ = writeln!(out, "  {} -> {}{};", quote(labels.get(s)), quote(labels.get(t)), style);
    }
    out.push_str("}\n");
    out
}

/// One cluster per event; source nodes are filled.
pub fn family_to_dot(family: &EventFamily) -> String {
    let labels = family.labels();
    let mut out = String::from("digraph family {\n  compound=true;\n");
    for (i, ev) in family.events().iter().enumerate() {
        let sources = family.sources_of(i);
        let _ = writeln!(out, "  subgraph cluster_{i} {{\n    label={};", quote(family.name(i)));
        for v in 0..ev.node_count() {
            let fill = if sources.contains(v) { ", style=filled, fillcolor=lightblue" } else { "" };
            let _ = writeln!(out, "    \"e{i}_{v}\" [label={}{}];", quote(labels.get(v)), fill);
        }
        for (s, t) in ev.arcs() {
            let _ = writeln!(out, "    \"e{i}_{s}\" -> \"e{i}_{t}\";");
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;

    #[test]
    fn bundled_files_round_trip() {
        for name in bundled::NAMES {
            let fam = bundled::family(name).unwrap();
            let again = parse_family(&family_to_json(&fam)).unwrap();
            assert_eq!(fam, again, "{name}");
        }
    }

    #[test]
    fn bad_inputs_are_reported() {
        assert!(matches!(parse_family("{"), Err(FormatError::Json(_))));
        let unknown = r#"{"graph":{"nodes":["a"],"arcs":[]},"events":[{"name":"x","arcs":[["a","z"]]}]}"#;
        assert!(matches!(parse_family(unknown), Err(FormatError::Model(_))));
        let (g, labels) = parse_graph(r#"{"nodes":["a","b"],"arcs":[["a","b"],["a","b"]]}"#).unwrap();
        assert_eq!(g.arc_count(), 1);
        assert_eq!(labels.get(1), "b");
    }

    #[test]
    fn dot_output_mentions_every_arc() {
        let fam = bundled::fig12();
        let dot = family_to_dot(&fam);
        assert_eq!(dot.matches("->").count(), 14);
        let g = graph_to_dot("H1", fam.event(0), fam.labels(), &[(2, 0)]);
        assert!(g.contains("\"c\" -> \"a\" [penwidth=2.5];"));
    }
}
