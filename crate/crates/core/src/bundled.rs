//! Named example families shipped with the library.

use crate::graph::{Digraph, NodeLabels};
use crate::io::parse_family;
use crate::model::{
    crash_scheme_prefixes, generate_bounded_omissions, EventFamily, ModelError, OmissionMetric, Scenario,
    DEFAULT_FAMILY_CAP,
};

const O1_TWO_NODE: &str = include_str!("../data/o1-2node.json");
const H_TWO_NODE: &str = include_str!("../data/h-2node.json");
const RELIABLE_TWO_NODE: &str = include_str!("../data/reliable-2node.json");
const FIG12: &str = include_str!("../data/fig12.json");

/// Names accepted by [`family`].
pub const NAMES: [&str; 5] = ["O1-2node", "H-2node", "reliable-2node", "fig12", "crash-C1"];

fn load(text: &str) -> EventFamily {
    parse_family(text).expect("bundled family is valid")
}

/// At most one omission per round on two nodes: `{OK, OMIT_W, OMIT_B}`.
pub fn o1_two_node() -> EventFamily {
    load(O1_TWO_NODE)
}

/// Exactly one of the two messages is lost every round.
pub fn h_two_node() -> EventFamily {
    load(H_TWO_NODE)
}

pub fn reliable_two_node() -> EventFamily {
    load(RELIABLE_TWO_NODE)
}

/// Two events on nodes `a, b, c, d` that every node can tell apart after
/// one round.
pub fn fig12() -> EventFamily {
    load(FIG12)
}

/// Looks up a bundled family by name. `crash-C1` resolves to the two-node
/// alphabet its scenarios are written over; see [`crash_c1_prefixes`].
pub fn family(name: &str) -> Option<EventFamily> {
    match name {
        "O1-2node" | "crash-C1" => Some(o1_two_node()),
        "H-2node" => Some(h_two_node()),
        "reliable-2node" => Some(reliable_two_node()),
        "fig12" => Some(fig12()),
        _ => None,
    }
}

/// Length-`horizon` prefixes of the two-node scheme in which at most one
/// process crashes: `OK^ω`, or `OK*` followed by `OMIT_W^ω` or `OMIT_B^ω`.
/// Not a mobile scheme, so it only exists as scenario words over
/// [`o1_two_node`].
pub fn crash_c1_prefixes(horizon: usize) -> Vec<Scenario> {
    let fam = o1_two_node();
    let idx = |n| fam.index_by_name(n).expect("bundled event");
    crash_scheme_prefixes(idx("OK"), &[idx("OMIT_W"), idx("OMIT_B")], horizon)
}

/// Bounded-omission family on the hypercube of the given dimension.
pub fn hypercube_bounded(dimension: usize, f: usize, metric: OmissionMetric) -> Result<EventFamily, ModelError> {
    let g = Digraph::hypercube(dimension)?;
    generate_bounded_omissions(&g, &NodeLabels::numeric(g.node_count()), f, metric, DEFAULT_FAMILY_CAP)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_resolves() {
        for name in NAMES {
            assert!(family(name).is_some(), "{name}");
        }
        assert!(family("nope").is_none());
    }

    #[test]
    fn crash_prefixes_use_o1_letters() {
        let fam = o1_two_node();
        let shown: Vec<String> = crash_c1_prefixes(2).iter().map(|s| s.display(&fam)).collect();
        assert!(shown.contains(&"OMIT_W·OMIT_W".to_string()));
        assert!(shown.contains(&"OK·OMIT_B".to_string()));
        assert!(!shown.contains(&"OMIT_W·OK".to_string()));
    }
}
