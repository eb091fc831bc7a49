//! Broadcast and consensus verdicts, and the adversarial broadcast game.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::equivalence::beta_partition;
use crate::graph::{Digraph, GraphError, NodeId, NodeLabels, NodeSet};
use crate::model::{generate_bounded_omissions, is_convex, EventFamily, ModelError, OmissionMetric};

/// Default largest node count for the broadcast game (`2^n` states).
pub const DEFAULT_GAME_NODE_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("broadcast game on {nodes} nodes exceeds the limit of {limit}")]
    StateSpaceTooLarge { nodes: usize, limit: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Problem {
    Broadcast,
    Consensus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Answer {
    Solvable,
    Unsolvable,
    /// Every β class is broadcastable; solvability is not settled.
    NecessaryConditionHolds,
}

impl Answer {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(self) -> i32 {
        match self {
            Answer::Solvable => 0,
            Answer::Unsolvable => 2,
            Answer::NecessaryConditionHolds => 3,
        }
    }
}

/// Events that each have a source but share none.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IncompatibilityWitness {
    pub events: Vec<usize>,
    #[serde(skip)]
    pub sources: Vec<NodeSet>,
}

impl IncompatibilityWitness {
    /// Recomputes the source sets from the family and checks the defining
    /// conditions.
    pub fn verify(&self, family: &EventFamily) -> bool {
        let sets: Vec<NodeSet> = self.events.iter().map(|&i| family.event(i).sources()).collect();
        !self.events.is_empty()
            && sets == self.sources
            && sets.iter().all(|s| !s.is_empty())
            && sets.iter().fold(family.base().nodes(), |acc, s| acc.intersection(*s)).is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Witness {
    /// `node` is a source of every event; `common` lists all such nodes.
    CommonSource {
        node: NodeId,
        #[serde(skip)]
        common: NodeSet,
    },
    /// An event without any source.
    SourcelessEvent {
        event: usize,
    },
    Incompatible(IncompatibilityWitness),
    /// Consensus via broadcasting the value of `source`.
    Broadcastable {
        source: NodeId,
        convex: bool,
    },
    /// Convex family that cannot broadcast.
    ConvexNotBroadcastable(IncompatibilityWitness),
    /// A β class that cannot broadcast on its own.
    BetaClassNotBroadcastable {
        class: Vec<usize>,
        incompatible: IncompatibilityWitness,
    },
    /// Every β class has a common source (listed per class).
    BetaClassesBroadcastable {
        classes: Vec<Vec<usize>>,
        sources: Vec<NodeId>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub problem: Problem,
    pub answer: Answer,
    pub witness: Witness,
    /// For solvable verdicts, the worst-case rounds of the broadcast-based
    /// protocol when the game was small enough to solve.
    pub rounds: Option<usize>,
}

/// Name-resolved form of a [`Verdict`] for JSON output.
#[derive(Clone, Debug, Serialize)]
pub struct VerdictReport {
    pub problem: Problem,
    pub answer: Answer,
    pub rule: &'static str,
    pub witness: serde_json::Value,
    pub rounds: Option<usize>,
}

impl Verdict {
    /// The criterion that produced the verdict.
    pub fn rule(&self) -> &'static str {
        match self.witness {
            Witness::CommonSource { .. } => "a common source of all events broadcasts by flooding",
            Witness::SourcelessEvent { .. } => "an event without a source lets two node groups never hear each other",
            Witness::Incompatible(_) => "source-incompatible events admit no common broadcaster",
            Witness::Broadcastable { .. } => "broadcasting one node's value solves consensus",
            Witness::ConvexNotBroadcastable(_) => "for convex families consensus is solvable exactly when broadcast is",
            Witness::BetaClassNotBroadcastable { .. } => "consensus requires every beta class to be broadcastable",
            Witness::BetaClassesBroadcastable { .. } => "every beta class is broadcastable (necessary condition only)",
        }
    }

    pub fn report(&self, family: &EventFamily) -> VerdictReport {
        let labels = family.labels();
        let names = |v: &[usize]| v.iter().map(|&i| family.name(i).to_string()).collect::<Vec<_>>();
        let incompat = |w: &IncompatibilityWitness| {
            serde_json::json!({
                "events": names(&w.events),
                "sources": w.sources.iter().map(|s| set_names(labels, *s)).collect::<Vec<_>>(),
            })
        };
        let witness = match &self.witness {
            Witness::CommonSource { node, common } => serde_json::json!({
                "common_source": labels.get(*node),
                "all_common_sources": set_names(labels, *common),
            }),
            Witness::SourcelessEvent { event } => {
                serde_json::json!({ "sourceless_event": family.name(*event) })
            }
            Witness::Incompatible(w) => serde_json::json!({ "source_incompatible": incompat(w) }),
            Witness::Broadcastable { source, convex } => serde_json::json!({
                "broadcast_source": labels.get(*source),
                "convex": convex,
            }),
            Witness::ConvexNotBroadcastable(w) => serde_json::json!({
                "convex": true,
                "source_incompatible": incompat(w),
            }),
            Witness::BetaClassNotBroadcastable { class, incompatible } => serde_json::json!({
                "beta_class": names(class),
                "source_incompatible": incompat(incompatible),
            }),
            Witness::BetaClassesBroadcastable { classes, sources } => serde_json::json!({
                "beta_classes": classes.iter().map(|c| names(c)).collect::<Vec<_>>(),
                "class_sources": sources.iter().map(|&s| labels.get(s)).collect::<Vec<_>>(),
            }),
        };
        VerdictReport { problem: self.problem, answer: self.answer, rule: self.rule(), witness, rounds: self.rounds }
    }

    pub fn explain(&self, family: &EventFamily) -> String {
        let labels = family.labels();
        let names = |v: &[usize]| v.iter().map(|&i| family.name(i)).collect::<Vec<_>>().join(", ");
        let incompat = |w: &IncompatibilityWitness| {
            w.events
                .iter()
                .zip(&w.sources)
                .map(|(&e, &s)| format!("B({}) = {}", family.name(e), labels.format_set(s)))
                .collect::<Vec<_>>()
                .join("; ")
        };
        let detail = match &self.witness {
            Witness::CommonSource { node, common } => {
                format!("common source {} (all: {})", labels.get(*node), labels.format_set(*common))
            }
            Witness::SourcelessEvent { event } => format!("event {} has no source", family.name(*event)),
            Witness::Incompatible(w) | Witness::ConvexNotBroadcastable(w) => incompat(w),
            Witness::Broadcastable { source, convex } => {
                format!("broadcast from {} (family convex: {convex})", labels.get(*source))
            }
            Witness::BetaClassNotBroadcastable { class, incompatible } => {
                format!("class {{{}}}: {}", names(class), incompat(incompatible))
            }
            Witness::BetaClassesBroadcastable { classes, sources } => classes
                .iter()
                .zip(sources)
                .map(|(c, &s)| format!("{{{}}} via {}", names(c), labels.get(s)))
                .collect::<Vec<_>>()
                .join("; "),
        };
        let rounds = self.rounds.map(|r| format!(" in {r} round(s)")).unwrap_or_default();
        format!("{:?}: {:?}{rounds}\n  rule: {}\n  witness: {detail}", self.problem, self.answer, self.rule())
    }
}

fn set_names(labels: &NodeLabels, s: NodeSet) -> Vec<String> {
    s.iter().map(|v| labels.get(v).to_string()).collect()
}

/// Nodes that are sources of every event.
pub fn common_sources(family: &EventFamily) -> NodeSet {
    (0..family.len()).fold(family.base().nodes(), |acc, i| acc.intersection(family.sources_of(i)))
}

/// Smallest source-incompatible subset, searched by increasing size over
/// the distinct inclusion-minimal source sets. `None` when all events share
/// a source or some event has none.
pub fn minimal_incompatible_subset(family: &EventFamily) -> Option<IncompatibilityWitness> {
    if !common_sources(family).is_empty() || (0..family.len()).any(|i| family.sources_of(i).is_empty()) {
        return None;
    }
    // first event carrying each distinct source set
    let mut distinct: Vec<(NodeSet, usize)> = Vec::new();
    for i in 0..family.len() {
        let s = family.sources_of(i);
        if !distinct.iter().any(|&(d, _)| d == s) {
            distinct.push((s, i));
        }
    }
    let minimal: Vec<(NodeSet, usize)> =
        distinct.iter().copied().filter(|&(s, _)| !distinct.iter().any(|&(d, _)| d != s && d.is_subset(s))).collect();

    fn search(sets: &[(NodeSet, usize)], start: usize, size: usize, acc: NodeSet, chosen: &mut Vec<usize>) -> bool {
        if chosen.len() == size {
            return acc.is_empty();
        }
        for j in start..sets.len() {
            chosen.push(j);
            if search(sets, j + 1, size, acc.intersection(sets[j].0), chosen) {
                return true;
            }
            chosen.pop();
        }
        false
    }

    let all = family.base().nodes();
    for size in 1..=minimal.len() {
        let mut chosen = Vec::new();
        if search(&minimal, 0, size, all, &mut chosen) {
            let mut picks: Vec<(usize, NodeSet)> = chosen.iter().map(|&j| (minimal[j].1, minimal[j].0)).collect();
            picks.sort_unstable_by_key(|p| p.0);
            return Some(IncompatibilityWitness {
                events: picks.iter().map(|p| p.0).collect(),
                sources: picks.iter().map(|p| p.1).collect(),
            });
        }
    }
    unreachable!("the whole family has an empty intersection of source sets")
}

fn sourceless_event(family: &EventFamily) -> Option<usize> {
    (0..family.len()).find(|&i| family.sources_of(i).is_empty())
}

/// Broadcast is solvable under `R^ω` iff some node is a source of every
/// event of `R`.
pub fn check_broadcastable(family: &EventFamily) -> Verdict {
    let common = common_sources(family);
    let (answer, witness) = if let Some(node) = common.first() {
        (Answer::Solvable, Witness::CommonSource { node, common })
    } else if let Some(event) = sourceless_event(family) {
        (Answer::Unsolvable, Witness::SourcelessEvent { event })
    } else {
        let w = minimal_incompatible_subset(family).expect("no common source and every event has one");
        (Answer::Unsolvable, Witness::Incompatible(w))
    };
    let rounds = match witness {
        Witness::CommonSource { .. } => {
            optimal_broadcast_rounds(family, DEFAULT_GAME_NODE_LIMIT).ok().flatten().map(|(_, r)| r)
        }
        _ => None,
    };
    Verdict { problem: Problem::Broadcast, answer, witness, rounds }
}

/// Decides consensus where the theory allows it:
/// a sourceless event rules it out; broadcastability gives it; for convex
/// families non-broadcastability rules it out; otherwise a β class that
/// cannot broadcast rules it out, and if every class can broadcast the
/// answer is [`Answer::NecessaryConditionHolds`].
pub fn check_consensus(family: &EventFamily) -> Verdict {
    let verdict = |answer, witness, rounds| Verdict { problem: Problem::Consensus, answer, witness, rounds };
    if let Some(event) = sourceless_event(family) {
        return verdict(Answer::Unsolvable, Witness::SourcelessEvent { event }, None);
    }
    let convex = is_convex(family).is_convex();
    let broadcast = check_broadcastable(family);
    match broadcast.witness {
        Witness::CommonSource { .. } => {
            let (source, rounds) = match optimal_broadcast_rounds(family, DEFAULT_GAME_NODE_LIMIT) {
                Ok(Some((u, r))) => (u, Some(r)),
                _ => (common_sources(family).first().expect("broadcastable"), None),
            };
            return verdict(Answer::Solvable, Witness::Broadcastable { source, convex }, rounds);
        }
        Witness::Incompatible(w) if convex => {
            return verdict(Answer::Unsolvable, Witness::ConvexNotBroadcastable(w), None);
        }
        _ => {}
    }
    let beta = beta_partition(family);
    let mut sources = Vec::with_capacity(beta.class_count());
    for class in beta.classes() {
        let sub = family.subfamily(class).expect("class of a valid family");
        match minimal_incompatible_subset(&sub) {
            Some(w) => {
                let incompatible =
                    IncompatibilityWitness { events: w.events.iter().map(|&j| class[j]).collect(), sources: w.sources };
                return verdict(
                    Answer::Unsolvable,
                    Witness::BetaClassNotBroadcastable { class: class.clone(), incompatible },
                    None,
                );
            }
            None => sources.push(common_sources(&sub).first().expect("class broadcastable")),
        }
    }
    verdict(
        Answer::NecessaryConditionHolds,
        Witness::BetaClassesBroadcastable { classes: beta.classes().to_vec(), sources },
        None,
    )
}

/// Worst-case number of flooding rounds, or unbounded when the adversary
/// can stall forever.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Rounds {
    Finite(usize),
    Unbounded,
}

impl Rounds {
    pub fn finite(self) -> Option<usize> {
        match self {
            Rounds::Finite(r) => Some(r),
            Rounds::Unbounded => None,
        }
    }
}

impl fmt::Display for Rounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rounds::Finite(r) => write!(f, "{r}"),
            Rounds::Unbounded => f.write_str("unbounded"),
        }
    }
}

/// Value of the game in which the informed set starts at `{u}` and each
/// round an adversary picks the event that delivers: the informed set grows
/// by every head of an arc leaving it. Memoized over informed sets.
pub fn broadcast_rounds(family: &EventFamily, u: NodeId, node_limit: usize) -> Result<Rounds, SolveError> {
    family.base().check_node(u)?;
    let n = family.node_count();
    if n > node_limit {
        return Err(SolveError::StateSpaceTooLarge { nodes: n, limit: node_limit });
    }
    let mut outs: Vec<&[NodeSet]> = family.events().iter().map(Digraph::out_sets).collect();
    outs.dedup();
    let mut memo = HashMap::new();
    Ok(game_value(&outs, NodeSet::singleton(u), family.base().nodes(), &mut memo))
}

fn game_value(outs: &[&[NodeSet]], informed: NodeSet, all: NodeSet, memo: &mut HashMap<NodeSet, Rounds>) -> Rounds {
    if informed == all {
        return Rounds::Finite(0);
    }
    if let Some(&v) = memo.get(&informed) {
        return v;
    }
    let mut worst = Rounds::Finite(0);
    for out in outs {
        let next = informed.iter().fold(informed, |acc, v| acc.union(out[v]));
        let value = if next == informed {
            Rounds::Unbounded
        } else {
            match game_value(outs, next, all, memo) {
                Rounds::Finite(r) => Rounds::Finite(r + 1),
                Rounds::Unbounded => Rounds::Unbounded,
            }
        };
        worst = worst.max(value);
        if worst == Rounds::Unbounded {
            break;
        }
    }
    memo.insert(informed, worst);
    worst
}

/// Fastest originator among the common sources, with its worst-case round
/// count; ties go to the lowest index. `None` when broadcast is impossible.
pub fn optimal_broadcast_rounds(
    family: &EventFamily,
    node_limit: usize,
) -> Result<Option<(NodeId, usize)>, SolveError> {
    let mut best: Option<(NodeId, usize)> = None;
    for u in common_sources(family) {
        if let Rounds::Finite(r) = broadcast_rounds(family, u, node_limit)? {
            if best.is_none_or(|(_, b)| r < b) {
                best = Some((u, r));
            }
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdRow {
    pub f: usize,
    pub events: usize,
    pub answer: Answer,
    pub expected_solvable: bool,
    pub agrees: bool,
}

/// Runs the consensus check on the globally bounded families `O_f(G)` for
/// `f = 0..=f_max` and compares each verdict with `f < c(G)`.
pub fn connectivity_threshold_check(
    graph: &Digraph,
    f_max: usize,
    family_cap: usize,
) -> Result<(usize, Vec<ThresholdRow>), SolveError> {
    let c = graph.vertex_connectivity()?;
    let labels = NodeLabels::numeric(graph.node_count());
    let mut rows = Vec::with_capacity(f_max + 1);
    for f in 0..=f_max {
        let family = generate_bounded_omissions(graph, &labels, f, OmissionMetric::Global, family_cap)?;
        let answer = check_consensus(&family).answer;
        let expected_solvable = f < c;
        rows.push(ThresholdRow {
            f,
            events: family.len(),
            answer,
            expected_solvable,
            agrees: (answer == Answer::Solvable) == expected_solvable,
        });
    }
    Ok((c, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use crate::model::{all_words, DEFAULT_FAMILY_CAP};

    /// Brute force: the least `r` such that flooding from `u` informs every
    /// node under every word of length `r`, scanning `r = 0..=n`.
    fn rounds_by_enumeration(family: &EventFamily, u: NodeId) -> Rounds {
        let n = family.node_count();
        for r in 0..=n {
            let all_informed = all_words(family.len(), r).all(|w| {
                let informed = w.iter().fold(NodeSet::singleton(u), |s, &e| family.event(e).step(s));
                informed == family.base().nodes()
            });
            if all_informed {
                return Rounds::Finite(r);
            }
        }
        Rounds::Unbounded
    }

    #[test]
    fn broadcast_examples() {
        let o1 = bundled::o1_two_node();
        let v = check_broadcastable(&o1);
        assert_eq!(v.answer, Answer::Unsolvable);
        let Witness::Incompatible(w) = &v.witness else { panic!("{v:?}") };
        assert_eq!(w.events, vec![1, 2]);
        assert_eq!(w.sources, vec![NodeSet::singleton(1), NodeSet::singleton(0)]);
        assert!(w.verify(&o1));

        let ok = check_broadcastable(&bundled::reliable_two_node());
        assert_eq!(ok.answer, Answer::Solvable);
        assert_eq!(ok.rounds, Some(1));

        let fig = check_broadcastable(&bundled::fig12());
        assert_eq!(fig.answer, Answer::Solvable);
        assert_eq!(fig.witness, Witness::CommonSource { node: 0, common: NodeSet::full(4) });
    }

    #[test]
    fn consensus_examples() {
        let o1 = check_consensus(&bundled::o1_two_node());
        assert_eq!(o1.answer, Answer::Unsolvable);
        assert!(matches!(o1.witness, Witness::ConvexNotBroadcastable(_)));

        let h = check_consensus(&bundled::h_two_node());
        assert_eq!(h.answer, Answer::NecessaryConditionHolds);
        assert_eq!(
            h.witness,
            Witness::BetaClassesBroadcastable { classes: vec![vec![0], vec![1]], sources: vec![1, 0] }
        );

        let base = Digraph::complete(3).unwrap();
        let fam = EventFamily::unnamed(base.clone(), vec![base, Digraph::empty(3).unwrap()]).unwrap();
        let v = check_consensus(&fam);
        assert_eq!((v.answer, v.witness), (Answer::Unsolvable, Witness::SourcelessEvent { event: 1 }));

        let fig = check_consensus(&bundled::fig12());
        assert_eq!(fig.answer, Answer::Solvable);
        assert_eq!(fig.witness, Witness::Broadcastable { source: 2, convex: false });
        assert_eq!(fig.rounds, Some(2));
    }

    #[test]
    fn game_examples() {
        let fig = bundled::fig12();
        let (a, b, c, d) = (0, 1, 2, 3);
        assert_eq!(broadcast_rounds(&fig, c, 20), Ok(Rounds::Finite(2)));
        assert_eq!(broadcast_rounds(&fig, d, 20), Ok(Rounds::Finite(2)));
        assert_eq!(broadcast_rounds(&fig, a, 20), Ok(Rounds::Finite(3)));
        assert_eq!(broadcast_rounds(&fig, b, 20), Ok(Rounds::Finite(3)));
        for u in 0..4 {
            assert_eq!(broadcast_rounds(&fig, u, 20).unwrap(), rounds_by_enumeration(&fig, u));
        }
        let h = bundled::h_two_node();
        assert_eq!(broadcast_rounds(&h, 0, 20), Ok(Rounds::Unbounded));
        assert_eq!(rounds_by_enumeration(&h, 0), Rounds::Unbounded);
        assert_eq!(optimal_broadcast_rounds(&fig, 20), Ok(Some((c, 2))));
        assert_eq!(optimal_broadcast_rounds(&bundled::reliable_two_node(), 20), Ok(Some((0, 1))));
        assert_eq!(optimal_broadcast_rounds(&h, 20), Ok(None));
        assert!(matches!(broadcast_rounds(&fig, 9, 20), Err(SolveError::Graph(_))));
        assert_eq!(broadcast_rounds(&fig, 0, 3), Err(SolveError::StateSpaceTooLarge { nodes: 4, limit: 3 }));
    }

    #[test]
    fn threshold_examples() {
        let (c, rows) = connectivity_threshold_check(&Digraph::cycle(4).unwrap(), 2, DEFAULT_FAMILY_CAP).unwrap();
        assert_eq!(c, 2);
        let answers: Vec<Answer> = rows.iter().map(|r| r.answer).collect();
        assert_eq!(answers, vec![Answer::Solvable, Answer::Solvable, Answer::Unsolvable]);
        assert!(rows.iter().all(|r| r.agrees));

        let (c, rows) = connectivity_threshold_check(&Digraph::complete(4).unwrap(), 3, DEFAULT_FAMILY_CAP).unwrap();
        assert_eq!(c, 3);
        assert!(rows.iter().all(|r| r.agrees));
        assert_eq!(rows[3].answer, Answer::Unsolvable);
        assert!(rows[..3].iter().all(|r| r.answer == Answer::Solvable));
    }

    #[test]
    fn report_resolves_names() {
        let o1 = bundled::o1_two_node();
        let r = check_broadcastable(&o1).report(&o1);
        let events = &r.witness["source_incompatible"]["events"];
        assert_eq!(events, &serde_json::json!(["OMIT_W", "OMIT_B"]));
        assert!(check_consensus(&o1).explain(&o1).contains("Unsolvable"));
    }
}
