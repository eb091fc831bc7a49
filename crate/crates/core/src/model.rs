//! Communication events, mobile omission schemes and scenario words.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Arc, Digraph, GraphError, NodeId, NodeLabels, NodeSet};

/// A communication event: a spanning subgraph of the underlying network,
/// listing the arcs that deliver during one round.
pub type Event = Digraph;

/// Default upper bound on the number of events a generator may produce.
pub const DEFAULT_FAMILY_CAP: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("event {0:?} is not a subgraph of the underlying graph")]
    NotSubgraph(String),
    #[error("events {0:?} and {1:?} are identical")]
    DuplicateEvent(String, String),
    #[error("event name {0:?} is used twice")]
    DuplicateName(String),
    #[error("unknown event {0:?}")]
    UnknownEvent(String),
    #[error("{labels} labels given for a graph with {nodes} nodes")]
    LabelCount { labels: usize, nodes: usize },
    #[error("an event family needs at least one event")]
    EmptyFamily,
    #[error("family would contain {count} events, above the cap of {cap}")]
    FamilyTooLarge { count: u128, cap: usize },
    #[error("scenario letter {letter} at round {round} is not an event index (family has {len})")]
    BadLetter { round: usize, letter: usize, len: usize },
    #[error("subword positions must be strictly increasing and below {len}")]
    BadPositions { len: usize },
    #[error("initial configuration: {0}")]
    BadInit(String),
}

/// A finite set `R` of events over a fixed underlying graph; the mobile
/// scheme it stands for is `R^ω`. Event order is preserved and used for
/// indices in scenarios and reports.
#[derive(Clone, Debug)]
pub struct EventFamily {
    base: Digraph,
    labels: NodeLabels,
    events: Vec<Event>,
    names: Vec<String>,
    sources: Vec<NodeSet>,
    index: HashMap<Event, usize>,
}

impl PartialEq for EventFamily {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base
            && self.labels == other.labels
            && self.events == other.events
            && self.names == other.names
    }
}

impl Eq for EventFamily {}

impl EventFamily {
    pub fn new(base: Digraph, labels: NodeLabels, events: Vec<(String, Event)>) -> Result<Self, ModelError> {
        if labels.len() != base.node_count() {
            return Err(ModelError::LabelCount { labels: labels.len(), nodes: base.node_count() });
        }
        if events.is_empty() {
            return Err(ModelError::EmptyFamily);
        }
        let mut index = HashMap::<Event, usize>::with_capacity(events.len());
        let mut seen_names = HashSet::with_capacity(events.len());
        let mut names: Vec<String> = Vec::with_capacity(events.len());
        let mut evs = Vec::with_capacity(events.len());
        for (i, (name, ev)) in events.into_iter().enumerate() {
            if !ev.is_subgraph_of(&base) {
                return Err(ModelError::NotSubgraph(name));
            }
            if !seen_names.insert(name.clone()) {
                return Err(ModelError::DuplicateName(name));
            }
            if let Some(&j) = index.get(&ev) {
                return Err(ModelError::DuplicateEvent(names[j].clone(), name));
            }
            index.insert(ev.clone(), i);
            names.push(name);
            evs.push(ev);
        }
        let sources = evs.iter().map(Digraph::sources).collect();
        Ok(EventFamily { base, labels, events: evs, names, sources, index })
    }

    /// Family with generated names `e0`, `e1`, ... and numeric labels.
    pub fn unnamed(base: Digraph, events: Vec<Event>) -> Result<Self, ModelError> {
        let labels = NodeLabels::numeric(base.node_count());
        let named = events.into_iter().enumerate().map(|(i, e)| (format!("e{i}"), e)).collect();
        Self::new(base, labels, named)
    }

    pub fn base(&self) -> &Digraph {
        &self.base
    }

    pub fn labels(&self) -> &NodeLabels {
        &self.labels
    }

    pub fn node_count(&self) -> usize {
        self.base.node_count()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn event(&self, i: usize) -> &Event {
        &self.events[i]
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Source set `B(H)` of event `i`.
    pub fn sources_of(&self, i: usize) -> NodeSet {
        self.sources[i]
    }

    pub fn index_of(&self, event: &Event) -> Option<usize> {
        self.index.get(event).copied()
    }

    pub fn contains(&self, event: &Event) -> bool {
        self.index.contains_key(event)
    }

    pub fn index_by_name(&self, name: &str) -> Result<usize, ModelError> {
        self.names.iter().position(|n| n == name).ok_or_else(|| ModelError::UnknownEvent(name.to_string()))
    }

    /// The family restricted to the given event indices (in the given order).
    pub fn subfamily(&self, indices: &[usize]) -> Result<EventFamily, ModelError> {
        let events = indices.iter().map(|&i| (self.names[i].clone(), self.events[i].clone()));
        EventFamily::new(self.base.clone(), self.labels.clone(), events.collect())
    }

    /// Arc-wise union of all events.
    pub fn union_of_events(&self) -> Digraph {
        self.events.iter().skip(1).fold(self.events[0].clone(), |acc, e| acc.union(e))
    }

    pub fn format_arc(&self, (s, t): Arc) -> String {
        format!("{}>{}", self.labels.get(s), self.labels.get(t))
    }
}

/// Outcome of a convexity test.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Convexity {
    Convex,
    /// `event ∪ {arc}` is missing from the family although `arc` belongs to
    /// `other`.
    Violation {
        event: usize,
        other: usize,
        arc: Arc,
    },
}

impl Convexity {
    pub fn is_convex(&self) -> bool {
        matches!(self, Convexity::Convex)
    }
}

/// Checks closure under adding to any event a single arc taken from any
/// event of the family.
pub fn is_convex(family: &EventFamily) -> Convexity {
    let union = family.union_of_events();
    for (i, ev) in family.events().iter().enumerate() {
        for arc in union.arcs().filter(|&(s, t)| !ev.has_arc(s, t)) {
            if !family.contains(&ev.with_arc(arc)) {
                let other = family
                    .events()
                    .iter()
                    .position(|e| e.has_arc(arc.0, arc.1))
                    .expect("arc comes from the union of events");
                return Convexity::Violation { event: i, other, arc };
            }
        }
    }
    Convexity::Convex
}

/// How omissions are counted when bounding them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OmissionMetric {
    /// At most `f` arcs missing in total.
    Global,
    /// At most `f` out-arcs missing at every node.
    PerNodeSend,
    /// At most `f` in-arcs missing at every node.
    PerNodeReceive,
}

impl FromStr for OmissionMetric {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "global" => Ok(OmissionMetric::Global),
            "send" | "per-node-send" => Ok(OmissionMetric::PerNodeSend),
            "recv" | "receive" | "per-node-receive" => Ok(OmissionMetric::PerNodeReceive),
            other => Err(format!("unknown metric {other:?} (expected global, send or recv)")),
        }
    }
}

impl fmt::Display for OmissionMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OmissionMetric::Global => "global",
            OmissionMetric::PerNodeSend => "send",
            OmissionMetric::PerNodeReceive => "recv",
        })
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn count_up_to(n: usize, f: usize) -> u128 {
    (0..=f.min(n)).map(|k| binomial(n, k)).sum()
}

/// All `k`-subsets of `items` for `k = 0..=f`, smallest first, each in
/// lexicographic order.
fn subsets_up_to<T: Copy>(items: &[T], f: usize) -> Vec<Vec<T>> {
    let mut out = Vec::new();
    for k in 0..=f.min(items.len()) {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            out.push(idx.iter().map(|&i| items[i]).collect());
            // advance to the next combination
            let mut pos = k;
            while pos > 0 && idx[pos - 1] == items.len() - k + pos - 1 {
                pos -= 1;
            }
            if pos == 0 {
                break;
            }
            idx[pos - 1] += 1;
            for j in pos..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    out
}

/// Every event obtained from `graph` by dropping at most `f` arcs, counted
/// according to `metric`. The result is convex by construction.
pub fn generate_bounded_omissions(
    graph: &Digraph,
    labels: &NodeLabels,
    f: usize,
    metric: OmissionMetric,
    cap: usize,
) -> Result<EventFamily, ModelError> {
    let n = graph.node_count();
    let removals: Vec<Vec<Arc>> = match metric {
        OmissionMetric::Global => {
            let arcs: Vec<Arc> = graph.arcs().collect();
            let count = count_up_to(arcs.len(), f);
            if count > cap as u128 {
                return Err(ModelError::FamilyTooLarge { count, cap });
            }
            subsets_up_to(&arcs, f)
        }
        OmissionMetric::PerNodeSend | OmissionMetric::PerNodeReceive => {
            let per_node: Vec<Vec<Arc>> = (0..n)
                .map(|v| match metric {
                    OmissionMetric::PerNodeSend => graph.out_neighbors(v).iter().map(|t| (v, t)).collect(),
                    _ => graph.in_neighbors(v).iter().map(|s| (s, v)).collect(),
                })
                .collect();
            let count = per_node
                .iter()
                .map(|arcs| count_up_to(arcs.len(), f))
                .try_fold(1u128, |acc, c| acc.checked_mul(c))
                .unwrap_or(u128::MAX);
            if count > cap as u128 {
                return Err(ModelError::FamilyTooLarge { count, cap });
            }
            let choices: Vec<Vec<Vec<Arc>>> = per_node.iter().map(|arcs| subsets_up_to(arcs, f)).collect();
            let mut combos: Vec<Vec<Arc>> = vec![Vec::new()];
            for options in &choices {
                let mut next = Vec::with_capacity(combos.len() * options.len());
                for base in &combos {
                    for opt in options {
                        let mut c = base.clone();
                        c.extend_from_slice(opt);
                        next.push(c);
                    }
                }
                combos = next;
            }
            // fewest omissions first, then lexicographic on the dropped arcs
            for c in &mut combos {
                c.sort_unstable();
            }
            combos.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
            combos
        }
    };
    let events = removals
        .into_iter()
        .map(|dropped| {
            let ev = dropped.iter().fold(graph.clone(), |g, &a| g.without_arc(a));
            (omission_name(labels, &dropped), ev)
        })
        .collect();
    EventFamily::new(graph.clone(), labels.clone(), events)
}

/// `G` for the full graph, otherwise `G-{a>b,c>d}` listing dropped arcs.
pub fn omission_name(labels: &NodeLabels, dropped: &[Arc]) -> String {
    if dropped.is_empty() {
        return "G".to_string();
    }
    let arcs: Vec<String> = dropped.iter().map(|&(s, t)| format!("{}>{}", labels.get(s), labels.get(t))).collect();
    format!("G-{{{}}}", arcs.join(","))
}

/// Recipe for extending a finite scenario prefix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ScenarioGenerator {
    /// The same event every round.
    Constant { event: usize },
    /// Events `0, 1, ..., |R|-1, 0, 1, ...`.
    RoundRobin,
    /// Uniform letters from a seeded ChaCha stream.
    SeededRandom { seed: u64 },
    /// A fixed prefix followed by one event forever.
    EventuallyConstant { prefix: Vec<usize>, tail: usize },
}

impl ScenarioGenerator {
    /// The first `rounds` letters of the generated word.
    pub fn letters(&self, family_len: usize, rounds: usize) -> Vec<usize> {
        match self {
            ScenarioGenerator::Constant { event } => vec![*event; rounds],
            ScenarioGenerator::RoundRobin => (0..rounds).map(|r| r % family_len).collect(),
            ScenarioGenerator::SeededRandom { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                (0..rounds).map(|_| rng.gen_range(0..family_len)).collect()
            }
            ScenarioGenerator::EventuallyConstant { prefix, tail } => {
                (0..rounds).map(|r| prefix.get(r).copied().unwrap_or(*tail)).collect()
            }
        }
    }
}

/// A finite word over event indices: a partial scenario. When a generator
/// is attached the word can be extended to any length.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scenario {
    pub word: Vec<usize>,
}

impl Scenario {
    pub fn new(word: Vec<usize>) -> Self {
        Scenario { word }
    }

    pub fn empty() -> Self {
        Scenario { word: Vec::new() }
    }

    pub fn generated(generator: &ScenarioGenerator, family_len: usize, rounds: usize) -> Self {
        Scenario { word: generator.letters(family_len, rounds) }
    }

    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    /// The prefix of length `r` (the whole word if shorter).
    pub fn prefix(&self, r: usize) -> Scenario {
        Scenario { word: self.word[..r.min(self.word.len())].to_vec() }
    }

    pub fn validate(&self, family: &EventFamily) -> Result<(), ModelError> {
        match self.word.iter().enumerate().find(|(_, &l)| l >= family.len()) {
            Some((round, &letter)) => Err(ModelError::BadLetter { round, letter, len: family.len() }),
            None => Ok(()),
        }
    }

    /// Parses comma-separated event names, e.g. `"H1,H2,H1"`.
    pub fn parse(text: &str, family: &EventFamily) -> Result<Self, ModelError> {
        let word = text
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|name| family.index_by_name(name))
            .collect::<Result<_, _>>()?;
        Ok(Scenario { word })
    }

    pub fn display(&self, family: &EventFamily) -> String {
        if self.word.is_empty() {
            return "ε".to_string();
        }
        self.word.iter().map(|&i| family.name(i)).collect::<Vec<_>>().join("·")
    }
}

/// Extracts the letters at strictly increasing `positions`.
pub fn subword(w: &Scenario, positions: &[usize]) -> Result<Scenario, ModelError> {
    let ok = positions.windows(2).all(|p| p[0] < p[1]) && positions.last().is_none_or(|&p| p < w.len());
    if !ok {
        return Err(ModelError::BadPositions { len: w.len() });
    }
    Ok(Scenario { word: positions.iter().map(|&p| w.word[p]).collect() })
}

/// Every word of length `len` over `0..alphabet`, in lexicographic order.
pub fn all_words(alphabet: usize, len: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = if alphabet == 0 && len > 0 { 0 } else { alphabet.pow(len as u32) };
    (0..total).map(move |mut k| {
        let mut w = vec![0; len];
        for slot in w.iter_mut().rev() {
            *slot = k % alphabet;
            k /= alphabet;
        }
        w
    })
}

/// Length-`horizon` prefixes of the crash-style scheme
/// `{reliable^ω} ∪ reliable* · (c^ω for c in crashes)`.
pub fn crash_scheme_prefixes(reliable: usize, crashes: &[usize], horizon: usize) -> Vec<Scenario> {
    let mut out = vec![Scenario::new(vec![reliable; horizon])];
    if horizon == 0 {
        return out;
    }
    for k in (0..horizon).rev() {
        for &c in crashes {
            let mut w = vec![reliable; k];
            w.resize(horizon, c);
            if !out.iter().any(|s| s.word == w) {
                out.push(Scenario::new(w));
            }
        }
    }
    out
}

/// Binary initial values, one per node.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InitialConfig {
    pub values: Vec<bool>,
}

impl InitialConfig {
    pub fn new(values: Vec<bool>) -> Self {
        InitialConfig { values }
    }

    pub fn uniform_of(n: usize, value: bool) -> Self {
        InitialConfig { values: vec![value; n] }
    }

    /// Node `v` gets bit `v` of `mask`.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        InitialConfig { values: (0..n).map(|v| mask >> v & 1 == 1).collect() }
    }

    pub fn mask(&self) -> u64 {
        self.values.iter().enumerate().fold(0, |m, (v, &b)| m | (b as u64) << v)
    }

    pub fn value(&self, v: NodeId) -> bool {
        self.values[v]
    }

    /// The common value when all nodes start equal.
    pub fn uniform(&self) -> Option<bool> {
        let first = *self.values.first()?;
        self.values.iter().all(|&b| b == first).then_some(first)
    }

    /// Every binary configuration on `n` nodes, ordered by mask.
    pub fn all(n: usize) -> impl Iterator<Item = InitialConfig> {
        (0..1u64 << n).map(move |m| InitialConfig::from_mask(n, m))
    }

    /// Parses `"a=0,b=1"`; every node must be assigned exactly once.
    pub fn parse(text: &str, labels: &NodeLabels) -> Result<Self, ModelError> {
        let mut values = vec![None; labels.len()];
        for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, val) = part
                .split_once('=')
                .ok_or_else(|| ModelError::BadInit(format!("expected label=value, got {part:?}")))?;
            let v = labels.index_of(name.trim())?;
            let b = match val.trim() {
                "0" => false,
                "1" => true,
                other => return Err(ModelError::BadInit(format!("value {other:?} is not 0 or 1"))),
            };
            if values[v].replace(b).is_some() {
                return Err(ModelError::BadInit(format!("{name} assigned twice")));
            }
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(v, b)| b.ok_or_else(|| ModelError::BadInit(format!("{} unassigned", labels.get(v)))))
            .collect::<Result<_, _>>()?;
        Ok(InitialConfig { values })
    }

    pub fn display(&self, labels: &NodeLabels) -> String {
        self.values
            .iter()
            .enumerate()
            .map(|(v, &b)| format!("{}={}", labels.get(v), b as u8))
            .collect::<Vec<_>>()
            .join(",")
    }
}
