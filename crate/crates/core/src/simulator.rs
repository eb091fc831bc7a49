//! Synchronous round engine.
//!
//! In round `r` every node may send one message to each out-neighbour of
//! the underlying graph; the message from `u` reaches `v` exactly when the
//! arc `(u, v)` belongs to the `r`-th event of the scenario. Receivers see
//! `None` otherwise, whether or not anything was sent.

use std::collections::HashMap;
use std::fmt::Debug;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{Arc, NodeId, NodeSet};
use crate::model::{all_words, EventFamily, InitialConfig, ModelError, Scenario};

/// Default cap on `|R|^horizon * 2^|V|` runs for exhaustive sweeps.
pub const DEFAULT_RUN_BUDGET: u64 = 1 << 22;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("initial configuration has {got} values for {expected} nodes")]
    InitSize { expected: usize, got: usize },
    #[error("protocol refers to unknown node {0}")]
    UnknownNode(NodeId),
    #[error("node {node} cannot tell events {left:?} and {right:?} apart after one round")]
    Indistinguishable { node: NodeId, left: String, right: String },
    #[error("originator {origin} does not reach node {node} in one round of event {event:?}")]
    NotReached { event: String, origin: NodeId, node: NodeId },
    #[error("decision map has {got} entries for {expected} events")]
    DecisionMapSize { expected: usize, got: usize },
    #[error("sweep needs {needed} runs, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },
}

/// A deterministic round-based algorithm. Nodes know the family but learn
/// about the current event only through what they receive.
pub trait Protocol {
    type State: Clone + PartialEq + Debug + Serialize;
    type Message: Clone + Debug + Serialize;

    fn name(&self) -> String;

    fn init(&self, node: NodeId, value: bool) -> Self::State;

    /// Message for out-neighbour `to` in the coming round, if any.
    fn message(&self, node: NodeId, state: &Self::State, to: NodeId) -> Option<Self::Message>;

    /// New state after round `round` (1-based). `inbox` has one entry per
    /// in-neighbour of the underlying graph, `None` when nothing arrived.
    fn transition(
        &self,
        node: NodeId,
        state: &Self::State,
        round: usize,
        inbox: &[(NodeId, Option<Self::Message>)],
    ) -> Self::State;

    fn decision(&self, state: &Self::State) -> Option<bool>;

    /// After this many rounds nodes neither send nor change state.
    fn halting_round(&self) -> Option<usize> {
        None
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Delivery<M> {
    pub from: NodeId,
    pub to: NodeId,
    pub message: M,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Decision {
    pub value: bool,
    /// Round at whose end the node first decided (0 = initially).
    pub round: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationTrace<S, M> {
    pub protocol: String,
    pub scenario: Vec<usize>,
    pub init: Vec<bool>,
    /// Configurations at the end of rounds `0..=|scenario|`.
    pub configurations: Vec<Vec<S>>,
    /// Arcs that were reliable in each round.
    pub links: Vec<Vec<Arc>>,
    pub deliveries: Vec<Vec<Delivery<M>>>,
    pub decisions: Vec<Option<Decision>>,
    /// `(node, round)` where a node changed or dropped an earlier decision.
    pub revoked: Vec<(NodeId, usize)>,
}

impl<S, M> SimulationTrace<S, M> {
    pub fn rounds(&self) -> usize {
        self.scenario.len()
    }

    pub fn final_states(&self) -> &[S] {
        self.configurations.last().expect("at least the initial configuration")
    }
}

/// Executes `protocol` under the finite scenario `scenario`.
pub fn run<P: Protocol>(
    protocol: &P,
    family: &EventFamily,
    scenario: &Scenario,
    init: &InitialConfig,
) -> Result<SimulationTrace<P::State, P::Message>, SimError> {
    scenario.validate(family)?;
    let n = family.node_count();
    if init.values.len() != n {
        return Err(SimError::InitSize { expected: n, got: init.values.len() });
    }
    let base_in = family.base().in_sets();
    let mut states: Vec<P::State> = (0..n).map(|v| protocol.init(v, init.value(v))).collect();
    let mut decisions: Vec<Option<Decision>> =
        states.iter().map(|s| protocol.decision(s).map(|value| Decision { value, round: 0 })).collect();
    let mut revoked = Vec::new();
    let mut configurations = vec![states.clone()];
    let mut links = Vec::with_capacity(scenario.len());
    let mut deliveries = Vec::with_capacity(scenario.len());
    let halt = protocol.halting_round().unwrap_or(usize::MAX);

    for (r, &letter) in scenario.word.iter().enumerate() {
        let round = r + 1;
        let event = family.event(letter);
        links.push(event.arcs().collect());
        let mut delivered = Vec::new();
        if round <= halt {
            let next: Vec<P::State> = (0..n)
                .map(|t| {
                    let inbox: Vec<(NodeId, Option<P::Message>)> = base_in[t]
                        .iter()
                        .map(|s| {
                            let msg = event.has_arc(s, t).then(|| protocol.message(s, &states[s], t)).flatten();
                            if let Some(m) = &msg {
                                delivered.push(Delivery { from: s, to: t, message: m.clone() });
                            }
                            (s, msg)
                        })
                        .collect();
                    protocol.transition(t, &states[t], round, &inbox)
                })
                .collect();
            states = next;
        }
        for (v, s) in states.iter().enumerate() {
            let now = protocol.decision(s);
            match (decisions[v], now) {
                (None, Some(value)) => decisions[v] = Some(Decision { value, round }),
                (Some(d), now) if now != Some(d.value) => revoked.push((v, round)),
                _ => {}
            }
        }
        deliveries.push(delivered);
        configurations.push(states.clone());
    }
    Ok(SimulationTrace {
        protocol: protocol.name(),
        scenario: scenario.word.clone(),
        init: init.values.clone(),
        configurations,
        links,
        deliveries,
        decisions,
        revoked,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ViolationKind {
    Termination,
    Validity,
    Agreement,
    RevokedDecision,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub scenario: Vec<usize>,
    pub init: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub protocol: String,
    pub horizon: usize,
    pub scenarios: usize,
    pub inits: usize,
    pub violation_count: usize,
    /// The first violations found, at most [`CheckReport::KEPT`].
    pub violations: Vec<Violation>,
}

impl CheckReport {
    pub const KEPT: usize = 16;

    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }

    pub fn summary(&self, family: &EventFamily) -> String {
        let mut s = format!(
            "{}: {} scenarios x {} inits at horizon {}: {}",
            self.protocol,
            self.scenarios,
            self.inits,
            self.horizon,
            if self.passed() { "pass".to_string() } else { format!("{} violations", self.violation_count) }
        );
        for v in &self.violations {
            let init = InitialConfig::new(v.init.clone());
            s.push_str(&format!(
                "\n  {:?} under {} with {}",
                v.kind,
                Scenario::new(v.scenario.clone()).display(family),
                init.display(family.labels())
            ));
        }
        s
    }
}

/// Checks termination, validity, agreement and decision stickiness of a
/// trace. Returns every violated property.
pub fn consensus_violations<S, M>(trace: &SimulationTrace<S, M>) -> Vec<ViolationKind> {
    let mut out = Vec::new();
    if trace.decisions.iter().any(Option::is_none) {
        out.push(ViolationKind::Termination);
    }
    let decided: Vec<bool> = trace.decisions.iter().flatten().map(|d| d.value).collect();
    if let Some(v) = InitialConfig::new(trace.init.clone()).uniform() {
        if decided.iter().any(|&d| d != v) {
            out.push(ViolationKind::Validity);
        }
    }
    if decided.windows(2).any(|p| p[0] != p[1]) {
        out.push(ViolationKind::Agreement);
    }
    if !trace.revoked.is_empty() {
        out.push(ViolationKind::RevokedDecision);
    }
    out
}

/// Runs every scenario of length `horizon` against every binary initial
/// configuration and records consensus violations.
pub fn exhaustive_check<P: Protocol>(
    protocol: &P,
    family: &EventFamily,
    horizon: usize,
    budget: u64,
) -> Result<CheckReport, SimError> {
    let n = family.node_count();
    let needed =
        (family.len() as u128).checked_pow(horizon as u32).and_then(|w| w.checked_mul(1u128 << n)).unwrap_or(u128::MAX);
    if needed > budget as u128 {
        return Err(SimError::BudgetExceeded { needed, budget });
    }
    let mut report = CheckReport {
        protocol: protocol.name(),
        horizon,
        scenarios: 0,
        inits: 1 << n,
        violation_count: 0,
        violations: Vec::new(),
    };
    for word in all_words(family.len(), horizon) {
        report.scenarios += 1;
        let scenario = Scenario::new(word);
        for init in InitialConfig::all(n) {
            let trace = run(protocol, family, &scenario, &init)?;
            for kind in consensus_violations(&trace) {
                report.violation_count += 1;
                if report.violations.len() < CheckReport::KEPT {
                    report.violations.push(Violation {
                        kind,
                        scenario: scenario.word.clone(),
                        init: init.values.clone(),
                    });
                }
            }
        }
    }
    Ok(report)
}

/// Flooding state: own input and the originator's value once known.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FloodState {
    pub own: bool,
    pub origin_value: Option<bool>,
    pub decided: Option<bool>,
}

/// `origin` sends its value every round and every informed node forwards
/// it, for `rounds` rounds. Pure broadcast: nobody decides.
#[derive(Clone, Copy, Debug)]
pub struct Flooding {
    pub origin: NodeId,
    pub rounds: usize,
}

pub fn flooding(origin: NodeId, rounds: usize) -> Flooding {
    Flooding { origin, rounds }
}

impl Protocol for Flooding {
    type State = FloodState;
    type Message = bool;

    fn name(&self) -> String {
        format!("flooding(origin={}, rounds={})", self.origin, self.rounds)
    }

    fn init(&self, node: NodeId, value: bool) -> FloodState {
        FloodState { own: value, origin_value: (node == self.origin).then_some(value), decided: None }
    }

    fn message(&self, _: NodeId, state: &FloodState, _: NodeId) -> Option<bool> {
        state.origin_value
    }

    fn transition(&self, _: NodeId, state: &FloodState, _: usize, inbox: &[(NodeId, Option<bool>)]) -> FloodState {
        let heard = inbox.iter().find_map(|(_, m)| *m);
        FloodState { origin_value: state.origin_value.or(heard), ..*state }
    }

    fn decision(&self, state: &FloodState) -> Option<bool> {
        state.decided
    }

    fn halting_round(&self) -> Option<usize> {
        Some(self.rounds)
    }
}

/// Nodes holding the originator's value at the end of a flooding trace.
pub fn informed_set<M>(trace: &SimulationTrace<FloodState, M>) -> NodeSet {
    trace.final_states().iter().enumerate().filter(|(_, s)| s.origin_value.is_some()).map(|(v, _)| v).collect()
}

/// Floods the value of `origin` for `rounds` rounds; then every node
/// decides that value if it arrived and its own input otherwise.
#[derive(Clone, Copy, Debug)]
pub struct BroadcastConsensus {
    pub origin: NodeId,
    pub rounds: usize,
}

pub fn broadcast_consensus(origin: NodeId, rounds: usize) -> BroadcastConsensus {
    BroadcastConsensus { origin, rounds }
}

impl BroadcastConsensus {
    fn flood(&self) -> Flooding {
        Flooding { origin: self.origin, rounds: self.rounds }
    }

    fn settle(&self, state: FloodState) -> FloodState {
        FloodState { decided: Some(state.origin_value.unwrap_or(state.own)), ..state }
    }
}

impl Protocol for BroadcastConsensus {
    type State = FloodState;
    type Message = bool;

    fn name(&self) -> String {
        format!("broadcast-consensus(origin={}, rounds={})", self.origin, self.rounds)
    }

    fn init(&self, node: NodeId, value: bool) -> FloodState {
        let s = self.flood().init(node, value);
        if self.rounds == 0 {
            self.settle(s)
        } else {
            s
        }
    }

    fn message(&self, node: NodeId, state: &FloodState, to: NodeId) -> Option<bool> {
        self.flood().message(node, state, to)
    }

    fn transition(
        &self,
        node: NodeId,
        state: &FloodState,
        round: usize,
        inbox: &[(NodeId, Option<bool>)],
    ) -> FloodState {
        let s = self.flood().transition(node, state, round, inbox);
        if round == self.rounds {
            self.settle(s)
        } else {
            s
        }
    }

    fn decision(&self, state: &FloodState) -> Option<bool> {
        state.decided
    }

    fn halting_round(&self) -> Option<usize> {
        Some(self.rounds)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct OneShotState {
    pub own: bool,
    pub decided: Option<bool>,
}

/// One round: everyone sends its input; a node that hears something decides
/// the value of its lowest-indexed sender, otherwise its own input.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExchangeOnce;

impl Protocol for ExchangeOnce {
    type State = OneShotState;
    type Message = bool;

    fn name(&self) -> String {
        "exchange-once".to_string()
    }

    fn init(&self, _: NodeId, value: bool) -> OneShotState {
        OneShotState { own: value, decided: None }
    }

    fn message(&self, _: NodeId, state: &OneShotState, _: NodeId) -> Option<bool> {
        Some(state.own)
    }

    fn transition(&self, _: NodeId, state: &OneShotState, _: usize, inbox: &[(NodeId, Option<bool>)]) -> OneShotState {
        let heard = inbox.iter().find_map(|(_, m)| *m);
        OneShotState { decided: Some(heard.unwrap_or(state.own)), ..*state }
    }

    fn decision(&self, state: &OneShotState) -> Option<bool> {
        state.decided
    }

    fn halting_round(&self) -> Option<usize> {
        Some(1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DetectState {
    pub own: bool,
    pub decided: Option<bool>,
}

/// One round: everyone sends its input, each node recognises the event from
/// the set of in-neighbours it heard, and decides the input of the
/// originator assigned to that event.
#[derive(Clone, Debug)]
pub struct EventDetection {
    origins: Vec<NodeId>,
    /// Per node: heard-from set to event index.
    patterns: Vec<HashMap<NodeSet, usize>>,
}

pub fn event_detection_consensus(family: &EventFamily, origins: &[NodeId]) -> Result<EventDetection, SimError> {
    EventDetection::new(family, origins)
}

impl EventDetection {
    pub fn new(family: &EventFamily, origins: &[NodeId]) -> Result<Self, SimError> {
        let n = family.node_count();
        if origins.len() != family.len() {
            return Err(SimError::DecisionMapSize { expected: family.len(), got: origins.len() });
        }
        if let Some(&bad) = origins.iter().find(|&&o| o >= n) {
            return Err(SimError::UnknownNode(bad));
        }
        for (e, &o) in origins.iter().enumerate() {
            let reached = family.event(e).out_neighbors(o).union(NodeSet::singleton(o));
            if let Some(node) = family.base().nodes().difference(reached).first() {
                return Err(SimError::NotReached { event: family.name(e).to_string(), origin: o, node });
            }
        }
        let ins: Vec<Vec<NodeSet>> = family.events().iter().map(|e| e.in_sets()).collect();
        let mut patterns = vec![HashMap::new(); n];
        for (v, table) in patterns.iter_mut().enumerate() {
            for (e, ev_in) in ins.iter().enumerate() {
                if let Some(prev) = table.insert(ev_in[v], e) {
                    return Err(SimError::Indistinguishable {
                        node: v,
                        left: family.name(prev).to_string(),
                        right: family.name(e).to_string(),
                    });
                }
            }
        }
        Ok(EventDetection { origins: origins.to_vec(), patterns })
    }
}

impl Protocol for EventDetection {
    type State = DetectState;
    type Message = bool;

    fn name(&self) -> String {
        format!("event-detection(origins={:?})", self.origins)
    }

    fn init(&self, _: NodeId, value: bool) -> DetectState {
        DetectState { own: value, decided: None }
    }

    fn message(&self, _: NodeId, state: &DetectState, _: NodeId) -> Option<bool> {
        Some(state.own)
    }

    fn transition(&self, node: NodeId, state: &DetectState, _: usize, inbox: &[(NodeId, Option<bool>)]) -> DetectState {
        let heard: NodeSet = inbox.iter().filter(|(_, m)| m.is_some()).map(|(s, _)| *s).collect();
        let decided = self.patterns[node].get(&heard).and_then(|&e| {
            let o = self.origins[e];
            if o == node {
                Some(state.own)
            } else {
                inbox.iter().find(|(s, _)| *s == o).and_then(|(_, m)| *m)
            }
        });
        DetectState { own: state.own, decided }
    }

    fn decision(&self, state: &DetectState) -> Option<bool> {
        state.decided
    }

    fn halting_round(&self) -> Option<usize> {
        Some(1)
    }
}
