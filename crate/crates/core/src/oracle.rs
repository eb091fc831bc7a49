//! Exhaustive search for the fastest consensus protocol on small instances.
//!
//! After `r` rounds a deterministic node can know at most its full-information
//! view: its input and, recursively, the views it heard from each delivering
//! in-neighbour. Two executions (input vector, scenario word) that give some
//! node the same view force that node to decide the same value, and by
//! agreement all nodes of both executions must then decide alike. So an
//! `r`-round protocol exists exactly when no connected component of the
//! "shares a view" relation contains both an all-0 and an all-1 execution.
//! On success the component labels form a decision table; on failure the path
//! between the two uniform executions is an indistinguishability chain.

use std::collections::{HashMap, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::graph::{NodeId, NodeLabels, NodeSet};
use crate::model::{is_convex, EventFamily, InitialConfig, Scenario};
use crate::simulator::{self, Protocol, SimError};
use crate::solvability::{optimal_broadcast_rounds, SolveError, DEFAULT_GAME_NODE_LIMIT};

/// Default cap on `|R|^r * 2^|V|` executions per horizon.
pub const DEFAULT_ORACLE_BUDGET: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("horizon {rounds} needs {needed} executions, budget is {budget}")]
    BudgetExceeded { rounds: usize, needed: u128, budget: u64 },
    #[error("the family is not convex")]
    NotConvex,
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Decision table rows included in JSON reports.
pub const DECISION_ROWS_SHOWN: usize = 4096;

/// Interned view identifier; only meaningful together with its [`ViewTable`].
pub type ViewId = u32;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum ViewKey {
    Initial { node: NodeId, value: bool },
    Round { own: ViewId, heard: Vec<(NodeId, ViewId)> },
}

/// Hash-consed full-information views.
#[derive(Clone, Debug, Default)]
pub struct ViewTable {
    ids: HashMap<ViewKey, ViewId>,
    nodes: Vec<NodeId>,
    keys: Vec<ViewKey>,
}

impl ViewTable {
    fn intern(&mut self, key: ViewKey) -> ViewId {
        let node = match &key {
            ViewKey::Initial { node, .. } => *node,
            ViewKey::Round { own, .. } => self.nodes[*own as usize],
        };
        let next = self.nodes.len() as ViewId;
        if let Some(&id) = self.ids.get(&key) {
            return id;
        }
        self.ids.insert(key.clone(), next);
        self.keys.push(key);
        self.nodes.push(node);
        next
    }

    fn lookup(&self, key: &ViewKey) -> Option<ViewId> {
        self.ids.get(key).copied()
    }

    /// The node a view belongs to.
    pub fn node_of(&self, id: ViewId) -> NodeId {
        self.nodes[id as usize]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Compact rendering: `a=0` for an initial view, `a[own|b:..,c:..]`
    /// after a round, listing what arrived from each in-neighbour.
    pub fn describe(&self, id: ViewId, labels: &NodeLabels) -> String {
        match &self.keys[id as usize] {
            ViewKey::Initial { node, value } => format!("{}={}", labels.get(*node), u8::from(*value)),
            ViewKey::Round { own, heard } => {
                let parts: Vec<String> =
                    heard.iter().map(|&(s, v)| format!("{}:{}", labels.get(s), self.describe(v, labels))).collect();
                format!("{}[{}|{}]", labels.get(self.node_of(id)), self.describe(*own, labels), parts.join(","))
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Structural full-information view, built by [`ViewRecorder`] through the
/// simulator. Used to re-check chains without the interning tables.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ExecutionView {
    Initial { node: NodeId, value: bool },
    Round { own: Box<ExecutionView>, heard: Vec<(NodeId, ExecutionView)> },
}

impl ExecutionView {
    pub fn node(&self) -> NodeId {
        match self {
            ExecutionView::Initial { node, .. } => *node,
            ExecutionView::Round { own, .. } => own.node(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            ExecutionView::Initial { .. } => 0,
            ExecutionView::Round { own, .. } => own.depth() + 1,
        }
    }
}

/// Full-information protocol that never decides; its states are the views.
#[derive(Clone, Copy, Debug, Default)]
pub struct ViewRecorder;

impl Protocol for ViewRecorder {
    type State = ExecutionView;
    type Message = ExecutionView;

    fn name(&self) -> String {
        "view-recorder".to_string()
    }

    fn init(&self, node: NodeId, value: bool) -> ExecutionView {
        ExecutionView::Initial { node, value }
    }

    fn message(&self, _: NodeId, state: &ExecutionView, _: NodeId) -> Option<ExecutionView> {
        Some(state.clone())
    }

    fn transition(
        &self,
        _: NodeId,
        state: &ExecutionView,
        _: usize,
        inbox: &[(NodeId, Option<ExecutionView>)],
    ) -> ExecutionView {
        ExecutionView::Round {
            own: Box::new(state.clone()),
            heard: inbox.iter().filter_map(|(s, m)| m.clone().map(|v| (*s, v))).collect(),
        }
    }

    fn decision(&self, _: &ExecutionView) -> Option<bool> {
        None
    }
}

/// Protocol emitted by the oracle: full-information exchange for `rounds`
/// rounds, then a table lookup on the final view.
#[derive(Clone, Debug)]
pub struct DecisionTable {
    rounds: usize,
    views: ViewTable,
    decisions: HashMap<ViewId, bool>,
}

impl DecisionTable {
    pub fn rounds(&self) -> usize {
        self.rounds
    }

    /// Number of final views with an assigned decision.
    pub fn entries(&self) -> usize {
        self.decisions.len()
    }

    pub fn decision_for(&self, view: ViewId) -> Option<bool> {
        self.decisions.get(&view).copied()
    }

    /// `(node, rendered view, decision)` for every final view, sorted.
    pub fn rows(&self, labels: &NodeLabels) -> Vec<(String, String, bool)> {
        let mut rows: Vec<_> = self
            .decisions
            .iter()
            .map(|(&id, &d)| (labels.get(self.views.node_of(id)).to_string(), self.views.describe(id, labels), d))
            .collect();
        rows.sort();
        rows
    }
}

impl Protocol for DecisionTable {
    type State = Option<ViewId>;
    type Message = ViewId;

    fn name(&self) -> String {
        format!("decision-table(rounds={}, views={})", self.rounds, self.decisions.len())
    }

    fn init(&self, node: NodeId, value: bool) -> Option<ViewId> {
        self.views.lookup(&ViewKey::Initial { node, value })
    }

    fn message(&self, _: NodeId, state: &Option<ViewId>, _: NodeId) -> Option<ViewId> {
        *state
    }

    fn transition(
        &self,
        _: NodeId,
        state: &Option<ViewId>,
        _: usize,
        inbox: &[(NodeId, Option<ViewId>)],
    ) -> Option<ViewId> {
        let own = (*state)?;
        let heard = inbox.iter().filter_map(|(s, m)| m.map(|v| (*s, v))).collect();
        self.views.lookup(&ViewKey::Round { own, heard })
    }

    fn decision(&self, state: &Option<ViewId>) -> Option<bool> {
        state.and_then(|id| self.decisions.get(&id).copied())
    }

    fn halting_round(&self) -> Option<usize> {
        Some(self.rounds)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ChainLink {
    pub init: InitialConfig,
    pub scenario: Scenario,
}

/// Executions from a uniform-0 to a uniform-1 input where each adjacent
/// pair leaves node `shared[i]` with the same view.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IndistinguishabilityChain {
    pub executions: Vec<ChainLink>,
    pub shared: Vec<NodeId>,
}

impl IndistinguishabilityChain {
    pub fn display(&self, family: &EventFamily) -> String {
        let labels = family.labels();
        let mut out = String::new();
        for (i, link) in self.executions.iter().enumerate() {
            if i > 0 {
                out.push_str(&format!("  ~{}~ ", labels.get(self.shared[i - 1])));
            }
            out.push_str(&format!("[{} | {}]", link.init.display(labels), link.scenario.display(family)));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HorizonRow {
    pub rounds: usize,
    pub executions: u64,
    pub components: usize,
    pub solvable: bool,
}

#[derive(Clone, Debug)]
pub enum OracleOutcome {
    Solvable { rounds: usize, protocol: DecisionTable },
    UnsolvableUpTo { horizon: usize, chain: IndistinguishabilityChain },
}

#[derive(Clone, Debug)]
pub struct OracleResult {
    pub table: Vec<HorizonRow>,
    pub outcome: OracleOutcome,
}

impl OracleResult {
    pub fn rounds(&self) -> Option<usize> {
        match &self.outcome {
            OracleOutcome::Solvable { rounds, .. } => Some(*rounds),
            OracleOutcome::UnsolvableUpTo { .. } => None,
        }
    }

    pub fn report(&self, family: &EventFamily) -> serde_json::Value {
        let outcome = match &self.outcome {
            OracleOutcome::Solvable { rounds, protocol } => serde_json::json!({
                "solvable": true,
                "rounds": rounds,
                "decision_table_entries": protocol.entries(),
                "decision_table": protocol
                    .rows(family.labels())
                    .into_iter()
                    .take(DECISION_ROWS_SHOWN)
                    .map(|(node, view, d)| serde_json::json!({ "node": node, "view": view, "decide": u8::from(d) }))
                    .collect::<Vec<_>>(),
            }),
            OracleOutcome::UnsolvableUpTo { horizon, chain } => serde_json::json!({
                "solvable": false,
                "unsolvable_up_to": horizon,
                "note": "no deterministic protocol decides within this many rounds; a finite family \
                         that admits consensus admits it within a uniform bound, but this search \
                         says nothing beyond the horizon",
                "chain": chain.executions.iter().enumerate().map(|(i, l)| serde_json::json!({
                    "init": l.init.display(family.labels()),
                    "scenario": l.scenario.word.iter().map(|&e| family.name(e)).collect::<Vec<_>>(),
                    "shared_with_next": chain.shared.get(i).map(|&v| family.labels().get(v)),
                })).collect::<Vec<_>>(),
            }),
        };
        serde_json::json!({ "horizons": self.table, "outcome": outcome })
    }
}

struct UnionFind(Vec<u32>);

impl UnionFind {
    fn find(&mut self, mut x: u32) -> u32 {
        while self.0[x as usize] != x {
            let p = self.0[x as usize];
            self.0[x as usize] = self.0[p as usize];
            x = p;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb) as usize] = ra.min(rb);
        }
    }
}

/// Every execution of one horizon with the final view of each node.
/// Execution `i` has word index `i >> n` (lexicographic) and input mask
/// `i & (2^n - 1)`.
struct Executions {
    n: usize,
    rounds: usize,
    views: ViewTable,
    final_views: Vec<ViewId>,
}

/// Depth-first walk over words; a layer holds `2^n * n` view ids, one
/// per (input mask, node).
struct Builder {
    rounds: usize,
    n: usize,
    base_in: Vec<NodeSet>,
    ins: Vec<Vec<NodeSet>>,
    views: ViewTable,
    out: Vec<ViewId>,
}

impl Builder {
    fn descend(&mut self, depth: usize, layer: &[ViewId]) {
        if depth == self.rounds {
            self.out.extend_from_slice(layer);
            return;
        }
        for e in 0..self.ins.len() {
            let mut next = Vec::with_capacity(layer.len());
            for cfg in layer.chunks(self.n) {
                for v in 0..self.n {
                    let heard =
                        self.base_in[v].iter().filter(|&s| self.ins[e][v].contains(s)).map(|s| (s, cfg[s])).collect();
                    next.push(self.views.intern(ViewKey::Round { own: cfg[v], heard }));
                }
            }
            self.descend(depth + 1, &next);
        }
    }
}

impl Executions {
    fn build(family: &EventFamily, rounds: usize) -> Self {
        let n = family.node_count();
        let inits = 1usize << n;
        let base_in = family.base().in_sets();
        let ins: Vec<Vec<_>> = family.events().iter().map(|e| e.in_sets()).collect();
        let mut views = ViewTable::default();
        let start: Vec<ViewId> = (0..inits)
            .flat_map(|m| (0..n).map(move |v| (m, v)))
            .map(|(m, v)| views.intern(ViewKey::Initial { node: v, value: m >> v & 1 == 1 }))
            .collect::<Vec<_>>();
        let mut builder = Builder {
            rounds,
            n,
            base_in,
            ins,
            views,
            out: Vec::with_capacity(family.len().pow(rounds as u32) * inits * n),
        };
        builder.descend(0, &start);
        let Builder { views, out: final_views, .. } = builder;
        Executions { n, rounds, views, final_views }
    }

    fn count(&self) -> usize {
        self.final_views.len() / self.n.max(1)
    }

    fn mask(&self, exec: usize) -> u64 {
        (exec & ((1usize << self.n) - 1)) as u64
    }

    fn uniform(&self, exec: usize) -> Option<bool> {
        let m = self.mask(exec);
        if m == 0 {
            Some(false)
        } else if m == (1u64 << self.n) - 1 {
            Some(true)
        } else {
            None
        }
    }

    fn link(&self, exec: usize, alphabet: usize) -> ChainLink {
        let mut word_index = exec >> self.n;
        let mut word = vec![0; self.rounds];
        for slot in word.iter_mut().rev() {
            *slot = word_index % alphabet;
            word_index /= alphabet;
        }
        ChainLink { init: InitialConfig::from_mask(self.n, self.mask(exec)), scenario: Scenario::new(word) }
    }

    fn components(&self) -> UnionFind {
        let mut uf = UnionFind((0..self.count() as u32).collect());
        let mut first: HashMap<ViewId, u32> = HashMap::new();
        for (i, &view) in self.final_views.iter().enumerate() {
            let exec = (i / self.n) as u32;
            let rep = *first.entry(view).or_insert(exec);
            uf.union(rep, exec);
        }
        uf
    }

    /// Shortest chain from an all-0 execution to an all-1 execution through
    /// shared views, starting from `from`.
    fn chain_from(&self, from: usize, family: &EventFamily) -> Option<IndistinguishabilityChain> {
        let mut by_view: HashMap<ViewId, Vec<u32>> = HashMap::new();
        for (i, &view) in self.final_views.iter().enumerate() {
            by_view.entry(view).or_default().push((i / self.n) as u32);
        }
        let mut prev: HashMap<u32, (u32, NodeId)> = HashMap::new();
        let mut queue = VecDeque::from([from as u32]);
        let mut seen_views = std::collections::HashSet::new();
        let target = loop {
            let x = queue.pop_front()?;
            if self.uniform(x as usize) == Some(true) {
                break x;
            }
            for &view in &self.final_views[x as usize * self.n..(x as usize + 1) * self.n] {
                if !seen_views.insert(view) {
                    continue;
                }
                for &y in &by_view[&view] {
                    if y != from as u32 && !prev.contains_key(&y) {
                        prev.insert(y, (x, self.views.node_of(view)));
                        queue.push_back(y);
                    }
                }
            }
        };
        let mut execs = vec![target];
        let mut shared = Vec::new();
        let mut cur = target;
        while cur != from as u32 {
            let (p, node) = prev[&cur];
            execs.push(p);
            shared.push(node);
            cur = p;
        }
        execs.reverse();
        shared.reverse();
        Some(IndistinguishabilityChain {
            executions: execs.iter().map(|&e| self.link(e as usize, family.len())).collect(),
            shared,
        })
    }
}

fn executions_needed(family: &EventFamily, rounds: usize) -> u128 {
    (family.len() as u128)
        .checked_pow(rounds as u32)
        .and_then(|w| w.checked_mul(1u128 << family.node_count()))
        .unwrap_or(u128::MAX)
}

/// Smallest `r <= max_horizon` admitting an `r`-round consensus protocol,
/// with that protocol; otherwise a chain showing why `max_horizon` rounds
/// do not suffice.
pub fn min_consensus_rounds(
    family: &EventFamily,
    max_horizon: usize,
    budget: u64,
) -> Result<OracleResult, OracleError> {
    let mut table = Vec::new();
    for rounds in 0..=max_horizon {
        let needed = executions_needed(family, rounds);
        if needed > budget as u128 {
            return Err(OracleError::BudgetExceeded { rounds, needed, budget });
        }
        let ex = Executions::build(family, rounds);
        let mut uf = ex.components();
        // per component root: value of its lowest-index uniform execution
        let mut label: HashMap<u32, bool> = HashMap::new();
        let mut mixed_from = None;
        for exec in 0..ex.count() {
            if let Some(v) = ex.uniform(exec) {
                let root = uf.find(exec as u32);
                match label.get(&root) {
                    None => {
                        label.insert(root, v);
                    }
                    Some(&w) if w != v => {
                        mixed_from.get_or_insert(root);
                    }
                    _ => {}
                }
            }
        }
        let roots: std::collections::HashSet<u32> = (0..ex.count() as u32).map(|e| uf.find(e)).collect();
        let solvable = mixed_from.is_none();
        table.push(HorizonRow { rounds, executions: ex.count() as u64, components: roots.len(), solvable });
        if solvable {
            let mut decisions = HashMap::new();
            for (i, &view) in ex.final_views.iter().enumerate() {
                let root = uf.find((i / ex.n) as u32);
                decisions.insert(view, label.get(&root).copied().unwrap_or(false));
            }
            let protocol = DecisionTable { rounds, views: ex.views, decisions };
            return Ok(OracleResult { table, outcome: OracleOutcome::Solvable { rounds, protocol } });
        }
        if rounds == max_horizon {
            let root = mixed_from.expect("unsolvable horizon has a mixed component");
            let start = (0..ex.count())
                .find(|&e| ex.uniform(e) == Some(false) && uf.find(e as u32) == root)
                .expect("mixed component holds an all-0 execution");
            let chain = ex.chain_from(start, family).expect("mixed component is connected");
            return Ok(OracleResult { table, outcome: OracleOutcome::UnsolvableUpTo { horizon: max_horizon, chain } });
        }
    }
    unreachable!("loop returns at max_horizon")
}

/// Replays every execution of the chain through the simulator and checks
/// that adjacent executions give the named node identical views, and that
/// the chain runs between an all-0 and an all-1 input.
pub fn verify_chain(chain: &IndistinguishabilityChain, family: &EventFamily) -> bool {
    let (Some(first), Some(last)) = (chain.executions.first(), chain.executions.last()) else {
        return false;
    };
    if chain.shared.len() + 1 != chain.executions.len() {
        return false;
    }
    let ends = (first.init.uniform(), last.init.uniform());
    if ends != (Some(false), Some(true)) && ends != (Some(true), Some(false)) {
        return false;
    }
    let rounds = first.scenario.len();
    let mut finals = Vec::with_capacity(chain.executions.len());
    for link in &chain.executions {
        if link.scenario.len() != rounds {
            return false;
        }
        match simulator::run(&ViewRecorder, family, &link.scenario, &link.init) {
            Ok(trace) => finals.push(trace.final_states().to_vec()),
            Err(_) => return false,
        }
    }
    chain.shared.iter().enumerate().all(|(i, &v)| v < family.node_count() && finals[i][v] == finals[i + 1][v])
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub consensus_rounds: Option<usize>,
    pub horizon: usize,
    pub broadcast_source: Option<NodeId>,
    pub broadcast_rounds: Option<usize>,
    pub agree: bool,
}

/// Compares the oracle's fastest consensus with the fastest broadcast on a
/// convex family. Non-broadcastable families are searched up to `|V|`
/// rounds and agree when the oracle finds nothing either.
pub fn equal_rounds_audit(family: &EventFamily, budget: u64) -> Result<AuditReport, OracleError> {
    if !is_convex(family).is_convex() {
        return Err(OracleError::NotConvex);
    }
    let broadcast = optimal_broadcast_rounds(family, DEFAULT_GAME_NODE_LIMIT)?;
    let horizon = broadcast.map_or(family.node_count(), |(_, r)| r);
    let consensus = min_consensus_rounds(family, horizon, budget)?.rounds();
    Ok(AuditReport {
        consensus_rounds: consensus,
        horizon,
        broadcast_source: broadcast.map(|b| b.0),
        broadcast_rounds: broadcast.map(|b| b.1),
        agree: consensus == broadcast.map(|b| b.1),
    })
}
