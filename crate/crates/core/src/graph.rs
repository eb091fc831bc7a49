//! Directed graphs over at most 64 nodes, stored as out-neighbour bitmasks.
//!
//! Both the underlying network and every communication event are [`Digraph`]s
//! on the same node set; labels are kept separately (see [`NodeLabels`]) and
//! only matter at the I/O boundary.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense node index, `0..node_count`.
pub type NodeId = usize;

/// An arc `(tail, head)`.
pub type Arc = (NodeId, NodeId);

/// Largest supported node count (node sets are `u64` bitmasks).
pub const MAX_NODES: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("node {node} out of range for a graph with {node_count} nodes")]
    NodeOutOfRange { node: NodeId, node_count: usize },
    #[error("{0} nodes requested, at most {MAX_NODES} are supported")]
    TooManyNodes(usize),
    #[error("self-loop on node {0} is not permitted")]
    SelfLoop(NodeId),
    #[error("graph is not symmetric: arc ({0}, {1}) has no reverse")]
    NotSymmetric(NodeId, NodeId),
    #[error("vertex connectivity needs at least two nodes")]
    TooFewNodes,
    #[error("duplicate node label {0:?}")]
    DuplicateLabel(String),
    #[error("unknown node label {0:?}")]
    UnknownLabel(String),
}

/// A set of nodes as a bitmask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeSet(u64);

impl NodeSet {
    pub const EMPTY: NodeSet = NodeSet(0);

    pub fn from_bits(bits: u64) -> Self {
        NodeSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    /// All nodes `0..n`.
    pub fn full(n: usize) -> Self {
        if n >= 64 {
            NodeSet(u64::MAX)
        } else {
            NodeSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(v: NodeId) -> Self {
        NodeSet(1u64 << v)
    }

    pub fn contains(self, v: NodeId) -> bool {
        v < 64 && self.0 & (1u64 << v) != 0
    }

    pub fn insert(&mut self, v: NodeId) {
        self.0 |= 1u64 << v;
    }

    pub fn remove(&mut self, v: NodeId) {
        self.0 &= !(1u64 << v);
    }

    pub fn union(self, other: NodeSet) -> NodeSet {
        NodeSet(self.0 | other.0)
    }

    pub fn intersection(self, other: NodeSet) -> NodeSet {
        NodeSet(self.0 & other.0)
    }

    pub fn difference(self, other: NodeSet) -> NodeSet {
        NodeSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: NodeSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Lowest member, if any.
    pub fn first(self) -> Option<NodeId> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as NodeId)
    }

    pub fn iter(self) -> NodeSetIter {
        NodeSetIter(self.0)
    }
}

impl fmt::Debug for NodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<NodeId> for NodeSet {
    fn from_iter<I: IntoIterator<Item = NodeId>>(iter: I) -> Self {
        let mut s = NodeSet::EMPTY;
        for v in iter {
            s.insert(v);
        }
        s
    }
}

impl IntoIterator for NodeSet {
    type Item = NodeId;
    type IntoIter = NodeSetIter;
    fn into_iter(self) -> NodeSetIter {
        self.iter()
    }
}

pub struct NodeSetIter(u64);

impl Iterator for NodeSetIter {
    type Item = NodeId;
    fn next(&mut self) -> Option<NodeId> {
        if self.0 == 0 {
            return None;
        }
        let v = self.0.trailing_zeros() as NodeId;
        self.0 &= self.0 - 1;
        Some(v)
    }
}

/// Heads of a set of arcs, `{ t | (s, t) in arcs }`.
pub fn heads<I: IntoIterator<Item = Arc>>(arcs: I) -> NodeSet {
    arcs.into_iter().map(|(_, t)| t).collect()
}

/// A digraph on nodes `0..node_count`. Arc sets are deduplicated by
/// construction, and equality and ordering are structural.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digraph {
    out: Vec<NodeSet>,
}

impl fmt::Debug for Digraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Digraph")
            .field("node_count", &self.node_count())
            .field("arcs", &self.arcs().collect::<Vec<_>>())
            .finish()
    }
}

impl Digraph {
    /// A graph with `n` nodes and no arcs.
    pub fn empty(n: usize) -> Result<Self, GraphError> {
        if n > MAX_NODES {
            return Err(GraphError::TooManyNodes(n));
        }
        Ok(Digraph { out: vec![NodeSet::EMPTY; n] })
    }

    /// Builds a graph from arcs, rejecting self-loops.
    pub fn from_arcs<I: IntoIterator<Item = Arc>>(n: usize, arcs: I) -> Result<Self, GraphError> {
        Self::build(n, arcs, false)
    }

    /// Like [`Digraph::from_arcs`] but keeps self-loops.
    pub fn from_arcs_with_loops<I: IntoIterator<Item = Arc>>(n: usize, arcs: I) -> Result<Self, GraphError> {
        Self::build(n, arcs, true)
    }

    fn build<I: IntoIterator<Item = Arc>>(n: usize, arcs: I, allow_loops: bool) -> Result<Self, GraphError> {
        let mut g = Self::empty(n)?;
        for (s, t) in arcs {
            g.check_node(s)?;
            g.check_node(t)?;
            if s == t && !allow_loops {
                return Err(GraphError::SelfLoop(s));
            }
            g.out[s].insert(t);
        }
        Ok(g)
    }

    /// Builds a graph directly from out-neighbour masks.
    pub fn from_out_sets(out: Vec<NodeSet>) -> Result<Self, GraphError> {
        let n = out.len();
        if n > MAX_NODES {
            return Err(GraphError::TooManyNodes(n));
        }
        let all = NodeSet::full(n);
        for (v, s) in out.iter().enumerate() {
            if !s.is_subset(all) {
                let bad = s.difference(all).first().unwrap_or(n);
                return Err(GraphError::NodeOutOfRange { node: bad, node_count: n });
            }
            if s.contains(v) {
                return Err(GraphError::SelfLoop(v));
            }
        }
        Ok(Digraph { out })
    }

    /// Complete symmetric digraph `K_n`.
    pub fn complete(n: usize) -> Result<Self, GraphError> {
        let arcs = (0..n).flat_map(|s| (0..n).filter(move |&t| t != s).map(move |t| (s, t)));
        Self::from_arcs(n, arcs)
    }

    /// Symmetric cycle `C_n`.
    pub fn cycle(n: usize) -> Result<Self, GraphError> {
        let arcs = (0..n).flat_map(|v| {
            let w = (v + 1) % n;
            [(v, w), (w, v)]
        });
        Self::from_arcs(n, arcs.filter(|(s, t)| s != t))
    }

    /// Symmetric hypercube `Q_d` on `2^d` nodes; node `v` is adjacent to
    /// `v ^ (1 << i)`.
    pub fn hypercube(dimension: usize) -> Result<Self, GraphError> {
        if dimension > 6 {
            return Err(GraphError::TooManyNodes(1usize << dimension.min(20)));
        }
        let n = 1usize << dimension;
        let arcs = (0..n).flat_map(|v| (0..dimension).map(move |i| (v, v ^ (1 << i))));
        Self::from_arcs(n, arcs)
    }

    pub fn node_count(&self) -> usize {
        self.out.len()
    }

    pub fn nodes(&self) -> NodeSet {
        NodeSet::full(self.node_count())
    }

    pub fn arc_count(&self) -> usize {
        self.out.iter().map(|s| s.len()).sum()
    }

    /// Arcs in lexicographic `(tail, head)` order.
    pub fn arcs(&self) -> impl Iterator<Item = Arc> + '_ {
        self.out.iter().enumerate().flat_map(|(s, set)| set.iter().map(move |t| (s, t)))
    }

    pub fn has_arc(&self, s: NodeId, t: NodeId) -> bool {
        self.out.get(s).is_some_and(|set| set.contains(t))
    }

    pub fn out_neighbors(&self, v: NodeId) -> NodeSet {
        self.out[v]
    }

    pub fn in_neighbors(&self, v: NodeId) -> NodeSet {
        self.out.iter().enumerate().filter(|(_, set)| set.contains(v)).map(|(s, _)| s).collect()
    }

    /// In-neighbour mask of every node.
    pub fn in_sets(&self) -> Vec<NodeSet> {
        let mut ins = vec![NodeSet::EMPTY; self.node_count()];
        for (s, t) in self.arcs() {
            ins[t].insert(s);
        }
        ins
    }

    pub fn out_sets(&self) -> &[NodeSet] {
        &self.out
    }

    /// The graph with one more arc.
    pub fn with_arc(&self, (s, t): Arc) -> Digraph {
        let mut g = self.clone();
        g.out[s].insert(t);
        g
    }

    pub fn without_arc(&self, (s, t): Arc) -> Digraph {
        let mut g = self.clone();
        g.out[s].remove(t);
        g
    }

    /// Arc-wise union of two graphs on the same node set.
    pub fn union(&self, other: &Digraph) -> Digraph {
        debug_assert_eq!(self.node_count(), other.node_count());
        Digraph { out: self.out.iter().zip(&other.out).map(|(a, b)| a.union(*b)).collect() }
    }

    pub fn is_subgraph_of(&self, other: &Digraph) -> bool {
        self.node_count() == other.node_count() && self.out.iter().zip(&other.out).all(|(a, b)| a.is_subset(*b))
    }

    pub fn is_symmetric(&self) -> bool {
        self.arcs().all(|(s, t)| self.has_arc(t, s))
    }

    /// Arcs whose head lies in `targets`.
    pub fn arcs_into(&self, targets: NodeSet) -> Digraph {
        Digraph { out: self.out.iter().map(|s| s.intersection(targets)).collect() }
    }

    pub fn check_node(&self, v: NodeId) -> Result<(), GraphError> {
        if v < self.node_count() {
            Ok(())
        } else {
            Err(GraphError::NodeOutOfRange { node: v, node_count: self.node_count() })
        }
    }

    /// Nodes reachable from `set` in one step, plus `set` itself.
    pub fn step(&self, set: NodeSet) -> NodeSet {
        set.iter().fold(set, |acc, v| acc.union(self.out[v]))
    }

    /// Nodes `v` with a directed path `u -> v`; always contains `u`.
    pub fn reachable_from(&self, u: NodeId) -> Result<NodeSet, GraphError> {
        self.check_node(u)?;
        Ok(self.closure(NodeSet::singleton(u)))
    }

    fn closure(&self, start: NodeSet) -> NodeSet {
        let mut seen = start;
        let mut frontier = start;
        while !frontier.is_empty() {
            let next = frontier.iter().fold(NodeSet::EMPTY, |acc, v| acc.union(self.out[v]));
            frontier = next.difference(seen);
            seen = seen.union(next);
        }
        seen
    }

    /// Nodes that reach every node of the graph. May be empty.
    pub fn sources(&self) -> NodeSet {
        let all = self.nodes();
        (0..self.node_count()).filter(|&u| self.closure(NodeSet::singleton(u)) == all).collect()
    }

    /// Strongly connected components, each as a node set, ordered by their
    /// lowest member.
    pub fn strongly_connected_components(&self) -> Vec<NodeSet> {
        let n = self.node_count();
        let reach: Vec<NodeSet> = (0..n).map(|v| self.closure(NodeSet::singleton(v))).collect();
        let mut assigned = NodeSet::EMPTY;
        let mut comps = Vec::new();
        for v in 0..n {
            if assigned.contains(v) {
                continue;
            }
            let comp: NodeSet = reach[v].iter().filter(|&w| reach[w].contains(v)).collect();
            assigned = assigned.union(comp);
            comps.push(comp);
        }
        comps
    }

    /// Components of the condensation that no arc enters from outside.
    pub fn source_components(&self) -> Vec<NodeSet> {
        let ins = self.in_sets();
        self.strongly_connected_components().into_iter().filter(|c| c.iter().all(|v| ins[v].is_subset(*c))).collect()
    }

    /// Minimum number of nodes whose removal disconnects the graph, or
    /// `n - 1` when every pair is adjacent. Only defined for symmetric graphs.
    pub fn vertex_connectivity(&self) -> Result<usize, GraphError> {
        let n = self.node_count();
        if n < 2 {
            return Err(GraphError::TooFewNodes);
        }
        if let Some((s, t)) = self.arcs().find(|&(s, t)| !self.has_arc(t, s)) {
            return Err(GraphError::NotSymmetric(s, t));
        }
        let mut best = n - 1;
        for s in 0..n {
            for t in (s + 1)..n {
                if !self.has_arc(s, t) {
                    best = best.min(self.vertex_disjoint_paths(s, t));
                }
            }
        }
        Ok(best)
    }

    /// Maximum number of internally vertex-disjoint `s -> t` paths for
    /// non-adjacent `s` and `t`, by unit-capacity max-flow on the split graph.
    fn vertex_disjoint_paths(&self, s: NodeId, t: NodeId) -> usize {
        let n = self.node_count();
        // node v becomes v_in = 2v and v_out = 2v + 1
        let size = 2 * n;
        let mut cap = vec![vec![0i32; size]; size];
        for v in 0..n {
            cap[2 * v][2 * v + 1] = if v == s || v == t { n as i32 } else { 1 };
        }
        for (a, b) in self.arcs() {
            cap[2 * a + 1][2 * b] = n as i32;
        }
        let (src, sink) = (2 * s + 1, 2 * t);
        let mut flow = 0;
        loop {
            let mut parent = vec![usize::MAX; size];
            parent[src] = src;
            let mut queue = VecDeque::from([src]);
            while let Some(x) = queue.pop_front() {
                if x == sink {
                    break;
                }
                for y in 0..size {
                    if parent[y] == usize::MAX && cap[x][y] > 0 {
                        parent[y] = x;
                        queue.push_back(y);
                    }
                }
            }
            if parent[sink] == usize::MAX {
                return flow;
            }
            let mut y = sink;
            while y != src {
                let x = parent[y];
                cap[x][y] -= 1;
                cap[y][x] += 1;
                y = x;
            }
            flow += 1;
        }
    }
}

/// Human-readable node names, unique per graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeLabels(Vec<String>);

impl NodeLabels {
    pub fn new(labels: Vec<String>) -> Result<Self, GraphError> {
        let mut seen = std::collections::HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(GraphError::DuplicateLabel(l.clone()));
            }
        }
        Ok(NodeLabels(labels))
    }

    /// Labels `"0"`, `"1"`, ...
    pub fn numeric(n: usize) -> Self {
        NodeLabels((0..n).map(|i| i.to_string()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, v: NodeId) -> &str {
        &self.0[v]
    }

    pub fn index_of(&self, label: &str) -> Result<NodeId, GraphError> {
        self.0.iter().position(|l| l == label).ok_or_else(|| GraphError::UnknownLabel(label.to_string()))
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    pub fn format_set(&self, set: NodeSet) -> String {
        let names: Vec<&str> = set.iter().map(|v| self.get(v)).collect();
        format!("{{{}}}", names.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> Digraph {
        // a=0 b=1 c=2 d=3
        Digraph::from_arcs(4, [(2, 0), (2, 1), (3, 0), (3, 1), (0, 1), (2, 3), (1, 2)]).unwrap()
    }

    fn fig2() -> Digraph {
        Digraph::from_arcs(4, [(2, 0), (2, 1), (3, 0), (3, 1), (1, 0), (3, 2), (0, 3)]).unwrap()
    }

    #[test]
    fn reachability_examples() {
        let k2 = Digraph::complete(2).unwrap();
        assert_eq!(k2.reachable_from(0).unwrap(), NodeSet::full(2));
        assert_eq!(fig1().reachable_from(0).unwrap(), NodeSet::full(4));
        let e = Digraph::empty(3).unwrap();
        assert_eq!(e.reachable_from(0).unwrap(), NodeSet::singleton(0));
        assert_eq!(e.reachable_from(3), Err(GraphError::NodeOutOfRange { node: 3, node_count: 3 }));
    }

    #[test]
    fn source_sets() {
        // white=0, black=1; OMIT_W keeps only black -> white
        let omit_w = Digraph::from_arcs(2, [(1, 0)]).unwrap();
        assert_eq!(omit_w.sources(), NodeSet::singleton(1));
        assert_eq!(Digraph::complete(2).unwrap().sources(), NodeSet::full(2));
        assert_eq!(fig1().sources(), NodeSet::full(4));
        assert_eq!(fig2().sources(), NodeSet::full(4));
        assert_eq!(Digraph::empty(2).unwrap().sources(), NodeSet::EMPTY);
    }

    #[test]
    fn heads_of_arcs() {
        assert_eq!(heads(std::iter::empty()), NodeSet::EMPTY);
        assert_eq!(heads([(0, 1), (2, 1)]), NodeSet::singleton(1));
        assert_eq!(heads(fig1().arcs()), NodeSet::full(4));
    }

    #[test]
    fn connectivity_examples() {
        assert_eq!(Digraph::cycle(4).unwrap().vertex_connectivity(), Ok(2));
        assert_eq!(Digraph::complete(4).unwrap().vertex_connectivity(), Ok(3));
        assert_eq!(Digraph::hypercube(3).unwrap().vertex_connectivity(), Ok(3));
        assert_eq!(Digraph::empty(3).unwrap().vertex_connectivity(), Ok(0));
        assert_eq!(fig1().vertex_connectivity(), Err(GraphError::NotSymmetric(0, 1)));
        assert_eq!(Digraph::empty(1).unwrap().vertex_connectivity(), Err(GraphError::TooFewNodes));
    }

    #[test]
    fn construction_rules() {
        assert_eq!(Digraph::from_arcs(2, [(1, 1)]), Err(GraphError::SelfLoop(1)));
        assert!(Digraph::from_arcs_with_loops(2, [(1, 1)]).unwrap().has_arc(1, 1));
        assert_eq!(Digraph::from_arcs(2, [(0, 2)]), Err(GraphError::NodeOutOfRange { node: 2, node_count: 2 }));
        let dup = Digraph::from_arcs(2, [(0, 1), (0, 1)]).unwrap();
        assert_eq!(dup.arc_count(), 1);
        assert_eq!(Digraph::hypercube(3).unwrap().arc_count(), 24);
        assert!(NodeLabels::new(vec!["a".into(), "a".into()]).is_err());
    }

    #[test]
    fn condensation_of_fig_events() {
        let g = Digraph::from_arcs(3, [(0, 1), (1, 0), (1, 2)]).unwrap();
        assert_eq!(g.source_components(), vec![NodeSet::from_bits(0b011)]);
        assert_eq!(g.sources(), NodeSet::from_bits(0b011));
        let two_roots = Digraph::from_arcs(3, [(0, 2), (1, 2)]).unwrap();
        assert_eq!(two_roots.source_components().len(), 2);
        assert!(two_roots.sources().is_empty());
    }
}
