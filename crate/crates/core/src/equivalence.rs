//! Indistinguishability of events by the sources of other events.
//!
//! Two events `G`, `H` are α-related through a witness `K` when the sources
//! of `K` receive exactly the same arcs under `G` and under `H`. The β
//! partition is the coarsest partition whose classes are connected by
//! α-edges whose witnesses lie in the same class; it is computed as a
//! greatest fixed point starting from the connected components of all
//! α-edges and keeps a spanning tree of witness edges per class so the
//! result can be re-checked independently.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{Digraph, NodeSet};
use crate::model::{Event, EventFamily};

/// `In_X(H)`: the arcs of `event` whose head lies in `x`.
pub fn in_x(event: &Event, x: NodeSet) -> Digraph {
    event.arcs_into(x)
}

/// True when the sources of `k` collectively receive the same arcs under
/// `left` and under `right`.
pub fn alpha_related(left: &Event, right: &Event, k: &Event) -> bool {
    let b = k.sources();
    in_x(left, b) == in_x(right, b)
}

/// `left α_{B(witness)} right`, all as event indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct AlphaWitness {
    pub left: usize,
    pub right: usize,
    pub witness: usize,
}

impl AlphaWitness {
    fn reversed(self) -> Self {
        AlphaWitness { left: self.right, right: self.left, witness: self.witness }
    }
}

/// A partition of event indices. Classes are sorted internally and ordered
/// by their smallest member.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Partition {
    classes: Vec<Vec<usize>>,
    #[serde(skip)]
    class_of: Vec<usize>,
}

impl Partition {
    fn from_classes(mut classes: Vec<Vec<usize>>, len: usize) -> Self {
        for c in &mut classes {
            c.sort_unstable();
        }
        classes.sort_by_key(|c| c[0]);
        let mut class_of = vec![usize::MAX; len];
        for (ci, c) in classes.iter().enumerate() {
            for &e in c {
                class_of[e] = ci;
            }
        }
        Partition { classes, class_of }
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn class_of(&self, event: usize) -> usize {
        self.class_of[event]
    }

    /// True when every class of `self` lies inside a class of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        self.classes.iter().all(|c| c.iter().all(|&e| coarser.class_of(e) == coarser.class_of(c[0])))
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Per-event in-neighbour masks, shared by the α computations.
struct InTable {
    ins: Vec<Vec<NodeSet>>,
    sources: Vec<NodeSet>,
}

impl InTable {
    fn new(family: &EventFamily) -> Self {
        InTable {
            ins: family.events().iter().map(Digraph::in_sets).collect(),
            sources: (0..family.len()).map(|i| family.sources_of(i)).collect(),
        }
    }

    fn key(&self, event: usize, b: NodeSet) -> Vec<NodeSet> {
        b.iter().map(|v| self.ins[event][v]).collect()
    }

    /// Components of `members` under α-edges witnessed by `witnesses`
    /// (events with an empty source set are skipped), plus a spanning forest.
    fn components(&self, members: &[usize], witnesses: &[usize]) -> (Vec<Vec<usize>>, Vec<AlphaWitness>) {
        let pos: HashMap<usize, usize> = members.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let mut uf = UnionFind::new(members.len());
        let mut forest = Vec::new();
        for &k in witnesses {
            let b = self.sources[k];
            if b.is_empty() {
                continue;
            }
            let mut first: HashMap<Vec<NodeSet>, usize> = HashMap::new();
            for &e in members {
                let rep = *first.entry(self.key(e, b)).or_insert(e);
                if rep != e && uf.union(pos[&rep], pos[&e]) {
                    forest.push(AlphaWitness { left: rep, right: e, witness: k });
                }
            }
        }
        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        for (i, &e) in members.iter().enumerate() {
            groups.entry(uf.find(i)).or_default().push(e);
        }
        (groups.into_values().collect(), forest)
    }
}

/// Connected components of the α-edge graph over the whole family.
pub fn alpha_star(family: &EventFamily) -> Partition {
    let table = InTable::new(family);
    let all: Vec<usize> = (0..family.len()).collect();
    let (classes, _) = table.components(&all, &all);
    Partition::from_classes(classes, family.len())
}

/// The β partition with one spanning tree of witness edges per class.
#[derive(Clone, Debug, Serialize)]
pub struct BetaPartition {
    partition: Partition,
    /// Spanning forest: within each class, α-edges whose witness is in the
    /// same class and that connect the whole class.
    tree_edges: Vec<AlphaWitness>,
    /// Refinement rounds until the partition stopped changing.
    iterations: usize,
    /// Events with no source; never used as witnesses.
    sourceless: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClosureViolation {
    #[error("classes do not partition the family")]
    NotAPartition,
    #[error("edge {0:?} leaves its class or uses an outside witness")]
    OutsideClass(AlphaWitness),
    #[error("edge {0:?} is not an α-relation")]
    NotRelated(AlphaWitness),
    #[error("edge {0:?} uses a witness without sources")]
    SourcelessWitness(AlphaWitness),
    #[error("class containing event {0} is not connected by its witness edges")]
    Disconnected(usize),
    #[error("partition does not refine the α* partition")]
    NotRefiningAlphaStar,
}

pub fn beta_partition(family: &EventFamily) -> BetaPartition {
    let table = InTable::new(family);
    let all: Vec<usize> = (0..family.len()).collect();
    let (mut classes, _) = table.components(&all, &all);
    let mut iterations = 0;
    let tree_edges = loop {
        iterations += 1;
        let mut next = Vec::with_capacity(classes.len());
        let mut forest = Vec::new();
        let mut changed = false;
        for class in &classes {
            let mut sorted = class.clone();
            sorted.sort_unstable();
            let (parts, edges) = table.components(&sorted, &sorted);
            changed |= parts.len() > 1;
            next.extend(parts);
            forest.extend(edges);
        }
        classes = next;
        if !changed {
            break forest;
        }
    };
    let sourceless = (0..family.len()).filter(|&i| family.sources_of(i).is_empty()).collect();
    BetaPartition { partition: Partition::from_classes(classes, family.len()), tree_edges, iterations, sourceless }
}

impl BetaPartition {
    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        self.partition.classes()
    }

    pub fn class_count(&self) -> usize {
        self.partition.len()
    }

    pub fn class_of(&self, event: usize) -> usize {
        self.partition.class_of(event)
    }

    pub fn tree_edges(&self) -> &[AlphaWitness] {
        &self.tree_edges
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn sourceless(&self) -> &[usize] {
        &self.sourceless
    }

    /// A chain of witness edges leading from `from` to `to`, oriented so
    /// that consecutive edges share endpoints. `None` when the two events
    /// lie in different classes; empty when `from == to`.
    pub fn chain(&self, from: usize, to: usize) -> Option<Vec<AlphaWitness>> {
        if self.class_of(from) != self.class_of(to) {
            return None;
        }
        let mut adj: HashMap<usize, Vec<AlphaWitness>> = HashMap::new();
        for &e in &self.tree_edges {
            adj.entry(e.left).or_default().push(e);
            adj.entry(e.right).or_default().push(e.reversed());
        }
        let mut prev: HashMap<usize, AlphaWitness> = HashMap::new();
        let mut queue = VecDeque::from([from]);
        while let Some(x) = queue.pop_front() {
            if x == to {
                break;
            }
            for &e in adj.get(&x).into_iter().flatten() {
                if e.right != from && !prev.contains_key(&e.right) {
                    prev.insert(e.right, e);
                    queue.push_back(e.right);
                }
            }
        }
        let mut chain = Vec::new();
        let mut cur = to;
        while cur != from {
            let e = *prev.get(&cur)?;
            chain.push(e);
            cur = e.left;
        }
        chain.reverse();
        Some(chain)
    }

    /// Re-checks every stored edge against the family and the closure
    /// requirements, independently of how the partition was computed.
    pub fn verify(&self, family: &EventFamily) -> Result<(), ClosureViolation> {
        let mut seen = vec![false; family.len()];
        for class in self.classes() {
            for &e in class {
                if e >= family.len() || std::mem::replace(&mut seen[e], true) {
                    return Err(ClosureViolation::NotAPartition);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(ClosureViolation::NotAPartition);
        }
        for &edge in &self.tree_edges {
            let c = self.class_of(edge.left);
            if self.class_of(edge.right) != c || self.class_of(edge.witness) != c {
                return Err(ClosureViolation::OutsideClass(edge));
            }
            let k = family.event(edge.witness);
            if k.sources().is_empty() {
                return Err(ClosureViolation::SourcelessWitness(edge));
            }
            if !alpha_related(family.event(edge.left), family.event(edge.right), k) {
                return Err(ClosureViolation::NotRelated(edge));
            }
        }
        for class in self.classes() {
            for &e in &class[1..] {
                if self.chain(class[0], e).is_none() {
                    return Err(ClosureViolation::Disconnected(e));
                }
            }
        }
        if !self.partition.refines(&alpha_star(family)) {
            return Err(ClosureViolation::NotRefiningAlphaStar);
        }
        Ok(())
    }

    pub fn report(&self, family: &EventFamily) -> BetaReport {
        let name = |i: usize| family.name(i).to_string();
        BetaReport {
            classes: self.classes().iter().map(|c| c.iter().map(|&i| name(i)).collect()).collect(),
            witness_chains: self
                .classes()
                .iter()
                .map(|c| {
                    c[1..]
                        .iter()
                        .map(|&e| {
                            self.chain(c[0], e)
                                .unwrap_or_default()
                                .into_iter()
                                .map(|w| [name(w.left), name(w.right), name(w.witness)])
                                .collect()
                        })
                        .collect()
                })
                .collect(),
            sourceless_events: self.sourceless.iter().map(|&i| name(i)).collect(),
            iterations: self.iterations,
        }
    }

    /// DOT rendering of the α-edge graph with nodes colored by β class.
    /// Large families only show the spanning forest.
    pub fn to_dot(&self, family: &EventFamily) -> String {
        const PALETTE: [&str; 8] =
            ["lightblue", "lightpink", "palegreen", "khaki", "plum", "lightsalmon", "lightcyan", "wheat"];
        let mut out = String::from("graph beta {\n");
        for i in 0..family.len() {
            let color = PALETTE[self.class_of(i) % PALETTE.len()];
            let _ = writeln!(out, "  e{i} [label=\"{}\", style=filled, fillcolor={color}];", family.name(i));
        }
        if family.len() <= 64 {
            for i in 0..family.len() {
                for j in (i + 1)..family.len() {
                    let witness = (0..family.len()).find(|&k| {
                        !family.sources_of(k).is_empty()
                            && alpha_related(family.event(i), family.event(j), family.event(k))
                    });
                    if let Some(k) = witness {
                        let _ = writeln!(out, "  e{i} -- e{j} [label=\"{}\"];", family.name(k));
                    }
                }
            }
        } else {
            for e in &self.tree_edges {
                let _ = writeln!(out, "  e{} -- e{} [label=\"{}\"];", e.left, e.right, family.name(e.witness));
            }
        }
        out.push_str("}\n");
        out
    }
}

/// JSON shape of a β partition: classes by event name and, per class, one
/// chain `(left, right, witness)` from the first member to every other.
#[derive(Clone, Debug, Serialize)]
pub struct BetaReport {
    pub classes: Vec<Vec<String>>,
    pub witness_chains: Vec<Vec<Vec<[String; 3]>>>,
    pub sourceless_events: Vec<String>,
    pub iterations: usize,
}
