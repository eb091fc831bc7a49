//! Random instance builders and brute-force reference implementations
//! shared by the integration tests.

#![allow(dead_code)]

use omlab::graph::{Arc, Digraph, NodeSet};
use omlab::model::EventFamily;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn random_digraph<R: Rng>(rng: &mut R, n: usize, density: f64) -> Digraph {
    let arcs: Vec<Arc> = (0..n).flat_map(|s| (0..n).map(move |t| (s, t))).filter(|&(s, t)| s != t).collect();
    Digraph::from_arcs(n, arcs.into_iter().filter(|_| rng.gen_bool(density))).unwrap()
}

/// Random spanning subgraph of `g` keeping each arc with probability `keep`.
pub fn random_subgraph<R: Rng>(rng: &mut R, g: &Digraph, keep: f64) -> Digraph {
    let arcs: Vec<Arc> = g.arcs().filter(|_| rng.gen_bool(keep)).collect();
    Digraph::from_arcs(g.node_count(), arcs).unwrap()
}

/// Family of distinct random subgraphs of `g`; at least one event.
pub fn random_family<R: Rng>(rng: &mut R, g: &Digraph, max_events: usize, keep: f64) -> EventFamily {
    let k = rng.gen_range(1..=max_events);
    let mut events: Vec<Digraph> = Vec::new();
    for _ in 0..k {
        let e = random_subgraph(rng, g, keep);
        if !events.contains(&e) {
            events.push(e);
        }
    }
    EventFamily::unnamed(g.clone(), events).unwrap()
}

/// Bidirected graph from an undirected edge list.
pub fn undirected(n: usize, edges: &[(usize, usize)]) -> Digraph {
    Digraph::from_arcs(n, edges.iter().flat_map(|&(a, b)| [(a, b), (b, a)])).unwrap()
}

/// Reachability by boolean matrix closure.
pub fn closure_reach(g: &Digraph) -> Vec<Vec<bool>> {
    let n = g.node_count();
    let mut m = vec![vec![false; n]; n];
    for (v, row) in m.iter_mut().enumerate() {
        row[v] = true;
    }
    for (s, t) in g.arcs() {
        m[s][t] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if m[i][k] && m[k][j] {
                    m[i][j] = true;
                }
            }
        }
    }
    m
}

pub fn closure_sources(g: &Digraph) -> NodeSet {
    let m = closure_reach(g);
    (0..g.node_count()).filter(|&s| m[s].iter().all(|&b| b)).collect()
}

/// Smallest number of vertices whose removal disconnects some ordered pair
/// (or leaves one node), by trying every subset.
pub fn brute_vertex_connectivity(g: &Digraph) -> usize {
    let n = g.node_count();
    let mut best = n - 1;
    for mask in 0u64..(1 << n) {
        let removed = NodeSet::from_bits(mask);
        let k = removed.len();
        if k >= best || n - k < 2 {
            continue;
        }
        let keep: Vec<usize> = (0..n).filter(|&v| !removed.contains(v)).collect();
        let sub =
            Digraph::from_arcs(n, g.arcs().filter(|&(s, t)| !removed.contains(s) && !removed.contains(t))).unwrap();
        let m = closure_reach(&sub);
        if keep.iter().any(|&s| keep.iter().any(|&t| !m[s][t])) {
            best = k;
        }
    }
    best
}

/// Worst-case flooding time from `u`, by enumerating every word up to
/// `max_len` letters. `None` when some word of length `max_len` still
/// leaves a node uninformed.
pub fn flooding_rounds_by_words(family: &EventFamily, u: usize, max_len: usize) -> Option<usize> {
    let all = family.base().nodes();
    let mut frontier = vec![NodeSet::singleton(u)];
    for r in 0..=max_len {
        if frontier.iter().all(|&s| s == all) {
            return Some(r);
        }
        let mut next = Vec::new();
        for &s in &frontier {
            for e in family.events() {
                let grown = s.iter().fold(s, |acc, v| acc.union(e.out_neighbors(v)));
                if !next.contains(&grown) {
                    next.push(grown);
                }
            }
        }
        frontier = next;
    }
    None
}

pub fn shuffled<R: Rng, T>(rng: &mut R, mut v: Vec<T>) -> Vec<T> {
    v.shuffle(rng);
    v
}
