//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use omlab::bundled;
use omlab::graph::{Digraph, NodeLabels};
use omlab::model::{
    generate_bounded_omissions, is_convex, subword, EventFamily, OmissionMetric, Scenario, DEFAULT_FAMILY_CAP,
};
use omlab::oracle::{equal_rounds_audit, min_consensus_rounds, OracleOutcome};
use omlab::simulator::{exhaustive_check, flooding, informed_set, run, DEFAULT_RUN_BUDGET};
use omlab::solvability::{
    broadcast_rounds, check_broadcastable, check_consensus, connectivity_threshold_check, minimal_incompatible_subset,
    optimal_broadcast_rounds, Answer, Rounds, DEFAULT_GAME_NODE_LIMIT,
};
use omlab::{beta_partition, InitialConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_digraph, random_family, undirected};

const SEED: u64 = 0x006f_6d6c_6162;
const ORACLE_BUDGET: u64 = 1 << 21;
const HYPERCUBE_EXPECTED_ROUNDS: usize = 5;

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn c1() -> Outcome {
    let o1 = bundled::o1_two_node();
    let verdict = check_consensus(&o1);
    let classes = beta_partition(&o1).class_count();
    let c = o1.base().vertex_connectivity().unwrap();
    outcome(
        verdict.answer == Answer::Unsolvable && classes == 1 && c == 1,
        format!("consensus={:?} beta classes={classes} c(G)={c} f=1", verdict.answer),
    )
}

fn c2() -> Outcome {
    let h = bundled::h_two_node();
    let classes = beta_partition(&h).class_count();
    let broadcast = check_broadcastable(&h).answer;
    let oracle = min_consensus_rounds(&h, 2, ORACLE_BUDGET).unwrap();
    let (rounds, passed) = match &oracle.outcome {
        OracleOutcome::Solvable { rounds, protocol } => {
            let rep = exhaustive_check(protocol, &h, *rounds, DEFAULT_RUN_BUDGET).unwrap();
            (Some(*rounds), rep.passed() && rep.scenarios == 2 && rep.inits == 4)
        }
        OracleOutcome::UnsolvableUpTo { .. } => (None, false),
    };
    outcome(
        classes == 2 && broadcast == Answer::Unsolvable && rounds == Some(1) && passed,
        format!(
            "beta classes={classes} broadcast={broadcast:?} oracle rounds={rounds:?} protocol check passed={passed}"
        ),
    )
}

fn c3() -> Outcome {
    let fig = bundled::fig12();
    let idx = |l| fig.labels().index_of(l).unwrap();
    let opt = optimal_broadcast_rounds(&fig, DEFAULT_GAME_NODE_LIMIT).unwrap();
    let from = |l| broadcast_rounds(&fig, idx(l), DEFAULT_GAME_NODE_LIMIT).unwrap();
    let (ra, rb, rc, rd) = (from("a"), from("b"), from("c"), from("d"));
    let oracle = min_consensus_rounds(&fig, 2, ORACLE_BUDGET).unwrap().rounds();
    let pass = opt.map(|o| o.1) == Some(2)
        && opt.map(|o| o.0) == Some(idx("c"))
        && rc == Rounds::Finite(2)
        && rd == Rounds::Finite(2)
        && ra == Rounds::Finite(3)
        && rb == Rounds::Finite(3)
        && oracle == Some(1);
    outcome(pass, format!("optimal={opt:?} a={ra} b={rb} c={rc} d={rd} consensus rounds={oracle:?}"))
}

fn c4() -> Outcome {
    let graphs = [
        ("C4", Digraph::cycle(4).unwrap(), 2),
        ("K4", Digraph::complete(4).unwrap(), 3),
        ("Q3", Digraph::hypercube(3).unwrap(), 3),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, g, expected_c) in graphs {
        let (c, rows) = connectivity_threshold_check(&g, expected_c, DEFAULT_FAMILY_CAP).unwrap();
        let ok = c == expected_c && rows.iter().all(|r| r.agrees);
        pass &= ok;
        let answers: Vec<String> = rows.iter().map(|r| format!("f{}={:?}", r.f, r.answer)).collect();
        parts.push(format!("{name}: c={c} [{}]", answers.join(" ")));
    }
    outcome(pass, parts.join("; "))
}

/// Upward closure of `seeds` inside `top`: a convex family.
fn upward_closure(top: &Digraph, seeds: &[Digraph]) -> EventFamily {
    let mut events: Vec<Digraph> = Vec::new();
    for seed in seeds {
        let missing: Vec<_> = top.arcs().filter(|&(s, t)| !seed.has_arc(s, t)).collect();
        for mask in 0u32..(1 << missing.len()) {
            let mut e = seed.clone();
            for (i, &a) in missing.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    e = e.with_arc(a);
                }
            }
            if !events.contains(&e) {
                events.push(e);
            }
        }
    }
    EventFamily::unnamed(top.clone(), events).unwrap()
}

fn c5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 5);
    let (mut found, mut violations, mut attempts) = (0, 0, 0);
    let (mut bounded, mut closures) = (0, 0);
    while found < 200 && attempts < 200_000 {
        attempts += 1;
        let n = rng.gen_range(2..=5);
        let family = if rng.gen_bool(0.3) {
            let g = random_digraph(&mut rng, n, 0.45);
            let f = rng.gen_range(1..=3);
            let metric = [OmissionMetric::Global, OmissionMetric::PerNodeSend, OmissionMetric::PerNodeReceive]
                [rng.gen_range(0..3)];
            match generate_bounded_omissions(&g, &NodeLabels::numeric(n), f, metric, 512) {
                Ok(fam) => fam,
                Err(_) => continue,
            }
        } else {
            let top = random_digraph(&mut rng, n, 0.4);
            if top.arc_count() == 0 {
                continue;
            }
            let k = rng.gen_range(2..=4);
            let seeds: Vec<Digraph> = (0..k)
                .map(|_| {
                    let drop = rng.gen_range(1..=3.min(top.arc_count()));
                    let arcs = common::shuffled(&mut rng, top.arcs().collect());
                    Digraph::from_arcs(n, arcs.into_iter().skip(drop)).unwrap()
                })
                .collect();
            upward_closure(&top, &seeds)
        };
        if !is_convex(&family).is_convex() || minimal_incompatible_subset(&family).is_none() {
            continue;
        }
        let is_bounded = family.names().iter().any(|s| s.starts_with('G'));
        if is_bounded {
            bounded += 1;
        } else {
            closures += 1;
        }
        found += 1;
        let beta = beta_partition(&family);
        if beta.class_count() != 1 || beta.verify(&family).is_err() {
            violations += 1;
        }
    }
    outcome(
        found == 200 && violations == 0,
        format!(
            "{found} families ({bounded} bounded, {closures} upward closures), {violations} with more than one class"
        ),
    )
}

fn c6() -> Outcome {
    let graphs: Vec<(&str, Digraph)> = vec![
        ("K2", undirected(2, &[(0, 1)])),
        ("P3", undirected(3, &[(0, 1), (1, 2)])),
        ("K3", undirected(3, &[(0, 1), (1, 2), (0, 2)])),
        ("dC3", Digraph::from_arcs(3, [(0, 1), (1, 2), (2, 0)]).unwrap()),
        ("P4", undirected(4, &[(0, 1), (1, 2), (2, 3)])),
        ("S4", undirected(4, &[(0, 1), (0, 2), (0, 3)])),
        ("C4", undirected(4, &[(0, 1), (1, 2), (2, 3), (3, 0)])),
        ("paw", undirected(4, &[(0, 1), (1, 2), (2, 0), (2, 3)])),
        ("diamond", undirected(4, &[(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)])),
        ("K4", Digraph::complete(4).unwrap()),
        ("dC4", Digraph::from_arcs(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap()),
    ];
    let metrics = [OmissionMetric::Global, OmissionMetric::PerNodeSend, OmissionMetric::PerNodeReceive];
    let (mut audited, mut skipped, mut violations) = (0, Vec::new(), Vec::new());
    for (name, g) in &graphs {
        let labels = NodeLabels::numeric(g.node_count());
        for metric in metrics {
            for f in 0..=g.arc_count() {
                let Ok(family) = generate_bounded_omissions(g, &labels, f, metric, 4096) else {
                    skipped.push(format!("{name} {metric} f={f}"));
                    continue;
                };
                let Some((_, b)) = optimal_broadcast_rounds(&family, DEFAULT_GAME_NODE_LIMIT).unwrap() else {
                    continue;
                };
                let needed = (family.len() as u128).pow(b as u32) << g.node_count();
                if needed > ORACLE_BUDGET as u128 {
                    skipped.push(format!("{name} {metric} f={f}"));
                    continue;
                }
                let report = equal_rounds_audit(&family, ORACLE_BUDGET).unwrap();
                audited += 1;
                if !report.agree {
                    violations.push(format!(
                        "{name} {metric} f={f}: consensus {:?} broadcast {:?}",
                        report.consensus_rounds, report.broadcast_rounds
                    ));
                }
            }
        }
    }
    outcome(
        violations.is_empty() && audited > 0,
        format!("{audited} families audited, over budget: {skipped:?}, violations: {violations:?}"),
    )
}

fn c7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 7);
    let mut violations = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(2..=5);
        let g = random_digraph(&mut rng, n, 0.6);
        let family = random_family(&mut rng, &g, 4, 0.5);
        let len = rng.gen_range(0..=6);
        let w = Scenario::new((0..len).map(|_| rng.gen_range(0..family.len())).collect());
        let positions: Vec<usize> = (0..len).filter(|_| rng.gen_bool(0.5)).collect();
        let sub = subword(&w, &positions).unwrap();
        let u = rng.gen_range(0..n);
        let init = InitialConfig::uniform_of(n, true);
        let full = informed_set(&run(&flooding(u, w.len()), &family, &w, &init).unwrap());
        let part = informed_set(&run(&flooding(u, sub.len()), &family, &sub, &init).unwrap());
        if !part.is_subset(full) {
            violations += 1;
        }
    }
    outcome(violations == 0, format!("1000 (word, subword) pairs, {violations} violations"))
}

fn c8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 8);
    let mut violations = 0;
    let mut with_sources = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=6);
        let density = rng.gen_range(0.1..0.9);
        let h = random_digraph(&mut rng, n, density);
        let b = h.sources();
        if !b.is_empty() {
            with_sources += 1;
        }
        if h.arcs().any(|(s, t)| b.contains(t) && !b.contains(s)) {
            violations += 1;
        }
    }
    outcome(violations == 0, format!("1000 digraphs ({with_sources} with sources), {violations} violations"))
}

fn c9() -> Outcome {
    let family = bundled::hypercube_bounded(3, 2, OmissionMetric::Global).unwrap();
    let verdict = check_consensus(&family);
    let opt = optimal_broadcast_rounds(&family, DEFAULT_GAME_NODE_LIMIT).unwrap();
    let rounds = opt.map(|o| o.1);
    let note = match rounds {
        Some(r) if r == HYPERCUBE_EXPECTED_ROUNDS => "matches n+2".to_string(),
        Some(r) => format!("DIVERGES from n+2={HYPERCUBE_EXPECTED_ROUNDS} (computed {r})"),
        None => "no broadcast bound".to_string(),
    };
    outcome(
        verdict.answer == Answer::Solvable && rounds.is_some(),
        format!("{} events, consensus={:?}, optimal broadcast={opt:?}: {note}", family.len(), verdict.answer),
    )
}

fn c10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 10);
    let mut suite: Vec<EventFamily> =
        ["O1-2node", "H-2node", "reliable-2node", "fig12"].iter().map(|n| bundled::family(n).unwrap()).collect();
    for _ in 0..300 {
        let n = rng.gen_range(2..=3);
        let g = random_digraph(&mut rng, n, 0.7);
        suite.push(random_family(&mut rng, &g, 4, 0.6));
    }
    let (mut checked, mut unsolvable, mut violations) = (0, 0, 0);
    for family in &suite {
        let answer = check_consensus(family).answer;
        let mut horizon = family.node_count();
        while horizon > 0 && (family.len() as u128).pow(horizon as u32) << family.node_count() > ORACLE_BUDGET as u128 {
            horizon -= 1;
        }
        let result = min_consensus_rounds(family, horizon, ORACLE_BUDGET).unwrap();
        checked += 1;
        if answer == Answer::Unsolvable {
            unsolvable += 1;
            if result.rounds().is_some() {
                violations += 1;
            }
        }
    }
    outcome(
        violations == 0,
        format!("{checked} families ({unsolvable} unsolvable by theory), {violations} oracle protocols for unsolvable families"),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "two-node O1 unsolvable, one beta class", Duration::from_secs(1), c1),
        (2, "two-node H: two beta classes, one-round protocol", Duration::from_secs(1), c2),
        (3, "four-node example broadcast and consensus rounds", Duration::from_secs(1), c3),
        (4, "connectivity threshold on C4, K4, Q3", Duration::from_secs(60), c4),
        (5, "convex source-incompatible families collapse", Duration::from_secs(120), c5),
        (6, "equal-rounds audit on small graphs", Duration::from_secs(300), c6),
        (7, "flooding is monotone under subwords", Duration::from_secs(60), c7),
        (8, "sources are closed under in-arcs", Duration::from_secs(60), c8),
        (9, "Q3 with two omissions", Duration::from_secs(300), c9),
        (10, "oracle never beats an impossibility verdict", Duration::from_secs(300), c10),
    ];
    let mut failed = Vec::new();
    for (id, title, limit, check) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let pass = result.pass && elapsed <= limit;
        println!(
            "criterion {id:>2} {}: {title}: {} ({:.2?}, limit {:?})",
            if pass { "PASS" } else { "FAIL" },
            result.detail,
            elapsed,
            limit
        );
        if !pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
