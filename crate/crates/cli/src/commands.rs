use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use omlab::equivalence::beta_partition;
use omlab::graph::NodeId;
use omlab::io::{family_to_dot, family_to_json};
use omlab::model::{is_convex, EventFamily, InitialConfig, Scenario, ScenarioGenerator, DEFAULT_FAMILY_CAP};
use omlab::oracle::{equal_rounds_audit, min_consensus_rounds, verify_chain, OracleOutcome, DEFAULT_ORACLE_BUDGET};
use omlab::simulator::{
    self, broadcast_consensus, consensus_violations, event_detection_consensus, exhaustive_check, flooding,
    ExchangeOnce, Protocol, DEFAULT_RUN_BUDGET,
};
use omlab::solvability::{
    broadcast_rounds, check_broadcastable, check_consensus, optimal_broadcast_rounds, Witness, DEFAULT_GAME_NODE_LIMIT,
};
use serde_json::json;

use crate::error::CliError;
use crate::{Cli, Command, Format, ProblemArg, ProtocolArg};

/// Families up to this size get a β report in `check` output.
const BETA_REPORT_LIMIT: usize = 512;

struct Budgets {
    family: usize,
    oracle: u64,
    runs: u64,
}

impl Budgets {
    fn from(budget: Option<u64>) -> Self {
        match budget {
            Some(b) => Budgets { family: usize::try_from(b).unwrap_or(usize::MAX), oracle: b, runs: b },
            None => Budgets { family: DEFAULT_FAMILY_CAP, oracle: DEFAULT_ORACLE_BUDGET, runs: DEFAULT_RUN_BUDGET },
        }
    }
}

pub fn execute(cli: &Cli) -> Result<i32, CliError> {
    let budgets = Budgets::from(cli.budget);
    match &cli.command {
        Command::Check { source, problem, format, emit_dot } => {
            let family = source.load(budgets.family)?;
            check(&family, *problem, *format, emit_dot.as_deref())
        }
        Command::Gen { source, format, out } => {
            let family = source.load(budgets.family)?;
            let text = match format {
                Format::Dot => family_to_dot(&family),
                _ => family_to_json(&family) + "\n",
            };
            match out {
                Some(path) => write_file(path, &text)?,
                None => print!("{text}"),
            }
            Ok(0)
        }
        Command::Simulate {
            source,
            protocol,
            origin,
            rounds,
            origins,
            scenario,
            seed,
            length,
            all_scenarios,
            init,
            max_horizon,
            format,
        } => {
            let family = source.load(budgets.family)?;
            let words = match (scenario, seed, all_scenarios) {
                (_, _, Some(h)) => Words::All(*h),
                (Some(text), _, _) => Words::One(Scenario::parse(text, &family)?),
                (None, Some(seed), _) => Words::One(Scenario::generated(
                    &ScenarioGenerator::SeededRandom { seed: *seed },
                    family.len(),
                    length.unwrap_or(0),
                )),
                (None, None, None) => {
                    return Err(CliError::Usage("give --scenario, --seed or --all-scenarios".to_string()))
                }
            };
            let init = match init {
                Some(text) => InitialConfig::parse(text, family.labels())?,
                None => InitialConfig::uniform_of(family.node_count(), false),
            };
            let job = SimJob { family: &family, words, init, format: *format, budget: budgets.runs };
            match protocol {
                ProtocolArg::Flooding => {
                    let u = node_or_best(&family, origin.as_deref())?;
                    let r = rounds.unwrap_or(match &job.words {
                        Words::One(s) => s.len(),
                        Words::All(h) => *h,
                    });
                    job.run(&flooding(u, r))
                }
                ProtocolArg::BroadcastConsensus => {
                    let best = optimal_broadcast_rounds(&family, DEFAULT_GAME_NODE_LIMIT)?;
                    let u = node_or_best(&family, origin.as_deref())?;
                    let r = match rounds {
                        Some(r) => *r,
                        None => match broadcast_rounds(&family, u, DEFAULT_GAME_NODE_LIMIT)?.finite() {
                            Some(r) => r,
                            None => best.map_or(family.node_count(), |b| b.1),
                        },
                    };
                    job.run(&broadcast_consensus(u, r))
                }
                ProtocolArg::HOneRound => job.run(&ExchangeOnce),
                ProtocolArg::EventDetection => {
                    let list: Vec<NodeId> = match origins {
                        Some(text) => text
                            .split(',')
                            .map(|l| family.labels().index_of(l.trim()))
                            .collect::<Result<_, _>>()
                            .map_err(omlab::model::ModelError::from)?,
                        None => (0..family.len()).map(|e| family.sources_of(e).first().unwrap_or(0)).collect(),
                    };
                    job.run(&event_detection_consensus(&family, &list)?)
                }
                ProtocolArg::Oracle => {
                    let result = min_consensus_rounds(&family, *max_horizon, budgets.oracle)?;
                    match result.outcome {
                        OracleOutcome::Solvable { protocol, .. } => job.run(&protocol),
                        OracleOutcome::UnsolvableUpTo { horizon, .. } => Err(CliError::Usage(format!(
                            "no consensus protocol within {horizon} rounds; nothing to simulate"
                        ))),
                    }
                }
            }
        }
        Command::Oracle { source, max_horizon, format } => {
            let family = source.load(budgets.family)?;
            oracle(&family, *max_horizon, *format, &budgets)
        }
        Command::Audit { source, format } => {
            let family = source.load(budgets.family)?;
            let report = equal_rounds_audit(&family, budgets.oracle)?;
            let labels = family.labels();
            match format {
                Format::Text => {
                    let show = |r: Option<usize>| r.map_or("none".to_string(), |r| r.to_string());
                    println!(
                        "consensus rounds: {} (searched up to {})\nbroadcast rounds: {}{}\n{}",
                        show(report.consensus_rounds),
                        report.horizon,
                        show(report.broadcast_rounds),
                        report.broadcast_source.map(|u| format!(" from {}", labels.get(u))).unwrap_or_default(),
                        if report.agree { "agree" } else { "DISAGREE" }
                    );
                }
                _ => println!(
                    "{}",
                    serde_json::to_string_pretty(&json!({
                        "consensus_rounds": report.consensus_rounds,
                        "horizon": report.horizon,
                        "broadcast_source": report.broadcast_source.map(|u| labels.get(u)),
                        "broadcast_rounds": report.broadcast_rounds,
                        "agree": report.agree,
                    }))
                    .expect("report serializes")
                ),
            }
            Ok(if report.agree { 0 } else { 1 })
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Write(path.display().to_string(), e.to_string()))
}

fn node_or_best(family: &EventFamily, label: Option<&str>) -> Result<NodeId, CliError> {
    if let Some(l) = label {
        return Ok(family.labels().index_of(l).map_err(omlab::model::ModelError::from)?);
    }
    match optimal_broadcast_rounds(family, DEFAULT_GAME_NODE_LIMIT)? {
        Some((u, _)) => Ok(u),
        None => Err(CliError::Usage("no node can broadcast; pass --origin".to_string())),
    }
}

fn check(family: &EventFamily, problem: ProblemArg, format: Format, emit_dot: Option<&Path>) -> Result<i32, CliError> {
    let verdict = match problem {
        ProblemArg::Consensus => check_consensus(family),
        ProblemArg::Broadcast => check_broadcastable(family),
    };
    let labels = family.labels();
    let per_node = if family.node_count() <= DEFAULT_GAME_NODE_LIMIT {
        Some(
            (0..family.node_count())
                .map(|u| broadcast_rounds(family, u, DEFAULT_GAME_NODE_LIMIT).map(|r| (labels.get(u).to_string(), r)))
                .collect::<Result<Vec<_>, _>>()?,
        )
    } else {
        None
    };
    let beta = (problem == ProblemArg::Consensus && family.len() <= BETA_REPORT_LIMIT).then(|| beta_partition(family));
    let convex = is_convex(family);

    let witness_dot = || {
        let events = match &verdict.witness {
            Witness::Incompatible(w) | Witness::ConvexNotBroadcastable(w) => w.events.clone(),
            Witness::BetaClassNotBroadcastable { incompatible, .. } => incompatible.events.clone(),
            Witness::SourcelessEvent { event } => vec![*event],
            _ => (0..family.len()).collect(),
        };
        let mut out = family_to_dot(&family.subfamily(&events).expect("witness events belong to the family"));
        if let Some(b) = &beta {
            out.push_str(&b.to_dot(family));
        }
        out
    };
    if let Some(path) = emit_dot {
        write_file(path, &witness_dot())?;
    }

    match format {
        Format::Dot => print!("{}", witness_dot()),
        Format::Text => {
            let mut out = format!(
                "family: {} nodes, {} events, convex: {}\n{}\n",
                family.node_count(),
                family.len(),
                convex.is_convex(),
                verdict.explain(family)
            );
            if let Some(rows) = &per_node {
                let cells: Vec<String> = rows.iter().map(|(n, r)| format!("{n}={r}")).collect();
                let _ = writeln!(out, "broadcast rounds per originator: {}", cells.join(" "));
            }
            if let Some(b) = &beta {
                let classes: Vec<String> = b
                    .classes()
                    .iter()
                    .map(|c| format!("{{{}}}", c.iter().map(|&i| family.name(i)).collect::<Vec<_>>().join(", ")))
                    .collect();
                let _ = writeln!(out, "beta classes ({}): {}", classes.len(), classes.join(" "));
            }
            print!("{out}");
        }
        Format::Json => {
            let value = json!({
                "nodes": family.node_count(),
                "events": family.len(),
                "convex": convex.is_convex(),
                "verdict": verdict.report(family),
                "broadcast_rounds": per_node.map(|rows| rows
                    .into_iter()
                    .map(|(n, r)| (n, json!(r.finite())))
                    .collect::<serde_json::Map<_, _>>()),
                "beta": beta.map(|b| b.report(family)),
            });
            println!("{}", serde_json::to_string_pretty(&value).expect("report serializes"));
        }
    }
    Ok(verdict.answer.exit_code())
}

enum Words {
    One(Scenario),
    All(usize),
}

struct SimJob<'a> {
    family: &'a EventFamily,
    words: Words,
    init: InitialConfig,
    format: Format,
    budget: u64,
}

impl SimJob<'_> {
    fn run<P: Protocol>(&self, protocol: &P) -> Result<i32, CliError> {
        let family = self.family;
        match &self.words {
            Words::All(h) => {
                let report = exhaustive_check(protocol, family, *h, self.budget)?;
                match self.format {
                    Format::Text => println!("{}", report.summary(family)),
                    _ => println!("{}", serde_json::to_string_pretty(&report).expect("report serializes")),
                }
                Ok(if report.passed() { 0 } else { 1 })
            }
            Words::One(scenario) => {
                let trace = simulator::run(protocol, family, scenario, &self.init)?;
                let violations = consensus_violations(&trace);
                match self.format {
                    Format::Text => {
                        let labels = family.labels();
                        let mut out = format!(
                            "{} under {} from {}\n",
                            trace.protocol,
                            scenario.display(family),
                            self.init.display(labels)
                        );
                        for (r, states) in trace.configurations.iter().enumerate() {
                            if r > 0 {
                                let arcs: Vec<String> =
                                    trace.deliveries[r - 1].iter().map(|d| family.format_arc((d.from, d.to))).collect();
                                let _ = writeln!(
                                    out,
                                    "round {r} ({}): delivered {}",
                                    family.name(scenario.word[r - 1]),
                                    if arcs.is_empty() { "nothing".to_string() } else { arcs.join(" ") }
                                );
                            }
                            for (v, s) in states.iter().enumerate() {
                                let _ = writeln!(out, "  {}: {s:?}", labels.get(v));
                            }
                        }
                        for (v, d) in trace.decisions.iter().enumerate() {
                            let shown = d.map_or("undecided".to_string(), |d| {
                                format!("{} at round {}", u8::from(d.value), d.round)
                            });
                            let _ = writeln!(out, "decision {}: {shown}", labels.get(v));
                        }
                        if !violations.is_empty() {
                            let _ = writeln!(out, "violations: {violations:?}");
                        }
                        print!("{out}");
                    }
                    _ => {
                        let mut value = serde_json::to_value(&trace).expect("trace serializes");
                        value["scenario_names"] =
                            json!(scenario.word.iter().map(|&e| family.name(e)).collect::<Vec<_>>());
                        value["violations"] = json!(violations);
                        println!("{}", serde_json::to_string_pretty(&value).expect("trace serializes"));
                    }
                }
                Ok(0)
            }
        }
    }
}

fn oracle(family: &EventFamily, max_horizon: usize, format: Format, budgets: &Budgets) -> Result<i32, CliError> {
    let result = min_consensus_rounds(family, max_horizon, budgets.oracle)?;
    let mut report = result.report(family);
    let code = match &result.outcome {
        OracleOutcome::Solvable { rounds, protocol } => {
            let check = exhaustive_check(protocol, family, *rounds, budgets.runs)?;
            report["protocol_check_passed"] = json!(check.passed());
            0
        }
        OracleOutcome::UnsolvableUpTo { chain, .. } => {
            report["chain_verified"] = json!(verify_chain(chain, family));
            2
        }
    };
    match format {
        Format::Text => {
            let mut out = String::new();
            for row in &result.table {
                let _ = writeln!(
                    out,
                    "r={}: {} executions, {} components, {}",
                    row.rounds,
                    row.executions,
                    row.components,
                    if row.solvable { "solvable" } else { "unsolvable" }
                );
            }
            match &result.outcome {
                OracleOutcome::Solvable { rounds, protocol } => {
                    let _ = writeln!(out, "consensus in {rounds} round(s); decision table:");
                    for (node, view, d) in protocol.rows(family.labels()) {
                        let _ = writeln!(out, "  {node}: {view} -> {}", u8::from(d));
                    }
                }
                OracleOutcome::UnsolvableUpTo { horizon, chain } => {
                    let _ = writeln!(
                        out,
                        "no protocol decides within {horizon} round(s) (says nothing about later rounds)"
                    );
                    let _ = writeln!(out, "chain: {}", chain.display(family));
                }
            }
            print!("{out}");
        }
        _ => println!("{}", serde_json::to_string_pretty(&report).expect("report serializes")),
    }
    Ok(code)
}
