mod commands;
mod error;
mod source;

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::EXIT_PARSE;
use crate::source::SourceArgs;

#[derive(Parser, Debug)]
#[command(name = "omlab", version, about = "Broadcast and consensus under mobile omission faults")]
pub struct Cli {
    /// Cap on generated events, oracle executions and simulator runs.
    #[arg(long, global = true, env = "OMLAB_BUDGET", value_parser = clap::value_parser!(u64).range(1..))]
    pub budget: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
    Dot,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProblemArg {
    Consensus,
    Broadcast,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProtocolArg {
    Flooding,
    BroadcastConsensus,
    #[value(alias = "exchange-once")]
    HOneRound,
    EventDetection,
    Oracle,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decide solvability. Exit 0 = solvable, 2 = unsolvable, 3 = only the
    /// necessary condition holds.
    Check {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, value_enum, default_value = "consensus")]
        problem: ProblemArg,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Also write a DOT rendering of the witness to this file.
        #[arg(long, value_name = "PATH")]
        emit_dot: Option<std::path::PathBuf>,
    },
    /// Write an event family file.
    Gen {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Output file instead of standard output.
        #[arg(long, value_name = "PATH")]
        out: Option<std::path::PathBuf>,
    },
    /// Run a protocol on one scenario, or on all scenarios of a length.
    Simulate {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, value_enum)]
        protocol: ProtocolArg,
        /// Originator for flooding and broadcast-consensus.
        #[arg(long, value_name = "LABEL")]
        origin: Option<String>,
        /// Rounds for flooding and broadcast-consensus.
        #[arg(long)]
        rounds: Option<usize>,
        /// Originator per event for event-detection, comma separated.
        #[arg(long, value_name = "LABELS")]
        origins: Option<String>,
        /// Comma-separated event names.
        #[arg(long, conflicts_with_all = ["seed", "all_scenarios"])]
        scenario: Option<String>,
        /// Random scenario from this seed (length from --length).
        #[arg(long, conflicts_with = "all_scenarios", requires = "length")]
        seed: Option<u64>,
        /// Number of rounds in a seeded scenario.
        #[arg(long)]
        length: Option<usize>,
        /// Check every scenario of this length against every input.
        #[arg(long, value_name = "HORIZON")]
        all_scenarios: Option<usize>,
        /// Input of every node, such as "a=0,b=1"; all 0 when omitted.
        #[arg(long)]
        init: Option<String>,
        /// Search horizon for the oracle protocol.
        #[arg(long, default_value_t = 3)]
        max_horizon: usize,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Search for the fastest consensus protocol. Exit 0 when found, 2 when
    /// none exists within the horizon.
    Oracle {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value_t = 3)]
        max_horizon: usize,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Compare fastest consensus with fastest broadcast on a convex family.
    /// Exit 0 when they agree, 1 otherwise.
    Audit {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_PARSE as u8 } else { 0 });
        }
    };
    match commands::execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("omlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
