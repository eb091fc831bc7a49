use std::fs;
use std::path::PathBuf;

use clap::Args;
use omlab::bundled;
use omlab::graph::{Digraph, NodeLabels};
use omlab::io::{parse_family, parse_graph};
use omlab::model::{generate_bounded_omissions, EventFamily, ModelError, OmissionMetric};

use crate::error::CliError;

/// Where the event family comes from. Exactly one source must be given;
/// graph sources need `--bounded`.
#[derive(Args, Debug, Clone)]
pub struct SourceArgs {
    /// Event family JSON file.
    #[arg(long, value_name = "PATH", group = "source")]
    pub family: Option<PathBuf>,
    /// Bundled example family.
    #[arg(long, value_name = "NAME", group = "source", value_parser = clap::builder::PossibleValuesParser::new(bundled::NAMES))]
    pub bundled: Option<String>,
    /// Graph JSON file (use with --bounded).
    #[arg(long, value_name = "PATH", group = "source")]
    pub graph: Option<PathBuf>,
    /// Hypercube of the given dimension (use with --bounded).
    #[arg(long, value_name = "DIM", group = "source")]
    pub hypercube: Option<usize>,
    /// Bidirected cycle on N nodes (use with --bounded).
    #[arg(long, value_name = "N", group = "source")]
    pub cycle: Option<usize>,
    /// Complete graph on N nodes (use with --bounded).
    #[arg(long, value_name = "N", group = "source")]
    pub complete: Option<usize>,
    /// Generate all events with at most F omissions.
    #[arg(long, value_name = "F")]
    pub bounded: Option<usize>,
    /// How omissions are counted for --bounded.
    #[arg(long, default_value = "global", value_parser = ["global", "send", "recv"])]
    pub metric: String,
}

impl SourceArgs {
    fn graph_source(&self) -> Result<Option<(Digraph, NodeLabels)>, CliError> {
        let numeric = |g: Digraph| {
            let labels = NodeLabels::numeric(g.node_count());
            (g, labels)
        };
        let built = if let Some(path) = &self.graph {
            Some(parse_graph(&read(path)?)?)
        } else if let Some(d) = self.hypercube {
            Some(numeric(Digraph::hypercube(d).map_err(ModelError::from)?))
        } else if let Some(n) = self.cycle {
            Some(numeric(Digraph::cycle(n).map_err(ModelError::from)?))
        } else if let Some(n) = self.complete {
            Some(numeric(Digraph::complete(n).map_err(ModelError::from)?))
        } else {
            None
        };
        Ok(built)
    }

    pub fn load(&self, family_cap: usize) -> Result<EventFamily, CliError> {
        let metric: OmissionMetric = self.metric.parse().map_err(CliError::Usage)?;
        if let Some((g, labels)) = self.graph_source()? {
            let f = self.bounded.ok_or_else(|| CliError::Usage("graph sources need --bounded F".to_string()))?;
            return Ok(generate_bounded_omissions(&g, &labels, f, metric, family_cap)?);
        }
        if self.bounded.is_some() {
            return Err(CliError::Usage("--bounded applies to graph sources only".to_string()));
        }
        if let Some(path) = &self.family {
            return Ok(parse_family(&read(path)?)?);
        }
        if let Some(name) = &self.bundled {
            return bundled::family(name).ok_or_else(|| CliError::Usage(format!("unknown bundled family {name}")));
        }
        Err(CliError::Usage(
            "no input: use --family, --bundled, --graph, --hypercube, --cycle or --complete".to_string(),
        ))
    }
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e.to_string()))
}
