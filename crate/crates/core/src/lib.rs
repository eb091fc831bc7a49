//! Consensus and broadcast under mobile link omissions.
//!
//! A synchronous network is a digraph `G`; each round the adversary picks a
//! spanning subgraph (an *event*) from a fixed family `R`, and exactly the
//! messages on its arcs are delivered. This crate decides when consensus is
//! solvable for a family, computes optimal broadcast times, simulates
//! protocols and searches exhaustively for the fastest consensus protocol on
//! small instances.

pub mod bundled;
pub mod equivalence;
pub mod graph;
pub mod io;
pub mod model;
pub mod oracle;
pub mod simulator;
pub mod solvability;

pub use equivalence::{alpha_star, beta_partition, BetaPartition, Partition};
pub use graph::{Digraph, GraphError, NodeId, NodeLabels, NodeSet};
pub use model::{
    generate_bounded_omissions, is_convex, Convexity, EventFamily, InitialConfig, ModelError, OmissionMetric, Scenario,
};
pub use oracle::{equal_rounds_audit, min_consensus_rounds, verify_chain, OracleError};
pub use simulator::{exhaustive_check, run, Protocol, SimError};
pub use solvability::{
    broadcast_rounds, check_broadcastable, check_consensus, connectivity_threshold_check, Answer, Problem, Rounds,
    SolveError, Verdict,
};
