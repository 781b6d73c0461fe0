//! Agent-based simulation of belief dynamics on a directed social network
//! under three censorship regimes, with a Latin Hypercube sweep harness and
//! rank-based statistics for comparing the regimes.

pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod graph;
pub mod mechanisms;
pub mod metrics;
pub mod model;
pub mod netgen;
pub mod output;
pub mod stats;
pub mod sweep;

pub use engine::{init_simulation, run_simulation, RunResult, SimState};
pub use error::{Error, Result};
pub use graph::DirectedGraph;
pub use model::{AgentState, Belief, CensorshipMode, GroupMetricsRow, SimParams};
