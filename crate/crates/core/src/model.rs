//! Domain types shared by the mechanisms, the engine and the sweep layer.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};

/// Binary belief label. `Radical` (1) is the belief targeted by the authority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Belief {
    Mainstream = 0,
    Radical = 1,
}

impl Belief {
    pub const BOTH: [Belief; 2] = [Belief::Mainstream, Belief::Radical];

    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl From<Belief> for u8 {
    fn from(b: Belief) -> u8 {
        b.as_u8()
    }
}

impl TryFrom<u8> for Belief {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            0 => Ok(Belief::Mainstream),
            1 => Ok(Belief::Radical),
            other => Err(format!("belief must be 0 or 1, got {other}")),
        }
    }
}

impl fmt::Display for Belief {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: usize,
    pub belief: Belief,
    pub assent: u64,
    pub dissent: u64,
    pub banned: bool,
    pub is_authority: bool,
}

impl AgentState {
    pub fn new(id: usize, belief: Belief) -> Self {
        Self {
            id,
            belief,
            assent: 0,
            dissent: 0,
            banned: false,
            is_authority: false,
        }
    }

    pub fn divergence(&self) -> i64 {
        self.assent as i64 - self.dissent as i64
    }
}

/// Which censorship mechanisms run each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CensorshipMode {
    /// Mainstream agents drop their links to radical agents.
    Decentralized,
    /// A single authority bans radical agents.
    Centralized,
    /// Both, unfollowing first.
    Mixed,
}

impl CensorshipMode {
    pub const ALL: [CensorshipMode; 3] = [
        CensorshipMode::Decentralized,
        CensorshipMode::Centralized,
        CensorshipMode::Mixed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CensorshipMode::Decentralized => "decentralized",
            CensorshipMode::Centralized => "centralized",
            CensorshipMode::Mixed => "mixed",
        }
    }

    pub fn has_authority(self) -> bool {
        !matches!(self, CensorshipMode::Decentralized)
    }

    pub fn has_unfollowing(self) -> bool {
        !matches!(self, CensorshipMode::Centralized)
    }
}

impl fmt::Display for CensorshipMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CensorshipMode {
    type Err = String;

    /// Case-insensitive.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "decentralized" | "decentralised" => Ok(CensorshipMode::Decentralized),
            "centralized" | "centralised" => Ok(CensorshipMode::Centralized),
            "mixed" => Ok(CensorshipMode::Mixed),
            other => Err(format!(
                "unknown censorship mode `{other}` (expected decentralized, centralized or mixed)"
            )),
        }
    }
}

/// Full parameter record for one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub n_agents: usize,
    /// Initial out-degree of every node; even.
    pub k_neighbors: usize,
    pub rewire_prob: f64,
    pub radical_fraction: f64,
    /// Probability that a new link targets a like-minded (or fellow banned) agent.
    pub homophily: f64,
    /// Probability that the authority bans a selected radical agent.
    pub tolerance: f64,
    pub mode: CensorshipMode,
    pub n_steps: usize,
    pub seed: u64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            n_agents: 100,
            k_neighbors: 6,
            rewire_prob: 0.1,
            radical_fraction: 0.5,
            homophily: 0.5,
            tolerance: 0.5,
            mode: CensorshipMode::Decentralized,
            n_steps: 300,
            seed: 1,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_agents < 2 {
            return Err(Error::InvalidParam {
                name: "n_agents",
                value: self.n_agents.to_string(),
                expected: "an integer >= 2",
            });
        }
        if self.k_neighbors == 0 || !self.k_neighbors.is_multiple_of(2) || self.k_neighbors >= self.n_agents {
            return Err(Error::InvalidParam {
                name: "k_neighbors",
                value: self.k_neighbors.to_string(),
                expected: "an even integer in [2, n_agents)",
            });
        }
        check_probability("rewire_prob", self.rewire_prob)?;
        check_probability("radical_fraction", self.radical_fraction)?;
        check_probability("homophily", self.homophily)?;
        check_probability("tolerance", self.tolerance)?;
        Ok(())
    }
}

/// Per-step aggregates for one belief group. Means are `None` when undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMetricsRow {
    pub step: usize,
    pub belief: Belief,
    pub mean_assent: Option<f64>,
    pub mean_dissent: Option<f64>,
    pub mean_divergence: Option<f64>,
    /// Mean of in-degree + out-degree.
    pub mean_degree: Option<f64>,
    /// Mean share of incident links whose other endpoint holds the same
    /// belief, over agents with at least one incident link.
    pub mean_certainty: Option<f64>,
    pub group_size: usize,
    pub banned_count: usize,
    /// Agents with at least one incident link.
    pub certainty_n: usize,
}
