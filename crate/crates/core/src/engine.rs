//! Simulation state, initialization and the per-step loop.
//!
//! Each step runs broadcast, then link formation, then the censorship
//! mechanism(s) selected by the mode. Agents are visited in ascending id
//! order within every phase, and all randomness comes from the single
//! generator stored in the state, so a run is a pure function of its
//! [`SimParams`].

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::mechanisms::{self, BanEvent};
use crate::metrics::compute_group_metrics;
use crate::model::{AgentState, Belief, GroupMetricsRow, SimParams};
use crate::netgen::generate_small_world;

/// The generator behind every run.
pub type SimRng = Pcg64;

/// Recorded in run manifests.
pub const RNG_ALGORITHM: &str = "PCG XSL RR 128/64 (rand_pcg::Pcg64), seeded via seed_from_u64";

/// Order of the two censorship mechanisms in mixed mode.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum MixedOrder {
    #[default]
    UnfollowThenBan,
    BanThenUnfollow,
}

/// One link created during link formation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkEvent {
    pub step: usize,
    pub source: usize,
    pub target: usize,
    pub source_banned: bool,
}

/// What changed during one step.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StepReport {
    pub links_created: usize,
    pub links_unfollowed: usize,
    pub ban: Option<BanEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub params: SimParams,
    pub graph: DirectedGraph,
    pub agents: Vec<AgentState>,
    /// Number of completed steps.
    pub step: usize,
    pub authority: Option<usize>,
    pub link_log: Option<Vec<LinkEvent>>,
    #[serde(default)]
    pub mixed_order: MixedOrder,
    pub(crate) rng: SimRng,
}

impl SimState {
    /// Builds the initial network, assigns beliefs and, for modes with an
    /// authority, appoints one uniformly drawn belief-0 agent.
    pub fn new(params: SimParams) -> Result<Self> {
        params.validate()?;
        let mut rng = SimRng::seed_from_u64(params.seed);
        let graph = generate_small_world(
            params.n_agents,
            params.k_neighbors,
            params.rewire_prob,
            &mut rng,
        )?;

        let mut agents: Vec<AgentState> = (0..params.n_agents)
            .map(|id| {
                let belief = if rng.gen::<f64>() < params.radical_fraction {
                    Belief::Radical
                } else {
                    Belief::Mainstream
                };
                AgentState::new(id, belief)
            })
            .collect();

        // Drawn in every mode so the streams of paired runs stay aligned.
        let mainstream: Vec<usize> = agents
            .iter()
            .filter(|a| a.belief == Belief::Mainstream)
            .map(|a| a.id)
            .collect();
        let candidate =
            (!mainstream.is_empty()).then(|| mainstream[rng.gen_range(0..mainstream.len())]);

        let authority = if params.mode.has_authority() {
            let id = candidate.ok_or_else(|| Error::NoAuthorityCandidate {
                mode: params.mode.to_string(),
            })?;
            agents[id].is_authority = true;
            Some(id)
        } else {
            None
        };

        Ok(Self {
            params,
            graph,
            agents,
            step: 0,
            authority,
            link_log: None,
            mixed_order: MixedOrder::default(),
            rng,
        })
    }

    /// Enables the link-creation trace.
    pub fn with_link_log(mut self) -> Self {
        self.link_log.get_or_insert_with(Vec::new);
        self
    }

    pub fn with_mixed_order(mut self, order: MixedOrder) -> Self {
        self.mixed_order = order;
        self
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.params.n_steps
    }

    /// Group rows for the current state, labelled with the current step.
    pub fn metrics(&self) -> [GroupMetricsRow; 2] {
        compute_group_metrics(self, self.step)
    }

    /// Advances one step.
    ///
    /// # Panics
    /// If the run already completed `n_steps` steps.
    pub fn step(&mut self) -> StepReport {
        assert!(
            !self.is_finished(),
            "step called on a finished run ({} of {} steps)",
            self.step,
            self.params.n_steps
        );
        let mut report = StepReport::default();
        mechanisms::broadcast_step(self);
        report.links_created = mechanisms::link_formation_step(self);

        let mode = self.params.mode;
        let unfollow_first = self.mixed_order == MixedOrder::UnfollowThenBan;
        if mode.has_unfollowing() && unfollow_first {
            report.links_unfollowed = mechanisms::decentralized_censorship_step(self);
        }
        if mode.has_authority() {
            report.ban = mechanisms::centralized_censorship_step(self);
        }
        if mode.has_unfollowing() && !unfollow_first {
            report.links_unfollowed = mechanisms::decentralized_censorship_step(self);
        }

        self.step += 1;
        report
    }

    /// Runs the remaining steps, returning the rows produced after each one.
    pub fn run_to_end(&mut self) -> Vec<GroupMetricsRow> {
        let mut rows = Vec::with_capacity(2 * (self.params.n_steps - self.step));
        while !self.is_finished() {
            self.step();
            rows.extend(self.metrics());
        }
        rows
    }

    pub(crate) fn current_step_label(&self) -> usize {
        self.step + 1
    }
}

pub fn init_simulation(params: &SimParams) -> Result<SimState> {
    SimState::new(params.clone())
}

/// Full time series of one run: two rows per step, step 0 first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub params: SimParams,
    pub rows: Vec<GroupMetricsRow>,
}

impl RunResult {
    /// Rows at step `n_steps`, belief 0 then belief 1.
    pub fn final_rows(&self) -> &[GroupMetricsRow] {
        &self.rows[self.rows.len() - 2..]
    }

    pub fn baseline_rows(&self) -> &[GroupMetricsRow] {
        &self.rows[..2]
    }

    pub fn rows_at(&self, step: usize) -> &[GroupMetricsRow] {
        &self.rows[2 * step..2 * step + 2]
    }
}

pub fn run_simulation(params: &SimParams) -> Result<RunResult> {
    let mut state = init_simulation(params)?;
    let mut rows = Vec::with_capacity(2 * (params.n_steps + 1));
    rows.extend(state.metrics());
    rows.extend(state.run_to_end());
    Ok(RunResult {
        params: params.clone(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CensorshipMode;

    fn small(mode: CensorshipMode) -> SimParams {
        SimParams {
            n_agents: 20,
            k_neighbors: 4,
            n_steps: 30,
            mode,
            seed: 5,
            ..Default::default()
        }
    }

    #[test]
    fn zero_radical_fraction_gives_all_mainstream() {
        let p = SimParams {
            radical_fraction: 0.0,
            mode: CensorshipMode::Centralized,
            ..small(CensorshipMode::Centralized)
        };
        let s = init_simulation(&p).unwrap();
        assert!(s.agents.iter().all(|a| a.belief == Belief::Mainstream));
        let auth = s.authority.unwrap();
        assert!(s.agents[auth].is_authority);
        assert_eq!(s.agents.iter().filter(|a| a.is_authority).count(), 1);
    }

    #[test]
    fn all_radical_centralized_fails_to_initialize() {
        let p = SimParams {
            radical_fraction: 1.0,
            ..small(CensorshipMode::Centralized)
        };
        assert!(matches!(
            init_simulation(&p),
            Err(Error::NoAuthorityCandidate { .. })
        ));
        // without an authority the same population is fine
        let p = SimParams {
            radical_fraction: 1.0,
            ..small(CensorshipMode::Decentralized)
        };
        assert!(init_simulation(&p).unwrap().authority.is_none());
    }

    #[test]
    fn initialization_is_deterministic() {
        let p = small(CensorshipMode::Mixed);
        assert_eq!(init_simulation(&p).unwrap(), init_simulation(&p).unwrap());
    }

    #[test]
    fn zero_steps_yields_baseline_only() {
        let p = SimParams {
            n_steps: 0,
            ..small(CensorshipMode::Mixed)
        };
        let r = run_simulation(&p).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert_eq!(r.final_rows(), r.baseline_rows());
    }

    #[test]
    fn row_count_and_labels() {
        let p = small(CensorshipMode::Centralized);
        let r = run_simulation(&p).unwrap();
        assert_eq!(r.rows.len(), 2 * (p.n_steps + 1));
        for (i, row) in r.rows.iter().enumerate() {
            assert_eq!(row.step, i / 2);
            assert_eq!(row.belief.index(), i % 2);
        }
    }

    #[test]
    fn decentralized_never_bans() {
        let p = SimParams {
            tolerance: 1.0,
            ..small(CensorshipMode::Decentralized)
        };
        let mut s = init_simulation(&p).unwrap();
        while !s.is_finished() {
            assert!(s.step().ban.is_none());
        }
        assert!(s.agents.iter().all(|a| !a.banned && !a.is_authority));
    }

    #[test]
    fn identical_states_step_identically() {
        let mut a = init_simulation(&small(CensorshipMode::Mixed)).unwrap();
        for _ in 0..7 {
            a.step();
        }
        let mut b = a.clone();
        assert_eq!(a.step(), b.step());
        assert_eq!(a, b);
    }

    #[test]
    #[should_panic(expected = "finished run")]
    fn stepping_past_the_end_panics() {
        let mut s = init_simulation(&SimParams {
            n_steps: 1,
            ..small(CensorshipMode::Mixed)
        })
        .unwrap();
        s.step();
        s.step();
    }

    #[test]
    fn serialized_state_resumes_identically() {
        let p = small(CensorshipMode::Mixed);
        let full = run_simulation(&p).unwrap();

        let mut s = init_simulation(&p).unwrap();
        for _ in 0..12 {
            s.step();
        }
        let json = serde_json::to_string(&s).unwrap();
        let mut resumed: SimState = serde_json::from_str(&json).unwrap();
        assert_eq!(resumed, s);
        let tail = resumed.run_to_end();
        assert_eq!(tail.as_slice(), &full.rows[2 * 13..]);
    }
}
