//! The per-step mechanisms: broadcast, link formation and the two kinds of
//! censorship. Each one mutates a [`SimState`] in place and draws only from
//! the state's own generator.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{LinkEvent, SimState};
use crate::model::Belief;

/// An agent removed from the platform by the authority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BanEvent {
    pub agent: usize,
    /// Incident links (both directions) severed by the ban.
    pub links_removed: usize,
}

/// Every agent receives the belief of each agent linking to it: same belief
/// counts as assent, different belief as dissent. The graph is not touched,
/// so visiting agents in order is equivalent to a synchronous update.
pub fn broadcast_step(state: &mut SimState) {
    let SimState { graph, agents, .. } = state;
    for u in 0..agents.len() {
        let own = agents[u].belief;
        let senders = graph.in_links(u);
        let same = senders
            .iter()
            .filter(|&&v| agents[v as usize].belief == own)
            .count() as u64;
        agents[u].assent += same;
        agents[u].dissent += senders.len() as u64 - same;
    }
}

/// Each agent, in id order, draws `r` in `[0, 1)` and tries to add one
/// out-link:
///
/// * banned agents link to a random fellow banned agent when `r < homophily`
///   and otherwise do nothing;
/// * other agents link to a random like-minded agent when `r < homophily`,
///   else to a random agent of either belief.
///
/// Unbanned agents never pick banned ones. Self and existing targets are
/// never candidates, and an empty pool is a no-op.
///
/// Returns the number of links created.
pub fn link_formation_step(state: &mut SimState) -> usize {
    let step = state.current_step_label();
    let homophily = state.params.homophily;
    let SimState {
        graph,
        agents,
        rng,
        link_log,
        ..
    } = state;
    let n = agents.len();
    let mut pool: Vec<u32> = Vec::with_capacity(n);
    let mut created = 0;

    for u in 0..n {
        let r: f64 = rng.gen();
        let like_minded = r < homophily;
        let me = &agents[u];
        if me.banned && !like_minded {
            continue;
        }
        let (own, banned) = (me.belief, me.banned);

        pool.clear();
        let targets = graph.out_links(u);
        let mut cursor = 0;
        for (v, other) in agents.iter().enumerate() {
            // `targets` is sorted, so one forward pass skips existing ones
            if cursor < targets.len() && targets[cursor] as usize == v {
                cursor += 1;
                continue;
            }
            if v == u {
                continue;
            }
            let eligible = if banned {
                other.banned
            } else {
                !other.banned && (!like_minded || other.belief == own)
            };
            if eligible {
                pool.push(v as u32);
            }
        }
        if pool.is_empty() {
            continue;
        }

        let target = pool[rng.gen_range(0..pool.len())] as usize;
        graph.add_edge(u, target);
        created += 1;
        if let Some(log) = link_log.as_mut() {
            log.push(LinkEvent {
                step,
                source: u,
                target,
                source_banned: banned,
            });
        }
    }
    created
}

/// The authority inspects one uniformly drawn agent among those not yet
/// banned (never itself). A radical pick is banned with probability
/// `tolerance`, losing every incident link. No-op when there is no
/// authority or nobody left to inspect.
pub fn centralized_censorship_step(state: &mut SimState) -> Option<BanEvent> {
    let authority = state.authority?;
    let candidates: Vec<usize> = state
        .agents
        .iter()
        .filter(|a| !a.banned && a.id != authority)
        .map(|a| a.id)
        .collect();
    if candidates.is_empty() {
        return None;
    }
    let picked = candidates[state.rng.gen_range(0..candidates.len())];
    if state.agents[picked].belief != Belief::Radical {
        return None;
    }
    if state.rng.gen::<f64>() >= state.params.tolerance {
        return None;
    }
    state.agents[picked].banned = true;
    let links_removed = state.graph.isolate(picked);
    Some(BanEvent {
        agent: picked,
        links_removed,
    })
}

/// Every belief-0 agent with at least one out-link looks at one uniformly
/// drawn out-link and drops it if the agent at the other end is radical.
/// Agents are visited in id order against the current graph.
///
/// Returns the number of links removed.
pub fn decentralized_censorship_step(state: &mut SimState) -> usize {
    let SimState {
        graph, agents, rng, ..
    } = state;
    let mut removed = 0;
    for u in 0..agents.len() {
        if agents[u].belief != Belief::Mainstream {
            continue;
        }
        let degree = graph.out_degree(u);
        if degree == 0 {
            continue;
        }
        let v = graph.out_links(u)[rng.gen_range(0..degree)] as usize;
        if agents[v].belief == Belief::Radical {
            graph.remove_edge(u, v);
            removed += 1;
        }
    }
    removed
}
