//! Helpers shared by the integration test targets: independent oracles and
//! the per-step invariant checker.
#![allow(dead_code)]

use censorsim::engine::SimState;
use censorsim::{Belief, CensorshipMode, SimParams};
use proptest::prelude::*;

/// Kruskal–Wallis H computed the slow way: each rank is counted directly
/// as `1 + #less + (#equal - 1) / 2`, and tie blocks are found by scanning
/// distinct values.
pub fn brute_force_h(groups: &[Vec<f64>]) -> f64 {
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    let n = pooled.len() as f64;
    let rank = |x: f64| {
        let less = pooled.iter().filter(|&&y| y < x).count() as f64;
        let equal = pooled.iter().filter(|&&y| y == x).count() as f64;
        1.0 + less + (equal - 1.0) / 2.0
    };
    let mut sum = 0.0;
    for g in groups {
        let r: f64 = g.iter().map(|&x| rank(x)).sum();
        sum += r * r / g.len() as f64;
    }
    let h = 12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0);

    let mut distinct: Vec<f64> = Vec::new();
    for &x in &pooled {
        if !distinct.contains(&x) {
            distinct.push(x);
        }
    }
    let ties: f64 = distinct
        .iter()
        .map(|&v| {
            let t = pooled.iter().filter(|&&y| y == v).count() as f64;
            t * t * t - t
        })
        .sum();
    let c = 1.0 - ties / (n * n * n - n);
    if c == 0.0 {
        0.0
    } else {
        h / c
    }
}

/// Dunn z for groups `i` and `j`, from directly counted ranks.
pub fn brute_force_dunn_z(groups: &[Vec<f64>], i: usize, j: usize) -> f64 {
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    let n = pooled.len() as f64;
    let rank = |x: f64| {
        let less = pooled.iter().filter(|&&y| y < x).count() as f64;
        let equal = pooled.iter().filter(|&&y| y == x).count() as f64;
        1.0 + less + (equal - 1.0) / 2.0
    };
    let mean_rank = |g: &Vec<f64>| g.iter().map(|&x| rank(x)).sum::<f64>() / g.len() as f64;
    let mut seen: Vec<f64> = Vec::new();
    let mut ties = 0.0;
    for &x in &pooled {
        if !seen.contains(&x) {
            seen.push(x);
            let t = pooled.iter().filter(|&&y| y == x).count() as f64;
            ties += t * t * t - t;
        }
    }
    let var = n * (n + 1.0) / 12.0 - ties / (12.0 * (n - 1.0));
    let se = (var * (1.0 / groups[i].len() as f64 + 1.0 / groups[j].len() as f64)).sqrt();
    (mean_rank(&groups[i]) - mean_rank(&groups[j])) / se
}

/// Small random model instances: n <= 20, steps <= 50.
pub fn small_params() -> impl Strategy<Value = SimParams> {
    (
        4usize..=20,
        1usize..=4,
        0.0..=1.0f64,
        0.0..=1.0f64,
        0.0..=1.0f64,
        0.0..=1.0f64,
        prop::sample::select(CensorshipMode::ALL.to_vec()),
        0usize..=50,
        any::<u64>(),
    )
        .prop_map(|(n, half_k, beta, rf, h, tol, mode, steps, seed)| {
            let k = (2 * half_k).min(if (n - 1) % 2 == 0 { n - 1 } else { n - 2 });
            SimParams {
                n_agents: n,
                k_neighbors: k.max(2),
                rewire_prob: beta,
                radical_fraction: rf,
                homophily: h,
                tolerance: tol,
                mode,
                n_steps: steps,
                seed,
            }
        })
}

/// Steps `params` to completion, checking every model and engine invariant
/// after each step. Initialization errors are only allowed where no
/// mainstream agent exists in a mode with an authority.
pub fn check_run_invariants(params: &SimParams) -> Result<(), String> {
    let mut state = match SimState::new(params.clone()) {
        Ok(s) => s.with_link_log(),
        Err(e) => {
            return if params.mode.has_authority() {
                Ok(())
            } else {
                Err(format!("unexpected init error: {e}"))
            }
        }
    };
    let n = params.n_agents;
    let k = params.k_neighbors;

    // baseline
    for u in 0..n {
        if state.graph.out_degree(u) != k {
            return Err(format!(
                "node {u} starts with out-degree {}",
                state.graph.out_degree(u)
            ));
        }
    }
    let total_degree: usize = (0..n).map(|u| state.graph.degree(u)).sum();
    if total_degree != 2 * k * n {
        return Err(format!("step-0 mean total degree {total_degree}/{n} != 2k"));
    }
    let base = state.metrics();
    let from_rows: f64 = base
        .iter()
        .filter_map(|r| r.mean_degree.map(|d| d * r.group_size as f64))
        .sum();
    if (from_rows / n as f64 - (2 * k) as f64).abs() > 1e-9 {
        return Err(format!("step-0 mean_degree rows give {from_rows}/{n}"));
    }
    for r in &base {
        if r.mean_assent.unwrap_or(0.0) != 0.0 || r.mean_dissent.unwrap_or(0.0) != 0.0 {
            return Err("counters not zero at step 0".into());
        }
    }
    if let Some(a) = state.authority {
        if state.agents[a].belief != Belief::Mainstream || !state.agents[a].is_authority {
            return Err("authority is not a flagged mainstream agent".into());
        }
    }

    let beliefs: Vec<Belief> = state.agents.iter().map(|a| a.belief).collect();
    let no_mainstream = beliefs.iter().all(|&b| b == Belief::Radical);
    let mut bans = 0usize;
    while !state.is_finished() {
        let before = state.agents.clone();
        let edges_before = state.graph.edge_count();
        let report = state.step();

        state.graph.check_consistency()?;
        for (a, b) in state.agents.iter().zip(&before) {
            if a.belief != b.belief {
                return Err(format!("agent {} changed belief", a.id));
            }
            if a.assent < b.assent || a.dissent < b.dissent {
                return Err(format!("agent {} counter decreased", a.id));
            }
            if b.banned && !a.banned {
                return Err(format!("agent {} was unbanned", a.id));
            }
        }
        let newly_banned: Vec<usize> = state
            .agents
            .iter()
            .zip(&before)
            .filter(|(a, b)| a.banned && !b.banned)
            .map(|(a, _)| a.id)
            .collect();
        match &report.ban {
            Some(ban) => {
                if newly_banned != [ban.agent] {
                    return Err(format!("ban report {ban:?} vs flags {newly_banned:?}"));
                }
                if before[ban.agent].banned {
                    return Err("an already banned agent was selected".into());
                }
                if state.agents[ban.agent].belief != Belief::Radical
                    || state.agents[ban.agent].is_authority
                {
                    return Err("non-radical or authority banned".into());
                }
                // in mixed mode unfollowing may precede the ban, never follow it
                // with the default order, so the agent is still isolated here
                if state.graph.degree(ban.agent) != 0 {
                    return Err(format!("banned agent {} keeps links", ban.agent));
                }
                bans += 1;
            }
            None => {
                if !newly_banned.is_empty() {
                    return Err("unreported ban".into());
                }
            }
        }
        if params.tolerance == 0.0 && state.agents.iter().any(|a| a.banned) {
            return Err("ban with zero tolerance".into());
        }
        if params.mode == CensorshipMode::Decentralized {
            if state.graph.edge_count() + report.links_unfollowed
                != edges_before + report.links_created
            {
                return Err("decentralized link ledger does not balance".into());
            }
            if state.agents.iter().any(|a| a.banned) {
                return Err("ban under decentralized mode".into());
            }
        }
        if no_mainstream && report.links_unfollowed != 0 {
            return Err("unfollowing without mainstream agents".into());
        }
        let rows = state.metrics();
        let banned_total: usize = rows.iter().map(|r| r.banned_count).sum();
        if banned_total != bans {
            return Err("banned_count disagrees with ban events".into());
        }
        for r in &rows {
            if let (Some(a), Some(d), Some(v)) = (r.mean_assent, r.mean_dissent, r.mean_divergence)
            {
                if ((a - d) - v).abs() > 1e-9 {
                    return Err("divergence != assent - dissent".into());
                }
            }
        }
    }
    if bans > params.n_steps {
        return Err("more bans than steps".into());
    }
    if params.homophily == 1.0 {
        for ev in state.link_log.as_deref().unwrap_or_default() {
            if beliefs[ev.source] != beliefs[ev.target] {
                return Err(format!("cross-belief link {ev:?} under full homophily"));
            }
        }
    }
    // authority is never banned
    if let Some(a) = state.authority {
        if state.agents[a].banned {
            return Err("authority banned".into());
        }
    }
    Ok(())
}

/// Same instance generator with one parameter pinned.
pub fn with_tolerance_zero() -> impl Strategy<Value = SimParams> {
    small_params().prop_map(|p| SimParams {
        tolerance: 0.0,
        ..p
    })
}

pub fn with_full_homophily() -> impl Strategy<Value = SimParams> {
    small_params().prop_map(|p| SimParams {
        homophily: 1.0,
        ..p
    })
}

pub fn without_mainstream() -> impl Strategy<Value = SimParams> {
    small_params().prop_map(|p| SimParams {
        radical_fraction: 1.0,
        mode: CensorshipMode::Decentralized,
        ..p
    })
}

/// Runs `check` on every instance the strategy yields, `cases` times.
pub fn run_cases<S: Strategy<Value = SimParams>>(
    strategy: S,
    cases: u32,
    seed: u64,
) -> Result<(), String> {
    use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    let mut runner = TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::from_seed(RngAlgorithm::ChaCha, &bytes),
    );
    runner
        .run(&strategy, |p| {
            check_run_invariants(&p).map_err(TestCaseError::fail)
        })
        .map_err(|e| e.to_string())
}
