use crate::engine::SimState;
use crate::model::{Belief, GroupMetricsRow};

#[derive(Default)]
struct Accumulator {
    size: usize,
    banned: usize,
    assent: f64,
    dissent: f64,
    divergence: f64,
    degree: f64,
    certainty: f64,
    certainty_n: usize,
}

/// One row per belief group (belief 0 first). Banned agents stay in their
/// group; agents without incident links are left out of the certainty mean.
pub fn compute_group_metrics(state: &SimState, step: usize) -> [GroupMetricsRow; 2] {
    let graph = &state.graph;
    let agents = &state.agents;
    let mut acc = [Accumulator::default(), Accumulator::default()];

    for a in agents {
        let g = &mut acc[a.belief.index()];
        g.size += 1;
        g.banned += a.banned as usize;
        g.assent += a.assent as f64;
        g.dissent += a.dissent as f64;
        g.divergence += a.divergence() as f64;
        let degree = graph.degree(a.id);
        g.degree += degree as f64;
        if degree > 0 {
            let same = graph
                .out_links(a.id)
                .iter()
                .chain(graph.in_links(a.id))
                .filter(|&&v| agents[v as usize].belief == a.belief)
                .count();
            g.certainty += same as f64 / degree as f64;
            g.certainty_n += 1;
        }
    }

    Belief::BOTH.map(|belief| {
        let g = &acc[belief.index()];
        let mean = |total: f64| (g.size > 0).then(|| total / g.size as f64);
        GroupMetricsRow {
            step,
            belief,
            mean_assent: mean(g.assent),
            mean_dissent: mean(g.dissent),
            mean_divergence: mean(g.divergence),
            mean_degree: mean(g.degree),
            mean_certainty: (g.certainty_n > 0).then(|| g.certainty / g.certainty_n as f64),
            group_size: g.size,
            banned_count: g.banned,
            certainty_n: g.certainty_n,
        }
    })
}
