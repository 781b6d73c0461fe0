//! Initial network construction and small-world diagnostics.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::graph::{DirectedGraph, NodeId};

/// Smallest number of random baselines accepted by [`small_worldness`].
pub const MIN_BASELINES: usize = 20;

/// Directed Watts–Strogatz graph.
///
/// Node `i` starts with out-links to its `k / 2` ring neighbors on each side.
/// Each out-link is then visited in order (`i` ascending, offsets `+1, -1,
/// +2, -2, ...`) and, with probability `beta`, moved to a uniformly drawn
/// target that is neither `i` nor an existing target of `i`. A colliding draw
/// is repeated up to `n` times, after which the original edge is kept. Every
/// node ends with out-degree exactly `k`.
pub fn generate_small_world<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    beta: f64,
    rng: &mut R,
) -> Result<DirectedGraph> {
    if n < 2 {
        return Err(Error::InvalidParam {
            name: "n_agents",
            value: n.to_string(),
            expected: "an integer >= 2",
        });
    }
    if k == 0 || !k.is_multiple_of(2) || k >= n {
        return Err(Error::InvalidParam {
            name: "k_neighbors",
            value: k.to_string(),
            expected: "an even integer in [2, n_agents)",
        });
    }
    check_probability("rewire_prob", beta)?;

    let half = k / 2;
    let mut g = DirectedGraph::new(n);
    let lattice_targets = |i: usize| (1..=half).flat_map(move |d| [(i + d) % n, (i + n - d) % n]);
    for i in 0..n {
        for j in lattice_targets(i) {
            g.add_edge(i, j);
        }
    }

    for i in 0..n {
        for j in lattice_targets(i) {
            if rng.gen::<f64>() >= beta {
                continue;
            }
            for _ in 0..n {
                let t = rng.gen_range(0..n);
                if t != i && !g.has_edge(i, t) {
                    g.remove_edge(i, j);
                    g.add_edge(i, t);
                    break;
                }
            }
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkStats {
    /// Mean local clustering coefficient of the undirected projection.
    pub clustering: f64,
    /// Mean shortest path length within the largest weakly connected component.
    pub mean_path_length: f64,
    pub random_clustering: f64,
    pub random_path_length: f64,
    /// `(C / C_rand) / (L / L_rand)`.
    pub sigma: f64,
    /// Share of nodes in the largest weakly connected component.
    pub component_fraction: f64,
}

/// Small-world-ness of `graph` against `n_baseline` directed Erdős–Rényi
/// graphs with the same node and edge counts.
pub fn small_worldness<R: Rng + ?Sized>(
    graph: &DirectedGraph,
    rng: &mut R,
    n_baseline: usize,
) -> Result<NetworkStats> {
    if n_baseline < MIN_BASELINES {
        return Err(Error::InvalidParam {
            name: "n_baseline",
            value: n_baseline.to_string(),
            expected: "at least 20 random baseline graphs",
        });
    }
    let n = graph.node_count();
    let adj = graph.undirected_neighbors();
    let component = largest_component(&adj);
    let component_fraction = component.len() as f64 / n as f64;
    if component_fraction < 0.9 {
        return Err(Error::GraphTooFragmented {
            fraction: component_fraction,
        });
    }
    let clustering = mean_clustering(&adj);
    let path_length = mean_path_length(&adj, &component);

    let m = graph.edge_count();
    let (mut c_sum, mut l_sum) = (0.0, 0.0);
    for _ in 0..n_baseline {
        let er = random_directed_gnm(n, m, rng);
        let er_adj = er.undirected_neighbors();
        let er_component = largest_component(&er_adj);
        c_sum += mean_clustering(&er_adj);
        l_sum += mean_path_length(&er_adj, &er_component);
    }
    let random_clustering = c_sum / n_baseline as f64;
    let random_path_length = l_sum / n_baseline as f64;
    let sigma = (clustering / random_clustering) / (path_length / random_path_length);

    Ok(NetworkStats {
        clustering,
        mean_path_length: path_length,
        random_clustering,
        random_path_length,
        sigma,
        component_fraction,
    })
}

/// Uniform directed graph with exactly `m` distinct non-self edges.
pub fn random_directed_gnm<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> DirectedGraph {
    let m = m.min(n * (n - 1));
    let mut g = DirectedGraph::new(n);
    while g.edge_count() < m {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        g.add_edge(u, v);
    }
    g
}

/// Mean local clustering over all nodes; nodes with fewer than two
/// neighbors contribute 0.
pub fn mean_clustering(adj: &[Vec<u32>]) -> f64 {
    if adj.is_empty() {
        return 0.0;
    }
    let n = adj.len();
    let mut mark = vec![false; n];
    let mut total = 0.0;
    for nbrs in adj {
        let d = nbrs.len();
        if d < 2 {
            continue;
        }
        for &v in nbrs {
            mark[v as usize] = true;
        }
        let mut links = 0usize;
        for &v in nbrs {
            links += adj[v as usize]
                .iter()
                .filter(|&&w| mark[w as usize])
                .count();
        }
        for &v in nbrs {
            mark[v as usize] = false;
        }
        // each triangle edge was seen from both ends
        total += links as f64 / (d * (d - 1)) as f64;
    }
    total / n as f64
}

/// Mean BFS distance over ordered pairs of distinct nodes in `component`.
pub fn mean_path_length(adj: &[Vec<u32>], component: &[NodeId]) -> f64 {
    let size = component.len();
    if size < 2 {
        return 0.0;
    }
    let mut dist = vec![usize::MAX; adj.len()];
    let mut queue = VecDeque::with_capacity(size);
    let mut total: u64 = 0;
    for &src in component {
        dist.iter_mut().for_each(|d| *d = usize::MAX);
        dist[src] = 0;
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                let v = v as usize;
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    total += dist[v] as u64;
                    queue.push_back(v);
                }
            }
        }
    }
    total as f64 / (size * (size - 1)) as f64
}

/// Nodes of the largest connected component (ties go to the lowest node id).
pub fn largest_component(adj: &[Vec<u32>]) -> Vec<NodeId> {
    let n = adj.len();
    let mut seen = vec![false; n];
    let mut best: Vec<NodeId> = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut members = vec![start];
        seen[start] = true;
        let mut head = 0;
        while head < members.len() {
            let u = members[head];
            head += 1;
            for &v in &adj[u] {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    members.push(v as usize);
                }
            }
        }
        if members.len() > best.len() {
            best = members;
        }
    }
    best.sort_unstable();
    best
}
