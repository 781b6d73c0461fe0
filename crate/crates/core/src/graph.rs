//! Mutable directed graph over agent ids `0..n`.
//!
//! Information flows along edges: for `u -> v`, v receives u's broadcasts.
//! Out-links and in-links are both kept as sorted id lists so that the
//! in-link view is always the exact transpose of the out-link view.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "GraphRepr", into = "GraphRepr")]
pub struct DirectedGraph {
    out_links: Vec<Vec<u32>>,
    in_links: Vec<Vec<u32>>,
    edge_count: usize,
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    n: usize,
    out_links: Vec<Vec<u32>>,
}

impl From<GraphRepr> for DirectedGraph {
    fn from(repr: GraphRepr) -> Self {
        let mut g = DirectedGraph::new(repr.n);
        for (u, targets) in repr.out_links.into_iter().enumerate() {
            for v in targets {
                g.add_edge(u, v as NodeId);
            }
        }
        g
    }
}

impl From<DirectedGraph> for GraphRepr {
    fn from(g: DirectedGraph) -> Self {
        GraphRepr {
            n: g.node_count(),
            out_links: g.out_links,
        }
    }
}

impl DirectedGraph {
    pub fn new(n: usize) -> Self {
        Self {
            out_links: vec![Vec::new(); n],
            in_links: vec![Vec::new(); n],
            edge_count: 0,
        }
    }

    /// Builds a graph from `(u, v)` pairs. Self-links and duplicates are dropped.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Self {
        let mut g = Self::new(n);
        for (u, v) in edges {
            g.add_edge(u, v);
        }
        g
    }

    pub fn node_count(&self) -> usize {
        self.out_links.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Agents reached by `u`'s broadcasts, ascending.
    pub fn out_links(&self, u: NodeId) -> &[u32] {
        &self.out_links[u]
    }

    /// Agents whose broadcasts reach `v`, ascending.
    pub fn in_links(&self, v: NodeId) -> &[u32] {
        &self.in_links[v]
    }

    pub fn out_degree(&self, u: NodeId) -> usize {
        self.out_links[u].len()
    }

    pub fn in_degree(&self, v: NodeId) -> usize {
        self.in_links[v].len()
    }

    /// In-degree plus out-degree.
    pub fn degree(&self, u: NodeId) -> usize {
        self.out_degree(u) + self.in_degree(u)
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.out_links[u].binary_search(&(v as u32)).is_ok()
    }

    /// Inserts `u -> v`. Returns `false` for self-links and existing edges.
    pub fn add_edge(&mut self, u: NodeId, v: NodeId) -> bool {
        if u == v {
            return false;
        }
        let (u32_, v32) = (u as u32, v as u32);
        match self.out_links[u].binary_search(&v32) {
            Ok(_) => false,
            Err(pos) => {
                self.out_links[u].insert(pos, v32);
                let pos = self.in_links[v]
                    .binary_search(&u32_)
                    .expect_err("in_links out of sync with out_links");
                self.in_links[v].insert(pos, u32_);
                self.edge_count += 1;
                true
            }
        }
    }

    /// Removes `u -> v` if present.
    pub fn remove_edge(&mut self, u: NodeId, v: NodeId) -> bool {
        let (u32_, v32) = (u as u32, v as u32);
        match self.out_links[u].binary_search(&v32) {
            Ok(pos) => {
                self.out_links[u].remove(pos);
                let pos = self.in_links[v]
                    .binary_search(&u32_)
                    .expect("in_links out of sync with out_links");
                self.in_links[v].remove(pos);
                self.edge_count -= 1;
                true
            }
            Err(_) => false,
        }
    }

    /// Removes every edge incident to `u`, in both directions. Returns the
    /// number of edges removed.
    pub fn isolate(&mut self, u: NodeId) -> usize {
        let u32_ = u as u32;
        let outs = std::mem::take(&mut self.out_links[u]);
        for &v in &outs {
            let list = &mut self.in_links[v as usize];
            let pos = list.binary_search(&u32_).expect("in_links out of sync");
            list.remove(pos);
        }
        let ins = std::mem::take(&mut self.in_links[u]);
        for &w in &ins {
            let list = &mut self.out_links[w as usize];
            let pos = list.binary_search(&u32_).expect("out_links out of sync");
            list.remove(pos);
        }
        let removed = outs.len() + ins.len();
        self.edge_count -= removed;
        removed
    }

    /// All edges ascending by `(u, v)`.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.out_links
            .iter()
            .enumerate()
            .flat_map(|(u, targets)| targets.iter().map(move |&v| (u, v as NodeId)))
    }

    /// Full-scan structural check: sorted, no self-links, no duplicates, and
    /// in-links equal to the transpose of out-links.
    pub fn check_consistency(&self) -> Result<(), String> {
        let n = self.node_count();
        let mut transpose = vec![Vec::new(); n];
        let mut count = 0;
        for (u, targets) in self.out_links.iter().enumerate() {
            if !targets.windows(2).all(|w| w[0] < w[1]) {
                return Err(format!("out_links[{u}] not strictly ascending"));
            }
            for &v in targets {
                if v as usize == u {
                    return Err(format!("self-link at {u}"));
                }
                if v as usize >= n {
                    return Err(format!("edge {u}->{v} out of range"));
                }
                transpose[v as usize].push(u as u32);
                count += 1;
            }
        }
        if transpose != self.in_links {
            return Err("in_links is not the transpose of out_links".into());
        }
        if count != self.edge_count {
            return Err(format!(
                "edge_count {} disagrees with {count} stored edges",
                self.edge_count
            ));
        }
        Ok(())
    }

    /// Edge-list text: one `u v` pair per line, ascending by `(u, v)`.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(self.edge_count * 8);
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    /// Undirected neighbor lists (edge direction dropped, reciprocal pairs merged).
    pub fn undirected_neighbors(&self) -> Vec<Vec<u32>> {
        (0..self.node_count())
            .map(|u| {
                let mut merged: Vec<u32> = self.out_links[u]
                    .iter()
                    .chain(self.in_links[u].iter())
                    .copied()
                    .collect();
                merged.sort_unstable();
                merged.dedup();
                merged
            })
            .collect()
    }
}
