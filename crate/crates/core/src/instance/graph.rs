use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Undirected simple graph. Edges are stored as `(u, v)` with `u < v`,
/// sorted and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(n_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop on node {a}")));
            }
            if a >= n_nodes || b >= n_nodes {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) out of range for {n_nodes} nodes"
                )));
            }
            let e = (a.min(b), a.max(b));
            if !set.insert(e) {
                return Err(Error::InvalidGraph(format!("duplicate edge {e:?}")));
            }
        }
        Ok(Graph {
            n_nodes,
            edges: set.into_iter().collect(),
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_nodes];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n_nodes];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    /// Subgraph induced by `nodes`; node `nodes[k]` becomes node `k`.
    /// Used for fault masking and for carving odd-sized test systems out of
    /// a Chimera lattice.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Result<Graph> {
        let mut map = vec![usize::MAX; self.n_nodes];
        for (k, &v) in nodes.iter().enumerate() {
            if v >= self.n_nodes {
                return Err(Error::InvalidGraph(format!("node {v} out of range")));
            }
            if map[v] != usize::MAX {
                return Err(Error::InvalidGraph(format!("node {v} listed twice")));
            }
            map[v] = k;
        }
        let edges = self
            .edges
            .iter()
            .filter(|&&(a, b)| map[a] != usize::MAX && map[b] != usize::MAX)
            .map(|&(a, b)| (map[a], map[b]));
        Graph::new(nodes.len(), edges)
    }

    /// Graph restricted to the first `n` nodes.
    pub fn prefix_subgraph(&self, n: usize) -> Result<Graph> {
        let nodes: Vec<usize> = (0..n).collect();
        self.induced_subgraph(&nodes)
    }

    /// True when the edge set contains at least one cycle.
    pub fn has_cycle(&self) -> bool {
        let mut parent: Vec<usize> = (0..self.n_nodes).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(a, b) in &self.edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                return true;
            }
            parent[ra] = rb;
        }
        false
    }
}

/// Chimera graph of `rows x cols` unit cells, each a K_{4,4} between four
/// horizontal and four vertical qubits. Horizontal qubit `k` couples to
/// horizontal qubit `k` of the cell to its right; vertical qubit `k` to
/// vertical qubit `k` of the cell below.
///
/// Node id = `((row * cols + col) * 2 + partition) * 4 + k` with partition 0
/// horizontal and 1 vertical.
pub fn build_chimera(rows: usize, cols: usize) -> Result<Graph> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidDimension(format!(
            "chimera needs rows >= 1 and cols >= 1, got {rows}x{cols}"
        )));
    }
    let node = |r: usize, c: usize, part: usize, k: usize| ((r * cols + c) * 2 + part) * 4 + k;
    let mut edges = Vec::with_capacity(16 * rows * cols + 8 * rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            for h in 0..4 {
                for v in 0..4 {
                    edges.push((node(r, c, 0, h), node(r, c, 1, v)));
                }
            }
            if c + 1 < cols {
                for k in 0..4 {
                    edges.push((node(r, c, 0, k), node(r, c + 1, 0, k)));
                }
            }
            if r + 1 < rows {
                for k in 0..4 {
                    edges.push((node(r, c, 1, k), node(r + 1, c, 1, k)));
                }
            }
        }
    }
    Graph::new(8 * rows * cols, edges)
}
