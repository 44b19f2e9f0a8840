//! Sparse graph storage and the neighborhood queries the rest of the
//! crate is built on.
//!
//! Graphs are immutable once constructed: compressed sparse rows over
//! dense node ids `0..N-1`, optional positive arc weights, and the
//! original string token per node. Undirected graphs store every edge in
//! both directions; rows are sorted and duplicate-free; self-loops are
//! never stored (normalization in the encoders adds them transiently).

mod io;

pub use io::{load_edge_list, load_features, NodeFeatures};
#[cfg(test)]
pub(crate) use io::parse_edge_list;

use std::collections::{HashMap, VecDeque};

use rand::rngs::StdRng;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: edge weight must be positive, got {weight}")]
    NonPositiveWeight { line: usize, weight: f64 },
    #[error("node id {node} out of range for graph with {num_nodes} nodes")]
    NodeOutOfRange { node: usize, num_nodes: usize },
    #[error("node pair must be two distinct nodes, got ({0}, {0})")]
    SelfPair(usize),
    #[error("walk length must be at least 1")]
    ZeroWalkLength,
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Immutable sparse graph over dense node ids.
#[derive(Debug, Clone)]
pub struct Graph {
    directed: bool,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Option<Vec<f64>>,
    tokens: Vec<String>,
    ids: HashMap<String, usize>,
}

/// Induced subgraph together with the map back to original node ids.
#[derive(Debug, Clone)]
pub struct PairSubgraph {
    pub graph: Graph,
    /// `original_ids[sub_id]` is the node's id in the parent graph.
    pub original_ids: Vec<usize>,
}

impl Graph {
    /// Builds a graph from `(src, dst, weight)` triples over existing
    /// dense ids. Undirected input is symmetrized, duplicate arcs are
    /// collapsed with weights summed, and self-loops are dropped with a
    /// warning. `line_hints` carries input line numbers for error
    /// reporting; pass `None` for programmatic construction.
    pub fn build(
        tokens: Vec<String>,
        edges: &[(usize, usize, Option<f64>)],
        directed: bool,
        line_hints: Option<&[usize]>,
    ) -> Result<Graph, GraphError> {
        let n = tokens.len();
        let mut any_weight = false;
        let mut arcs: Vec<(usize, usize, f64)> = Vec::with_capacity(edges.len() * 2);
        for (i, &(u, v, w)) in edges.iter().enumerate() {
            let line = line_hints.map(|h| h[i]).unwrap_or(0);
            if u >= n {
                return Err(GraphError::NodeOutOfRange { node: u, num_nodes: n });
            }
            if v >= n {
                return Err(GraphError::NodeOutOfRange { node: v, num_nodes: n });
            }
            if let Some(w) = w {
                if w <= 0.0 {
                    return Err(GraphError::NonPositiveWeight { line, weight: w });
                }
                any_weight = true;
            }
            if u == v {
                log::warn!("dropping self-loop on node {u} ({})", tokens[u]);
                continue;
            }
            let w = w.unwrap_or(1.0);
            arcs.push((u, v, w));
            if !directed {
                arcs.push((v, u, w));
            }
        }

        // Collapse duplicates by summing weights.
        arcs.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(arcs.len());
        let mut any_merge = false;
        for (u, v, w) in arcs {
            match merged.last_mut() {
                Some(last) if last.0 == u && last.1 == v => {
                    last.2 += w;
                    any_merge = true;
                }
                _ => merged.push((u, v, w)),
            }
        }

        let mut offsets = vec![0usize; n + 1];
        for &(u, _, _) in &merged {
            offsets[u + 1] += 1;
        }
        for i in 1..=n {
            offsets[i] += offsets[i - 1];
        }
        let targets: Vec<usize> = merged.iter().map(|&(_, v, _)| v).collect();
        let weights = if any_weight || any_merge {
            Some(merged.iter().map(|&(_, _, w)| w).collect())
        } else {
            None
        };

        let ids = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(Graph {
            directed,
            offsets,
            targets,
            weights,
            tokens,
            ids,
        })
    }

    /// Programmatic constructor with stringified indices as tokens.
    pub fn from_index_edges(
        num_nodes: usize,
        edges: &[(usize, usize)],
        directed: bool,
    ) -> Result<Graph, GraphError> {
        let tokens = (0..num_nodes).map(|i| i.to_string()).collect();
        let triples: Vec<_> = edges.iter().map(|&(u, v)| (u, v, None)).collect();
        Graph::build(tokens, &triples, directed, None)
    }

    pub fn num_nodes(&self) -> usize {
        self.tokens.len()
    }

    /// Number of stored directed arcs (twice the edge count for
    /// undirected graphs).
    pub fn num_arcs(&self) -> usize {
        self.targets.len()
    }

    /// Number of distinct edges (arcs for directed graphs).
    pub fn num_edges(&self) -> usize {
        if self.directed {
            self.targets.len()
        } else {
            self.targets.len() / 2
        }
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn has_weights(&self) -> bool {
        self.weights.is_some()
    }

    pub fn token(&self, v: usize) -> &str {
        &self.tokens[v]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn node_id(&self, token: &str) -> Option<usize> {
        self.ids.get(token).copied()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.num_nodes() && self.neighbors(u).binary_search(&v).is_ok()
    }

    fn check_node(&self, v: usize) -> Result<(), GraphError> {
        if v >= self.num_nodes() {
            return Err(GraphError::NodeOutOfRange {
                node: v,
                num_nodes: self.num_nodes(),
            });
        }
        Ok(())
    }

    /// Out-degree per node (the degree, for undirected graphs).
    pub fn degrees(&self) -> Vec<usize> {
        (0..self.num_nodes())
            .map(|v| self.offsets[v + 1] - self.offsets[v])
            .collect()
    }

    /// Unique edges as `(u, v, weight)`, canonicalized `u < v` for
    /// undirected graphs; weight is `None` when the graph is unweighted.
    pub fn unique_edges(&self) -> Vec<(usize, usize, Option<f64>)> {
        let mut out = Vec::with_capacity(self.num_edges());
        for u in 0..self.num_nodes() {
            for pos in self.offsets[u]..self.offsets[u + 1] {
                let v = self.targets[pos];
                if !self.directed && v < u {
                    continue;
                }
                let w = self.weights.as_ref().map(|ws| ws[pos]);
                out.push((u, v, w));
            }
        }
        out
    }

    /// BFS shortest-path lengths from `src`; `usize::MAX` marks
    /// unreachable nodes.
    fn bfs(&self, src: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.num_nodes()];
        dist[src] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            for &v in self.neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Hop distance between `u` and `v`; `None` when unreachable.
    pub fn distance(&self, u: usize, v: usize) -> Result<Option<usize>, GraphError> {
        self.check_node(u)?;
        self.check_node(v)?;
        let d = self.bfs(u)[v];
        Ok((d != usize::MAX).then_some(d))
    }

    /// All nodes within `h` hops of `v`, including `v` itself, in
    /// ascending id order.
    pub fn neighborhood(&self, v: usize, h: usize) -> Result<Vec<usize>, GraphError> {
        self.check_node(v)?;
        let dist = self.bfs(v);
        Ok((0..self.num_nodes()).filter(|&u| dist[u] <= h).collect())
    }

    /// Induced subgraph over the union of the `h`-hop neighborhoods of
    /// `u` and `v`.
    pub fn pair_subgraph(&self, u: usize, v: usize, h: usize) -> Result<PairSubgraph, GraphError> {
        self.check_node(u)?;
        self.check_node(v)?;
        if u == v {
            return Err(GraphError::SelfPair(u));
        }
        let mut keep: Vec<usize> = self.neighborhood(u, h)?;
        keep.extend(self.neighborhood(v, h)?);
        keep.sort_unstable();
        keep.dedup();

        let mut sub_id = vec![usize::MAX; self.num_nodes()];
        for (s, &orig) in keep.iter().enumerate() {
            sub_id[orig] = s;
        }
        let tokens = keep.iter().map(|&o| self.tokens[o].clone()).collect();
        let mut edges = Vec::new();
        for &a in &keep {
            for pos in self.offsets[a]..self.offsets[a + 1] {
                let b = self.targets[pos];
                if sub_id[b] == usize::MAX {
                    continue;
                }
                // Emit each undirected edge once; symmetrization in
                // `build` restores the reverse arc.
                if !self.directed && b < a {
                    continue;
                }
                edges.push((sub_id[a], sub_id[b], self.weights.as_ref().map(|w| w[pos])));
            }
        }
        let graph = Graph::build(tokens, &edges, self.directed, None)?;
        Ok(PairSubgraph {
            graph,
            original_ids: keep,
        })
    }

    /// Uniform random walk of up to `length` steps from `start`. The
    /// returned sequence holds the visited nodes (the start node is not
    /// included) and truncates early at a node with no neighbors; an
    /// isolated start yields an empty walk.
    pub fn random_walk(
        &self,
        start: usize,
        length: usize,
        rng: &mut StdRng,
    ) -> Result<Vec<usize>, GraphError> {
        self.check_node(start)?;
        if length == 0 {
            return Err(GraphError::ZeroWalkLength);
        }
        let mut walk = Vec::with_capacity(length);
        let mut cur = start;
        for _ in 0..length {
            let nbrs = self.neighbors(cur);
            if nbrs.is_empty() {
                break;
            }
            cur = nbrs[rng.random_range(0..nbrs.len())];
            walk.push(cur);
        }
        Ok(walk)
    }
}
