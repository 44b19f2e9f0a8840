//! Synthetic graph generators for benchmarks and tests.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::rngs::StdRng;
use rand::Rng;

use crate::graph::Graph;

/// Stochastic block model: nodes split into `num_blocks` contiguous,
/// equally sized blocks; each unordered pair gets an edge independently
/// with probability `p_in` inside a block and `p_out` across blocks.
pub fn stochastic_block_model(
    num_nodes: usize,
    num_blocks: usize,
    p_in: f64,
    p_out: f64,
    rng: &mut StdRng,
) -> Graph {
    let block = |v: usize| v * num_blocks / num_nodes;
    let mut edges = Vec::new();
    for u in 0..num_nodes {
        for v in (u + 1)..num_nodes {
            let p = if block(u) == block(v) { p_in } else { p_out };
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::from_index_edges(num_nodes, &edges, false).expect("generated edges are valid")
}

/// Barabasi-Albert preferential attachment: starts from a small clique
/// and attaches each new node to `attach` distinct existing nodes drawn
/// proportionally to degree.
pub fn barabasi_albert(num_nodes: usize, attach: usize, rng: &mut StdRng) -> Graph {
    let attach = attach.max(1).min(num_nodes.saturating_sub(1)).max(1);
    let core = attach + 1;
    let mut edges = Vec::new();
    // Endpoint pool: one entry per incident edge end, so a uniform draw
    // is degree-proportional.
    let mut pool: Vec<usize> = Vec::new();
    for u in 0..core.min(num_nodes) {
        for v in (u + 1)..core.min(num_nodes) {
            edges.push((u, v));
            pool.push(u);
            pool.push(v);
        }
    }
    for new in core..num_nodes {
        let mut chosen = Vec::with_capacity(attach);
        while chosen.len() < attach {
            let target = pool[rng.random_range(0..pool.len())];
            if target != new && !chosen.contains(&target) {
                chosen.push(target);
            }
        }
        for &t in &chosen {
            edges.push((new, t));
            pool.push(new);
            pool.push(t);
        }
    }
    Graph::from_index_edges(num_nodes, &edges, false).expect("generated edges are valid")
}

/// Writes a graph back out in the edge-list text format (token pairs,
/// weight column only when the graph carries weights).
pub fn write_edge_list(g: &Graph, path: impl AsRef<Path>) -> std::io::Result<()> {
    let mut out = fs::File::create(path)?;
    for (u, v, w) in g.unique_edges() {
        match w {
            Some(w) => writeln!(out, "{} {} {}", g.token(u), g.token(v), w)?,
            None => writeln!(out, "{} {}", g.token(u), g.token(v))?,
        }
    }
    Ok(())
}
