//! Train/valid/test edge splitting with a leakage-free training graph.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;

use crate::graph::{Graph, GraphError};

use super::RunError;

/// Disjoint positive-edge splits; the training graph contains only the
/// training edges (all nodes retained), so evaluation scores never see
/// held-out adjacency.
#[derive(Debug, Clone)]
pub struct EdgeSplit {
    pub train: Vec<(usize, usize)>,
    pub valid: Vec<(usize, usize)>,
    pub test: Vec<(usize, usize)>,
    pub train_graph: Graph,
}

/// Uniform random partition of the unique edges by the given fractions;
/// valid/test sizes are rounded, train takes the rest.
pub fn split_edges(
    g: &Graph,
    fractions: (f64, f64, f64),
    rng: &mut StdRng,
) -> Result<EdgeSplit, RunError> {
    let (f_train, f_valid, f_test) = fractions;
    let mut edges = g.unique_edges();
    edges.shuffle(rng);
    let m = edges.len();
    let n_valid = (m as f64 * f_valid).round() as usize;
    let n_test = (m as f64 * f_test).round() as usize;
    if n_valid + n_test >= m || n_valid == 0 || n_test == 0 {
        return Err(RunError::EmptySplit {
            edges: m,
            fractions: (f_train, f_valid, f_test),
        });
    }
    let valid: Vec<_> = edges[..n_valid].iter().map(|&(u, v, _)| (u, v)).collect();
    let test: Vec<_> = edges[n_valid..n_valid + n_test]
        .iter()
        .map(|&(u, v, _)| (u, v))
        .collect();
    let train_edges = &edges[n_valid + n_test..];
    let train: Vec<_> = train_edges.iter().map(|&(u, v, _)| (u, v)).collect();
    let train_graph = build_from_edges(g, train_edges)?;
    Ok(EdgeSplit {
        train,
        valid,
        test,
        train_graph,
    })
}

/// Pre-split datasets: the main graph file holds the training edges;
/// valid/test files are mapped through the training graph's token table.
pub fn provided_split(
    train_graph: Graph,
    valid_text: &str,
    test_text: &str,
) -> Result<EdgeSplit, RunError> {
    let parse = |text: &str, which: &'static str| -> Result<Vec<(usize, usize)>, RunError> {
        let mut out = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            let (a, b) = match (fields.next(), fields.next()) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    return Err(GraphError::Parse {
                        line: idx + 1,
                        msg: format!("{which}: expected `src dst`"),
                    }
                    .into())
                }
            };
            let resolve = |tok: &str| {
                train_graph.node_id(tok).ok_or_else(|| GraphError::Parse {
                    line: idx + 1,
                    msg: format!("{which}: token `{tok}` not present in the training graph"),
                })
            };
            out.push((resolve(a)?, resolve(b)?));
        }
        Ok(out)
    };
    let valid = parse(valid_text, "valid_edges")?;
    let test = parse(test_text, "test_edges")?;
    if valid.is_empty() || test.is_empty() {
        return Err(RunError::EmptySplit {
            edges: train_graph.num_edges(),
            fractions: (1.0, 0.0, 0.0),
        });
    }
    let train = train_graph
        .unique_edges()
        .iter()
        .map(|&(u, v, _)| (u, v))
        .collect();
    Ok(EdgeSplit {
        train,
        valid,
        test,
        train_graph,
    })
}

pub(super) fn build_from_edges(
    g: &Graph,
    edges: &[(usize, usize, Option<f64>)],
) -> Result<Graph, RunError> {
    Ok(Graph::build(
        g.tokens().to_vec(),
        edges,
        g.is_directed(),
        None,
    )?)
}
