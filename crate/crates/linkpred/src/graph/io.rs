//! Edge-list and node-feature file loading.
//!
//! Edge lists are whitespace-delimited `src dst [weight]` lines; `#`
//! starts a comment. Feature files are `token v1 v2 ... vdim` lines;
//! nodes missing from the file get zero vectors.

use std::fs;
use std::path::Path;

use super::{Graph, GraphError};
use crate::scalar::Scalar;

/// Loads a graph from an edge-list file. Tokens are mapped to dense ids
/// in first-seen order; undirected input is symmetrized and duplicate
/// edges are collapsed with weights summed.
pub fn load_edge_list(path: impl AsRef<Path>, directed: bool) -> Result<Graph, GraphError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_edge_list(&text, directed)
}

pub(crate) fn parse_edge_list(text: &str, directed: bool) -> Result<Graph, GraphError> {
    let mut tokens: Vec<String> = Vec::new();
    let mut ids = std::collections::HashMap::new();
    let mut intern = |t: &str, tokens: &mut Vec<String>| -> usize {
        *ids.entry(t.to_string()).or_insert_with(|| {
            tokens.push(t.to_string());
            tokens.len() - 1
        })
    };

    let mut edges = Vec::new();
    let mut lines = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(GraphError::Parse {
                line: line_no,
                msg: format!("expected `src dst [weight]`, found {} field(s)", fields.len()),
            });
        }
        let u = intern(fields[0], &mut tokens);
        let v = intern(fields[1], &mut tokens);
        let w = match fields.get(2) {
            None => None,
            Some(raw_w) => {
                let w: f64 = raw_w.parse().map_err(|_| GraphError::Parse {
                    line: line_no,
                    msg: format!("non-numeric weight `{raw_w}`"),
                })?;
                if w <= 0.0 {
                    return Err(GraphError::NonPositiveWeight {
                        line: line_no,
                        weight: w,
                    });
                }
                Some(w)
            }
        };
        edges.push((u, v, w));
        lines.push(line_no);
    }
    Graph::build(tokens, &edges, directed, Some(&lines))
}

/// Dense per-node feature matrix (`N x dim`, row-major).
#[derive(Debug, Clone)]
pub struct NodeFeatures<F> {
    dim: usize,
    values: Vec<F>,
}

impl<F: Scalar> NodeFeatures<F> {
    pub fn new(num_nodes: usize, dim: usize) -> Self {
        NodeFeatures {
            dim,
            values: vec![F::zero(); num_nodes * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_nodes(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.values.len() / self.dim
        }
    }

    pub fn row(&self, v: usize) -> &[F] {
        &self.values[v * self.dim..(v + 1) * self.dim]
    }

    pub fn row_mut(&mut self, v: usize) -> &mut [F] {
        &mut self.values[v * self.dim..(v + 1) * self.dim]
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }
}

/// Loads node features for `g`. Nodes absent from the file keep zero
/// vectors (a warning is emitted); tokens unknown to the graph are
/// skipped with a warning.
pub fn load_features<F: Scalar>(
    path: impl AsRef<Path>,
    g: &Graph,
) -> Result<NodeFeatures<F>, GraphError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_features(&text, g)
}

pub(crate) fn parse_features<F: Scalar>(
    text: &str,
    g: &Graph,
) -> Result<NodeFeatures<F>, GraphError> {
    let mut feats: Option<NodeFeatures<F>> = None;
    let mut seen = vec![false; g.num_nodes()];
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let token = fields.next().expect("non-empty line has a first field");
        let values: Vec<f64> = fields
            .map(|f| {
                f.parse::<f64>().map_err(|_| GraphError::Parse {
                    line: line_no,
                    msg: format!("non-numeric feature value `{f}`"),
                })
            })
            .collect::<Result<_, _>>()?;
        if values.is_empty() {
            return Err(GraphError::Parse {
                line: line_no,
                msg: "feature line has no values".into(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(GraphError::Parse {
                line: line_no,
                msg: "feature values must be finite".into(),
            });
        }
        let feats = feats.get_or_insert_with(|| NodeFeatures::new(g.num_nodes(), values.len()));
        if values.len() != feats.dim() {
            return Err(GraphError::Parse {
                line: line_no,
                msg: format!(
                    "feature width {} does not match first line's width {}",
                    values.len(),
                    feats.dim()
                ),
            });
        }
        match g.node_id(token) {
            Some(v) => {
                for (slot, value) in feats.row_mut(v).iter_mut().zip(&values) {
                    *slot = F::cast(*value);
                }
                seen[v] = true;
            }
            None => log::warn!("line {line_no}: token `{token}` not in graph, skipping"),
        }
    }
    let feats = feats.ok_or_else(|| GraphError::Parse {
        line: 0,
        msg: "feature file has no data lines".into(),
    })?;
    for (v, was_seen) in seen.iter().enumerate() {
        if !was_seen {
            log::warn!("node `{}` missing from feature file, using zeros", g.token(v));
        }
    }
    Ok(feats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_file_loads_with_three_edges() {
        let g = parse_edge_list("a b\nb c\na c\n", false).unwrap();
        assert_eq!(g.num_nodes(), 3);
        assert_eq!(g.num_edges(), 3);
        assert_eq!(g.degrees(), vec![2, 2, 2]);
        assert_eq!(g.node_id("a"), Some(0));
        assert_eq!(g.node_id("c"), Some(2));
    }

    #[test]
    fn duplicate_line_sums_into_weight_two() {
        let g = parse_edge_list("a b\nb c\na c\na b\n", false).unwrap();
        assert_eq!(g.num_edges(), 3);
        let edges = g.unique_edges();
        assert!(edges.contains(&(0, 1, Some(2.0))));
        assert!(edges.contains(&(1, 2, Some(1.0))));
    }

    #[test]
    fn single_field_line_is_a_parse_error_with_line_number() {
        let err = parse_edge_list("a b\na\n", false).unwrap_err();
        match err {
            GraphError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn non_numeric_weight_is_a_parse_error() {
        assert!(matches!(
            parse_edge_list("a b x\n", false),
            Err(GraphError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn zero_weight_is_rejected() {
        assert!(matches!(
            parse_edge_list("a b 0\n", false),
            Err(GraphError::NonPositiveWeight { line: 1, .. })
        ));
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let g = parse_edge_list("# header\n\na b 2.5\n", false).unwrap();
        assert_eq!(g.num_edges(), 1);
        assert_eq!(g.unique_edges(), vec![(0, 1, Some(2.5))]);
    }

    #[test]
    fn directed_input_is_not_symmetrized() {
        let g = parse_edge_list("a b\n", true).unwrap();
        assert!(g.has_edge(0, 1));
        assert!(!g.has_edge(1, 0));
    }

    #[test]
    fn features_fill_rows_and_default_missing_nodes_to_zero() {
        let g = parse_edge_list("a b\nb c\n", false).unwrap();
        let f: NodeFeatures<f64> = parse_features("a 1 2 3\nc 4 5 6\n", &g).unwrap();
        assert_eq!(f.dim(), 3);
        assert_eq!(f.row(0), &[1.0, 2.0, 3.0]);
        assert_eq!(f.row(1), &[0.0, 0.0, 0.0]);
        assert_eq!(f.row(2), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn feature_width_mismatch_is_an_error() {
        let g = parse_edge_list("a b\n", false).unwrap();
        let err = parse_features::<f64>("a 1 2\nb 1\n", &g).unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 2, .. }));
    }
}
