//! Node neighborhood encoders: GCN-style and SAGE-style message passing
//! over the whole graph, with node input composed from raw features, a
//! trainable embedding table, or their concatenation.
//!
//! Pair-level (subgraph) encoders are represented only by the
//! [`PairEncoder`] contract so predictors can consume either family; no
//! concrete implementation ships here.

use std::sync::Arc;

use rand::rngs::StdRng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{DiffError, Mode, ParameterStore, SparseMatrix, Tape, Tensor, TensorId};
use crate::graph::{Graph, NodeFeatures, PairSubgraph};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    Gcn,
    Sage,
    EmbeddingOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeInput {
    Features,
    Embedding,
    Concat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub kind: EncoderKind,
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub dropout: f64,
    pub node_input: NodeInput,
    pub embedding_dim: usize,
}

impl EncoderConfig {
    pub fn validate(&self, has_features: bool) -> Result<(), DiffError> {
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(DiffError::InvalidDropout { p: self.dropout });
        }
        if self.kind == EncoderKind::EmbeddingOnly {
            if self.num_layers != 0 {
                return Err(DiffError::Config(
                    "embedding_only encoder takes num_layers = 0".into(),
                ));
            }
        } else {
            if self.num_layers == 0 {
                return Err(DiffError::Config(
                    "gcn/sage encoders need num_layers >= 1".into(),
                ));
            }
            if self.hidden_dim == 0 {
                return Err(DiffError::Config("hidden_dim must be at least 1".into()));
            }
        }
        if self.node_input != NodeInput::Features && self.embedding_dim == 0 {
            return Err(DiffError::Config(
                "embedding_dim must be at least 1 when embeddings are used".into(),
            ));
        }
        if self.node_input != NodeInput::Embedding && !has_features {
            return Err(DiffError::Config(
                "node_input requires node features, but none were provided".into(),
            ));
        }
        Ok(())
    }

    /// Width of the composed node input.
    pub fn input_dim(&self, feature_dim: Option<usize>) -> Result<usize, DiffError> {
        let feat = || {
            feature_dim.ok_or_else(|| {
                DiffError::Config("node_input requires node features, but none were provided".into())
            })
        };
        Ok(match self.node_input {
            NodeInput::Features => feat()?,
            NodeInput::Embedding => self.embedding_dim,
            NodeInput::Concat => feat()? + self.embedding_dim,
        })
    }

    /// Width of the encoder output rows.
    pub fn output_dim(&self, feature_dim: Option<usize>) -> Result<usize, DiffError> {
        if self.kind == EncoderKind::EmbeddingOnly {
            self.input_dim(feature_dim)
        } else {
            Ok(self.hidden_dim)
        }
    }
}

/// Contract for encoders that turn a node-pair's joint neighborhood
/// subgraph into a single hidden vector. Kept as an interface so the
/// MLP predictor can score such outputs; no implementation ships.
pub trait PairEncoder<F: Scalar> {
    fn encode_pair(
        &self,
        tape: &mut Tape<F>,
        store: &ParameterStore<F>,
        subgraph: &PairSubgraph,
        endpoints: (usize, usize),
        mode: Mode,
        rng: &mut StdRng,
    ) -> Result<TensorId, DiffError>;

    /// Width of the vector produced by [`PairEncoder::encode_pair`].
    fn output_dim(&self) -> usize;
}

/// Message-passing operator derived from the graph: symmetric
/// `D^(-1/2) (A + I) D^(-1/2)` for GCN, row-stochastic neighbor mean for
/// SAGE (no self-loop; the self path has its own weight matrix).
#[derive(Debug, Clone)]
pub struct NormalizedAdjacency<F> {
    kind: EncoderKind,
    matrix: Arc<SparseMatrix<F>>,
}

impl<F: Scalar> NormalizedAdjacency<F> {
    pub fn new(g: &Graph, kind: EncoderKind) -> NormalizedAdjacency<F> {
        let n = g.num_nodes();
        let mut triplets = Vec::new();
        match kind {
            EncoderKind::Gcn => {
                // Self-loops added, then symmetric degree normalization.
                let degree_tilde: Vec<f64> =
                    g.degrees().iter().map(|&d| (d + 1) as f64).collect();
                for u in 0..n {
                    let du = degree_tilde[u];
                    triplets.push((u, u, F::cast(1.0 / du)));
                    for &v in g.neighbors(u) {
                        triplets.push((u, v, F::cast(1.0 / (du * degree_tilde[v]).sqrt())));
                    }
                }
            }
            EncoderKind::Sage => {
                for u in 0..n {
                    let nbrs = g.neighbors(u);
                    if nbrs.is_empty() {
                        continue;
                    }
                    let inv = F::cast(1.0 / nbrs.len() as f64);
                    for &v in nbrs {
                        triplets.push((u, v, inv));
                    }
                }
            }
            EncoderKind::EmbeddingOnly => {}
        }
        NormalizedAdjacency {
            kind,
            matrix: Arc::new(SparseMatrix::from_triplets(n, n, &triplets)),
        }
    }

    pub fn kind(&self) -> EncoderKind {
        self.kind
    }

    pub fn matrix(&self) -> &Arc<SparseMatrix<F>> {
        &self.matrix
    }
}

const EMBEDDING_PARAM: &str = "encoder.embedding";
const EMBEDDING_STD: f64 = 0.1;

fn layer_weight_name(layer: usize, suffix: &str) -> String {
    format!("encoder.layer{layer}.{suffix}")
}

/// Glorot-style uniform initialization in `[-b, b]` with
/// `b = sqrt(6 / (fan_in + fan_out))`.
pub(crate) fn glorot_uniform<F: Scalar>(
    rows: usize,
    cols: usize,
    rng: &mut StdRng,
) -> Tensor<F> {
    let bound = F::cast((6.0 / (rows + cols) as f64).sqrt());
    let data = (0..rows * cols)
        .map(|_| F::sample_uniform(rng, -bound, bound))
        .collect();
    Tensor::from_vec(rows, cols, data).expect("length matches shape")
}

/// Creates the embedding table and per-layer weights named by this
/// module. Draw order is fixed so initialization is reproducible.
pub fn init_encoder_params<F: Scalar>(
    store: &mut ParameterStore<F>,
    cfg: &EncoderConfig,
    num_nodes: usize,
    feature_dim: Option<usize>,
    rng: &mut StdRng,
) -> Result<(), DiffError> {
    if cfg.node_input != NodeInput::Features {
        let data = (0..num_nodes * cfg.embedding_dim)
            .map(|_| F::sample_normal(rng, F::cast(EMBEDDING_STD)))
            .collect();
        store.insert(
            EMBEDDING_PARAM,
            Tensor::from_vec(num_nodes, cfg.embedding_dim, data)?,
        )?;
    }
    let mut in_dim = cfg.input_dim(feature_dim)?;
    for layer in 0..cfg.num_layers {
        match cfg.kind {
            EncoderKind::Gcn => {
                store.insert(
                    &layer_weight_name(layer, "weight"),
                    glorot_uniform(in_dim, cfg.hidden_dim, rng),
                )?;
            }
            EncoderKind::Sage => {
                store.insert(
                    &layer_weight_name(layer, "self"),
                    glorot_uniform(in_dim, cfg.hidden_dim, rng),
                )?;
                store.insert(
                    &layer_weight_name(layer, "neigh"),
                    glorot_uniform(in_dim, cfg.hidden_dim, rng),
                )?;
            }
            EncoderKind::EmbeddingOnly => unreachable!("validated num_layers == 0"),
        }
        in_dim = cfg.hidden_dim;
    }
    Ok(())
}

/// Builds the `N x d0` node-input matrix on the tape: raw features, the
/// embedding table (differentiable), or their horizontal concatenation.
pub fn compose_node_input<F: Scalar>(
    tape: &mut Tape<F>,
    store: &ParameterStore<F>,
    feats: Option<&NodeFeatures<F>>,
    cfg: &EncoderConfig,
) -> Result<TensorId, DiffError> {
    let features = |tape: &mut Tape<F>| -> Result<TensorId, DiffError> {
        let f = feats.ok_or_else(|| {
            DiffError::Config("node_input requires node features, but none were provided".into())
        })?;
        tape.constant(Tensor::from_vec(
            f.num_nodes(),
            f.dim(),
            f.values().to_vec(),
        )?)
    };
    match cfg.node_input {
        NodeInput::Features => features(tape),
        NodeInput::Embedding => tape.param(store, EMBEDDING_PARAM),
        NodeInput::Concat => {
            let x = features(tape)?;
            let e = tape.param(store, EMBEDDING_PARAM)?;
            tape.concat_cols(x, e)
        }
    }
}

/// Runs the configured encoder over all nodes in one pass, producing the
/// `N x hidden` representation matrix. Dropout follows every layer
/// except the last in train mode; the final layer has no nonlinearity.
pub fn encode<F: Scalar>(
    tape: &mut Tape<F>,
    store: &ParameterStore<F>,
    adj: &NormalizedAdjacency<F>,
    input: TensorId,
    cfg: &EncoderConfig,
    mode: Mode,
    rng: &mut StdRng,
) -> Result<TensorId, DiffError> {
    let mut h = input;
    for layer in 0..cfg.num_layers {
        h = match cfg.kind {
            EncoderKind::Gcn => {
                let agg = tape.spmm(adj.matrix(), h)?;
                let w = tape.param(store, &layer_weight_name(layer, "weight"))?;
                tape.matmul(agg, w)?
            }
            EncoderKind::Sage => {
                let w_self = tape.param(store, &layer_weight_name(layer, "self"))?;
                let w_neigh = tape.param(store, &layer_weight_name(layer, "neigh"))?;
                let own = tape.matmul(h, w_self)?;
                let mean = tape.spmm(adj.matrix(), h)?;
                let nbr = tape.matmul(mean, w_neigh)?;
                tape.add(own, nbr)?
            }
            EncoderKind::EmbeddingOnly => h,
        };
        if layer + 1 < cfg.num_layers {
            h = tape.relu(h)?;
            h = tape.dropout(h, cfg.dropout, mode, rng)?;
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn embedding_cfg(dim: usize) -> EncoderConfig {
        EncoderConfig {
            kind: EncoderKind::EmbeddingOnly,
            num_layers: 0,
            hidden_dim: 0,
            dropout: 0.0,
            node_input: NodeInput::Embedding,
            embedding_dim: dim,
        }
    }

    fn gcn_cfg(layers: usize, hidden: usize) -> EncoderConfig {
        EncoderConfig {
            kind: EncoderKind::Gcn,
            num_layers: layers,
            hidden_dim: hidden,
            dropout: 0.0,
            node_input: NodeInput::Embedding,
            embedding_dim: hidden,
        }
    }

    fn features_of(rows: usize, cols: usize, values: &[f64]) -> NodeFeatures<f64> {
        let mut f = NodeFeatures::new(rows, cols);
        for r in 0..rows {
            f.row_mut(r).copy_from_slice(&values[r * cols..(r + 1) * cols]);
        }
        f
    }

    #[test]
    fn gcn_normalization_on_a_single_edge_gives_all_halves() {
        // Two nodes, one edge: degree-with-self-loop is 2 for both, so
        // every entry of the normalized operator is 1/2.
        let g = Graph::from_index_edges(2, &[(0, 1)], false).unwrap();
        let adj = NormalizedAdjacency::<f64>::new(&g, EncoderKind::Gcn);
        let x = Tensor::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let out = adj.matrix().mul_dense(&x).unwrap();
        assert_eq!(out.data(), &[0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn gcn_normalization_keeps_isolated_node_self_loop_at_one() {
        let g = Graph::from_index_edges(2, &[], false).unwrap();
        let adj = NormalizedAdjacency::<f64>::new(&g, EncoderKind::Gcn);
        let x = Tensor::from_vec(2, 1, vec![3.0, 5.0]).unwrap();
        let out = adj.matrix().mul_dense(&x).unwrap();
        assert_eq!(out.data(), &[3.0, 5.0]);
    }

    #[test]
    fn sage_mean_row_for_star_center_is_one_third_per_leaf() {
        let g = Graph::from_index_edges(4, &[(0, 1), (0, 2), (0, 3)], false).unwrap();
        let adj = NormalizedAdjacency::<f64>::new(&g, EncoderKind::Sage);
        let row: Vec<(usize, f64)> = adj.matrix().row_entries(0).collect();
        assert_eq!(row.len(), 3);
        for (_, v) in row {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn one_layer_gcn_with_identity_weight_averages_neighbors() {
        let g = Graph::from_index_edges(2, &[(0, 1)], false).unwrap();
        let mut store = ParameterStore::<f64>::new();
        store
            .insert(
                "encoder.layer0.weight",
                Tensor::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap(),
            )
            .unwrap();
        let cfg = EncoderConfig {
            node_input: NodeInput::Features,
            embedding_dim: 0,
            ..gcn_cfg(1, 2)
        };
        let feats = features_of(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let adj = NormalizedAdjacency::new(&g, EncoderKind::Gcn);
        let mut tape = Tape::new();
        let mut rng = StdRng::seed_from_u64(0);
        let x = compose_node_input(&mut tape, &store, Some(&feats), &cfg).unwrap();
        let h = encode(&mut tape, &store, &adj, x, &cfg, Mode::Eval, &mut rng).unwrap();
        assert_eq!(tape.value(h).unwrap().data(), &[0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn embedding_only_output_is_the_embedding_table() {
        let mut store = ParameterStore::<f64>::new();
        let table = Tensor::from_vec(3, 4, (0..12).map(f64::from).collect()).unwrap();
        store.insert(EMBEDDING_PARAM, table.clone()).unwrap();
        let g = Graph::from_index_edges(3, &[(0, 1)], false).unwrap();
        let cfg = embedding_cfg(4);
        let adj = NormalizedAdjacency::new(&g, EncoderKind::EmbeddingOnly);
        let mut tape = Tape::new();
        let mut rng = StdRng::seed_from_u64(0);
        let x = compose_node_input(&mut tape, &store, None, &cfg).unwrap();
        let h = encode(&mut tape, &store, &adj, x, &cfg, Mode::Eval, &mut rng).unwrap();
        assert_eq!(tape.value(h).unwrap(), &table);
    }

    #[test]
    fn concat_input_width_is_feature_plus_embedding_dim() {
        let mut store = ParameterStore::<f64>::new();
        store.insert(EMBEDDING_PARAM, Tensor::zeros(2, 2)).unwrap();
        let cfg = EncoderConfig {
            kind: EncoderKind::EmbeddingOnly,
            num_layers: 0,
            hidden_dim: 0,
            dropout: 0.0,
            node_input: NodeInput::Concat,
            embedding_dim: 2,
        };
        let feats = features_of(2, 3, &[1.0; 6]);
        let mut tape = Tape::new();
        let x = compose_node_input(&mut tape, &store, Some(&feats), &cfg).unwrap();
        assert_eq!(tape.shape(x).unwrap(), (2, 5));
        assert_eq!(cfg.input_dim(Some(3)).unwrap(), 5);
    }

    #[test]
    fn sage_with_zero_neighbor_weight_is_a_self_transform() {
        let g = Graph::from_index_edges(3, &[(0, 1), (1, 2)], false).unwrap();
        let mut store = ParameterStore::<f64>::new();
        store
            .insert(
                "encoder.layer0.self",
                Tensor::from_vec(2, 2, vec![2.0, 0.0, 0.0, 2.0]).unwrap(),
            )
            .unwrap();
        store.insert("encoder.layer0.neigh", Tensor::zeros(2, 2)).unwrap();
        let cfg = EncoderConfig {
            kind: EncoderKind::Sage,
            num_layers: 1,
            hidden_dim: 2,
            dropout: 0.0,
            node_input: NodeInput::Features,
            embedding_dim: 0,
        };
        let feats = features_of(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let adj = NormalizedAdjacency::new(&g, EncoderKind::Sage);
        let mut tape = Tape::new();
        let mut rng = StdRng::seed_from_u64(0);
        let x = compose_node_input(&mut tape, &store, Some(&feats), &cfg).unwrap();
        let h = encode(&mut tape, &store, &adj, x, &cfg, Mode::Eval, &mut rng).unwrap();
        assert_eq!(
            tape.value(h).unwrap().data(),
            &[2.0, 4.0, 6.0, 8.0, 10.0, 12.0]
        );
    }

    #[test]
    fn features_input_requires_features() {
        let cfg = EncoderConfig {
            kind: EncoderKind::EmbeddingOnly,
            num_layers: 0,
            hidden_dim: 0,
            dropout: 0.0,
            node_input: NodeInput::Features,
            embedding_dim: 0,
        };
        assert!(cfg.validate(false).is_err());
        let store = ParameterStore::<f64>::new();
        let mut tape = Tape::new();
        assert!(matches!(
            compose_node_input(&mut tape, &store, None, &cfg),
            Err(DiffError::Config(_))
        ));
    }

    #[test]
    fn eval_encode_is_deterministic_and_train_reproducible_per_seed() {
        let g = crate::testutil::random_graph(10, 0.3, 4);
        let cfg = EncoderConfig {
            dropout: 0.4,
            ..gcn_cfg(2, 4)
        };
        let mut store = ParameterStore::<f64>::new();
        let mut init_rng = StdRng::seed_from_u64(5);
        init_encoder_params(&mut store, &cfg, 10, None, &mut init_rng).unwrap();

        let run = |mode: Mode, seed: u64| {
            let adj = NormalizedAdjacency::new(&g, EncoderKind::Gcn);
            let mut tape = Tape::new();
            let mut rng = StdRng::seed_from_u64(seed);
            let x = compose_node_input(&mut tape, &store, None, &cfg).unwrap();
            let h = encode(&mut tape, &store, &adj, x, &cfg, mode, &mut rng).unwrap();
            tape.value(h).unwrap().clone()
        };
        assert_eq!(run(Mode::Eval, 1), run(Mode::Eval, 2));
        assert_eq!(run(Mode::Train, 3), run(Mode::Train, 3));
        assert_ne!(run(Mode::Train, 3), run(Mode::Train, 4));
    }

    /// Relabeling nodes by a permutation and permuting inputs yields
    /// output rows permuted the same way. Regular graphs with dyadic
    /// inputs keep every intermediate exactly representable, so the
    /// comparison is exact; arbitrary random graphs are checked to 1e-12.
    #[test]
    fn encode_is_permutation_equivariant() {
        use rand::seq::SliceRandom;
        use rand::Rng;
        for seed in 0..5u64 {
            let mut rng = StdRng::seed_from_u64(seed);
            let n = 10;

            // 3-regular circulant graph: i +- a (mod n) plus i + n/2.
            let a = 1 + (seed as usize % 4);
            let mut edges = Vec::new();
            for i in 0..n {
                edges.push((i, (i + a) % n));
                if i < n / 2 {
                    edges.push((i, i + n / 2));
                }
            }
            let g = Graph::from_index_edges(n, &edges, false).unwrap();
            assert!(g.degrees().iter().all(|&d| d == 3), "construction is 3-regular");

            let dyadic = |rng: &mut StdRng| f64::from(rng.random_range(-1024i32..1024)) / 1024.0;
            let cfg = EncoderConfig {
                node_input: NodeInput::Features,
                embedding_dim: 0,
                ..gcn_cfg(2, 3)
            };
            let dim_in = 3;
            let feat_vals: Vec<f64> = (0..n * dim_in).map(|_| dyadic(&mut rng)).collect();
            let w0: Vec<f64> = (0..dim_in * 3).map(|_| dyadic(&mut rng)).collect();
            let w1: Vec<f64> = (0..9).map(|_| dyadic(&mut rng)).collect();

            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);

            let encode_with = |g: &Graph, feats: &NodeFeatures<f64>| {
                let mut store = ParameterStore::<f64>::new();
                store
                    .insert(
                        "encoder.layer0.weight",
                        Tensor::from_vec(dim_in, 3, w0.clone()).unwrap(),
                    )
                    .unwrap();
                store
                    .insert(
                        "encoder.layer1.weight",
                        Tensor::from_vec(3, 3, w1.clone()).unwrap(),
                    )
                    .unwrap();
                let adj = NormalizedAdjacency::new(g, EncoderKind::Gcn);
                let mut tape = Tape::new();
                let mut drop_rng = StdRng::seed_from_u64(0);
                let x = compose_node_input(&mut tape, &store, Some(feats), &cfg).unwrap();
                let h = encode(&mut tape, &store, &adj, x, &cfg, Mode::Eval, &mut drop_rng)
                    .unwrap();
                tape.value(h).unwrap().clone()
            };

            let feats = features_of(n, dim_in, &feat_vals);
            let base = encode_with(&g, &feats);

            let perm_edges: Vec<(usize, usize)> =
                edges.iter().map(|&(u, v)| (perm[u], perm[v])).collect();
            let pg = Graph::from_index_edges(n, &perm_edges, false).unwrap();
            let mut perm_feat_vals = vec![0.0; n * dim_in];
            for u in 0..n {
                perm_feat_vals[perm[u] * dim_in..(perm[u] + 1) * dim_in]
                    .copy_from_slice(&feat_vals[u * dim_in..(u + 1) * dim_in]);
            }
            let pfeats = features_of(n, dim_in, &perm_feat_vals);
            let permuted = encode_with(&pg, &pfeats);

            for u in 0..n {
                assert_eq!(
                    base.row(u),
                    permuted.row(perm[u]),
                    "seed {seed}: row {u} must map exactly to row {}",
                    perm[u]
                );
            }
        }
    }
}
