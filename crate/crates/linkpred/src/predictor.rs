//! Link score predictors: turn a pair of encoder rows into one raw
//! scalar score. Scores are unbounded reals; the ranking losses and
//! metrics compare them directly, and the cross-entropy baseline applies
//! its own sigmoid.

use rand::rngs::StdRng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{DiffError, Mode, ParameterStore, Tape, TensorId};
use crate::encoder::glorot_uniform;
use crate::scalar::Scalar;
use crate::autodiff::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorKind {
    Dot,
    Bilinear,
    MlpHadamard,
    MlpConcat,
}

impl PredictorKind {
    /// Whether scores are symmetric in the pair by construction.
    pub fn is_commutative(self) -> bool {
        matches!(self, PredictorKind::Dot | PredictorKind::MlpHadamard)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorConfig {
    pub kind: PredictorKind,
    pub mlp_layers: usize,
    pub mlp_hidden: usize,
    pub dropout: f64,
}

impl PredictorConfig {
    pub fn validate(&self) -> Result<(), DiffError> {
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(DiffError::InvalidDropout { p: self.dropout });
        }
        if self.uses_mlp() {
            if self.mlp_layers == 0 {
                return Err(DiffError::Config("mlp predictor needs mlp_layers >= 1".into()));
            }
            if self.mlp_layers > 1 && self.mlp_hidden == 0 {
                return Err(DiffError::Config("mlp predictor needs mlp_hidden >= 1".into()));
            }
        }
        Ok(())
    }

    pub fn uses_mlp(&self) -> bool {
        matches!(self.kind, PredictorKind::MlpHadamard | PredictorKind::MlpConcat)
    }

    /// Warn when a commutative scorer is configured for a directed
    /// graph; kept as a warning, not an error.
    pub fn warn_if_commutative_on_directed(&self, directed: bool) {
        if directed && self.kind.is_commutative() {
            log::warn!(
                "predictor {:?} is commutative; a bilinear or concatenation scorer \
                 usually suits directed graphs better",
                self.kind
            );
        }
    }
}

const BILINEAR_PARAM: &str = "predictor.bilinear";

fn mlp_weight_name(layer: usize) -> String {
    format!("predictor.mlp{layer}.weight")
}

fn mlp_bias_name(layer: usize) -> String {
    format!("predictor.mlp{layer}.bias")
}

/// Creates the predictor's parameters sized to encoder output width.
pub fn init_predictor_params<F: Scalar>(
    store: &mut ParameterStore<F>,
    cfg: &PredictorConfig,
    encoder_dim: usize,
    rng: &mut StdRng,
) -> Result<(), DiffError> {
    match cfg.kind {
        PredictorKind::Dot => {}
        PredictorKind::Bilinear => {
            store.insert(BILINEAR_PARAM, glorot_uniform(encoder_dim, encoder_dim, rng))?;
        }
        PredictorKind::MlpHadamard | PredictorKind::MlpConcat => {
            let mut in_dim = if cfg.kind == PredictorKind::MlpConcat {
                2 * encoder_dim
            } else {
                encoder_dim
            };
            for layer in 0..cfg.mlp_layers {
                let out_dim = if layer + 1 == cfg.mlp_layers {
                    1
                } else {
                    cfg.mlp_hidden
                };
                store.insert(&mlp_weight_name(layer), glorot_uniform(in_dim, out_dim, rng))?;
                store.insert(&mlp_bias_name(layer), Tensor::zeros(1, out_dim))?;
                in_dim = out_dim;
            }
        }
    }
    Ok(())
}

fn mlp<F: Scalar>(
    tape: &mut Tape<F>,
    store: &ParameterStore<F>,
    mut x: TensorId,
    cfg: &PredictorConfig,
    mode: Mode,
    rng: &mut StdRng,
) -> Result<TensorId, DiffError> {
    for layer in 0..cfg.mlp_layers {
        let w = tape.param(store, &mlp_weight_name(layer))?;
        let b = tape.param(store, &mlp_bias_name(layer))?;
        x = tape.matmul(x, w)?;
        x = tape.add(x, b)?;
        if layer + 1 < cfg.mlp_layers {
            x = tape.relu(x)?;
            x = tape.dropout(x, cfg.dropout, mode, rng)?;
        }
    }
    Ok(x)
}

/// Scores every pair in one batch: gathers the paired encoder rows out
/// of `h` (`N x d`) and returns an `m x 1` column of raw scores.
pub fn score_pairs<F: Scalar>(
    tape: &mut Tape<F>,
    store: &ParameterStore<F>,
    h: TensorId,
    pairs: &[(usize, usize)],
    cfg: &PredictorConfig,
    mode: Mode,
    rng: &mut StdRng,
) -> Result<TensorId, DiffError> {
    let lefts: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let rights: Vec<usize> = pairs.iter().map(|p| p.1).collect();
    let hi = tape.gather_rows(h, &lefts)?;
    let hj = tape.gather_rows(h, &rights)?;
    match cfg.kind {
        PredictorKind::Dot => {
            let prod = tape.mul(hi, hj)?;
            tape.row_sum(prod)
        }
        PredictorKind::Bilinear => {
            let w = tape.param(store, BILINEAR_PARAM)?;
            let hw = tape.matmul(hi, w)?;
            let prod = tape.mul(hw, hj)?;
            tape.row_sum(prod)
        }
        PredictorKind::MlpHadamard => {
            let prod = tape.mul(hi, hj)?;
            mlp(tape, store, prod, cfg, mode, rng)
        }
        PredictorKind::MlpConcat => {
            let cat = tape.concat_cols(hi, hj)?;
            mlp(tape, store, cat, cfg, mode, rng)
        }
    }
}
