//! Pairwise ranking losses and the cross-entropy classification
//! baseline.
//!
//! All three ranking surrogates depend only on per-pair score
//! differences `s+ - s-`; the reduction over pairs is the mean, which
//! decouples the learning rate from batch size. L2 regularization is
//! applied by the optimizer as weight decay, not here.

use serde::{Deserialize, Serialize};

use crate::autodiff::{DiffError, Tape, TensorId, Tensor};
use crate::scalar::Scalar;

pub use crate::metrics::empirical_auc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Square surrogate `(1 - s+ + s-)^2`: pushes the margin to exactly 1.
    Auc,
    /// Squared hinge `max(0, 1 - s+ + s-)^2`: only asks for margin >= 1.
    HingeAuc,
    /// `gamma * max(0, gamma - s+ + s-)^2` with per-pair margins.
    WeightedHingeAuc,
    /// `-log sigma(s+) - log(1 - sigma(s-))`, numerically stabilized.
    CrossEntropy,
}

impl LossKind {
    pub fn is_pairwise(self) -> bool {
        self != LossKind::CrossEntropy
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub kind: LossKind,
    /// L2 weight; handed to the optimizer as weight decay.
    pub lambda: f64,
}

impl LossConfig {
    pub fn validate(&self) -> Result<(), DiffError> {
        if self.lambda < 0.0 {
            return Err(DiffError::InvalidWeightDecay(self.lambda));
        }
        Ok(())
    }
}

fn check_columns<F: Scalar>(
    tape: &Tape<F>,
    pos: TensorId,
    neg: TensorId,
) -> Result<usize, DiffError> {
    let (pr, pc) = tape.shape(pos)?;
    let (nr, nc) = tape.shape(neg)?;
    if pc != 1 || nc != 1 || pr != nr {
        return Err(DiffError::ShapeMismatch {
            op: "pairwise_loss",
            lhs: (pr, pc),
            rhs: (nr, nc),
        });
    }
    Ok(pr)
}

/// Mean ranking loss over row-aligned positive/negative score columns.
/// `gammas` are the per-pair margin weights; they are required for
/// [`LossKind::WeightedHingeAuc`] and ignored by the fixed-margin kinds.
pub fn pairwise_loss<F: Scalar>(
    tape: &mut Tape<F>,
    pos_scores: TensorId,
    neg_scores: TensorId,
    gammas: Option<&[F]>,
    kind: LossKind,
) -> Result<TensorId, DiffError> {
    let rows = check_columns(tape, pos_scores, neg_scores)?;
    if kind == LossKind::CrossEntropy {
        return cross_entropy_loss(tape, pos_scores, neg_scores);
    }
    // s- - s+ per pair.
    let diff = tape.sub(neg_scores, pos_scores)?;
    match kind {
        LossKind::Auc => {
            let margin = tape.add_scalar(diff, F::one())?;
            let sq = tape.square(margin)?;
            tape.mean_all(sq)
        }
        LossKind::HingeAuc => {
            let margin = tape.add_scalar(diff, F::one())?;
            let clipped = tape.relu(margin)?;
            let sq = tape.square(clipped)?;
            tape.mean_all(sq)
        }
        LossKind::WeightedHingeAuc => {
            let gammas = gammas.ok_or_else(|| {
                DiffError::Config("weighted_hinge_auc requires per-pair gamma weights".into())
            })?;
            if gammas.len() != rows {
                return Err(DiffError::ShapeMismatch {
                    op: "pairwise_loss gammas",
                    lhs: (rows, 1),
                    rhs: (gammas.len(), 1),
                });
            }
            for &g in gammas {
                if !(g > F::zero() && g <= F::one()) {
                    return Err(DiffError::InvalidGamma(g.as_f64()));
                }
            }
            let gamma = tape.constant(Tensor::column_vector(gammas))?;
            let margin = tape.add(diff, gamma)?;
            let clipped = tape.relu(margin)?;
            let sq = tape.square(clipped)?;
            let weighted = tape.mul(gamma, sq)?;
            tape.mean_all(weighted)
        }
        LossKind::CrossEntropy => unreachable!("dispatched above"),
    }
}

/// Classification baseline on raw scores (logits): mean of
/// `-log sigma(s+)` over positives plus mean of `-log(1 - sigma(s-))`
/// over negatives, both via the overflow-free softplus form.
pub fn cross_entropy_loss<F: Scalar>(
    tape: &mut Tape<F>,
    pos_scores: TensorId,
    neg_scores: TensorId,
) -> Result<TensorId, DiffError> {
    // -log sigma(s) = softplus(-s); -log(1 - sigma(s)) = softplus(s).
    let neg_pos = tape.scale(pos_scores, -F::one())?;
    let pos_term = tape.softplus(neg_pos)?;
    let pos_mean = tape.mean_all(pos_term)?;
    let neg_term = tape.softplus(neg_scores)?;
    let neg_mean = tape.mean_all(neg_term)?;
    tape.add(pos_mean, neg_mean)
}
