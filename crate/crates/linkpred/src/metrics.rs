//! Ranking evaluation: Hits@K against a shared negative set, MRR
//! against per-positive candidate lists, and empirical AUC.
//!
//! Tie rules are fixed constants, not options: Hits@K compares strictly
//! against the K-th best negative, AUC uses a strict indicator (ties
//! earn nothing), and MRR uses mid-rank tie handling.

use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{DiffError, Mode, ParameterStore, Tape};
use crate::encoder::{compose_node_input, encode, EncoderConfig, NormalizedAdjacency};
use crate::graph::{Graph, NodeFeatures};
use crate::predictor::{score_pairs, PredictorConfig};
use crate::sampling::{sample_global, DegreeSampler, SampleError};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("{0} scores must not be empty")]
    EmptySide(&'static str),
    #[error("scores must be finite")]
    NonFinite,
    #[error("need at least {k} negatives for hits@{k}, have {have}")]
    NotEnoughNegatives { k: usize, have: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("exactly one negative layout must be set")]
    AmbiguousLayout,
    #[error("positive {index} has an empty candidate list")]
    EmptyCandidates { index: usize },
    #[error("ranking result has {pos} positives but {lists} candidate lists")]
    LayoutMismatch { pos: usize, lists: usize },
    #[error("wrong negative layout for this metric")]
    WrongLayout,
}

/// Scores of positives against either one shared negative set (Hits@K,
/// AUC) or one candidate list per positive (MRR).
#[derive(Debug, Clone)]
pub struct RankingResult<F> {
    pos_scores: Vec<F>,
    shared_neg_scores: Option<Vec<F>>,
    per_pos_neg_scores: Option<Vec<Vec<F>>>,
}

impl<F: Scalar> RankingResult<F> {
    pub fn with_shared(pos: Vec<F>, neg: Vec<F>) -> Result<Self, MetricError> {
        if pos.is_empty() {
            return Err(MetricError::EmptySide("positive"));
        }
        if neg.is_empty() {
            return Err(MetricError::EmptySide("negative"));
        }
        if pos.iter().chain(&neg).any(|s| !s.is_finite()) {
            return Err(MetricError::NonFinite);
        }
        Ok(RankingResult {
            pos_scores: pos,
            shared_neg_scores: Some(neg),
            per_pos_neg_scores: None,
        })
    }

    pub fn with_per_positive(pos: Vec<F>, lists: Vec<Vec<F>>) -> Result<Self, MetricError> {
        if pos.is_empty() {
            return Err(MetricError::EmptySide("positive"));
        }
        if pos.len() != lists.len() {
            return Err(MetricError::LayoutMismatch {
                pos: pos.len(),
                lists: lists.len(),
            });
        }
        for (index, list) in lists.iter().enumerate() {
            if list.is_empty() {
                return Err(MetricError::EmptyCandidates { index });
            }
        }
        if pos.iter().chain(lists.iter().flatten()).any(|s| !s.is_finite()) {
            return Err(MetricError::NonFinite);
        }
        Ok(RankingResult {
            pos_scores: pos,
            shared_neg_scores: None,
            per_pos_neg_scores: Some(lists),
        })
    }

    pub fn pos_scores(&self) -> &[F] {
        &self.pos_scores
    }

    pub fn shared_neg_scores(&self) -> Option<&[F]> {
        self.shared_neg_scores.as_deref()
    }
}

/// Fraction of positives scoring strictly above the k-th largest shared
/// negative score.
pub fn hits_at_k<F: Scalar>(r: &RankingResult<F>, k: usize) -> Result<f64, MetricError> {
    if k == 0 {
        return Err(MetricError::ZeroK);
    }
    let negs = r
        .shared_neg_scores
        .as_ref()
        .ok_or(MetricError::WrongLayout)?;
    if negs.len() < k {
        return Err(MetricError::NotEnoughNegatives { k, have: negs.len() });
    }
    let mut sorted = negs.clone();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("scores are finite"));
    let threshold = sorted[k - 1];
    let hits = r.pos_scores.iter().filter(|&&s| s > threshold).count();
    Ok(hits as f64 / r.pos_scores.len() as f64)
}

/// Mean reciprocal rank with mid-rank tie handling: rank = 1 + #(neg >
/// pos) + 0.5 * #(neg == pos).
pub fn mrr<F: Scalar>(r: &RankingResult<F>) -> Result<f64, MetricError> {
    let lists = r
        .per_pos_neg_scores
        .as_ref()
        .ok_or(MetricError::WrongLayout)?;
    let mut total = 0.0;
    for (pos, list) in r.pos_scores.iter().zip(lists) {
        let greater = list.iter().filter(|&&n| n > *pos).count();
        let equal = list.iter().filter(|&&n| n == *pos).count();
        let rank = 1.0 + greater as f64 + 0.5 * equal as f64;
        total += 1.0 / rank;
    }
    Ok(total / r.pos_scores.len() as f64)
}

/// Fraction of (positive, negative) pairs where the positive scores
/// strictly higher; ties earn nothing. Computed by sorting the negative
/// side and rank-counting in O(n log n).
pub fn empirical_auc<F: Scalar>(pos: &[F], neg: &[F]) -> Result<f64, MetricError> {
    if pos.is_empty() {
        return Err(MetricError::EmptySide("positive"));
    }
    if neg.is_empty() {
        return Err(MetricError::EmptySide("negative"));
    }
    if pos.iter().chain(neg).any(|s| !s.is_finite()) {
        return Err(MetricError::NonFinite);
    }
    let mut sorted = neg.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("scores are finite"));
    let mut wins = 0u64;
    for &p in pos {
        // Number of negatives strictly below p.
        wins += sorted.partition_point(|&n| n < p) as u64;
    }
    Ok(wins as f64 / (pos.len() as u64 * neg.len() as u64) as f64)
}

/// How evaluation negatives are generated and which metrics to report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSpec {
    /// Hits@K cutoffs to report (empty to skip).
    pub hits_k: Vec<usize>,
    /// Size of the shared negative set for Hits@K and AUC.
    pub shared_negatives: usize,
    /// Candidates per positive for MRR (0 to skip); generated by
    /// anchored corruption of each positive.
    pub mrr_negatives: usize,
    /// Seed for negative generation; fixed per run so metric curves are
    /// comparable across epochs.
    pub seed: u64,
}

/// Flat metric report: metric name -> value plus run metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    #[serde(flatten)]
    pub metrics: BTreeMap<String, f64>,
    pub seed: u64,
    pub config_hash: String,
    pub epoch: u64,
}

impl MetricReport {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).copied()
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Scores a frozen model over an evaluation split: encodes once in eval
/// mode, batch-scores positives plus generated negatives, and reports
/// the configured ranking metrics. Negative generation is seeded by
/// `spec.seed`, so repeated calls are bit-identical.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_model<F: Scalar>(
    g: &Graph,
    feats: Option<&NodeFeatures<F>>,
    store: &ParameterStore<F>,
    enc_cfg: &EncoderConfig,
    pred_cfg: &PredictorConfig,
    adj: &NormalizedAdjacency<F>,
    positives: &[(usize, usize)],
    spec: &EvalSpec,
    epoch: u64,
    config_hash: &str,
) -> Result<MetricReport, EvalError> {
    if positives.is_empty() {
        return Err(MetricError::EmptySide("positive").into());
    }
    let mut rng = StdRng::seed_from_u64(spec.seed);
    let mut tape = Tape::new();
    // Dropout is inactive in eval mode; the rng is never consulted.
    let mut unused_rng = StdRng::seed_from_u64(0);
    let x = compose_node_input(&mut tape, store, feats, enc_cfg)?;
    let h = encode(&mut tape, store, adj, x, enc_cfg, Mode::Eval, &mut unused_rng)?;

    let mut score = |tape: &mut Tape<F>, pairs: &[(usize, usize)]| -> Result<Vec<F>, EvalError> {
        let s = score_pairs(tape, store, h, pairs, pred_cfg, Mode::Eval, &mut unused_rng)?;
        Ok(tape.value(s)?.data().to_vec())
    };

    let pos_scores = score(&mut tape, positives)?;
    let mut metrics = BTreeMap::new();

    if spec.shared_negatives > 0 {
        let shared = sample_global(g, spec.shared_negatives, &mut rng)?;
        let neg_scores = score(&mut tape, &shared)?;
        metrics.insert(
            "auc".to_string(),
            empirical_auc(&pos_scores, &neg_scores)?,
        );
        let ranking = RankingResult::with_shared(pos_scores.clone(), neg_scores)?;
        for &k in &spec.hits_k {
            metrics.insert(format!("hits@{k}"), hits_at_k(&ranking, k)?);
        }
    }

    if spec.mrr_negatives > 0 {
        let corrupter = DegreeSampler::new(g, 0.0)?;
        let mut lists = Vec::with_capacity(positives.len());
        for &pos in positives {
            let candidates: Vec<(usize, usize)> = (0..spec.mrr_negatives)
                .map(|_| corrupter.sample_local(g, pos, &mut rng))
                .collect::<Result<_, _>>()?;
            lists.push(score(&mut tape, &candidates)?);
        }
        let ranking = RankingResult::with_per_positive(pos_scores, lists)?;
        metrics.insert("mrr".to_string(), mrr(&ranking)?);
    }

    Ok(MetricReport {
        metrics,
        seed: spec.seed,
        config_hash: config_hash.to_string(),
        epoch,
    })
}
