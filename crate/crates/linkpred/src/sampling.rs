//! Negative samplers, the negative-sample sharing mechanism, and
//! random-walk data augmentation.
//!
//! Negatives are "assumed negative": a sampled pair is rejected only if
//! it is an observed edge of the training graph or a self-pair.
//! Collisions with true-but-unobserved links are accepted, matching
//! standard benchmark practice; filtering against held-out edges is an
//! opt-in extra.

use std::collections::BTreeMap;
use std::collections::HashSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("negative sampling failed after {attempts} rejection attempts")]
    Exhausted { attempts: usize },
    #[error("anchor node {0} is adjacent to every other node")]
    AnchorSaturated(usize),
    #[error("positive and negative lists differ in length ({pos} vs {neg})")]
    LengthMismatch { pos: usize, neg: usize },
    #[error("num_neg must be at least 1")]
    InvalidNumNeg,
    #[error("gamma weight {0} outside (0, 1]")]
    InvalidGamma(f64),
    #[error("{0} list must not be empty")]
    Empty(&'static str),
    #[error("walk length must be at least 1")]
    InvalidWalkLength,
    #[error("degree_power must be non-negative, got {0}")]
    InvalidDegreePower(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerStrategy {
    Global,
    Local,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub strategy: SamplerStrategy,
    pub num_neg: usize,
    /// Degree-power exponent for local sampling; 0 means uniform.
    pub degree_power: f64,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), SampleError> {
        if self.num_neg == 0 {
            return Err(SampleError::InvalidNumNeg);
        }
        if self.degree_power < 0.0 {
            return Err(SampleError::InvalidDegreePower(self.degree_power));
        }
        Ok(())
    }
}

/// One unit of pairwise training: an observed positive pair, an assumed
/// negative pair, and the margin weight of the positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingPair {
    pub pos: (usize, usize),
    pub neg: (usize, usize),
    pub gamma: f64,
}

const REJECTIONS_PER_DRAW: usize = 1000;

/// Draws `m` node-pairs uniformly from the complement of the observed
/// edge set (self-pairs excluded) by rejection; pairs may repeat.
pub fn sample_global(
    g: &Graph,
    m: usize,
    rng: &mut StdRng,
) -> Result<Vec<(usize, usize)>, SampleError> {
    sample_global_filtered(g, m, rng, None)
}

/// [`sample_global`] with an additional exclusion set (canonical
/// orientation for undirected graphs), used to optionally filter
/// held-out edges.
pub fn sample_global_filtered(
    g: &Graph,
    m: usize,
    rng: &mut StdRng,
    exclude: Option<&HashSet<(usize, usize)>>,
) -> Result<Vec<(usize, usize)>, SampleError> {
    let n = g.num_nodes();
    let budget = REJECTIONS_PER_DRAW.saturating_mul(m.max(1));
    let mut attempts = 0usize;
    let mut out = Vec::with_capacity(m);
    while out.len() < m {
        if attempts >= budget {
            return Err(SampleError::Exhausted { attempts });
        }
        attempts += 1;
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u == v || g.has_edge(u, v) {
            continue;
        }
        if let Some(ex) = exclude {
            if ex.contains(&canonical(g, (u, v))) {
                continue;
            }
        }
        out.push((u, v));
    }
    Ok(out)
}

pub(crate) fn canonical(g: &Graph, (u, v): (usize, usize)) -> (usize, usize) {
    if g.is_directed() || u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Degree-power endpoint distribution reused across local draws.
#[derive(Debug)]
pub struct DegreeSampler {
    weighted: Option<WeightedIndex<f64>>,
}

impl DegreeSampler {
    pub fn new(g: &Graph, degree_power: f64) -> Result<DegreeSampler, SampleError> {
        if degree_power < 0.0 {
            return Err(SampleError::InvalidDegreePower(degree_power));
        }
        if degree_power == 0.0 {
            return Ok(DegreeSampler { weighted: None });
        }
        let weights: Vec<f64> = g
            .degrees()
            .iter()
            .map(|&d| (d as f64).powf(degree_power))
            .collect();
        let weighted = WeightedIndex::new(&weights)
            .map_err(|_| SampleError::Exhausted { attempts: 0 })?;
        Ok(DegreeSampler {
            weighted: Some(weighted),
        })
    }

    fn draw(&self, n: usize, rng: &mut StdRng) -> usize {
        match &self.weighted {
            None => rng.random_range(0..n),
            Some(w) => w.sample(rng),
        }
    }

    /// Corrupts one endpoint of `pos`: the anchor is the first element
    /// for directed graphs and a fair coin picks it for undirected ones;
    /// the other endpoint is replaced by a node drawn with probability
    /// proportional to degree^beta, rejecting the anchor and its
    /// neighbors.
    pub fn sample_local(
        &self,
        g: &Graph,
        pos: (usize, usize),
        rng: &mut StdRng,
    ) -> Result<(usize, usize), SampleError> {
        let n = g.num_nodes();
        let anchor_is_first = g.is_directed() || rng.random::<bool>();
        let anchor = if anchor_is_first { pos.0 } else { pos.1 };
        if g.neighbors(anchor).len() + 1 >= n {
            return Err(SampleError::AnchorSaturated(anchor));
        }
        for attempt in 1..=REJECTIONS_PER_DRAW {
            let k = self.draw(n, rng);
            if k == anchor || g.has_edge(anchor, k) {
                if attempt == REJECTIONS_PER_DRAW {
                    return Err(SampleError::Exhausted { attempts: attempt });
                }
                continue;
            }
            return Ok(if anchor_is_first { (anchor, k) } else { (k, anchor) });
        }
        unreachable!("loop returns or errors")
    }
}

/// One local draw with a throwaway degree distribution; prefer
/// [`DegreeSampler`] when drawing repeatedly.
pub fn sample_local(
    g: &Graph,
    pos: (usize, usize),
    rng: &mut StdRng,
    degree_power: f64,
) -> Result<(usize, usize), SampleError> {
    DegreeSampler::new(g, degree_power)?.sample_local(g, pos, rng)
}

/// Expands `m` positives and `m` sampled negatives into `m * num_neg`
/// training pairs: the identity pairing plus `num_neg - 1` pairings
/// under fresh uniform permutations of the negative indices. Every
/// negative is used exactly `num_neg` times. `gammas`, when given, are
/// the per-positive margin weights (default 1).
pub fn share_negatives(
    pos: &[(usize, usize)],
    neg: &[(usize, usize)],
    num_neg: usize,
    gammas: Option<&[f64]>,
    rng: &mut StdRng,
) -> Result<Vec<TrainingPair>, SampleError> {
    if num_neg == 0 {
        return Err(SampleError::InvalidNumNeg);
    }
    if pos.len() != neg.len() {
        return Err(SampleError::LengthMismatch {
            pos: pos.len(),
            neg: neg.len(),
        });
    }
    if let Some(gs) = gammas {
        if gs.len() != pos.len() {
            return Err(SampleError::LengthMismatch {
                pos: pos.len(),
                neg: gs.len(),
            });
        }
        for &g in gs {
            if !(g > 0.0 && g <= 1.0) {
                return Err(SampleError::InvalidGamma(g));
            }
        }
    }
    let m = pos.len();
    let gamma_of = |i: usize| gammas.map_or(1.0, |gs| gs[i]);
    let mut out = Vec::with_capacity(m * num_neg);
    for i in 0..m {
        out.push(TrainingPair {
            pos: pos[i],
            neg: neg[i],
            gamma: gamma_of(i),
        });
    }
    let mut perm: Vec<usize> = (0..m).collect();
    for _ in 1..num_neg {
        perm.shuffle(rng);
        for i in 0..m {
            out.push(TrainingPair {
                pos: pos[i],
                neg: neg[perm[i]],
                gamma: gamma_of(i),
            });
        }
    }
    Ok(out)
}

/// Weighted positive pairs: the training edges (weight 1) plus
/// walk-discovered pairs weighted by `1/step`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedEdgeSet {
    pairs: Vec<((usize, usize), f64)>,
}

impl AugmentedEdgeSet {
    pub fn pairs(&self) -> &[((usize, usize), f64)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn weight_of(&self, pair: (usize, usize)) -> Option<f64> {
        self.pairs
            .binary_search_by(|(p, _)| p.cmp(&pair))
            .ok()
            .map(|i| self.pairs[i].1)
    }
}

/// Runs `walks_per_node` uniform random walks of `walk_length` steps
/// from every node; the pair (start, node reached at step `s`) joins the
/// augmented set with weight `1/s`. Observed edges keep weight 1,
/// duplicate discoveries keep the largest weight (earliest step), and
/// self-pairs are discarded.
pub fn walk_augment(
    g: &Graph,
    walk_length: usize,
    walks_per_node: usize,
    rng: &mut StdRng,
) -> Result<AugmentedEdgeSet, SampleError> {
    if walk_length == 0 {
        return Err(SampleError::InvalidWalkLength);
    }
    let mut weights: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (u, v, _) in g.unique_edges() {
        weights.insert((u, v), 1.0);
    }
    for start in 0..g.num_nodes() {
        for _ in 0..walks_per_node.max(1) {
            let walk = g
                .random_walk(start, walk_length, rng)
                .expect("start in range, length >= 1");
            for (idx, &node) in walk.iter().enumerate() {
                if node == start {
                    continue;
                }
                let step = idx + 1;
                let pair = canonical(g, (start, node));
                let w = 1.0 / step as f64;
                weights
                    .entry(pair)
                    .and_modify(|cur| *cur = cur.max(w))
                    .or_insert(w);
            }
        }
    }
    Ok(AugmentedEdgeSet {
        pairs: weights.into_iter().collect(),
    })
}
