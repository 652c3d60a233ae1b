//! Chain selection: score every candidate chain against the query context
//! and keep the best one.
//!
//! Four scorers share the [`Scorer`] interface: a seeded random draw, token
//! Jaccard overlap, a logistic-regression model over bag-of-words blocks and
//! a siamese embedding model trained with a margin hinge loss.

mod embedding;
mod linear;
mod optim;

pub use embedding::{EmbeddingConfig, EmbeddingScorer, EncodedExample, FieldDims, FieldLimits};
pub use linear::{LinearConfig, LinearScorer};
pub use optim::Optimizer;

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::{chain_tokens, AnnotatedTable};
use crate::error::{Error, Result};
use crate::path::ChainPair;
use crate::text::{self, cosine, jaccard};

/// Normalized tokens of the query side: intent string, both column names
/// and subject entity types.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryContext {
    pub qis: Vec<String>,
    pub cn1: Vec<String>,
    pub cn2: Vec<String>,
    pub set_tokens: Vec<String>,
}

impl QueryContext {
    pub fn from_table(t: &AnnotatedTable) -> Self {
        Self {
            qis: t.qis.clone(),
            cn1: t.cn1.clone(),
            cn2: t.cn2.clone(),
            set_tokens: t.set_tokens.clone(),
        }
    }

    pub fn token_set(&self) -> BTreeSet<&str> {
        self.qis
            .iter()
            .chain(&self.cn1)
            .chain(&self.cn2)
            .chain(&self.set_tokens)
            .map(String::as_str)
            .collect()
    }
}

/// Tokens of one candidate chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainEncoding {
    pub tokens: Vec<String>,
}

impl ChainEncoding {
    pub fn new(chain: &ChainPair) -> Self {
        Self {
            tokens: chain_tokens(chain),
        }
    }
}

pub trait Scorer {
    fn score(&self, ctx: &QueryContext, chain: &ChainEncoding) -> f64;
}

/// Uniform draw in `[0, 1)` derived from the seed and both inputs, so the
/// same seed always scores the same pair identically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomScorer {
    pub seed: u64,
}

fn hash_tokens(mut h: u64, tokens: &[String]) -> u64 {
    for t in tokens {
        h = text::mix64(h ^ text::fnv1a(t.as_bytes()));
    }
    text::mix64(h ^ 0xff)
}

impl Scorer for RandomScorer {
    fn score(&self, ctx: &QueryContext, chain: &ChainEncoding) -> f64 {
        let mut h = text::mix64(self.seed);
        for field in [&ctx.qis, &ctx.cn1, &ctx.cn2, &ctx.set_tokens, &chain.tokens] {
            h = hash_tokens(h, field);
        }
        (h >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Jaccard overlap between all query tokens and the chain's tokens.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JacSimScorer;

impl Scorer for JacSimScorer {
    fn score(&self, ctx: &QueryContext, chain: &ChainEncoding) -> f64 {
        let chain_set: BTreeSet<&str> = chain.tokens.iter().map(String::as_str).collect();
        jaccard(&ctx.token_set(), &chain_set)
    }
}

/// Any of the available scorers, as stored in a model file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SelectorModel {
    Random(RandomScorer),
    JacSim(JacSimScorer),
    Linear(LinearScorer),
    Embedding(EmbeddingScorer),
}

impl Scorer for SelectorModel {
    fn score(&self, ctx: &QueryContext, chain: &ChainEncoding) -> f64 {
        match self {
            SelectorModel::Random(s) => s.score(ctx, chain),
            SelectorModel::JacSim(s) => s.score(ctx, chain),
            SelectorModel::Linear(s) => s.score(ctx, chain),
            SelectorModel::Embedding(s) => s.score(ctx, chain),
        }
    }
}

impl<S: Scorer + ?Sized> Scorer for &S {
    fn score(&self, ctx: &QueryContext, chain: &ChainEncoding) -> f64 {
        (**self).score(ctx, chain)
    }
}

/// Highest-scoring chain; ties go to the smallest canonical string. NaN
/// scores lose against everything.
pub fn select_top1<'c, S, I>(scorer: &S, ctx: &QueryContext, chains: I) -> Result<ChainPair>
where
    S: Scorer + ?Sized,
    I: IntoIterator<Item = &'c ChainPair>,
{
    let mut best: Option<(f64, &ChainPair)> = None;
    for chain in chains {
        let mut s = scorer.score(ctx, &ChainEncoding::new(chain));
        if s.is_nan() {
            s = f64::NEG_INFINITY;
        }
        best = match best {
            None => Some((s, chain)),
            Some((bs, bc)) => {
                if s > bs || (s == bs && chain < bc) {
                    Some((s, chain))
                } else {
                    Some((bs, bc))
                }
            }
        };
    }
    best.map(|(_, c)| c.clone()).ok_or(Error::EmptyCandidates)
}

/// `max(0, margin - cos(q, p) + cos(q, n))`.
pub fn hinge_loss(q: &[f64], p: &[f64], n: &[f64], margin: f64) -> f64 {
    (margin - cosine(q, p) + cosine(q, n)).max(0.0)
}
