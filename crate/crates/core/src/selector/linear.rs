use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{ChainEncoding, QueryContext, Scorer};
use crate::dataset::{chain_tokens, AnnotatedTable, Vocabulary};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearConfig {
    pub epochs: usize,
    pub lr: f64,
    pub l2: f64,
}

impl Default for LinearConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            lr: 0.5,
            l2: 1e-4,
        }
    }
}

/// Logistic regression over five concatenated count-vector blocks:
/// intent string, column 1, column 2 (table vocabulary), subject types and
/// chain (knowledge-base vocabulary).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearScorer {
    pub tb: Vocabulary,
    pub kb: Vocabulary,
    pub weights: Vec<f64>,
    pub bias: f64,
}

type Sparse = Vec<(usize, f64)>;

fn push_counts(out: &mut Sparse, offset: usize, indices: impl Iterator<Item = u32>) {
    let start = out.len();
    for i in indices {
        out.push((offset + i as usize, 1.0));
    }
    out[start..].sort_unstable_by_key(|e| e.0);
    // merge duplicates into counts
    let mut merged: Sparse = Vec::with_capacity(out.len() - start);
    for &(i, v) in &out[start..] {
        match merged.last_mut() {
            Some(last) if last.0 == i => last.1 += v,
            _ => merged.push((i, v)),
        }
    }
    out.truncate(start);
    out.extend(merged);
}

impl LinearScorer {
    pub fn zeros(tb: Vocabulary, kb: Vocabulary) -> Self {
        let dim = 3 * tb.len() + 2 * kb.len();
        Self {
            tb,
            kb,
            weights: alloc::vec![0.0; dim],
            bias: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn features(&self, ctx: &QueryContext, chain: &ChainEncoding) -> Sparse {
        let (t, k) = (self.tb.len(), self.kb.len());
        let mut out = Sparse::new();
        let tb = |v: &[alloc::string::String]| self.tb.encode(v).into_iter();
        let kb = |v: &[alloc::string::String]| self.kb.encode(v).into_iter();
        push_counts(&mut out, 0, tb(&ctx.qis));
        push_counts(&mut out, t, tb(&ctx.cn1));
        push_counts(&mut out, 2 * t, tb(&ctx.cn2));
        push_counts(&mut out, 3 * t, kb(&ctx.set_tokens));
        push_counts(&mut out, 3 * t + k, kb(&chain.tokens));
        out
    }

    fn margin(&self, x: &Sparse) -> f64 {
        self.bias + x.iter().map(|&(i, v)| self.weights[i] * v).sum::<f64>()
    }

    /// Train on every labelled chain of every table (+1 positive, -1
    /// negative) by full-batch gradient descent on the L2-regularized
    /// logistic loss. Returns the model and the loss before each epoch.
    pub fn train(
        tables: &[AnnotatedTable],
        tb: Vocabulary,
        kb: Vocabulary,
        cfg: &LinearConfig,
    ) -> Result<(Self, Vec<f64>)> {
        let mut model = Self::zeros(tb, kb);
        let mut examples: Vec<(Sparse, f64)> = Vec::new();
        for t in tables {
            let ctx = QueryContext::from_table(t);
            for c in &t.chains {
                let enc = ChainEncoding { tokens: chain_tokens(&c.chain) };
                let y = if c.is_positive() { 1.0 } else { -1.0 };
                examples.push((model.features(&ctx, &enc), y));
            }
        }
        if examples.is_empty() {
            return Err(Error::Config("empty training set".into()));
        }
        let n = examples.len() as f64;
        let mut losses = Vec::with_capacity(cfg.epochs);
        let mut grad = alloc::vec![0.0; model.dim()];
        for _ in 0..cfg.epochs {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut grad_b = 0.0;
            let mut loss = 0.0;
            for (x, y) in &examples {
                let z = y * model.margin(x);
                loss += softplus(-z);
                // d/dz log(1 + e^-z) = -sigmoid(-z)
                let coef = -y * sigmoid(-z) / n;
                for &(i, v) in x {
                    grad[i] += coef * v;
                }
                grad_b += coef;
            }
            let reg: f64 = model.weights.iter().map(|w| w * w).sum();
            losses.push(loss / n + 0.5 * cfg.l2 * reg);
            for (w, g) in model.weights.iter_mut().zip(&grad) {
                *w -= cfg.lr * (g + cfg.l2 * *w);
            }
            model.bias -= cfg.lr * grad_b;
        }
        Ok((model, losses))
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        libm::log1p(libm::exp(x))
    }
}

impl Scorer for LinearScorer {
    fn score(&self, ctx: &QueryContext, chain: &ChainEncoding) -> f64 {
        self.margin(&self.features(ctx, chain))
    }
}
