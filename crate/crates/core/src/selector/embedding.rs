//! Siamese matching model with mean-of-embeddings field encoders.
//!
//! Each query field is encoded as a linear projection of the mean of its
//! token embeddings; the projections are concatenated into the query vector
//! `q` (`qis + 2 * cn + set` wide) which must match the width of the chain
//! vector `c`. The score is `cos(q, c)`. Training minimizes
//! `sum max(0, margin - cos(q, p) + cos(q, n)) + lambda * |W|^2` over every
//! positive `p` and sampled negative `n` of each table.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::optim::{Optimizer, Stepper};
use super::{ChainEncoding, QueryContext, Scorer};
use crate::dataset::{chain_tokens, AnnotatedTable, Vocabulary};
use crate::error::{Error, Result};
use crate::text::{cosine, dot, norm};

/// Output width of each encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldDims {
    pub qis: usize,
    pub cn: usize,
    pub set: usize,
    pub chain: usize,
}

impl Default for FieldDims {
    fn default() -> Self {
        Self { qis: 100, cn: 25, set: 100, chain: 250 }
    }
}

impl FieldDims {
    pub fn query_width(&self) -> usize {
        self.qis + 2 * self.cn + self.set
    }
}

/// Maximum number of tokens read from each field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldLimits {
    pub qis: usize,
    pub cn: usize,
    pub set: usize,
    pub chain: usize,
}

impl Default for FieldLimits {
    fn default() -> Self {
        Self { qis: 100, cn: 10, set: 100, chain: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub dims: FieldDims,
    pub limits: FieldLimits,
    pub embed_dim: usize,
    pub margin: f64,
    pub lambda: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub optimizer: Optimizer,
    /// Negatives paired with each positive per step.
    pub negatives: usize,
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            dims: FieldDims::default(),
            limits: FieldLimits::default(),
            embed_dim: 100,
            margin: 0.25,
            lambda: 0.000005,
            lr: 0.00001,
            batch_size: 250,
            epochs: 50,
            optimizer: Optimizer::Sgd,
            negatives: 9,
            init_scale: 0.1,
            seed: 0,
        }
    }
}

/// One table's query and chains as vocabulary indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EncodedExample {
    pub qis: Vec<u32>,
    pub cn1: Vec<u32>,
    pub cn2: Vec<u32>,
    pub set: Vec<u32>,
    pub positives: Vec<Vec<u32>>,
    pub negatives: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, Copy)]
struct Layout {
    tb_emb: usize,
    kb_emb: usize,
    w_qis: usize,
    w_cn: usize,
    w_set: usize,
    w_chain: usize,
    total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingScorer {
    pub tb: Vocabulary,
    pub kb: Vocabulary,
    pub dims: FieldDims,
    pub limits: FieldLimits,
    pub embed_dim: usize,
    /// Flat parameters: table embeddings, KB embeddings, then the four
    /// projections (row-major, `out x embed_dim`).
    pub params: Vec<f64>,
}

struct QueryCache {
    q: Vec<f64>,
    means: [Vec<f64>; 4],
}

impl EmbeddingScorer {
    /// Random initialization. Row 0 of both embedding tables (OOV) is zero
    /// and never updated.
    pub fn init(tb: Vocabulary, kb: Vocabulary, cfg: &EmbeddingConfig) -> Result<Self> {
        if cfg.dims.query_width() != cfg.dims.chain {
            return Err(Error::Config(alloc::format!(
                "query width {} must equal chain width {}",
                cfg.dims.query_width(),
                cfg.dims.chain
            )));
        }
        if cfg.embed_dim == 0 || cfg.dims.chain == 0 {
            return Err(Error::Config("embedding dimensions must be positive".into()));
        }
        let mut model = Self {
            tb,
            kb,
            dims: cfg.dims,
            limits: cfg.limits,
            embed_dim: cfg.embed_dim,
            params: Vec::new(),
        };
        let layout = model.layout();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let e = cfg.embed_dim;
        let proj_scale = libm::sqrt(3.0 / e as f64);
        model.params = (0..layout.total)
            .map(|i| {
                let scale = if i < layout.w_qis { cfg.init_scale } else { proj_scale };
                rng.gen_range(-scale..scale)
            })
            .collect();
        model.params[layout.tb_emb..layout.tb_emb + e].fill(0.0);
        model.params[layout.kb_emb..layout.kb_emb + e].fill(0.0);
        Ok(model)
    }

    fn layout(&self) -> Layout {
        let e = self.embed_dim;
        let tb_emb = 0;
        let kb_emb = tb_emb + self.tb.len() * e;
        let w_qis = kb_emb + self.kb.len() * e;
        let w_cn = w_qis + self.dims.qis * e;
        let w_set = w_cn + self.dims.cn * e;
        let w_chain = w_set + self.dims.set * e;
        let total = w_chain + self.dims.chain * e;
        Layout { tb_emb, kb_emb, w_qis, w_cn, w_set, w_chain, total }
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn encode_query(&self, ctx: &QueryContext) -> EncodedExample {
        let l = &self.limits;
        let take = |v: &[alloc::string::String], n: usize| v[..v.len().min(n)].to_vec();
        EncodedExample {
            qis: self.tb.encode(&take(&ctx.qis, l.qis)),
            cn1: self.tb.encode(&take(&ctx.cn1, l.cn)),
            cn2: self.tb.encode(&take(&ctx.cn2, l.cn)),
            set: self.kb.encode(&take(&ctx.set_tokens, l.set)),
            positives: Vec::new(),
            negatives: Vec::new(),
        }
    }

    pub fn encode_chain(&self, chain: &ChainEncoding) -> Vec<u32> {
        let n = chain.tokens.len().min(self.limits.chain);
        self.kb.encode(&chain.tokens[..n])
    }

    /// Training view of a table: every positive and every negative chain.
    pub fn encode_table(&self, t: &AnnotatedTable) -> EncodedExample {
        let mut ex = self.encode_query(&QueryContext::from_table(t));
        for c in &t.chains {
            let enc = self.encode_chain(&ChainEncoding { tokens: chain_tokens(&c.chain) });
            if c.is_positive() {
                ex.positives.push(enc);
            } else {
                ex.negatives.push(enc);
            }
        }
        ex
    }

    fn mean_embedding(&self, table: usize, idxs: &[u32]) -> Vec<f64> {
        let e = self.embed_dim;
        let mut m = alloc::vec![0.0; e];
        if idxs.is_empty() {
            return m;
        }
        for &i in idxs {
            let row = &self.params[table + i as usize * e..table + (i as usize + 1) * e];
            for (a, b) in m.iter_mut().zip(row) {
                *a += b;
            }
        }
        let inv = 1.0 / idxs.len() as f64;
        m.iter_mut().for_each(|x| *x *= inv);
        m
    }

    fn project(&self, w: usize, rows: usize, m: &[f64], out: &mut Vec<f64>) {
        let e = self.embed_dim;
        for r in 0..rows {
            out.push(dot(&self.params[w + r * e..w + (r + 1) * e], m));
        }
    }

    fn query_forward(&self, ex: &EncodedExample) -> QueryCache {
        let lay = self.layout();
        let means = [
            self.mean_embedding(lay.tb_emb, &ex.qis),
            self.mean_embedding(lay.tb_emb, &ex.cn1),
            self.mean_embedding(lay.tb_emb, &ex.cn2),
            self.mean_embedding(lay.kb_emb, &ex.set),
        ];
        let mut q = Vec::with_capacity(self.dims.query_width());
        self.project(lay.w_qis, self.dims.qis, &means[0], &mut q);
        self.project(lay.w_cn, self.dims.cn, &means[1], &mut q);
        self.project(lay.w_cn, self.dims.cn, &means[2], &mut q);
        self.project(lay.w_set, self.dims.set, &means[3], &mut q);
        QueryCache { q, means }
    }

    fn chain_forward(&self, idxs: &[u32]) -> (Vec<f64>, Vec<f64>) {
        let lay = self.layout();
        let m = self.mean_embedding(lay.kb_emb, idxs);
        let mut c = Vec::with_capacity(self.dims.chain);
        self.project(lay.w_chain, self.dims.chain, &m, &mut c);
        (c, m)
    }

    /// Query vector for a context.
    pub fn query_vector(&self, ctx: &QueryContext) -> Vec<f64> {
        self.query_forward(&self.encode_query(ctx)).q
    }

    pub fn chain_vector(&self, chain: &ChainEncoding) -> Vec<f64> {
        self.chain_forward(&self.encode_chain(chain)).0
    }

    #[allow(clippy::too_many_arguments)]
    fn backprop_field(
        &self,
        grad: &mut [f64],
        w: usize,
        rows: usize,
        emb: usize,
        idxs: &[u32],
        mean: &[f64],
        g_out: &[f64],
    ) {
        let e = self.embed_dim;
        for (r, &g) in g_out.iter().enumerate().take(rows) {
            if g == 0.0 {
                continue;
            }
            for j in 0..e {
                grad[w + r * e + j] += g * mean[j];
            }
        }
        if idxs.is_empty() {
            return;
        }
        let mut dm = alloc::vec![0.0; e];
        for (r, &g) in g_out.iter().enumerate().take(rows) {
            if g == 0.0 {
                continue;
            }
            let row = &self.params[w + r * e..w + (r + 1) * e];
            for j in 0..e {
                dm[j] += row[j] * g;
            }
        }
        let inv = 1.0 / idxs.len() as f64;
        for &i in idxs {
            if i == 0 {
                continue;
            }
            let base = emb + i as usize * e;
            for j in 0..e {
                grad[base + j] += dm[j] * inv;
            }
        }
    }

    /// Mean hinge objective over `examples` plus `lambda * |W|^2`, and its
    /// gradient with respect to [`Self::params`]. Every positive is paired
    /// with every negative of its example.
    pub fn objective_and_gradient(&self, examples: &[EncodedExample], margin: f64, lambda: f64) -> (f64, Vec<f64>) {
        let lay = self.layout();
        let mut grad = alloc::vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let scale = if examples.is_empty() { 0.0 } else { 1.0 / examples.len() as f64 };

        for ex in examples {
            let cache = self.query_forward(ex);
            let q = &cache.q;
            let pos: Vec<(Vec<f64>, Vec<f64>)> = ex.positives.iter().map(|p| self.chain_forward(p)).collect();
            let neg: Vec<(Vec<f64>, Vec<f64>)> = ex.negatives.iter().map(|n| self.chain_forward(n)).collect();
            let pos_cos: Vec<(f64, Vec<f64>, Vec<f64>)> = pos.iter().map(|(c, _)| cos_grad(q, c)).collect();
            let neg_cos: Vec<(f64, Vec<f64>, Vec<f64>)> = neg.iter().map(|(c, _)| cos_grad(q, c)).collect();

            let mut gq = alloc::vec![0.0; q.len()];
            let mut gpos = alloc::vec![0.0; pos.len()];
            let mut gneg = alloc::vec![0.0; neg.len()];
            for (pi, (sp, _, _)) in pos_cos.iter().enumerate() {
                for (ni, (sn, _, _)) in neg_cos.iter().enumerate() {
                    let h = margin - sp + sn;
                    if h > 0.0 {
                        loss += h * scale;
                        gpos[pi] -= scale;
                        gneg[ni] += scale;
                    }
                }
            }
            // d cos / dq and d cos / dc, weighted by how often each term is active.
            for (w, (_, dq, _)) in gpos.iter().zip(&pos_cos).chain(gneg.iter().zip(&neg_cos)) {
                if *w != 0.0 {
                    for (g, d) in gq.iter_mut().zip(dq) {
                        *g += w * d;
                    }
                }
            }
            for ((w, (_, _, dc)), (_, mean), idxs) in gpos
                .iter()
                .zip(&pos_cos)
                .zip(&pos)
                .zip(&ex.positives)
                .map(|((a, b), c)| (a, b, c))
                .chain(
                    gneg.iter()
                        .zip(&neg_cos)
                        .zip(&neg)
                        .zip(&ex.negatives)
                        .map(|((a, b), c)| (a, b, c)),
                )
            {
                if *w != 0.0 {
                    let g_out: Vec<f64> = dc.iter().map(|d| w * d).collect();
                    self.backprop_field(&mut grad, lay.w_chain, self.dims.chain, lay.kb_emb, idxs, mean, &g_out);
                }
            }

            let d = &self.dims;
            let (g_qis, rest) = gq.split_at(d.qis);
            let (g_cn1, rest) = rest.split_at(d.cn);
            let (g_cn2, g_set) = rest.split_at(d.cn);
            self.backprop_field(&mut grad, lay.w_qis, d.qis, lay.tb_emb, &ex.qis, &cache.means[0], g_qis);
            self.backprop_field(&mut grad, lay.w_cn, d.cn, lay.tb_emb, &ex.cn1, &cache.means[1], g_cn1);
            self.backprop_field(&mut grad, lay.w_cn, d.cn, lay.tb_emb, &ex.cn2, &cache.means[2], g_cn2);
            self.backprop_field(&mut grad, lay.w_set, d.set, lay.kb_emb, &ex.set, &cache.means[3], g_set);
        }

        if lambda != 0.0 {
            for (g, p) in grad.iter_mut().zip(&self.params) {
                loss += lambda * p * p;
                *g += 2.0 * lambda * p;
            }
        }
        (loss, grad)
    }

    /// Mini-batch training. Tables with more negatives than
    /// `cfg.negatives` get a fresh seeded sample every epoch. Returns the
    /// model and the mean batch objective of each epoch.
    pub fn train(
        tables: &[AnnotatedTable],
        tb: Vocabulary,
        kb: Vocabulary,
        cfg: &EmbeddingConfig,
    ) -> Result<(Self, Vec<f64>)> {
        let mut model = Self::init(tb, kb, cfg)?;
        let examples: Vec<EncodedExample> = tables
            .iter()
            .map(|t| model.encode_table(t))
            .filter(|ex| !ex.positives.is_empty() && !ex.negatives.is_empty())
            .collect();
        if examples.is_empty() {
            return Err(Error::Config("no training table has both positive and negative chains".into()));
        }
        if cfg.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_0f7a_b1e5);
        let mut stepper = Stepper::new(cfg.optimizer, cfg.lr, model.params.len());
        let lay = model.layout();
        let e = model.embed_dim;
        let mut history = Vec::with_capacity(cfg.epochs);
        let mut order: Vec<usize> = (0..examples.len()).collect();

        for _ in 0..cfg.epochs {
            order.shuffle(&mut rng);
            let mut epoch_loss = 0.0;
            let mut batches = 0usize;
            for chunk in order.chunks(cfg.batch_size) {
                let batch: Vec<EncodedExample> = chunk
                    .iter()
                    .map(|&i| {
                        let ex = &examples[i];
                        if ex.negatives.len() <= cfg.negatives {
                            return ex.clone();
                        }
                        let mut picked = ex.clone();
                        picked.negatives = ex
                            .negatives
                            .choose_multiple(&mut rng, cfg.negatives)
                            .cloned()
                            .collect();
                        picked
                    })
                    .collect();
                let (loss, mut grad) = model.objective_and_gradient(&batch, cfg.margin, cfg.lambda);
                grad[lay.tb_emb..lay.tb_emb + e].fill(0.0);
                grad[lay.kb_emb..lay.kb_emb + e].fill(0.0);
                stepper.step(&mut model.params, &grad);
                epoch_loss += loss;
                batches += 1;
            }
            history.push(epoch_loss / batches as f64);
        }
        Ok((model, history))
    }
}

/// `cos(a, b)` with its gradients; zero vectors give zero everywhere.
fn cos_grad(a: &[f64], b: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return (0.0, alloc::vec![0.0; a.len()], alloc::vec![0.0; b.len()]);
    }
    let s = dot(a, b) / (na * nb);
    let ga = a
        .iter()
        .zip(b)
        .map(|(x, y)| y / (na * nb) - s * x / (na * na))
        .collect();
    let gb = a
        .iter()
        .zip(b)
        .map(|(x, y)| x / (na * nb) - s * y / (nb * nb))
        .collect();
    (s, ga, gb)
}

impl Scorer for EmbeddingScorer {
    fn score(&self, ctx: &QueryContext, chain: &ChainEncoding) -> f64 {
        cosine(&self.query_vector(ctx), &self.chain_vector(chain))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::VocabKind;
    use alloc::string::{String, ToString};

    fn vocab(kind: VocabKind, tokens: &[&str]) -> Vocabulary {
        Vocabulary::from_tokens(kind, tokens.iter().map(|t| t.to_string()).collect())
    }

    fn small_cfg() -> EmbeddingConfig {
        EmbeddingConfig {
            dims: FieldDims { qis: 3, cn: 2, set: 3, chain: 10 },
            embed_dim: 4,
            ..Default::default()
        }
    }

    fn model() -> EmbeddingScorer {
        EmbeddingScorer::init(
            vocab(VocabKind::Table, &["cast", "actor", "role"]),
            vocab(VocabKind::Kb, &["tv", "actor", "film", "character"]),
            &small_cfg(),
        )
        .unwrap()
    }

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn dimension_contract_is_checked() {
        let cfg = EmbeddingConfig {
            dims: FieldDims { qis: 3, cn: 2, set: 3, chain: 9 },
            ..small_cfg()
        };
        let err = EmbeddingScorer::init(vocab(VocabKind::Table, &[]), vocab(VocabKind::Kb, &[]), &cfg);
        assert!(matches!(err, Err(Error::Config(_))));
        let defaults = FieldDims::default();
        assert_eq!(defaults.query_width(), defaults.chain);
    }

    #[test]
    fn all_oov_chain_scores_zero() {
        let m = model();
        let ctx = QueryContext { qis: s(&["cast"]), ..Default::default() };
        let chain = ChainEncoding { tokens: s(&["unknown", "tokens"]) };
        assert_eq!(m.score(&ctx, &chain), 0.0);
    }

    #[test]
    fn scores_are_cosines() {
        let m = model();
        let ctx = QueryContext { qis: s(&["cast"]), cn1: s(&["actor"]), cn2: s(&["role"]), set_tokens: s(&["tv"]) };
        for chain in [s(&["tv", "actor"]), s(&["film"]), s(&["character", "tv", "tv"])] {
            let v = m.score(&ctx, &ChainEncoding { tokens: chain });
            assert!((-1.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut m = model();
        // Give the OOV-free rows some spread so the hinge is active.
        let ex = EncodedExample {
            qis: alloc::vec![1, 2],
            cn1: alloc::vec![2],
            cn2: alloc::vec![3, 0],
            set: alloc::vec![1, 4],
            positives: alloc::vec![alloc::vec![1, 2], alloc::vec![3]],
            negatives: alloc::vec![alloc::vec![4, 1], alloc::vec![2, 2, 3]],
        };
        let (_, grad) = m.objective_and_gradient(core::slice::from_ref(&ex), 2.5, 0.01);
        let h = 1e-6;
        for i in 0..m.params.len() {
            let orig = m.params[i];
            m.params[i] = orig + h;
            let (up, _) = m.objective_and_gradient(core::slice::from_ref(&ex), 2.5, 0.01);
            m.params[i] = orig - h;
            let (down, _) = m.objective_and_gradient(core::slice::from_ref(&ex), 2.5, 0.01);
            m.params[i] = orig;
            let fd = (up - down) / (2.0 * h);
            let denom = fd.abs().max(grad[i].abs()).max(1e-8);
            let oov_row = i < 4 || (16..20).contains(&i);
            if oov_row {
                continue;
            }
            assert!((fd - grad[i]).abs() / denom < 1e-4, "param {i}: fd {fd} vs {}", grad[i]);
        }
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        use crate::dataset::{Label, LabeledChain};
        use crate::path::ChainPair;
        let chain = |s: &str, label| LabeledChain {
            chain: ChainPair::parse(s).unwrap(),
            label,
            recall: 0.0,
            precision: 0.0,
            f1: 0.0,
            padded: false,
        };
        let table = AnnotatedTable {
            table_id: "t".into(),
            qis: s(&["cast"]),
            chains: alloc::vec![chain("tv.actor / film", Label::Positive), chain("film / film", Label::Negative)],
            ..Default::default()
        };
        let cfg = EmbeddingConfig { epochs: 0, ..small_cfg() };
        let m = model();
        let (trained, hist) = EmbeddingScorer::train(&[table], m.tb.clone(), m.kb.clone(), &cfg).unwrap();
        assert!(hist.is_empty());
        assert_eq!(trained, m);
    }
}
