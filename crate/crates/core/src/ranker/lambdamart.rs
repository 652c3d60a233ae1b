//! LambdaMART: gradient-boosted regression trees fit to pairwise
//! λ-gradients weighted by the NDCG change of swapping two items.

use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::metrics::{discount, ideal_dcg};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankerConfig {
    pub trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub sigma: f64,
    pub min_leaf: usize,
}

impl Default for RankerConfig {
    fn default() -> Self {
        Self { trees: 100, max_depth: 4, learning_rate: 0.1, sigma: 1.0, min_leaf: 1 }
    }
}

/// Items of one query with binary relevance labels.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RankingGroup {
    pub features: Vec<Vec<f64>>,
    pub relevant: Vec<bool>,
}

impl RankingGroup {
    /// Groups without both relevant and irrelevant items carry no pairs.
    pub fn is_informative(&self) -> bool {
        self.relevant.iter().any(|r| *r) && self.relevant.iter().any(|r| !*r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// Nodes in a flat arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right } => {
                    let v = x.get(feature).copied().unwrap_or(0.0);
                    at = if v <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankerModel {
    pub learning_rate: f64,
    pub sigma: f64,
    pub feature_count: usize,
    pub trees: Vec<RegressionTree>,
}

impl RankerModel {
    /// A model without trees: every item scores 0.
    pub fn constant(feature_count: usize) -> Self {
        Self { learning_rate: 0.1, sigma: 1.0, feature_count, trees: Vec::new() }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.learning_rate * self.trees.iter().fold(0.0, |acc, t| acc + t.predict(x))
    }
}

/// The pairwise gradient of the cost for a pair where `i` is relevant and
/// `j` is not: `-sigma / (1 + exp(sigma (s_i - s_j))) * |delta_ndcg|`.
/// Item `i` receives it and item `j` its negation.
pub fn pair_lambda(s_i: f64, s_j: f64, sigma: f64, delta_ndcg: f64) -> f64 {
    -sigma / (1.0 + libm::exp(sigma * (s_i - s_j))) * delta_ndcg.abs()
}

/// Per-item cost gradients and Newton weights of one group under `scores`.
pub fn group_gradients(relevant: &[bool], scores: &[f64], sigma: f64) -> (Vec<f64>, Vec<f64>) {
    let n = relevant.len();
    let mut grad = alloc::vec![0.0; n];
    let mut weight = alloc::vec![0.0; n];
    let hits = relevant.iter().filter(|r| **r).count();
    if hits == 0 || hits == n {
        return (grad, weight);
    }
    let idcg = ideal_dcg(hits);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| cmp_desc(scores[a], scores[b]).then(a.cmp(&b)));
    let mut rank = alloc::vec![0usize; n];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    for i in (0..n).filter(|&i| relevant[i]) {
        for j in (0..n).filter(|&j| !relevant[j]) {
            let delta = (discount(rank[i]) - discount(rank[j])).abs() / idcg;
            let lambda = pair_lambda(scores[i], scores[j], sigma, delta);
            grad[i] += lambda;
            grad[j] -= lambda;
            let rho = -lambda / (sigma * delta.max(f64::MIN_POSITIVE));
            let w = sigma * sigma * delta * rho * (1.0 - rho);
            weight[i] += w;
            weight[j] += w;
        }
    }
    (grad, weight)
}

/// Descending order for scores; NaN sorts last.
pub(crate) fn cmp_desc(a: f64, b: f64) -> Ordering {
    let key = |x: f64| if x.is_nan() { f64::NEG_INFINITY } else { x };
    key(b).partial_cmp(&key(a)).unwrap_or(Ordering::Equal)
}

struct Fit<'a> {
    x: &'a [&'a [f64]],
    target: &'a [f64],
    weight: &'a [f64],
    cfg: &'a RankerConfig,
    nodes: Vec<Node>,
}

impl Fit<'_> {
    fn leaf(&self, idx: &[usize]) -> f64 {
        let num: f64 = idx.iter().map(|&i| self.target[i]).sum();
        let den: f64 = idx.iter().map(|&i| self.weight[i]).sum();
        if den > 1e-12 {
            num / den
        } else {
            0.0
        }
    }

    /// Best squared-error split as (feature, threshold, gain).
    fn best_split(&self, idx: &[usize]) -> Option<(usize, f64, f64)> {
        let features = self.x[idx[0]].len();
        let total: f64 = idx.iter().map(|&i| self.target[i]).sum();
        let n = idx.len() as f64;
        let base = total * total / n;
        let mut best: Option<(usize, f64, f64)> = None;
        let mut sorted = idx.to_vec();
        for f in 0..features {
            sorted.sort_by(|&a, &b| {
                self.x[a][f]
                    .partial_cmp(&self.x[b][f])
                    .unwrap_or(Ordering::Equal)
                    .then(a.cmp(&b))
            });
            let mut left = 0.0;
            for k in 0..sorted.len() - 1 {
                left += self.target[sorted[k]];
                let (lo, hi) = (self.x[sorted[k]][f], self.x[sorted[k + 1]][f]);
                if lo >= hi {
                    continue;
                }
                let nl = (k + 1) as f64;
                let nr = n - nl;
                if (k + 1) < self.cfg.min_leaf || sorted.len() - (k + 1) < self.cfg.min_leaf {
                    continue;
                }
                let right = total - left;
                let gain = left * left / nl + right * right / nr - base;
                if gain > 1e-12 && best.is_none_or(|(_, _, g)| gain > g) {
                    best = Some((f, lo + (hi - lo) / 2.0, gain));
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: &[usize], depth: usize) -> usize {
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf { value: self.leaf(idx) });
        if depth >= self.cfg.max_depth || idx.len() < 2 {
            return at;
        }
        if let Some((feature, threshold, _)) = self.best_split(idx) {
            let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.x[i][feature] <= threshold);
            let left = self.grow(&l, depth + 1);
            let right = self.grow(&r, depth + 1);
            self.nodes[at] = Node::Split { feature, threshold, left, right };
        }
        at
    }
}

/// Trains the ensemble. Uninformative groups are ignored. Training is
/// deterministic.
pub fn train_ranker(groups: &[RankingGroup], cfg: &RankerConfig) -> Result<RankerModel> {
    if cfg.max_depth == 0 || cfg.min_leaf == 0 || cfg.learning_rate.is_nan() || cfg.learning_rate <= 0.0 || cfg.sigma.is_nan() || cfg.sigma <= 0.0 {
        return Err(Error::Config("ranker depth, leaf size, learning rate and sigma must be positive".into()));
    }
    let mut feature_count = None;
    for g in groups {
        if g.features.len() != g.relevant.len() {
            return Err(Error::InvalidInput("feature and label counts differ".into()));
        }
        for row in &g.features {
            match feature_count {
                None => feature_count = Some(row.len()),
                Some(n) if n != row.len() => {
                    return Err(Error::InvalidInput("feature rows have different widths".into()))
                }
                _ => {}
            }
        }
    }
    let mut model = RankerModel {
        learning_rate: cfg.learning_rate,
        sigma: cfg.sigma,
        feature_count: feature_count.unwrap_or(0),
        trees: Vec::new(),
    };
    let used: Vec<&RankingGroup> = groups.iter().filter(|g| g.is_informative()).collect();
    if used.is_empty() {
        return Ok(model);
    }
    let x: Vec<&[f64]> = used.iter().flat_map(|g| g.features.iter().map(Vec::as_slice)).collect();
    let mut scores = alloc::vec![0.0; x.len()];
    for _ in 0..cfg.trees {
        let mut target = Vec::with_capacity(x.len());
        let mut weight = Vec::with_capacity(x.len());
        let mut offset = 0;
        for g in &used {
            let n = g.relevant.len();
            let (grad, w) = group_gradients(&g.relevant, &scores[offset..offset + n], cfg.sigma);
            target.extend(grad.iter().map(|v| -v));
            weight.extend(w);
            offset += n;
        }
        let idx: Vec<usize> = (0..x.len()).collect();
        let mut fit = Fit { x: &x, target: &target, weight: &weight, cfg, nodes: Vec::new() };
        fit.grow(&idx, 0);
        let tree = RegressionTree { nodes: fit.nodes };
        for (s, row) in scores.iter_mut().zip(&x) {
            *s += cfg.learning_rate * tree.predict(row);
        }
        model.trees.push(tree);
    }
    Ok(model)
}

/// Indices of `scores` in descending order; ties by `keys`.
pub fn rank_by<K: Ord>(scores: &[f64], keys: &[K]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| cmp_desc(scores[a], scores[b]).then_with(|| keys[a].cmp(&keys[b])));
    order
}

/// Ranks feature rows with `model`; ties by `keys`.
pub fn rank<K: Ord, R: AsRef<[f64]>>(model: &RankerModel, rows: &[R], keys: &[K]) -> Vec<usize> {
    let scores: Vec<f64> = rows.iter().map(|r| model.predict(r.as_ref())).collect();
    rank_by(&scores, keys)
}
