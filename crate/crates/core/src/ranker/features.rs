//! The 27 tuple features.
//!
//! Similarities come in two flavors: Jaccard over token sets and cosine of
//! mean pre-trained word vectors. Difference features compare the example
//! row against a candidate: `S(example, x) - S(candidate, x)`. Cosines are
//! clamped to `[0, 1]` inside differences so every difference stays in
//! `[-1, 1]`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EntityMeta, EntityMetaStore, PredicateMetaStore};
use crate::path::ChainPair;
use crate::text::cosine;

pub const FEATURE_COUNT: usize = 27;

/// Frozen feature order; also the column names of feature dumps.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "c1_frequency",
    "desc_jaccard_c1",
    "desc_jaccard_c2",
    "desc_cosine_c1",
    "desc_cosine_c2",
    "qis_desc_jaccard_c1",
    "qis_desc_jaccard_c2",
    "qis_desc_cosine_c1",
    "qis_desc_cosine_c2",
    "notable_jaccard_c1",
    "notable_jaccard_c2",
    "notable_cosine_c1",
    "notable_cosine_c2",
    "rdf_jaccard_c1",
    "rdf_jaccard_c2",
    "rdf_cosine_c1",
    "rdf_cosine_c2",
    "p1_target_type_jaccard_diff",
    "p2_source_type_jaccard_diff",
    "p2_target_type_jaccard_diff",
    "p1_target_type_cosine_diff",
    "p2_source_type_cosine_diff",
    "p2_target_type_cosine_diff",
    "column_type_jaccard_diff_c1",
    "column_type_jaccard_diff_c2",
    "column_type_cosine_diff_c1",
    "column_type_cosine_diff_c2",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; FEATURE_COUNT]);

impl FeatureVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES.iter().position(|n| *n == name).map(|i| self.0[i])
    }
}

/// Word vectors of a fixed dimension.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PretrainedEmbeddings {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl PretrainedEmbeddings {
    pub fn new(dim: usize) -> Self {
        Self { dim, vectors: BTreeMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn insert(&mut self, token: String, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::InvalidInput(alloc::format!(
                "vector for {token:?} has dimension {}, expected {}",
                vector.len(),
                self.dim
            )));
        }
        self.vectors.insert(token, vector);
        Ok(())
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }

    /// Mean vector of the known tokens; zero when none is known.
    pub fn mean<'t, I>(&self, tokens: I) -> Vec<f64>
    where
        I: IntoIterator<Item = &'t String>,
    {
        let mut acc = alloc::vec![0.0; self.dim];
        let mut n = 0usize;
        for v in tokens.into_iter().filter_map(|t| self.vectors.get(t)) {
            for (a, b) in acc.iter_mut().zip(v) {
                *a += b;
            }
            n += 1;
        }
        if n > 0 {
            let inv = 1.0 / n as f64;
            acc.iter_mut().for_each(|x| *x *= inv);
        }
        acc
    }

    /// Cosine between the mean vectors of two token collections.
    pub fn similarity<'a, 'b, A, B>(&self, a: A, b: B) -> f64
    where
        A: IntoIterator<Item = &'a String>,
        B: IntoIterator<Item = &'b String>,
    {
        cosine(&self.mean(a), &self.mean(b))
    }
}

/// Everything the featurizer needs besides the candidate itself.
#[derive(Debug, Clone, Copy)]
pub struct FeatureContext<'a> {
    pub qis: &'a [String],
    pub cn1: &'a [String],
    pub cn2: &'a [String],
    /// Example row as external ids.
    pub er: (&'a str, &'a str),
    pub chain: &'a ChainPair,
    pub entities: &'a EntityMetaStore,
    pub predicates: &'a PredicateMetaStore,
    pub embeddings: &'a PretrainedEmbeddings,
}

fn jac(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    crate::text::jaccard(a, b)
}

/// Features of one candidate `(c1, c2)`. `c1_count` is how often `c1`
/// appears as first entity across the candidate set.
pub fn featurize(ctx: &FeatureContext<'_>, cand: (&str, &str), c1_count: usize) -> FeatureVector {
    let emb = ctx.embeddings;
    let er1 = ctx.entities.get(ctx.er.0);
    let er2 = ctx.entities.get(ctx.er.1);
    let t1 = ctx.entities.get(cand.0);
    let t2 = ctx.entities.get(cand.1);
    let qis: BTreeSet<String> = ctx.qis.iter().cloned().collect();
    let cn1: BTreeSet<String> = ctx.cn1.iter().cloned().collect();
    let cn2: BTreeSet<String> = ctx.cn2.iter().cloned().collect();
    let cos = |a: &BTreeSet<String>, b: &BTreeSet<String>| emb.similarity(a, b);
    let cos01 = |a: &BTreeSet<String>, b: &BTreeSet<String>| emb.similarity(a, b).clamp(0.0, 1.0);

    let mut f = [0.0; FEATURE_COUNT];
    f[0] = c1_count as f64;

    let (d_er1, d_er2) = (er1.description_set(), er2.description_set());
    let (d_t1, d_t2) = (t1.description_set(), t2.description_set());
    f[1] = jac(&d_er1, &d_t1);
    f[2] = jac(&d_er2, &d_t2);
    f[3] = cos(&d_er1, &d_t1);
    f[4] = cos(&d_er2, &d_t2);

    f[5] = jac(&qis, &d_t1);
    f[6] = jac(&qis, &d_t2);
    f[7] = cos(&qis, &d_t1);
    f[8] = cos(&qis, &d_t2);

    let pattern = |field: fn(&EntityMeta) -> &BTreeSet<String>| {
        [
            jac(field(er1), field(t1)),
            jac(field(er2), field(t2)),
            cos(field(er1), field(t1)),
            cos(field(er2), field(t2)),
        ]
    };
    f[9..13].copy_from_slice(&pattern(|m| &m.notable_types));
    f[13..17].copy_from_slice(&pattern(|m| &m.rdf_types));

    let p1_tgt = ctx.predicates.traversal_target(ctx.chain.p1.last());
    let p2_src = ctx.predicates.traversal_source(ctx.chain.p2.first());
    let p2_tgt = ctx.predicates.traversal_target(ctx.chain.p2.last());
    let triples = [
        (&er1.notable_types, &t1.notable_types, &p1_tgt),
        (&er1.notable_types, &t1.notable_types, &p2_src),
        (&er2.notable_types, &t2.notable_types, &p2_tgt),
    ];
    for (i, (e, t, x)) in triples.iter().enumerate() {
        f[17 + i] = jac(e, x) - jac(t, x);
        f[20 + i] = cos01(e, x) - cos01(t, x);
    }

    f[23] = jac(&er1.notable_types, &cn1) - jac(&t1.notable_types, &cn1);
    f[24] = jac(&er2.notable_types, &cn2) - jac(&t2.notable_types, &cn2);
    f[25] = cos01(&er1.notable_types, &cn1) - cos01(&t1.notable_types, &cn1);
    f[26] = cos01(&er2.notable_types, &cn2) - cos01(&t2.notable_types, &cn2);

    FeatureVector(f)
}

/// Features for every candidate, in input order.
pub fn featurize_all(ctx: &FeatureContext<'_>, cands: &[(&str, &str)]) -> Vec<FeatureVector> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for (c1, _) in cands {
        *counts.entry(c1).or_default() += 1;
    }
    cands
        .iter()
        .map(|c| featurize(ctx, *c, counts[c.0]))
        .collect()
}
