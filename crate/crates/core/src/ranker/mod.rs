//! Candidate tuple ranking: featurization, LambdaMART and ranking metrics.

mod features;
mod lambdamart;
mod metrics;

pub use features::{
    featurize, featurize_all, FeatureContext, FeatureVector, PretrainedEmbeddings, FEATURE_COUNT, FEATURE_NAMES,
};
pub use lambdamart::{
    group_gradients, pair_lambda, rank, rank_by, train_ranker, Node, RankerConfig, RankerModel, RankingGroup,
    RegressionTree,
};
pub use metrics::{dcg, ideal_dcg, ndcg, precision_at_1};

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::dataset::AnnotatedTable;
use crate::graph::{EntityMetaStore, PredicateMetaStore};
use crate::graph::{EntityId, KnowledgeGraph};
use crate::path::ChainPair;
use crate::query::{connects, execute_chain, QueryBudget};

/// Metadata shared by every featurization call.
#[derive(Debug, Clone, Copy)]
pub struct RankingResources<'a> {
    pub graph: &'a KnowledgeGraph,
    pub entities: &'a EntityMetaStore,
    pub predicates: &'a PredicateMetaStore,
    pub embeddings: &'a PretrainedEmbeddings,
}

/// Whether `chain` connects the example row `er` through the subject `se`.
pub fn chain_connects(g: &KnowledgeGraph, se: EntityId, er: (EntityId, EntityId), chain: &ChainPair) -> bool {
    connects(g, se, er.0, &chain.p1) && connects(g, er.0, er.1, &chain.p2)
}

/// Features for the candidates `cands` (example row already removed).
pub fn featurize_candidates(
    res: &RankingResources<'_>,
    table: &AnnotatedTable,
    chain: &ChainPair,
    er: (EntityId, EntityId),
    cands: &[(EntityId, EntityId)],
) -> Vec<FeatureVector> {
    let g = res.graph;
    let ctx = FeatureContext {
        qis: &table.qis,
        cn1: &table.cn1,
        cn2: &table.cn2,
        er: (g.entity_name(er.0), g.entity_name(er.1)),
        chain,
        entities: res.entities,
        predicates: res.predicates,
        embeddings: res.embeddings,
    };
    let named: Vec<(&str, &str)> = cands.iter().map(|(a, b)| (g.entity_name(*a), g.entity_name(*b))).collect();
    featurize_all(&ctx, &named)
}

/// One training group per table: the first positive chain, the first row it
/// connects as example row, and the chain's other results labeled by
/// membership in the table. Tables that yield nothing are skipped.
pub fn training_groups(
    res: &RankingResources<'_>,
    tables: &[AnnotatedTable],
    budget: QueryBudget,
) -> Vec<RankingGroup> {
    let g = res.graph;
    let mut groups = Vec::new();
    for t in tables {
        let Some(chain) = t.positives().next().map(|c| &c.chain) else { continue };
        let (Ok(se), Ok(rows)) = (t.subject(g), t.rows(g)) else { continue };
        let Some(&er) = rows.iter().find(|er| chain_connects(g, se, **er, chain)) else { continue };
        let Ok(ct) = execute_chain(g, se, chain, &budget) else { continue };
        let truth: BTreeSet<(EntityId, EntityId)> = rows.iter().copied().filter(|r| *r != er).collect();
        let cands: Vec<(EntityId, EntityId)> = ct.into_iter().filter(|c| *c != er).collect();
        if cands.is_empty() {
            continue;
        }
        let features = featurize_candidates(res, t, chain, er, &cands);
        groups.push(RankingGroup {
            features: features.iter().map(|f| f.0.to_vec()).collect(),
            relevant: cands.iter().map(|c| truth.contains(c)).collect(),
        });
    }
    groups
}
