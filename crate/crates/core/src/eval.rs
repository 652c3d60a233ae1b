//! End-to-end simulation and metrics.
//!
//! Every row of every table plays the example row once. For each run the
//! candidate chains are filtered to those connecting the example row, a
//! selector picks one, the chain is executed and the retrieved tuples are
//! ranked with the example row removed.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::AnnotatedTable;
use crate::error::{Error, Result};
use crate::graph::{EntityId, KnowledgeGraph};
use crate::path::ChainPair;
use crate::query::{execute_chain, execute_prefix, QueryBudget, TupleSet};
use crate::ranker::{chain_connects, featurize_candidates, ndcg, precision_at_1, rank, RankerModel, RankingResources};
use crate::selector::{select_top1, QueryContext, Scorer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    SkippedEmptyCc,
    BudgetExceeded,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub tuple_recall: f64,
    pub ndcg: f64,
    pub p_at_1: f64,
    /// Column-1 recall of the full chain, projected to its first column.
    pub c1_recall_full: f64,
    /// Column-1 recall of the first segment alone; absent if it ran out of
    /// budget.
    pub c1_recall_p1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRun {
    pub table_id: String,
    pub er: (String, String),
    pub cc_er: Vec<ChainPair>,
    pub selected: Option<ChainPair>,
    /// Number of retrieved tuples.
    pub retrieved: usize,
    /// Number of expected rows (all rows but the example).
    pub expected: usize,
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub metrics: Option<RunMetrics>,
}

/// Picks one chain for a table out of `candidates`.
pub trait ChainSelector {
    fn select(&self, table: &AnnotatedTable, candidates: &[ChainPair]) -> Result<ChainPair>;
}

/// Selection by the highest score of a [`Scorer`].
#[derive(Debug, Clone)]
pub struct ScorerSelector<S>(pub S);

impl<S: Scorer> ChainSelector for ScorerSelector<S> {
    fn select(&self, table: &AnnotatedTable, candidates: &[ChainPair]) -> Result<ChainPair> {
        select_top1(&self.0, &QueryContext::from_table(table), candidates)
    }
}

/// Always the table's first positive chain, whatever the candidates are.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleSelector;

impl ChainSelector for OracleSelector {
    fn select(&self, table: &AnnotatedTable, _: &[ChainPair]) -> Result<ChainPair> {
        oracle_select(table)
    }
}

pub fn oracle_select(table: &AnnotatedTable) -> Result<ChainPair> {
    table
        .positives()
        .next()
        .map(|c| c.chain.clone())
        .ok_or(Error::EmptyCandidates)
}

/// Chains of `table` that connect `er` through the subject entity.
pub fn filter_cc_er(g: &KnowledgeGraph, table: &AnnotatedTable, se: EntityId, er: (EntityId, EntityId)) -> Vec<ChainPair> {
    table
        .chains
        .iter()
        .map(|c| &c.chain)
        .filter(|c| chain_connects(g, se, er, c))
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// `|ct ∩ err| / |err|`; 0 when `err` is empty.
pub fn tuple_recall(ct: &TupleSet, err: &BTreeSet<(EntityId, EntityId)>) -> f64 {
    if err.is_empty() {
        return 0.0;
    }
    err.iter().filter(|r| ct.contains(r)).count() as f64 / err.len() as f64
}

fn set_recall(found: &BTreeSet<EntityId>, truth: &BTreeSet<EntityId>) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    truth.iter().filter(|e| found.contains(e)).count() as f64 / truth.len() as f64
}

/// Fraction of tables (with at least one negative chain) whose top-1 chain
/// over all of the table's chains is positive. `None` if no table
/// qualifies.
pub fn accuracy_at_1<S: ChainSelector + ?Sized>(tables: &[AnnotatedTable], selector: &S) -> Option<f64> {
    let mut total = 0usize;
    let mut hits = 0usize;
    for t in tables.iter().filter(|t| t.negatives().next().is_some()) {
        total += 1;
        let chains: Vec<ChainPair> = t.chains.iter().map(|c| c.chain.clone()).collect();
        if let Ok(pick) = selector.select(t, &chains) {
            if t.positives().any(|c| c.chain == pick) {
                hits += 1;
            }
        }
    }
    (total > 0).then(|| hits as f64 / total as f64)
}

/// Expected Accuracy@1 of a uniformly random pick, over the same tables as
/// [`accuracy_at_1`].
pub fn random_accuracy_expectation(tables: &[AnnotatedTable]) -> Option<f64> {
    let fractions: Vec<f64> = tables
        .iter()
        .filter(|t| t.negatives().next().is_some())
        .map(|t| t.positives().count() as f64 / t.chains.len() as f64)
        .collect();
    (!fractions.is_empty()).then(|| fractions.iter().sum::<f64>() / fractions.len() as f64)
}

/// All runs of one table, one per row.
pub fn run_table<S: ChainSelector + ?Sized>(
    table: &AnnotatedTable,
    selector: &S,
    ranker: &RankerModel,
    res: &RankingResources<'_>,
    budget: &QueryBudget,
) -> Vec<QueryRun> {
    let g = res.graph;
    let rows = match (table.subject(g), table.rows(g)) {
        (Ok(se), Ok(rows)) => (se, rows),
        (Err(e), _) | (_, Err(e)) => {
            return table
                .rr
                .iter()
                .map(|er| failed_run(table, er.clone(), Vec::new(), None, RunStatus::Failed, &e))
                .collect();
        }
    };
    let (se, rows) = rows;
    rows.iter()
        .zip(&table.rr)
        .map(|(&er, er_names)| run_one(table, se, &rows, er, er_names.clone(), selector, ranker, res, budget))
        .collect()
}

fn failed_run(
    table: &AnnotatedTable,
    er: (String, String),
    cc_er: Vec<ChainPair>,
    selected: Option<ChainPair>,
    status: RunStatus,
    err: &Error,
) -> QueryRun {
    QueryRun {
        table_id: table.table_id.clone(),
        er,
        cc_er,
        selected,
        retrieved: 0,
        expected: table.rr.len().saturating_sub(1),
        status,
        error: Some(err.to_string()),
        metrics: None,
    }
}

#[allow(clippy::too_many_arguments)]
fn run_one<S: ChainSelector + ?Sized>(
    table: &AnnotatedTable,
    se: EntityId,
    rows: &[(EntityId, EntityId)],
    er: (EntityId, EntityId),
    er_names: (String, String),
    selector: &S,
    ranker: &RankerModel,
    res: &RankingResources<'_>,
    budget: &QueryBudget,
) -> QueryRun {
    let g = res.graph;
    let cc_er = filter_cc_er(g, table, se, er);
    if cc_er.is_empty() {
        let mut run = failed_run(table, er_names, cc_er, None, RunStatus::SkippedEmptyCc, &Error::EmptyCandidates);
        run.error = None;
        return run;
    }
    let chain = match selector.select(table, &cc_er) {
        Ok(c) => c,
        Err(e) => return failed_run(table, er_names, cc_er, None, RunStatus::Failed, &e),
    };
    let ct = match execute_chain(g, se, &chain, budget) {
        Ok(ct) => ct,
        Err(e) => {
            let status = if matches!(e, Error::BudgetExceeded { .. }) { RunStatus::BudgetExceeded } else { RunStatus::Failed };
            return failed_run(table, er_names, cc_er, Some(chain), status, &e);
        }
    };
    let err: BTreeSet<(EntityId, EntityId)> = rows.iter().copied().filter(|r| *r != er).collect();
    let recall = tuple_recall(&ct, &err);

    let cands: Vec<(EntityId, EntityId)> = ct.iter().copied().filter(|c| *c != er).collect();
    let features = featurize_candidates(res, table, &chain, er, &cands);
    let rows_f: Vec<&[f64]> = features.iter().map(|f| f.values()).collect();
    let order = rank(ranker, &rows_f, &cands);
    let ranked: Vec<(EntityId, EntityId)> = order.iter().map(|&i| cands[i]).collect();
    let relevance: Vec<bool> = ranked.iter().map(|c| err.contains(c)).collect();

    let truth_c1: BTreeSet<EntityId> = rows.iter().map(|r| r.0).filter(|x| *x != er.0).collect();
    let full_c1: BTreeSet<EntityId> = ct.iter().map(|t| t.0).collect();
    let p1_c1 = execute_prefix(g, se, &chain.p1, budget).ok();

    QueryRun {
        table_id: table.table_id.clone(),
        er: er_names,
        cc_er,
        selected: Some(chain),
        retrieved: ct.len(),
        expected: err.len(),
        status: RunStatus::Ok,
        error: None,
        metrics: Some(RunMetrics {
            tuple_recall: recall,
            ndcg: ndcg(&relevance),
            p_at_1: precision_at_1(&ranked, &err),
            c1_recall_full: set_recall(&full_c1, &truth_c1),
            c1_recall_p1: p1_c1.map(|xs| set_recall(&xs, &truth_c1)),
        }),
    }
}

/// Runs every row of every table as the example row.
pub fn run_e2e<S: ChainSelector + ?Sized>(
    tables: &[AnnotatedTable],
    selector: &S,
    ranker: &RankerModel,
    res: &RankingResources<'_>,
    budget: &QueryBudget,
) -> Vec<QueryRun> {
    tables
        .iter()
        .flat_map(|t| run_table(t, selector, ranker, res, budget))
        .collect()
}

/// Quartiles (linear interpolation) and mean of one metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Percentiles {
    pub p25: f64,
    pub p50: f64,
    pub mean: f64,
    pub p75: f64,
}

/// Linear-interpolation percentile of sorted values, `q` in `[0, 1]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => 0.0,
        1 => sorted[0],
        n => {
            let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = libm::floor(pos) as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        }
    }
}

impl Percentiles {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Self {
            p25: percentile(&v, 0.25),
            p50: percentile(&v, 0.5),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            p75: percentile(&v, 0.75),
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub executed: usize,
    pub skipped_empty_cc: usize,
    pub budget_exceeded: usize,
    pub failed: usize,
    pub tuple_recall: Option<Percentiles>,
    pub ndcg: Option<Percentiles>,
    pub p_at_1: Option<Percentiles>,
}

impl MetricSummary {
    pub fn total(&self) -> usize {
        self.executed + self.skipped_empty_cc + self.budget_exceeded + self.failed
    }
}

/// Aggregates runs; metrics cover executed runs only.
pub fn summarize(runs: &[QueryRun]) -> MetricSummary {
    let mut s = MetricSummary::default();
    let mut recall = Vec::new();
    let mut nd = Vec::new();
    let mut p1 = Vec::new();
    for r in runs {
        match r.status {
            RunStatus::Ok => s.executed += 1,
            RunStatus::SkippedEmptyCc => s.skipped_empty_cc += 1,
            RunStatus::BudgetExceeded => s.budget_exceeded += 1,
            RunStatus::Failed => s.failed += 1,
        }
        if let Some(m) = &r.metrics {
            recall.push(m.tuple_recall);
            nd.push(m.ndcg);
            p1.push(m.p_at_1);
        }
    }
    s.tuple_recall = Percentiles::of(&recall);
    s.ndcg = Percentiles::of(&nd);
    s.p_at_1 = Percentiles::of(&p1);
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoreColumnMode {
    P1,
    Full,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CoreColumnSummary {
    pub queries: usize,
    pub c1_recall: Option<Percentiles>,
}

/// Column-1 recall over executed runs. In `P1` mode runs whose first
/// segment exceeded the budget are left out.
pub fn core_column_eval(runs: &[QueryRun], mode: CoreColumnMode) -> CoreColumnSummary {
    let values: Vec<f64> = runs
        .iter()
        .filter_map(|r| r.metrics.as_ref())
        .filter_map(|m| match mode {
            CoreColumnMode::P1 => m.c1_recall_p1,
            CoreColumnMode::Full => Some(m.c1_recall_full),
        })
        .collect();
    CoreColumnSummary { queries: values.len(), c1_recall: Percentiles::of(&values) }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[(u32, u32)]) -> BTreeSet<(EntityId, EntityId)> {
        v.iter().map(|(a, b)| (EntityId(*a), EntityId(*b))).collect()
    }

    #[test]
    fn tuple_recall_examples() {
        let err = ids(&[(2, 2), (3, 3)]);
        assert_eq!(tuple_recall(&ids(&[(2, 2), (3, 3), (9, 9)]), &err), 1.0);
        assert_eq!(tuple_recall(&ids(&[(2, 2)]), &err), 0.5);
        assert_eq!(tuple_recall(&TupleSet::new(), &err), 0.0);
    }

    #[test]
    fn percentiles_interpolate() {
        let p = Percentiles::of(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert!((p.p25 - 1.75).abs() < 1e-12);
        assert!((p.p50 - 2.5).abs() < 1e-12);
        assert!((p.p75 - 3.25).abs() < 1e-12);
        assert!((p.mean - 2.5).abs() < 1e-12);
        assert!(Percentiles::of(&[]).is_none());
    }
}
