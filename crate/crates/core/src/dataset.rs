//! Turning raw web tables into annotated training data.
//!
//! Per table: link cells to entities, build the query intent string, column
//! names and subject entity types, search `P1`/`P2` meta-paths for every row,
//! join them into `[P1 - P2]` chains, execute each chain against the graph
//! and label the best ones positive. Then split, build vocabularies and pad
//! training tables with sampled negatives.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EntityId, EntityMetaStore, KnowledgeGraph};
use crate::path::{self, ChainPair, MetaPath, PathSearch};
use crate::query::{self, QueryBudget, TupleSet};
use crate::text::{self, EMPTY_TOKEN, NUM_TOKEN};

pub const MIN_ROWS: usize = 3;
/// Chains must retrieve at least this many ground-truth rows to be kept.
pub const MIN_CHAIN_HITS: usize = 2;
/// Positive plus negatives per training example.
pub const DEFAULT_K: usize = 10;
/// Type namespaces too generic to describe a subject entity.
pub const GENERIC_TYPE_NAMESPACES: [&str; 3] = ["base", "common", "type"];
pub const OOV_TOKEN: &str = "<oov>";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub text: String,
    /// Hyperlinks in order of appearance.
    #[serde(default)]
    pub urls: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTable {
    pub table_id: String,
    pub page_title: String,
    pub caption: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Pre-linked subject entity of the page title.
    pub subject: Option<String>,
}

/// Lookup tables used while building the dataset.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinkingData {
    pub url_to_mid: BTreeMap<String, String>,
    /// Knowledge-base types per entity.
    pub entity_types: BTreeMap<String, Vec<String>>,
    /// Fine-grained types per knowledge-base type.
    pub fine_types: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainMetrics {
    pub hits: usize,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledChain {
    pub chain: ChainPair,
    pub label: Label,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    /// Negative sampled from other tables to pad a training example.
    #[serde(default, skip_serializing_if = "core::ops::Not::not")]
    pub padded: bool,
}

impl LabeledChain {
    pub fn is_positive(&self) -> bool {
        self.label == Label::Positive
    }
}

/// A table ready for training or evaluation. Entities are stored by their
/// external identifiers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedTable {
    pub table_id: String,
    pub se: String,
    pub se_name: String,
    pub qis: Vec<String>,
    pub cn1: Vec<String>,
    pub cn2: Vec<String>,
    pub set_tokens: Vec<String>,
    pub rr: Vec<(String, String)>,
    /// In annotation order: positives first.
    pub chains: Vec<LabeledChain>,
}

impl AnnotatedTable {
    pub fn positives(&self) -> impl Iterator<Item = &LabeledChain> {
        self.chains.iter().filter(|c| c.is_positive())
    }

    pub fn negatives(&self) -> impl Iterator<Item = &LabeledChain> {
        self.chains.iter().filter(|c| !c.is_positive())
    }

    pub fn subject(&self, g: &KnowledgeGraph) -> Result<EntityId> {
        g.entity(&self.se)
    }

    pub fn rows(&self, g: &KnowledgeGraph) -> Result<Vec<(EntityId, EntityId)>> {
        self.rr
            .iter()
            .map(|(a, b)| Ok((g.entity(a)?, g.entity(b)?)))
            .collect()
    }
}

/// Why a raw table did not make it into the dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rejection {
    TooFewColumns,
    EmptyColumnName,
    DuplicateCoreEntity,
    TooFewRows(usize),
    NoSubject,
    UnknownSubject(String),
    EmptySubjectName,
    SubjectNameMismatch,
    NoSubjectType,
    NoPaths,
    NoChains,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::TooFewColumns => f.write_str("fewer than two columns"),
            Rejection::EmptyColumnName => f.write_str("empty column name"),
            Rejection::DuplicateCoreEntity => f.write_str("core column entities are not unique"),
            Rejection::TooFewRows(n) => write!(f, "only {n} linked rows"),
            Rejection::NoSubject => f.write_str("no subject entity"),
            Rejection::UnknownSubject(mid) => write!(f, "subject {mid} not in graph"),
            Rejection::EmptySubjectName => f.write_str("subject entity has no name"),
            Rejection::SubjectNameMismatch => f.write_str("subject name does not match page title"),
            Rejection::NoSubjectType => f.write_str("subject has no specific type"),
            Rejection::NoPaths => f.write_str("no P1 or no P2 paths"),
            Rejection::NoChains => f.write_str("no chain retrieves enough ground-truth rows"),
        }
    }
}

/// Link the first two cells of every row through their first hyperlink.
/// Rows with an unlinkable cell are dropped.
pub fn link_cells(raw: &RawTable, url_to_mid: &BTreeMap<String, String>) -> Vec<(String, String)> {
    let link = |cell: &Cell| cell.urls.first().and_then(|u| url_to_mid.get(u)).cloned();
    raw.rows
        .iter()
        .filter(|row| row.len() >= 2)
        .filter_map(|row| Some((link(&row[0])?, link(&row[1])?)))
        .collect()
}

/// Query intent string: title and caption with the subject's name removed.
pub fn build_qis(page_title: &str, caption: &str, entity_name: &str) -> Vec<String> {
    let mut joined = String::with_capacity(page_title.len() + caption.len() + 1);
    joined.push_str(page_title);
    joined.push(' ');
    joined.push_str(caption);
    let stripped = text::remove_first_ci(&joined, entity_name);
    let tokens: Vec<String> = text::tokenize(&stripped)
        .into_iter()
        .map(|t| if text::is_numeric(&t) { NUM_TOKEN.to_string() } else { t })
        .collect();
    if tokens.is_empty() {
        alloc::vec![EMPTY_TOKEN.to_string()]
    } else {
        tokens
    }
}

pub fn normalize_column_name(header: &str) -> Vec<String> {
    text::tokenize(header)
        .iter()
        .map(|t| text::singularize(t))
        .collect()
}

pub fn normalize_column_names(headers: &[String]) -> core::result::Result<(Vec<String>, Vec<String>), Rejection> {
    if headers.len() < 2 {
        return Err(Rejection::TooFewColumns);
    }
    let cn1 = normalize_column_name(&headers[0]);
    let cn2 = normalize_column_name(&headers[1]);
    if cn1.is_empty() || cn2.is_empty() {
        return Err(Rejection::EmptyColumnName);
    }
    Ok((cn1, cn2))
}

fn is_generic_type(ty: &str) -> bool {
    let namespace = ty.split('.').next().unwrap_or("");
    GENERIC_TYPE_NAMESPACES.contains(&namespace)
}

/// How many subject entities carry each type.
pub fn type_frequencies<'a, I>(subjects: I, entity_types: &BTreeMap<String, Vec<String>>) -> BTreeMap<String, usize>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut freq = BTreeMap::new();
    for mid in subjects {
        if let Some(types) = entity_types.get(mid) {
            let unique: BTreeSet<&String> = types.iter().collect();
            for t in unique {
                *freq.entry(t.clone()).or_insert(0) += 1;
            }
        }
    }
    freq
}

/// Subject entity type tokens: the least frequent specific type followed by
/// its fine-grained types.
pub fn build_set(
    types: &[String],
    type_freq: &BTreeMap<String, usize>,
    fine_types: &BTreeMap<String, Vec<String>>,
) -> core::result::Result<Vec<String>, Rejection> {
    let chosen = types
        .iter()
        .filter(|t| !is_generic_type(t))
        .min_by(|a, b| {
            let fa = type_freq.get(*a).copied().unwrap_or(0);
            let fb = type_freq.get(*b).copied().unwrap_or(0);
            fa.cmp(&fb).then_with(|| a.cmp(b))
        })
        .ok_or(Rejection::NoSubjectType)?;
    let mut tokens = text::tokenize(chosen);
    if let Some(fine) = fine_types.get(chosen) {
        for f in fine {
            tokens.extend(text::tokenize(f));
        }
    }
    Ok(tokens)
}

pub fn metrics_for(retrieved: &TupleSet, rr: &BTreeSet<(EntityId, EntityId)>) -> ChainMetrics {
    let hits = retrieved.iter().filter(|t| rr.contains(t)).count();
    let recall = if rr.is_empty() { 0.0 } else { hits as f64 / rr.len() as f64 };
    let precision = if retrieved.is_empty() { 0.0 } else { hits as f64 / retrieved.len() as f64 };
    let f1 = if recall + precision == 0.0 {
        0.0
    } else {
        2.0 * recall * precision / (recall + precision)
    };
    ChainMetrics { hits, recall, precision, f1 }
}

/// Execute `chain` from `se` and compare the tuples with the ground truth.
pub fn compute_chain_metrics(
    g: &KnowledgeGraph,
    se: EntityId,
    chain: &ChainPair,
    rr: &BTreeSet<(EntityId, EntityId)>,
    budget: &QueryBudget,
) -> Result<ChainMetrics> {
    let retrieved = query::execute_chain(g, se, chain, budget)?;
    Ok(metrics_for(&retrieved, rr))
}

/// Sort by (recall desc, total length asc, f1 desc, canonical string) and
/// label every chain tied with the first on (recall, length, f1) positive.
pub fn annotate_chains(mut chains: Vec<(ChainPair, ChainMetrics)>) -> core::result::Result<Vec<LabeledChain>, Rejection> {
    if chains.is_empty() {
        return Err(Rejection::NoChains);
    }
    chains.sort_by(|(ca, ma), (cb, mb)| {
        mb.recall
            .total_cmp(&ma.recall)
            .then(ca.total_len().cmp(&cb.total_len()))
            .then(mb.f1.total_cmp(&ma.f1))
            .then_with(|| ca.cmp(cb))
    });
    let (best_chain, best) = (&chains[0].0, chains[0].1);
    let best_key = (best.recall, best_chain.total_len(), best.f1);
    Ok(chains
        .into_iter()
        .map(|(chain, m)| {
            let positive = (m.recall, chain.total_len(), m.f1) == best_key;
            LabeledChain {
                chain,
                label: if positive { Label::Positive } else { Label::Negative },
                recall: m.recall,
                precision: m.precision,
                f1: m.f1,
                padded: false,
            }
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct BuildConfig {
    pub max_len: usize,
    pub degree_cap: usize,
    pub banned_prefixes: Vec<String>,
    pub budget: QueryBudget,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            max_len: path::MAX_SEGMENT_LEN,
            degree_cap: path::DEFAULT_DEGREE_CAP,
            banned_prefixes: path::default_banned_prefixes(),
            budget: QueryBudget::default(),
        }
    }
}

/// Everything shared by the per-table annotation step.
pub struct BuildContext<'a> {
    pub graph: &'a KnowledgeGraph,
    pub entity_meta: &'a EntityMetaStore,
    pub linking: &'a LinkingData,
    pub type_freq: &'a BTreeMap<String, usize>,
    pub config: &'a BuildConfig,
}

fn names_match(title: &str, name: &str) -> bool {
    let (t, n) = (title.to_lowercase(), name.to_lowercase());
    t.contains(&n) || n.contains(&t)
}

/// Run the full filtering and annotation pipeline on one raw table.
pub fn annotate_table(raw: &RawTable, ctx: &BuildContext<'_>) -> core::result::Result<AnnotatedTable, Rejection> {
    let g = ctx.graph;
    if raw.headers.len() < 2 {
        return Err(Rejection::TooFewColumns);
    }
    let (cn1, cn2) = normalize_column_names(&raw.headers)?;

    // Linked rows whose entities exist in the graph, first occurrence kept.
    let mut seen = BTreeSet::new();
    let mut rows: Vec<(String, String)> = Vec::new();
    for (a, b) in link_cells(raw, &ctx.linking.url_to_mid) {
        if g.entity_id(&a).is_some() && g.entity_id(&b).is_some() && seen.insert((a.clone(), b.clone())) {
            rows.push((a, b));
        }
    }
    let core_entities: BTreeSet<&String> = rows.iter().map(|(a, _)| a).collect();
    if core_entities.len() != rows.len() {
        return Err(Rejection::DuplicateCoreEntity);
    }
    if rows.len() < MIN_ROWS {
        return Err(Rejection::TooFewRows(rows.len()));
    }

    let se_mid = raw.subject.as_deref().ok_or(Rejection::NoSubject)?;
    let se = g
        .entity_id(se_mid)
        .ok_or_else(|| Rejection::UnknownSubject(se_mid.to_string()))?;
    let se_name = ctx.entity_meta.get(se_mid).name.clone();
    if se_name.trim().is_empty() {
        return Err(Rejection::EmptySubjectName);
    }
    if !names_match(&raw.page_title, &se_name) {
        return Err(Rejection::SubjectNameMismatch);
    }
    let qis = build_qis(&raw.page_title, &raw.caption, &se_name);
    let types = ctx.linking.entity_types.get(se_mid).map(Vec::as_slice).unwrap_or(&[]);
    let set_tokens = build_set(types, ctx.type_freq, &ctx.linking.fine_types)?;

    let ids: Vec<(EntityId, EntityId)> = rows
        .iter()
        .map(|(a, b)| (g.entity_id(a).unwrap(), g.entity_id(b).unwrap()))
        .collect();
    let search = PathSearch {
        max_len: ctx.config.max_len,
        degree_cap: ctx.config.degree_cap,
        banned_prefixes: &ctx.config.banned_prefixes,
    };
    let mut p1s: BTreeSet<MetaPath> = BTreeSet::new();
    let mut p2s: BTreeSet<MetaPath> = BTreeSet::new();
    for &(e1, e2) in &ids {
        if e1 != se {
            p1s.extend(path::enumerate_simple_paths(g, se, e1, &search).unwrap_or_default());
        }
        if e1 != e2 {
            p2s.extend(path::enumerate_simple_paths(g, e1, e2, &search).unwrap_or_default());
        }
    }
    if p1s.is_empty() || p2s.is_empty() {
        return Err(Rejection::NoPaths);
    }
    let candidates = path::join_chains(g, se, &p1s, &p2s).map_err(|_| Rejection::NoChains)?;

    let truth: BTreeSet<(EntityId, EntityId)> = ids.iter().copied().collect();
    let scored: Vec<(ChainPair, ChainMetrics)> = candidates
        .into_iter()
        .filter_map(|chain| {
            let m = compute_chain_metrics(g, se, &chain, &truth, &ctx.config.budget).ok()?;
            (m.hits >= MIN_CHAIN_HITS).then_some((chain, m))
        })
        .collect();
    let chains = annotate_chains(scored)?;

    Ok(AnnotatedTable {
        table_id: raw.table_id.clone(),
        se: se_mid.to_string(),
        se_name,
        qis,
        cn1,
        cn2,
        set_tokens,
        rr: rows,
        chains,
    })
}

/// Annotated tables of a corpus plus the reasons for every rejection.
#[derive(Debug, Clone, Default)]
pub struct CorpusAnnotation {
    pub tables: Vec<AnnotatedTable>,
    pub rejected: Vec<(String, Rejection)>,
    pub type_freq: BTreeMap<String, usize>,
}

/// Type frequencies over the distinct subjects of a corpus.
pub fn corpus_type_frequencies(raws: &[RawTable], linking: &LinkingData) -> BTreeMap<String, usize> {
    let subjects: BTreeSet<&str> = raws.iter().filter_map(|r| r.subject.as_deref()).collect();
    type_frequencies(subjects, &linking.entity_types)
}

/// Annotates every raw table in input order.
pub fn annotate_corpus(
    raws: &[RawTable],
    graph: &KnowledgeGraph,
    entity_meta: &EntityMetaStore,
    linking: &LinkingData,
    config: &BuildConfig,
) -> CorpusAnnotation {
    let type_freq = corpus_type_frequencies(raws, linking);
    let ctx = BuildContext { graph, entity_meta, linking, type_freq: &type_freq, config };
    let mut out = CorpusAnnotation::default();
    for raw in raws {
        match annotate_table(raw, &ctx) {
            Ok(t) => out.tables.push(t),
            Err(r) => out.rejected.push((raw.table_id.clone(), r)),
        }
    }
    out.type_freq = type_freq;
    out
}

/// Train / validation / test table ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub seed: u64,
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
}

/// Seeded 80/10/10 split. Validation and test get `ceil(n / 10)` tables each
/// (4013 tables split as 3209/402/402); the order of `ids` does not matter.
pub fn split_dataset(ids: &[String], seed: u64) -> DatasetSplit {
    let mut sorted: Vec<String> = ids.to_vec();
    sorted.sort();
    sorted.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sorted.shuffle(&mut rng);

    let n = sorted.len();
    let held_out = n.div_ceil(10);
    let n_test = held_out.min(n);
    let n_val = held_out.min(n - n_test);
    let test = sorted.split_off(n - n_test);
    let validation = sorted.split_off(sorted.len() - n_val);
    let mut train = sorted;
    let mut validation = validation;
    let mut test = test;
    train.sort();
    validation.sort();
    test.sort();
    DatasetSplit { seed, train, validation, test }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VocabKind {
    /// Query intent strings and column names.
    Table,
    /// Subject entity types and chain predicates.
    Kb,
}

/// Token index with a reserved out-of-vocabulary slot at index 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "VocabularyRepr", from = "VocabularyRepr")]
pub struct Vocabulary {
    pub kind: VocabKind,
    tokens: Vec<String>,
    index: BTreeMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    kind: VocabKind,
    tokens: Vec<String>,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        Vocabulary::from_tokens(r.kind, r.tokens)
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr { kind: v.kind, tokens: v.tokens }
    }
}

impl Vocabulary {
    /// Build from an already filtered token list; index `i + 1` for `tokens[i]`.
    pub fn from_tokens(kind: VocabKind, tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32 + 1))
            .collect();
        Self { kind, tokens, index }
    }

    /// Keep tokens seen at least twice, in lexicographic order.
    pub fn from_counts(kind: VocabKind, counts: &BTreeMap<String, usize>) -> Self {
        let tokens = counts
            .iter()
            .filter(|(t, &c)| c >= 2 && t.as_str() != OOV_TOKEN)
            .map(|(t, _)| t.clone())
            .collect();
        Self::from_tokens(kind, tokens)
    }

    /// Number of indices, the OOV slot included.
    pub fn len(&self) -> usize {
        self.tokens.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn index_of(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(0)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn token(&self, index: u32) -> &str {
        if index == 0 {
            OOV_TOKEN
        } else {
            &self.tokens[index as usize - 1]
        }
    }

    /// Known tokens without the OOV slot, in index order.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<u32> {
        tokens.iter().map(|t| self.index_of(t.as_ref())).collect()
    }

    /// Stable fingerprint of the token list, stored in trained models.
    pub fn fingerprint(&self) -> u64 {
        let mut bytes = Vec::new();
        for t in &self.tokens {
            bytes.extend_from_slice(t.as_bytes());
            bytes.push(b'\n');
        }
        text::fnv1a(&bytes)
    }
}

/// Tokens of a chain's canonical form under the shared tokenizer.
pub fn chain_tokens(chain: &ChainPair) -> Vec<String> {
    text::tokenize(&chain.canonical())
}

/// Table and knowledge-base vocabularies from the given (train and
/// validation) tables.
pub fn build_vocab<'a, I>(tables: I) -> (Vocabulary, Vocabulary)
where
    I: IntoIterator<Item = &'a AnnotatedTable>,
{
    let mut tb: BTreeMap<String, usize> = BTreeMap::new();
    let mut kb: BTreeMap<String, usize> = BTreeMap::new();
    for t in tables {
        for tok in t.qis.iter().chain(&t.cn1).chain(&t.cn2) {
            *tb.entry(tok.clone()).or_insert(0) += 1;
        }
        for tok in &t.set_tokens {
            *kb.entry(tok.clone()).or_insert(0) += 1;
        }
        for c in &t.chains {
            for tok in chain_tokens(&c.chain) {
                *kb.entry(tok).or_insert(0) += 1;
            }
        }
    }
    (
        Vocabulary::from_counts(VocabKind::Table, &tb),
        Vocabulary::from_counts(VocabKind::Kb, &kb),
    )
}

/// Give every training table at least `k - 1` negatives by sampling chains
/// that are negative somewhere in `tables`. A table's own chains are never
/// sampled.
pub fn pad_negatives(tables: &mut [AnnotatedTable], k: usize, seed: u64) -> Result<()> {
    let want = k.saturating_sub(1);
    let pool: BTreeSet<ChainPair> = tables
        .iter()
        .flat_map(|t| t.negatives().map(|c| c.chain.clone()))
        .collect();
    let pool: Vec<ChainPair> = pool.into_iter().collect();

    let mut order: Vec<usize> = (0..tables.len()).collect();
    order.sort_by(|&a, &b| tables[a].table_id.cmp(&tables[b].table_id));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in order {
        let table = &mut tables[i];
        let have = table.negatives().count();
        if have >= want {
            continue;
        }
        if pool.is_empty() {
            return Err(Error::Config("no negative chains available for padding".into()));
        }
        let own: BTreeSet<&ChainPair> = table.chains.iter().map(|c| &c.chain).collect();
        let mut candidates: Vec<&ChainPair> = pool.iter().filter(|c| !own.contains(c)).collect();
        candidates.shuffle(&mut rng);
        let added: Vec<LabeledChain> = candidates
            .into_iter()
            .take(want - have)
            .map(|chain| LabeledChain {
                chain: chain.clone(),
                label: Label::Negative,
                recall: 0.0,
                precision: 0.0,
                f1: 0.0,
                padded: true,
            })
            .collect();
        table.chains.extend(added);
    }
    Ok(())
}
