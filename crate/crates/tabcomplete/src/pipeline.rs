//! The operations behind each subcommand.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tabcomplete_core::dataset::{
    self, build_qis, build_vocab, normalize_column_name, AnnotatedTable, BuildContext, DatasetSplit, Rejection,
    VocabKind, Vocabulary,
};
use tabcomplete_core::eval::{
    accuracy_at_1, core_column_eval, random_accuracy_expectation, run_table, summarize, ChainSelector,
    CoreColumnMode, CoreColumnSummary, MetricSummary, OracleSelector, QueryRun, ScorerSelector,
};
use tabcomplete_core::graph::{EntityMetaStore, PredicateMetaStore};
use tabcomplete_core::path::{enumerate_simple_paths, join_chains, PathSearch};
use tabcomplete_core::query::{execute_chain, render_sparql};
use tabcomplete_core::ranker::{
    featurize_candidates, rank, train_ranker, training_groups, PretrainedEmbeddings, RankerModel,
    RankingResources, FEATURE_COUNT,
};
use tabcomplete_core::selector::{
    select_top1, EmbeddingScorer, JacSimScorer, LinearScorer, QueryContext, RandomScorer, SelectorModel,
};
use tabcomplete_core::synthetic;
use tabcomplete_core::{text, ChainPair, EntityId, KnowledgeGraph};

use crate::config::{EvalSplit, RunConfig, SelectorKind, TupleRanking};
use crate::error::{Error, Result};
use crate::io;
use crate::model::{RankerFile, SelectorFile};

/// Graph plus the metadata used by featurization.
pub struct KnowledgeBase {
    pub graph: KnowledgeGraph,
    pub entities: EntityMetaStore,
    pub predicates: PredicateMetaStore,
    pub embeddings: PretrainedEmbeddings,
}

impl KnowledgeBase {
    pub fn load(cfg: &RunConfig) -> Result<Self> {
        Ok(Self {
            graph: io::load_graph(&cfg.paths.graph)?,
            entities: io::load_entities(&cfg.paths.entities)?,
            predicates: io::load_predicates(&cfg.paths.predicates)?,
            embeddings: io::load_embeddings(&cfg.paths.embeddings)?,
        })
    }

    pub fn resources(&self) -> RankingResources<'_> {
        RankingResources {
            graph: &self.graph,
            entities: &self.entities,
            predicates: &self.predicates,
            embeddings: &self.embeddings,
        }
    }
}

pub const TABLES_FILE: &str = "tables.jsonl";
pub const SPLIT_FILE: &str = "split.json";
pub const TB_VOCAB_FILE: &str = "tb_vocab.txt";
pub const KB_VOCAB_FILE: &str = "kb_vocab.txt";
pub const TYPE_FREQ_FILE: &str = "type_freq.tsv";
pub const REJECTED_FILE: &str = "rejected.tsv";
pub const RUNS_FILE: &str = "runs.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";
pub const METRICS_CSV_FILE: &str = "metrics.csv";
pub const CORE_COLUMN_FILE: &str = "core_column.json";

/// An annotated dataset as written by [`build_dataset`].
pub struct Dataset {
    pub tables: Vec<AnnotatedTable>,
    pub split: DatasetSplit,
    pub tb: Vocabulary,
    pub kb: Vocabulary,
}

impl Dataset {
    pub fn load(dir: &Path) -> Result<Self> {
        Ok(Self {
            tables: io::load_jsonl(&dir.join(TABLES_FILE))?,
            split: io::load_json(&dir.join(SPLIT_FILE))?,
            tb: io::load_vocab(&dir.join(TB_VOCAB_FILE), VocabKind::Table)?,
            kb: io::load_vocab(&dir.join(KB_VOCAB_FILE), VocabKind::Kb)?,
        })
    }

    /// Tables whose ids are listed, in table order.
    pub fn subset(&self, ids: &[String]) -> Vec<AnnotatedTable> {
        let wanted: BTreeSet<&str> = ids.iter().map(String::as_str).collect();
        self.tables.iter().filter(|t| wanted.contains(t.table_id.as_str())).cloned().collect()
    }

    pub fn train(&self) -> Vec<AnnotatedTable> {
        self.subset(&self.split.train)
    }

    pub fn eval(&self, which: EvalSplit) -> Vec<AnnotatedTable> {
        match which {
            EvalSplit::Validation => self.subset(&self.split.validation),
            EvalSplit::Test => self.subset(&self.split.test),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BuildReport {
    pub raw_tables: usize,
    pub tables: usize,
    pub rejected: usize,
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

/// Annotates the corpus, splits it and writes the dataset directory.
pub fn build_dataset(cfg: &RunConfig, out: &Path) -> Result<BuildReport> {
    let graph = io::load_graph(&cfg.paths.graph)?;
    let entities = io::load_entities(&cfg.paths.entities)?;
    let linking = io::load_linking(&cfg.paths.url_to_mid, Some(&cfg.paths.entity_types), Some(&cfg.paths.fine_types))?;
    let raws = io::load_corpus(&cfg.paths.corpus)?;

    let type_freq = dataset::corpus_type_frequencies(&raws, &linking);
    let build = cfg.build_config();
    let ctx = BuildContext { graph: &graph, entity_meta: &entities, linking: &linking, type_freq: &type_freq, config: &build };
    let results: Vec<std::result::Result<AnnotatedTable, Rejection>> =
        raws.par_iter().map(|raw| dataset::annotate_table(raw, &ctx)).collect();

    let mut tables = Vec::new();
    let mut rejected = Vec::new();
    for (raw, r) in raws.iter().zip(results) {
        match r {
            Ok(t) => tables.push(t),
            Err(why) => rejected.push((raw.table_id.clone(), why)),
        }
    }
    let ids: Vec<String> = tables.iter().map(|t| t.table_id.clone()).collect();
    let split = dataset::split_dataset(&ids, cfg.seed);
    let seen: BTreeSet<&str> = split.train.iter().chain(&split.validation).map(String::as_str).collect();
    let (tb, kb) = build_vocab(tables.iter().filter(|t| seen.contains(t.table_id.as_str())));

    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    io::write_jsonl(&out.join(TABLES_FILE), &tables)?;
    io::write_json(&out.join(SPLIT_FILE), &split)?;
    io::write_vocab(&out.join(TB_VOCAB_FILE), &tb)?;
    io::write_vocab(&out.join(KB_VOCAB_FILE), &kb)?;
    write_lines(&out.join(TYPE_FREQ_FILE), type_freq.iter().map(|(t, n)| format!("{t}\t{n}")))?;
    write_lines(&out.join(REJECTED_FILE), rejected.iter().map(|(id, why)| format!("{id}\t{why}")))?;

    Ok(BuildReport {
        raw_tables: raws.len(),
        tables: tables.len(),
        rejected: rejected.len(),
        train: split.train.len(),
        validation: split.validation.len(),
        test: split.test.len(),
    })
}

fn write_lines<I: IntoIterator<Item = String>>(path: &Path, lines: I) -> Result<()> {
    let mut w = io::create(path)?;
    for line in lines {
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainReport {
    pub kind: SelectorKind,
    pub tables: usize,
    pub final_loss: Option<f64>,
}

/// Trains the configured selector on the training split.
pub fn train_selector(cfg: &RunConfig, out: &Path) -> Result<TrainReport> {
    let data = Dataset::load(&cfg.paths.dataset)?;
    let mut train = data.train();
    let (model, history) = match cfg.selector {
        SelectorKind::Oracle => return Err(Error::Core(tabcomplete_core::Error::Config("the oracle selector is not trained".into()))),
        SelectorKind::Random => (SelectorModel::Random(RandomScorer { seed: cfg.seed }), Vec::new()),
        SelectorKind::Jacsim => (SelectorModel::JacSim(JacSimScorer), Vec::new()),
        SelectorKind::Linear => {
            dataset::pad_negatives(&mut train, cfg.k, cfg.seed)?;
            let (m, h) = LinearScorer::train(&train, data.tb.clone(), data.kb.clone(), &cfg.linear)?;
            (SelectorModel::Linear(m), h)
        }
        SelectorKind::Embedding => {
            dataset::pad_negatives(&mut train, cfg.k, cfg.seed)?;
            let (m, h) = EmbeddingScorer::train(&train, data.tb.clone(), data.kb.clone(), &cfg.embedding)?;
            (SelectorModel::Embedding(m), h)
        }
    };
    SelectorFile::new(model).save(out)?;
    Ok(TrainReport { kind: cfg.selector, tables: train.len(), final_loss: history.last().copied() })
}

#[derive(Debug, Clone, Serialize)]
pub struct RankerReport {
    pub groups: usize,
    pub trees: usize,
}

/// Trains LambdaMART on the training split.
pub fn train_ranker_cmd(cfg: &RunConfig, out: &Path) -> Result<RankerReport> {
    let data = Dataset::load(&cfg.paths.dataset)?;
    let kb = KnowledgeBase::load(cfg)?;
    let groups = training_groups(&kb.resources(), &data.train(), cfg.budget);
    let model = train_ranker(&groups, &cfg.ranker)?;
    let report = RankerReport { groups: groups.len(), trees: model.trees.len() };
    RankerFile::new(model).save(out)?;
    Ok(report)
}

/// Either a scorer from a model file or the oracle.
pub enum Selector {
    Oracle,
    Scored(Box<ScorerSelector<SelectorModel>>),
}

impl ChainSelector for Selector {
    fn select(&self, table: &AnnotatedTable, candidates: &[ChainPair]) -> tabcomplete_core::Result<ChainPair> {
        match self {
            Selector::Oracle => OracleSelector.select(table, candidates),
            Selector::Scored(s) => s.select(table, candidates),
        }
    }
}

fn selector_model(cfg: &RunConfig) -> Result<Option<SelectorFile>> {
    let model = match cfg.selector {
        SelectorKind::Oracle => return Ok(None),
        SelectorKind::Random => SelectorFile::new(SelectorModel::Random(RandomScorer { seed: cfg.seed })),
        SelectorKind::Jacsim => SelectorFile::new(SelectorModel::JacSim(JacSimScorer)),
        SelectorKind::Linear | SelectorKind::Embedding => {
            let file = SelectorFile::load(&cfg.paths.selector_model)?;
            let matches = matches!(
                (&file.model, cfg.selector),
                (SelectorModel::Linear(_), SelectorKind::Linear) | (SelectorModel::Embedding(_), SelectorKind::Embedding)
            );
            if !matches {
                return Err(Error::Core(tabcomplete_core::Error::Config(format!(
                    "{} holds a different selector than the configured {:?}",
                    cfg.paths.selector_model.display(),
                    cfg.selector
                ))));
            }
            file
        }
    };
    Ok(Some(model))
}

fn tuple_ranker(cfg: &RunConfig) -> Result<RankerModel> {
    match cfg.tuple_ranking {
        TupleRanking::Lambdamart => Ok(RankerFile::load(&cfg.paths.ranker_model)?.model),
        TupleRanking::None => Ok(RankerModel::constant(FEATURE_COUNT)),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoreColumnReport {
    pub p1: CoreColumnSummary,
    pub full: CoreColumnSummary,
}

impl CoreColumnReport {
    pub fn of(runs: &[QueryRun]) -> Self {
        Self { p1: core_column_eval(runs, CoreColumnMode::P1), full: core_column_eval(runs, CoreColumnMode::Full) }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub selector: SelectorKind,
    pub split: EvalSplit,
    pub tables: usize,
    /// Share of tables whose selected chain is annotated positive.
    pub accuracy_at_1: Option<f64>,
    /// Expected accuracy of a uniform random pick.
    pub random_expectation: Option<f64>,
    pub summary: MetricSummary,
    pub core_column: CoreColumnReport,
}

/// Runs every row of every evaluation table as the example row.
pub fn evaluate(cfg: &RunConfig, out: &Path) -> Result<EvalReport> {
    let data = Dataset::load(&cfg.paths.dataset)?;
    let kb = KnowledgeBase::load(cfg)?;
    let selector = match selector_model(cfg)? {
        None => Selector::Oracle,
        Some(file) => {
            file.check_vocab(&data.tb, &data.kb)?;
            Selector::Scored(Box::new(ScorerSelector(file.model)))
        }
    };
    let ranker = tuple_ranker(cfg)?;
    let tables = data.eval(cfg.eval_split);
    let res = kb.resources();
    let runs: Vec<QueryRun> = tables
        .par_iter()
        .map(|t| run_table(t, &selector, &ranker, &res, &cfg.budget))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();

    let report = EvalReport {
        selector: cfg.selector,
        split: cfg.eval_split,
        tables: tables.len(),
        accuracy_at_1: accuracy_at_1(&tables, &selector),
        random_expectation: random_accuracy_expectation(&tables),
        summary: summarize(&runs),
        core_column: CoreColumnReport::of(&runs),
    };
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    io::write_jsonl(&out.join(RUNS_FILE), &runs)?;
    io::write_json(&out.join(SUMMARY_FILE), &report)?;
    write_metrics_csv(&out.join(METRICS_CSV_FILE), &report)?;
    Ok(report)
}

fn write_metrics_csv(path: &Path, report: &EvalReport) -> Result<()> {
    let s = &report.summary;
    let mut lines = vec!["metric,p25,p50,mean,p75".to_string()];
    let metrics = [
        ("tuple_recall", s.tuple_recall),
        ("ndcg", s.ndcg),
        ("p_at_1", s.p_at_1),
        ("c1_recall_p1", report.core_column.p1.c1_recall),
        ("c1_recall_full", report.core_column.full.c1_recall),
    ];
    for (name, p) in metrics {
        lines.push(match p {
            Some(p) => format!("{name},{},{},{},{}", p.p25, p.p50, p.mean, p.p75),
            None => format!("{name},,,,"),
        });
    }
    write_lines(path, lines)
}

/// Core-column recall from a previous evaluation's runs.
pub fn core_column_from(runs_path: &Path, out: &Path) -> Result<CoreColumnReport> {
    let runs: Vec<QueryRun> = io::load_jsonl(runs_path)?;
    let report = CoreColumnReport::of(&runs);
    io::write_json(out, &report)?;
    Ok(report)
}

/// A tabular query with pre-linked entities.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompletionQuery {
    pub se: String,
    /// Query description; the subject's name is removed from it.
    #[serde(default)]
    pub qd: Option<String>,
    /// Query intent string, used as is.
    #[serde(default)]
    pub qis: Option<String>,
    pub cn1: String,
    pub cn2: String,
    pub er1: String,
    pub er2: String,
    /// Subject entity type tokens.
    #[serde(default)]
    pub set: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Completion {
    pub chain: ChainPair,
    pub candidates: usize,
    pub rows: Vec<(String, String, f64)>,
}

impl Completion {
    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "c1\tc2\tscore")?;
        for (a, b, s) in &self.rows {
            writeln!(w, "{a}\t{b}\t{s}")?;
        }
        Ok(())
    }
}

fn entity(g: &KnowledgeGraph, mid: &str) -> Result<EntityId> {
    Ok(g.entity(mid)?)
}

/// Generates candidate chains from the example row, selects one, executes
/// it and ranks the result with the example row removed.
pub fn complete(cfg: &RunConfig, kb: &KnowledgeBase, query: &CompletionQuery) -> Result<Completion> {
    let g = &kb.graph;
    let se = entity(g, &query.se)?;
    let er = (entity(g, &query.er1)?, entity(g, &query.er2)?);
    let qis = match (&query.qis, &query.qd) {
        (Some(qis), _) => build_qis(qis, "", ""),
        (None, Some(qd)) => build_qis(qd, "", &kb.entities.get(&query.se).name),
        (None, None) => return Err(Error::Missing("query needs qd or qis")),
    };
    let table = AnnotatedTable {
        table_id: "query".into(),
        se: query.se.clone(),
        se_name: kb.entities.get(&query.se).name.clone(),
        qis,
        cn1: normalize_column_name(&query.cn1),
        cn2: normalize_column_name(&query.cn2),
        set_tokens: query.set.iter().flat_map(|s| text::tokenize(s)).collect(),
        rr: vec![(query.er1.clone(), query.er2.clone())],
        chains: Vec::new(),
    };

    let search = PathSearch {
        max_len: cfg.search.max_len,
        degree_cap: cfg.search.degree_cap,
        banned_prefixes: &cfg.search.banned_prefixes,
    };
    let no_chain = || Error::NoConnectingChain(cfg.search.max_len);
    if se == er.0 || er.0 == er.1 {
        return Err(no_chain());
    }
    let p1s = enumerate_simple_paths(g, se, er.0, &search)?;
    let p2s = enumerate_simple_paths(g, er.0, er.1, &search)?;
    let cc_er: Vec<ChainPair> = join_chains(g, se, &p1s, &p2s)?.into_iter().collect();
    if cc_er.is_empty() {
        return Err(no_chain());
    }

    let chain = match selector_model(cfg)? {
        None => return Err(Error::Core(tabcomplete_core::Error::Config("the oracle selector needs annotated chains".into()))),
        Some(file) => select_top1(&file.model, &QueryContext::from_table(&table), &cc_er)?,
    };
    let ranker = tuple_ranker(cfg)?;
    let ct = execute_chain(g, se, &chain, &cfg.budget)?;
    let cands: Vec<(EntityId, EntityId)> = ct.into_iter().filter(|c| *c != er).collect();
    let features = featurize_candidates(&kb.resources(), &table, &chain, er, &cands);
    let rows_f: Vec<&[f64]> = features.iter().map(|f| f.values()).collect();
    let order = rank(&ranker, &rows_f, &cands);
    let rows = order
        .into_iter()
        .map(|i| {
            let (a, b) = cands[i];
            (g.entity_name(a).to_string(), g.entity_name(b).to_string(), ranker.predict(rows_f[i]))
        })
        .collect();
    Ok(Completion { chain, candidates: cc_er.len(), rows })
}

pub fn sparql(se: &str, chain: &str) -> Result<String> {
    Ok(render_sparql(se, &ChainPair::parse(chain)?))
}

pub const SYNTHETIC_CONFIG_FILE: &str = "config.json";

/// Writes a synthetic knowledge base, corpus and a config pointing at them.
pub fn gen_synthetic(cfg: &RunConfig, dir: &Path) -> Result<()> {
    let mut world_cfg = cfg.synthetic.clone();
    world_cfg.seed = cfg.seed;
    let world = synthetic::world(&world_cfg);
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut out = RunConfig::default();
    out.paths.graph = "triples.tsv".into();
    out.paths.entities = "entities.jsonl".into();
    out.paths.predicates = "predicates.jsonl".into();
    out.paths.corpus = "corpus.jsonl".into();
    out.paths.url_to_mid = "url_to_mid.tsv".into();
    out.paths.entity_types = "entity_types.tsv".into();
    out.paths.fine_types = "fine_types.tsv".into();
    out.paths.embeddings = "embeddings.txt".into();
    out.synthetic = world_cfg;
    out.seed = cfg.seed;
    out.embedding.seed = cfg.seed;

    io::write_triples(&dir.join(&out.paths.graph), world.triples.iter().map(|(s, p, o)| (s.as_str(), p.as_str(), o.as_str())))?;
    io::write_jsonl(&dir.join(&out.paths.entities), &world.entities)?;
    io::write_jsonl(&dir.join(&out.paths.predicates), &world.predicates)?;
    io::write_jsonl(&dir.join(&out.paths.corpus), &world.corpus)?;
    io::write_linking(
        &world.linking,
        &dir.join(&out.paths.url_to_mid),
        &dir.join(&out.paths.entity_types),
        &dir.join(&out.paths.fine_types),
    )?;
    io::write_embeddings(&dir.join(&out.paths.embeddings), &world.embeddings)?;
    io::write_json(&dir.join(SYNTHETIC_CONFIG_FILE), &out)
}
