//! Run configuration: one JSON file, every key optional, unknown keys
//! rejected. Relative paths resolve against the directory of the config
//! file (or the working directory when no file is given).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use tabcomplete_core::dataset::{BuildConfig, DEFAULT_K};
use tabcomplete_core::path::{default_banned_prefixes, DEFAULT_DEGREE_CAP, MAX_SEGMENT_LEN};
use tabcomplete_core::ranker::RankerConfig;
use tabcomplete_core::selector::{EmbeddingConfig, LinearConfig};
use tabcomplete_core::synthetic::WorldConfig;
use tabcomplete_core::QueryBudget;

use crate::error::Result;
use crate::io;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub graph: PathBuf,
    pub entities: PathBuf,
    pub predicates: PathBuf,
    pub corpus: PathBuf,
    pub url_to_mid: PathBuf,
    pub entity_types: PathBuf,
    pub fine_types: PathBuf,
    pub embeddings: PathBuf,
    pub dataset: PathBuf,
    pub selector_model: PathBuf,
    pub ranker_model: PathBuf,
    pub reports: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            graph: "data/triples.tsv".into(),
            entities: "data/entities.jsonl".into(),
            predicates: "data/predicates.jsonl".into(),
            corpus: "data/corpus.jsonl".into(),
            url_to_mid: "data/url_to_mid.tsv".into(),
            entity_types: "data/entity_types.tsv".into(),
            fine_types: "data/fine_types.tsv".into(),
            embeddings: "data/embeddings.txt".into(),
            dataset: "out/dataset".into(),
            selector_model: "out/selector.json".into(),
            ranker_model: "out/ranker.json".into(),
            reports: "out/reports".into(),
        }
    }
}

impl Paths {
    fn resolve(&mut self, base: &Path) {
        for p in [
            &mut self.graph,
            &mut self.entities,
            &mut self.predicates,
            &mut self.corpus,
            &mut self.url_to_mid,
            &mut self.entity_types,
            &mut self.fine_types,
            &mut self.embeddings,
            &mut self.dataset,
            &mut self.selector_model,
            &mut self.ranker_model,
            &mut self.reports,
        ] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Maximum edges per segment (1 to 3).
    pub max_len: usize,
    pub degree_cap: usize,
    pub banned_prefixes: Vec<String>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            max_len: MAX_SEGMENT_LEN,
            degree_cap: DEFAULT_DEGREE_CAP,
            banned_prefixes: default_banned_prefixes(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SelectorKind {
    Oracle,
    Random,
    Jacsim,
    Linear,
    Embedding,
}

impl SelectorKind {
    pub fn is_trained(self) -> bool {
        matches!(self, SelectorKind::Linear | SelectorKind::Embedding)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TupleRanking {
    /// Rank with the trained LambdaMART model.
    Lambdamart,
    /// Keep retrieval order.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalSplit {
    Validation,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub search: SearchConfig,
    pub budget: QueryBudget,
    /// Chains per training table (one positive, `k - 1` negatives).
    pub k: usize,
    pub selector: SelectorKind,
    pub tuple_ranking: TupleRanking,
    pub eval_split: EvalSplit,
    pub linear: LinearConfig,
    /// `embedding.seed` is replaced by the top-level seed.
    pub embedding: EmbeddingConfig,
    pub ranker: RankerConfig,
    pub synthetic: WorldConfig,
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            paths: Paths::default(),
            search: SearchConfig::default(),
            budget: QueryBudget::default(),
            k: DEFAULT_K,
            selector: SelectorKind::Embedding,
            tuple_ranking: TupleRanking::Lambdamart,
            eval_split: EvalSplit::Test,
            linear: LinearConfig::default(),
            embedding: EmbeddingConfig::default(),
            ranker: RankerConfig::default(),
            synthetic: WorldConfig::default(),
            seed: 0,
            threads: 0,
        }
    }
}

impl RunConfig {
    /// Reads `path` if given, resolves relative paths and applies the seed.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let (mut cfg, base) = match path {
            Some(p) => {
                let cfg: RunConfig = io::load_json(p)?;
                let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
                (cfg, base)
            }
            None => (RunConfig::default(), PathBuf::new()),
        };
        let base = if base.as_os_str().is_empty() { PathBuf::from(".") } else { base };
        cfg.paths.resolve(&base);
        cfg.set_seed(cfg.seed);
        Ok(cfg)
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.embedding.seed = seed;
    }

    pub fn build_config(&self) -> BuildConfig {
        BuildConfig {
            max_len: self.search.max_len,
            degree_cap: self.search.degree_cap,
            banned_prefixes: self.search.banned_prefixes.clone(),
            budget: self.budget,
        }
    }
}

/// `key = default` for every leaf of the default configuration.
pub fn describe_defaults() -> String {
    let value = serde_json::to_value(RunConfig::default()).expect("default config serializes");
    let mut lines = Vec::new();
    flatten("", &value, &mut lines);
    lines.join("\n")
}

fn flatten(prefix: &str, value: &Value, out: &mut Vec<String>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        other => out.push(format!("  {prefix} = {other}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let text = serde_json::to_string(&RunConfig::default()).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, RunConfig::default());
        let empty: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(empty, RunConfig::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"kk": 3}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"ranker": {"tres": 3}}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"budget": {"max_rows": 3, "x": 1}}"#).is_err());
    }

    #[test]
    fn partial_sections_keep_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"ranker": {"trees": 7}, "k": 4}"#).unwrap();
        assert_eq!(cfg.ranker.trees, 7);
        assert_eq!(cfg.ranker.max_depth, RankerConfig::default().max_depth);
        assert_eq!(cfg.k, 4);
    }

    #[test]
    fn every_leaf_is_described() {
        let text = describe_defaults();
        for key in ["paths.graph", "search.degree_cap", "budget.max_steps", "k", "embedding.margin", "ranker.trees", "seed"] {
            assert!(text.contains(&format!("  {key} = ")), "{key}");
        }
    }
}
