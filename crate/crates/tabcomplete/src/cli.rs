//! Command-line driver.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use crate::config::{describe_defaults, RunConfig, SelectorKind};
use crate::error::{Error, Result};
use crate::io;
use crate::pipeline::{self, CompletionQuery, KnowledgeBase};

#[derive(Debug, Parser)]
#[command(name = "tabcomplete", version, about = "Complete two-column tables from one example row over a knowledge graph")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration; every key is optional.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the configured worker count (0 = all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file or directory of the subcommand.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Annotate the corpus and write the dataset directory.
    BuildDataset,
    /// Train the chain selector on the training split.
    TrainSelector {
        #[arg(long, value_enum)]
        selector: Option<SelectorKind>,
    },
    /// Train the tuple ranker on the training split.
    TrainRanker,
    /// Run the end-to-end evaluation on the held-out split.
    Evaluate {
        #[arg(long, value_enum)]
        selector: Option<SelectorKind>,
    },
    /// Column-1 recall of the first segment against the full chain.
    CoreColumnEval {
        /// Runs file of a previous evaluation.
        #[arg(long)]
        runs: Option<PathBuf>,
    },
    /// Complete one tabular query.
    Complete {
        /// Query JSON: se, qd or qis, cn1, cn2, er1, er2 and optionally set.
        query: PathBuf,
        #[arg(long, value_enum)]
        selector: Option<SelectorKind>,
    },
    /// Print the SPARQL text of a chain.
    RenderSparql {
        /// Subject entity id.
        #[arg(long)]
        se: String,
        /// Chain as `p1 / p2`, tokens joined with `/` inside a segment.
        #[arg(long)]
        chain: String,
    },
    /// Write a synthetic knowledge base and corpus.
    GenSynthetic,
}

fn command() -> clap::Command {
    let keys = format!("Configuration keys and defaults:\n{}", describe_defaults());
    Cli::command().after_help(keys)
}

pub fn parse_from<I, T>(args: I) -> std::result::Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let matches = command().try_get_matches_from(args)?;
    Cli::from_arg_matches(&matches)
}

fn config(common: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        cfg.set_seed(seed);
    }
    if let Some(t) = common.threads {
        cfg.threads = t;
    }
    Ok(cfg)
}

fn emit<T: serde::Serialize>(value: &T) {
    if let Ok(text) = serde_json::to_string_pretty(value) {
        println!("{text}");
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = config(&cli.common)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Core(tabcomplete_core::Error::Config(e.to_string())))?;
    let out = cli.common.output.clone();
    pool.install(|| match cli.command {
        Command::BuildDataset => {
            let dir = out.unwrap_or_else(|| cfg.paths.dataset.clone());
            emit(&pipeline::build_dataset(&cfg, &dir)?);
            Ok(())
        }
        Command::TrainSelector { selector } => {
            if let Some(s) = selector {
                cfg.selector = s;
            }
            let path = out.unwrap_or_else(|| cfg.paths.selector_model.clone());
            emit(&pipeline::train_selector(&cfg, &path)?);
            Ok(())
        }
        Command::TrainRanker => {
            let path = out.unwrap_or_else(|| cfg.paths.ranker_model.clone());
            emit(&pipeline::train_ranker_cmd(&cfg, &path)?);
            Ok(())
        }
        Command::Evaluate { selector } => {
            if let Some(s) = selector {
                cfg.selector = s;
            }
            let dir = out.unwrap_or_else(|| cfg.paths.reports.clone());
            emit(&pipeline::evaluate(&cfg, &dir)?);
            Ok(())
        }
        Command::CoreColumnEval { runs } => {
            let runs = runs.unwrap_or_else(|| cfg.paths.reports.join(pipeline::RUNS_FILE));
            let path = out.unwrap_or_else(|| cfg.paths.reports.join(pipeline::CORE_COLUMN_FILE));
            emit(&pipeline::core_column_from(&runs, &path)?);
            Ok(())
        }
        Command::Complete { query, selector } => {
            if let Some(s) = selector {
                cfg.selector = s;
            }
            let query: CompletionQuery = io::load_json(&query)?;
            let kb = KnowledgeBase::load(&cfg)?;
            let done = pipeline::complete(&cfg, &kb, &query)?;
            eprintln!("chain: {} ({} candidates)", done.chain, done.candidates);
            write_output(out.as_deref(), |w| done.write_tsv(w))
        }
        Command::RenderSparql { se, chain } => {
            let text = pipeline::sparql(&se, &chain)?;
            write_output(out.as_deref(), |w| w.write_all(text.as_bytes()))
        }
        Command::GenSynthetic => {
            let dir = out.unwrap_or_else(|| PathBuf::from("data"));
            pipeline::gen_synthetic(&cfg, &dir)
        }
    })
}

fn write_output<F>(path: Option<&Path>, f: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            let mut w = io::create(p)?;
            f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(p, e))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock).and_then(|_| lock.flush()).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

pub fn main() -> ExitCode {
    let cli = match parse_from(std::env::args_os()) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
