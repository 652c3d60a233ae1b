//! Trained model files.
//!
//! A selector file stores the vocabulary fingerprints next to the model so
//! a model is never applied to a dataset built with different vocabularies.
//! A ranker file stores the feature names it was trained on.

use std::path::Path;

use serde::{Deserialize, Serialize};
use tabcomplete_core::dataset::Vocabulary;
use tabcomplete_core::ranker::{RankerModel, FEATURE_COUNT, FEATURE_NAMES};
use tabcomplete_core::selector::SelectorModel;

use crate::error::{Error, Result};
use crate::io;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectorFile {
    pub format_version: u32,
    /// Absent for scorers that use no vocabulary.
    pub tb_fingerprint: Option<u64>,
    pub kb_fingerprint: Option<u64>,
    pub model: SelectorModel,
}

impl SelectorFile {
    pub fn new(model: SelectorModel) -> Self {
        let (tb, kb) = match &model {
            SelectorModel::Linear(m) => (Some(m.tb.fingerprint()), Some(m.kb.fingerprint())),
            SelectorModel::Embedding(m) => (Some(m.tb.fingerprint()), Some(m.kb.fingerprint())),
            SelectorModel::Random(_) | SelectorModel::JacSim(_) => (None, None),
        };
        Self { format_version: FORMAT_VERSION, tb_fingerprint: tb, kb_fingerprint: kb, model }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        io::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file: SelectorFile = io::load_json(path)?;
        if file.format_version != FORMAT_VERSION {
            return Err(Error::ModelVersion(file.format_version));
        }
        Ok(file)
    }

    /// Fails when the model was trained with other vocabularies.
    pub fn check_vocab(&self, tb: &Vocabulary, kb: &Vocabulary) -> Result<()> {
        for (what, stored, vocab) in [("table", self.tb_fingerprint, tb), ("knowledge-base", self.kb_fingerprint, kb)] {
            if let Some(expected) = stored {
                let found = vocab.fingerprint();
                if found != expected {
                    return Err(Error::VocabMismatch { what, expected, found });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankerFile {
    pub format_version: u32,
    pub feature_names: Vec<String>,
    pub model: RankerModel,
}

impl RankerFile {
    pub fn new(model: RankerModel) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            model,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        io::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file: RankerFile = io::load_json(path)?;
        if file.format_version != FORMAT_VERSION {
            return Err(Error::ModelVersion(file.format_version));
        }
        if file.feature_names != FEATURE_NAMES || file.model.feature_count != FEATURE_COUNT {
            return Err(Error::Core(tabcomplete_core::Error::Config(
                "ranker was trained on a different feature set".into(),
            )));
        }
        Ok(file)
    }
}
