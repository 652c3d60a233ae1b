use alloc::borrow::Cow;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::PredicateToken;
use crate::text::{token_set, tokenize};

/// Tokens that carry no type information in predicate prefixes.
pub const GENERIC_TYPE_TOKENS: [&str; 3] = ["base", "common", "type"];

/// One line of the entity metadata file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntityRecord {
    pub mid: String,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub notable_types: Vec<String>,
    #[serde(default)]
    pub rdf_types: Vec<String>,
}

/// One line of the predicate metadata file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredicateRecord {
    pub name: String,
    #[serde(default)]
    pub expected_target_types: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EntityMeta {
    pub name: String,
    pub description: Vec<String>,
    pub notable_types: BTreeSet<String>,
    pub rdf_types: BTreeSet<String>,
}

impl EntityMeta {
    pub fn from_record(record: &EntityRecord) -> Self {
        Self {
            name: record.name.clone(),
            description: tokenize(&record.description),
            notable_types: token_set(&record.notable_types),
            rdf_types: token_set(&record.rdf_types),
        }
    }

    pub fn description_set(&self) -> BTreeSet<String> {
        self.description.iter().cloned().collect()
    }
}

/// Entity metadata keyed by external identifier. Unknown entities read as
/// empty metadata.
#[derive(Debug, Clone, Default)]
pub struct EntityMetaStore {
    entries: BTreeMap<String, EntityMeta>,
    empty: EntityMeta,
}

impl EntityMetaStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, record: &EntityRecord) {
        self.entries
            .insert(record.mid.clone(), EntityMeta::from_record(record));
    }

    pub fn get(&self, mid: &str) -> &EntityMeta {
        self.entries.get(mid).unwrap_or(&self.empty)
    }

    pub fn contains(&self, mid: &str) -> bool {
        self.entries.contains_key(mid)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl<'a> FromIterator<&'a EntityRecord> for EntityMetaStore {
    fn from_iter<T: IntoIterator<Item = &'a EntityRecord>>(iter: T) -> Self {
        let mut store = Self::new();
        for r in iter {
            store.insert(r);
        }
        store
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PredicateMeta {
    pub src_type: BTreeSet<String>,
    pub tgt_types: BTreeSet<String>,
}

impl PredicateMeta {
    pub fn derived(name: &str) -> Self {
        Self {
            src_type: source_type_tokens(name),
            tgt_types: BTreeSet::new(),
        }
    }
}

/// Source type tokens of a predicate: drop the last dot-separated segment,
/// split the rest, drop generic tokens.
/// `tv.tv_actor.starring_roles` gives `{tv, actor}`.
pub fn source_type_tokens(predicate: &str) -> BTreeSet<String> {
    let prefix = match predicate.rfind('.') {
        Some(at) => &predicate[..at],
        None => "",
    };
    tokenize(prefix)
        .into_iter()
        .filter(|t| !GENERIC_TYPE_TOKENS.contains(&t.as_str()))
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct PredicateMetaStore {
    entries: BTreeMap<String, PredicateMeta>,
}

impl PredicateMetaStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records for the same predicate are merged; expected types union.
    pub fn insert(&mut self, record: &PredicateRecord) {
        let entry = self
            .entries
            .entry(record.name.clone())
            .or_insert_with(|| PredicateMeta::derived(&record.name));
        entry.tgt_types.extend(token_set(&record.expected_target_types));
    }

    pub fn get(&self, name: &str) -> Cow<'_, PredicateMeta> {
        match self.entries.get(name) {
            Some(meta) => Cow::Borrowed(meta),
            None => Cow::Owned(PredicateMeta::derived(name)),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Type tokens of the node a traversal of `token` starts from. An inverse
    /// token starts at the predicate's object, so the roles swap.
    pub fn traversal_source(&self, token: &PredicateToken) -> BTreeSet<String> {
        let meta = self.get(token.name());
        if token.is_inverse() {
            meta.tgt_types.clone()
        } else {
            meta.src_type.clone()
        }
    }

    /// Type tokens of the node a traversal of `token` ends at.
    pub fn traversal_target(&self, token: &PredicateToken) -> BTreeSet<String> {
        let meta = self.get(token.name());
        if token.is_inverse() {
            meta.src_type.clone()
        } else {
            meta.tgt_types.clone()
        }
    }
}

impl<'a> FromIterator<&'a PredicateRecord> for PredicateMetaStore {
    fn from_iter<T: IntoIterator<Item = &'a PredicateRecord>>(iter: T) -> Self {
        let mut store = Self::new();
        for r in iter {
            store.insert(r);
        }
        store
    }
}
