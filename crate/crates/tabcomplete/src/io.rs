//! Readers and writers for the on-disk formats.
//!
//! * triples: tab-separated `subject predicate object`, `#` comments
//! * entity and predicate metadata, corpus and dataset tables: JSON lines
//! * linking data: tab-separated two-column files
//! * word vectors: `token v1 ... vD` per line
//! * vocabularies: one token per line, line number = index

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tabcomplete_core::dataset::{Cell, LinkingData, RawTable, VocabKind, Vocabulary, OOV_TOKEN};
use tabcomplete_core::graph::{EntityMetaStore, EntityRecord, PredicateMetaStore, PredicateRecord};
use tabcomplete_core::ranker::{FeatureVector, PretrainedEmbeddings, FEATURE_NAMES};
use tabcomplete_core::{GraphBuilder, KnowledgeGraph};

use crate::error::{Error, Result};

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn content_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        out.push((i + 1, trimmed.to_string()));
    }
    Ok(out)
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, message: message.into() }
}

pub fn load_graph(path: &Path) -> Result<KnowledgeGraph> {
    let mut builder = GraphBuilder::new();
    for (n, line) in content_lines(path)? {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(parse_err(path, n, format!("expected 3 tab-separated fields, found {}", fields.len())));
        }
        builder
            .add(fields[0].trim(), fields[1].trim(), fields[2].trim())
            .map_err(|e| parse_err(path, n, e.to_string()))?;
    }
    Ok(builder.build())
}

pub fn write_triples<'a, I>(path: &Path, triples: I) -> Result<()>
where
    I: IntoIterator<Item = (&'a str, &'a str, &'a str)>,
{
    let mut w = create(path)?;
    for (s, p, o) in triples {
        writeln!(w, "{s}\t{p}\t{o}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    content_lines(path)?
        .into_iter()
        .map(|(n, line)| serde_json::from_str(&line).map_err(|e| parse_err(path, n, e.to_string())))
        .collect()
}

pub fn write_jsonl<'a, T: Serialize + 'a, I: IntoIterator<Item = &'a T>>(path: &Path, items: I) -> Result<()> {
    let mut w = create(path)?;
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| Error::json(path, e))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_reader(open(path)?).map_err(|e| Error::json(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::json(path, e))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_entities(path: &Path) -> Result<EntityMetaStore> {
    let records: Vec<EntityRecord> = load_jsonl(path)?;
    Ok(records.iter().collect())
}

pub fn load_predicates(path: &Path) -> Result<PredicateMetaStore> {
    let records: Vec<PredicateRecord> = load_jsonl(path)?;
    Ok(records.iter().collect())
}

/// A corpus cell may carry a single `url` or a list of `urls`.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CellRecord {
    #[serde(default)]
    text: String,
    #[serde(default)]
    url: Option<String>,
    #[serde(default)]
    urls: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TableRecord {
    table_id: String,
    #[serde(default)]
    page_title: String,
    #[serde(default)]
    caption: String,
    headers: Vec<String>,
    rows: Vec<Vec<CellRecord>>,
    #[serde(default)]
    subject: Option<String>,
}

impl From<TableRecord> for RawTable {
    fn from(r: TableRecord) -> Self {
        RawTable {
            table_id: r.table_id,
            page_title: r.page_title,
            caption: r.caption,
            headers: r.headers,
            rows: r
                .rows
                .into_iter()
                .map(|row| {
                    row.into_iter()
                        .map(|c| {
                            let mut urls = Vec::with_capacity(c.urls.len() + 1);
                            urls.extend(c.url);
                            urls.extend(c.urls);
                            Cell { text: c.text, urls }
                        })
                        .collect()
                })
                .collect(),
            subject: r.subject,
        }
    }
}

pub fn load_corpus(path: &Path) -> Result<Vec<RawTable>> {
    let records: Vec<TableRecord> = load_jsonl(path)?;
    Ok(records.into_iter().map(RawTable::from).collect())
}

fn load_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    content_lines(path)?
        .into_iter()
        .map(|(n, line)| match line.split_once('\t') {
            Some((a, b)) if !a.is_empty() && !b.is_empty() => Ok((a.to_string(), b.to_string())),
            _ => Err(parse_err(path, n, "expected two tab-separated fields")),
        })
        .collect()
}

fn write_pairs<'a, I: IntoIterator<Item = (&'a str, &'a str)>>(path: &Path, pairs: I) -> Result<()> {
    let mut w = create(path)?;
    for (a, b) in pairs {
        writeln!(w, "{a}\t{b}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn multimap(pairs: Vec<(String, String)>) -> BTreeMap<String, Vec<String>> {
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (k, v) in pairs {
        out.entry(k).or_default().push(v);
    }
    out
}

/// `url_to_mid` is required; the type files are optional.
pub fn load_linking(url_to_mid: &Path, entity_types: Option<&Path>, fine_types: Option<&Path>) -> Result<LinkingData> {
    let mut data = LinkingData::default();
    for (url, mid) in load_pairs(url_to_mid)? {
        data.url_to_mid.entry(url).or_insert(mid);
    }
    if let Some(p) = entity_types {
        data.entity_types = multimap(load_pairs(p)?);
    }
    if let Some(p) = fine_types {
        data.fine_types = multimap(load_pairs(p)?);
    }
    Ok(data)
}

pub fn write_linking(data: &LinkingData, url_to_mid: &Path, entity_types: &Path, fine_types: &Path) -> Result<()> {
    write_pairs(url_to_mid, data.url_to_mid.iter().map(|(a, b)| (a.as_str(), b.as_str())))?;
    let flat = |m: &BTreeMap<String, Vec<String>>| -> Vec<(String, String)> {
        m.iter().flat_map(|(k, vs)| vs.iter().map(move |v| (k.clone(), v.clone()))).collect()
    };
    let et = flat(&data.entity_types);
    write_pairs(entity_types, et.iter().map(|(a, b)| (a.as_str(), b.as_str())))?;
    let ft = flat(&data.fine_types);
    write_pairs(fine_types, ft.iter().map(|(a, b)| (a.as_str(), b.as_str())))
}

/// Word vectors; the first vector fixes the dimension.
pub fn load_embeddings(path: &Path) -> Result<PretrainedEmbeddings> {
    let mut out: Option<PretrainedEmbeddings> = None;
    for (n, line) in content_lines(path)? {
        let mut parts = line.split_whitespace();
        let token = parts.next().ok_or_else(|| parse_err(path, n, "empty line"))?;
        let values: Vec<f64> = parts
            .map(|v| v.parse::<f64>().map_err(|e| parse_err(path, n, format!("{v:?}: {e}"))))
            .collect::<Result<_>>()?;
        let emb = out.get_or_insert_with(|| PretrainedEmbeddings::new(values.len()));
        emb.insert(token.to_string(), values)
            .map_err(|e| parse_err(path, n, e.to_string()))?;
    }
    Ok(out.unwrap_or_default())
}

pub fn write_embeddings(path: &Path, vectors: &[(String, Vec<f64>)]) -> Result<()> {
    let mut w = create(path)?;
    for (token, v) in vectors {
        write!(w, "{token}").map_err(|e| Error::io(path, e))?;
        for x in v {
            write!(w, " {x}").map_err(|e| Error::io(path, e))?;
        }
        writeln!(w).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One token per line, starting with the OOV marker.
pub fn write_vocab(path: &Path, vocab: &Vocabulary) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{OOV_TOKEN}").map_err(|e| Error::io(path, e))?;
    for t in vocab.tokens() {
        writeln!(w, "{t}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_vocab(path: &Path, kind: VocabKind) -> Result<Vocabulary> {
    let mut tokens = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if i == 0 {
            if line != OOV_TOKEN {
                return Err(parse_err(path, 1, format!("first line must be {OOV_TOKEN}")));
            }
            continue;
        }
        tokens.push(line);
    }
    Ok(Vocabulary::from_tokens(kind, tokens))
}

/// Feature dump with the frozen column names.
pub fn write_feature_csv<W: Write>(mut w: W, rows: &[(String, String, bool, FeatureVector)]) -> std::io::Result<()> {
    write!(w, "c1,c2,relevant")?;
    for name in FEATURE_NAMES {
        write!(w, ",{name}")?;
    }
    writeln!(w)?;
    for (c1, c2, rel, f) in rows {
        write!(w, "{c1},{c2},{}", u8::from(*rel))?;
        for v in f.values() {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}
