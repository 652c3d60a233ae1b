//! Deterministic synthetic data.
//!
//! [`selector_corpus`] produces annotated tables directly, for exercising
//! chain selectors. [`world`] produces a complete small knowledge graph with
//! metadata, a web-table corpus, linking files and word vectors, so the
//! whole pipeline can run end to end.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{AnnotatedTable, Cell, Label, LabeledChain, LinkingData, RawTable};
use crate::graph::{EntityRecord, PredicateRecord};
use crate::path::ChainPair;

const KEYWORDS: [&str; 16] = [
    "actor", "album", "player", "river", "species", "novel", "election", "building", "airline", "dish", "planet",
    "painter", "bridge", "language", "disease", "mountain",
];

const FILLERS: [&str; 16] = [
    "list", "overview", "main", "notable", "current", "former", "season", "history", "summary", "selected", "other",
    "early", "late", "known", "official", "numtkn",
];

const NOISE_WORDS: [&str; 12] = [
    "misc", "related", "mention", "link", "topic", "webpage", "alias", "key", "source", "note", "image", "tag",
];

const COLUMN_WORDS: [&str; 6] = ["name", "title", "member", "role", "year", "entry"];

const TYPE_WORDS: [&str; 6] = ["work", "subject", "collection", "group", "event", "place"];

const RELATION_WORDS: [&str; 3] = ["cast", "crew", "member"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectorCorpusConfig {
    pub train_tables: usize,
    pub test_tables: usize,
    /// Number of keyword families, at most 16.
    pub families: usize,
    pub min_chains: usize,
    pub max_chains: usize,
    /// Probability that a negative reuses another family's keyword.
    pub hard_negative_rate: f64,
    pub seed: u64,
}

impl Default for SelectorCorpusConfig {
    fn default() -> Self {
        Self {
            train_tables: 300,
            test_tables: 100,
            families: 12,
            min_chains: 2,
            max_chains: 10,
            hard_negative_rate: 0.3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SelectorCorpus {
    pub train: Vec<AnnotatedTable>,
    pub test: Vec<AnnotatedTable>,
}

fn negative_chain(rng: &mut ChaCha8Rng, family: usize, families: usize, hard_rate: f64) -> String {
    let noise = |rng: &mut ChaCha8Rng| format!("noise.{}.link", NOISE_WORDS.choose(rng).unwrap());
    if families > 1 && rng.gen_bool(hard_rate) {
        let mut other = rng.gen_range(0..families - 1);
        if other >= family {
            other += 1;
        }
        let rel = RELATION_WORDS.choose(rng).unwrap();
        format!("{}.series.{rel} / {}", KEYWORDS[other], noise(rng))
    } else {
        format!("{} / {}", noise(rng), noise(rng))
    }
}

fn selector_table(rng: &mut ChaCha8Rng, id: String, cfg: &SelectorCorpusConfig) -> AnnotatedTable {
    let families = cfg.families.clamp(1, KEYWORDS.len());
    let family = rng.gen_range(0..families);
    let kw = KEYWORDS[family];

    let mut qis: Vec<String> = FILLERS.choose_multiple(rng, 3).map(|s| s.to_string()).collect();
    qis.insert(rng.gen_range(0..=qis.len()), kw.to_string());
    let cn1 = alloc::vec![COLUMN_WORDS.choose(rng).unwrap().to_string()];
    let cn2 = alloc::vec![COLUMN_WORDS.choose(rng).unwrap().to_string()];
    let set_tokens: Vec<String> = TYPE_WORDS.choose_multiple(rng, 2).map(|s| s.to_string()).collect();

    let rel = RELATION_WORDS.choose(rng).unwrap();
    let positive = ChainPair::parse(&format!("{kw}.series.{rel} / {kw}.{rel}.role")).unwrap();
    let total = rng.gen_range(cfg.min_chains.max(2)..=cfg.max_chains.max(cfg.min_chains.max(2)));
    let mut negatives: BTreeSet<ChainPair> = BTreeSet::new();
    let mut guard = 0;
    while negatives.len() + 1 < total && guard < 1000 {
        guard += 1;
        let c = ChainPair::parse(&negative_chain(rng, family, families, cfg.hard_negative_rate)).unwrap();
        if c != positive {
            negatives.insert(c);
        }
    }
    let mut chains = alloc::vec![LabeledChain {
        chain: positive,
        label: Label::Positive,
        recall: 1.0,
        precision: 1.0,
        f1: 1.0,
        padded: false,
    }];
    for chain in negatives {
        let recall = f64::from(rng.gen_range(0u8..10)) / 10.0;
        chains.push(LabeledChain { chain, label: Label::Negative, recall, precision: recall, f1: recall, padded: false });
    }
    AnnotatedTable {
        se: format!("m.{id}"),
        se_name: id.clone(),
        table_id: id,
        qis,
        cn1,
        cn2,
        set_tokens,
        rr: Vec::new(),
        chains,
    }
}

/// Tables whose single positive chain shares the table's keyword with the
/// query intent string. Negatives are built from noise predicates or from
/// another family's keyword.
pub fn selector_corpus(cfg: &SelectorCorpusConfig) -> SelectorCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let train = (0..cfg.train_tables)
        .map(|i| selector_table(&mut rng, format!("train-{i:04}"), cfg))
        .collect();
    let test = (0..cfg.test_tables)
        .map(|i| selector_table(&mut rng, format!("test-{i:04}"), cfg))
        .collect();
    SelectorCorpus { train, test }
}

struct Family {
    domain: &'static str,
    subject: &'static str,
    col1: &'static str,
    col2: &'static str,
    caption: &'static str,
    headers: (&'static str, &'static str),
}

const FAMILIES: [Family; 6] = [
    Family {
        domain: "tv",
        subject: "program",
        col1: "actor",
        col2: "character",
        caption: "main cast and characters",
        headers: ("Actors", "Character"),
    },
    Family {
        domain: "music",
        subject: "album",
        col1: "track",
        col2: "writer",
        caption: "track listing and writers",
        headers: ("Track", "Writers"),
    },
    Family {
        domain: "sports",
        subject: "team",
        col1: "player",
        col2: "position",
        caption: "current roster players and positions",
        headers: ("Players", "Position"),
    },
    Family {
        domain: "book",
        subject: "series",
        col1: "novel",
        col2: "author",
        caption: "novels in the series and their authors",
        headers: ("Novel", "Author"),
    },
    Family {
        domain: "government",
        subject: "election",
        col1: "candidate",
        col2: "party",
        caption: "election results candidates and parties",
        headers: ("Candidate", "Party"),
    },
    Family {
        domain: "location",
        subject: "country",
        col1: "city",
        col2: "region",
        caption: "largest cities by region",
        headers: ("Cities", "Region"),
    },
];

const SYLLABLES: [&str; 20] = [
    "ka", "lo", "mi", "ra", "ten", "vo", "zu", "bel", "dor", "fin", "gar", "hal", "jor", "kin", "lem", "nor", "pra",
    "sol", "tur", "wex",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    /// Number of table families, at most 6.
    pub families: usize,
    pub subjects_per_family: usize,
    pub min_rows: usize,
    pub max_rows: usize,
    /// Column-1 entities available per family; they are shared by tables.
    pub pool_per_family: usize,
    /// Probability that each edge of the intended chain exists.
    pub main_edge_rate: f64,
    /// Probability that a noise predicate also covers a row.
    pub noise_p1_rate: f64,
    pub noise_p2_rate: f64,
    /// Probability that the reverse-direction relation covers a row.
    pub reverse_rate: f64,
    /// Entities attached to every type node, so that type nodes become hubs.
    pub hub_fanout: usize,
    pub embedding_dim: usize,
    pub seed: u64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            families: 4,
            subjects_per_family: 25,
            min_rows: 3,
            max_rows: 7,
            pool_per_family: 150,
            main_edge_rate: 0.92,
            noise_p1_rate: 0.5,
            noise_p2_rate: 0.4,
            reverse_rate: 0.6,
            hub_fanout: 510,
            embedding_dim: 16,
            seed: 0,
        }
    }
}

/// Everything needed to build a dataset from scratch.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct World {
    pub triples: Vec<(String, String, String)>,
    pub entities: Vec<EntityRecord>,
    pub predicates: Vec<PredicateRecord>,
    pub corpus: Vec<RawTable>,
    pub linking: LinkingData,
    /// Word vectors, sorted by token.
    pub embeddings: Vec<(String, Vec<f64>)>,
}

struct Names {
    used: BTreeSet<String>,
}

impl Names {
    fn word(rng: &mut ChaCha8Rng) -> String {
        let n = rng.gen_range(2..=3);
        let mut w: String = (0..n).map(|_| *SYLLABLES.choose(rng).unwrap()).collect();
        w[..1].make_ascii_uppercase();
        w
    }

    fn fresh(&mut self, rng: &mut ChaCha8Rng) -> String {
        loop {
            let name = format!("{} {}", Self::word(rng), Self::word(rng));
            if self.used.insert(name.clone()) {
                return name;
            }
        }
    }
}

fn url(mid: &str) -> String {
    format!("https://en.wikipedia.org/wiki/{mid}")
}

struct WorldBuilder {
    rng: ChaCha8Rng,
    names: Names,
    triples: BTreeSet<(String, String, String)>,
    entities: BTreeMap<String, EntityRecord>,
    linking: LinkingData,
}

impl WorldBuilder {
    fn entity(&mut self, mid: &str, name: &str, description: String, notable: &str, rdf: &[&str]) {
        self.entities.insert(
            mid.to_string(),
            EntityRecord {
                mid: mid.to_string(),
                name: name.to_string(),
                description,
                notable_types: alloc::vec![notable.to_string()],
                rdf_types: rdf.iter().map(|s| s.to_string()).collect(),
            },
        );
        self.linking.url_to_mid.insert(url(mid), mid.to_string());
        self.triples
            .insert((mid.to_string(), "type.object.type".to_string(), format!("m.type.{notable}")));
    }

    fn edge(&mut self, s: &str, p: &str, o: &str) {
        self.triples.insert((s.to_string(), p.to_string(), o.to_string()));
    }
}

/// Generates a small world whose tables are completed by family-specific
/// chains, with noise predicates that produce lower-recall alternatives.
pub fn world(cfg: &WorldConfig) -> World {
    let mut b = WorldBuilder {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        names: Names { used: BTreeSet::new() },
        triples: BTreeSet::new(),
        entities: BTreeMap::new(),
        linking: LinkingData::default(),
    };
    let mut predicates: BTreeMap<String, PredicateRecord> = BTreeMap::new();
    let mut pred = |name: String, target: &str| {
        predicates
            .entry(name.clone())
            .or_insert_with(|| PredicateRecord { name, expected_target_types: Vec::new() })
            .expected_target_types
            .push(target.to_string());
    };
    let mut corpus = Vec::new();

    for (fi, fam) in FAMILIES.iter().enumerate().take(cfg.families.clamp(1, FAMILIES.len())) {
        let d = fam.domain;
        let p1_main = format!("{d}.{}.{}", fam.subject, fam.col1);
        let p2_main = format!("{d}.{}.{}", fam.col1, fam.col2);
        let p2_reverse = format!("{d}.{}.{}_of", fam.col2, fam.col1);
        let noise_p1 = "media.work.mention".to_string();
        let noise_p2 = "people.person.associated".to_string();
        let subject_type = format!("{d}.{}", fam.subject);
        let c1_type = format!("{d}.{}", fam.col1);
        let c2_type = format!("{d}.{}", fam.col2);
        pred(p1_main.clone(), &c1_type);
        pred(p2_main.clone(), &c2_type);
        pred(p2_reverse.clone(), &c1_type);
        pred(noise_p1.clone(), "common.topic");
        pred(noise_p2.clone(), "common.topic");
        b.linking
            .fine_types
            .insert(subject_type.clone(), alloc::vec![format!("{d}.genre.{}", fam.subject)]);

        let pool: Vec<String> = (0..cfg.pool_per_family)
            .map(|i| {
                let mid = format!("m.{fi}a{i:03}");
                let name = b.names.fresh(&mut b.rng);
                b.entity(&mid, &name, format!("{name} is a {d} {}", fam.col1), &c1_type, &["common.topic"]);
                mid
            })
            .collect();
        let mut all_c2: Vec<String> = Vec::new();

        for si in 0..cfg.subjects_per_family {
            let se = format!("m.{fi}s{si:03}");
            let se_name = b.names.fresh(&mut b.rng);
            b.entity(&se, &se_name, format!("{se_name} is a {} in {d}", fam.subject), &subject_type, &["common.topic"]);
            b.linking.entity_types.insert(
                se.clone(),
                alloc::vec!["common.topic".to_string(), "media.work".to_string(), subject_type.clone()],
            );

            let n_rows = b.rng.gen_range(cfg.min_rows..=cfg.max_rows.max(cfg.min_rows));
            let c1s: Vec<String> = pool.choose_multiple(&mut b.rng, n_rows.min(pool.len())).cloned().collect();
            let mut rows = Vec::new();
            for (ri, c1) in c1s.iter().enumerate() {
                let c2 = format!("m.{fi}c{si:03}x{ri}");
                let c2_name = b.names.fresh(&mut b.rng);
                b.entity(
                    &c2,
                    &c2_name,
                    format!("{c2_name} is a {} of {se_name}", fam.col2),
                    &c2_type,
                    &["common.topic"],
                );
                all_c2.push(c2.clone());
                if b.rng.gen_bool(cfg.main_edge_rate) {
                    b.edge(&se, &p1_main, c1);
                }
                if b.rng.gen_bool(cfg.main_edge_rate) {
                    b.edge(c1, &p2_main, &c2);
                }
                if b.rng.gen_bool(cfg.reverse_rate) {
                    b.edge(&c2, &p2_reverse, c1);
                }
                if b.rng.gen_bool(cfg.noise_p1_rate) {
                    b.edge(&se, &noise_p1, c1);
                }
                if b.rng.gen_bool(cfg.noise_p2_rate) {
                    b.edge(c1, &noise_p2, &c2);
                }
                rows.push((c1.clone(), c2));
            }
            // Noise edges that lead away from the table.
            for _ in 0..2 {
                let other = pool.choose(&mut b.rng).unwrap().clone();
                b.edge(&se, &noise_p1, &other);
            }
            if let Some(c2) = all_c2.choose(&mut b.rng).cloned() {
                let c1 = c1s.choose(&mut b.rng).unwrap().clone();
                b.edge(&c1, &noise_p2, &c2);
            }

            let cell = |mid: &str, names: &BTreeMap<String, EntityRecord>| Cell {
                text: names[mid].name.clone(),
                urls: alloc::vec![url(mid)],
            };
            let filler = FILLERS.choose(&mut b.rng).unwrap();
            corpus.push(RawTable {
                table_id: format!("t{fi}-{si:03}"),
                page_title: se_name.clone(),
                caption: format!("{} {filler}", fam.caption),
                headers: alloc::vec![fam.headers.0.to_string(), fam.headers.1.to_string()],
                rows: rows
                    .iter()
                    .map(|(a, c)| alloc::vec![cell(a, &b.entities), cell(c, &b.entities)])
                    .collect(),
                subject: Some(se.clone()),
            });
        }

        // Tables the pipeline must reject.
        let se = format!("m.{fi}s000");
        let se_name = b.entities[&se].name.clone();
        let dup = pool[0].clone();
        let c2 = format!("m.{fi}c000x0");
        let dup_cell = Cell { text: String::new(), urls: alloc::vec![url(&dup)] };
        let c2_cell = Cell { text: String::new(), urls: alloc::vec![url(&c2)] };
        corpus.push(RawTable {
            table_id: format!("t{fi}-dup"),
            page_title: se_name.clone(),
            caption: fam.caption.to_string(),
            headers: alloc::vec![fam.headers.0.to_string(), fam.headers.1.to_string()],
            rows: alloc::vec![
                alloc::vec![dup_cell.clone(), c2_cell.clone()],
                alloc::vec![dup_cell, Cell { text: "x".into(), urls: alloc::vec![url(&se)] }],
                alloc::vec![Cell { text: "y".into(), urls: alloc::vec![url(&pool[1])] }, c2_cell.clone()],
            ],
            subject: Some(se.clone()),
        });
        corpus.push(RawTable {
            table_id: format!("t{fi}-short"),
            page_title: se_name,
            caption: fam.caption.to_string(),
            headers: alloc::vec![fam.headers.0.to_string(), fam.headers.1.to_string()],
            rows: alloc::vec![alloc::vec![
                Cell { text: "z".into(), urls: alloc::vec![url(&pool[2])] },
                c2_cell,
            ]],
            subject: Some(se),
        });
    }

    let type_nodes: BTreeSet<String> = b
        .triples
        .iter()
        .filter(|t| t.1 == "type.object.type")
        .map(|t| t.2.clone())
        .collect();
    for i in 0..cfg.hub_fanout {
        let mid = format!("m.hub{i:04}");
        for node in &type_nodes {
            b.edge(&mid, "type.object.type", node);
        }
    }

    let embeddings = word_vectors(&mut b.rng, cfg.embedding_dim, &b.entities, &predicates);
    World {
        triples: b.triples.into_iter().collect(),
        entities: b.entities.into_values().collect(),
        predicates: predicates.into_values().collect(),
        corpus,
        linking: b.linking,
        embeddings,
    }
}

/// Random vectors for every token of the vocabulary; tokens of one domain
/// share a common direction.
fn word_vectors(
    rng: &mut ChaCha8Rng,
    dim: usize,
    entities: &BTreeMap<String, EntityRecord>,
    predicates: &BTreeMap<String, PredicateRecord>,
) -> Vec<(String, Vec<f64>)> {
    let mut tokens: BTreeSet<String> = BTreeSet::new();
    for fam in &FAMILIES {
        for text in [fam.domain, fam.subject, fam.col1, fam.col2, fam.caption, fam.headers.0, fam.headers.1] {
            tokens.extend(crate::text::tokenize(text));
        }
    }
    for e in entities.values() {
        for t in e.notable_types.iter().chain(&e.rdf_types) {
            tokens.extend(crate::text::tokenize(t));
        }
    }
    for p in predicates.keys() {
        tokens.extend(crate::text::tokenize(p));
    }
    tokens.extend(FILLERS.iter().map(|s| s.to_string()));
    tokens.extend(["is", "a", "of", "in", "and", "the", "by", "their"].iter().map(|s| s.to_string()));

    let domain_of: BTreeMap<String, Vec<f64>> = FAMILIES
        .iter()
        .map(|f| (f.domain.to_string(), (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()))
        .collect();
    let mut family_of: BTreeMap<String, &str> = BTreeMap::new();
    for fam in &FAMILIES {
        for text in [fam.subject, fam.col1, fam.col2, fam.caption] {
            for t in crate::text::tokenize(text) {
                family_of.entry(t).or_insert(fam.domain);
            }
        }
    }
    tokens
        .into_iter()
        .map(|t| {
            let base = family_of.get(&t).copied().or_else(|| domain_of.contains_key(&t).then_some(""));
            let shared: Option<&Vec<f64>> = match base {
                Some("") => domain_of.get(&t),
                Some(d) => domain_of.get(d),
                None => None,
            };
            let v = (0..dim)
                .map(|i| {
                    let noise: f64 = rng.gen_range(-1.0..1.0);
                    match shared {
                        Some(s) => s[i] + 0.5 * noise,
                        None => noise,
                    }
                })
                .collect();
            (t, v)
        })
        .collect()
}
