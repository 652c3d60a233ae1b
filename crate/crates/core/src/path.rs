//! Meta-paths, `[P1 - P2]` chains and bounded simple-path enumeration.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graph::{Edge, EntityId, KnowledgeGraph, Neighborhood, PredicateToken};
use crate::query;

/// Longest segment a meta-path may have.
pub const MAX_SEGMENT_LEN: usize = 3;
pub const DEFAULT_DEGREE_CAP: usize = 500;

/// Paths whose first predicate starts with one of these are dropped.
pub const DEFAULT_BANNED_PREFIXES: [&str; 7] = [
    "freebase",
    "common.topic.notable",
    "common.topic.image",
    "common.topic.webpage",
    "type.content",
    "type.object",
    "dataworld.gardening_hint",
];

pub fn default_banned_prefixes() -> Vec<String> {
    DEFAULT_BANNED_PREFIXES.iter().map(|s| s.to_string()).collect()
}

/// Separator between the two segments of a chain's canonical form.
pub const SEGMENT_SEPARATOR: &str = " / ";

/// A non-empty sequence of at most [`MAX_SEGMENT_LEN`] predicate tokens.
///
/// Ordering and equality follow the canonical `/`-joined string.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MetaPath {
    tokens: Vec<PredicateToken>,
}

impl MetaPath {
    pub fn new(tokens: Vec<PredicateToken>) -> Result<Self> {
        if tokens.is_empty() || tokens.len() > MAX_SEGMENT_LEN {
            return Err(Error::InvalidInput(alloc::format!(
                "meta-path length {} outside 1..={MAX_SEGMENT_LEN}",
                tokens.len()
            )));
        }
        Ok(Self { tokens })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let tokens = text
            .split('/')
            .map(|t| PredicateToken::parse(t.trim()))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Parse(alloc::format!("meta-path {text:?}: {e}")))?;
        Self::new(tokens)
    }

    pub fn tokens(&self) -> &[PredicateToken] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn first(&self) -> &PredicateToken {
        &self.tokens[0]
    }

    pub fn last(&self) -> &PredicateToken {
        &self.tokens[self.tokens.len() - 1]
    }

    pub fn canonical(&self) -> String {
        self.to_string()
    }

    fn canonical_chars(&self) -> impl Iterator<Item = char> + '_ {
        self.tokens.iter().enumerate().flat_map(|(i, t)| {
            let sep = if i > 0 { Some('/') } else { None };
            let caret = if t.is_inverse() { Some('^') } else { None };
            sep.into_iter().chain(caret).chain(t.name().chars())
        })
    }
}

impl fmt::Display for MetaPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.tokens.iter().enumerate() {
            if i > 0 {
                f.write_str("/")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

impl Ord for MetaPath {
    fn cmp(&self, other: &Self) -> Ordering {
        self.canonical_chars().cmp(other.canonical_chars())
    }
}

impl PartialOrd for MetaPath {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A `[P1 - P2]` chain: `p1` leads from the subject entity to column-1
/// entities, `p2` from column-1 to column-2 entities.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChainPair {
    pub p1: MetaPath,
    pub p2: MetaPath,
}

impl ChainPair {
    pub fn new(p1: MetaPath, p2: MetaPath) -> Self {
        Self { p1, p2 }
    }

    /// Parse `"p1 / p2"`, e.g. `"a/^b / c"`.
    pub fn parse(text: &str) -> Result<Self> {
        let (p1, p2) = text
            .split_once(SEGMENT_SEPARATOR)
            .ok_or_else(|| Error::Parse(alloc::format!("chain {text:?} lacks {SEGMENT_SEPARATOR:?}")))?;
        Ok(Self {
            p1: MetaPath::parse(p1)?,
            p2: MetaPath::parse(p2)?,
        })
    }

    pub fn total_len(&self) -> usize {
        self.p1.len() + self.p2.len()
    }

    pub fn canonical(&self) -> String {
        self.to_string()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &PredicateToken> {
        self.p1.tokens().iter().chain(self.p2.tokens())
    }
}

impl fmt::Display for ChainPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{SEGMENT_SEPARATOR}{}", self.p1, self.p2)
    }
}

impl Ord for ChainPair {
    fn cmp(&self, other: &Self) -> Ordering {
        let sep = SEGMENT_SEPARATOR.chars();
        let a = self.p1.canonical_chars().chain(sep.clone()).chain(self.p2.canonical_chars());
        let b = other.p1.canonical_chars().chain(sep).chain(other.p2.canonical_chars());
        a.cmp(b)
    }
}

impl PartialOrd for ChainPair {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Serialize for MetaPath {
    fn serialize<S: Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MetaPath {
    fn deserialize<D: Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        MetaPath::parse(&text).map_err(serde::de::Error::custom)
    }
}

impl Serialize for ChainPair {
    fn serialize<S: Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ChainPair {
    fn deserialize<D: Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        ChainPair::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Candidate chains of one table, deduplicated, in canonical order.
pub type CandidateChainSet = BTreeSet<ChainPair>;

/// Options for [`enumerate_simple_paths`].
#[derive(Debug, Clone)]
pub struct PathSearch<'a> {
    pub max_len: usize,
    pub degree_cap: usize,
    pub banned_prefixes: &'a [String],
}

impl Default for PathSearch<'_> {
    fn default() -> Self {
        Self {
            max_len: MAX_SEGMENT_LEN,
            degree_cap: DEFAULT_DEGREE_CAP,
            banned_prefixes: &[],
        }
    }
}

fn is_banned(name: &str, banned: &[String]) -> bool {
    banned.iter().any(|p| name.starts_with(p.as_str()))
}

/// All meta-paths of simple entity paths from `src` to `dst` with at most
/// `max_len` edges.
///
/// No entity repeats (the source included). Intermediate nodes whose degree
/// exceeds the cap are not expanded; the source is always expanded and the
/// destination never is. Paths whose first predicate starts with a banned
/// prefix are dropped.
pub fn enumerate_simple_paths(
    g: &KnowledgeGraph,
    src: EntityId,
    dst: EntityId,
    opts: &PathSearch<'_>,
) -> Result<BTreeSet<MetaPath>> {
    if !g.contains(src) || !g.contains(dst) {
        return Err(Error::EntityNotFound(alloc::format!(
            "#{} or #{}",
            src.0,
            dst.0
        )));
    }
    if src == dst {
        return Err(Error::InvalidInput("source and destination coincide".into()));
    }
    if opts.max_len == 0 || opts.max_len > MAX_SEGMENT_LEN {
        return Err(Error::InvalidInput(alloc::format!(
            "max_len {} outside 1..={MAX_SEGMENT_LEN}",
            opts.max_len
        )));
    }

    let mut dfs = Dfs {
        g,
        dst,
        opts,
        nodes: alloc::vec![src],
        edges: Vec::with_capacity(MAX_SEGMENT_LEN),
        found: BTreeSet::new(),
    };
    dfs.visit(src);
    Ok(dfs.found)
}

struct Dfs<'g, 'o> {
    g: &'g KnowledgeGraph,
    dst: EntityId,
    opts: &'o PathSearch<'o>,
    nodes: Vec<EntityId>,
    edges: Vec<Edge>,
    found: BTreeSet<MetaPath>,
}

impl Dfs<'_, '_> {
    fn visit(&mut self, node: EntityId) {
        let adjacency = if self.nodes.len() == 1 {
            self.g.adjacency(node)
        } else {
            match self.g.neighbors(node, self.opts.degree_cap) {
                Ok(Neighborhood::Expanded(adj)) => adj,
                _ => return,
            }
        };
        let depth = self.edges.len();
        for edge in adjacency {
            if depth == 0 && is_banned(self.g.predicate_name(edge.predicate), self.opts.banned_prefixes) {
                continue;
            }
            if edge.target == self.dst {
                self.edges.push(*edge);
                let tokens = self.edges.iter().map(|e| self.g.token(e)).collect();
                self.found.insert(MetaPath { tokens });
                self.edges.pop();
            } else if depth + 1 < self.opts.max_len && !self.nodes.contains(&edge.target) {
                self.nodes.push(edge.target);
                self.edges.push(*edge);
                self.visit(edge.target);
                self.edges.pop();
                self.nodes.pop();
            }
        }
    }
}

/// Drop paths whose first predicate name starts with a banned prefix.
pub fn prune_generic(paths: BTreeSet<MetaPath>, banned_prefixes: &[String]) -> BTreeSet<MetaPath> {
    paths
        .into_iter()
        .filter(|p| !is_banned(p.first().name(), banned_prefixes))
        .collect()
}

/// Pair every `p1` with every `p2` and keep the pairs that retrieve at least
/// one `(x, y)` tuple from `se`: some entity reached by `p1` must have a
/// `p2` successor.
pub fn join_chains(
    g: &KnowledgeGraph,
    se: EntityId,
    p1s: &BTreeSet<MetaPath>,
    p2s: &BTreeSet<MetaPath>,
) -> Result<CandidateChainSet> {
    if !g.contains(se) {
        return Err(Error::EntityNotFound(alloc::format!("#{}", se.0)));
    }
    let mut has_successor: BTreeMap<(EntityId, &MetaPath), bool> = BTreeMap::new();
    let mut out = CandidateChainSet::new();
    for p1 in p1s {
        let xs = query::reach(g, se, p1);
        if xs.is_empty() {
            continue;
        }
        for p2 in p2s {
            let joined = xs.iter().any(|&x| {
                *has_successor
                    .entry((x, p2))
                    .or_insert_with(|| !query::reach(g, x, p2).is_empty())
            });
            if joined {
                out.insert(ChainPair::new(p1.clone(), p2.clone()));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn graph(triples: &[(&str, &str, &str)]) -> KnowledgeGraph {
        KnowledgeGraph::from_triples(triples.iter().copied()).unwrap()
    }

    fn rendered(paths: &BTreeSet<MetaPath>) -> Vec<String> {
        paths.iter().map(|p| p.to_string()).collect()
    }

    fn search(max_len: usize, degree_cap: usize) -> PathSearch<'static> {
        PathSearch { max_len, degree_cap, banned_prefixes: &[] }
    }

    #[test]
    fn three_node_graph() {
        let g = graph(&[("s", "p", "a"), ("a", "q", "b"), ("s", "r", "b")]);
        let (s, b) = (g.entity("s").unwrap(), g.entity("b").unwrap());
        let got = enumerate_simple_paths(&g, s, b, &search(3, 500)).unwrap();
        assert_eq!(rendered(&got), vec!["p/q", "r"]);
    }

    #[test]
    fn inverse_edge() {
        let g = graph(&[("b", "p", "a")]);
        let (a, b) = (g.entity("a").unwrap(), g.entity("b").unwrap());
        let got = enumerate_simple_paths(&g, a, b, &search(3, 500)).unwrap();
        assert_eq!(rendered(&got), vec!["^p"]);
    }

    #[test]
    fn hub_is_not_expanded() {
        let mut b = crate::GraphBuilder::new();
        b.add("s", "p", "h").unwrap();
        b.add("h", "q", "t").unwrap();
        for i in 0..500 {
            b.add("h", "x", &alloc::format!("filler{i}")).unwrap();
        }
        let g = b.build();
        let (s, t, h) = (g.entity("s").unwrap(), g.entity("t").unwrap(), g.entity("h").unwrap());
        assert_eq!(g.degree(h), 502);
        assert!(enumerate_simple_paths(&g, s, t, &search(3, 500)).unwrap().is_empty());
        let uncapped = enumerate_simple_paths(&g, s, t, &search(3, usize::MAX)).unwrap();
        assert_eq!(rendered(&uncapped), vec!["p/q"]);
    }

    #[test]
    fn source_is_expanded_despite_cap_and_destination_needs_no_cap() {
        let g = graph(&[("s", "p", "a"), ("s", "p", "b"), ("s", "p", "c"), ("a", "q", "t"), ("t", "z", "d")]);
        let (s, t) = (g.entity("s").unwrap(), g.entity("t").unwrap());
        let got = enumerate_simple_paths(&g, s, t, &search(3, 2)).unwrap();
        assert_eq!(rendered(&got), vec!["p/q"]);
    }

    #[test]
    fn source_may_not_be_revisited() {
        let g = graph(&[("s", "p", "a"), ("a", "p", "s"), ("s", "q", "t")]);
        let (s, t) = (g.entity("s").unwrap(), g.entity("t").unwrap());
        let got = enumerate_simple_paths(&g, s, t, &search(3, 500)).unwrap();
        assert_eq!(rendered(&got), vec!["q"]);
    }

    #[test]
    fn invalid_endpoints() {
        let g = graph(&[("s", "p", "a")]);
        let s = g.entity("s").unwrap();
        assert!(matches!(enumerate_simple_paths(&g, s, s, &search(3, 500)), Err(Error::InvalidInput(_))));
        assert!(matches!(
            enumerate_simple_paths(&g, s, EntityId(9), &search(3, 500)),
            Err(Error::EntityNotFound(_))
        ));
    }

    #[test]
    fn generic_prefixes_are_pruned_on_first_token_only() {
        let banned = default_banned_prefixes();
        let paths: BTreeSet<_> = ["common.topic.notable_types/x", "x/common.topic.image", "y"]
            .iter()
            .map(|p| MetaPath::parse(p).unwrap())
            .collect();
        let kept = prune_generic(paths, &banned);
        assert_eq!(rendered(&kept), vec!["x/common.topic.image", "y"]);
        assert!(prune_generic(BTreeSet::new(), &banned).is_empty());
    }

    #[test]
    fn banned_first_hop_is_skipped_during_search() {
        let g = graph(&[("s", "type.object.type", "t"), ("s", "ok", "t")]);
        let (s, t) = (g.entity("s").unwrap(), g.entity("t").unwrap());
        let banned = default_banned_prefixes();
        let opts = PathSearch { max_len: 3, degree_cap: 500, banned_prefixes: &banned };
        assert_eq!(rendered(&enumerate_simple_paths(&g, s, t, &opts).unwrap()), vec!["ok"]);
    }

    #[test]
    fn join_requires_common_column_one_item() {
        // se -p-> x1, x2 -q-> y: p reaches x1 only, q only leaves x2.
        let g = graph(&[("se", "p", "x1"), ("x2", "q", "y"), ("x1", "r", "z"), ("se", "s", "x2")]);
        let se = g.entity("se").unwrap();
        let p1s: BTreeSet<_> = [MetaPath::parse("p").unwrap()].into();
        let p2s: BTreeSet<_> = [MetaPath::parse("q").unwrap(), MetaPath::parse("r").unwrap()].into();
        let joined = join_chains(&g, se, &p1s, &p2s).unwrap();
        let got: Vec<_> = joined.iter().map(|c| c.to_string()).collect();
        assert_eq!(got, vec!["p / r"]);
        assert!(join_chains(&g, se, &BTreeSet::new(), &p2s).unwrap().is_empty());
    }

    #[test]
    fn canonical_ordering_is_string_ordering() {
        let a = MetaPath::parse("a/b").unwrap();
        let b = MetaPath::parse("a.c").unwrap();
        assert_eq!(a.cmp(&b), a.to_string().cmp(&b.to_string()));
        let c1 = ChainPair::parse("a / b").unwrap();
        let c2 = ChainPair::parse("a/b / c").unwrap();
        assert_eq!(c1.cmp(&c2), c1.to_string().cmp(&c2.to_string()));
    }

    #[test]
    fn chain_round_trip() {
        let c = ChainPair::parse("tv.a/^tv.b / tv.c").unwrap();
        assert_eq!(c.total_len(), 3);
        assert_eq!(ChainPair::parse(&c.canonical()).unwrap(), c);
        assert!(ChainPair::parse("a/b").is_err());
        assert!(MetaPath::parse("a/b/c/d").is_err());
    }
}
