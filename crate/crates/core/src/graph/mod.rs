//! Immutable in-memory knowledge graph.
//!
//! Every triple `(s, p, o)` is stored twice: `(p, o)` under `s` and `(^p, s)`
//! under `o`, so traversal can follow either direction with a direction flag
//! on the predicate token. Entity and predicate identifiers are interned in
//! sorted string order when the graph is built, which makes the result
//! independent of the order triples were added.

mod meta;

pub use meta::{EntityMeta, EntityMetaStore, EntityRecord, PredicateMeta, PredicateMetaStore, PredicateRecord};

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense id of an interned entity identifier (e.g. `m.02dzsr`).
///
/// Ids follow the lexicographic order of the identifier strings, so ordering
/// by id is ordering by identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntityId(pub u32);

impl EntityId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PredicateId(pub u32);

/// A predicate name with a traversal direction. Renders as `name` or `^name`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PredicateToken {
    name: String,
    inverse: bool,
}

impl PredicateToken {
    pub fn new(name: impl Into<String>, inverse: bool) -> Result<Self> {
        let name = name.into();
        validate_predicate_name(&name)?;
        Ok(Self { name, inverse })
    }

    pub fn forward(name: impl Into<String>) -> Result<Self> {
        Self::new(name, false)
    }

    pub fn backward(name: impl Into<String>) -> Result<Self> {
        Self::new(name, true)
    }

    /// Parse the rendered form (`name` or `^name`).
    pub fn parse(text: &str) -> Result<Self> {
        match text.strip_prefix('^') {
            Some(name) => Self::new(name, true),
            None => Self::new(text, false),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_inverse(&self) -> bool {
        self.inverse
    }

    pub fn reversed(&self) -> Self {
        Self {
            name: self.name.clone(),
            inverse: !self.inverse,
        }
    }
}

impl fmt::Display for PredicateToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inverse {
            f.write_str("^")?;
        }
        f.write_str(&self.name)
    }
}

/// Predicate names end up inside `/`-joined paths and SPARQL text, so the
/// characters that would break either form are rejected.
pub fn validate_predicate_name(name: &str) -> Result<()> {
    if name.is_empty() {
        return Err(Error::InvalidInput("empty predicate name".to_string()));
    }
    if name.starts_with('^') || name.contains('/') || name.contains(char::is_whitespace) {
        return Err(Error::InvalidInput(alloc::format!(
            "predicate name {name:?} contains '^', '/' or whitespace"
        )));
    }
    Ok(())
}

/// One adjacency entry: follow `predicate` (backwards when `inverse`) to `target`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub predicate: PredicateId,
    pub inverse: bool,
    pub target: EntityId,
}

/// Result of a degree-capped neighbor lookup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighborhood<'g> {
    Expanded(&'g [Edge]),
    /// The node has more neighbors than the cap allows; it is not expanded.
    HubSkipped,
}

#[derive(Debug, Default, Clone)]
pub struct GraphBuilder {
    triples: BTreeSet<(String, String, String)>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add one triple. Duplicates are ignored.
    pub fn add(&mut self, subject: &str, predicate: &str, object: &str) -> Result<()> {
        validate_predicate_name(predicate)?;
        if subject.is_empty() || object.is_empty() {
            return Err(Error::InvalidInput("empty entity identifier".to_string()));
        }
        self.triples
            .insert((subject.to_string(), predicate.to_string(), object.to_string()));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn build(self) -> KnowledgeGraph {
        let mut entities: BTreeSet<&str> = BTreeSet::new();
        let mut predicates: BTreeSet<&str> = BTreeSet::new();
        for (s, p, o) in &self.triples {
            entities.insert(s);
            entities.insert(o);
            predicates.insert(p);
        }
        let entity_names: Vec<String> = entities.into_iter().map(String::from).collect();
        let predicate_names: Vec<String> = predicates.into_iter().map(String::from).collect();
        let eid = |name: &str| EntityId(entity_names.binary_search_by(|n| n.as_str().cmp(name)).unwrap() as u32);
        let pid = |name: &str| {
            PredicateId(predicate_names.binary_search_by(|n| n.as_str().cmp(name)).unwrap() as u32)
        };

        let mut per_node: Vec<Vec<Edge>> = alloc::vec![Vec::new(); entity_names.len()];
        for (s, p, o) in &self.triples {
            let (s, p, o) = (eid(s), pid(p), eid(o));
            per_node[s.index()].push(Edge { predicate: p, inverse: false, target: o });
            per_node[o.index()].push(Edge { predicate: p, inverse: true, target: s });
        }

        let mut offsets = Vec::with_capacity(entity_names.len() + 1);
        let mut edges = Vec::with_capacity(self.triples.len() * 2);
        offsets.push(0);
        for mut list in per_node {
            // Predicate ids follow name order, so this is (name, inverse, neighbor) order.
            list.sort_unstable();
            edges.extend(list);
            offsets.push(edges.len());
        }

        KnowledgeGraph {
            entity_names,
            predicate_names,
            offsets,
            edges,
            triple_count: self.triples.len(),
        }
    }
}

/// Compressed adjacency over interned entities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeGraph {
    entity_names: Vec<String>,
    predicate_names: Vec<String>,
    offsets: Vec<usize>,
    edges: Vec<Edge>,
    triple_count: usize,
}

impl KnowledgeGraph {
    pub fn from_triples<'a, I>(triples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str, &'a str)>,
    {
        let mut builder = GraphBuilder::new();
        for (s, p, o) in triples {
            builder.add(s, p, o)?;
        }
        Ok(builder.build())
    }

    pub fn entity_count(&self) -> usize {
        self.entity_names.len()
    }

    pub fn triple_count(&self) -> usize {
        self.triple_count
    }

    pub fn entity_id(&self, name: &str) -> Option<EntityId> {
        self.entity_names
            .binary_search_by(|n| n.as_str().cmp(name))
            .ok()
            .map(|i| EntityId(i as u32))
    }

    /// Like [`Self::entity_id`] but reports a not-found error.
    pub fn entity(&self, name: &str) -> Result<EntityId> {
        self.entity_id(name)
            .ok_or_else(|| Error::EntityNotFound(name.to_string()))
    }

    pub fn entity_name(&self, id: EntityId) -> &str {
        &self.entity_names[id.index()]
    }

    pub fn contains(&self, id: EntityId) -> bool {
        id.index() < self.entity_names.len()
    }

    pub fn entities(&self) -> impl Iterator<Item = EntityId> + '_ {
        (0..self.entity_names.len() as u32).map(EntityId)
    }

    pub fn predicate_id(&self, name: &str) -> Option<PredicateId> {
        self.predicate_names
            .binary_search_by(|n| n.as_str().cmp(name))
            .ok()
            .map(|i| PredicateId(i as u32))
    }

    pub fn predicate_name(&self, id: PredicateId) -> &str {
        &self.predicate_names[id.0 as usize]
    }

    pub fn token(&self, edge: &Edge) -> PredicateToken {
        PredicateToken {
            name: self.predicate_name(edge.predicate).to_string(),
            inverse: edge.inverse,
        }
    }

    fn check(&self, id: EntityId) -> Result<()> {
        if self.contains(id) {
            Ok(())
        } else {
            Err(Error::EntityNotFound(alloc::format!("#{}", id.0)))
        }
    }

    /// Full adjacency list of a known entity.
    pub fn adjacency(&self, id: EntityId) -> &[Edge] {
        &self.edges[self.offsets[id.index()]..self.offsets[id.index() + 1]]
    }

    pub fn degree(&self, id: EntityId) -> usize {
        self.offsets[id.index() + 1] - self.offsets[id.index()]
    }

    /// Neighbors of `id`, or [`Neighborhood::HubSkipped`] when its degree
    /// exceeds `degree_cap`. A degree equal to the cap is still expanded.
    pub fn neighbors(&self, id: EntityId, degree_cap: usize) -> Result<Neighborhood<'_>> {
        self.check(id)?;
        if self.degree(id) > degree_cap {
            Ok(Neighborhood::HubSkipped)
        } else {
            Ok(Neighborhood::Expanded(self.adjacency(id)))
        }
    }

    /// Edges of `id` labelled with exactly `predicate` in direction `inverse`.
    pub fn step(&self, id: EntityId, predicate: PredicateId, inverse: bool) -> &[Edge] {
        let adj = self.adjacency(id);
        let lo = adj.partition_point(|e| (e.predicate, e.inverse) < (predicate, inverse));
        let hi = adj.partition_point(|e| (e.predicate, e.inverse) <= (predicate, inverse));
        &adj[lo..hi]
    }

    /// Resolve a token against this graph's predicate table. Unknown
    /// predicates resolve to `None` and match nothing.
    pub fn resolve(&self, token: &PredicateToken) -> Option<(PredicateId, bool)> {
        self.predicate_id(token.name()).map(|p| (p, token.is_inverse()))
    }

    /// Forward triples as `(subject, predicate, object)` names, in id order.
    pub fn triples(&self) -> impl Iterator<Item = (&str, &str, &str)> + '_ {
        self.entities().flat_map(move |s| {
            self.adjacency(s)
                .iter()
                .filter(|e| !e.inverse)
                .map(move |e| (self.entity_name(s), self.predicate_name(e.predicate), self.entity_name(e.target)))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn graph(triples: &[(&str, &str, &str)]) -> KnowledgeGraph {
        KnowledgeGraph::from_triples(triples.iter().copied()).unwrap()
    }

    #[test]
    fn single_triple_is_stored_in_both_directions() {
        let g = graph(&[("a", "p", "b")]);
        let (a, b) = (g.entity("a").unwrap(), g.entity("b").unwrap());
        let adj_a: Vec<_> = g.adjacency(a).iter().map(|e| (g.token(e).to_string(), e.target)).collect();
        let adj_b: Vec<_> = g.adjacency(b).iter().map(|e| (g.token(e).to_string(), e.target)).collect();
        assert_eq!(adj_a, vec![("p".to_string(), b)]);
        assert_eq!(adj_b, vec![("^p".to_string(), a)]);
    }

    #[test]
    fn empty_graph() {
        let g = GraphBuilder::new().build();
        assert_eq!(g.entity_count(), 0);
        assert_eq!(g.triple_count(), 0);
    }

    #[test]
    fn duplicates_are_merged() {
        assert_eq!(graph(&[("a", "p", "b"), ("a", "p", "b")]), graph(&[("a", "p", "b")]));
    }

    fn star(n: usize) -> KnowledgeGraph {
        let mut b = GraphBuilder::new();
        for i in 0..n {
            b.add("hub", "p", &alloc::format!("leaf{i}")).unwrap();
        }
        b.build()
    }

    #[test]
    fn degree_cap_is_inclusive() {
        let g = star(3);
        let hub = g.entity("hub").unwrap();
        assert!(matches!(g.neighbors(hub, 500).unwrap(), Neighborhood::Expanded(e) if e.len() == 3));

        let g = star(500);
        let hub = g.entity("hub").unwrap();
        assert!(matches!(g.neighbors(hub, 500).unwrap(), Neighborhood::Expanded(e) if e.len() == 500));

        let g = star(501);
        let hub = g.entity("hub").unwrap();
        assert_eq!(g.neighbors(hub, 500).unwrap(), Neighborhood::HubSkipped);
    }

    #[test]
    fn unknown_entity_is_not_found() {
        let g = star(1);
        assert!(matches!(g.neighbors(EntityId(99), 10), Err(Error::EntityNotFound(_))));
        assert!(matches!(g.entity("zzz"), Err(Error::EntityNotFound(_))));
    }

    #[test]
    fn step_selects_exact_predicate_and_direction() {
        let g = graph(&[("a", "p", "b"), ("a", "q", "c"), ("d", "p", "a")]);
        let a = g.entity("a").unwrap();
        let p = g.predicate_id("p").unwrap();
        let fwd: Vec<_> = g.step(a, p, false).iter().map(|e| g.entity_name(e.target)).collect();
        let back: Vec<_> = g.step(a, p, true).iter().map(|e| g.entity_name(e.target)).collect();
        assert_eq!(fwd, vec!["b"]);
        assert_eq!(back, vec!["d"]);
    }

    #[test]
    fn predicate_token_rendering() {
        assert_eq!(PredicateToken::backward("p").unwrap().to_string(), "^p");
        assert_eq!(PredicateToken::parse("^a.b").unwrap(), PredicateToken::backward("a.b").unwrap());
        assert!(PredicateToken::forward("").is_err());
        assert!(PredicateToken::forward("a/b").is_err());
    }
}
