mod common;

use common::oracle::{self, Triple};
use proptest::prelude::*;
use std::collections::BTreeSet;
use tabcomplete_core::path::{enumerate_simple_paths, join_chains, prune_generic, PathSearch};
use tabcomplete_core::query::{execute_chain, QueryBudget};
use tabcomplete_core::{KnowledgeGraph, MetaPath};

const PREDICATES: [&str; 5] = ["p", "q", "r.s", "common.topic.notable_types", "type.object.name"];

fn graph_strategy(max_nodes: usize, max_edges: usize) -> impl Strategy<Value = Vec<Triple>> {
    (2..=max_nodes).prop_flat_map(move |n| {
        prop::collection::vec((0..n, 0..PREDICATES.len(), 0..n), 1..=max_edges).prop_map(|edges| {
            edges
                .into_iter()
                .map(|(s, p, o)| (format!("n{s}"), PREDICATES[p].to_string(), format!("n{o}")))
                .collect()
        })
    })
}

fn build(triples: &[Triple]) -> KnowledgeGraph {
    KnowledgeGraph::from_triples(triples.iter().map(|(s, p, o)| (s.as_str(), p.as_str(), o.as_str()))).unwrap()
}

fn rendered(paths: &BTreeSet<MetaPath>) -> BTreeSet<String> {
    paths.iter().map(|p| p.canonical()).collect()
}

fn banned() -> Vec<String> {
    vec!["common.topic".into(), "type.object".into()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn enumeration_matches_brute_force(triples in graph_strategy(8, 20), cap in 1usize..12, max_len in 1usize..=3) {
        let g = build(&triples);
        let banned = banned();
        let opts = PathSearch { max_len, degree_cap: cap, banned_prefixes: &banned };
        for src in g.entities() {
            for dst in g.entities().filter(|d| *d != src) {
                let got = rendered(&enumerate_simple_paths(&g, src, dst, &opts).unwrap());
                let want = oracle::brute_force_paths(&triples, g.entity_name(src), g.entity_name(dst), max_len, cap, &banned);
                prop_assert_eq!(got, want);
            }
        }
    }

    #[test]
    fn longer_limits_and_larger_caps_only_add_paths(triples in graph_strategy(8, 20), cap in 1usize..8) {
        let g = build(&triples);
        for src in g.entities() {
            for dst in g.entities().filter(|d| *d != src) {
                let mut prev: Option<BTreeSet<MetaPath>> = None;
                for max_len in 1..=3 {
                    let opts = PathSearch { max_len, degree_cap: cap, banned_prefixes: &[] };
                    let now = enumerate_simple_paths(&g, src, dst, &opts).unwrap();
                    if let Some(p) = &prev {
                        prop_assert!(p.is_subset(&now));
                    }
                    let wider = PathSearch { max_len, degree_cap: cap + 3, banned_prefixes: &[] };
                    prop_assert!(now.is_subset(&enumerate_simple_paths(&g, src, dst, &wider).unwrap()));
                    prev = Some(now);
                }
            }
        }
    }

    #[test]
    fn pruning_is_sound(triples in graph_strategy(8, 20)) {
        let g = build(&triples);
        let banned = banned();
        let unpruned = PathSearch { max_len: 3, degree_cap: usize::MAX, banned_prefixes: &[] };
        let pruned = PathSearch { max_len: 3, degree_cap: usize::MAX, banned_prefixes: &banned };
        for src in g.entities() {
            for dst in g.entities().filter(|d| *d != src) {
                let all = enumerate_simple_paths(&g, src, dst, &unpruned).unwrap();
                let kept = enumerate_simple_paths(&g, src, dst, &pruned).unwrap();
                for p in &kept {
                    prop_assert!(!banned.iter().any(|b| p.first().name().starts_with(b.as_str())));
                }
                let filtered = prune_generic(all.clone(), &banned);
                prop_assert_eq!(&filtered, &kept);
                prop_assert_eq!(prune_generic(filtered.clone(), &banned), filtered);
            }
        }
    }

    #[test]
    fn every_paths_result_connects_its_endpoints(triples in graph_strategy(8, 20)) {
        let g = build(&triples);
        let opts = PathSearch { max_len: 3, degree_cap: usize::MAX, banned_prefixes: &[] };
        for src in g.entities() {
            for dst in g.entities().filter(|d| *d != src) {
                for p in enumerate_simple_paths(&g, src, dst, &opts).unwrap() {
                    prop_assert!(tabcomplete_core::query::connects(&g, src, dst, &p));
                }
            }
        }
    }

    #[test]
    fn joined_chains_retrieve_tuples(triples in graph_strategy(8, 24)) {
        let g = build(&triples);
        let opts = PathSearch { max_len: 2, degree_cap: usize::MAX, banned_prefixes: &[] };
        let ids: Vec<_> = g.entities().collect();
        let se = ids[0];
        let mut p1s = BTreeSet::new();
        let mut p2s = BTreeSet::new();
        for &x in &ids[1..] {
            p1s.extend(enumerate_simple_paths(&g, se, x, &opts).unwrap());
            for &y in ids.iter().filter(|y| **y != x) {
                p2s.extend(enumerate_simple_paths(&g, x, y, &opts).unwrap());
            }
        }
        for chain in join_chains(&g, se, &p1s, &p2s).unwrap() {
            prop_assert!(!execute_chain(&g, se, &chain, &QueryBudget::unlimited()).unwrap().is_empty());
        }
    }
}

#[test]
fn canonical_order_matches_string_order() {
    let texts = ["a.b", "a.b/c", "a.b/^c", "^a", "a", "a.b.c", "ab", "a/b"];
    let paths: Vec<MetaPath> = texts.iter().map(|t| MetaPath::parse(t).unwrap()).collect();
    for a in &paths {
        assert_eq!(&MetaPath::parse(&a.canonical()).unwrap(), a);
        for b in &paths {
            assert_eq!(a.cmp(b), a.canonical().cmp(&b.canonical()), "{a} vs {b}");
        }
    }
}
