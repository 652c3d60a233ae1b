//! Reference implementations over plain triple lists, written for clarity
//! rather than speed. They share no code with the library.

#![allow(dead_code)]

use std::collections::BTreeSet;

pub type Triple = (String, String, String);

/// One traversal step: (predicate token as text, from, to).
fn steps(triples: &[Triple]) -> Vec<(String, String, String)> {
    let unique: BTreeSet<&Triple> = triples.iter().collect();
    let mut out = Vec::new();
    for (s, p, o) in unique {
        out.push((p.clone(), s.clone(), o.clone()));
        out.push((format!("^{p}"), o.clone(), s.clone()));
    }
    out
}

pub fn degree(triples: &[Triple], node: &str) -> usize {
    steps(triples).iter().filter(|(_, from, _)| from == node).count()
}

/// Every simple path from `src` to `dst` with at most `max_len` edges, as
/// "/"-joined tokens. Intermediate nodes with degree above `cap` are dead
/// ends; the first hop's predicate name (either direction) may not start
/// with a banned prefix.
pub fn brute_force_paths(
    triples: &[Triple],
    src: &str,
    dst: &str,
    max_len: usize,
    cap: usize,
    banned: &[String],
) -> BTreeSet<String> {
    let all = steps(triples);
    let deg = |node: &str| all.iter().filter(|(_, from, _)| from == node).count();
    let mut found = BTreeSet::new();
    // Breadth-first over explicit partial paths.
    let mut partial: Vec<(Vec<String>, Vec<String>)> = vec![(vec![src.to_string()], Vec::new())];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for (nodes, tokens) in &partial {
            let here = nodes.last().unwrap();
            if nodes.len() > 1 && deg(here) > cap {
                continue;
            }
            for (tok, from, to) in &all {
                if from != here {
                    continue;
                }
                let name = tok.trim_start_matches('^');
                if tokens.is_empty() && banned.iter().any(|b| name.starts_with(b.as_str())) {
                    continue;
                }
                if nodes.contains(to) {
                    continue;
                }
                let mut toks = tokens.clone();
                toks.push(tok.clone());
                if to == dst {
                    found.insert(toks.join("/"));
                } else {
                    let mut ns = nodes.clone();
                    ns.push(to.clone());
                    next.push((ns, toks));
                }
            }
        }
        partial = next;
    }
    found
}

/// Binary relation of one token.
fn relation(triples: &[Triple], token: &str) -> BTreeSet<(String, String)> {
    steps(triples)
        .into_iter()
        .filter(|(t, _, _)| t == token)
        .map(|(_, a, b)| (a, b))
        .collect()
}

/// Relation of a "/"-joined path by repeated composition.
pub fn path_relation(triples: &[Triple], path: &str) -> BTreeSet<(String, String)> {
    let mut tokens = path.split('/');
    let mut rel = relation(triples, tokens.next().unwrap());
    for tok in tokens {
        let step = relation(triples, tok);
        rel = rel
            .iter()
            .flat_map(|(a, b)| step.iter().filter(move |(c, _)| c == b).map(move |(_, d)| (a.clone(), d.clone())))
            .collect();
    }
    rel
}

/// `{(x, y) | (se, x) in P1 and (x, y) in P2}` by a nested-loop join.
pub fn naive_chain(triples: &[Triple], se: &str, p1: &str, p2: &str) -> BTreeSet<(String, String)> {
    naive_join(&path_relation(triples, p1), &path_relation(triples, p2), se)
}

/// The nested-loop join of two precomputed path relations.
pub fn naive_join(
    r1: &BTreeSet<(String, String)>,
    r2: &BTreeSet<(String, String)>,
    se: &str,
) -> BTreeSet<(String, String)> {
    let mut out = BTreeSet::new();
    for (a, x) in r1 {
        if a != se {
            continue;
        }
        for (x2, y) in r2 {
            if x2 == x {
                out.insert((x.clone(), y.clone()));
            }
        }
    }
    out
}

/// DCG straight from the definition.
pub fn ndcg(rels: &[bool]) -> f64 {
    let dcg = |r: &[bool]| -> f64 {
        r.iter()
            .enumerate()
            .map(|(i, &x)| if x { 1.0 / ((i + 2) as f64).log2() } else { 0.0 })
            .sum()
    };
    let mut ideal = rels.to_vec();
    ideal.sort_by(|a, b| b.cmp(a));
    let idcg = dcg(&ideal);
    if idcg == 0.0 {
        0.0
    } else {
        dcg(rels) / idcg
    }
}
