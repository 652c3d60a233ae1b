mod common;

use common::oracle;
use proptest::prelude::*;
use std::collections::BTreeSet;
use std::f64::consts::FRAC_1_SQRT_2;
use tabcomplete_core::graph::{EntityMetaStore, EntityRecord, PredicateMetaStore, PredicateRecord};
use tabcomplete_core::ranker::*;
use tabcomplete_core::ChainPair;

fn record(mid: &str, desc: &str, notable: &[&str], rdf: &[&str]) -> EntityRecord {
    EntityRecord {
        mid: mid.into(),
        name: mid.into(),
        description: desc.into(),
        notable_types: notable.iter().map(|s| s.to_string()).collect(),
        rdf_types: rdf.iter().map(|s| s.to_string()).collect(),
    }
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// Three entities: example row (A, B), candidate (C, B).
fn golden() -> FeatureVector {
    let entities: EntityMetaStore = [
        record("A", "a b", &["tv.actor"], &["people.person", "tv.actor"]),
        record("B", "x y", &["tv.character"], &["tv.character"]),
        record("C", "b c", &["film.director"], &["people.person"]),
    ]
    .iter()
    .collect();
    let predicates: PredicateMetaStore = [
        PredicateRecord { name: "tv.program.actor".into(), expected_target_types: strings(&["tv.actor"]) },
        PredicateRecord { name: "tv.actor.character".into(), expected_target_types: strings(&["tv.character"]) },
    ]
    .iter()
    .collect();
    let mut emb = PretrainedEmbeddings::new(2);
    for (t, v) in [
        ("a", [1.0, 0.0]),
        ("b", [0.0, 1.0]),
        ("c", [1.0, 1.0]),
        ("x", [1.0, 0.0]),
        ("y", [0.0, 1.0]),
        ("tv", [1.0, 0.0]),
        ("actor", [0.0, 1.0]),
        ("film", [-1.0, 0.0]),
        ("director", [0.0, -1.0]),
        ("character", [1.0, 1.0]),
        ("people", [0.0, -1.0]),
        ("person", [0.0, -1.0]),
    ] {
        emb.insert(t.into(), v.to_vec()).unwrap();
    }
    let chain = ChainPair::parse("tv.program.actor / tv.actor.character").unwrap();
    let (qis, cn1, cn2) = (strings(&["b", "x"]), strings(&["actor"]), strings(&["character"]));
    let ctx = FeatureContext {
        qis: &qis,
        cn1: &cn1,
        cn2: &cn2,
        er: ("A", "B"),
        chain: &chain,
        entities: &entities,
        predicates: &predicates,
        embeddings: &emb,
    };
    let all = featurize_all(&ctx, &[("C", "B"), ("C", "A"), ("A", "B")]);
    all[0]
}

#[test]
fn golden_features() {
    let f = golden();
    let s10 = 3.0 / 10f64.sqrt();
    #[rustfmt::skip]
    let want: [f64; FEATURE_COUNT] = [
        2.0,
        1.0 / 3.0, 1.0, s10, 1.0,
        1.0 / 3.0, 1.0 / 3.0, s10, 1.0,
        0.0, 1.0, -1.0, 1.0,
        0.5, 1.0, FRAC_1_SQRT_2, 1.0,
        1.0, 1.0, 0.0,
        1.0, 1.0, 0.0,
        0.5, 0.0, FRAC_1_SQRT_2, 0.0,
    ];
    for i in 0..FEATURE_COUNT {
        assert!((f.0[i] - want[i]).abs() < 1e-9, "{}: {} vs {}", FEATURE_NAMES[i], f.0[i], want[i]);
    }
}

#[test]
fn feature_names_are_frozen() {
    let joined = FEATURE_NAMES.join(",");
    assert_eq!(
        joined,
        "c1_frequency,desc_jaccard_c1,desc_jaccard_c2,desc_cosine_c1,desc_cosine_c2,\
         qis_desc_jaccard_c1,qis_desc_jaccard_c2,qis_desc_cosine_c1,qis_desc_cosine_c2,\
         notable_jaccard_c1,notable_jaccard_c2,notable_cosine_c1,notable_cosine_c2,\
         rdf_jaccard_c1,rdf_jaccard_c2,rdf_cosine_c1,rdf_cosine_c2,\
         p1_target_type_jaccard_diff,p2_source_type_jaccard_diff,p2_target_type_jaccard_diff,\
         p1_target_type_cosine_diff,p2_source_type_cosine_diff,p2_target_type_cosine_diff,\
         column_type_jaccard_diff_c1,column_type_jaccard_diff_c2,column_type_cosine_diff_c1,column_type_cosine_diff_c2"
    );
}

#[test]
fn ndcg_fixtures() {
    assert!((ndcg(&[true, false, true]) - 0.9197).abs() < 1e-4);
    assert_eq!(ndcg(&[true, true, false]), 1.0);
    assert_eq!(ndcg(&[false, false, false]), 0.0);
}

const WORDS: [&str; 6] = ["a", "b", "c", "tv", "film", "actor"];

fn word_set() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(&WORDS[..]).prop_map(String::from), 0..4)
}

fn meta_strategy() -> impl Strategy<Value = EntityRecord> {
    (word_set(), word_set(), word_set()).prop_map(|(d, n, r)| EntityRecord {
        mid: String::new(),
        name: String::new(),
        description: d.join(" "),
        notable_types: n,
        rdf_types: r,
    })
}

proptest! {
    #[test]
    fn ndcg_matches_definition_and_bounds(rels in prop::collection::vec(any::<bool>(), 0..12)) {
        let v = ndcg(&rels);
        prop_assert!((v - oracle::ndcg(&rels)).abs() < 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
        let hits = rels.iter().filter(|r| **r).count();
        let sorted_prefix = rels.iter().take(hits).all(|r| *r);
        if hits > 0 {
            prop_assert_eq!((v - 1.0).abs() < 1e-12, sorted_prefix);
        }
    }

    #[test]
    fn lambdas_are_antisymmetric(si in -5.0f64..5.0, sj in -5.0f64..5.0, delta in 0.0f64..1.0, sigma in 0.1f64..3.0) {
        let l = pair_lambda(si, sj, sigma, delta);
        prop_assert!(l <= 0.0);
        prop_assert!(l.abs() <= sigma * delta + 1e-15);
        let (g, w) = group_gradients(&[true, false], &[si, sj], sigma);
        prop_assert!((g[0] + g[1]).abs() < 1e-12);
        prop_assert!(w[0] >= 0.0 && (w[0] - w[1]).abs() < 1e-15);
    }

    #[test]
    fn ranking_is_invariant_under_monotone_maps(scores in prop::collection::vec(-100i32..100, 0..20)) {
        let s: Vec<f64> = scores.iter().map(|v| f64::from(*v)).collect();
        let keys: Vec<usize> = (0..s.len()).rev().collect();
        let mapped: Vec<f64> = s.iter().map(|v| (v / 7.0).exp() * 3.0 + 1.0).collect();
        prop_assert_eq!(rank_by(&s, &keys), rank_by(&mapped, &keys));
    }

    #[test]
    fn features_stay_in_range(er1 in meta_strategy(), er2 in meta_strategy(), t1 in meta_strategy(), t2 in meta_strategy(), qis in word_set(), cn1 in word_set(), cn2 in word_set()) {
        let mut recs = vec![er1, er2, t1, t2];
        for (r, mid) in recs.iter_mut().zip(["e1", "e2", "t1", "t2"]) {
            r.mid = mid.into();
        }
        let entities: EntityMetaStore = recs.iter().collect();
        let predicates: PredicateMetaStore = [PredicateRecord { name: "tv.film.actor".into(), expected_target_types: strings(&["film.actor"]) }].iter().collect();
        let mut emb = PretrainedEmbeddings::new(2);
        for (i, w) in WORDS.iter().enumerate() {
            let a = i as f64;
            emb.insert(w.to_string(), vec![a.cos(), a.sin()]).unwrap();
        }
        let chain = ChainPair::parse("tv.film.actor / ^tv.film.actor/c.d").unwrap();
        let ctx = FeatureContext { qis: &qis, cn1: &cn1, cn2: &cn2, er: ("e1", "e2"), chain: &chain, entities: &entities, predicates: &predicates, embeddings: &emb };
        let f = featurize(&ctx, ("t1", "t2"), 1);
        prop_assert!(f.0[0] >= 1.0);
        for i in (1..17).filter(|i| matches!(i % 4, 1 | 2)) {
            prop_assert!((0.0..=1.0).contains(&f.0[i]), "{}", FEATURE_NAMES[i]);
        }
        for i in (1..17).filter(|i| matches!(i % 4, 3 | 0)) {
            prop_assert!((-1.0..=1.0).contains(&f.0[i]), "{}", FEATURE_NAMES[i]);
        }
        for i in 17..27 {
            prop_assert!((-1.0..=1.0).contains(&f.0[i]), "{}", FEATURE_NAMES[i]);
        }
        let same = featurize(&FeatureContext { er: ("t1", "t2"), ..ctx }, ("t1", "t2"), 1);
        for i in 17..27 {
            prop_assert_eq!(same.0[i], 0.0);
        }
    }
}

#[test]
fn separable_ranking_fixture_is_learned() {
    let groups: Vec<RankingGroup> = (0..20)
        .map(|q| {
            let rel: Vec<bool> = (0..8).map(|i| (i * 3 + q) % 5 == 0).collect();
            RankingGroup {
                features: rel.iter().map(|r| vec![if *r { 1.0 } else { 0.0 }]).collect(),
                relevant: rel,
            }
        })
        .collect();
    let model = train_ranker(&groups, &RankerConfig::default()).unwrap();
    for g in &groups {
        let keys: Vec<usize> = (0..g.relevant.len()).collect();
        let ranked: Vec<bool> = rank(&model, &g.features, &keys).iter().map(|&i| g.relevant[i]).collect();
        assert_eq!(ndcg(&ranked), 1.0);
        let expected: BTreeSet<usize> = keys.iter().copied().filter(|&i| g.relevant[i]).collect();
        let order = rank(&model, &g.features, &keys);
        assert_eq!(precision_at_1(&order, &expected), 1.0);
    }
}
