//! Ranking metrics with binary relevance.

use alloc::collections::BTreeSet;

/// Discount of the item at zero-based position `i`.
pub(crate) fn discount(i: usize) -> f64 {
    1.0 / libm::log2(i as f64 + 2.0)
}

pub fn dcg(relevant: &[bool]) -> f64 {
    relevant
        .iter()
        .enumerate()
        .filter(|(_, r)| **r)
        .map(|(i, _)| discount(i))
        .sum()
}

/// DCG of the ideal ordering with `hits` relevant items.
pub fn ideal_dcg(hits: usize) -> f64 {
    (0..hits).map(discount).sum()
}

/// NDCG over the whole list. A list without relevant items scores 0.
pub fn ndcg(relevant: &[bool]) -> f64 {
    let hits = relevant.iter().filter(|r| **r).count();
    if hits == 0 {
        return 0.0;
    }
    dcg(relevant) / ideal_dcg(hits)
}

/// 1 if the first ranked item is expected, else 0 (also for an empty list).
pub fn precision_at_1<T: Ord>(ranked: &[T], expected: &BTreeSet<T>) -> f64 {
    match ranked.first() {
        Some(top) if expected.contains(top) => 1.0,
        _ => 0.0,
    }
}
