//! Token normalization and set/vector similarity shared by every module.
//!
//! One tokenizer is used everywhere: lowercase, split on every character
//! that is not alphanumeric (this covers whitespace and `. _ / ^ -`), drop
//! empty tokens.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

/// Replacement for purely numeric tokens in query intent strings.
pub const NUM_TOKEN: &str = "numtkn";
/// Replacement for an empty query intent string.
pub const EMPTY_TOKEN: &str = "emptstr";

pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

pub fn token_set<I, S>(texts: I) -> BTreeSet<String>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    texts
        .into_iter()
        .flat_map(|t| tokenize(t.as_ref()))
        .collect()
}

pub fn is_numeric(token: &str) -> bool {
    !token.is_empty() && token.chars().all(|c| c.is_ascii_digit())
}

/// Remove the first case-insensitive occurrence of `needle` from `haystack`.
/// The result is lowercased, which is harmless since it is tokenized next.
pub fn remove_first_ci(haystack: &str, needle: &str) -> String {
    let hay = haystack.to_lowercase();
    let needle = needle.to_lowercase();
    if needle.is_empty() {
        return hay;
    }
    match hay.find(&needle) {
        Some(at) => {
            let mut out = String::with_capacity(hay.len() - needle.len() + 1);
            out.push_str(&hay[..at]);
            out.push(' ');
            out.push_str(&hay[at + needle.len()..]);
            out
        }
        None => hay,
    }
}

/// Stand-in lemmatizer for column names: strips a trailing `es` or `s`
/// from tokens of at least four characters.
pub fn singularize(token: &str) -> String {
    if token.chars().count() < 4 {
        return token.to_string();
    }
    if let Some(stem) = token.strip_suffix("es") {
        // "es" only marks a plural after a sibilant; "Roles" -> "role".
        if stem.ends_with('s')
            || stem.ends_with('x')
            || stem.ends_with('z')
            || stem.ends_with("ch")
            || stem.ends_with("sh")
        {
            return stem.to_string();
        }
    }
    if let Some(stem) = token.strip_suffix('s') {
        if !stem.ends_with('s') {
            return stem.to_string();
        }
    }
    token.to_string()
}

/// Jaccard similarity of two sets. Two empty sets score 0.
pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Cosine similarity; zero vectors score 0.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot(a, b) / (na * nb)).clamp(-1.0, 1.0)
}

/// 64-bit FNV-1a, used for vocabulary fingerprints and seeded hashing.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn tokenizer_splits_on_separators() {
        assert_eq!(tokenize("tv.tv_actor/^a-b  C"), vec!["tv", "tv", "actor", "a", "b", "c"]);
        assert!(tokenize("  ..__ ").is_empty());
    }

    #[test]
    fn singularize_rule() {
        assert_eq!(singularize("actors"), "actor");
        assert_eq!(singularize("character"), "character");
        assert_eq!(singularize("matches"), "match");
        assert_eq!(singularize("roles"), "role");
        assert_eq!(singularize("cars"), "car");
        assert_eq!(singularize("bus"), "bus");
        assert_eq!(singularize("class"), "class");
    }

    #[test]
    fn jaccard_basics() {
        let a: BTreeSet<_> = ["a", "b"].into_iter().collect();
        let b: BTreeSet<_> = ["b", "c"].into_iter().collect();
        assert!((jaccard(&a, &b) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(jaccard(&a, &a), 1.0);
        assert_eq!(jaccard::<&str>(&BTreeSet::new(), &BTreeSet::new()), 0.0);
    }

    #[test]
    fn cosine_zero_vector_is_zero() {
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 2.0]), 0.0);
        assert!((cosine(&[1.0, 0.0], &[2.0, 0.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn remove_first_occurrence_case_insensitive() {
        assert_eq!(remove_first_ci("CSI: Miami CSI: Miami", "csi: miami"), "  csi: miami");
        assert_eq!(remove_first_ci("abc", "x"), "abc");
    }
}
