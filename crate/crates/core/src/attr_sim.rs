//! Attribute profiles and string similarity features.
//!
//! Every entity is reduced to one profile string: all of its attribute
//! values, sorted by `(attribute IRI, value)`, lowercased, NFC-normalized and
//! joined with single spaces. A pair of profiles yields three features on
//! `[0, 1]`: normalized Levenshtein, Generalized Jaccard over alphanumeric
//! tokens (Jaro inner measure) and trigram Dice.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::kg::{EntityId, EntityRef, KgSide, KnowledgeGraph};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttributeProfile {
    pub entity: EntityRef,
    pub text: String,
}

pub fn build_profile(kg: &KnowledgeGraph, side: KgSide, entity: EntityId) -> Result<AttributeProfile> {
    if !kg.contains_entity(entity) {
        return Err(Error::UnknownEntity(EntityRef { side, id: entity }.to_string()));
    }
    Ok(AttributeProfile {
        entity: EntityRef { side, id: entity },
        text: profile_text(kg.attributes_of(entity)),
    })
}

fn profile_text<'a>(values: impl Iterator<Item = (&'a str, &'a str)>) -> String {
    let mut values: Vec<_> = values.collect();
    values.sort_unstable();
    let mut text = String::new();
    for (_, value) in values {
        if !text.is_empty() {
            text.push(' ');
        }
        text.extend(value.to_lowercase().nfc());
    }
    text
}

/// Profile texts of every entity of both graphs, indexed by entity id.
#[derive(Clone, Debug, Default)]
pub struct ProfileIndex {
    first: Vec<String>,
    second: Vec<String>,
}

impl ProfileIndex {
    pub fn build(kg1: &KnowledgeGraph, kg2: &KnowledgeGraph) -> Self {
        let texts = |kg: &KnowledgeGraph| {
            kg.entity_ids()
                .collect::<Vec<_>>()
                .into_par_iter()
                .map(|e| profile_text(kg.attributes_of(e)))
                .collect()
        };
        Self {
            first: texts(kg1),
            second: texts(kg2),
        }
    }

    pub fn get(&self, entity: EntityRef) -> Option<&str> {
        let texts = match entity.side {
            KgSide::First => &self.first,
            KgSide::Second => &self.second,
        };
        texts.get(entity.id.index()).map(String::as_str)
    }
}

/// Unit-cost edit distance over Unicode scalar values.
pub fn levenshtein_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut curr = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        curr[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let substitution = prev[j] + usize::from(ca != cb);
            curr[j + 1] = substitution.min(prev[j + 1] + 1).min(curr[j] + 1);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// `1 - D(a, b) / max(|a|, |b|)`, and 1 for two empty strings.
pub fn levenshtein_sim(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein_distance(a, b) as f64 / longest as f64
}

/// Character 3-grams (no padding) with multiplicities. Non-empty strings
/// shorter than three characters form a single gram.
fn trigram_counts(s: &str) -> HashMap<Vec<char>, usize> {
    let chars: Vec<char> = s.chars().collect();
    let mut counts = HashMap::new();
    if chars.is_empty() {
        return counts;
    }
    if chars.len() < 3 {
        counts.insert(chars, 1);
        return counts;
    }
    for gram in chars.windows(3) {
        *counts.entry(gram.to_vec()).or_insert(0) += 1;
    }
    counts
}

/// Dice coefficient over trigram multisets.
pub fn trigram_dice_sim(a: &str, b: &str) -> f64 {
    let ga = trigram_counts(a);
    let gb = trigram_counts(b);
    let total: usize = ga.values().sum::<usize>() + gb.values().sum::<usize>();
    if total == 0 {
        return 1.0;
    }
    let common: usize = ga
        .iter()
        .map(|(gram, &n)| gb.get(gram).map_or(0, |&m| n.min(m)))
        .sum();
    2.0 * common as f64 / total as f64
}

/// Maximal runs of alphanumeric characters, in order.
pub fn alnum_tokenize(s: &str) -> Vec<&str> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .collect()
}

pub fn jaro_sim(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let window = (a.len().max(b.len()) / 2).saturating_sub(1);
    let mut b_used = vec![false; b.len()];
    let mut a_matched = Vec::with_capacity(a.len());
    for (i, ca) in a.iter().enumerate() {
        let lo = i.saturating_sub(window);
        let hi = (i + window + 1).min(b.len());
        for j in lo..hi {
            if !b_used[j] && b[j] == *ca {
                b_used[j] = true;
                a_matched.push(*ca);
                break;
            }
        }
    }
    let matches = a_matched.len();
    if matches == 0 {
        return 0.0;
    }
    let b_matched = b.iter().zip(&b_used).filter(|(_, &used)| used).map(|(c, _)| *c);
    let half_transpositions = a_matched.iter().zip(b_matched).filter(|(x, y)| **x != *y).count();
    let m = matches as f64;
    let t = (half_transpositions / 2) as f64;
    (m / a.len() as f64 + m / b.len() as f64 + (m - t) / m) / 3.0
}

/// How Generalized Jaccard pairs up tokens.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenMatcher {
    /// Take candidate pairs in descending similarity, each token once.
    #[default]
    Greedy,
    /// Maximum-weight assignment over candidate pairs.
    Optimal,
}

/// Pairs with inner similarity below this are never matched.
pub const GJACCARD_THRESHOLD: f64 = 0.5;

pub fn generalized_jaccard_sim(a: &str, b: &str) -> f64 {
    generalized_jaccard_with(a, b, TokenMatcher::Greedy)
}

pub fn generalized_jaccard_with(a: &str, b: &str, matcher: TokenMatcher) -> f64 {
    let x = alnum_tokenize(a);
    let y = alnum_tokenize(b);
    generalized_jaccard_tokens(&x, &y, matcher)
}

pub fn generalized_jaccard_tokens(x: &[&str], y: &[&str], matcher: TokenMatcher) -> f64 {
    if x.is_empty() && y.is_empty() {
        return 1.0;
    }
    if x.is_empty() || y.is_empty() {
        return 0.0;
    }
    let mut cache: HashMap<(&str, &str), f64> = HashMap::new();
    let mut sims = vec![0.0; x.len() * y.len()];
    for (i, s) in x.iter().enumerate() {
        for (j, t) in y.iter().enumerate() {
            sims[i * y.len() + j] = *cache.entry((s, t)).or_insert_with(|| jaro_sim(s, t));
        }
    }
    let mut matched = match matcher {
        TokenMatcher::Greedy => greedy_matching(&sims, x.len(), y.len()),
        TokenMatcher::Optimal => optimal_matching(&sims, x.len(), y.len()),
    };
    // Canonical summation order so both matchers round identically.
    matched.sort_by(|p, q| q.total_cmp(p));
    let total = matched.iter().fold(0.0, |acc, s| acc + s);
    total / (x.len() + y.len() - matched.len()) as f64
}

fn greedy_matching(sims: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut candidates: Vec<(usize, usize)> = (0..rows)
        .flat_map(|i| (0..cols).map(move |j| (i, j)))
        .filter(|&(i, j)| sims[i * cols + j] >= GJACCARD_THRESHOLD)
        .collect();
    // Descending similarity, ties broken by (row, col).
    candidates.sort_by(|&(i, j), &(k, l)| {
        sims[k * cols + l]
            .total_cmp(&sims[i * cols + j])
            .then((i, j).cmp(&(k, l)))
    });
    let mut row_used = vec![false; rows];
    let mut col_used = vec![false; cols];
    let mut matched = Vec::new();
    for (i, j) in candidates {
        if !row_used[i] && !col_used[j] {
            row_used[i] = true;
            col_used[j] = true;
            matched.push(sims[i * cols + j]);
        }
    }
    matched
}

/// Maximum-weight bipartite matching (Hungarian algorithm on a square cost
/// matrix). Pairs below the threshold get weight 0 and are not counted.
fn optimal_matching(sims: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let n = rows.max(cols);
    let weight = |i: usize, j: usize| {
        if i < rows && j < cols && sims[i * cols + j] >= GJACCARD_THRESHOLD {
            sims[i * cols + j]
        } else {
            0.0
        }
    };
    // Minimize cost = -weight. Potentials u (rows), v (cols), 1-based.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut assigned = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        assigned[0] = i;
        let mut j0 = 0;
        let mut min_v = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = assigned[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = -weight(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < min_v[j] {
                    min_v[j] = cur;
                    way[j] = j0;
                }
                if min_v[j] < delta {
                    delta = min_v[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[assigned[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
                }
            }
            j0 = j1;
            if assigned[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            assigned[j0] = assigned[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=n)
        .filter_map(|j| {
            let w = weight(assigned[j] - 1, j - 1);
            (w > 0.0).then_some(w)
        })
        .collect()
}

/// The attribute part of a pair's feature vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimVector {
    pub lev: f64,
    pub gjac: f64,
    pub dice: f64,
}

impl SimVector {
    pub const LEN: usize = 3;

    pub fn compute(a: &str, b: &str, matcher: TokenMatcher) -> Self {
        Self {
            lev: levenshtein_sim(a, b),
            gjac: generalized_jaccard_with(a, b, matcher),
            dice: trigram_dice_sim(a, b),
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.lev, self.gjac, self.dice]
    }
}

pub fn attr_feature_vector(p1: &AttributeProfile, p2: &AttributeProfile) -> SimVector {
    SimVector::compute(&p1.text, &p2.text, TokenMatcher::Greedy)
}
