//! Fold splits, balanced negative sampling and feature matrices.

use std::collections::HashSet;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attr_sim::{ProfileIndex, SimVector, TokenMatcher};
use crate::embedding::{pair_embedding_features_into, EmbeddingTable, PairMode};
use crate::error::{Error, Result};
use crate::kg::{AlignmentRole, AlignmentSet, EntityId, EntityPair, EntityRef};

pub const FOLD_COUNT: usize = 5;
pub const TRAIN_SHARE: f64 = 0.2;
pub const VALIDATION_SHARE: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fold {
    pub train: AlignmentSet,
    pub validation: AlignmentSet,
    pub test: AlignmentSet,
}

impl Fold {
    /// The three parts must be pairwise disjoint and cover `gold` exactly.
    pub fn check_partition(&self, gold: &AlignmentSet) -> Result<()> {
        let parts = [&self.train, &self.validation, &self.test];
        let total: usize = parts.iter().map(|p| p.len()).sum();
        if total != gold.len() {
            return Err(Error::InvalidInput(format!(
                "fold parts hold {total} pairs, gold has {}",
                gold.len()
            )));
        }
        let mut seen = HashSet::with_capacity(total);
        for pair in parts.iter().flat_map(|p| p.iter()) {
            if !gold.contains(pair) {
                return Err(Error::InvalidInput(format!("fold pair {pair:?} is not a gold pair")));
            }
            if !seen.insert(*pair) {
                return Err(Error::InvalidInput(format!("fold pair {pair:?} appears in two parts")));
            }
        }
        Ok(())
    }
}

/// Five independent shuffles of `gold`, each cut into 20% train, 10%
/// validation and 70% test (shares rounded to the nearest pair).
pub fn split_folds(gold: &AlignmentSet, seed: u64) -> Result<Vec<Fold>> {
    let n = gold.len();
    if n < 10 {
        return Err(Error::InvalidInput(format!("need at least 10 gold pairs to split, found {n}")));
    }
    let n_train = (TRAIN_SHARE * n as f64).round() as usize;
    let n_valid = (VALIDATION_SHARE * n as f64).round() as usize;
    let pairs: Vec<EntityPair> = gold.iter().copied().collect();
    Ok((0..FOLD_COUNT)
        .map(|fold| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(fold as u64);
            let mut order = pairs.clone();
            order.shuffle(&mut rng);
            let part = |range: std::ops::Range<usize>, role| {
                AlignmentSet::from_pairs(role, order[range].iter().copied())
            };
            Fold {
                train: part(0..n_train, AlignmentRole::Train),
                validation: part(n_train..n_train + n_valid, AlignmentRole::Validation),
                test: part(n_train + n_valid..n, AlignmentRole::Test),
            }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabeledPair {
    pub first: EntityId,
    pub second: EntityId,
    pub is_match: bool,
}

/// Rejection draws allowed per requested negative before giving up.
pub const MAX_DRAWS_PER_NEGATIVE: usize = 1000;

/// Returns the positives (labelled match) followed by
/// `ceil(ratio · |positives|)` distinct negatives. Each negative corrupts
/// one side of a random positive with a uniformly drawn entity, and never
/// hits `forbidden` or a positive.
pub fn sample_negatives(
    positives: &[EntityPair],
    num_first: usize,
    num_second: usize,
    forbidden: &AlignmentSet,
    ratio: f64,
    rng: &mut impl Rng,
) -> Result<Vec<LabeledPair>> {
    if !(ratio >= 0.0) || !ratio.is_finite() {
        return Err(Error::Config(format!("negative ratio must be a finite non-negative number, got {ratio}")));
    }
    let needed = (ratio * positives.len() as f64).ceil() as usize;
    let mut out: Vec<LabeledPair> = positives
        .iter()
        .map(|&(first, second)| LabeledPair {
            first,
            second,
            is_match: true,
        })
        .collect();
    if needed == 0 {
        return Ok(out);
    }
    if num_first == 0 || num_second == 0 {
        return Err(Error::InvalidInput("cannot sample negatives from an empty graph".into()));
    }
    let positive_set: HashSet<EntityPair> = positives.iter().copied().collect();
    let mut chosen = HashSet::with_capacity(needed);
    let max_draws = MAX_DRAWS_PER_NEGATIVE * needed;
    let mut draws = 0;
    while chosen.len() < needed {
        if draws == max_draws {
            return Err(Error::InvalidInput(format!(
                "negative pool exhausted: found {} of {needed} negatives after {max_draws} draws",
                chosen.len()
            )));
        }
        draws += 1;
        let &(a, b) = positives.choose(rng).expect("positives are non-empty");
        let candidate = if rng.gen_bool(0.5) {
            (EntityId(rng.gen_range(0..num_first as u32)), b)
        } else {
            (a, EntityId(rng.gen_range(0..num_second as u32)))
        };
        if forbidden.contains(&candidate) || positive_set.contains(&candidate) || !chosen.insert(candidate) {
            continue;
        }
        out.push(LabeledPair {
            first: candidate.0,
            second: candidate.1,
            is_match: false,
        });
    }
    Ok(out)
}

/// Which features make up a pair's vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Attribute similarities only.
    #[serde(rename = "A")]
    Attributes,
    /// Embedding features only.
    #[serde(rename = "E")]
    Embeddings,
    /// Attribute similarities followed by embedding features.
    #[serde(rename = "A||E", alias = "AE")]
    Combined,
}

impl Variant {
    pub fn uses_embeddings(self) -> bool {
        !matches!(self, Variant::Attributes)
    }

    pub fn uses_attributes(self) -> bool {
        !matches!(self, Variant::Embeddings)
    }

    pub fn feature_dim(self, embedding_dim: usize, mode: PairMode) -> usize {
        let attr = if self.uses_attributes() { SimVector::LEN } else { 0 };
        let emb = if self.uses_embeddings() {
            mode.feature_len(embedding_dim)
        } else {
            0
        };
        attr + emb
    }
}

/// Row-major features with one label per row.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    pub variant: Option<Variant>,
    feature_dim: usize,
    values: Vec<f64>,
    labels: Vec<bool>,
}

impl FeatureMatrix {
    pub fn new(variant: Option<Variant>, feature_dim: usize, values: Vec<f64>, labels: Vec<bool>) -> Result<Self> {
        if values.len() != feature_dim * labels.len() {
            return Err(Error::DimensionMismatch {
                expected: feature_dim * labels.len(),
                actual: values.len(),
            });
        }
        Ok(Self {
            variant,
            feature_dim,
            values,
            labels,
        })
    }

    pub fn empty(variant: Option<Variant>, feature_dim: usize) -> Self {
        Self {
            variant,
            feature_dim,
            values: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.feature_dim..(i + 1) * self.feature_dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        (0..self.len()).map(move |i| self.row(i))
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Header `f0,..,f{dim-1},label`, labels as 0/1.
    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (0..self.feature_dim).map(|i| format!("f{i}")).collect();
        header.push("label".into());
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(self.feature_dim + 1);
        for (row, &label) in self.rows().zip(&self.labels) {
            record.clear();
            record.extend(row.iter().map(|x| x.to_string()));
            record.push(if label { "1".into() } else { "0".into() });
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io("cannot write feature csv", e))
    }

    pub fn read_csv(reader: impl Read) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        if header.iter().next_back() != Some("label") {
            return Err(Error::InvalidInput("feature csv must end with a label column".into()));
        }
        let feature_dim = header.len() - 1;
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for (i, record) in r.records().enumerate() {
            let record = record?;
            let bad = |what: &str| Error::InvalidInput(format!("feature csv row {}: {what}", i + 1));
            for field in record.iter().take(feature_dim) {
                values.push(field.trim().parse::<f64>().map_err(|_| bad("non-numeric feature"))?);
            }
            labels.push(match record.get(feature_dim).map(str::trim) {
                Some("1") => true,
                Some("0") => false,
                _ => return Err(bad("label must be 0 or 1")),
            });
        }
        Self::new(None, feature_dim, values, labels)
    }
}

/// Settings shared by every row of a feature matrix.
#[derive(Clone, Copy, Debug)]
pub struct FeatureSpec<'a> {
    pub variant: Variant,
    pub profiles: &'a ProfileIndex,
    pub embeddings: Option<&'a EmbeddingTable>,
    pub mode: PairMode,
    pub matcher: TokenMatcher,
}

/// Builds one row per pair, in input order.
pub fn assemble_features(pairs: &[LabeledPair], spec: &FeatureSpec<'_>) -> Result<FeatureMatrix> {
    let table = match (spec.variant.uses_embeddings(), spec.embeddings) {
        (true, None) => {
            return Err(Error::Config(format!(
                "variant {:?} requires an embedding table",
                spec.variant
            )))
        }
        (_, table) => table,
    };
    let feature_dim = spec.variant.feature_dim(table.map_or(0, EmbeddingTable::dim), spec.mode);
    let rows = pairs
        .par_iter()
        .map(|pair| -> Result<Vec<f64>> {
            let e1 = EntityRef::first(pair.first);
            let e2 = EntityRef::second(pair.second);
            let mut row = Vec::with_capacity(feature_dim);
            if spec.variant.uses_attributes() {
                let p1 = spec
                    .profiles
                    .get(e1)
                    .ok_or_else(|| Error::UnknownEntity(format!("{e1} has no profile")))?;
                let p2 = spec
                    .profiles
                    .get(e2)
                    .ok_or_else(|| Error::UnknownEntity(format!("{e2} has no profile")))?;
                row.extend(SimVector::compute(p1, p2, spec.matcher).to_array());
            }
            if let (true, Some(table)) = (spec.variant.uses_embeddings(), table) {
                pair_embedding_features_into(table, e1, e2, spec.mode, &mut row)?;
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let values = rows.into_iter().flatten().collect();
    FeatureMatrix::new(
        Some(spec.variant),
        feature_dim,
        values,
        pairs.iter().map(|p| p.is_match).collect(),
    )
}
