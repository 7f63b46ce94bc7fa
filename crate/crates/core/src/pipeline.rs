//! Five-fold experiment driver.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attr_sim::{ProfileIndex, TokenMatcher};
use crate::classifiers::{train_classifier, ClassifierKind, MlpConfig, RandomForestConfig, TrainedModel};
use crate::dataset::{assemble_features, sample_negatives, FeatureMatrix, FeatureSpec, LabeledPair, Variant};
use crate::embedding::{load_embeddings, merge_graphs, train_transe, EmbeddingTable, PairMode, TransEConfig};
use crate::error::{Error, Result};
use crate::evaluation::{mean_prf, per_type_prf, prf, Prf};
use crate::ingest::{load_openea_dataset, DatasetBundle, TYPE_ATTRIBUTE};
use crate::kg::{AlignmentSet, EntityId, EntityPair, KnowledgeGraph};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingSource {
    /// TransE on the merged graph of each fold's training links.
    Train,
    /// Precomputed vectors shared by all folds.
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset_dir: PathBuf,
    pub variant: Variant,
    #[serde(default)]
    pub embedding: Option<EmbeddingSource>,
    #[serde(default)]
    pub pair_mode: PairMode,
    pub classifier: ClassifierKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_ratio")]
    pub negative_ratio: f64,
    #[serde(default)]
    pub matcher: TokenMatcher,
    #[serde(default)]
    pub transe: TransEConfig,
    #[serde(default)]
    pub rf: RandomForestConfig,
    #[serde(default)]
    pub mlp: MlpConfig,
}

fn default_ratio() -> f64 {
    1.0
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid run config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.variant.uses_embeddings() && self.embedding.is_none() {
            return Err(Error::Config(format!(
                "variant {} needs an embedding source (\"train\" or {{\"file\": path}})",
                variant_name(self.variant)
            )));
        }
        if !(self.negative_ratio > 0.0 && self.negative_ratio.is_finite()) {
            return Err(Error::Config(format!("negative_ratio must be positive, got {}", self.negative_ratio)));
        }
        self.transe.validate()?;
        match self.classifier {
            ClassifierKind::Rf => self.rf.validate(),
            ClassifierKind::Mlp => self.mlp.validate(),
        }
    }

    /// Makes relative paths relative to `base` (the config file's folder).
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.dataset_dir);
        if let Some(EmbeddingSource::File(p)) = &mut self.embedding {
            fix(p);
        }
        if let Some(p) = &mut self.output_dir {
            fix(p);
        }
    }
}

pub fn variant_name(v: Variant) -> &'static str {
    match v {
        Variant::Attributes => "A",
        Variant::Embeddings => "E",
        Variant::Combined => "A||E",
    }
}

/// What each per-fold generator was seeded with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSeeds {
    pub negatives: u64,
    pub transe: u64,
    pub classifier: u64,
}

const PURPOSE_NEGATIVES: u64 = 1;
const PURPOSE_TRANSE: u64 = 2;
const PURPOSE_CLASSIFIER: u64 = 3;

/// Independent seed for one purpose within one fold.
pub fn derive_seed(seed: u64, purpose: u64, fold: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose << 32 | fold as u64);
    rng.next_u64()
}

impl FoldSeeds {
    pub fn derive(seed: u64, fold: usize) -> Self {
        Self {
            negatives: derive_seed(seed, PURPOSE_NEGATIVES, fold),
            transe: derive_seed(seed, PURPOSE_TRANSE, fold),
            classifier: derive_seed(seed, PURPOSE_CLASSIFIER, fold),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    /// 1-based, matching the fold directories.
    pub fold: usize,
    pub seeds: FoldSeeds,
    pub train_pairs: usize,
    pub validation_pairs: usize,
    pub test_pairs: usize,
    pub metrics: Prf,
    /// Present when every test pair's first entity has a type attribute.
    pub per_type: Option<BTreeMap<String, Prf>>,
    pub embedding_loss_first: Option<f64>,
    pub embedding_loss_last: Option<f64>,
    pub mlp_epochs: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub folds: Vec<FoldReport>,
    /// Ratios averaged over folds, counts summed.
    pub aggregate: Prf,
    pub per_type: Option<BTreeMap<String, Prf>>,
}

/// Wall-clock seconds per phase of one fold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldTimings {
    pub fold: usize,
    pub embedding: f64,
    pub features: f64,
    pub training: f64,
    pub prediction: f64,
}

pub fn entity_type(kg: &KnowledgeGraph, entity: EntityId) -> Option<String> {
    kg.attributes_of(entity)
        .find(|(attr, _)| *attr == TYPE_ATTRIBUTE)
        .map(|(_, v)| v.to_owned())
}

fn labeled_set(
    links: &AlignmentSet,
    bundle: &DatasetBundle,
    ratio: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<LabeledPair>> {
    let positives: Vec<EntityPair> = links.iter().copied().collect();
    sample_negatives(
        &positives,
        bundle.kg1.num_entities(),
        bundle.kg2.num_entities(),
        &bundle.gold,
        ratio,
        rng,
    )
}

/// Labelled pairs of one fold: each part's links plus sampled negatives.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldPairs {
    pub train: Vec<LabeledPair>,
    pub validation: Vec<LabeledPair>,
    pub test: Vec<LabeledPair>,
}

/// Samples the negatives of fold `index` (0-based) from the run seed, in the
/// order train, validation, test. Gold links are never used as negatives.
pub fn fold_pairs(bundle: &DatasetBundle, index: usize, ratio: f64, seed: u64) -> Result<FoldPairs> {
    let fold = bundle
        .folds
        .get(index)
        .ok_or_else(|| Error::InvalidInput(format!("fold {} does not exist", index + 1)))?;
    let mut rng = ChaCha8Rng::seed_from_u64(FoldSeeds::derive(seed, index).negatives);
    Ok(FoldPairs {
        train: labeled_set(&fold.train, bundle, ratio, &mut rng)?,
        validation: labeled_set(&fold.validation, bundle, ratio, &mut rng)?,
        test: labeled_set(&fold.test, bundle, ratio, &mut rng)?,
    })
}

/// TransE over both graphs with the fold's training links fused. Returns
/// the table and the model's per-epoch losses.
pub fn fold_embeddings(
    bundle: &DatasetBundle,
    index: usize,
    cfg: &TransEConfig,
    seed: u64,
) -> Result<(EmbeddingTable, Vec<f64>)> {
    let fold = bundle
        .folds
        .get(index)
        .ok_or_else(|| Error::InvalidInput(format!("fold {} does not exist", index + 1)))?;
    let merged = merge_graphs(&bundle.kg1, &bundle.kg2, &fold.train)?;
    let tcfg = TransEConfig {
        seed: FoldSeeds::derive(seed, index).transe,
        ..cfg.clone()
    };
    let model = train_transe(&merged, &tcfg)?;
    let table = EmbeddingTable::from_merged(&model, &merged.id_map)?;
    Ok((table, model.loss_history))
}

struct FoldOutput {
    report: FoldReport,
    timings: FoldTimings,
}

fn run_fold(
    index: usize,
    bundle: &DatasetBundle,
    cfg: &RunConfig,
    profiles: &ProfileIndex,
    shared_table: Option<&EmbeddingTable>,
) -> Result<FoldOutput> {
    let seeds = FoldSeeds::derive(cfg.seed, index);
    let FoldPairs { train, validation, test } = fold_pairs(bundle, index, cfg.negative_ratio, cfg.seed)?;

    let clock = Instant::now();
    let mut losses = (None, None);
    let trained_table;
    let table = match (&cfg.embedding, cfg.variant.uses_embeddings()) {
        (Some(EmbeddingSource::Train), true) => {
            let (table, history) = fold_embeddings(bundle, index, &cfg.transe, cfg.seed)?;
            losses = (history.first().copied(), history.last().copied());
            trained_table = table;
            Some(&trained_table)
        }
        (_, true) => shared_table,
        (_, false) => None,
    };
    let embedding_time = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let spec = FeatureSpec {
        variant: cfg.variant,
        profiles,
        embeddings: table,
        mode: cfg.pair_mode,
        matcher: cfg.matcher,
    };
    let x_train = assemble_features(&train, &spec)?;
    let x_valid = assemble_features(&validation, &spec)?;
    let x_test = assemble_features(&test, &spec)?;
    let features_time = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let rf = RandomForestConfig {
        seed: seeds.classifier,
        ..cfg.rf.clone()
    };
    let mlp = MlpConfig {
        seed: seeds.classifier,
        ..cfg.mlp.clone()
    };
    let model = train_classifier(cfg.classifier, &x_train, &x_valid, &rf, &mlp)?;
    let training_time = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let (metrics, per_type) = score(&model, &x_test, &test, &bundle.kg1)?;
    let prediction_time = clock.elapsed().as_secs_f64();

    Ok(FoldOutput {
        report: FoldReport {
            fold: index + 1,
            seeds,
            train_pairs: train.len(),
            validation_pairs: validation.len(),
            test_pairs: test.len(),
            metrics,
            per_type,
            embedding_loss_first: losses.0,
            embedding_loss_last: losses.1,
            mlp_epochs: match &model {
                TrainedModel::Mlp(m) => Some(m.epochs_run),
                TrainedModel::Rf(_) => None,
            },
        },
        timings: FoldTimings {
            fold: index + 1,
            embedding: embedding_time,
            features: features_time,
            training: training_time,
            prediction: prediction_time,
        },
    })
}

fn score(
    model: &TrainedModel,
    x: &FeatureMatrix,
    pairs: &[LabeledPair],
    kg1: &KnowledgeGraph,
) -> Result<(Prf, Option<BTreeMap<String, Prf>>)> {
    let predictions = model.predict(x)?;
    let metrics = prf(x.labels(), &predictions.labels)?;
    let types: Vec<Option<String>> = pairs.iter().map(|p| entity_type(kg1, p.first)).collect();
    let per_type = if types.iter().all(Option::is_some) {
        Some(per_type_prf(x.labels(), &predictions.labels, &types)?)
    } else {
        None
    };
    Ok((metrics, per_type))
}

/// Runs every fold of an already loaded dataset. Folds run in parallel;
/// results do not depend on scheduling.
pub fn run_on_bundle(bundle: &DatasetBundle, cfg: &RunConfig) -> Result<(RunReport, Vec<FoldTimings>)> {
    cfg.validate()?;
    let shared_table = match (&cfg.embedding, cfg.variant.uses_embeddings()) {
        (Some(EmbeddingSource::File(path)), true) => Some(load_embeddings(path, &bundle.kg1, &bundle.kg2)?),
        _ => None,
    };
    let profiles = ProfileIndex::build(&bundle.kg1, &bundle.kg2);
    let outputs = bundle
        .folds
        .par_iter()
        .enumerate()
        .map(|(i, _)| run_fold(i, bundle, cfg, &profiles, shared_table.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let (folds, timings): (Vec<_>, Vec<_>) = outputs.into_iter().map(|o| (o.report, o.timings)).unzip();
    let aggregate = mean_prf(&folds.iter().map(|f| f.metrics).collect::<Vec<_>>())
        .ok_or_else(|| Error::InvalidInput("dataset has no folds".into()))?;
    let per_type = aggregate_types(&folds);
    Ok((
        RunReport {
            folds,
            aggregate,
            per_type,
        },
        timings,
    ))
}

fn aggregate_types(folds: &[FoldReport]) -> Option<BTreeMap<String, Prf>> {
    let mut by_type: BTreeMap<String, Vec<Prf>> = BTreeMap::new();
    for fold in folds {
        for (t, p) in fold.per_type.as_ref()? {
            by_type.entry(t.clone()).or_default().push(*p);
        }
    }
    Some(
        by_type
            .into_iter()
            .filter_map(|(t, items)| mean_prf(&items).map(|p| (t, p)))
            .collect(),
    )
}

/// Loads the dataset named in `cfg` (generating folds from `cfg.seed` if
/// it has none) and runs all folds.
pub fn run_pipeline(cfg: &RunConfig) -> Result<(RunReport, Vec<FoldTimings>)> {
    cfg.validate()?;
    let bundle = load_openea_dataset(&cfg.dataset_dir, cfg.seed)?;
    run_on_bundle(&bundle, cfg)
}
