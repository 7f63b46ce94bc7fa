//! Random forest and multi-layer perceptron match classifiers.

mod forest;
mod mlp;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use forest::{train_rf, DecisionTree, Node, RandomForest, RandomForestConfig};
pub use mlp::{gradient_check, mlp_gradient_check, train_mlp, Adam, Mlp, MlpConfig, MlpModel};

use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "eager-model";
pub const MODEL_VERSION: u32 = 1;
pub const MATCH_THRESHOLD: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Rf,
    Mlp,
}

pub(crate) fn check_training_data(x: &FeatureMatrix) -> Result<()> {
    if x.len() < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 training rows, found {}", x.len())));
    }
    if x.feature_dim() == 0 {
        return Err(Error::InvalidInput("training rows have no features".into()));
    }
    let matches = x.labels().iter().filter(|&&l| l).count();
    if matches == 0 || matches == x.len() {
        return Err(Error::InvalidInput("training data must contain both classes".into()));
    }
    if x.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("training features must be finite".into()));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrainedModel {
    Rf(RandomForest),
    Mlp(MlpModel),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Predictions {
    pub labels: Vec<bool>,
    pub scores: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    feature_dim: usize,
    seed: u64,
    model: TrainedModel,
}

impl TrainedModel {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            TrainedModel::Rf(_) => ClassifierKind::Rf,
            TrainedModel::Mlp(_) => ClassifierKind::Mlp,
        }
    }

    pub fn feature_dim(&self) -> usize {
        match self {
            TrainedModel::Rf(m) => m.feature_dim,
            TrainedModel::Mlp(m) => m.feature_dim(),
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            TrainedModel::Rf(m) => m.config.seed,
            TrainedModel::Mlp(m) => m.config.seed,
        }
    }

    pub fn score(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.feature_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim(),
                actual: row.len(),
            });
        }
        Ok(match self {
            TrainedModel::Rf(m) => m.score(row),
            TrainedModel::Mlp(m) => m.score(row),
        })
    }

    /// Scores every row; a row is a match when its score is at least 0.5.
    pub fn predict_rows<'a>(&self, rows: impl IntoIterator<Item = &'a [f64]>) -> Result<Predictions> {
        let mut out = Predictions::default();
        for row in rows {
            let score = self.score(row)?;
            out.scores.push(score);
            out.labels.push(score >= MATCH_THRESHOLD);
        }
        Ok(out)
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Result<Predictions> {
        if !x.is_empty() && x.feature_dim() != self.feature_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim(),
                actual: x.feature_dim(),
            });
        }
        self.predict_rows(x.rows())
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            feature_dim: self.feature_dim(),
            seed: self.seed(),
            model: self.clone(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported model container {} v{}",
                file.format, file.version
            )));
        }
        if file.feature_dim != file.model.feature_dim() || file.seed != file.model.seed() {
            return Err(Error::InvalidInput("model header does not match its parameters".into()));
        }
        Ok(file.model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(format!("cannot write {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let text = fs::read_to_string(path).map_err(|e| Error::io(format!("cannot read {}", path.display()), e))?;
        Self::from_json(&text)
    }
}

/// Trains the configured classifier. The validation matrix only feeds MLP
/// early stopping.
pub fn train_classifier(
    kind: ClassifierKind,
    train: &FeatureMatrix,
    validation: &FeatureMatrix,
    rf: &RandomForestConfig,
    mlp: &MlpConfig,
) -> Result<TrainedModel> {
    Ok(match kind {
        ClassifierKind::Rf => TrainedModel::Rf(train_rf(train, rf)?),
        ClassifierKind::Mlp => TrainedModel::Mlp(train_mlp(train, validation, mlp)?),
    })
}
