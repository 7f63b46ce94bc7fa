use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Precision, recall and F-measure of the match class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Prf {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f_measure = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            precision,
            recall,
            f_measure,
            tp,
            fp,
            fn_,
            tn,
        }
    }

    /// Sums the confusion counts and recomputes the ratios.
    pub fn merge(&self, other: &Prf) -> Prf {
        Prf::from_counts(self.tp + other.tp, self.fp + other.fp, self.fn_ + other.fn_, self.tn + other.tn)
    }
}

pub fn prf(labels: &[bool], predictions: &[bool]) -> Result<Prf> {
    if labels.len() != predictions.len() {
        return Err(Error::InvalidInput(format!(
            "{} labels but {} predictions",
            labels.len(),
            predictions.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::InvalidInput("cannot score an empty prediction set".into()));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (&truth, &pred) in labels.iter().zip(predictions) {
        match (truth, pred) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    Ok(Prf::from_counts(tp, fp, fn_, tn))
}

/// Scores each type's pairs separately. Every pair must carry a type.
pub fn per_type_prf(labels: &[bool], predictions: &[bool], types: &[Option<String>]) -> Result<BTreeMap<String, Prf>> {
    if types.len() != labels.len() || predictions.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} labels, {} predictions and {} types",
            labels.len(),
            predictions.len(),
            types.len()
        )));
    }
    let mut grouped: BTreeMap<&str, (Vec<bool>, Vec<bool>)> = BTreeMap::new();
    for (i, t) in types.iter().enumerate() {
        let t = t
            .as_deref()
            .ok_or_else(|| Error::InvalidInput(format!("pair {i} has no type")))?;
        let entry = grouped.entry(t).or_default();
        entry.0.push(labels[i]);
        entry.1.push(predictions[i]);
    }
    grouped
        .into_iter()
        .map(|(t, (l, p))| Ok((t.to_owned(), prf(&l, &p)?)))
        .collect()
}

/// Field-wise arithmetic mean of the ratios; counts are summed.
pub fn mean_prf(items: &[Prf]) -> Option<Prf> {
    if items.is_empty() {
        return None;
    }
    let n = items.len() as f64;
    let mean = |f: fn(&Prf) -> f64| items.iter().map(f).sum::<f64>() / n;
    Some(Prf {
        precision: mean(|p| p.precision),
        recall: mean(|p| p.recall),
        f_measure: mean(|p| p.f_measure),
        tp: items.iter().map(|p| p.tp).sum(),
        fp: items.iter().map(|p| p.fp).sum(),
        fn_: items.iter().map(|p| p.fn_).sum(),
        tn: items.iter().map(|p| p.tn).sum(),
    })
}
