use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};

/// Methods in columns, datasets in rows; higher scores are better.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    pub methods: Vec<String>,
    pub datasets: Vec<String>,
    pub scores: Vec<Vec<f64>>,
}

impl ScoreMatrix {
    pub fn new(methods: Vec<String>, datasets: Vec<String>, scores: Vec<Vec<f64>>) -> Result<Self> {
        if scores.len() != datasets.len() {
            return Err(Error::InvalidInput(format!(
                "{} dataset names for {} score rows",
                datasets.len(),
                scores.len()
            )));
        }
        if let Some((i, row)) = scores.iter().enumerate().find(|(_, r)| r.len() != methods.len()) {
            return Err(Error::InvalidInput(format!(
                "row {} ({}) has {} scores, expected {}",
                i + 1,
                datasets[i],
                row.len(),
                methods.len()
            )));
        }
        Ok(Self {
            methods,
            datasets,
            scores,
        })
    }

    /// First column holds dataset names; the header row holds method names.
    pub fn read_csv(reader: impl Read) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = r.headers()?.clone();
        if header.len() < 2 {
            return Err(Error::InvalidInput("score csv needs a name column and at least one method".into()));
        }
        let methods = header.iter().skip(1).map(str::to_owned).collect();
        let mut datasets = Vec::new();
        let mut scores = Vec::new();
        for (i, record) in r.records().enumerate() {
            let record = record?;
            datasets.push(record.get(0).unwrap_or_default().to_owned());
            let row = record
                .iter()
                .skip(1)
                .map(|v| {
                    v.parse::<f64>().map_err(|_| {
                        Error::InvalidInput(format!("score csv row {}: {v:?} is not a number", i + 1))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            scores.push(row);
        }
        Self::new(methods, datasets, scores)
    }
}

fn check_matrix(scores: &[Vec<f64>], min_rows: usize) -> Result<usize> {
    if scores.len() < min_rows {
        return Err(Error::InvalidInput(format!(
            "need at least {min_rows} datasets, found {}",
            scores.len()
        )));
    }
    let k = scores[0].len();
    if k < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 methods, found {k}")));
    }
    for (i, row) in scores.iter().enumerate() {
        if row.len() != k {
            return Err(Error::InvalidInput(format!("row {} has {} scores, expected {k}", i + 1, row.len())));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("row {} has a non-finite score", i + 1)));
        }
    }
    Ok(k)
}

/// Ranks within one row, 1 = best; tied entries share the mean position.
/// Also returns the tie group sizes.
pub fn rank_row(row: &[f64], higher_is_better: bool) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| {
        let c = row[a].total_cmp(&row[b]);
        if higher_is_better {
            c.reverse()
        } else {
            c
        }
    });
    let mut ranks = vec![0.0; row.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && row[order[end]] == row[order[start]] {
            end += 1;
        }
        let shared = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = shared;
        }
        ties.push(end - start);
        start = end;
    }
    (ranks, ties)
}

pub fn average_ranks(scores: &[Vec<f64>], higher_is_better: bool) -> Result<Vec<f64>> {
    let k = check_matrix(scores, 1)?;
    let mut sums = vec![0.0; k];
    for row in scores {
        let (ranks, _) = rank_row(row, higher_is_better);
        sums.iter_mut().zip(ranks).for_each(|(s, r)| *s += r);
    }
    let n = scores.len() as f64;
    Ok(sums.into_iter().map(|s| s / n).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FriedmanResult {
    /// Statistic divided by the tie correction.
    pub chi2: f64,
    pub chi2_uncorrected: f64,
    /// Upper tail of χ² with k-1 degrees of freedom at `chi2`.
    pub p_value: f64,
    pub p_value_uncorrected: f64,
    pub iman_davenport_f: f64,
    pub iman_davenport_p: f64,
    pub df: usize,
}

/// Upper tail of the χ² distribution.
pub fn chi2_sf(x: f64, df: usize) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        gamma_ur(df as f64 / 2.0, x / 2.0)
    }
}

/// Upper tail of the F distribution.
pub fn f_sf(x: f64, df1: f64, df2: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x.is_infinite() {
        0.0
    } else {
        beta_reg(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * x))
    }
}

/// Friedman test on average ranks, higher scores better.
pub fn friedman_test(scores: &[Vec<f64>]) -> Result<FriedmanResult> {
    let k = check_matrix(scores, 2)?;
    let n = scores.len() as f64;
    let kf = k as f64;
    let mut sums = vec![0.0; k];
    let mut tie_term = 0.0;
    for row in scores {
        let (ranks, ties) = rank_row(row, true);
        sums.iter_mut().zip(ranks).for_each(|(s, r)| *s += r);
        tie_term += ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>();
    }
    let sum_sq: f64 = sums.iter().map(|s| (s / n) * (s / n)).sum();
    let chi2_uncorrected = (12.0 * n / (kf * (kf + 1.0)) * (sum_sq - kf * (kf + 1.0).powi(2) / 4.0)).max(0.0);
    let correction = 1.0 - tie_term / (n * kf * (kf * kf - 1.0));
    let chi2 = if correction <= 0.0 { 0.0 } else { chi2_uncorrected / correction };
    let df = k - 1;
    let df1 = (k - 1) as f64;
    let df2 = df1 * (n - 1.0);
    let denom = n * df1 - chi2;
    let iman_davenport_f = if chi2 == 0.0 {
        0.0
    } else if denom <= 0.0 {
        f64::INFINITY
    } else {
        (n - 1.0) * chi2 / denom
    };
    Ok(FriedmanResult {
        chi2,
        chi2_uncorrected,
        p_value: chi2_sf(chi2, df),
        p_value_uncorrected: chi2_sf(chi2_uncorrected, df),
        iman_davenport_f,
        iman_davenport_p: f_sf(iman_davenport_f, df1, df2),
        df,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Alpha {
    #[serde(rename = "0.05")]
    P05,
    #[serde(rename = "0.10")]
    P10,
}

impl Alpha {
    pub fn value(self) -> f64 {
        match self {
            Alpha::P05 => 0.05,
            Alpha::P10 => 0.10,
        }
    }
}

impl FromStr for Alpha {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "0.05" | ".05" => Ok(Alpha::P05),
            "0.10" | "0.1" | ".1" | ".10" => Ok(Alpha::P10),
            other => Err(Error::InvalidInput(format!("alpha must be 0.05 or 0.10, got {other:?}"))),
        }
    }
}

// Critical values of the studentized range statistic divided by √2, for
// k = 2..=20 methods and infinite degrees of freedom.
const Q_05: [f64; 19] = [
    1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164, 3.219, 3.268, 3.313, 3.354, 3.391, 3.426,
    3.458, 3.489, 3.517, 3.544,
];
const Q_10: [f64; 19] = [
    1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920, 2.978, 3.030, 3.077, 3.120, 3.159, 3.196,
    3.230, 3.261, 3.291, 3.319,
];

pub fn nemenyi_q(k: usize, alpha: Alpha) -> Result<f64> {
    if !(2..=20).contains(&k) {
        return Err(Error::InvalidInput(format!("critical values cover 2 to 20 methods, got {k}")));
    }
    Ok(match alpha {
        Alpha::P05 => Q_05[k - 2],
        Alpha::P10 => Q_10[k - 2],
    })
}

/// Critical difference in average rank for k methods over n datasets.
pub fn nemenyi_cd(k: usize, n: usize, alpha: Alpha) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidInput("need at least one dataset".into()));
    }
    let q = nemenyi_q(k, alpha)?;
    let kf = k as f64;
    Ok(q * (kf * (kf + 1.0) / (6.0 * n as f64)).sqrt())
}

/// Maximal sets of methods whose pairwise rank differences are all below
/// `cd`, each sorted by rank (ties by index). Groups are listed from the
/// best-ranked start; methods with no partner form singleton groups.
pub fn cd_groups(avg_ranks: &[f64], cd: f64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..avg_ranks.len()).collect();
    order.sort_by(|&a, &b| avg_ranks[a].total_cmp(&avg_ranks[b]).then(a.cmp(&b)));
    let mut groups = Vec::new();
    let mut covered_to = None;
    for start in 0..order.len() {
        let mut end = start;
        while end + 1 < order.len() && avg_ranks[order[end + 1]] - avg_ranks[order[start]] < cd {
            end += 1;
        }
        if covered_to.is_none_or(|c| end > c) {
            groups.push(order[start..=end].to_vec());
            covered_to = Some(end);
        }
    }
    groups
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub methods: Vec<String>,
    pub datasets: Vec<String>,
    pub scores: Vec<Vec<f64>>,
    pub avg_ranks: Vec<f64>,
    pub friedman_chi2: f64,
    pub friedman_chi2_uncorrected: f64,
    pub friedman_p: f64,
    pub iman_davenport_f: f64,
    pub iman_davenport_p: f64,
    pub cd: f64,
    pub alpha: f64,
    /// Method names of every maximal not-significantly-different group.
    pub groups: Vec<Vec<String>>,
}

pub fn rank_report(matrix: &ScoreMatrix, alpha: Alpha) -> Result<RankReport> {
    let friedman = friedman_test(&matrix.scores)?;
    let avg_ranks = average_ranks(&matrix.scores, true)?;
    let cd = nemenyi_cd(matrix.methods.len(), matrix.datasets.len(), alpha)?;
    let groups = cd_groups(&avg_ranks, cd)
        .into_iter()
        .map(|g| g.into_iter().map(|i| matrix.methods[i].clone()).collect())
        .collect();
    Ok(RankReport {
        methods: matrix.methods.clone(),
        datasets: matrix.datasets.clone(),
        scores: matrix.scores.clone(),
        avg_ranks,
        friedman_chi2: friedman.chi2,
        friedman_chi2_uncorrected: friedman.chi2_uncorrected,
        friedman_p: friedman.p_value,
        iman_davenport_f: friedman.iman_davenport_f,
        iman_davenport_p: friedman.iman_davenport_p,
        cd,
        alpha: alpha.value(),
        groups,
    })
}
