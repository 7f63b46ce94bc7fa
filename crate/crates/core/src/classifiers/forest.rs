use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::check_training_data;
use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomForestConfig {
    pub n_trees: usize,
    /// `None` grows every tree until its leaves are pure.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// `None` means `ceil(sqrt(F))`.
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for RandomForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 500,
            max_depth: None,
            min_samples_split: 2,
            features_per_split: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl RandomForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Config("rf n_trees must be at least 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::Config("rf min_samples_split must be at least 2".into()));
        }
        if self.features_per_split == Some(0) {
            return Err(Error::Config("rf features_per_split must be at least 1".into()));
        }
        Ok(())
    }

    fn features_for(&self, feature_dim: usize) -> usize {
        self.features_per_split
            .unwrap_or_else(|| (feature_dim as f64).sqrt().ceil() as usize)
            .clamp(1, feature_dim.max(1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        /// Share of the leaf's training samples that are matches.
        match_fraction: f64,
    },
    Split {
        feature: usize,
        /// Samples with `x[feature] <= threshold` go left.
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Binary CART tree stored as an arena; node 0 is the root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn match_fraction(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { match_fraction } => return match_fraction,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn votes_match(&self, row: &[f64]) -> bool {
        self.match_fraction(row) >= 0.5
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub feature_dim: usize,
    pub config: RandomForestConfig,
    pub trees: Vec<DecisionTree>,
}

impl RandomForest {
    /// Fraction of trees voting match.
    pub fn score(&self, row: &[f64]) -> f64 {
        let votes = self.trees.iter().filter(|t| t.votes_match(row)).count();
        votes as f64 / self.trees.len() as f64
    }
}

fn gini(matches: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = matches as f64 / total as f64;
    2.0 * p * (1.0 - p)
}

struct Builder<'a> {
    x: &'a FeatureMatrix,
    cfg: &'a RandomForestConfig,
    n_features: usize,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl Builder<'_> {
    fn leaf(&mut self, samples: &[usize]) -> usize {
        let labels = self.x.labels();
        let matches = samples.iter().filter(|&&i| labels[i]).count();
        self.nodes.push(Node::Leaf {
            match_fraction: matches as f64 / samples.len() as f64,
        });
        self.nodes.len() - 1
    }

    fn build(&mut self, samples: &mut [usize], depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let labels = self.x.labels();
        let matches = samples.iter().filter(|&&i| labels[i]).count();
        let pure = matches == 0 || matches == samples.len();
        let depth_reached = self.cfg.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_reached || samples.len() < self.cfg.min_samples_split {
            return self.leaf(samples);
        }
        let Some(best) = self.best_split(samples, rng) else {
            return self.leaf(samples);
        };
        let mut cut = 0;
        for i in 0..samples.len() {
            if self.x.row(samples[i])[best.feature] <= best.threshold {
                samples.swap(i, cut);
                cut += 1;
            }
        }
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf { match_fraction: 0.0 });
        let (left_samples, right_samples) = samples.split_at_mut(cut);
        let left = self.build(left_samples, depth + 1, rng);
        let right = self.build(right_samples, depth + 1, rng);
        self.nodes[at] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        at
    }

    /// Draws features in random order until `n_features` non-constant ones
    /// have been evaluated; constant features do not count.
    fn best_split(&self, samples: &[usize], rng: &mut ChaCha8Rng) -> Option<BestSplit> {
        let mut order: Vec<usize> = (0..self.x.feature_dim()).collect();
        order.shuffle(rng);
        let labels = self.x.labels();
        let total = samples.len();
        let total_matches = samples.iter().filter(|&&i| labels[i]).count();
        let mut best: Option<BestSplit> = None;
        let mut evaluated = 0;
        let mut column: Vec<(f64, bool)> = Vec::with_capacity(total);
        for feature in order {
            if evaluated == self.n_features {
                break;
            }
            column.clear();
            column.extend(samples.iter().map(|&i| (self.x.row(i)[feature], labels[i])));
            column.sort_by(|a, b| a.0.total_cmp(&b.0));
            if column[0].0 == column[total - 1].0 {
                continue;
            }
            evaluated += 1;
            let mut left_matches = 0;
            for k in 1..total {
                left_matches += column[k - 1].1 as usize;
                let (lo, hi) = (column[k - 1].0, column[k].0);
                if lo == hi {
                    continue;
                }
                let right_matches = total_matches - left_matches;
                let impurity = (k as f64 * gini(left_matches, k)
                    + (total - k) as f64 * gini(right_matches, total - k))
                    / total as f64;
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some(BestSplit {
                        feature,
                        threshold,
                        impurity,
                    });
                }
            }
        }
        best
    }
}

fn grow_tree(x: &FeatureMatrix, cfg: &RandomForestConfig, tree_index: usize) -> DecisionTree {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(tree_index as u64);
    let n = x.len();
    let mut samples: Vec<usize> = if cfg.bootstrap {
        (0..n).map(|_| rng.gen_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    let mut builder = Builder {
        x,
        cfg,
        n_features: cfg.features_for(x.feature_dim()),
        nodes: Vec::new(),
    };
    builder.build(&mut samples, 0, &mut rng);
    DecisionTree { nodes: builder.nodes }
}

/// Trees are grown in parallel; each has its own generator stream derived
/// from the seed, so the forest does not depend on the thread count.
pub fn train_rf(x: &FeatureMatrix, cfg: &RandomForestConfig) -> Result<RandomForest> {
    cfg.validate()?;
    check_training_data(x)?;
    let trees = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| grow_tree(x, cfg, t))
        .collect();
    Ok(RandomForest {
        feature_dim: x.feature_dim(),
        config: cfg.clone(),
        trees,
    })
}
