//! Translational embeddings trained with a margin ranking loss.
//!
//! For a relation triple `(h, r, t)` and a corrupted triple `(h', r, t')`
//! the loss is `max(0, γ + d(h + r, t) - d(h' + r, t'))`. Corruption replaces
//! the head or the tail (chosen uniformly) by a uniformly drawn entity.
//! Entity vectors are projected back onto the unit sphere after every epoch.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::merge::MergedGraph;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Norm {
    L1,
    #[default]
    L2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransEConfig {
    pub dim: usize,
    pub margin: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub negatives: usize,
    pub norm: Norm,
    pub seed: u64,
}

impl Default for TransEConfig {
    fn default() -> Self {
        Self {
            dim: 100,
            margin: 1.0,
            learning_rate: 0.01,
            epochs: 500,
            negatives: 1,
            norm: Norm::L2,
            seed: 0,
        }
    }
}

impl TransEConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("transe dim must be at least 1".into()));
        }
        if !(self.margin > 0.0) {
            return Err(Error::Config("transe margin must be positive".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("transe learning_rate must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("transe epochs must be at least 1".into()));
        }
        if self.negatives == 0 {
            return Err(Error::Config("transe negatives must be at least 1".into()));
        }
        Ok(())
    }
}

fn distance(h: &[f64], r: &[f64], t: &[f64], norm: Norm) -> f64 {
    let residuals = h.iter().zip(r).zip(t).map(|((h, r), t)| h + r - t);
    match norm {
        Norm::L1 => residuals.map(f64::abs).sum(),
        Norm::L2 => residuals.map(|x| x * x).sum::<f64>().sqrt(),
    }
}

/// Gradient of `d(h + r, t)` with respect to `h` (and `r`); the gradient
/// with respect to `t` is its negation.
fn distance_grad(h: &[f64], r: &[f64], t: &[f64], norm: Norm, out: &mut [f64]) {
    for (o, ((h, r), t)) in out.iter_mut().zip(h.iter().zip(r).zip(t)) {
        *o = h + r - t;
    }
    match norm {
        Norm::L1 => out.iter_mut().for_each(|x| *x = sign(*x)),
        Norm::L2 => {
            let len = out.iter().map(|x| x * x).sum::<f64>().sqrt();
            if len > 0.0 {
                out.iter_mut().for_each(|x| *x /= len);
            } else {
                out.fill(0.0);
            }
        }
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Vectors of one positive triple and its corruption.
#[derive(Clone, Copy, Debug)]
pub struct TriplePair<'a> {
    pub head: &'a [f64],
    pub relation: &'a [f64],
    pub tail: &'a [f64],
    pub neg_head: &'a [f64],
    pub neg_tail: &'a [f64],
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarginGrads {
    pub head: Vec<f64>,
    pub relation: Vec<f64>,
    pub tail: Vec<f64>,
    pub neg_head: Vec<f64>,
    pub neg_tail: Vec<f64>,
}

pub fn margin_loss(v: TriplePair<'_>, margin: f64, norm: Norm) -> f64 {
    let pos = distance(v.head, v.relation, v.tail, norm);
    let neg = distance(v.neg_head, v.relation, v.neg_tail, norm);
    (margin + pos - neg).max(0.0)
}

/// Loss and its gradient for every vector involved.
pub fn margin_loss_grad(v: TriplePair<'_>, margin: f64, norm: Norm) -> (f64, MarginGrads) {
    let dim = v.head.len();
    let loss = margin_loss(v, margin, norm);
    let mut g = MarginGrads {
        head: vec![0.0; dim],
        relation: vec![0.0; dim],
        tail: vec![0.0; dim],
        neg_head: vec![0.0; dim],
        neg_tail: vec![0.0; dim],
    };
    if loss <= 0.0 {
        return (loss, g);
    }
    let mut pos = vec![0.0; dim];
    let mut neg = vec![0.0; dim];
    distance_grad(v.head, v.relation, v.tail, norm, &mut pos);
    distance_grad(v.neg_head, v.relation, v.neg_tail, norm, &mut neg);
    for i in 0..dim {
        g.head[i] = pos[i];
        g.tail[i] = -pos[i];
        g.relation[i] = pos[i] - neg[i];
        g.neg_head[i] = -neg[i];
        g.neg_tail[i] = neg[i];
    }
    (loss, g)
}

/// Trained (or freshly initialized) embeddings over a merged graph.
#[derive(Clone, Debug, PartialEq)]
pub struct TransE {
    pub dim: usize,
    /// Row-major `num_entities × dim`.
    pub entities: Vec<f64>,
    /// Row-major `num_relations × dim`.
    pub relations: Vec<f64>,
    /// Mean loss over the updates of each epoch.
    pub loss_history: Vec<f64>,
}

fn normalize_rows(values: &mut [f64], dim: usize) {
    for row in values.chunks_mut(dim) {
        let len = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len > 0.0 {
            row.iter_mut().for_each(|x| *x /= len);
        }
    }
}

impl TransE {
    /// Uniform initialization in `[-6/√d, 6/√d]`, rows scaled to unit norm.
    pub fn initialize(graph: &MergedGraph, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = 6.0 / (dim as f64).sqrt();
        let mut draw = |n: usize| -> Vec<f64> {
            let mut v: Vec<f64> = (0..n * dim).map(|_| rng.gen_range(-bound..=bound)).collect();
            normalize_rows(&mut v, dim);
            v
        };
        let entities = draw(graph.num_entities);
        let relations = draw(graph.num_relations);
        Self {
            dim,
            entities,
            relations,
            loss_history: Vec::new(),
        }
    }

    pub fn entity(&self, id: u32) -> &[f64] {
        let i = id as usize * self.dim;
        &self.entities[i..i + self.dim]
    }

    pub fn relation(&self, id: u32) -> &[f64] {
        let i = id as usize * self.dim;
        &self.relations[i..i + self.dim]
    }

    /// Mean margin loss over all triples against one corruption each, drawn
    /// from `seed`. Does not modify the model.
    pub fn mean_loss(&self, graph: &MergedGraph, margin: f64, norm: Norm, seed: u64) -> f64 {
        if graph.triples.is_empty() {
            return 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let total: f64 = graph
            .triples
            .iter()
            .map(|&(h, r, t)| {
                let (nh, nt) = corrupt(&mut rng, graph.num_entities, h, t);
                margin_loss(
                    TriplePair {
                        head: self.entity(h),
                        relation: self.relation(r),
                        tail: self.entity(t),
                        neg_head: self.entity(nh),
                        neg_tail: self.entity(nt),
                    },
                    margin,
                    norm,
                )
            })
            .sum();
        total / graph.triples.len() as f64
    }

    fn sgd_step(&mut self, (h, r, t): (u32, u32, u32), (nh, nt): (u32, u32), cfg: &TransEConfig) -> f64 {
        let (loss, g) = margin_loss_grad(
            TriplePair {
                head: self.entity(h),
                relation: self.relation(r),
                tail: self.entity(t),
                neg_head: self.entity(nh),
                neg_tail: self.entity(nt),
            },
            cfg.margin,
            cfg.norm,
        );
        if loss <= 0.0 {
            return loss;
        }
        let dim = self.dim;
        let lr = cfg.learning_rate;
        let apply = |table: &mut [f64], id: u32, grad: &[f64]| {
            let row = &mut table[id as usize * dim..(id as usize + 1) * dim];
            row.iter_mut().zip(grad).for_each(|(w, g)| *w -= lr * g);
        };
        apply(&mut self.entities, h, &g.head);
        apply(&mut self.entities, t, &g.tail);
        apply(&mut self.entities, nh, &g.neg_head);
        apply(&mut self.entities, nt, &g.neg_tail);
        apply(&mut self.relations, r, &g.relation);
        loss
    }
}

/// Replaces head or tail with a different uniformly drawn entity.
fn corrupt(rng: &mut ChaCha8Rng, num_entities: usize, head: u32, tail: u32) -> (u32, u32) {
    let replace_head = rng.gen_bool(0.5);
    let original = if replace_head { head } else { tail };
    let mut candidate = rng.gen_range(0..num_entities as u32);
    while candidate == original && num_entities > 1 {
        candidate = rng.gen_range(0..num_entities as u32);
    }
    if replace_head {
        (candidate, tail)
    } else {
        (head, candidate)
    }
}

/// Trains with plain SGD, one triple at a time, in a seeded shuffled order.
/// Single-threaded and bit-reproducible for a fixed seed.
pub fn train_transe(graph: &MergedGraph, cfg: &TransEConfig) -> Result<TransE> {
    train_transe_observed(graph, cfg, |_, _| {})
}

/// As [`train_transe`], calling `on_epoch(epoch, model)` after each epoch's
/// renormalization.
pub fn train_transe_observed(
    graph: &MergedGraph,
    cfg: &TransEConfig,
    mut on_epoch: impl FnMut(usize, &TransE),
) -> Result<TransE> {
    cfg.validate()?;
    if graph.triples.is_empty() {
        return Err(Error::InvalidInput("embedding requires relational structure".into()));
    }
    let mut model = TransE::initialize(graph, cfg.dim, cfg.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..graph.triples.len()).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let (h, r, t) = graph.triples[i];
            for _ in 0..cfg.negatives {
                let negative = corrupt(&mut rng, graph.num_entities, h, t);
                total += model.sgd_step((h, r, t), negative, cfg);
            }
        }
        let mean = total / (order.len() * cfg.negatives) as f64;
        if !mean.is_finite() {
            return Err(Error::Training(format!("transe loss is not finite at epoch {epoch}")));
        }
        model.loss_history.push(mean);
        normalize_rows(&mut model.entities, cfg.dim);
        on_epoch(epoch, &model);
    }
    Ok(model)
}
