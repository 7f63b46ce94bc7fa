use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::check_training_data;
use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpConfig {
    pub hidden_sizes: Vec<usize>,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden_sizes: vec![200, 20],
            learning_rate: 1e-5,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 32,
            max_epochs: 200,
            patience: 10,
            seed: 0,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!(
                "mlp learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.hidden_sizes.contains(&0) {
            return Err(Error::Config("mlp hidden sizes must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("mlp batch_size must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.epsilon > 0.0) {
            return Err(Error::Config("mlp adam parameters out of range".into()));
        }
        Ok(())
    }
}

/// Adam optimizer state over a flat parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl Adam {
    pub fn new(n: usize, learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Self {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

/// Fully connected network, ReLU hidden layers, one logistic output unit.
/// Parameters are flat: per layer, the `out × in` weight matrix
/// (row-major) followed by `out` biases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    /// Input size, hidden sizes, then 1.
    pub sizes: Vec<usize>,
    pub params: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `-[y ln σ(z) + (1-y) ln(1-σ(z))]`, computed from the logit.
fn bce_from_logit(z: f64, label: bool) -> f64 {
    let softplus = z.max(0.0) + (-z.abs()).exp().ln_1p();
    if label {
        softplus - z
    } else {
        softplus
    }
}

impl Mlp {
    pub fn zeros(input: usize, hidden: &[usize]) -> Self {
        let mut sizes = vec![input];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let n = sizes.windows(2).map(|w| w[1] * w[0] + w[1]).sum();
        Self {
            sizes,
            params: vec![0.0; n],
        }
    }

    /// Weights drawn from `N(0, 2 / fan_in)`, biases zero.
    pub fn he_init(input: usize, hidden: &[usize], rng: &mut ChaCha8Rng) -> Self {
        let mut net = Self::zeros(input, hidden);
        let mut offset = 0;
        for w in net.sizes.clone().windows(2) {
            let (fan_in, out) = (w[0], w[1]);
            let normal = Normal::new(0.0, (2.0 / fan_in.max(1) as f64).sqrt()).expect("valid std");
            for p in &mut net.params[offset..offset + out * fan_in] {
                *p = normal.sample(rng);
            }
            offset += out * fan_in + out;
        }
        net
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    /// Pre-activations of every layer for one row.
    fn forward(&self, row: &[f64], params: &[f64]) -> Vec<Vec<f64>> {
        let mut pre = Vec::with_capacity(self.sizes.len() - 1);
        let mut input: Vec<f64> = row.to_vec();
        let mut offset = 0;
        let layers = self.sizes.len() - 1;
        for (l, w) in self.sizes.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let weights = &params[offset..offset + n_in * n_out];
            let biases = &params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            let z: Vec<f64> = (0..n_out)
                .map(|o| {
                    let row_w = &weights[o * n_in..(o + 1) * n_in];
                    biases[o] + row_w.iter().zip(&input).map(|(a, b)| a * b).sum::<f64>()
                })
                .collect();
            input = if l + 1 < layers {
                z.iter().map(|&v| v.max(0.0)).collect()
            } else {
                Vec::new()
            };
            pre.push(z);
            offset += n_in * n_out + n_out;
        }
        pre
    }

    fn logit_with(&self, row: &[f64], params: &[f64]) -> f64 {
        self.forward(row, params).last().expect("output layer")[0]
    }

    pub fn probability(&self, row: &[f64]) -> f64 {
        sigmoid(self.logit_with(row, &self.params))
    }

    /// Summed cross-entropy over `rows`, evaluated at `params`.
    pub fn loss_at<'a>(&self, params: &[f64], rows: impl IntoIterator<Item = (&'a [f64], bool)>) -> f64 {
        rows.into_iter()
            .map(|(row, label)| bce_from_logit(self.logit_with(row, params), label))
            .sum()
    }

    /// Summed cross-entropy and its gradient over `rows`.
    pub fn loss_and_grad<'a>(&self, rows: impl IntoIterator<Item = (&'a [f64], bool)>) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let layers = self.sizes.len() - 1;
        let mut offsets = Vec::with_capacity(layers);
        let mut offset = 0;
        for w in self.sizes.windows(2) {
            offsets.push(offset);
            offset += w[0] * w[1] + w[1];
        }
        for (row, label) in rows {
            let pre = self.forward(row, &self.params);
            let z = pre[layers - 1][0];
            loss += bce_from_logit(z, label);
            let mut delta = vec![sigmoid(z) - if label { 1.0 } else { 0.0 }];
            for l in (0..layers).rev() {
                let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
                let input: Vec<f64> = if l == 0 {
                    row.to_vec()
                } else {
                    pre[l - 1].iter().map(|&v| v.max(0.0)).collect()
                };
                let base = offsets[l];
                for o in 0..n_out {
                    let g = &mut grad[base + o * n_in..base + (o + 1) * n_in];
                    g.iter_mut().zip(&input).for_each(|(g, x)| *g += delta[o] * x);
                    grad[base + n_in * n_out + o] += delta[o];
                }
                if l > 0 {
                    let weights = &self.params[base..base + n_in * n_out];
                    delta = (0..n_in)
                        .map(|i| {
                            if pre[l - 1][i] > 0.0 {
                                (0..n_out).map(|o| weights[o * n_in + i] * delta[o]).sum()
                            } else {
                                0.0
                            }
                        })
                        .collect();
                }
            }
        }
        (loss, grad)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub config: MlpConfig,
    pub network: Mlp,
    pub epochs_run: usize,
    /// Mean training loss of each epoch.
    pub loss_history: Vec<f64>,
    /// Epoch (1-based) whose weights were kept; 0 means the initial weights.
    pub best_epoch: usize,
}

impl MlpModel {
    pub fn feature_dim(&self) -> usize {
        self.network.input_dim()
    }

    pub fn score(&self, row: &[f64]) -> f64 {
        self.network.probability(row)
    }
}

fn mean_loss(net: &Mlp, x: &FeatureMatrix) -> f64 {
    net.loss_at(&net.params, x.rows().zip(x.labels().iter().copied())) / x.len() as f64
}

/// Mini-batch Adam on the mean cross-entropy of each batch. With a
/// non-empty validation set, training stops after `patience` epochs
/// without improvement and the best weights are restored.
pub fn train_mlp(x: &FeatureMatrix, validation: &FeatureMatrix, cfg: &MlpConfig) -> Result<MlpModel> {
    cfg.validate()?;
    check_training_data(x)?;
    if !validation.is_empty() && validation.feature_dim() != x.feature_dim() {
        return Err(Error::DimensionMismatch {
            expected: x.feature_dim(),
            actual: validation.feature_dim(),
        });
    }
    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = Mlp::he_init(x.feature_dim(), &cfg.hidden_sizes, &mut init_rng);
    let mut adam = Adam::new(net.params.len(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);

    let early_stop = !validation.is_empty();
    let mut best = (f64::INFINITY, net.params.clone(), 0);
    if early_stop {
        best.0 = mean_loss(&net, validation);
    }
    let mut stale = 0;
    let mut loss_history = Vec::new();
    let mut order: Vec<usize> = (0..x.len()).collect();
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let (loss, mut grad) = net.loss_and_grad(batch.iter().map(|&i| (x.row(i), x.labels()[i])));
            let scale = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            adam.step(&mut net.params, &grad);
            total += loss;
        }
        let mean = total / x.len() as f64;
        if !mean.is_finite() {
            return Err(Error::Training(format!("mlp loss is not finite at epoch {epoch}")));
        }
        loss_history.push(mean);
        if early_stop {
            let val = mean_loss(&net, validation);
            if val < best.0 {
                best = (val, net.params.clone(), epoch);
                stale = 0;
            } else {
                stale += 1;
                if stale >= cfg.patience {
                    break;
                }
            }
        }
    }
    let epochs_run = loss_history.len();
    let best_epoch = if early_stop {
        net.params = best.1;
        best.2
    } else {
        epochs_run
    };
    Ok(MlpModel {
        config: cfg.clone(),
        network: net,
        epochs_run,
        loss_history,
        best_epoch,
    })
}

/// Largest relative difference between backprop and central finite
/// differences (step 1e-5) of the summed loss over `probe`, across all
/// parameters of a network initialized from `cfg.seed`.
pub fn mlp_gradient_check(cfg: &MlpConfig, probe: &FeatureMatrix) -> Result<f64> {
    cfg.validate()?;
    if probe.len() > 10 {
        return Err(Error::InvalidInput(format!("gradient probe holds {} rows, at most 10 allowed", probe.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let net = Mlp::he_init(probe.feature_dim(), &cfg.hidden_sizes, &mut rng);
    Ok(gradient_check(&net, probe))
}

/// Same comparison on an explicit network.
pub fn gradient_check(net: &Mlp, probe: &FeatureMatrix) -> f64 {
    const STEP: f64 = 1e-5;
    let rows = || probe.rows().zip(probe.labels().iter().copied());
    let (_, analytic) = net.loss_and_grad(rows());
    let mut params = net.params.clone();
    let mut worst: f64 = 0.0;
    for i in 0..params.len() {
        let original = params[i];
        params[i] = original + STEP;
        let up = net.loss_at(&params, rows());
        params[i] = original - STEP;
        let down = net.loss_at(&params, rows());
        params[i] = original;
        let numeric = (up - down) / (2.0 * STEP);
        let scale = analytic[i].abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((analytic[i] - numeric).abs() / scale);
    }
    worst
}
