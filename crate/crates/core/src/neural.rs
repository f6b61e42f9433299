//! Embedding + single 1-D convolution text classifier.
//!
//! Forward pass per sequence: embedding lookup, valid-mode convolution of
//! `F` width-`k` kernels spanning the full embedding depth, rectifier,
//! global max pooling over positions, a dense `3 x F` layer and softmax.
//! Gradients are computed by hand and checked against central differences.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::corpus::{argmax_lowest, Label, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::rng;
use crate::vectorizer::{SequenceBatch, FIRST_TERM_CODE, PAD_CODE};

const INIT_RANGE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CnnConfig {
    pub embedding_dim: usize,
    pub filters: usize,
    pub kernel_width: usize,
    pub max_len: usize,
    pub seed: u64,
}

impl Default for CnnConfig {
    fn default() -> Self {
        CnnConfig {
            embedding_dim: 32,
            filters: 64,
            kernel_width: 3,
            max_len: 40,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CnnTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for CnnTrainConfig {
    fn default() -> Self {
        CnnTrainConfig {
            epochs: 10,
            batch_size: 64,
            learning_rate: 0.1,
            seed: 0,
        }
    }
}

/// Parameters are stored row-major:
/// `embedding[code * d + j]`, `conv[f * k * d + o * d + j]`, `dense[c * F + f]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnModel {
    pub vocab_size: usize,
    pub config: CnnConfig,
    pub embedding: Vec<f64>,
    pub conv: Vec<f64>,
    pub conv_bias: Vec<f64>,
    pub dense: Vec<f64>,
    pub dense_bias: Vec<f64>,
}

/// Gradient buffers with the same layout as [`CnnModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct CnnGradients {
    pub embedding: Vec<f64>,
    pub conv: Vec<f64>,
    pub conv_bias: Vec<f64>,
    pub dense: Vec<f64>,
    pub dense_bias: Vec<f64>,
}

struct SampleCache {
    /// Convolution pre-activations, `z[p * F + f]`.
    z: Vec<f64>,
    pooled: Vec<f64>,
    argmax: Vec<usize>,
    probs: [f64; NUM_CLASSES],
}

pub fn init_cnn(vocab_size: usize, config: CnnConfig) -> Result<CnnModel> {
    let CnnConfig {
        embedding_dim: d,
        filters,
        kernel_width: k,
        max_len,
        seed,
    } = config;
    if d < 1 || filters < 1 || k < 1 || max_len < 1 {
        return Err(Error::Config(
            "embedding_dim, filters, kernel_width and max_len must be >= 1".into(),
        ));
    }
    if k > max_len {
        return Err(Error::Config(format!(
            "kernel width {k} exceeds max_len {max_len}"
        )));
    }
    let mut gen = rng::seeded(seed);
    let rows = vocab_size + FIRST_TERM_CODE as usize;
    let mut embedding: Vec<f64> = (0..rows * d)
        .map(|_| gen.gen_range(-INIT_RANGE..=INIT_RANGE))
        .collect();
    embedding[..d].fill(0.0);
    let conv_scale = 1.0 / ((k * d) as f64).sqrt();
    let conv = (0..filters * k * d)
        .map(|_| gen.gen_range(-1.0..=1.0) * conv_scale)
        .collect();
    let dense = (0..NUM_CLASSES * filters)
        .map(|_| gen.gen_range(-INIT_RANGE..=INIT_RANGE))
        .collect();
    Ok(CnnModel {
        vocab_size,
        config,
        embedding,
        conv,
        conv_bias: vec![0.0; filters],
        dense,
        dense_bias: vec![0.0; NUM_CLASSES],
    })
}

impl CnnGradients {
    fn zeros_like(model: &CnnModel) -> Self {
        CnnGradients {
            embedding: vec![0.0; model.embedding.len()],
            conv: vec![0.0; model.conv.len()],
            conv_bias: vec![0.0; model.conv_bias.len()],
            dense: vec![0.0; model.dense.len()],
            dense_bias: vec![0.0; model.dense_bias.len()],
        }
    }

    pub fn groups(&self) -> [(&'static str, &[f64]); 5] {
        [
            ("embedding", &self.embedding),
            ("conv", &self.conv),
            ("conv_bias", &self.conv_bias),
            ("dense", &self.dense),
            ("dense_bias", &self.dense_bias),
        ]
    }
}

impl CnnModel {
    pub fn parameter_count(&self) -> usize {
        self.embedding.len()
            + self.conv.len()
            + self.conv_bias.len()
            + self.dense.len()
            + self.dense_bias.len()
    }

    pub fn groups(&self) -> [(&'static str, &[f64]); 5] {
        [
            ("embedding", &self.embedding),
            ("conv", &self.conv),
            ("conv_bias", &self.conv_bias),
            ("dense", &self.dense),
            ("dense_bias", &self.dense_bias),
        ]
    }

    pub fn groups_mut(&mut self) -> [&mut Vec<f64>; 5] {
        [
            &mut self.embedding,
            &mut self.conv,
            &mut self.conv_bias,
            &mut self.dense,
            &mut self.dense_bias,
        ]
    }

    fn positions(&self) -> usize {
        self.config.max_len - self.config.kernel_width + 1
    }

    fn check_batch(&self, batch: &SequenceBatch) -> Result<()> {
        if batch.max_len() != self.config.max_len {
            return Err(Error::Shape(format!(
                "batch rows have length {}, model expects {}",
                batch.max_len(),
                self.config.max_len
            )));
        }
        let limit = self.vocab_size + FIRST_TERM_CODE as usize;
        for (r, row) in batch.rows().iter().enumerate() {
            if let Some(&code) = row.iter().find(|&&c| c as usize >= limit) {
                return Err(Error::Encode(format!(
                    "code {code} in row {r} is not below {limit}"
                )));
            }
        }
        Ok(())
    }

    fn forward_sample(&self, codes: &[u32]) -> SampleCache {
        let (d, k, nf) = (
            self.config.embedding_dim,
            self.config.kernel_width,
            self.config.filters,
        );
        let positions = self.positions();
        let mut z = vec![0.0; positions * nf];
        for p in 0..positions {
            for f in 0..nf {
                let kernel = &self.conv[f * k * d..(f + 1) * k * d];
                let mut acc = self.conv_bias[f];
                for o in 0..k {
                    let code = codes[p + o] as usize;
                    let emb = &self.embedding[code * d..(code + 1) * d];
                    let w = &kernel[o * d..(o + 1) * d];
                    acc += emb.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
                }
                z[p * nf + f] = acc;
            }
        }
        let mut pooled = vec![0.0; nf];
        let mut argmax = vec![0; nf];
        for f in 0..nf {
            let mut best = z[f].max(0.0);
            for p in 1..positions {
                let h = z[p * nf + f].max(0.0);
                if h > best {
                    best = h;
                    argmax[f] = p;
                }
            }
            pooled[f] = best;
        }
        let logits: [f64; NUM_CLASSES] = std::array::from_fn(|c| {
            self.dense_bias[c]
                + self.dense[c * nf..(c + 1) * nf]
                    .iter()
                    .zip(&pooled)
                    .map(|(w, h)| w * h)
                    .sum::<f64>()
        });
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps = logits.map(|l| (l - max).exp());
        let sum: f64 = exps.iter().sum();
        SampleCache {
            z,
            pooled,
            argmax,
            probs: exps.map(|e| e / sum),
        }
    }

    /// Accumulates `scale * d(-ln p[label])/d(theta)` into `grads`.
    fn backward_sample(
        &self,
        codes: &[u32],
        cache: &SampleCache,
        label: Label,
        scale: f64,
        grads: &mut CnnGradients,
    ) {
        let (d, k, nf) = (
            self.config.embedding_dim,
            self.config.kernel_width,
            self.config.filters,
        );
        let dlogits: [f64; NUM_CLASSES] = std::array::from_fn(|c| {
            let target = if c == label.code() { 1.0 } else { 0.0 };
            (cache.probs[c] - target) * scale
        });
        let mut dpooled = vec![0.0; nf];
        for c in 0..NUM_CLASSES {
            grads.dense_bias[c] += dlogits[c];
            for f in 0..nf {
                grads.dense[c * nf + f] += dlogits[c] * cache.pooled[f];
                dpooled[f] += self.dense[c * nf + f] * dlogits[c];
            }
        }
        for f in 0..nf {
            let p = cache.argmax[f];
            if cache.z[p * nf + f] <= 0.0 {
                continue;
            }
            let dz = dpooled[f];
            grads.conv_bias[f] += dz;
            for o in 0..k {
                let code = codes[p + o] as usize;
                let base = f * k * d + o * d;
                for j in 0..d {
                    grads.conv[base + j] += dz * self.embedding[code * d + j];
                    if code != PAD_CODE as usize {
                        grads.embedding[code * d + j] += dz * self.conv[base + j];
                    }
                }
            }
        }
    }

    /// Class probabilities, one row per sequence.
    pub fn forward(&self, batch: &SequenceBatch) -> Result<Vec<[f64; NUM_CLASSES]>> {
        self.check_batch(batch)?;
        Ok(batch
            .rows()
            .iter()
            .map(|row| self.forward_sample(row).probs)
            .collect())
    }

    pub fn predict(&self, batch: &SequenceBatch) -> Result<Vec<Label>> {
        Ok(self
            .forward(batch)?
            .iter()
            .map(|p| Label::ALL[argmax_lowest(p)])
            .collect())
    }

    /// Mean categorical cross-entropy.
    pub fn loss(&self, batch: &SequenceBatch, labels: &[Label]) -> Result<f64> {
        let probs = self.forward(batch)?;
        check_labels(batch, labels)?;
        Ok(probs
            .iter()
            .zip(labels)
            .map(|(p, l)| -p[l.code()].ln())
            .sum::<f64>()
            / labels.len() as f64)
    }

    /// Mean cross-entropy and its gradient. The pad row's gradient is always zero.
    pub fn loss_and_gradients(
        &self,
        batch: &SequenceBatch,
        labels: &[Label],
    ) -> Result<(f64, CnnGradients)> {
        self.check_batch(batch)?;
        check_labels(batch, labels)?;
        let mut grads = CnnGradients::zeros_like(self);
        let scale = 1.0 / labels.len() as f64;
        let mut loss = 0.0;
        for (row, &label) in batch.rows().iter().zip(labels) {
            let cache = self.forward_sample(row);
            loss -= cache.probs[label.code()].ln();
            self.backward_sample(row, &cache, label, scale, &mut grads);
        }
        Ok((loss * scale, grads))
    }

    /// Plain gradient step; the pad row never moves.
    pub fn apply_gradients(&mut self, grads: &CnnGradients, learning_rate: f64) {
        let d = self.config.embedding_dim;
        let step = |params: &mut [f64], g: &[f64]| {
            for (w, gi) in params.iter_mut().zip(g) {
                *w -= learning_rate * gi;
            }
        };
        step(&mut self.embedding[d..], &grads.embedding[d..]);
        step(&mut self.conv, &grads.conv);
        step(&mut self.conv_bias, &grads.conv_bias);
        step(&mut self.dense, &grads.dense);
        step(&mut self.dense_bias, &grads.dense_bias);
    }

    /// Per-(sample, filter) pooled position and whether it is active.
    fn activation_pattern(&self, batch: &SequenceBatch) -> Vec<(usize, bool)> {
        let nf = self.config.filters;
        batch
            .rows()
            .iter()
            .flat_map(|row| {
                let cache = self.forward_sample(row);
                (0..nf)
                    .map(|f| (cache.argmax[f], cache.z[cache.argmax[f] * nf + f] > 0.0))
                    .collect::<Vec<_>>()
            })
            .collect()
    }
}

fn check_labels(batch: &SequenceBatch, labels: &[Label]) -> Result<()> {
    if batch.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} sequences but {} labels",
            batch.len(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::Shape("empty batch".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-sample loss seen during the epoch.
    pub loss: f64,
    pub accuracy: f64,
    pub validation_accuracy: Option<f64>,
    /// Wall-clock seconds since training started.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

impl TrainHistory {
    pub fn total_seconds(&self) -> f64 {
        self.epochs.last().map_or(0.0, |e| e.seconds)
    }

    /// `(loss, accuracy, validation accuracy)` per epoch, without timings.
    pub fn trajectory(&self) -> Vec<(f64, f64, Option<f64>)> {
        self.epochs
            .iter()
            .map(|e| (e.loss, e.accuracy, e.validation_accuracy))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss,accuracy,seconds\n");
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{},{},{}\n",
                e.epoch, e.loss, e.accuracy, e.seconds
            ));
        }
        out
    }
}

/// Continues training `model` in place with seeded mini-batch SGD.
pub fn fit_cnn(
    model: &mut CnnModel,
    train: &SequenceBatch,
    labels: &[Label],
    validation: Option<(&SequenceBatch, &[Label])>,
    config: &CnnTrainConfig,
) -> Result<TrainHistory> {
    model.check_batch(train)?;
    check_labels(train, labels)?;
    if config.batch_size < 1 {
        return Err(Error::Config("batch_size must be >= 1".into()));
    }
    if !(config.learning_rate >= 0.0) {
        return Err(Error::Config("learning_rate must be >= 0".into()));
    }
    if let Some((vb, vl)) = validation {
        model.check_batch(vb)?;
        check_labels(vb, vl)?;
    }
    let started = Instant::now();
    let mut gen = rng::seeded(config.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = TrainHistory::default();
    for epoch in 1..=config.epochs {
        order.shuffle(&mut gen);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let mut grads = CnnGradients::zeros_like(model);
            let scale = 1.0 / chunk.len() as f64;
            for &i in chunk {
                let row = train.row(i);
                let cache = model.forward_sample(row);
                loss_sum -= cache.probs[labels[i].code()].ln();
                if argmax_lowest(&cache.probs) == labels[i].code() {
                    correct += 1;
                }
                model.backward_sample(row, &cache, labels[i], scale, &mut grads);
            }
            model.apply_gradients(&grads, config.learning_rate);
        }
        let loss = loss_sum / train.len() as f64;
        if !loss.is_finite() {
            return Err(Error::Divergence {
                epoch,
                learning_rate: config.learning_rate,
            });
        }
        let validation_accuracy = match validation {
            Some((vb, vl)) => {
                let pred = model.predict(vb)?;
                Some(pred.iter().zip(vl).filter(|(a, b)| a == b).count() as f64 / vl.len() as f64)
            }
            None => None,
        };
        history.epochs.push(EpochRecord {
            epoch,
            loss,
            accuracy: correct as f64 / train.len() as f64,
            validation_accuracy,
            seconds: started.elapsed().as_secs_f64(),
        });
    }
    Ok(history)
}

/// Initializes a model for `train.vocab_size()` and trains it.
pub fn train_cnn(
    train: &SequenceBatch,
    labels: &[Label],
    model_config: &CnnConfig,
    train_config: &CnnTrainConfig,
) -> Result<(CnnModel, TrainHistory)> {
    if train.is_empty() {
        return Err(Error::Shape("empty training set".into()));
    }
    let mut model = init_cnn(train.vocab_size(), *model_config)?;
    let history = fit_cnn(&mut model, train, labels, None, train_config)?;
    Ok((model, history))
}

pub const GRADIENT_CHECK_STEP: f64 = 1e-4;
/// Pre-activations closer than this to zero are moved away before differencing.
const KINK_MARGIN: f64 = 1e-3;
/// Magnitude floor in the relative-error denominator.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck {
    pub max_relative_error: f64,
    pub checked: usize,
    /// Parameters whose differencing interval crossed a pooling or rectifier switch.
    pub skipped: usize,
}

/// `|a - b| / max(|a|, |b|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_ERROR_FLOOR)
}

/// Shifts conv biases so no pre-activation sits within the kink margin of 0.
fn nudge_away_from_kinks(model: &mut CnnModel, batch: &SequenceBatch) {
    let nf = model.config.filters;
    let caches: Vec<SampleCache> = batch
        .rows()
        .iter()
        .map(|r| model.forward_sample(r))
        .collect();
    for f in 0..nf {
        let zs: Vec<f64> = caches
            .iter()
            .flat_map(|c| c.z.iter().skip(f).step_by(nf).copied())
            .collect();
        let clear = |s: f64| zs.iter().all(|z| (z + s).abs() >= KINK_MARGIN);
        let shift = (0..64)
            .map(|m| {
                let mag = KINK_MARGIN * (m / 2) as f64 * 1.5;
                if m % 2 == 0 {
                    mag
                } else {
                    -mag
                }
            })
            .find(|&s| clear(s));
        if let Some(s) = shift {
            model.conv_bias[f] += s;
        }
    }
}

/// Compares the analytic gradient with central differences (step 1e-4) over
/// every parameter except the frozen pad row.
pub fn gradient_check_report(
    model: &CnnModel,
    batch: &SequenceBatch,
    labels: &[Label],
) -> Result<GradientCheck> {
    let mut model = model.clone();
    nudge_away_from_kinks(&mut model, batch);
    let (_, grads) = model.loss_and_gradients(batch, labels)?;
    let pattern = model.activation_pattern(batch);
    let d = model.config.embedding_dim;
    let analytic: Vec<Vec<f64>> = grads.groups().iter().map(|(_, g)| g.to_vec()).collect();

    let mut report = GradientCheck {
        max_relative_error: 0.0,
        checked: 0,
        skipped: 0,
    };
    for group in 0..5 {
        let start = if group == 0 { d } else { 0 };
        let len = model.groups()[group].1.len();
        for i in start..len {
            let original = model.groups()[group].1[i];
            model.groups_mut()[group][i] = original + GRADIENT_CHECK_STEP;
            let plus = model.loss(batch, labels)?;
            let plus_pattern = model.activation_pattern(batch);
            model.groups_mut()[group][i] = original - GRADIENT_CHECK_STEP;
            let minus = model.loss(batch, labels)?;
            let minus_pattern = model.activation_pattern(batch);
            model.groups_mut()[group][i] = original;
            if plus_pattern != pattern || minus_pattern != pattern {
                report.skipped += 1;
                continue;
            }
            let numeric = (plus - minus) / (2.0 * GRADIENT_CHECK_STEP);
            let err = relative_error(analytic[group][i], numeric);
            report.max_relative_error = report.max_relative_error.max(err);
            report.checked += 1;
        }
    }
    Ok(report)
}

/// Worst relative error between analytic and finite-difference gradients.
pub fn gradient_check(model: &CnnModel, batch: &SequenceBatch, labels: &[Label]) -> Result<f64> {
    gradient_check_report(model, batch, labels).map(|r| r.max_relative_error)
}
