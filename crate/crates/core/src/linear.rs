//! Linear and kernel classifiers over sparse TF-IDF vectors: multinomial
//! logistic regression, one-vs-rest linear SVM and one-vs-rest RBF SVM.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::corpus::{argmax_lowest, Label, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::rng;
use crate::vectorizer::SparseVector;

/// Gradient-descent settings shared by the logistic and linear SVM trainers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub l2: f64,
    pub max_epochs: usize,
    /// Training stops once the epoch-over-epoch objective decrease falls below this.
    pub tolerance: f64,
    pub seed: u64,
    /// `None` trains full-batch.
    pub batch_size: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::logistic()
    }
}

impl TrainConfig {
    pub fn logistic() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            l2: 1e-4,
            max_epochs: 500,
            tolerance: 1e-6,
            seed: 0,
            batch_size: None,
        }
    }

    pub fn linear_svm() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            ..TrainConfig::logistic()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be > 0".into()));
        }
        if !(self.l2 >= 0.0) {
            return Err(Error::Config("l2 must be >= 0".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config("tolerance must be > 0".into()));
        }
        if self.batch_size == Some(0) {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearKind {
    Logistic,
    LinearSvm,
}

/// One weight row and one bias per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub kind: LinearKind,
    pub n_features: usize,
    pub weights: [Vec<f64>; NUM_CLASSES],
    pub bias: [f64; NUM_CLASSES],
}

/// Gradient with the same layout as [`LinearModel`]'s parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGradient {
    pub weights: [Vec<f64>; NUM_CLASSES],
    pub bias: [f64; NUM_CLASSES],
}

impl LinearGradient {
    fn zeros(n_features: usize) -> Self {
        LinearGradient {
            weights: std::array::from_fn(|_| vec![0.0; n_features]),
            bias: [0.0; NUM_CLASSES],
        }
    }
}

fn check_dims(x: &[SparseVector], n_features: usize) -> Result<()> {
    for (i, row) in x.iter().enumerate() {
        if row.dim_bound() > n_features {
            return Err(Error::Shape(format!(
                "row {i} has feature index {} but the model has {n_features} features",
                row.dim_bound() - 1
            )));
        }
    }
    Ok(())
}

fn check_training_set(x: &[SparseVector], y: &[Label], n_features: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!(
            "{} rows but {} labels",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::Shape("empty training set".into()));
    }
    let mut present = [false; NUM_CLASSES];
    for l in y {
        present[l.code()] = true;
    }
    if present.iter().filter(|p| **p).count() < 2 {
        return Err(Error::Config(
            "training labels contain fewer than 2 classes".into(),
        ));
    }
    check_dims(x, n_features)
}

fn softmax(logits: [f64; NUM_CLASSES]) -> [f64; NUM_CLASSES] {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps = logits.map(|z| (z - max).exp());
    let sum: f64 = exps.iter().sum();
    exps.map(|e| e / sum)
}

impl LinearModel {
    pub fn zeros(kind: LinearKind, n_features: usize) -> Self {
        LinearModel {
            kind,
            n_features,
            weights: std::array::from_fn(|_| vec![0.0; n_features]),
            bias: [0.0; NUM_CLASSES],
        }
    }

    pub fn decision_scores(&self, x: &SparseVector) -> [f64; NUM_CLASSES] {
        std::array::from_fn(|c| x.dot(&self.weights[c]) + self.bias[c])
    }

    /// Label with the largest decision score, ties to the lowest class code.
    pub fn predict(&self, x: &[SparseVector]) -> Result<Vec<Label>> {
        check_dims(x, self.n_features)?;
        Ok(x.iter()
            .map(|row| Label::ALL[argmax_lowest(&self.decision_scores(row))])
            .collect())
    }

    /// Softmax probabilities; only defined for logistic models.
    pub fn predict_proba(&self, x: &[SparseVector]) -> Result<Vec<[f64; NUM_CLASSES]>> {
        if self.kind != LinearKind::Logistic {
            return Err(Error::Config(
                "probabilities are only available for logistic models".into(),
            ));
        }
        check_dims(x, self.n_features)?;
        Ok(x.iter()
            .map(|row| softmax(self.decision_scores(row)))
            .collect())
    }

    fn l2_penalty(&self, l2: f64) -> f64 {
        0.5 * l2 * self.weights.iter().flatten().map(|w| w * w).sum::<f64>()
    }

    fn apply(&mut self, grad: &LinearGradient, learning_rate: f64) {
        for c in 0..NUM_CLASSES {
            for (w, g) in self.weights[c].iter_mut().zip(&grad.weights[c]) {
                *w -= learning_rate * g;
            }
            self.bias[c] -= learning_rate * grad.bias[c];
        }
    }
}

/// Mean multinomial cross-entropy (deviance / 2N) plus `(l2 / 2) * ||W||^2`, with its gradient.
pub fn logistic_objective(
    model: &LinearModel,
    x: &[SparseVector],
    y: &[Label],
    l2: f64,
) -> (f64, LinearGradient) {
    let n = x.len() as f64;
    let mut grad = LinearGradient::zeros(model.n_features);
    let mut loss = 0.0;
    for (row, label) in x.iter().zip(y) {
        let logits = model.decision_scores(row);
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_sum = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
        loss += log_sum - logits[label.code()];
        for c in 0..NUM_CLASSES {
            let p = (logits[c] - log_sum).exp();
            let delta = (p - if c == label.code() { 1.0 } else { 0.0 }) / n;
            for (i, v) in row.iter() {
                grad.weights[c][i] += delta * v;
            }
            grad.bias[c] += delta;
        }
    }
    for c in 0..NUM_CLASSES {
        for (g, w) in grad.weights[c].iter_mut().zip(&model.weights[c]) {
            *g += l2 * w;
        }
    }
    (loss / n + model.l2_penalty(l2), grad)
}

/// Sum over classes of the one-vs-rest objective: mean hinge loss plus
/// `(l2 / 2) * ||w_c||^2`. The sub-gradient at margin exactly 1 is taken as 0.
pub fn hinge_objective(
    model: &LinearModel,
    x: &[SparseVector],
    y: &[Label],
    l2: f64,
) -> (f64, LinearGradient) {
    let mut grad = LinearGradient::zeros(model.n_features);
    let mut total = 0.0;
    for c in 0..NUM_CLASSES {
        let (loss, gw, gb) =
            binary_hinge(&model.weights[c], model.bias[c], x, y, Label::ALL[c], l2);
        total += loss;
        grad.weights[c] = gw;
        grad.bias[c] = gb;
    }
    (total, grad)
}

fn binary_hinge(
    w: &[f64],
    b: f64,
    x: &[SparseVector],
    y: &[Label],
    positive: Label,
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut gw = vec![0.0; w.len()];
    let mut gb = 0.0;
    let mut loss = 0.0;
    for (row, label) in x.iter().zip(y) {
        let sign = if *label == positive { 1.0 } else { -1.0 };
        let margin = sign * (row.dot(w) + b);
        if margin < 1.0 {
            loss += 1.0 - margin;
            for (i, v) in row.iter() {
                gw[i] -= sign * v / n;
            }
            gb -= sign / n;
        }
    }
    let mut penalty = 0.0;
    for (g, wi) in gw.iter_mut().zip(w) {
        *g += l2 * wi;
        penalty += wi * wi;
    }
    (loss / n + 0.5 * l2 * penalty, gw, gb)
}

fn batches(n: usize, batch_size: Option<usize>, seed: u64, epoch: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    match batch_size {
        None => vec![order],
        Some(size) => {
            order.shuffle(&mut rng::seeded(rng::derive(seed, epoch as u64)));
            order.chunks(size).map(<[usize]>::to_vec).collect()
        }
    }
}

fn gather<T: Clone>(items: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| items[i].clone()).collect()
}

/// Multinomial logistic regression; returns the model and the objective
/// value before training and after every completed epoch.
pub fn train_logistic_traced(
    x: &[SparseVector],
    y: &[Label],
    n_features: usize,
    config: &TrainConfig,
) -> Result<(LinearModel, Vec<f64>)> {
    config.validate()?;
    check_training_set(x, y, n_features)?;
    let mut model = LinearModel::zeros(LinearKind::Logistic, n_features);
    let (mut prev, mut grad) = logistic_objective(&model, x, y, config.l2);
    let mut history = vec![prev];
    for epoch in 0..config.max_epochs {
        if config.batch_size.is_none() {
            model.apply(&grad, config.learning_rate);
        } else {
            for batch in batches(x.len(), config.batch_size, config.seed, epoch) {
                let (bx, by) = (gather(x, &batch), gather(y, &batch));
                let (_, g) = logistic_objective(&model, &bx, &by, config.l2);
                model.apply(&g, config.learning_rate);
            }
        }
        let (cur, next_grad) = logistic_objective(&model, x, y, config.l2);
        if !cur.is_finite() {
            return Err(Error::Divergence {
                epoch: epoch + 1,
                learning_rate: config.learning_rate,
            });
        }
        history.push(cur);
        grad = next_grad;
        if prev - cur < config.tolerance {
            break;
        }
        prev = cur;
    }
    Ok((model, history))
}

pub fn train_logistic(
    x: &[SparseVector],
    y: &[Label],
    n_features: usize,
    config: &TrainConfig,
) -> Result<LinearModel> {
    train_logistic_traced(x, y, n_features, config).map(|(m, _)| m)
}

/// One-vs-rest linear SVM: each binary hinge problem is trained by
/// sub-gradient descent until its objective improves by less than the
/// tolerance or `max_epochs` is reached.
pub fn train_linear_svm(
    x: &[SparseVector],
    y: &[Label],
    n_features: usize,
    config: &TrainConfig,
) -> Result<LinearModel> {
    config.validate()?;
    check_training_set(x, y, n_features)?;
    let mut model = LinearModel::zeros(LinearKind::LinearSvm, n_features);
    for positive in Label::ALL {
        let c = positive.code();
        let mut w = vec![0.0; n_features];
        let mut b = 0.0;
        let (mut prev, _, _) = binary_hinge(&w, b, x, y, positive, config.l2);
        for epoch in 0..config.max_epochs {
            for batch in batches(
                x.len(),
                config.batch_size,
                rng::derive(config.seed, c as u64),
                epoch,
            ) {
                let (gw, gb) = if config.batch_size.is_none() {
                    let (_, gw, gb) = binary_hinge(&w, b, x, y, positive, config.l2);
                    (gw, gb)
                } else {
                    let (bx, by) = (gather(x, &batch), gather(y, &batch));
                    let (_, gw, gb) = binary_hinge(&w, b, &bx, &by, positive, config.l2);
                    (gw, gb)
                };
                for (wi, g) in w.iter_mut().zip(&gw) {
                    *wi -= config.learning_rate * g;
                }
                b -= config.learning_rate * gb;
            }
            let (cur, _, _) = binary_hinge(&w, b, x, y, positive, config.l2);
            if !cur.is_finite() {
                return Err(Error::Divergence {
                    epoch: epoch + 1,
                    learning_rate: config.learning_rate,
                });
            }
            // sub-gradient steps may overshoot; only a small genuine improvement stops training
            let improvement = prev - cur;
            if (0.0..config.tolerance).contains(&improvement) {
                break;
            }
            prev = cur;
        }
        model.weights[c] = w;
        model.bias[c] = b;
    }
    Ok(model)
}

/// Settings for the RBF-kernel SVM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RbfConfig {
    /// Kernel width; `None` means `1 / n_features`.
    pub gamma: Option<f64>,
    /// Box constraint on the dual coefficients.
    pub c_reg: f64,
    /// KKT violation tolerance.
    pub tolerance: f64,
    /// Consecutive sweeps without any update before SMO stops.
    pub max_passes: usize,
    /// Hard cap on SMO sweeps.
    pub max_sweeps: usize,
    /// Largest accepted training set; the Gram matrix is quadratic in it.
    pub sample_cap: usize,
    pub seed: u64,
}

impl Default for RbfConfig {
    fn default() -> Self {
        RbfConfig {
            gamma: None,
            c_reg: 1.0,
            tolerance: 1e-3,
            max_passes: 10,
            max_sweeps: 1000,
            sample_cap: 5000,
            seed: 0,
        }
    }
}

/// `exp(-gamma * ||a - b||^2)` over sparse vectors.
pub fn rbf_kernel(a: &SparseVector, b: &SparseVector, gamma: f64) -> f64 {
    (-gamma * a.squared_distance(b)).exp()
}

/// One binary machine of the one-vs-rest decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryMachine {
    pub label: Label,
    /// `(support vector index, alpha * y)`.
    pub dual_coef: Vec<(usize, f64)>,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSvmModel {
    pub n_features: usize,
    pub gamma: f64,
    pub c_reg: f64,
    pub support_vectors: Vec<SparseVector>,
    /// Present classes only, in label-code order.
    pub machines: Vec<BinaryMachine>,
}

impl KernelSvmModel {
    pub fn decision_scores(&self, x: &SparseVector) -> [f64; NUM_CLASSES] {
        let kernels: Vec<f64> = self
            .support_vectors
            .iter()
            .map(|sv| rbf_kernel(sv, x, self.gamma))
            .collect();
        let mut scores = [f64::NEG_INFINITY; NUM_CLASSES];
        for m in &self.machines {
            scores[m.label.code()] = m
                .dual_coef
                .iter()
                .map(|&(i, a)| a * kernels[i])
                .sum::<f64>()
                + m.bias;
        }
        scores
    }

    pub fn predict(&self, x: &[SparseVector]) -> Result<Vec<Label>> {
        check_dims(x, self.n_features)?;
        Ok(x.iter()
            .map(|row| Label::ALL[argmax_lowest(&self.decision_scores(row))])
            .collect())
    }
}

/// Binary soft-margin dual solved by simplified SMO over a precomputed Gram matrix.
/// Returns `(alpha, bias)`.
fn smo(gram: &[f64], y: &[f64], config: &RbfConfig, seed: u64) -> (Vec<f64>, f64) {
    let n = y.len();
    let c_reg = config.c_reg;
    let k = |i: usize, j: usize| gram[i * n + j];
    let mut alpha = vec![0.0; n];
    let mut b = 0.0;
    // out[i] = sum_j alpha_j y_j K(j, i) + b
    let mut out = vec![0.0; n];
    let mut gen = rng::seeded(seed);
    let mut passes = 0;
    let mut sweeps = 0;
    while passes < config.max_passes && sweeps < config.max_sweeps && n > 1 {
        sweeps += 1;
        let mut changed = 0;
        for i in 0..n {
            let e_i = out[i] - y[i];
            let violates = (y[i] * e_i < -config.tolerance && alpha[i] < c_reg)
                || (y[i] * e_i > config.tolerance && alpha[i] > 0.0);
            if !violates {
                continue;
            }
            let mut j = gen.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let e_j = out[j] - y[j];
            let (a_i, a_j) = (alpha[i], alpha[j]);
            let (lo, hi) = if y[i] != y[j] {
                ((a_j - a_i).max(0.0), (c_reg + a_j - a_i).min(c_reg))
            } else {
                ((a_i + a_j - c_reg).max(0.0), (a_i + a_j).min(c_reg))
            };
            if lo >= hi {
                continue;
            }
            let eta = 2.0 * k(i, j) - k(i, i) - k(j, j);
            if eta >= 0.0 {
                continue;
            }
            let new_j = (a_j - y[j] * (e_i - e_j) / eta).clamp(lo, hi);
            if (new_j - a_j).abs() < 1e-8 {
                continue;
            }
            let new_i = a_i + y[i] * y[j] * (a_j - new_j);
            let (d_i, d_j) = (new_i - a_i, new_j - a_j);
            let b1 = b - e_i - y[i] * d_i * k(i, i) - y[j] * d_j * k(i, j);
            let b2 = b - e_j - y[i] * d_i * k(i, j) - y[j] * d_j * k(j, j);
            let new_b = if new_i > 0.0 && new_i < c_reg {
                b1
            } else if new_j > 0.0 && new_j < c_reg {
                b2
            } else {
                0.5 * (b1 + b2)
            };
            for (t, o) in out.iter_mut().enumerate() {
                *o += y[i] * d_i * k(i, t) + y[j] * d_j * k(j, t) + (new_b - b);
            }
            alpha[i] = new_i;
            alpha[j] = new_j;
            b = new_b;
            changed += 1;
        }
        passes = if changed == 0 { passes + 1 } else { 0 };
    }
    (alpha, b)
}

/// Value of the binary dual objective `sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij`.
pub fn dual_objective(alpha: &[f64], y: &[f64], gram: &[f64]) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * gram[i * n + j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

pub fn gram_matrix(x: &[SparseVector], gamma: f64) -> Vec<f64> {
    let n = x.len();
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        gram[i * n + i] = 1.0;
        for j in 0..i {
            let v = rbf_kernel(&x[i], &x[j], gamma);
            gram[i * n + j] = v;
            gram[j * n + i] = v;
        }
    }
    gram
}

/// One-vs-rest RBF SVM. Fails with a size error above `config.sample_cap` samples.
pub fn train_rbf_svm(
    x: &[SparseVector],
    y: &[Label],
    n_features: usize,
    config: &RbfConfig,
) -> Result<KernelSvmModel> {
    if x.len() > config.sample_cap {
        return Err(Error::Size {
            n: x.len(),
            cap: config.sample_cap,
        });
    }
    check_training_set(x, y, n_features)?;
    if !(config.c_reg > 0.0) || !(config.tolerance > 0.0) {
        return Err(Error::Config("c_reg and tolerance must be > 0".into()));
    }
    let gamma = config.gamma.unwrap_or(1.0 / n_features.max(1) as f64);
    if !(gamma > 0.0) {
        return Err(Error::Config(format!("gamma must be > 0, got {gamma}")));
    }
    let gram = gram_matrix(x, gamma);

    let mut sv_index: Vec<Option<usize>> = vec![None; x.len()];
    let mut support_vectors = Vec::new();
    let mut machines = Vec::new();
    for label in Label::ALL {
        if !y.contains(&label) {
            continue;
        }
        let signs: Vec<f64> = y
            .iter()
            .map(|l| if *l == label { 1.0 } else { -1.0 })
            .collect();
        let (alpha, bias) = smo(
            &gram,
            &signs,
            config,
            rng::derive(config.seed, label.code() as u64),
        );
        let mut dual_coef = Vec::new();
        for (i, &a) in alpha.iter().enumerate() {
            if a > 0.0 {
                let slot = *sv_index[i].get_or_insert_with(|| {
                    support_vectors.push(x[i].clone());
                    support_vectors.len() - 1
                });
                dual_coef.push((slot, a * signs[i]));
            }
        }
        machines.push(BinaryMachine {
            label,
            dual_coef,
            bias,
        });
    }
    Ok(KernelSvmModel {
        n_features,
        gamma,
        c_reg: config.c_reg,
        support_vectors,
        machines,
    })
}
