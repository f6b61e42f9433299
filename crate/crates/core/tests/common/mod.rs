//! Independent reference implementations and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use emoforge::corpus::{generate_synthetic_corpus, Label, SyntheticSpec};
use emoforge::linear::{LinearGradient, LinearKind, LinearModel};
use emoforge::model::ClassifierParams;
use emoforge::neural::{CnnConfig, CnnTrainConfig};
use emoforge::textprep::{self, TokenizedDocument};
use emoforge::vectorizer::{SequenceBatch, SparseVector, TfidfModel, VectorizerConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// TF-IDF computed straight from the definitions: raw counts times ln(D / df),
/// vocabulary = the `max_features` highest-df terms (ties alphabetical) that
/// pass the df filters. Terms are returned in rank order.
pub fn brute_tfidf(
    docs: &[Vec<String>],
    config: &VectorizerConfig,
) -> (Vec<String>, Vec<BTreeMap<String, f64>>) {
    let n = docs.len() as f64;
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for d in docs {
        let unique: BTreeSet<&str> = d.iter().map(String::as_str).collect();
        for t in unique {
            *df.entry(t).or_default() += 1;
        }
    }
    let mut kept: Vec<(&str, usize)> = df
        .into_iter()
        .filter(|&(_, f)| f >= config.min_df && (f as f64) <= config.max_df * n)
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    kept.truncate(config.max_features);
    let vocab: BTreeMap<&str, usize> = kept.iter().copied().collect();
    let weights = docs
        .iter()
        .map(|d| {
            let mut w = BTreeMap::new();
            for t in d {
                if vocab.contains_key(t.as_str()) {
                    *w.entry(t.clone()).or_insert(0.0) += 1.0;
                }
            }
            for (t, v) in w.iter_mut() {
                *v *= (n / vocab[t.as_str()] as f64).ln();
            }
            w
        })
        .collect();
    (kept.iter().map(|(t, _)| t.to_string()).collect(), weights)
}

/// Random corpus of at most `max_docs` documents over at most `max_terms` terms.
pub fn random_corpus(seed: u64, max_docs: usize, max_terms: usize) -> Vec<Vec<String>> {
    let mut g = rng(seed);
    let n_docs = g.gen_range(1..=max_docs);
    let n_terms = g.gen_range(1..=max_terms);
    (0..n_docs)
        .map(|_| {
            let len = g.gen_range(1..=12);
            (0..len)
                .map(|_| format!("w{}", g.gen_range(0..n_terms)))
                .collect()
        })
        .collect()
}

pub fn tokenized(words: &[Vec<String>]) -> Vec<TokenizedDocument> {
    words
        .iter()
        .enumerate()
        .map(|(i, w)| TokenizedDocument::from_words(i as u64, w, Label::Positive))
        .collect()
}

/// Largest absolute difference between the library's TF-IDF and the oracle on one corpus.
pub fn tfidf_discrepancy(words: &[Vec<String>], config: VectorizerConfig) -> f64 {
    let docs = tokenized(words);
    let model = TfidfModel::fit(&docs, config).expect("fit");
    let (terms, expected) = brute_tfidf(words, &config);
    let mut vocab_terms: Vec<&str> = (0..model.dim())
        .map(|i| model.vocabulary().term(i))
        .collect();
    vocab_terms.sort_unstable();
    let mut oracle_terms: Vec<&str> = terms.iter().map(String::as_str).collect();
    oracle_terms.sort_unstable();
    if vocab_terms != oracle_terms {
        return f64::INFINITY;
    }
    let mut worst: f64 = 0.0;
    for (doc, exp) in docs.iter().zip(&expected) {
        let v = model.transform(doc);
        if v.len() != exp.len() {
            return f64::INFINITY;
        }
        for (term, &weight) in exp {
            let idx = model
                .vocabulary()
                .index_of(term)
                .expect("term in vocabulary");
            worst = worst.max((v.get(idx) - weight).abs());
        }
    }
    worst
}

/// Weighted Gini of a candidate partition, from scratch.
fn partition_gini(y: &[Label], left: &[bool]) -> f64 {
    let gini = |idx: Vec<usize>| -> (f64, f64) {
        let n = idx.len() as f64;
        if idx.is_empty() {
            return (0.0, 0.0);
        }
        let mut c = [0.0; 3];
        for i in idx {
            c[y[i].code()] += 1.0;
        }
        (n, 1.0 - c.iter().map(|k| (k / n) * (k / n)).sum::<f64>())
    };
    let (nl, gl) = gini((0..y.len()).filter(|&i| left[i]).collect());
    let (nr, gr) = gini((0..y.len()).filter(|&i| !left[i]).collect());
    (nl * gl + nr * gr) / (nl + nr)
}

/// Exhaustive root split: every feature, every midpoint between consecutive
/// distinct values; lowest impurity wins, earliest (feature, threshold) on ties.
pub fn exhaustive_root_split(x: &[Vec<f64>], y: &[Label]) -> Option<(usize, f64, f64)> {
    let n_features = x[0].len();
    let mut best: Option<(usize, f64, f64)> = None;
    for f in 0..n_features {
        let mut values: Vec<f64> = x.iter().map(|r| r[f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for pair in values.windows(2) {
            let t = 0.5 * (pair[0] + pair[1]);
            let left: Vec<bool> = x.iter().map(|r| r[f] <= t).collect();
            let imp = partition_gini(y, &left);
            if best.is_none_or(|b| imp < b.2 - 1e-12) {
                best = Some((f, t, imp));
            }
        }
    }
    best
}

pub fn random_tree_dataset(seed: u64) -> (Vec<Vec<f64>>, Vec<Label>) {
    let mut g = rng(seed);
    let n = g.gen_range(2..=8);
    let f = g.gen_range(1..=3);
    let x = (0..n)
        .map(|_| {
            (0..f)
                .map(|_| g.gen_range(-2i32..=3) as f64 * 0.5)
                .collect()
        })
        .collect();
    let y = (0..n).map(|_| Label::ALL[g.gen_range(0..3)]).collect();
    (x, y)
}

pub fn sparse_rows(x: &[Vec<f64>]) -> Vec<SparseVector> {
    x.iter().map(|r| SparseVector::from_dense(r)).collect()
}

/// Class-disjoint documents: every token comes from the document's own class bank.
pub fn disjoint_docs(counts: [usize; 3], seed: u64) -> Vec<TokenizedDocument> {
    textprep::prepare(
        &generate_synthetic_corpus(&SyntheticSpec::disjoint(counts), seed).expect("corpus"),
    )
}

pub const OVERFIT_CNN: CnnConfig = CnnConfig {
    embedding_dim: 16,
    filters: 16,
    kernel_width: 3,
    max_len: 16,
    seed: 5,
};

pub const OVERFIT_TRAIN: CnnTrainConfig = CnnTrainConfig {
    epochs: 200,
    batch_size: 5,
    learning_rate: 0.3,
    seed: 6,
};

/// The 30-document overfit fixture, 10 per class.
pub fn overfit_fixture() -> (SequenceBatch, Vec<Label>) {
    let docs = disjoint_docs([10, 10, 10], 17);
    let vectorizer = TfidfModel::fit(&docs, VectorizerConfig::default()).expect("fit");
    let batch = vectorizer
        .encode_sequences(&docs, OVERFIT_CNN.max_len)
        .expect("encode");
    (batch, docs.iter().map(|d| d.label).collect())
}

pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

const STEP: f64 = 1e-6;
// Central differences at step 1e-6 on an O(1) loss carry ~1e-10 of rounding
// noise, so gradient components below this magnitude are held to 1e-9 absolute.
const FLOOR: f64 = 1e-4;

pub type Objective = fn(&LinearModel, &[SparseVector], &[Label], f64) -> (f64, LinearGradient);

pub fn random_instance(
    seed: u64,
    n_features: usize,
    n_samples: usize,
) -> (LinearModel, Vec<SparseVector>, Vec<Label>) {
    let mut g = rng(seed);
    let mut model = LinearModel::zeros(LinearKind::Logistic, n_features);
    for c in 0..3 {
        for w in model.weights[c].iter_mut() {
            *w = g.gen_range(-1.0..1.0);
        }
        model.bias[c] = g.gen_range(-0.5..0.5);
    }
    let x = (0..n_samples)
        .map(|_| {
            let dense: Vec<f64> = (0..n_features)
                .map(|_| {
                    if g.gen_bool(0.6) {
                        g.gen_range(0.0..2.0)
                    } else {
                        0.0
                    }
                })
                .collect();
            SparseVector::from_dense(&dense)
        })
        .collect();
    let y = (0..n_samples)
        .map(|i| Label::ALL[(i + g.gen_range(0..3)) % 3])
        .collect();
    (model, x, y)
}

fn param(m: &mut LinearModel, c: usize, j: usize) -> &mut f64 {
    if j < m.n_features {
        &mut m.weights[c][j]
    } else {
        &mut m.bias[c]
    }
}

pub fn finite_difference_error(
    objective: Objective,
    model: &LinearModel,
    x: &[SparseVector],
    y: &[Label],
    l2: f64,
) -> f64 {
    let (_, grad) = objective(model, x, y, l2);
    let mut worst: f64 = 0.0;
    let mut probe = model.clone();
    for c in 0..3 {
        for j in 0..=model.n_features {
            let original = *param(&mut probe, c, j);
            *param(&mut probe, c, j) = original + STEP;
            let plus = objective(&probe, x, y, l2).0;
            *param(&mut probe, c, j) = original - STEP;
            let minus = objective(&probe, x, y, l2).0;
            *param(&mut probe, c, j) = original;
            let numeric = (plus - minus) / (2.0 * STEP);
            let analytic = if j < model.n_features {
                grad.weights[c][j]
            } else {
                grad.bias[c]
            };
            worst = worst.max(relative_error(analytic, numeric, FLOOR));
        }
    }
    worst
}

/// Margins within this distance of 1 would put the differencing interval across the hinge kink.
pub fn away_from_kinks(model: &LinearModel, x: &[SparseVector], y: &[Label]) -> bool {
    x.iter().zip(y).all(|(row, label)| {
        let scores = model.decision_scores(row);
        (0..3).all(|c| {
            let sign = if label.code() == c { 1.0 } else { -1.0 };
            (sign * scores[c] - 1.0).abs() > 1e-3
        })
    })
}

/// Hyperparameters small enough to train every model kind in well under a second.
pub fn small_params(seed: u64) -> ClassifierParams {
    let mut p = ClassifierParams::default().with_seed(seed);
    p.rforest.n_trees = 15;
    p.adaboost.n_stages = 10;
    p.cnn = CnnConfig {
        embedding_dim: 8,
        filters: 8,
        max_len: 16,
        ..p.cnn
    };
    p.cnn_train = CnnTrainConfig {
        epochs: 3,
        batch_size: 16,
        ..p.cnn_train
    };
    p
}

pub fn small_corpus() -> Vec<TokenizedDocument> {
    textprep::prepare(
        &generate_synthetic_corpus(&SyntheticSpec::separable([100, 80, 40]), 8).expect("corpus"),
    )
}

/// 100 documents unseen in training, one of them entirely out of vocabulary.
pub fn probe_docs() -> Vec<TokenizedDocument> {
    let mut docs = textprep::prepare(
        &generate_synthetic_corpus(&SyntheticSpec::separable([40, 30, 29]), 99).expect("corpus"),
    );
    docs.push(TokenizedDocument::from_text(
        1000,
        "entirely unseen vocabulary here",
        Label::Neutral,
    ));
    docs
}
