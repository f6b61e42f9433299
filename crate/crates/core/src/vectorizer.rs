//! TF-IDF vectorization and integer sequence encoding.
//!
//! Weights are `tf * ln(D / df)` with raw in-document counts for `tf`, no
//! smoothing and no vector normalization. The same fitted vocabulary also
//! drives the integer encoding consumed by the CNN, with two reserved codes.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textprep::{Token, TokenizedDocument};

pub const PAD_CODE: u32 = 0;
pub const OOV_CODE: u32 = 1;
/// Offset added to a vocabulary index to obtain its sequence code.
pub const FIRST_TERM_CODE: u32 = 2;

const MODEL_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VectorizerConfig {
    /// Terms must occur in at least this many training documents.
    pub min_df: usize,
    /// Terms occurring in more than this fraction of training documents are dropped.
    pub max_df: f64,
    /// Vocabulary cap; the highest-df terms are kept.
    pub max_features: usize,
}

impl Default for VectorizerConfig {
    fn default() -> Self {
        VectorizerConfig {
            min_df: 1,
            max_df: 1.0,
            max_features: 10_000,
        }
    }
}

impl VectorizerConfig {
    /// Copy with a different vocabulary cap.
    pub fn with_max_features(self, max_features: usize) -> Self {
        VectorizerConfig {
            max_features,
            ..self
        }
    }

    fn validate(&self) -> Result<()> {
        if self.min_df < 1 {
            return Err(Error::Config("min_df must be >= 1".into()));
        }
        if !(self.max_df > 0.0 && self.max_df <= 1.0) {
            return Err(Error::Config(format!(
                "max_df must lie in (0, 1], got {}",
                self.max_df
            )));
        }
        if self.max_features < 1 {
            return Err(Error::Config("max_features must be >= 1".into()));
        }
        Ok(())
    }
}

/// Fitted term list. Index `i` holds the term with the i-th highest document
/// frequency, ties in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    df: Vec<usize>,
    index: HashMap<String, usize>,
    n_docs: usize,
}

impl Vocabulary {
    fn new(terms: Vec<String>, df: Vec<usize>, n_docs: usize) -> Self {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary {
            terms,
            df,
            index,
            n_docs,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> &str {
        &self.terms[index]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn doc_frequency(&self, index: usize) -> usize {
        self.df[index]
    }

    /// Number of training documents the vocabulary was fitted on.
    pub fn n_docs(&self) -> usize {
        self.n_docs
    }
}

/// Sparse feature vector: `(index, weight)` pairs sorted by strictly increasing index.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    /// Sorts entries by index; panics on duplicate indices.
    pub fn new(mut entries: Vec<(usize, f64)>) -> Self {
        entries.sort_by_key(|e| e.0);
        assert!(
            entries.windows(2).all(|w| w[0].0 < w[1].0),
            "duplicate index in sparse vector"
        );
        SparseVector { entries }
    }

    /// Keeps the non-zero components of a dense slice.
    pub fn from_dense(values: &[f64]) -> Self {
        SparseVector {
            entries: values
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i, *v))
                .collect(),
        }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |e| e.0)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0.0)
    }

    /// One past the largest index, or 0 when empty.
    pub fn dim_bound(&self) -> usize {
        self.entries.last().map_or(0, |e| e.0 + 1)
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * dense[i]).sum()
    }

    pub fn squared_norm(&self) -> f64 {
        self.entries.iter().map(|e| e.1 * e.1).sum()
    }

    pub fn dot_sparse(&self, other: &SparseVector) -> f64 {
        let (mut a, mut b) = (
            self.entries.iter().peekable(),
            other.entries.iter().peekable(),
        );
        let mut sum = 0.0;
        while let (Some(&&(ia, va)), Some(&&(ib, vb))) = (a.peek(), b.peek()) {
            match ia.cmp(&ib) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    sum += va * vb;
                    a.next();
                    b.next();
                }
            }
        }
        sum
    }

    pub fn squared_distance(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.entries, &other.entries);
        let mut sum = 0.0;
        while i < a.len() || j < b.len() {
            let d = if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
                i += 1;
                a[i - 1].1
            } else if i == a.len() || b[j].0 < a[i].0 {
                j += 1;
                b[j - 1].1
            } else {
                i += 1;
                j += 1;
                a[i - 1].1 - b[j - 1].1
            };
            sum += d * d;
        }
        sum
    }

    /// Multiplies every weight by `factor`.
    pub fn scaled(&self, factor: f64) -> SparseVector {
        SparseVector {
            entries: self.entries.iter().map(|&(i, v)| (i, v * factor)).collect(),
        }
    }
}

/// Padded integer sequences: 0 = pad, 1 = out-of-vocabulary, `index + 2` for a term.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceBatch {
    max_len: usize,
    vocab_size: usize,
    rows: Vec<Vec<u32>>,
}

impl SequenceBatch {
    pub fn new(rows: Vec<Vec<u32>>, max_len: usize, vocab_size: usize) -> Result<Self> {
        for (r, row) in rows.iter().enumerate() {
            if row.len() != max_len {
                return Err(Error::Shape(format!(
                    "row {r} has length {}, expected {max_len}",
                    row.len()
                )));
            }
            if let Some(&code) = row.iter().find(|&&c| c as usize >= vocab_size + 2) {
                return Err(Error::Encode(format!(
                    "code {code} in row {r} exceeds vocabulary size {vocab_size} + 2"
                )));
            }
        }
        Ok(SequenceBatch {
            max_len,
            vocab_size,
            rows,
        })
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    /// Size of the fitted vocabulary (excluding the two reserved codes).
    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn select(&self, indices: &[usize]) -> SequenceBatch {
        SequenceBatch {
            max_len: self.max_len,
            vocab_size: self.vocab_size,
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel {
    vocabulary: Vocabulary,
    idf: Vec<f64>,
    config: VectorizerConfig,
}

impl TfidfModel {
    /// Fits document frequencies on the training documents.
    ///
    /// Terms outside `[min_df, max_df * D]` are dropped; if more than
    /// `max_features` remain, the highest-df terms are kept.
    pub fn fit(train_docs: &[TokenizedDocument], config: VectorizerConfig) -> Result<TfidfModel> {
        config.validate()?;
        if train_docs.is_empty() {
            return Err(Error::Fit("no training documents".into()));
        }
        let n_docs = train_docs.len();
        let mut df: HashMap<&str, usize> = HashMap::new();
        for doc in train_docs {
            let distinct: HashSet<&str> = doc.tokens.iter().map(Token::as_str).collect();
            for term in distinct {
                *df.entry(term).or_insert(0) += 1;
            }
        }
        let mut kept: Vec<(&str, usize)> = df
            .into_iter()
            .filter(|&(_, f)| f >= config.min_df && f as f64 / n_docs as f64 <= config.max_df)
            .collect();
        if kept.is_empty() {
            return Err(Error::Fit(format!(
                "no term satisfies min_df = {} and max_df = {} over {n_docs} documents",
                config.min_df, config.max_df
            )));
        }
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        kept.truncate(config.max_features);
        let (terms, dfs): (Vec<String>, Vec<usize>) =
            kept.into_iter().map(|(t, f)| (t.to_string(), f)).unzip();
        Ok(Self::from_parts(
            Vocabulary::new(terms, dfs, n_docs),
            config,
        ))
    }

    fn from_parts(vocabulary: Vocabulary, config: VectorizerConfig) -> TfidfModel {
        let d = vocabulary.n_docs as f64;
        let idf = vocabulary.df.iter().map(|&f| (d / f as f64).ln()).collect();
        TfidfModel {
            vocabulary,
            idf,
            config,
        }
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn config(&self) -> &VectorizerConfig {
        &self.config
    }

    /// Feature dimension V.
    pub fn dim(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn transform_tokens(&self, tokens: &[Token]) -> SparseVector {
        let mut counts: HashMap<usize, usize> = HashMap::new();
        for token in tokens {
            if let Some(i) = self.vocabulary.index_of(token.as_str()) {
                *counts.entry(i).or_insert(0) += 1;
            }
        }
        let mut entries: Vec<(usize, f64)> = counts
            .into_iter()
            .map(|(i, tf)| (i, tf as f64 * self.idf[i]))
            .collect();
        entries.sort_unstable_by_key(|e| e.0);
        SparseVector { entries }
    }

    pub fn transform(&self, doc: &TokenizedDocument) -> SparseVector {
        self.transform_tokens(&doc.tokens)
    }

    pub fn transform_all(&self, docs: &[TokenizedDocument]) -> Vec<SparseVector> {
        docs.par_iter().map(|d| self.transform(d)).collect()
    }

    pub fn encode_tokens(&self, tokens: &[Token], max_len: usize) -> Vec<u32> {
        let mut row: Vec<u32> = tokens
            .iter()
            .take(max_len)
            .map(|t| match self.vocabulary.index_of(t.as_str()) {
                Some(i) => i as u32 + FIRST_TERM_CODE,
                None => OOV_CODE,
            })
            .collect();
        row.resize(max_len, PAD_CODE);
        row
    }

    /// Integer-encodes documents, truncating or right-padding each to `max_len`.
    pub fn encode_sequences(
        &self,
        docs: &[TokenizedDocument],
        max_len: usize,
    ) -> Result<SequenceBatch> {
        if max_len < 1 {
            return Err(Error::Config("max_len must be >= 1".into()));
        }
        let rows = docs
            .iter()
            .map(|d| self.encode_tokens(&d.tokens, max_len))
            .collect();
        Ok(SequenceBatch {
            max_len,
            vocab_size: self.dim(),
            rows,
        })
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let terms: Vec<TermRecord> = (0..self.dim())
            .map(|i| TermRecord {
                t: self.vocabulary.terms[i].clone(),
                df: self.vocabulary.df[i],
                idx: i,
            })
            .collect();
        serde_json::to_value(ModelFile {
            version: MODEL_VERSION,
            n_docs: self.vocabulary.n_docs,
            min_df: self.config.min_df,
            max_df: self.config.max_df,
            max_features: self.config.max_features,
            terms,
        })
        .expect("tf-idf model serializes")
    }

    pub fn from_json_value(value: serde_json::Value) -> Result<TfidfModel> {
        let version = value.get("version").and_then(|v| v.as_u64());
        match version {
            Some(MODEL_VERSION) => {}
            Some(found) => {
                return Err(Error::Version {
                    found,
                    expected: MODEL_VERSION,
                })
            }
            None => return Err(Error::Format("vectorizer record lacks a version".into())),
        }
        let file: ModelFile = serde_json::from_value(value)?;
        let v = file.terms.len();
        let mut terms = vec![None; v];
        let mut dfs = vec![0; v];
        for rec in file.terms {
            if rec.idx >= v || terms[rec.idx].is_some() {
                return Err(Error::Format(format!(
                    "term index {} is out of range or repeated",
                    rec.idx
                )));
            }
            if rec.df == 0 || rec.df > file.n_docs {
                return Err(Error::Format(format!(
                    "term {:?} has df {} outside 1..={}",
                    rec.t, rec.df, file.n_docs
                )));
            }
            terms[rec.idx] = Some(rec.t);
            dfs[rec.idx] = rec.df;
        }
        let terms = terms.into_iter().map(Option::unwrap).collect();
        let config = VectorizerConfig {
            min_df: file.min_df,
            max_df: file.max_df,
            max_features: file.max_features,
        };
        Ok(Self::from_parts(
            Vocabulary::new(terms, dfs, file.n_docs),
            config,
        ))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("tf-idf model serializes")
    }

    pub fn from_json(text: &str) -> Result<TfidfModel> {
        Self::from_json_value(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<TfidfModel> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct TermRecord {
    t: String,
    df: usize,
    idx: usize,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u64,
    #[serde(rename = "D")]
    n_docs: usize,
    min_df: usize,
    max_df: f64,
    max_features: usize,
    terms: Vec<TermRecord>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Label;
    use approx::assert_abs_diff_eq;

    fn doc(words: &[&str]) -> TokenizedDocument {
        TokenizedDocument::from_words(0, words, Label::Positive)
    }

    fn toy() -> Vec<TokenizedDocument> {
        vec![
            doc(&["cat", "sat"]),
            doc(&["cat", "ran"]),
            doc(&["dog", "ran"]),
        ]
    }

    fn toy_model() -> TfidfModel {
        TfidfModel::fit(&toy(), VectorizerConfig::default().with_max_features(10)).unwrap()
    }

    #[test]
    fn toy_document_frequencies_and_idf() {
        let m = toy_model();
        let v = m.vocabulary();
        assert_eq!(v.n_docs(), 3);
        assert_eq!(v.terms(), ["cat", "ran", "dog", "sat"]);
        let df: Vec<usize> = (0..4).map(|i| v.doc_frequency(i)).collect();
        assert_eq!(df, [2, 2, 1, 1]);
        assert_abs_diff_eq!(m.idf()[0], 0.405_465_108_108_164_4, epsilon = 1e-12);
        assert_abs_diff_eq!(m.idf()[2], 1.098_612_288_668_109_8, epsilon = 1e-12);
    }

    #[test]
    fn ubiquitous_term_has_zero_idf() {
        let docs = vec![doc(&["a", "b"]), doc(&["a"])];
        let m = TfidfModel::fit(&docs, VectorizerConfig::default()).unwrap();
        assert_eq!(m.idf()[m.vocabulary().index_of("a").unwrap()], 0.0);
    }

    #[test]
    fn max_features_keeps_highest_df() {
        let m = TfidfModel::fit(&toy(), VectorizerConfig::default().with_max_features(2)).unwrap();
        assert_eq!(m.vocabulary().terms(), ["cat", "ran"]);
    }

    #[test]
    fn df_filters() {
        let cfg = VectorizerConfig {
            min_df: 2,
            ..Default::default()
        };
        let m = TfidfModel::fit(&toy(), cfg).unwrap();
        assert_eq!(m.vocabulary().terms(), ["cat", "ran"]);

        let cfg = VectorizerConfig {
            max_df: 0.5,
            ..Default::default()
        };
        let m = TfidfModel::fit(&toy(), cfg).unwrap();
        assert_eq!(m.vocabulary().terms(), ["dog", "sat"]);

        let cfg = VectorizerConfig {
            min_df: 3,
            ..Default::default()
        };
        let err = TfidfModel::fit(&toy(), cfg).unwrap_err();
        assert!(err.to_string().contains("min_df = 3"));
    }

    #[test]
    fn transform_examples() {
        let m = toy_model();
        let v = m.transform(&doc(&["cat", "sat"]));
        assert_eq!(v.len(), 2);
        assert_abs_diff_eq!(v.get(0), (1.5f64).ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(v.get(3), 3f64.ln(), epsilon = 1e-12);

        assert!(m.transform(&doc(&["zebra", "yak"])).is_empty());

        let twice = m.transform(&doc(&["cat", "cat"]));
        assert_abs_diff_eq!(twice.get(0), 2.0 * 1.5f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn sequence_encoding() {
        let m = toy_model();
        let batch = m
            .encode_sequences(
                &[
                    doc(&[]),
                    doc(&["cat", "zzz"]),
                    doc(&["dog", "cat", "ran", "sat", "cat"]),
                ],
                4,
            )
            .unwrap();
        assert_eq!(batch.row(0), [0, 0, 0, 0]);
        assert_eq!(batch.row(1), [2, 1, 0, 0]);
        assert_eq!(batch.row(2), [4, 2, 3, 5]);
        assert_eq!(batch.vocab_size(), 4);
        assert!(m.encode_sequences(&[], 0).is_err());
    }

    #[test]
    fn json_round_trip_recomputes_idf() {
        let m = toy_model();
        let json = m.to_json();
        assert!(!json.contains("idf"));
        let back = TfidfModel::from_json(&json).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn json_rejects_other_versions() {
        let mut value = toy_model().to_json_value();
        value["version"] = 7.into();
        assert!(matches!(
            TfidfModel::from_json_value(value),
            Err(Error::Version { found: 7, .. })
        ));
    }

    #[test]
    fn sparse_distance_matches_dense() {
        let a = SparseVector::new(vec![(0, 1.0), (3, 2.0)]);
        let b = SparseVector::new(vec![(1, 4.0), (3, 0.5)]);
        assert_abs_diff_eq!(a.squared_distance(&b), 1.0 + 16.0 + 2.25);
        assert_abs_diff_eq!(a.dot_sparse(&b), 1.0);
        assert_eq!(a.squared_distance(&a), 0.0);
    }
}
