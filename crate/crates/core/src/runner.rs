//! Feature-count x classifier experiment grid.
//!
//! One vectorizer is fitted per feature count, on the training split only.
//! Every (feature count, classifier) cell derives its seed from the config
//! seed and the cell's index, so results do not depend on scheduling. The
//! CNN, which reads token sequences rather than TF-IDF vectors, runs once
//! per grid and is reported in its own table.
//!
//! Config files are JSON; every field is optional:
//!
//! ```json
//! {
//!   "corpus": "tweets.csv",
//!   "train_fraction": 0.7,
//!   "seed": 7,
//!   "feature_counts": [10000, 20000],
//!   "classifiers": ["logreg", "svm-linear", "dtree"],
//!   "run_cnn": false,
//!   "params": { "svm_linear": { "max_epochs": 200 } },
//!   "out_dir": "results"
//! }
//! ```
//!
//! Relative input paths resolve against the config file's directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{self, CorpusFormat, Label, LabeledDocument, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, format_percent, MetricsReport};
use crate::model::{self, ClassifierParams, ModelBundle, ModelKind, TrainedClassifier};
use crate::neural::{self, TrainHistory};
use crate::rng;
use crate::textprep::{self, TokenizedDocument};
use crate::vectorizer::{SparseVector, TfidfModel, VectorizerConfig};

pub const SEED_ENV: &str = "EMOFORGE_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Whole corpus, split with `train_fraction` and `seed`.
    pub corpus: Option<PathBuf>,
    /// Pre-split alternative to `corpus`.
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub train_fraction: f64,
    pub seed: u64,
    pub feature_counts: Vec<usize>,
    pub classifiers: Vec<ModelKind>,
    pub run_cnn: bool,
    /// Vocabulary size for the CNN's sequence encoding.
    pub cnn_features: usize,
    pub vectorizer: VectorizerConfig,
    pub params: ClassifierParams,
    pub save_models: bool,
    /// Worker threads for grid cells; `None` uses rayon's default.
    pub threads: Option<usize>,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            corpus: None,
            train: None,
            test: None,
            train_fraction: 0.7,
            seed: 0,
            feature_counts: vec![10000, 20000, 30000, 40000],
            classifiers: ModelKind::CLASSICAL.to_vec(),
            run_cnn: true,
            cnn_features: 10000,
            vectorizer: VectorizerConfig::default(),
            params: ClassifierParams::default(),
            save_models: false,
            threads: None,
            out_dir: PathBuf::from("results"),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.feature_counts.is_empty() && self.classifiers.iter().any(|k| *k != ModelKind::Cnn) {
            return Err(Error::Config("feature_counts is empty".into()));
        }
        if self.feature_counts.first() == Some(&0)
            || self.feature_counts.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::Config(format!(
                "feature_counts must be strictly increasing positive integers, got {:?}",
                self.feature_counts
            )));
        }
        if self.classifiers.contains(&ModelKind::Cnn) {
            return Err(Error::Config(
                "list the CNN via run_cnn, not classifiers".into(),
            ));
        }
        if self.classifiers.is_empty() && !self.run_cnn {
            return Err(Error::Config("nothing to run".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction {} is not in (0, 1)",
                self.train_fraction
            )));
        }
        if self.run_cnn && self.cnn_features == 0 {
            return Err(Error::Config("cnn_features must be >= 1".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be >= 1".into()));
        }
        Ok(())
    }

    /// Reads a JSON config and resolves relative input paths against its directory.
    /// `EMOFORGE_SEED`, when set, replaces the configured seed.
    pub fn load(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: ExperimentConfig = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut config.corpus, &mut config.train, &mut config.test]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(seed) = seed_from_env()? {
            config.seed = seed;
        }
        config.validate()?;
        Ok(config)
    }
}

pub fn seed_from_env() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{SEED_ENV}={s:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub features: usize,
    pub classifier: ModelKind,
    /// The error message when the cell failed.
    pub outcome: std::result::Result<MetricsReport, String>,
    pub train_seconds: f64,
    pub eval_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GridResult {
    /// Classical cells in (feature count, classifier) order, followed by the CNN row if run.
    pub rows: Vec<GridRow>,
    pub cnn_history: Option<TrainHistory>,
}

/// One `results.csv` line; `scores` is `None` for a failed cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRecord {
    pub features: usize,
    pub classifier: ModelKind,
    pub scores: Option<[f64; 4]>,
}

impl GridResult {
    pub fn any_failed(&self) -> bool {
        self.rows.iter().any(|r| r.outcome.is_err())
    }

    pub fn classical(&self) -> impl Iterator<Item = &GridRow> {
        self.rows.iter().filter(|r| r.classifier != ModelKind::Cnn)
    }

    pub fn cnn(&self) -> Option<&GridRow> {
        self.rows.iter().find(|r| r.classifier == ModelKind::Cnn)
    }

    pub fn records(&self) -> Vec<CsvRecord> {
        self.rows
            .iter()
            .map(|r| CsvRecord {
                features: r.features,
                classifier: r.classifier,
                scores: r.outcome.as_ref().ok().map(|m| {
                    [
                        m.accuracy,
                        m.weighted_precision,
                        m.weighted_recall,
                        m.weighted_f1,
                    ]
                }),
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(MetricsReport::csv_header().split(','))
            .expect("in-memory write");
        for rec in self.records() {
            let mut fields = vec![
                rec.features.to_string(),
                rec.classifier.as_str().to_string(),
            ];
            match rec.scores {
                Some(s) => fields.extend(s.iter().map(f64::to_string)),
                None => fields.extend(std::iter::repeat_n(String::new(), 4)),
            }
            w.write_record(&fields).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv")
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let header = [
            "Features",
            "Classifier",
            "Accuracy",
            "Precision",
            "Recall",
            "F-score",
            "Train s",
            "Eval s",
        ];
        let mut lines = vec![header.map(String::from).to_vec()];
        let mut failures = Vec::new();
        for r in self.classical() {
            let mut line = vec![
                r.features.to_string(),
                r.classifier.display_name().to_string(),
            ];
            match &r.outcome {
                Ok(m) => line.extend(m.table_row()),
                Err(e) => {
                    line.extend(std::iter::repeat_n("failed".to_string(), 4));
                    failures.push(format!(
                        "{} @ {}: {e}",
                        r.classifier.display_name(),
                        r.features
                    ));
                }
            }
            line.push(format!("{:.2}", r.train_seconds));
            line.push(format!("{:.2}", r.eval_seconds));
            lines.push(line);
        }
        out.push_str("Classical classifiers on TF-IDF features\n\n");
        out.push_str(&align(&lines));
        if let Some(r) = self.cnn() {
            let mut lines = vec![[
                "Classifier",
                "Vocabulary",
                "Accuracy",
                "Precision",
                "Recall",
                "F-score",
                "Minutes",
            ]
            .map(String::from)
            .to_vec()];
            let mut line = vec![
                r.classifier.display_name().to_string(),
                r.features.to_string(),
            ];
            match &r.outcome {
                Ok(m) => line.extend(m.table_row()),
                Err(e) => {
                    line.extend(std::iter::repeat_n("failed".to_string(), 4));
                    failures.push(format!("CNN: {e}"));
                }
            }
            line.push(format!("{:.2}", r.train_seconds / 60.0));
            lines.push(line);
            out.push_str("\nConvolutional network on token sequences\n\n");
            out.push_str(&align(&lines));
        }
        if !failures.is_empty() {
            out.push_str("\nFailed cells\n");
            for f in failures {
                let _ = writeln!(out, "  {f}");
            }
        }
        out
    }

    /// Writes `results.csv`, `results.txt` and, when the CNN ran, `cnn_history.csv`.
    pub fn write(&self, out_dir: impl AsRef<Path>) -> Result<()> {
        let dir = out_dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let put = |name: &str, body: String| {
            let p = dir.join(name);
            fs::write(&p, body).map_err(|e| Error::io(&p, e))
        };
        put("results.csv", self.to_csv())?;
        put("results.txt", self.to_table())?;
        if let Some(h) = &self.cnn_history {
            put("cnn_history.csv", h.to_csv())?;
        }
        Ok(())
    }
}

fn align(lines: &[Vec<String>]) -> String {
    let cols = lines.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            lines
                .iter()
                .filter_map(|l| l.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for line in lines {
        let cells: Vec<String> = line
            .iter()
            .enumerate()
            .map(|(c, s)| {
                if c < 2 {
                    format!("{s:<w$}", w = widths[c])
                } else {
                    format!("{s:>w$}", w = widths[c])
                }
            })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

pub fn parse_results_csv(text: &str) -> Result<Vec<CsvRecord>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(String::from)
        .collect();
    if header.join(",") != MetricsReport::csv_header() {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected header {}", header.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i as u64 + 2;
        let bad = |message: String| Error::Parse { line, message };
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let features = rec[0]
            .parse()
            .map_err(|_| bad(format!("bad feature count {:?}", &rec[0])))?;
        let classifier = rec[1].parse().map_err(|e: Error| bad(e.to_string()))?;
        let scores = if rec.iter().skip(2).all(str::is_empty) {
            None
        } else {
            let mut s = [0.0; 4];
            for (k, slot) in s.iter_mut().enumerate() {
                *slot = rec[k + 2]
                    .parse()
                    .map_err(|_| bad(format!("bad number {:?}", &rec[k + 2])))?;
            }
            Some(s)
        };
        out.push(CsvRecord {
            features,
            classifier,
            scores,
        });
    }
    Ok(out)
}

/// Class-proportional subsample of at most `cap` indices, returned in ascending order.
pub fn stratified_subsample(labels: &[Label], cap: usize, seed: u64) -> Vec<usize> {
    if labels.len() <= cap {
        return (0..labels.len()).collect();
    }
    let mut by_class: [Vec<usize>; NUM_CLASSES] = Default::default();
    for (i, l) in labels.iter().enumerate() {
        by_class[l.code()].push(i);
    }
    let take = corpus::proportional_counts(cap, by_class.each_ref().map(Vec::len));
    let mut out = Vec::with_capacity(cap);
    for (c, mut members) in by_class.into_iter().enumerate() {
        members.shuffle(&mut rng::seeded(rng::derive(seed, c as u64)));
        out.extend_from_slice(&members[..take[c]]);
    }
    out.sort_unstable();
    out
}

struct PreparedFeatures {
    features: usize,
    vectorizer: TfidfModel,
    x_train: Vec<SparseVector>,
    x_test: Vec<SparseVector>,
}

fn run_cell(
    prepared: &PreparedFeatures,
    kind: ModelKind,
    y_train: &[Label],
    y_test: &[Label],
    params: &ClassifierParams,
    seed: u64,
) -> (GridRow, Option<ModelBundle>) {
    let params = params.with_seed(seed);
    let started = Instant::now();
    let trained = if kind == ModelKind::RbfSvm {
        let keep = stratified_subsample(y_train, params.svm_rbf.sample_cap, seed);
        let x: Vec<SparseVector> = keep.iter().map(|&i| prepared.x_train[i].clone()).collect();
        let y: Vec<Label> = keep.iter().map(|&i| y_train[i]).collect();
        model::train_classifier(kind, &x, &y, prepared.vectorizer.dim(), &params)
    } else {
        model::train_classifier(
            kind,
            &prepared.x_train,
            y_train,
            prepared.vectorizer.dim(),
            &params,
        )
    };
    let train_seconds = started.elapsed().as_secs_f64();
    let started = Instant::now();
    let outcome = trained.and_then(|clf| {
        let pred = clf.predict_vectors(&prepared.x_test)?;
        Ok((evaluate(y_test, &pred)?, clf))
    });
    let eval_seconds = started.elapsed().as_secs_f64();
    let (outcome, bundle) = match outcome {
        Ok((report, clf)) => (
            Ok(report),
            Some(ModelBundle {
                vectorizer: prepared.vectorizer.clone(),
                classifier: clf,
            }),
        ),
        Err(e) => (Err(e.to_string()), None),
    };
    let row = GridRow {
        features: prepared.features,
        classifier: kind,
        outcome,
        train_seconds,
        eval_seconds,
    };
    (row, bundle)
}

fn run_cnn(
    config: &ExperimentConfig,
    train: &[TokenizedDocument],
    test: &[TokenizedDocument],
    seed: u64,
) -> (GridRow, Option<TrainHistory>, Option<ModelBundle>) {
    let params = config.params.with_seed(seed);
    let started = Instant::now();
    let result = (|| -> Result<(MetricsReport, TrainHistory, ModelBundle, f64)> {
        let vectorizer = TfidfModel::fit(
            train,
            config.vectorizer.with_max_features(config.cnn_features),
        )?;
        let labels: Vec<Label> = train.iter().map(|d| d.label).collect();
        let batch = vectorizer.encode_sequences(train, params.cnn.max_len)?;
        let (cnn, history) = neural::train_cnn(&batch, &labels, &params.cnn, &params.cnn_train)?;
        let train_seconds = started.elapsed().as_secs_f64();
        let test_batch = vectorizer.encode_sequences(test, params.cnn.max_len)?;
        let y_test: Vec<Label> = test.iter().map(|d| d.label).collect();
        let report = evaluate(&y_test, &cnn.predict(&test_batch)?)?;
        let bundle = ModelBundle {
            vectorizer,
            classifier: TrainedClassifier::Cnn(cnn),
        };
        Ok((report, history, bundle, train_seconds))
    })();
    let total = started.elapsed().as_secs_f64();
    match result {
        Ok((report, history, bundle, train_seconds)) => (
            GridRow {
                features: config.cnn_features,
                classifier: ModelKind::Cnn,
                outcome: Ok(report),
                train_seconds,
                eval_seconds: total - train_seconds,
            },
            Some(history),
            Some(bundle),
        ),
        Err(e) => (
            GridRow {
                features: config.cnn_features,
                classifier: ModelKind::Cnn,
                outcome: Err(e.to_string()),
                train_seconds: total,
                eval_seconds: 0.0,
            },
            None,
            None,
        ),
    }
}

/// Runs the grid on already-split documents. Vectorizers see only `train`.
pub fn run_grid_on(
    config: &ExperimentConfig,
    train: &[TokenizedDocument],
    test: &[TokenizedDocument],
) -> Result<(GridResult, Vec<ModelBundle>)> {
    config.validate()?;
    if train.is_empty() || test.is_empty() {
        return Err(Error::Config(
            "train and test splits must be non-empty".into(),
        ));
    }
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = config.threads {
            b = b.num_threads(n);
        }
        b.build().map_err(|e| Error::Config(e.to_string()))?
    };
    let y_train: Vec<Label> = train.iter().map(|d| d.label).collect();
    let y_test: Vec<Label> = test.iter().map(|d| d.label).collect();

    pool.install(|| {
        let prepared: Vec<PreparedFeatures> = config
            .feature_counts
            .par_iter()
            .map(|&features| -> Result<PreparedFeatures> {
                let vectorizer =
                    TfidfModel::fit(train, config.vectorizer.with_max_features(features))?;
                let x_train = vectorizer.transform_all(train);
                let x_test = vectorizer.transform_all(test);
                Ok(PreparedFeatures {
                    features,
                    vectorizer,
                    x_train,
                    x_test,
                })
            })
            .collect::<Result<_>>()?;

        let cells: Vec<(usize, &PreparedFeatures, ModelKind)> = prepared
            .iter()
            .flat_map(|p| config.classifiers.iter().map(move |&k| (p, k)))
            .enumerate()
            .map(|(i, (p, k))| (i, p, k))
            .collect();
        let n_cells = cells.len();
        let outcomes: Vec<(GridRow, Option<ModelBundle>)> = cells
            .into_par_iter()
            .map(|(i, p, k)| {
                run_cell(
                    p,
                    k,
                    &y_train,
                    &y_test,
                    &config.params,
                    rng::derive(config.seed, i as u64),
                )
            })
            .collect();

        let mut result = GridResult::default();
        let mut bundles = Vec::new();
        for (row, bundle) in outcomes {
            result.rows.push(row);
            bundles.extend(bundle);
        }
        if config.run_cnn {
            let (row, history, bundle) = run_cnn(
                config,
                train,
                test,
                rng::derive(config.seed, n_cells as u64),
            );
            result.rows.push(row);
            result.cnn_history = history;
            bundles.extend(bundle);
        }
        Ok((result, bundles))
    })
}

/// Loads the configured corpus, splits it when needed, and runs the grid.
pub fn load_split(
    config: &ExperimentConfig,
) -> Result<(Vec<LabeledDocument>, Vec<LabeledDocument>)> {
    match (&config.corpus, &config.train, &config.test) {
        (Some(path), None, None) => {
            let docs = corpus::load_corpus(path, CorpusFormat::from_path(path))?;
            let split = corpus::stratified_split(&docs, config.train_fraction, config.seed)?;
            Ok((split.train, split.test))
        }
        (None, Some(train), Some(test)) => Ok((
            corpus::load_corpus(train, CorpusFormat::from_path(train))?,
            corpus::load_corpus(test, CorpusFormat::from_path(test))?,
        )),
        _ => Err(Error::Config(
            "set either `corpus`, or both `train` and `test`".into(),
        )),
    }
}

pub fn run_grid(config: &ExperimentConfig) -> Result<GridResult> {
    let (train, test) = load_split(config)?;
    let (result, bundles) = run_grid_on(
        config,
        &textprep::prepare(&train),
        &textprep::prepare(&test),
    )?;
    result.write(&config.out_dir)?;
    if config.save_models {
        let dir = config.out_dir.join("models");
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for b in &bundles {
            b.save(dir.join(format!(
                "{}-{}.json",
                b.kind(),
                b.vectorizer.config().max_features
            )))?;
        }
    }
    Ok(result)
}

/// Percent strings for a report, in table column order.
pub fn percent_row(report: &MetricsReport) -> String {
    [
        report.accuracy,
        report.weighted_precision,
        report.weighted_recall,
        report.weighted_f1,
    ]
    .map(format_percent)
    .join("  ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_counts_must_increase() {
        let mut c = ExperimentConfig {
            feature_counts: vec![20, 10],
            ..Default::default()
        };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        c.feature_counts = vec![10, 10];
        assert!(c.validate().is_err());
        c.feature_counts = vec![0, 10];
        assert!(c.validate().is_err());
        c.feature_counts = vec![10, 20];
        assert!(c.validate().is_ok());
    }

    #[test]
    fn config_fields_default() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"feature_counts": [100]}"#).unwrap();
        assert_eq!(c.train_fraction, 0.7);
        assert_eq!(c.classifiers.len(), 6);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"featurecounts": [1]}"#).is_err());
    }

    #[test]
    fn subsample_keeps_proportions() {
        let labels: Vec<Label> = (0..100)
            .map(|i| {
                if i < 50 {
                    Label::Positive
                } else if i < 90 {
                    Label::Negative
                } else {
                    Label::Neutral
                }
            })
            .collect();
        let keep = stratified_subsample(&labels, 10, 3);
        assert_eq!(keep.len(), 10);
        let counts = [0, 1, 2].map(|c| keep.iter().filter(|&&i| labels[i].code() == c).count());
        assert_eq!(counts, [5, 4, 1]);
        assert!(keep.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(stratified_subsample(&labels, 200, 3).len(), 100);
    }

    #[test]
    fn csv_parse_rejects_wrong_header() {
        assert!(parse_results_csv("a,b\n").is_err());
        let rows = parse_results_csv(
            "features,classifier,accuracy,precision,recall,f_score\n10,dtree,,,,\n",
        )
        .unwrap();
        assert_eq!(rows[0].scores, None);
    }
}
