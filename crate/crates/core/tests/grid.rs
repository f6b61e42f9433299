mod common;

use emoforge::corpus::{generate_synthetic_corpus, stratified_split, SyntheticSpec};
use emoforge::model::{ClassifierParams, ModelKind};
use emoforge::neural::{CnnConfig, CnnTrainConfig};
use emoforge::runner::{parse_results_csv, run_grid, run_grid_on, ExperimentConfig};
use emoforge::textprep::{self, TokenizedDocument};
use emoforge::vectorizer::{TfidfModel, VectorizerConfig};
use emoforge::Label;

fn split_docs(seed: u64) -> (Vec<TokenizedDocument>, Vec<TokenizedDocument>) {
    let docs = generate_synthetic_corpus(&SyntheticSpec::separable([150, 120, 60]), seed).unwrap();
    let split = stratified_split(&docs, 0.7, seed).unwrap();
    (
        textprep::prepare(&split.train),
        textprep::prepare(&split.test),
    )
}

fn quick_params() -> ClassifierParams {
    let mut p = ClassifierParams::default();
    p.rforest.n_trees = 10;
    p.cnn = CnnConfig {
        embedding_dim: 8,
        filters: 8,
        max_len: 16,
        ..p.cnn
    };
    p.cnn_train = CnnTrainConfig {
        epochs: 2,
        ..p.cnn_train
    };
    p
}

fn small_config() -> ExperimentConfig {
    ExperimentConfig {
        feature_counts: vec![20, 40],
        classifiers: vec![ModelKind::Logistic, ModelKind::RandomForest],
        run_cnn: true,
        cnn_features: 40,
        params: quick_params(),
        seed: 13,
        ..Default::default()
    }
}

#[test]
fn grid_has_one_row_per_cell_plus_cnn() {
    let (train, test) = split_docs(1);
    let (result, bundles) = run_grid_on(&small_config(), &train, &test).unwrap();
    let cells: Vec<(usize, ModelKind)> = result
        .rows
        .iter()
        .map(|r| (r.features, r.classifier))
        .collect();
    assert_eq!(
        cells,
        [
            (20, ModelKind::Logistic),
            (20, ModelKind::RandomForest),
            (40, ModelKind::Logistic),
            (40, ModelKind::RandomForest),
            (40, ModelKind::Cnn),
        ]
    );
    assert_eq!(bundles.len(), 5);
    assert!(!result.any_failed());
    assert_eq!(result.cnn_history.as_ref().unwrap().epochs.len(), 2);
    let table = result.to_table();
    assert!(table.contains("Logistic Regression") && table.contains("Minutes"));
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let (train, test) = split_docs(2);
    let one = ExperimentConfig {
        threads: Some(1),
        ..small_config()
    };
    let four = ExperimentConfig {
        threads: Some(4),
        ..small_config()
    };
    let (a, _) = run_grid_on(&one, &train, &test).unwrap();
    let (b, _) = run_grid_on(&four, &train, &test).unwrap();
    assert_eq!(a.records(), b.records());
    assert_eq!(
        a.cnn_history.unwrap().trajectory(),
        b.cnn_history.unwrap().trajectory()
    );
}

#[test]
fn csv_reparses_to_the_same_records() {
    let (train, test) = split_docs(3);
    let (result, _) = run_grid_on(&small_config(), &train, &test).unwrap();
    let csv = result.to_csv();
    assert!(csv.starts_with("features,classifier,accuracy,precision,recall,f_score\n"));
    assert_eq!(parse_results_csv(&csv).unwrap(), result.records());
}

#[test]
fn failing_cell_does_not_stop_the_grid() {
    let (train, test) = split_docs(4);
    let mut config = small_config();
    config.run_cnn = false;
    config.classifiers = vec![ModelKind::RbfSvm, ModelKind::Logistic];
    config.params.svm_rbf.c_reg = -1.0;
    let (result, _) = run_grid_on(&config, &train, &test).unwrap();
    assert!(result.any_failed());
    for row in &result.rows {
        assert_eq!(row.outcome.is_err(), row.classifier == ModelKind::RbfSvm);
    }
    let records = parse_results_csv(&result.to_csv()).unwrap();
    assert_eq!(records, result.records());
    assert!(result.to_table().contains("Failed cells"));
}

#[test]
fn vectorizer_never_sees_test_only_terms() {
    let (train, mut test) = split_docs(5);
    test.push(TokenizedDocument::from_words(
        99_999,
        &["xylophone", "happy"],
        Label::Positive,
    ));
    let config = ExperimentConfig {
        run_cnn: false,
        ..small_config()
    };
    let (_, bundles) = run_grid_on(&config, &train, &test).unwrap();
    for b in &bundles {
        assert!(b.vectorizer.vocabulary().index_of("xylophone").is_none());
        assert_eq!(b.vectorizer.vocabulary().n_docs(), train.len());
    }
    let direct =
        TfidfModel::fit(&train, VectorizerConfig::default().with_max_features(40)).unwrap();
    assert_eq!(bundles.last().unwrap().vectorizer, direct);
}

#[test]
fn rbf_trains_on_a_capped_subsample() {
    let (train, test) = split_docs(6);
    let mut config = small_config();
    config.run_cnn = false;
    config.classifiers = vec![ModelKind::RbfSvm];
    config.feature_counts = vec![40];
    config.params.svm_rbf.sample_cap = 50;
    let (result, bundles) = run_grid_on(&config, &train, &test).unwrap();
    assert!(!result.any_failed());
    match &bundles[0].classifier {
        emoforge::TrainedClassifier::RbfSvm(m) => assert!(m.support_vectors.len() <= 50),
        other => panic!("{other:?}"),
    }
}

#[test]
fn run_grid_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let docs = generate_synthetic_corpus(&SyntheticSpec::separable([90, 90, 30]), 7).unwrap();
    let corpus_path = dir.path().join("corpus.csv");
    emoforge::corpus::save_corpus(&corpus_path, &docs, emoforge::corpus::CorpusFormat::Csv)
        .unwrap();
    let config = ExperimentConfig {
        corpus: Some(corpus_path),
        out_dir: dir.path().join("out"),
        save_models: true,
        ..small_config()
    };
    let result = run_grid(&config).unwrap();
    for f in ["results.csv", "results.txt", "cnn_history.csv"] {
        assert!(config.out_dir.join(f).is_file(), "{f}");
    }
    let csv = std::fs::read_to_string(config.out_dir.join("results.csv")).unwrap();
    assert_eq!(parse_results_csv(&csv).unwrap(), result.records());
    assert_eq!(
        std::fs::read_dir(config.out_dir.join("models"))
            .unwrap()
            .count(),
        5
    );
}
