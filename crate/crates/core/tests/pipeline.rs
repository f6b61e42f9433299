mod common;

use emoforge::corpus::{generate_synthetic_corpus, stratified_split, SyntheticSpec};
use emoforge::model::{ClassifierParams, ModelKind};
use emoforge::neural::{init_cnn, train_cnn};
use emoforge::runner::{run_grid_on, ExperimentConfig};
use emoforge::textprep;

#[test]
fn cnn_overfits_small_disjoint_fixture() {
    let (batch, labels) = common::overfit_fixture();
    let initial = init_cnn(batch.vocab_size(), common::OVERFIT_CNN)
        .unwrap()
        .loss(&batch, &labels)
        .unwrap();
    assert!((initial - 3f64.ln()).abs() < 0.01, "initial loss {initial}");

    let (model, history) = train_cnn(
        &batch,
        &labels,
        &common::OVERFIT_CNN,
        &common::OVERFIT_TRAIN,
    )
    .unwrap();
    assert_eq!(history.epochs.len(), 200);
    let after_50 = history.epochs[49].loss;
    eprintln!(
        "initial {initial:.4}  epoch50 {after_50:.4}  final {:.6}",
        history.epochs[199].loss
    );
    assert!(after_50 <= 0.5 * initial);
    let pred = model.predict(&batch).unwrap();
    assert_eq!(pred, labels);
}

#[test]
fn separable_grid_reaches_high_accuracy() {
    let docs = generate_synthetic_corpus(&SyntheticSpec::separable([1000, 1000, 1000]), 3).unwrap();
    let split = stratified_split(&docs, 0.7, 3).unwrap();
    let config = ExperimentConfig {
        feature_counts: vec![1000],
        classifiers: vec![
            ModelKind::Logistic,
            ModelKind::LinearSvm,
            ModelKind::DecisionTree,
        ],
        run_cnn: false,
        params: ClassifierParams::default(),
        ..Default::default()
    };
    let (result, _) = run_grid_on(
        &config,
        &textprep::prepare(&split.train),
        &textprep::prepare(&split.test),
    )
    .unwrap();
    for row in &result.rows {
        let m = row.outcome.as_ref().unwrap();
        eprintln!(
            "{} {} {:.4} {:.2}s",
            row.classifier, row.features, m.accuracy, row.train_seconds
        );
        assert!(m.accuracy >= 0.99, "{}: {}", row.classifier, m.accuracy);
    }
}
