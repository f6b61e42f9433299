//! One-vs-rest linear SVM against an RBF-kernel SVM trained by SMO.

use std::time::Instant;

use emoforge::corpus::{generate_synthetic_corpus, stratified_split, SyntheticSpec};
use emoforge::linear::{train_linear_svm, train_rbf_svm, RbfConfig, TrainConfig};
use emoforge::metrics::evaluate;
use emoforge::textprep::prepare;
use emoforge::vectorizer::{TfidfModel, VectorizerConfig};
use emoforge::Label;

fn main() -> emoforge::Result<()> {
    let mut spec = SyntheticSpec::separable([400, 350, 100]);
    spec.overlap = 0.7;
    let docs = generate_synthetic_corpus(&spec, 2)?;
    let split = stratified_split(&docs, 0.7, 2)?;
    let (train, test) = (prepare(&split.train), prepare(&split.test));
    let vectorizer = TfidfModel::fit(&train, VectorizerConfig::default().with_max_features(300))?;
    let (x_train, x_test) = (
        vectorizer.transform_all(&train),
        vectorizer.transform_all(&test),
    );
    let y_train: Vec<Label> = train.iter().map(|d| d.label).collect();
    let y_test: Vec<Label> = test.iter().map(|d| d.label).collect();

    let started = Instant::now();
    let linear = train_linear_svm(
        &x_train,
        &y_train,
        vectorizer.dim(),
        &TrainConfig::linear_svm(),
    )?;
    let report = evaluate(&y_test, &linear.predict(&x_test)?)?;
    println!(
        "linear SVM  {:>6.2}s  {}",
        started.elapsed().as_secs_f64(),
        report.table_row().join("  ")
    );

    let started = Instant::now();
    let config = RbfConfig {
        c_reg: 10.0,
        ..Default::default()
    };
    let rbf = train_rbf_svm(&x_train, &y_train, vectorizer.dim(), &config)?;
    let report = evaluate(&y_test, &rbf.predict(&x_test)?)?;
    println!(
        "RBF SVM     {:>6.2}s  {}",
        started.elapsed().as_secs_f64(),
        report.table_row().join("  ")
    );
    println!(
        "RBF support vectors: {} of {} (gamma {:.4})",
        rbf.support_vectors.len(),
        x_train.len(),
        rbf.gamma
    );
    Ok(())
}
