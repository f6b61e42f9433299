//! Embedding + 1-D convolution classifier: gradient check, then training with per-epoch history.
//!
//! cargo run --release --example cnn_text

use emoforge::corpus::{generate_synthetic_corpus, stratified_split, SyntheticSpec};
use emoforge::metrics::evaluate;
use emoforge::neural::{fit_cnn, gradient_check_report, init_cnn, CnnConfig, CnnTrainConfig};
use emoforge::textprep::prepare;
use emoforge::vectorizer::{TfidfModel, VectorizerConfig};
use emoforge::Label;

fn main() -> emoforge::Result<()> {
    let docs = generate_synthetic_corpus(&SyntheticSpec::separable([500, 450, 120]), 4)?;
    let split = stratified_split(&docs, 0.7, 4)?;
    let (train, test) = (prepare(&split.train), prepare(&split.test));
    let vectorizer = TfidfModel::fit(&train, VectorizerConfig::default())?;
    let config = CnnConfig {
        max_len: 16,
        seed: 4,
        ..Default::default()
    };
    let batch = vectorizer.encode_sequences(&train, config.max_len)?;
    let test_batch = vectorizer.encode_sequences(&test, config.max_len)?;
    let labels: Vec<Label> = train.iter().map(|d| d.label).collect();
    let test_labels: Vec<Label> = test.iter().map(|d| d.label).collect();

    let mut model = init_cnn(vectorizer.dim(), config)?;
    println!("parameters: {}", model.parameter_count());

    let probe = batch.select(&[0, 1, 2, 3]);
    let check = gradient_check_report(&model, &probe, &labels[..4])?;
    println!(
        "gradient check: max relative error {:.2e} over {} parameters ({} skipped at kinks)",
        check.max_relative_error, check.checked, check.skipped
    );

    let train_config = CnnTrainConfig {
        epochs: 15,
        batch_size: 16,
        learning_rate: 0.3,
        seed: 4,
    };
    let history = fit_cnn(
        &mut model,
        &batch,
        &labels,
        Some((&test_batch, &test_labels)),
        &train_config,
    )?;
    print!("{}", history.to_csv());
    let report = evaluate(&test_labels, &model.predict(&test_batch)?)?;
    println!("test: {}", report.table_row().join(" / "));
    Ok(())
}
