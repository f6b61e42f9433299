//! Multinomial logistic regression on TF-IDF features of a synthetic corpus.

use emoforge::corpus::{generate_synthetic_corpus, stratified_split, SyntheticSpec};
use emoforge::linear::{train_logistic_traced, TrainConfig};
use emoforge::metrics::evaluate;
use emoforge::textprep::prepare;
use emoforge::vectorizer::{TfidfModel, VectorizerConfig};
use emoforge::Label;

fn main() -> emoforge::Result<()> {
    let mut spec = SyntheticSpec::separable([600, 500, 150]);
    spec.overlap = 0.6;
    let docs = generate_synthetic_corpus(&spec, 1)?;
    let split = stratified_split(&docs, 0.7, 1)?;
    let (train, test) = (prepare(&split.train), prepare(&split.test));

    let vectorizer = TfidfModel::fit(&train, VectorizerConfig::default().with_max_features(500))?;
    let x_train = vectorizer.transform_all(&train);
    let y_train: Vec<Label> = train.iter().map(|d| d.label).collect();

    let (model, objective) = train_logistic_traced(
        &x_train,
        &y_train,
        vectorizer.dim(),
        &TrainConfig::logistic(),
    )?;
    println!("epochs run: {}", objective.len() - 1);
    for (epoch, value) in objective.iter().enumerate().step_by(50) {
        println!("  epoch {epoch:>3}  objective {value:.5}");
    }

    let x_test = vectorizer.transform_all(&test);
    let y_test: Vec<Label> = test.iter().map(|d| d.label).collect();
    let report = evaluate(&y_test, &model.predict(&x_test)?)?;
    println!(
        "test accuracy/precision/recall/f-score: {}",
        report.table_row().join(" / ")
    );

    let probe = prepare(&[emoforge::LabeledDocument {
        id: 0,
        text: "so happy and grateful".into(),
        label: Label::Positive,
    }]);
    let p = model.predict_proba(&vectorizer.transform_all(&probe))?[0];
    println!("P(positive, negative, neutral | \"so happy and grateful\") = {p:.3?}");
    Ok(())
}
