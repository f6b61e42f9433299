//! Train a model bundle, save it, load it back and label free text.

use emoforge::corpus::{generate_synthetic_corpus, SyntheticSpec};
use emoforge::model::{load_model, save_model, train_bundle, ClassifierParams, ModelKind};
use emoforge::textprep::prepare;
use emoforge::vectorizer::VectorizerConfig;

fn main() -> emoforge::Result<()> {
    let docs = prepare(&generate_synthetic_corpus(
        &SyntheticSpec::separable([300, 300, 300]),
        9,
    )?);
    let (bundle, _) = train_bundle(
        ModelKind::LinearSvm,
        &docs,
        VectorizerConfig::default().with_max_features(200),
        &ClassifierParams::default().with_seed(9),
    )?;
    let path = std::env::temp_dir().join("emoforge-svm.json");
    save_model(&bundle, &path)?;
    let loaded = load_model(&path)?;
    println!(
        "saved and reloaded {} ({} bytes)",
        loaded.kind(),
        std::fs::metadata(&path).map_or(0, |m| m.len())
    );

    let texts = [
        "i am so happy today",
        "this traffic is terrible and i hate it",
        "the meeting agenda is in the email",
    ];
    for (text, label) in texts.iter().zip(loaded.predict_texts(&texts)?) {
        println!("{label:<9} {text}");
    }
    assert_eq!(loaded.predict_texts(&texts)?, bundle.predict_texts(&texts)?);
    Ok(())
}
