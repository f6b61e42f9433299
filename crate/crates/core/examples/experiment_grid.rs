//! Feature-count x classifier sweep plus the CNN, printed as tables and written as CSV.
//!
//! cargo run --release --example experiment_grid -- [out_dir]

use emoforge::corpus::{
    generate_synthetic_corpus, reference_proportions, stratified_split, SyntheticSpec,
};
use emoforge::model::ModelKind;
use emoforge::neural::{CnnConfig, CnnTrainConfig};
use emoforge::runner::{run_grid_on, ExperimentConfig};
use emoforge::textprep::prepare;

fn main() -> emoforge::Result<()> {
    let out_dir = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("emoforge-grid"), Into::into);
    let mut spec = SyntheticSpec::separable(reference_proportions(4000));
    spec.overlap = 0.8;
    let docs = generate_synthetic_corpus(&spec, 6)?;
    let split = stratified_split(&docs, 0.7, 6)?;

    let mut config = ExperimentConfig {
        feature_counts: vec![10, 20, 40],
        classifiers: ModelKind::CLASSICAL.to_vec(),
        cnn_features: 40,
        seed: 6,
        out_dir,
        ..Default::default()
    };
    config.params.svm_rbf.sample_cap = 1500;
    config.params.cnn = CnnConfig {
        max_len: 16,
        ..config.params.cnn
    };
    config.params.cnn_train = CnnTrainConfig {
        epochs: 8,
        batch_size: 16,
        learning_rate: 0.3,
        ..config.params.cnn_train
    };

    let (result, _) = run_grid_on(&config, &prepare(&split.train), &prepare(&split.test))?;
    print!("{}", result.to_table());
    result.write(&config.out_dir)?;
    println!("\nwrote {}", config.out_dir.display());
    Ok(())
}
