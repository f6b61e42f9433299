//! CART decision tree, random forest and SAMME AdaBoost on the same features.

use std::time::Instant;

use emoforge::corpus::{generate_synthetic_corpus, stratified_split, SyntheticSpec};
use emoforge::metrics::evaluate;
use emoforge::textprep::prepare;
use emoforge::tree::{
    train_adaboost, train_decision_tree, train_random_forest, BoostConfig, ForestConfig, TreeConfig,
};
use emoforge::vectorizer::{TfidfModel, VectorizerConfig};
use emoforge::Label;

fn main() -> emoforge::Result<()> {
    let mut spec = SyntheticSpec::separable([700, 600, 200]);
    spec.overlap = 0.6;
    let docs = generate_synthetic_corpus(&spec, 3)?;
    let split = stratified_split(&docs, 0.7, 3)?;
    let (train, test) = (prepare(&split.train), prepare(&split.test));
    let vectorizer = TfidfModel::fit(&train, VectorizerConfig::default().with_max_features(400))?;
    let (x, x_test) = (
        vectorizer.transform_all(&train),
        vectorizer.transform_all(&test),
    );
    let y: Vec<Label> = train.iter().map(|d| d.label).collect();
    let y_test: Vec<Label> = test.iter().map(|d| d.label).collect();
    let nf = vectorizer.dim();

    let t = Instant::now();
    let tree = train_decision_tree(&x, &y, nf, &TreeConfig::default())?;
    let r = evaluate(&y_test, &tree.predict(&x_test)?)?;
    println!(
        "decision tree  depth {:>3}  nodes {:>5}  {:.2}s  {}",
        tree.depth(),
        tree.nodes.len(),
        t.elapsed().as_secs_f64(),
        r.table_row().join(" ")
    );

    let t = Instant::now();
    let forest = train_random_forest(
        &x,
        &y,
        nf,
        &ForestConfig {
            seed: 3,
            ..Default::default()
        },
    )?;
    let r = evaluate(&y_test, &forest.predict(&x_test)?)?;
    println!(
        "random forest  trees {:>3}              {:.2}s  {}",
        forest.n_trees(),
        t.elapsed().as_secs_f64(),
        r.table_row().join(" ")
    );

    let t = Instant::now();
    let boost = train_adaboost(&x, &y, nf, &BoostConfig::default())?;
    let r = evaluate(&y_test, &boost.predict(&x_test)?)?;
    println!(
        "adaboost       stages {:>3}             {:.2}s  {}",
        boost.stages.len(),
        t.elapsed().as_secs_f64(),
        r.table_row().join(" ")
    );
    for (i, stage) in boost.stages.iter().take(5).enumerate() {
        println!("  stage {i}: alpha {:.4}", stage.alpha);
    }
    Ok(())
}
