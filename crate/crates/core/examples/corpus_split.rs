//! Generate a labeled corpus in the reference class mix and split it 70/30.
//!
//! cargo run --example corpus_split -- [n_docs] [seed]

use emoforge::corpus::{
    class_distribution, generate_synthetic_corpus, reference_proportions, stratified_split,
    SyntheticSpec,
};

fn main() -> emoforge::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(13_160, |s| s.parse().expect("n_docs"));
    let seed: u64 = args.next().map_or(7, |s| s.parse().expect("seed"));

    let docs =
        generate_synthetic_corpus(&SyntheticSpec::separable(reference_proportions(n)), seed)?;
    println!("corpus\n{}", class_distribution(&docs).to_json());
    for d in docs.iter().take(3) {
        println!("  #{:<5} {:<8} {}", d.id, d.label, d.text);
    }

    let split = stratified_split(&docs, 0.7, seed)?;
    println!("train\n{}", class_distribution(&split.train).to_json());
    println!("test\n{}", class_distribution(&split.test).to_json());
    Ok(())
}
