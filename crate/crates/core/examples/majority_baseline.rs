//! A constant "positive" predictor scored on a test set with the reference class mix.

use emoforge::corpus::{allocate_train_counts, Label, REFERENCE_CLASS_COUNTS};
use emoforge::metrics::evaluate;

fn main() -> emoforge::Result<()> {
    let train = allocate_train_counts(REFERENCE_CLASS_COUNTS, 0.7);
    let test: Vec<usize> = (0..3)
        .map(|c| REFERENCE_CLASS_COUNTS[c] - train[c])
        .collect();
    println!("train counts {train:?}, test counts {test:?}");

    let mut truth = Vec::new();
    for (c, &n) in test.iter().enumerate() {
        truth.extend(std::iter::repeat_n(Label::ALL[c], n));
    }
    let report = evaluate(&truth, &vec![Label::Positive; truth.len()])?;
    println!("accuracy precision recall f-score");
    println!("{}", report.table_row().join("     "));
    for (label, s) in Label::ALL.iter().zip(&report.per_class) {
        println!(
            "  {label:<9} precision {:.4} recall {:.4} f1 {:.4} support {}",
            s.precision, s.recall, s.f1, s.support
        );
    }
    Ok(())
}
