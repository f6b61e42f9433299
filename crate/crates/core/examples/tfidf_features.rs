//! Normalize and tokenize a few tweets, fit TF-IDF, and look at the vectors and sequence codes.

use emoforge::corpus::{Label, LabeledDocument};
use emoforge::textprep::{normalize, prepare};
use emoforge::vectorizer::{TfidfModel, VectorizerConfig};

fn main() -> emoforge::Result<()> {
    let raw = [
        (
            "So happy today!!! @friend http://t.co/xyz #blessed",
            Label::Positive,
        ),
        ("worst monday ever, so sad", Label::Negative),
        ("Meeting moved to 3pm #agenda", Label::Neutral),
        ("happy happy joy", Label::Positive),
    ];
    let docs: Vec<LabeledDocument> = raw
        .iter()
        .enumerate()
        .map(|(i, (text, label))| LabeledDocument {
            id: i as u64,
            text: text.to_string(),
            label: *label,
        })
        .collect();
    for d in &docs {
        println!("{:<52} -> {}", d.text, normalize(&d.text));
    }

    let tokenized = prepare(&docs);
    let model = TfidfModel::fit(&tokenized, VectorizerConfig::default().with_max_features(8))?;
    println!("\nvocabulary (top {} by document frequency):", model.dim());
    for i in 0..model.dim() {
        let v = model.vocabulary();
        println!(
            "  {:>2} {:<10} df={} idf={:.4}",
            i,
            v.term(i),
            v.doc_frequency(i),
            model.idf()[i]
        );
    }

    println!("\ntf-idf rows:");
    for d in &tokenized {
        let row: Vec<String> = model
            .transform(d)
            .iter()
            .map(|(i, w)| format!("{}={w:.3}", model.vocabulary().term(i)))
            .collect();
        println!("  {}: {}", d.id, row.join(" "));
    }

    let batch = model.encode_sequences(&tokenized, 6)?;
    println!("\nsequence codes (0 pad, 1 unknown):");
    for row in batch.rows() {
        println!("  {row:?}");
    }
    Ok(())
}
