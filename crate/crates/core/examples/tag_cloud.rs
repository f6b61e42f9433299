//! Word-frequency cloud for each label, printed as text and written as HTML.
//!
//! cargo run --example tag_cloud -- [out_dir]

use std::path::PathBuf;

use emoforge::corpus::{generate_synthetic_corpus, SyntheticSpec};
use emoforge::tagcloud::{build_cloud, render_cloud, CloudFormat, CloudParams};
use emoforge::textprep::prepare;
use emoforge::Label;

fn main() -> emoforge::Result<()> {
    let out_dir = std::env::args()
        .nth(1)
        .map_or_else(std::env::temp_dir, PathBuf::from);
    let docs = prepare(&generate_synthetic_corpus(
        &SyntheticSpec::separable([200, 200, 200]),
        5,
    )?);
    let params = CloudParams {
        max_words: 12,
        exclude: ["i", "am", "the", "a", "to", "of", "and"]
            .map(String::from)
            .into(),
        group_similar: true,
        ..Default::default()
    };
    for label in Label::ALL {
        let subset: Vec<_> = docs.iter().filter(|d| d.label == label).cloned().collect();
        let cloud = build_cloud(&subset, &params)?;
        println!("== {label}\n{}\n", render_cloud(&cloud, CloudFormat::Text));
        let path = out_dir.join(format!("cloud-{label}.html"));
        std::fs::write(&path, render_cloud(&cloud, CloudFormat::Html)).expect("write html");
        println!("wrote {}", path.display());
    }
    Ok(())
}
