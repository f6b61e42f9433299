mod common;

use emoforge::textprep::TokenizedDocument;
use emoforge::vectorizer::{TfidfModel, VectorizerConfig};
use emoforge::Label;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn default_config_matches_brute_force() {
    for seed in 0..200 {
        let words = common::random_corpus(seed, 10, 20);
        let err = common::tfidf_discrepancy(&words, VectorizerConfig::default());
        assert!(err <= 1e-12, "seed {seed}: {err}");
    }
}

#[test]
fn filtered_configs_match_brute_force() {
    let mut tried = 0;
    for seed in 0..400 {
        let mut g = common::rng(10_000 + seed);
        let words = common::random_corpus(seed, 10, 20);
        let config = VectorizerConfig {
            min_df: g.gen_range(1..=3),
            max_df: g.gen_range(0.3..=1.0),
            max_features: g.gen_range(1..=12),
        };
        if TfidfModel::fit(&common::tokenized(&words), config).is_err() {
            continue;
        }
        tried += 1;
        let err = common::tfidf_discrepancy(&words, config);
        assert!(err <= 1e-12, "seed {seed} {config:?}: {err}");
    }
    assert!(tried > 200);
}

#[test]
fn term_only_in_unseen_documents_is_ignored() {
    let train = common::tokenized(&[vec!["a".into(), "b".into()], vec!["b".into()]]);
    let model = TfidfModel::fit(&train, VectorizerConfig::default()).unwrap();
    let unseen = TokenizedDocument::from_words(9, &["zebra", "a"], Label::Neutral);
    assert!(model.vocabulary().index_of("zebra").is_none());
    let v = model.transform(&unseen);
    assert_eq!(v.len(), 1);
    assert_eq!(
        model.encode_tokens(&unseen.tokens, 3),
        vec![1, model.vocabulary().index_of("a").unwrap() as u32 + 2, 0]
    );
}

proptest! {
    #[test]
    fn token_order_does_not_matter(seed in 0u64..100_000) {
        let words = common::random_corpus(seed, 6, 10);
        let model = TfidfModel::fit(&common::tokenized(&words), VectorizerConfig::default()).unwrap();
        let mut reversed = words[0].clone();
        reversed.reverse();
        let a = model.transform(&TokenizedDocument::from_words(0, &words[0], Label::Positive));
        let b = model.transform(&TokenizedDocument::from_words(0, &reversed, Label::Positive));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn repeating_a_document_scales_its_weights(seed in 0u64..100_000, k in 2usize..5) {
        let words = common::random_corpus(seed, 6, 10);
        let model = TfidfModel::fit(&common::tokenized(&words), VectorizerConfig::default()).unwrap();
        let once = model.transform(&TokenizedDocument::from_words(0, &words[0], Label::Positive));
        let repeated: Vec<String> = std::iter::repeat_n(words[0].clone(), k).flatten().collect();
        let many = model.transform(&TokenizedDocument::from_words(0, &repeated, Label::Positive));
        prop_assert_eq!(once.len(), many.len());
        for ((i, a), (j, b)) in once.iter().zip(many.iter()) {
            prop_assert_eq!(i, j);
            prop_assert!((b - k as f64 * a).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn weights_are_non_negative_and_indices_in_range(seed in 0u64..100_000) {
        let words = common::random_corpus(seed, 10, 20);
        let model = TfidfModel::fit(&common::tokenized(&words), VectorizerConfig::default()).unwrap();
        for doc in common::tokenized(&words) {
            let v = model.transform(&doc);
            prop_assert!(v.iter().all(|(i, w)| i < model.dim() && w >= 0.0));
        }
    }
}
