//! Multiclass emotion classification for short social-media texts.
//!
//! The pipeline runs from a labeled corpus (positive / negative / neutral)
//! through text normalization and tokenization, a TF-IDF vectorizer, and one
//! of six classical classifiers, or alternatively through integer sequence
//! encoding into an embedding + 1-D convolution network. Evaluation reports
//! accuracy with support-weighted precision, recall and F-score.
//!
//! ```
//! use emoforge::textprep::{normalize, tokenize};
//!
//! let tokens = tokenize(&normalize("Great day @bob http://x.co #win"));
//! let words: Vec<&str> = tokens.iter().map(|t| t.as_str()).collect();
//! assert_eq!(words, ["great", "day", "win"]);
//! ```
//!
//! Runnable walkthroughs of each capability live under `examples/`.

// Indexed loops mirror the math in the numeric kernels; `!(x > 0.0)` also rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod corpus;
pub mod error;
pub mod linear;
pub mod metrics;
pub mod model;
pub mod neural;
pub mod runner;
pub mod tagcloud;
pub mod textprep;
pub mod tree;
pub mod vectorizer;

pub(crate) mod rng;

pub use corpus::{Label, LabeledDocument};
pub use error::{Error, Result};
pub use model::{ModelBundle, TrainedClassifier};
pub use vectorizer::{SparseVector, TfidfModel};
