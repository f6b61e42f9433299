//! Labeled corpora: ingestion from CSV/TSV, stratified train/test splitting,
//! class distributions and a seeded synthetic corpus generator used as the
//! fixture factory for tests and examples.

use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Three-way emotion label. Integer codes are fixed: Positive=0, Negative=1, Neutral=2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive = 0,
    Negative = 1,
    Neutral = 2,
}

pub const NUM_CLASSES: usize = 3;

impl Label {
    pub const ALL: [Label; NUM_CLASSES] = [Label::Positive, Label::Negative, Label::Neutral];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Label> {
        Label::ALL.get(code).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Positive => "positive",
            Label::Negative => "negative",
            Label::Neutral => "neutral",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim();
        Label::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(trimmed))
            .ok_or_else(|| Error::Label {
                value: s.to_string(),
            })
    }
}

/// Index of the largest value, ties going to the lowest index.
pub(crate) fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledDocument {
    pub id: u64,
    pub text: String,
    pub label: Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Csv,
    Tsv,
}

impl CorpusFormat {
    /// Guesses the format from a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> CorpusFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("tsv") => CorpusFormat::Tsv,
            _ => CorpusFormat::Csv,
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(CorpusFormat::Csv),
            "tsv" => Ok(CorpusFormat::Tsv),
            other => Err(Error::Config(format!("unknown corpus format {other:?}"))),
        }
    }
}

fn reader_builder(format: CorpusFormat) -> csv::ReaderBuilder {
    let mut builder = csv::ReaderBuilder::new();
    builder.has_headers(true).flexible(false);
    if format == CorpusFormat::Tsv {
        builder.delimiter(b'\t').quoting(false);
    }
    builder
}

fn csv_error(err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    let message = match err.kind() {
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => format!("expected {expected_len} columns, found {len}"),
        _ => err.to_string(),
    };
    Error::Parse { line, message }
}

/// Loads a labeled corpus from a file. Ids are assigned sequentially from 0 in file order.
pub fn load_corpus(path: impl AsRef<Path>, format: CorpusFormat) -> Result<Vec<LabeledDocument>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(file, format)
}

/// Reads a corpus with a `text` and a `label` column, matched by header name in any order.
pub fn read_corpus<R: Read>(reader: R, format: CorpusFormat) -> Result<Vec<LabeledDocument>> {
    let mut rdr = reader_builder(format).from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Parse {
                line: 1,
                message: format!("missing {name:?} column in header"),
            })
    };
    let text_col = column("text")?;
    let label_col = column("label")?;

    let mut docs = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let text = &record[text_col];
        if text.trim().is_empty() {
            return Err(Error::EmptyText { row });
        }
        let label: Label = record[label_col].parse()?;
        docs.push(LabeledDocument {
            id: row as u64,
            text: text.to_string(),
            label,
        });
    }
    Ok(docs)
}

/// Writes documents with a `text,label` header.
pub fn write_corpus<W: Write>(
    writer: W,
    docs: &[LabeledDocument],
    format: CorpusFormat,
) -> Result<()> {
    let mut builder = csv::WriterBuilder::new();
    if format == CorpusFormat::Tsv {
        builder.delimiter(b'\t').quote_style(csv::QuoteStyle::Never);
    }
    let mut wtr = builder.from_writer(writer);
    let io = |e: csv::Error| Error::Parse {
        line: 0,
        message: e.to_string(),
    };
    wtr.write_record(["text", "label"]).map_err(io)?;
    for doc in docs {
        if format == CorpusFormat::Tsv && (doc.text.contains('\t') || doc.text.contains('\n')) {
            return Err(Error::Config(format!(
                "document {} contains a tab or newline, which TSV cannot represent",
                doc.id
            )));
        }
        wtr.write_record([doc.text.as_str(), doc.label.as_str()])
            .map_err(io)?;
    }
    wtr.flush().map_err(|e| Error::io("<corpus writer>", e))?;
    Ok(())
}

pub fn save_corpus(
    path: impl AsRef<Path>,
    docs: &[LabeledDocument],
    format: CorpusFormat,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_corpus(file, docs, format)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassDistribution {
    counts: [usize; NUM_CLASSES],
}

impl ClassDistribution {
    pub fn from_counts(counts: [usize; NUM_CLASSES]) -> Self {
        ClassDistribution { counts }
    }

    pub fn count(&self, label: Label) -> usize {
        self.counts[label.code()]
    }

    pub fn counts(&self) -> [usize; NUM_CLASSES] {
        self.counts
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::json!({
            "counts": {
                "positive": self.counts[0],
                "negative": self.counts[1],
                "neutral": self.counts[2],
            },
            "total": self.total(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("summary serializes")
    }
}

impl std::ops::Add for ClassDistribution {
    type Output = ClassDistribution;

    fn add(self, rhs: Self) -> Self {
        let mut counts = self.counts;
        for (c, r) in counts.iter_mut().zip(rhs.counts) {
            *c += r;
        }
        ClassDistribution { counts }
    }
}

pub fn class_distribution(docs: &[LabeledDocument]) -> ClassDistribution {
    let mut counts = [0; NUM_CLASSES];
    for doc in docs {
        counts[doc.label.code()] += 1;
    }
    ClassDistribution { counts }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<LabeledDocument>,
    pub test: Vec<LabeledDocument>,
    pub seed: u64,
    pub train_fraction: f64,
}

// Guards floor() against products like 0.7 * 20 landing just under an integer.
const FLOOR_EPS: f64 = 1e-9;

/// Per-class train counts under largest-remainder allocation.
///
/// Each class gets `floor(fraction * n_c)`; the shortfall against
/// `floor(fraction * N)` is handed out one document at a time in descending
/// fractional-remainder order, ties to the lowest class code.
pub fn allocate_train_counts(
    class_counts: [usize; NUM_CLASSES],
    fraction: f64,
) -> [usize; NUM_CLASSES] {
    let total: usize = class_counts.iter().sum();
    let target = (fraction * total as f64 + FLOOR_EPS).floor() as usize;
    let mut alloc = [0usize; NUM_CLASSES];
    let mut remainders = [0f64; NUM_CLASSES];
    for c in 0..NUM_CLASSES {
        let exact = fraction * class_counts[c] as f64;
        let floor = (exact + FLOOR_EPS).floor();
        alloc[c] = floor as usize;
        remainders[c] = (exact - floor).max(0.0);
    }
    let mut order: Vec<usize> = (0..NUM_CLASSES).collect();
    order.sort_by(|&a, &b| remainders[b].total_cmp(&remainders[a]).then(a.cmp(&b)));
    let mut assigned: usize = alloc.iter().sum();
    for &c in order.iter().cycle().take(NUM_CLASSES * 2) {
        if assigned >= target {
            break;
        }
        if alloc[c] < class_counts[c] {
            alloc[c] += 1;
            assigned += 1;
        }
    }
    alloc
}

/// Integer largest-remainder apportionment of `total` items by `weights`.
pub fn proportional_counts(total: usize, weights: [usize; NUM_CLASSES]) -> [usize; NUM_CLASSES] {
    let wsum: usize = weights.iter().sum();
    if wsum == 0 {
        return [0; NUM_CLASSES];
    }
    let mut alloc = [0usize; NUM_CLASSES];
    let mut rem = [0usize; NUM_CLASSES];
    for c in 0..NUM_CLASSES {
        let num = total as u128 * weights[c] as u128;
        alloc[c] = (num / wsum as u128) as usize;
        rem[c] = (num % wsum as u128) as usize;
    }
    let mut order: Vec<usize> = (0..NUM_CLASSES).collect();
    order.sort_by(|&a, &b| rem[b].cmp(&rem[a]).then(a.cmp(&b)));
    let short = total - alloc.iter().sum::<usize>();
    for &c in order.iter().take(short) {
        alloc[c] += 1;
    }
    alloc
}

/// Stratified train/test split with largest-remainder per-class allocation.
///
/// Members of a class are ordered by id and then shuffled with a per-class
/// seeded generator, so the result depends only on the document set and the
/// seed, not on input order.
pub fn stratified_split(
    docs: &[LabeledDocument],
    train_fraction: f64,
    seed: u64,
) -> Result<DatasetSplit> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let mut by_class: [Vec<&LabeledDocument>; NUM_CLASSES] = Default::default();
    for doc in docs {
        by_class[doc.label.code()].push(doc);
    }
    for label in Label::ALL {
        let count = by_class[label.code()].len();
        if count == 1 {
            return Err(Error::Split { label, count });
        }
    }
    let sizes = by_class.each_ref().map(|members| members.len());
    let alloc = allocate_train_counts(sizes, train_fraction);

    let mut train = Vec::new();
    let mut test = Vec::new();
    for label in Label::ALL {
        let members = &mut by_class[label.code()];
        members.sort_by_key(|d| d.id);
        let mut gen = rng::seeded(rng::derive(seed, label.code() as u64));
        members.shuffle(&mut gen);
        let k = alloc[label.code()];
        train.extend(members[..k].iter().map(|d| (*d).clone()));
        test.extend(members[k..].iter().map(|d| (*d).clone()));
    }
    train.sort_by_key(|d| d.id);
    test.sort_by_key(|d| d.id);
    Ok(DatasetSplit {
        train,
        test,
        seed,
        train_fraction,
    })
}

/// Parameters for [`generate_synthetic_corpus`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    /// Documents per class, indexed by label code.
    pub counts: [usize; NUM_CLASSES],
    /// Class-specific vocabulary, indexed by label code.
    pub banks: [Vec<String>; NUM_CLASSES],
    /// Vocabulary shared by all classes.
    pub shared: Vec<String>,
    /// Probability that a token after the first is drawn from the shared bank.
    pub overlap: f64,
    /// Inclusive token-count range per document.
    pub length: (usize, usize),
}

const POSITIVE_WORDS: &[&str] = &[
    "happy",
    "love",
    "great",
    "joy",
    "wonderful",
    "amazing",
    "smile",
    "awesome",
    "glad",
    "excited",
    "beautiful",
    "fantastic",
    "grateful",
    "delighted",
    "cheerful",
    "blessed",
];
const NEGATIVE_WORDS: &[&str] = &[
    "sad",
    "hate",
    "angry",
    "terrible",
    "awful",
    "cry",
    "upset",
    "horrible",
    "miserable",
    "lonely",
    "disappointed",
    "furious",
    "worst",
    "pain",
    "hurt",
    "broken",
];
const NEUTRAL_WORDS: &[&str] = &[
    "meeting", "schedule", "report", "weather", "train", "office", "update", "monday", "lunch",
    "document", "station", "forecast", "agenda", "traffic", "email", "package",
];
const SHARED_WORDS: &[&str] = &[
    "i", "am", "the", "a", "so", "today", "is", "it", "this", "my", "was", "just", "and", "to",
    "of", "at",
];

fn owned(words: &[&str]) -> Vec<String> {
    words.iter().map(|w| w.to_string()).collect()
}

impl SyntheticSpec {
    /// Class-disjoint emotional vocabularies plus a shared function-word bank.
    pub fn separable(counts: [usize; NUM_CLASSES]) -> Self {
        SyntheticSpec {
            counts,
            banks: [
                owned(POSITIVE_WORDS),
                owned(NEGATIVE_WORDS),
                owned(NEUTRAL_WORDS),
            ],
            shared: owned(SHARED_WORDS),
            overlap: 0.3,
            length: (6, 14),
        }
    }

    /// Same vocabulary as [`SyntheticSpec::separable`] but with no shared tokens at all.
    pub fn disjoint(counts: [usize; NUM_CLASSES]) -> Self {
        SyntheticSpec {
            overlap: 0.0,
            ..SyntheticSpec::separable(counts)
        }
    }
}

/// Per-class counts of the reference tweet corpus (131601 documents).
pub const REFERENCE_CLASS_COUNTS: [usize; NUM_CLASSES] = [62629, 55477, 13495];

/// Class counts for `total` documents in the reference corpus proportions.
pub fn reference_proportions(total: usize) -> [usize; NUM_CLASSES] {
    proportional_counts(total, REFERENCE_CLASS_COUNTS)
}

/// Draws a labeled corpus from per-class vocabulary banks.
///
/// The first token of every document comes from its class bank; each later
/// token comes from the shared bank with probability `overlap`. Documents are
/// shuffled before ids are assigned.
pub fn generate_synthetic_corpus(spec: &SyntheticSpec, seed: u64) -> Result<Vec<LabeledDocument>> {
    let (min_len, max_len) = spec.length;
    if min_len == 0 || min_len > max_len {
        return Err(Error::Spec(format!(
            "document length range ({min_len}, {max_len}) must satisfy 1 <= min <= max"
        )));
    }
    if !(0.0..=1.0).contains(&spec.overlap) {
        return Err(Error::Spec(format!(
            "overlap {} outside [0, 1]",
            spec.overlap
        )));
    }
    for label in Label::ALL {
        if spec.counts[label.code()] > 0 && spec.banks[label.code()].is_empty() {
            return Err(Error::Spec(format!(
                "class {label} has {} documents but an empty vocabulary bank",
                spec.counts[label.code()]
            )));
        }
    }
    let total: usize = spec.counts.iter().sum();
    if spec.overlap > 0.0 && spec.shared.is_empty() && total > 0 {
        return Err(Error::Spec(
            "overlap > 0 requires a non-empty shared bank".into(),
        ));
    }

    let mut gen = rng::seeded(seed);
    let mut drafts: Vec<(String, Label)> = Vec::with_capacity(total);
    for label in Label::ALL {
        let bank = &spec.banks[label.code()];
        for _ in 0..spec.counts[label.code()] {
            let len = gen.gen_range(min_len..=max_len);
            let mut words = Vec::with_capacity(len);
            words.push(bank[gen.gen_range(0..bank.len())].as_str());
            for _ in 1..len {
                let word = if gen.gen_bool(spec.overlap) {
                    &spec.shared[gen.gen_range(0..spec.shared.len())]
                } else {
                    &bank[gen.gen_range(0..bank.len())]
                };
                words.push(word.as_str());
            }
            words.shuffle(&mut gen);
            drafts.push((words.join(" "), label));
        }
    }
    drafts.shuffle(&mut gen);
    Ok(drafts
        .into_iter()
        .enumerate()
        .map(|(id, (text, label))| LabeledDocument {
            id: id as u64,
            text,
            label,
        })
        .collect())
}
