//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on operational errors, 2 on usage errors.
//! Seeds come from `--seed`, then `EMOFORGE_SEED`, then 0.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::corpus::{self, CorpusFormat, Label, SyntheticSpec};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, MetricsReport};
use crate::model::{self, ClassifierParams, ModelKind};
use crate::runner::{self, ExperimentConfig};
use crate::tagcloud::{self, CloudFormat, CloudParams};
use crate::textprep::{self, TokenizedDocument};
use crate::vectorizer::VectorizerConfig;

pub const TRAIN_FILE: &str = "train.csv";
pub const TEST_FILE: &str = "test.csv";
pub const SPLIT_SUMMARY_FILE: &str = "split.json";

#[derive(Debug, Parser)]
#[command(
    name = "emoforge",
    version,
    about = "Emotion classification for short texts"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Tsv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Logreg,
    SvmLinear,
    SvmRbf,
    Dtree,
    Adaboost,
    Rforest,
    Cnn,
}

impl From<KindArg> for ModelKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Logreg => ModelKind::Logistic,
            KindArg::SvmLinear => ModelKind::LinearSvm,
            KindArg::SvmRbf => ModelKind::RbfSvm,
            KindArg::Dtree => ModelKind::DecisionTree,
            KindArg::Adaboost => ModelKind::AdaBoost,
            KindArg::Rforest => ModelKind::RandomForest,
            KindArg::Cnn => ModelKind::Cnn,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CloudFormatArg {
    Text,
    Html,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MixArg {
    /// Equal class counts.
    Balanced,
    /// The reference tweet corpus proportions.
    Reference,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read a labeled corpus and print its class distribution.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        /// Defaults to the file extension.
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
    /// Stratified train/test split written as train.csv, test.csv and split.json.
    Split {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = 0.7)]
        fraction: f64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit a vectorizer and classifier on the train split.
    Train {
        #[arg(long, value_enum)]
        model: KindArg,
        #[arg(long, default_value_t = 10000)]
        max_features: usize,
        /// Directory holding the split artifacts.
        #[arg(long, default_value = ".")]
        data: PathBuf,
        /// Model file; defaults to <data>/model-<kind>.json.
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON file of hyperparameter overrides.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score a saved model on the test split (or any labeled corpus).
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = ".")]
        data: PathBuf,
        /// Labeled corpus to score instead of <data>/test.csv.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Label free text with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, conflicts_with = "input", required_unless_present = "input")]
        text: Vec<String>,
        /// Plain-text file, one document per line.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Run the feature-count x classifier grid from a JSON config.
    Grid {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Word-frequency cloud for one label.
    Tagcloud {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        label: Label,
        #[arg(long, default_value_t = 50)]
        max_words: usize,
        #[arg(long, default_value_t = 2)]
        min_freq: u64,
        #[arg(long)]
        group_similar: bool,
        #[arg(long)]
        keep_case: bool,
        /// Words to leave out; repeat or comma-separate.
        #[arg(long, value_delimiter = ',')]
        exclude: Vec<String>,
        #[arg(long, value_enum, default_value = "text")]
        format: CloudFormatArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic labeled corpus.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 3000)]
        docs: usize,
        #[arg(long, value_enum, default_value = "balanced")]
        mix: MixArg,
        /// No shared words between classes.
        #[arg(long)]
        disjoint: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    match flag {
        Some(s) => Ok(s),
        None => Ok(runner::seed_from_env()?.unwrap_or(0)),
    }
}

fn format_of(path: &Path, flag: Option<FormatArg>) -> CorpusFormat {
    match flag {
        Some(FormatArg::Csv) => CorpusFormat::Csv,
        Some(FormatArg::Tsv) => CorpusFormat::Tsv,
        None => CorpusFormat::from_path(path),
    }
}

fn require(path: &Path, hint: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "missing file {} ({hint})",
            path.display()
        )))
    }
}

fn load_tokenized(path: &Path) -> Result<Vec<TokenizedDocument>> {
    Ok(textprep::prepare(&corpus::load_corpus(
        path,
        CorpusFormat::from_path(path),
    )?))
}

fn report_text(report: &MetricsReport) -> String {
    let row = report.table_row();
    let mut out = format!(
        "accuracy {}  precision {}  recall {}  f-score {}\n\nconfusion (rows true, columns predicted)\n",
        row[0], row[1], row[2], row[3]
    );
    out.push_str(&format!("{:>10}", ""));
    for l in Label::ALL {
        out.push_str(&format!("{:>10}", l.as_str()));
    }
    out.push('\n');
    for t in Label::ALL {
        out.push_str(&format!("{:>10}", t.as_str()));
        for p in Label::ALL {
            out.push_str(&format!(
                "{:>10}",
                report.confusion.counts[t.code()][p.code()]
            ));
        }
        out.push('\n');
    }
    out
}

fn execute(command: Command, out: &mut dyn Write) -> Result<bool> {
    let io = |e: std::io::Error| Error::io("<stdout>", e);
    match command {
        Command::Ingest { input, format } => {
            let docs = corpus::load_corpus(&input, format_of(&input, format))?;
            writeln!(out, "{}", corpus::class_distribution(&docs).to_json()).map_err(io)?;
        }
        Command::Split {
            input,
            out: dir,
            fraction,
            seed,
        } => {
            let seed = resolve_seed(seed)?;
            let docs = corpus::load_corpus(&input, CorpusFormat::from_path(&input))?;
            let split = corpus::stratified_split(&docs, fraction, seed)?;
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            corpus::save_corpus(dir.join(TRAIN_FILE), &split.train, CorpusFormat::Csv)?;
            corpus::save_corpus(dir.join(TEST_FILE), &split.test, CorpusFormat::Csv)?;
            let summary = serde_json::json!({
                "seed": seed,
                "train_fraction": fraction,
                "train": corpus::class_distribution(&split.train).to_json_value(),
                "test": corpus::class_distribution(&split.test).to_json_value(),
            });
            let path = dir.join(SPLIT_SUMMARY_FILE);
            fs::write(&path, serde_json::to_string_pretty(&summary)?)
                .map_err(|e| Error::io(&path, e))?;
            writeln!(
                out,
                "train {}  test {}",
                split.train.len(),
                split.test.len()
            )
            .map_err(io)?;
        }
        Command::Train {
            model: kind,
            max_features,
            data,
            out: model_path,
            params,
            seed,
        } => {
            let kind = ModelKind::from(kind);
            let train_path = data.join(TRAIN_FILE);
            require(&train_path, "run `emoforge split` first")?;
            let params: ClassifierParams = match params {
                Some(p) => {
                    serde_json::from_str(&fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?)?
                }
                None => ClassifierParams::default(),
            };
            let params = params.with_seed(resolve_seed(seed)?);
            let train = load_tokenized(&train_path)?;
            let started = std::time::Instant::now();
            let (bundle, history) = model::train_bundle(
                kind,
                &train,
                VectorizerConfig::default().with_max_features(max_features),
                &params,
            )?;
            let seconds = started.elapsed().as_secs_f64();
            let model_path = model_path.unwrap_or_else(|| data.join(format!("model-{kind}.json")));
            bundle.save(&model_path)?;
            if let Some(h) = history {
                let p = data.join("cnn_history.csv");
                fs::write(&p, h.to_csv()).map_err(|e| Error::io(&p, e))?;
            }
            let labels: Vec<Label> = train.iter().map(|d| d.label).collect();
            let fit = evaluate(&labels, &bundle.predict_docs(&train)?)?;
            writeln!(
                out,
                "trained {} on {} documents ({} features) in {seconds:.2}s, training accuracy {}\nsaved {}",
                kind.display_name(),
                train.len(),
                bundle.vectorizer.dim(),
                crate::metrics::format_percent(fit.accuracy),
                model_path.display()
            )
            .map_err(io)?;
        }
        Command::Evaluate {
            model: model_path,
            data,
            input,
            json,
        } => {
            let bundle = model::load_model(&model_path)?;
            let path = input.unwrap_or_else(|| data.join(TEST_FILE));
            require(&path, "run `emoforge split` first or pass --input")?;
            let docs = load_tokenized(&path)?;
            let truth: Vec<Label> = docs.iter().map(|d| d.label).collect();
            let report = evaluate(&truth, &bundle.predict_docs(&docs)?)?;
            if json {
                writeln!(out, "{}", report.to_json()).map_err(io)?;
            } else {
                write!(out, "{}", report_text(&report)).map_err(io)?;
            }
        }
        Command::Predict {
            model: model_path,
            text,
            input,
        } => {
            let bundle = model::load_model(&model_path)?;
            let texts: Vec<String> = match input {
                Some(p) => fs::read_to_string(&p)
                    .map_err(|e| Error::io(&p, e))?
                    .lines()
                    .filter(|l| !l.trim().is_empty())
                    .map(String::from)
                    .collect(),
                None => text,
            };
            for label in bundle.predict_texts(&texts)? {
                writeln!(out, "{label}").map_err(io)?;
            }
        }
        Command::Grid {
            config,
            out: out_dir,
            seed,
            threads,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(d) = out_dir {
                cfg.out_dir = d;
            }
            if threads.is_some() {
                cfg.threads = threads;
            }
            cfg.validate()?;
            let result = runner::run_grid(&cfg)?;
            write!(out, "{}", result.to_table()).map_err(io)?;
            writeln!(out, "\nwrote {}", cfg.out_dir.join("results.csv").display()).map_err(io)?;
            return Ok(!result.any_failed());
        }
        Command::Tagcloud {
            input,
            label,
            max_words,
            min_freq,
            group_similar,
            keep_case,
            exclude,
            format,
            out: out_path,
        } => {
            let docs: Vec<TokenizedDocument> = load_tokenized(&input)?
                .into_iter()
                .filter(|d| d.label == label)
                .collect();
            let params = CloudParams {
                max_words,
                min_freq,
                lowercase: !keep_case,
                exclude: exclude
                    .into_iter()
                    .map(|w| w.trim().to_lowercase())
                    .collect(),
                group_similar,
            };
            let entries = tagcloud::build_cloud(&docs, &params)?;
            let format = match format {
                CloudFormatArg::Text => CloudFormat::Text,
                CloudFormatArg::Html => CloudFormat::Html,
            };
            let mut rendered = tagcloud::render_cloud(&entries, format);
            if !rendered.ends_with('\n') {
                rendered.push('\n');
            }
            match out_path {
                Some(p) => fs::write(&p, rendered).map_err(|e| Error::io(&p, e))?,
                None => out.write_all(rendered.as_bytes()).map_err(io)?,
            }
        }
        Command::Synth {
            out: path,
            docs,
            mix,
            disjoint,
            seed,
        } => {
            let counts = match mix {
                MixArg::Balanced => corpus::proportional_counts(docs, [1, 1, 1]),
                MixArg::Reference => corpus::reference_proportions(docs),
            };
            let spec = if disjoint {
                SyntheticSpec::disjoint(counts)
            } else {
                SyntheticSpec::separable(counts)
            };
            let generated = corpus::generate_synthetic_corpus(&spec, resolve_seed(seed)?)?;
            corpus::save_corpus(&path, &generated, CorpusFormat::from_path(&path))?;
            writeln!(
                out,
                "wrote {} documents to {}",
                generated.len(),
                path.display()
            )
            .map_err(io)?;
        }
    }
    Ok(true)
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return if code == 0 { 0 } else { 2 };
        }
    };
    match execute(cli.command, out) {
        Ok(true) => 0,
        Ok(false) => {
            let _ = writeln!(err, "error: one or more grid cells failed");
            1
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}
