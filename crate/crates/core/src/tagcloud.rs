//! Per-label word-frequency clouds rendered as plain text or a standalone HTML page.
//!
//! "Group similar" merges words that share a stem under a small suffix
//! rule: strip a trailing `ing`, `ed` or `s` when at least three characters
//! remain, then undouble a trailing doubled consonant (`runn` -> `run`).
//! Merged counts are reported under the shortest surface form.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textprep::TokenizedDocument;

pub const BUCKETS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CloudParams {
    pub max_words: usize,
    pub min_freq: u64,
    pub lowercase: bool,
    pub exclude: BTreeSet<String>,
    pub group_similar: bool,
}

impl Default for CloudParams {
    fn default() -> Self {
        CloudParams {
            max_words: 50,
            min_freq: 2,
            lowercase: true,
            exclude: BTreeSet::new(),
            group_similar: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CloudEntry {
    pub word: String,
    pub frequency: u64,
    /// 1 (least frequent) to 5 (most frequent).
    pub size_bucket: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    Text,
    Html,
}

impl FromStr for CloudFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "text" | "txt" => Ok(CloudFormat::Text),
            "html" => Ok(CloudFormat::Html),
            other => Err(Error::Config(format!("unknown cloud format {other:?}"))),
        }
    }
}

pub fn stem(word: &str) -> String {
    for suffix in ["ing", "ed", "s"] {
        if let Some(rest) = word.strip_suffix(suffix) {
            if rest.chars().count() >= 3 {
                return undouble(rest);
            }
        }
    }
    word.to_string()
}

fn undouble(stem: &str) -> String {
    let chars: Vec<char> = stem.chars().collect();
    let n = chars.len();
    if n >= 4
        && chars[n - 1] == chars[n - 2]
        && !"aeiou".contains(chars[n - 1])
        && chars[n - 1].is_alphabetic()
    {
        chars[..n - 1].iter().collect()
    } else {
        stem.to_string()
    }
}

fn shorter(a: &str, b: &str) -> bool {
    (a.chars().count(), a) < (b.chars().count(), b)
}

/// Fails with a cloud error on an empty document list or invalid parameters.
pub fn build_cloud(docs: &[TokenizedDocument], params: &CloudParams) -> Result<Vec<CloudEntry>> {
    if docs.is_empty() {
        return Err(Error::Cloud("no documents for this label".into()));
    }
    if params.max_words < 1 || params.min_freq < 1 {
        return Err(Error::Cloud("max_words and min_freq must be >= 1".into()));
    }
    let mut counts: HashMap<String, u64> = HashMap::new();
    for doc in docs {
        for token in &doc.tokens {
            let word = if params.lowercase {
                token.as_str().to_lowercase()
            } else {
                token.as_str().to_string()
            };
            if !params.exclude.contains(&word) {
                *counts.entry(word).or_default() += 1;
            }
        }
    }
    if params.group_similar {
        let mut groups: BTreeMap<String, (String, u64)> = BTreeMap::new();
        for (word, n) in counts {
            let slot = groups
                .entry(stem(&word))
                .or_insert_with(|| (word.clone(), 0));
            if shorter(&word, &slot.0) {
                slot.0 = word;
            }
            slot.1 += n;
        }
        counts = groups.into_values().collect();
    }
    let mut kept: Vec<(String, u64)> = counts
        .into_iter()
        .filter(|(_, n)| *n >= params.min_freq)
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    kept.truncate(params.max_words);

    let n = kept.len();
    let freqs: Vec<u64> = kept.iter().map(|(_, f)| *f).collect();
    Ok(kept
        .into_iter()
        .map(|(word, frequency)| {
            let below = freqs.iter().filter(|&&f| f < frequency).count();
            CloudEntry {
                word,
                frequency,
                size_bucket: 1 + (BUCKETS * below / n).min(BUCKETS - 1),
            }
        })
        .collect())
}

fn escape_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

pub fn render_cloud(entries: &[CloudEntry], format: CloudFormat) -> String {
    let mut sorted: Vec<&CloudEntry> = entries.iter().collect();
    sorted.sort_by(|a, b| a.word.cmp(&b.word));
    match format {
        CloudFormat::Text => sorted
            .iter()
            .map(|e| format!("{} ({})", e.word, e.frequency))
            .collect::<Vec<_>>()
            .join("\n"),
        CloudFormat::Html => {
            let mut out = String::from(
                "<html>\n<head>\n<meta charset=\"utf-8\"/>\n<title>tag cloud</title>\n<style>\n",
            );
            out.push_str("body { font-family: sans-serif; }\n.cloud { max-width: 60em; line-height: 2.2em; }\n");
            for b in 1..=BUCKETS {
                let _ = writeln!(
                    out,
                    ".size-{b} {{ font-size: {:.1}em; opacity: {:.2}; margin: 0 0.3em; }}",
                    0.8 + 0.4 * (b - 1) as f64,
                    0.5 + 0.125 * (b - 1) as f64
                );
            }
            out.push_str("</style>\n</head>\n<body>\n<div class=\"cloud\">\n");
            for e in sorted {
                let _ = writeln!(
                    out,
                    "<span class=\"size-{}\" title=\"{}\">{}</span>",
                    e.size_bucket,
                    e.frequency,
                    escape_html(&e.word)
                );
            }
            out.push_str("</div>\n</body>\n</html>\n");
            out
        }
    }
}
