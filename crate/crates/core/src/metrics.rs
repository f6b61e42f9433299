//! Confusion matrices and support-weighted classification metrics.
//!
//! Weighted averages use each class's share of true samples as its weight,
//! which makes weighted recall equal to accuracy. Per-class precision is 0
//! for a class that is never predicted, and F1 is 0 when precision and
//! recall are both 0.

use serde::{Deserialize, Serialize};

use crate::corpus::{Label, NUM_CLASSES};
use crate::error::{Error, Result};

/// Rows are true labels, columns are predicted labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; NUM_CLASSES]; NUM_CLASSES],
}

impl ConfusionMatrix {
    pub fn from_counts(counts: [[u64; NUM_CLASSES]; NUM_CLASSES]) -> Self {
        ConfusionMatrix { counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..NUM_CLASSES).map(|c| self.counts[c][c]).sum()
    }

    pub fn row_sum(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }

    pub fn col_sum(&self, c: usize) -> u64 {
        self.counts.iter().map(|row| row[c]).sum()
    }
}

pub fn confusion(y_true: &[Label], y_pred: &[Label]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Shape(format!(
            "{} true labels but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::Shape("no labels to compare".into()));
    }
    let mut cm = ConfusionMatrix::default();
    for (t, p) in y_true.iter().zip(y_pred) {
        cm.counts[t.code()][p.code()] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    /// Indexed by label code.
    pub per_class: [ClassScores; NUM_CLASSES],
    pub confusion: ConfusionMatrix,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn weighted_report(cm: &ConfusionMatrix) -> Result<MetricsReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyMatrix);
    }
    let per_class: [ClassScores; NUM_CLASSES] = std::array::from_fn(|c| {
        let diag = cm.counts[c][c];
        let precision = ratio(diag, cm.col_sum(c));
        let recall = ratio(diag, cm.row_sum(c));
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        ClassScores {
            precision,
            recall,
            f1,
            support: cm.row_sum(c),
        }
    });
    let weighted = |f: fn(&ClassScores) -> f64| -> f64 {
        per_class
            .iter()
            .map(|s| s.support as f64 / total as f64 * f(s))
            .sum()
    };
    Ok(MetricsReport {
        accuracy: cm.trace() as f64 / total as f64,
        weighted_precision: weighted(|s| s.precision),
        weighted_recall: weighted(|s| s.recall),
        weighted_f1: weighted(|s| s.f1),
        per_class,
        confusion: *cm,
    })
}

pub fn evaluate(y_true: &[Label], y_pred: &[Label]) -> Result<MetricsReport> {
    weighted_report(&confusion(y_true, y_pred)?)
}

/// One-decimal percent, rounding half away from zero: 0.47590 -> "47.6".
pub fn format_percent(value: f64) -> String {
    let tenths = (value * 1000.0).round();
    format!("{:.1}", tenths / 10.0)
}

impl MetricsReport {
    /// The four table columns (accuracy, precision, recall, F-score) as one-decimal percents.
    pub fn table_row(&self) -> [String; 4] {
        [
            format_percent(self.accuracy),
            format_percent(self.weighted_precision),
            format_percent(self.weighted_recall),
            format_percent(self.weighted_f1),
        ]
    }

    pub fn csv_header() -> &'static str {
        "features,classifier,accuracy,precision,recall,f_score"
    }

    pub fn csv_row(&self, classifier: &str, features: usize) -> String {
        format!(
            "{features},{classifier},{},{},{},{}",
            self.accuracy, self.weighted_precision, self.weighted_recall, self.weighted_f1
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::REFERENCE_CLASS_COUNTS;
    use proptest::prelude::*;

    fn constant_positive(class_counts: [usize; 3]) -> ConfusionMatrix {
        let mut counts = [[0u64; 3]; 3];
        for c in 0..3 {
            counts[c][0] = class_counts[c] as u64;
        }
        ConfusionMatrix::from_counts(counts)
    }

    #[test]
    fn majority_baseline_row() {
        let report = weighted_report(&constant_positive(REFERENCE_CLASS_COUNTS)).unwrap();
        assert_eq!(report.table_row(), ["47.6", "22.6", "47.6", "30.7"]);
        // test half of the 70/30 split: 18789 / 16643 / 4049
        let report = weighted_report(&constant_positive([18789, 16643, 4049])).unwrap();
        assert_eq!(report.table_row(), ["47.6", "22.6", "47.6", "30.7"]);
        assert_eq!(report.per_class[1].precision, 0.0);
        assert_eq!(report.per_class[2].f1, 0.0);
    }

    #[test]
    fn perfect_predictions() {
        let y = [
            Label::Positive,
            Label::Negative,
            Label::Neutral,
            Label::Neutral,
        ];
        let cm = confusion(&y, &y).unwrap();
        assert_eq!(cm.counts, [[1, 0, 0], [0, 1, 0], [0, 0, 2]]);
        let r = weighted_report(&cm).unwrap();
        assert_eq!(
            [
                r.accuracy,
                r.weighted_precision,
                r.weighted_recall,
                r.weighted_f1
            ],
            [1.0; 4]
        );
    }

    #[test]
    fn single_misclassification_cell() {
        let cm = confusion(&[Label::Negative], &[Label::Neutral]).unwrap();
        assert_eq!(cm.counts[1][2], 1);
        assert_eq!(cm.total(), 1);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            confusion(&[Label::Positive], &[]),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            weighted_report(&ConfusionMatrix::default()),
            Err(Error::EmptyMatrix)
        ));
    }

    #[test]
    fn percent_rounds_half_away_from_zero() {
        assert_eq!(format_percent(0.4759), "47.6");
        assert_eq!(format_percent(0.12345), "12.3");
        assert_eq!(format_percent(0.0625), "6.3");
        assert_eq!(format_percent(1.0), "100.0");
    }

    proptest! {
        #[test]
        fn relabeling_permutes_per_class(counts in proptest::array::uniform3(proptest::array::uniform3(0u64..50)),
                                         perm in Just([0usize, 1, 2]).prop_shuffle()) {
            let cm = ConfusionMatrix::from_counts(counts);
            prop_assume!(cm.total() > 0);
            let mut permuted = [[0u64; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    permuted[perm[i]][perm[j]] = counts[i][j];
                }
            }
            let a = weighted_report(&cm).unwrap();
            let b = weighted_report(&ConfusionMatrix::from_counts(permuted)).unwrap();
            prop_assert_eq!(a.accuracy, b.accuracy);
            prop_assert!((a.weighted_precision - b.weighted_precision).abs() < 1e-12);
            prop_assert!((a.weighted_f1 - b.weighted_f1).abs() < 1e-12);
            for i in 0..3 {
                prop_assert_eq!(a.per_class[i], b.per_class[perm[i]]);
            }
            for v in [a.accuracy, a.weighted_precision, a.weighted_recall, a.weighted_f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
