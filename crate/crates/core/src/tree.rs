//! CART decision trees (Gini impurity), random forests and SAMME AdaBoost.
//!
//! Features are read from sparse vectors with absent indices treated as 0,
//! so a split threshold can fall between 0 and the smallest observed weight.

use rand::seq::index;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{argmax_lowest, Label, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use crate::vectorizer::SparseVector;

// Impurity improvements smaller than this count as ties.
const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TreeNode {
    /// Samples with `weight(feature) <= threshold` go left.
    Internal {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        /// Weighted class totals of the training samples reaching the leaf.
        counts: [f64; NUM_CLASSES],
        label: Label,
    },
}

/// Nodes stored flat; index 0 is the root and children are referenced by index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub n_features: usize,
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    pub fn predict_one(&self, x: &SparseVector) -> Label {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x.get(*feature) <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
                TreeNode::Leaf { label, .. } => return *label,
            }
        }
    }

    pub fn predict(&self, x: &[SparseVector]) -> Result<Vec<Label>> {
        check_dims(x, self.n_features)?;
        Ok(x.iter().map(|row| self.predict_one(row)).collect())
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], at: usize) -> usize {
            match nodes[at] {
                TreeNode::Internal { left, right, .. } => {
                    1 + walk(nodes, left).max(walk(nodes, right))
                }
                TreeNode::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }
}

fn check_dims(x: &[SparseVector], n_features: usize) -> Result<()> {
    match x.iter().position(|row| row.dim_bound() > n_features) {
        Some(i) => Err(Error::Shape(format!(
            "row {i} has feature index {} but the model has {n_features} features",
            x[i].dim_bound() - 1
        ))),
        None => Ok(()),
    }
}

fn check_training_set(x: &[SparseVector], y: &[Label], n_features: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!(
            "{} rows but {} labels",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::Shape("empty training set".into()));
    }
    check_dims(x, n_features)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeConfig {
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: None,
            min_samples_leaf: 1,
        }
    }
}

/// Gini impurity `1 - sum p_c^2` of weighted class totals.
pub fn gini(counts: &[f64; NUM_CLASSES]) -> f64 {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    1.0 - counts.iter().map(|c| (c / total).powi(2)).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// Weighted mean Gini impurity of the two children.
    pub impurity: f64,
}

#[allow(clippy::large_enum_variant)]
enum FeatureChoice {
    All,
    Random { per_split: usize, rng: Rng },
}

#[derive(Clone, Copy)]
struct Group {
    value: f64,
    weights: [f64; NUM_CLASSES],
    count: usize,
}

struct Builder<'a> {
    x: &'a [SparseVector],
    y: &'a [Label],
    weights: &'a [f64],
    config: TreeConfig,
    choice: FeatureChoice,
}

impl Builder<'_> {
    fn class_totals(&self, samples: &[usize]) -> [f64; NUM_CLASSES] {
        let mut totals = [0.0; NUM_CLASSES];
        for &s in samples {
            totals[self.y[s].code()] += self.weights[s];
        }
        totals
    }

    /// Best split of `samples`, or `None` when no feature takes two distinct
    /// values under the leaf-size constraint.
    fn best_split(&mut self, samples: &[usize], totals: &[f64; NUM_CLASSES]) -> Option<Split> {
        let mut entries: Vec<(usize, f64, usize)> = Vec::new();
        for &s in samples {
            for (f, v) in self.x[s].iter() {
                if v != 0.0 {
                    entries.push((f, v, s));
                }
            }
        }
        entries
            .sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));

        // features whose values are not all equal within the node
        let mut runs: Vec<(usize, std::ops::Range<usize>)> = Vec::new();
        let mut start = 0;
        while start < entries.len() {
            let f = entries[start].0;
            let mut end = start;
            while end < entries.len() && entries[end].0 == f {
                end += 1;
            }
            let all_present = end - start == samples.len();
            let constant = all_present && entries[start].1 == entries[end - 1].1;
            if !constant {
                runs.push((f, start..end));
            }
            start = end;
        }

        let selected: Vec<usize> = match &mut self.choice {
            FeatureChoice::All => (0..runs.len()).collect(),
            FeatureChoice::Random { per_split, rng } => {
                let take = (*per_split).min(runs.len());
                let mut picked = index::sample(rng, runs.len(), take).into_vec();
                picked.sort_unstable();
                picked
            }
        };

        let total_weight: f64 = totals.iter().sum();
        let mut best: Option<Split> = None;
        for r in selected {
            let (feature, range) = &runs[r];
            let groups = value_groups(
                &entries[range.clone()],
                samples.len(),
                totals,
                self.y,
                self.weights,
            );
            let mut left_w = [0.0; NUM_CLASSES];
            let mut left_n = 0;
            for pair in groups.windows(2) {
                for c in 0..NUM_CLASSES {
                    left_w[c] += pair[0].weights[c];
                }
                left_n += pair[0].count;
                let right_n = samples.len() - left_n;
                if left_n < self.config.min_samples_leaf || right_n < self.config.min_samples_leaf {
                    continue;
                }
                let right_w: [f64; NUM_CLASSES] =
                    std::array::from_fn(|c| (totals[c] - left_w[c]).max(0.0));
                let wl: f64 = left_w.iter().sum();
                let wr: f64 = right_w.iter().sum();
                let impurity = (wl * gini(&left_w) + wr * gini(&right_w)) / total_weight;
                if best.is_none_or(|b| impurity < b.impurity - TIE_EPS) {
                    best = Some(Split {
                        feature: *feature,
                        threshold: 0.5 * (pair[0].value + pair[1].value),
                        impurity,
                    });
                }
            }
        }
        best
    }

    fn build(mut self, root_samples: Vec<usize>, n_features: usize) -> DecisionTree {
        let mut nodes = vec![placeholder()];
        let mut stack = vec![(0usize, root_samples, 0usize)];
        while let Some((slot, samples, depth)) = stack.pop() {
            let totals = self.class_totals(&samples);
            let impure = totals.iter().filter(|w| **w > 0.0).count() > 1;
            let depth_ok = self.config.max_depth.is_none_or(|d| depth < d);
            let split = if impure && depth_ok && samples.len() >= 2 * self.config.min_samples_leaf {
                self.best_split(&samples, &totals)
            } else {
                None
            };
            match split {
                None => {
                    nodes[slot] = TreeNode::Leaf {
                        counts: totals,
                        label: Label::ALL[argmax_lowest(&totals)],
                    };
                }
                Some(split) => {
                    let (left, right): (Vec<usize>, Vec<usize>) = samples
                        .iter()
                        .partition(|&&s| self.x[s].get(split.feature) <= split.threshold);
                    let (l, r) = (nodes.len(), nodes.len() + 1);
                    nodes.push(placeholder());
                    nodes.push(placeholder());
                    nodes[slot] = TreeNode::Internal {
                        feature: split.feature,
                        threshold: split.threshold,
                        left: l,
                        right: r,
                    };
                    stack.push((r, right, depth + 1));
                    stack.push((l, left, depth + 1));
                }
            }
        }
        DecisionTree { n_features, nodes }
    }
}

fn placeholder() -> TreeNode {
    TreeNode::Leaf {
        counts: [0.0; NUM_CLASSES],
        label: Label::Positive,
    }
}

/// Distinct values of one feature in ascending order, with the implicit
/// zeros folded into a single group.
fn value_groups(
    run: &[(usize, f64, usize)],
    n_samples: usize,
    totals: &[f64; NUM_CLASSES],
    y: &[Label],
    weights: &[f64],
) -> Vec<Group> {
    let mut groups: Vec<Group> = Vec::new();
    let mut zero = Group {
        value: 0.0,
        weights: *totals,
        count: n_samples - run.len(),
    };
    let mut zero_inserted = false;
    for &(_, v, s) in run {
        if !zero_inserted && v > 0.0 {
            if zero.count > 0 {
                groups.push(zero);
            }
            zero_inserted = true;
        }
        match groups.last_mut() {
            Some(g) if g.value == v => {
                g.weights[y[s].code()] += weights[s];
                g.count += 1;
            }
            _ => {
                let mut w = [0.0; NUM_CLASSES];
                w[y[s].code()] = weights[s];
                groups.push(Group {
                    value: v,
                    weights: w,
                    count: 1,
                });
            }
        }
        zero.weights[y[s].code()] -= weights[s];
    }
    if !zero_inserted && zero.count > 0 {
        groups.push(zero);
    }
    // the zero group was pushed before its residual weights were final
    if let Some(g) = groups.iter_mut().find(|g| g.value == 0.0) {
        g.weights = zero.weights.map(|w| w.max(0.0));
    }
    groups
}

fn fit_tree(
    x: &[SparseVector],
    y: &[Label],
    weights: &[f64],
    samples: Vec<usize>,
    n_features: usize,
    config: TreeConfig,
    choice: FeatureChoice,
) -> DecisionTree {
    Builder {
        x,
        y,
        weights,
        config,
        choice,
    }
    .build(samples, n_features)
}

/// Greedy CART with Gini impurity. Candidate thresholds are midpoints between
/// consecutive distinct values; ties go to the lowest feature index, then the
/// lowest threshold. Impure nodes keep splitting even without an impurity
/// decrease, so consistent data is fit exactly when depth is unbounded.
pub fn train_decision_tree(
    x: &[SparseVector],
    y: &[Label],
    n_features: usize,
    config: &TreeConfig,
) -> Result<DecisionTree> {
    check_training_set(x, y, n_features)?;
    if config.min_samples_leaf < 1 {
        return Err(Error::Config("min_samples_leaf must be >= 1".into()));
    }
    let weights = vec![1.0; x.len()];
    Ok(fit_tree(
        x,
        y,
        &weights,
        (0..x.len()).collect(),
        n_features,
        *config,
        FeatureChoice::All,
    ))
}

/// Root split chosen by the CART search for the given samples.
pub fn root_split(x: &[SparseVector], y: &[Label], config: &TreeConfig) -> Option<Split> {
    let weights = vec![1.0; x.len()];
    let mut builder = Builder {
        x,
        y,
        weights: &weights,
        config: *config,
        choice: FeatureChoice::All,
    };
    let samples: Vec<usize> = (0..x.len()).collect();
    let totals = builder.class_totals(&samples);
    builder.best_split(&samples, &totals)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSubset {
    /// `ceil(sqrt(V))` features drawn per split.
    Sqrt,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
    pub feature_subset: FeatureSubset,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            bootstrap: true,
            feature_subset: FeatureSubset::Sqrt,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<DecisionTree>,
    /// Seed each tree was grown from.
    pub tree_seeds: Vec<u64>,
}

fn vote(scores: &mut [f64; NUM_CLASSES]) -> Label {
    Label::ALL[argmax_lowest(scores)]
}

impl Forest {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Plurality vote, ties to the lowest class code.
    pub fn predict(&self, x: &[SparseVector]) -> Result<Vec<Label>> {
        if let Some(t) = self.trees.first() {
            check_dims(x, t.n_features)?;
        }
        Ok(x.iter()
            .map(|row| {
                let mut votes = [0.0; NUM_CLASSES];
                for tree in &self.trees {
                    votes[tree.predict_one(row).code()] += 1.0;
                }
                vote(&mut votes)
            })
            .collect())
    }
}

/// Bagged CART trees with per-split random feature subsets, grown in parallel.
/// Tree `t` uses its own generator seeded from `(seed, t)`, so the forest is
/// independent of scheduling.
pub fn train_random_forest(
    x: &[SparseVector],
    y: &[Label],
    n_features: usize,
    config: &ForestConfig,
) -> Result<Forest> {
    check_training_set(x, y, n_features)?;
    if config.n_trees < 1 {
        return Err(Error::Config("n_trees must be >= 1".into()));
    }
    let tree_config = TreeConfig {
        max_depth: config.max_depth,
        min_samples_leaf: config.min_samples_leaf.max(1),
    };
    let per_split = (n_features as f64).sqrt().ceil().max(1.0) as usize;
    let tree_seeds: Vec<u64> = (0..config.n_trees as u64)
        .map(|t| rng::derive(config.seed, t))
        .collect();
    let weights = vec![1.0; x.len()];
    let trees = tree_seeds
        .par_iter()
        .map(|&seed| {
            let mut gen = rng::seeded(seed);
            let samples: Vec<usize> = if config.bootstrap {
                let mut s: Vec<usize> = (0..x.len()).map(|_| gen.gen_range(0..x.len())).collect();
                s.sort_unstable();
                s
            } else {
                (0..x.len()).collect()
            };
            let choice = match config.feature_subset {
                FeatureSubset::All => FeatureChoice::All,
                FeatureSubset::Sqrt => FeatureChoice::Random {
                    per_split,
                    rng: gen,
                },
            };
            fit_tree(x, y, &weights, samples, n_features, tree_config, choice)
        })
        .collect();
    Ok(Forest { trees, tree_seeds })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostConfig {
    pub n_stages: usize,
    /// Depth of each base tree; 1 gives stumps.
    pub base_depth: usize,
}

impl Default for BoostConfig {
    fn default() -> Self {
        BoostConfig {
            n_stages: 50,
            base_depth: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostStage {
    pub tree: DecisionTree,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostEnsemble {
    pub n_classes: usize,
    pub stages: Vec<BoostStage>,
}

// A perfect stage's error is floored here so its weight stays finite.
const MIN_STAGE_ERROR: f64 = 1e-10;

/// SAMME stage weight `ln((1 - err) / err) + ln(K - 1)`.
pub fn samme_alpha(error: f64, n_classes: usize) -> f64 {
    let e = error.max(MIN_STAGE_ERROR);
    ((1.0 - e) / e).ln() + ((n_classes as f64) - 1.0).ln()
}

impl BoostEnsemble {
    fn predict_with(&self, row: &SparseVector, stages: usize) -> Label {
        let mut scores = [0.0; NUM_CLASSES];
        for stage in &self.stages[..stages] {
            scores[stage.tree.predict_one(row).code()] += stage.alpha;
        }
        vote(&mut scores)
    }

    pub fn predict(&self, x: &[SparseVector]) -> Result<Vec<Label>> {
        if let Some(s) = self.stages.first() {
            check_dims(x, s.tree.n_features)?;
        }
        Ok(x.iter()
            .map(|row| self.predict_with(row, self.stages.len()))
            .collect())
    }

    /// Predictions of the first 1, 2, ... stages.
    pub fn staged_predict(&self, x: &[SparseVector]) -> Vec<Vec<Label>> {
        (1..=self.stages.len())
            .map(|k| x.iter().map(|row| self.predict_with(row, k)).collect())
            .collect()
    }
}

/// Multiclass AdaBoost (SAMME) over depth-limited CART trees.
///
/// A stage whose weighted error reaches `1 - 1/K` is discarded and boosting
/// stops; if that happens on the first stage the fit fails. A stage with zero
/// error is kept and ends boosting.
pub fn train_adaboost(
    x: &[SparseVector],
    y: &[Label],
    n_features: usize,
    config: &BoostConfig,
) -> Result<BoostEnsemble> {
    train_adaboost_traced(x, y, n_features, config).map(|(e, _)| e)
}

/// As [`train_adaboost`], also returning the sample weights after each stage.
pub fn train_adaboost_traced(
    x: &[SparseVector],
    y: &[Label],
    n_features: usize,
    config: &BoostConfig,
) -> Result<(BoostEnsemble, Vec<Vec<f64>>)> {
    check_training_set(x, y, n_features)?;
    if config.n_stages < 1 || config.base_depth < 1 {
        return Err(Error::Config("n_stages and base_depth must be >= 1".into()));
    }
    let mut present = [false; NUM_CLASSES];
    for l in y {
        present[l.code()] = true;
    }
    let n_classes = present.iter().filter(|p| **p).count().max(2);
    let chance = 1.0 - 1.0 / n_classes as f64;
    let tree_config = TreeConfig {
        max_depth: Some(config.base_depth),
        min_samples_leaf: 1,
    };

    let n = x.len();
    let mut weights = vec![1.0 / n as f64; n];
    let mut stages = Vec::new();
    let mut trace = Vec::new();
    for stage in 0..config.n_stages {
        let tree = fit_tree(
            x,
            y,
            &weights,
            (0..n).collect(),
            n_features,
            tree_config,
            FeatureChoice::All,
        );
        let missed: Vec<bool> = x
            .iter()
            .zip(y)
            .map(|(row, l)| tree.predict_one(row) != *l)
            .collect();
        let error: f64 = weights
            .iter()
            .zip(&missed)
            .filter(|(_, m)| **m)
            .map(|(w, _)| w)
            .sum();
        if error >= chance {
            if stage == 0 {
                return Err(Error::Boost(format!(
                    "first stage error {error:.4} is no better than chance ({chance:.4})"
                )));
            }
            break;
        }
        let alpha = samme_alpha(error, n_classes);
        stages.push(BoostStage { tree, alpha });
        if error <= 0.0 {
            break;
        }
        for (w, m) in weights.iter_mut().zip(&missed) {
            if *m {
                *w *= alpha.exp();
            }
        }
        let sum: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= sum;
        }
        trace.push(weights.clone());
    }
    Ok((BoostEnsemble { n_classes, stages }, trace))
}
