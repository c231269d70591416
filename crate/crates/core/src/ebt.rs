//! Ensemble bagging tree: CART trees grown on bootstrap resamples and
//! combined by plurality vote.
//!
//! Trees use Gini impurity over every feature (no feature subsampling) with
//! midpoint thresholds; a sample goes left when `x[feature] <= threshold`.
//! Growth is breadth-first and stops at pure nodes, nodes whose samples are
//! indistinguishable, or once `max_splits` internal nodes exist.
//!
//! Tree `t` of a model seeded with `s` draws its bootstrap from a ChaCha8
//! stream keyed by `(s, t)`, so training is reproducible regardless of how
//! trees are scheduled across threads.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_LEARNERS: usize = 30;
pub const DEFAULT_MAX_SPLITS: usize = 42_000;
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        class: usize,
        distribution: Vec<f64>,
    },
}

/// A single CART tree stored as an arena; node 0 is the root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    n_features: usize,
    n_classes: usize,
    max_splits: usize,
}

fn check_training_set(data: &[Vec<f64>], labels: &[usize], n_classes: usize) -> Result<usize> {
    let first = data.first().ok_or(Error::EmptyDataset)?;
    if labels.len() != data.len() {
        return Err(Error::DimensionMismatch {
            expected: data.len(),
            actual: labels.len(),
        });
    }
    let dim = first.len();
    if let Some((row, r)) = data.iter().enumerate().find(|(_, r)| r.len() != dim) {
        return Err(Error::InconsistentDimensions {
            row,
            expected: dim,
            actual: r.len(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(Error::UnknownLabel(bad));
    }
    Ok(dim)
}

/// Grows a tree on every row of `data`.
pub fn train_tree(data: &[Vec<f64>], labels: &[usize], n_classes: usize, max_splits: usize) -> Result<DecisionTree> {
    let dim = check_training_set(data, labels, n_classes)?;
    let all: Vec<usize> = (0..data.len()).collect();
    Ok(grow(data, labels, &all, dim, n_classes, max_splits))
}

fn class_counts(labels: &[usize], samples: &[usize], n_classes: usize) -> Vec<u64> {
    let mut counts = vec![0u64; n_classes];
    for &s in samples {
        counts[labels[s]] += 1;
    }
    counts
}

fn leaf(counts: &[u64]) -> Node {
    let total: u64 = counts.iter().sum();
    let mut class = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[class] {
            class = c;
        }
    }
    Node::Leaf {
        class,
        distribution: counts.iter().map(|&n| n as f64 / total as f64).collect(),
    }
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
}

/// Best Gini split of `samples`, or `None` when every feature is constant.
///
/// Minimizing the weighted child impurity is the same as maximizing
/// `sum(left^2)/n_left + sum(right^2)/n_right` over class counts.
fn best_split(
    data: &[Vec<f64>],
    labels: &[usize],
    samples: &[usize],
    counts: &[u64],
    dim: usize,
) -> Option<SplitChoice> {
    let n = samples.len();
    let total_sq: u64 = counts.iter().map(|c| c * c).sum();
    let mut pairs: Vec<(f64, usize)> = Vec::with_capacity(n);
    let mut left = vec![0u64; counts.len()];
    let mut right = vec![0u64; counts.len()];
    let mut best: Option<(f64, SplitChoice)> = None;

    for feature in 0..dim {
        pairs.clear();
        pairs.extend(samples.iter().map(|&s| (data[s][feature], labels[s])));
        let first = pairs[0].0;
        if pairs.iter().all(|p| p.0 == first) {
            continue;
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        left.iter_mut().for_each(|c| *c = 0);
        right.copy_from_slice(counts);
        let (mut sq_left, mut sq_right) = (0u64, total_sq);
        for k in 0..n - 1 {
            let (value, class) = pairs[k];
            sq_left += 2 * left[class] + 1;
            left[class] += 1;
            sq_right -= 2 * right[class] - 1;
            right[class] -= 1;
            let next = pairs[k + 1].0;
            if next == value {
                continue;
            }
            let n_left = (k + 1) as f64;
            let score = sq_left as f64 / n_left + sq_right as f64 / (n as f64 - n_left);
            if best.as_ref().is_none_or(|(b, _)| score > *b) {
                let mut threshold = value + (next - value) * 0.5;
                if threshold >= next {
                    threshold = value;
                }
                best = Some((score, SplitChoice { feature, threshold }));
            }
        }
    }
    best.map(|(_, choice)| choice)
}

fn grow(
    data: &[Vec<f64>],
    labels: &[usize],
    samples: &[usize],
    dim: usize,
    n_classes: usize,
    max_splits: usize,
) -> DecisionTree {
    let mut nodes = vec![Node::Leaf {
        class: 0,
        distribution: Vec::new(),
    }];
    let mut queue = VecDeque::from([(0usize, samples.to_vec())]);
    let mut splits = 0;
    while let Some((id, members)) = queue.pop_front() {
        let counts = class_counts(labels, &members, n_classes);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let choice = if pure || splits >= max_splits {
            None
        } else {
            best_split(data, labels, &members, &counts, dim)
        };
        let Some(SplitChoice { feature, threshold }) = choice else {
            nodes[id] = leaf(&counts);
            continue;
        };
        let (lhs, rhs): (Vec<usize>, Vec<usize>) = members.iter().partition(|&&s| data[s][feature] <= threshold);
        let (left, right) = (nodes.len(), nodes.len() + 1);
        nodes.push(Node::Leaf {
            class: 0,
            distribution: Vec::new(),
        });
        nodes.push(Node::Leaf {
            class: 0,
            distribution: Vec::new(),
        });
        nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        splits += 1;
        queue.push_back((left, lhs));
        queue.push_back((right, rhs));
    }
    DecisionTree {
        nodes,
        n_features: dim,
        n_classes,
        max_splits,
    }
}

impl DecisionTree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn split_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Split { .. })).count()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.len() - self.split_count()
    }

    /// Predicted class and the leaf's class distribution.
    pub fn predict(&self, x: &[f64]) -> Result<(usize, &[f64])> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: x.len(),
            });
        }
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if x[*feature] <= *threshold { *left } else { *right },
                Node::Leaf { class, distribution } => return Ok((*class, distribution)),
            }
        }
    }
}

pub fn tree_predict<'a>(tree: &'a DecisionTree, x: &[f64]) -> Result<(usize, &'a [f64])> {
    tree.predict(x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EbtParams {
    pub learners: usize,
    pub max_splits: usize,
    pub seed: u64,
    /// Fit each tree to a bootstrap resample; when off every tree sees the
    /// whole training set, so one learner is a plain CART tree.
    #[serde(default = "bootstrap_on")]
    pub bootstrap: bool,
}

fn bootstrap_on() -> bool {
    true
}

impl Default for EbtParams {
    fn default() -> Self {
        Self {
            learners: DEFAULT_LEARNERS,
            max_splits: DEFAULT_MAX_SPLITS,
            seed: 0,
            bootstrap: true,
        }
    }
}

/// Indices of the bootstrap resample used by tree `tree` of a model seeded with `seed`.
pub fn bootstrap_indices(seed: u64, tree: usize, n: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree as u64);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EbtModel {
    format_version: u32,
    classes: Vec<String>,
    n_features: usize,
    n_train: usize,
    params: EbtParams,
    trees: Vec<DecisionTree>,
}

pub fn train_ebt(data: &[Vec<f64>], labels: &[usize], classes: &[String], params: EbtParams) -> Result<EbtModel> {
    let dim = check_training_set(data, labels, classes.len())?;
    if params.learners == 0 {
        return Err(Error::BadSpec("an ensemble needs at least one learner".into()));
    }
    let first = labels[0];
    if labels.iter().all(|&l| l == first) {
        log::warn!("training an ensemble on a single class ('{}')", classes[first]);
    }
    let n = data.len();
    let trees = (0..params.learners)
        .into_par_iter()
        .map(|t| {
            let bag = if params.bootstrap {
                bootstrap_indices(params.seed, t, n)
            } else {
                (0..n).collect()
            };
            grow(data, labels, &bag, dim, classes.len(), params.max_splits)
        })
        .collect();
    Ok(EbtModel {
        format_version: MODEL_FORMAT_VERSION,
        classes: classes.to_vec(),
        n_features: dim,
        n_train: n,
        params,
        trees,
    })
}

/// Plurality winner of `votes`; ties go to the larger summed leaf
/// distribution, then to the lowest class index.
fn tally(votes: &[(usize, &[f64])], n_classes: usize) -> usize {
    let mut counts = vec![0usize; n_classes];
    let mut mass = vec![0.0f64; n_classes];
    for &(class, distribution) in votes {
        counts[class] += 1;
        for (m, p) in mass.iter_mut().zip(distribution) {
            *m += p;
        }
    }
    let mut best = 0;
    for c in 1..n_classes {
        if counts[c] > counts[best] || (counts[c] == counts[best] && mass[c] > mass[best]) {
            best = c;
        }
    }
    best
}

impl EbtModel {
    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn params(&self) -> EbtParams {
        self.params
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Every tree's (class, leaf distribution) for `x`.
    pub fn votes(&self, x: &[f64]) -> Result<Vec<(usize, &[f64])>> {
        self.trees.iter().map(|t| t.predict(x)).collect()
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(tally(&self.votes(x)?, self.classes.len()))
    }

    pub fn predict_all(&self, rows: &[Vec<f64>]) -> Result<Vec<usize>> {
        rows.par_iter().map(|x| self.predict(x)).collect()
    }

    /// Out-of-bag accuracy on the training set the model was fit to: each
    /// sample is voted on only by trees whose bootstrap left it out.
    /// Returns `None` if no sample was ever out of bag.
    pub fn oob_accuracy(&self, data: &[Vec<f64>], labels: &[usize]) -> Result<Option<f64>> {
        if !self.params.bootstrap {
            return Ok(None);
        }
        if data.len() != self.n_train || labels.len() != self.n_train {
            return Err(Error::DimensionMismatch {
                expected: self.n_train,
                actual: data.len(),
            });
        }
        let n = self.n_train;
        let in_bag: Vec<Vec<bool>> = (0..self.trees.len())
            .map(|t| {
                let mut mask = vec![false; n];
                for i in bootstrap_indices(self.params.seed, t, n) {
                    mask[i] = true;
                }
                mask
            })
            .collect();
        let (mut correct, mut scored) = (0usize, 0usize);
        for (i, (x, &label)) in data.iter().zip(labels).enumerate() {
            let votes: Vec<(usize, &[f64])> = self
                .trees
                .iter()
                .zip(&in_bag)
                .filter(|(_, mask)| !mask[i])
                .map(|(tree, _)| tree.predict(x))
                .collect::<Result<_>>()?;
            if votes.is_empty() {
                continue;
            }
            scored += 1;
            correct += usize::from(tally(&votes, self.classes.len()) == label);
        }
        Ok((scored > 0).then(|| correct as f64 / scored as f64))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported model version {}",
                model.format_version
            )));
        }
        if model.trees.is_empty() {
            return Err(Error::ModelFormat("model has no trees".into()));
        }
        Ok(model)
    }
}

pub fn ensemble_predict(model: &EbtModel, x: &[f64]) -> Result<usize> {
    model.predict(x)
}
