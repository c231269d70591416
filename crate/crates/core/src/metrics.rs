//! Signature similarity (NCC) and classification scoring.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::FeatureDataset;
use crate::ebt::{self, EbtModel, EbtParams};
use crate::error::{Error, Result};

/// Normalized cross-correlation: `<a, b> / (|a| |b|)`, in `[-1, 1]`.
pub fn ncc(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let (mut dot, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 {
        return Err(Error::ZeroVector { index: 0 });
    }
    if bb == 0.0 {
        return Err(Error::ZeroVector { index: 1 });
    }
    // sqrt(s * s) == s exactly, so ncc(a, a) is exactly 1.
    Ok((dot / (aa * bb).sqrt()).clamp(-1.0, 1.0))
}

/// Pairwise NCC of `vectors`; symmetric with a unit diagonal.
pub fn ncc_matrix<V: AsRef<[f64]> + Sync>(vectors: &[V]) -> Result<Vec<Vec<f64>>> {
    if vectors.len() < 2 {
        return Err(Error::BadSpec(format!(
            "an NCC matrix needs at least 2 vectors, got {}",
            vectors.len()
        )));
    }
    if let Some(index) = vectors.iter().position(|v| v.as_ref().iter().all(|&x| x == 0.0)) {
        return Err(Error::ZeroVector { index });
    }
    let n = vectors.len();
    let mut grid = vec![vec![1.0; n]; n];
    for a in 0..n {
        for b in a + 1..n {
            let v = ncc(vectors[a].as_ref(), vectors[b].as_ref())?;
            grid[a][b] = v;
            grid[b][a] = v;
        }
    }
    Ok(grid)
}

/// Rows are true classes, columns predicted classes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
    pub classes: Vec<String>,
}

impl ConfusionMatrix {
    pub fn new(classes: &[String]) -> Self {
        Self {
            counts: vec![vec![0; classes.len()]; classes.len()],
            classes: classes.to_vec(),
        }
    }

    pub fn from_predictions(truth: &[usize], predicted: &[usize], classes: &[String]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::DimensionMismatch {
                expected: truth.len(),
                actual: predicted.len(),
            });
        }
        let mut m = Self::new(classes);
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= classes.len() || p >= classes.len() {
                return Err(Error::UnknownLabel(t.max(p)));
            }
            m.counts[t][p] += 1;
        }
        Ok(m)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.counts.len()).map(|c| self.counts[c][c]).sum()
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        for (row, other_row) in self.counts.iter_mut().zip(&other.counts) {
            for (a, b) in row.iter_mut().zip(other_row) {
                *a += b;
            }
        }
    }

    /// Plain numeric grid, one CSV line per true class.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("true\\predicted");
        for c in &self.classes {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (name, row) in self.classes.iter().zip(&self.counts) {
            out.push_str(name);
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class: Vec<ClassScores>,
    pub confusion: ConfusionMatrix,
    pub fold_count: usize,
    /// How the test predictions were obtained.
    pub protocol: String,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl EvalReport {
    /// Scores a confusion matrix. Undefined precision, recall or F1 (a zero
    /// denominator) count as 0, so an absent class drags the macro mean down.
    pub fn from_confusion(confusion: ConfusionMatrix, fold_count: usize, protocol: impl Into<String>) -> Result<Self> {
        let total = confusion.total();
        if total == 0 {
            return Err(Error::EmptyTestSet);
        }
        let k = confusion.classes.len();
        let per_class: Vec<ClassScores> = (0..k)
            .map(|c| {
                let tp = confusion.counts[c][c];
                let support: u64 = confusion.counts[c].iter().sum();
                let predicted: u64 = (0..k).map(|t| confusion.counts[t][c]).sum();
                let precision = ratio(tp, predicted);
                let recall = ratio(tp, support);
                let f1 = if precision + recall > 0.0 {
                    2.0 * precision * recall / (precision + recall)
                } else {
                    0.0
                };
                ClassScores {
                    class: confusion.classes[c].clone(),
                    precision,
                    recall,
                    f1,
                    support,
                }
            })
            .collect();
        let macro_f1 = per_class.iter().map(|s| s.f1).sum::<f64>() / k as f64;
        Ok(Self {
            accuracy: ratio(confusion.trace(), total),
            macro_f1,
            per_class,
            confusion,
            fold_count,
            protocol: protocol.into(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "protocol: {} ({} folds)", self.protocol, self.fold_count)?;
        writeln!(f, "samples:  {}", self.confusion.total())?;
        writeln!(f, "accuracy: {:.4}", self.accuracy)?;
        writeln!(f, "macro F1: {:.4}", self.macro_f1)?;
        writeln!(f)?;
        let width = self.per_class.iter().map(|s| s.class.len()).max().unwrap_or(5).max(5);
        writeln!(f, "{:<width$}  precision  recall  f1      support", "class")?;
        for s in &self.per_class {
            writeln!(
                f,
                "{:<width$}  {:<9.4}  {:<6.4}  {:<6.4}  {}",
                s.class, s.precision, s.recall, s.f1, s.support
            )?;
        }
        writeln!(f)?;
        writeln!(f, "confusion (rows = true, columns = predicted):")?;
        for (name, row) in self.confusion.classes.iter().zip(&self.confusion.counts) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>5}")).collect();
            writeln!(f, "{name:<width$} {}", cells.join(""))?;
        }
        Ok(())
    }
}

/// Scores `model` on a held-out set.
pub fn evaluate(model: &EbtModel, rows: &[Vec<f64>], labels: &[usize]) -> Result<EvalReport> {
    if rows.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let predicted = model.predict_all(rows)?;
    let confusion = ConfusionMatrix::from_predictions(labels, &predicted, model.classes())?;
    EvalReport::from_confusion(confusion, 1, "holdout")
}

/// Test-fold membership for stratified k-fold cross-validation.
///
/// Each class's samples are shuffled under `seed` and dealt round-robin to
/// the folds, continuing where the previous class stopped so fold sizes stay
/// within one of each other. `k` equal to the sample count means
/// leave-one-out and skips the per-class size check.
pub fn stratified_folds(
    labels: &[usize],
    n_classes: usize,
    class_names: &[String],
    k: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    let n = labels.len();
    if k < 2 || k > n {
        return Err(Error::BadK { k, samples: n });
    }
    if k == n {
        return Ok((0..n).map(|i| vec![i]).collect());
    }
    let mut by_class = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    for (c, members) in by_class.iter().enumerate() {
        if members.len() < k {
            return Err(Error::ClassTooSmall {
                class: class_names.get(c).cloned().unwrap_or_else(|| c.to_string()),
                count: members.len(),
                k,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for mut members in by_class {
        members.shuffle(&mut rng);
        for i in members {
            folds[next].push(i);
            next = (next + 1) % k;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Seed for the ensemble trained on fold `fold`.
fn fold_seed(seed: u64, fold: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fold as u64 + 1);
    rng.next_u64()
}

/// Stratified k-fold cross-validation; fold confusion matrices are summed
/// before scoring.
pub fn kfold_evaluate(ds: &FeatureDataset, k: usize, params: EbtParams, seed: u64) -> Result<EvalReport> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let folds = stratified_folds(&ds.labels, ds.classes.len(), &ds.classes, k, seed)?;
    let fold_confusions: Vec<ConfusionMatrix> = folds
        .par_iter()
        .enumerate()
        .map(|(f, test)| {
            let mut is_test = vec![false; ds.len()];
            test.iter().for_each(|&i| is_test[i] = true);
            let (mut train_x, mut train_y) = (Vec::new(), Vec::new());
            for i in (0..ds.len()).filter(|&i| !is_test[i]) {
                train_x.push(ds.rows[i].clone());
                train_y.push(ds.labels[i]);
            }
            let model = ebt::train_ebt(
                &train_x,
                &train_y,
                &ds.classes,
                EbtParams {
                    seed: fold_seed(seed, f),
                    ..params
                },
            )?;
            let test_x: Vec<Vec<f64>> = test.iter().map(|&i| ds.rows[i].clone()).collect();
            let test_y: Vec<usize> = test.iter().map(|&i| ds.labels[i]).collect();
            let predicted = model.predict_all(&test_x)?;
            ConfusionMatrix::from_predictions(&test_y, &predicted, &ds.classes)
        })
        .collect::<Result<_>>()?;
    let mut total = ConfusionMatrix::new(&ds.classes);
    for c in &fold_confusions {
        total.add(c);
    }
    let protocol = if k == ds.len() {
        "leave-one-out".to_string()
    } else {
        format!("stratified {k}-fold, seed {seed}")
    };
    EvalReport::from_confusion(total, k, protocol)
}
