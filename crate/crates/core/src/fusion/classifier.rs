use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FusionData, FusionError, FusionFeatureSet};
use crate::expectations::Standardizer;
use crate::rng::{stream_rng, Stream};

const NEWTON_TOL: f64 = 1e-10;

/// Loss minimized by the linear fusion classifier.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// L2-regularized logistic regression; threshold at posterior 0.5.
    #[default]
    Logistic,
    /// L2-regularized squared hinge (margin) loss; threshold at margin 0.
    SquaredHinge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub k_folds: usize,
    pub seed: u64,
    /// L2 penalty on the weights (the bias is not penalized).
    pub lambda: f64,
    pub loss: LossKind,
    pub max_iter: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            k_folds: 5,
            seed: 0,
            lambda: 1.0,
            loss: LossKind::Logistic,
            max_iter: 100,
        }
    }
}

/// Linear decision rule over z-scored fusion features. A scene is declared
/// present when its score is strictly above `threshold`.
///
/// Columns beyond `feature_set` (probe columns appended to the design) get
/// weights like any other column.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionClassifier {
    pub feature_set: FusionFeatureSet,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub threshold: f64,
    pub scaler: Standardizer,
    pub loss: LossKind,
}

impl FusionClassifier {
    fn check(&self, x: &DMatrix<f64>) -> Result<(), FusionError> {
        if x.ncols() != self.weights.len() {
            return Err(FusionError::DimensionMismatch {
                expected: self.weights.len(),
                found: x.ncols(),
            });
        }
        Ok(())
    }

    /// Signed decision values, one per row.
    pub fn scores(&self, x: &DMatrix<f64>) -> Result<Vec<f64>, FusionError> {
        self.check(x)?;
        let z = self.scaler.apply(x);
        Ok(z.row_iter()
            .map(|r| self.bias + r.iter().zip(&self.weights).map(|(a, w)| a * w).sum::<f64>())
            .collect())
    }

    pub fn decide(&self, x: &DMatrix<f64>) -> Result<Vec<bool>, FusionError> {
        Ok(self.scores(x)?.into_iter().map(|s| s > self.threshold).collect())
    }

    /// Weights and bias on the unstandardized feature scale.
    pub fn raw_weights(&self) -> (Vec<f64>, f64) {
        let w: Vec<f64> = self.weights.iter().zip(&self.scaler.sd).map(|(w, s)| w / s).collect();
        let b = self.bias - w.iter().zip(&self.scaler.mean).map(|(w, m)| w * m).sum::<f64>();
        (w, b)
    }
}

/// Cross-validated training outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionTraining {
    /// Refit on all rows.
    pub classifier: FusionClassifier,
    /// Mean held-out accuracy over folds.
    pub cv_accuracy: f64,
    pub fold_accuracies: Vec<f64>,
    /// Held-out decision values and decisions for every row.
    pub oof_scores: Vec<f64>,
    pub oof_decisions: Vec<bool>,
    pub folds: Vec<usize>,
}

/// Fold index per row: each class is permuted with its own seeded stream
/// and dealt round-robin, so folds depend only on labels and seed.
pub fn stratified_folds(labels: &[bool], k: usize, seed: u64) -> Vec<usize> {
    let mut folds = vec![0; labels.len()];
    for (stream, class) in [(0, true), (1, false)] {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        rows.shuffle(&mut stream_rng(seed, Stream::FusionFolds, stream));
        for (pos, row) in rows.into_iter().enumerate() {
            folds[row] = pos % k;
        }
    }
    folds
}

/// Fits the classifier on every row of `x`.
pub fn train_classifier(
    x: &DMatrix<f64>,
    labels: &[bool],
    feature_set: &FusionFeatureSet,
    config: &TrainConfig,
) -> Result<FusionClassifier, FusionError> {
    if x.nrows() != labels.len() {
        return Err(FusionError::DimensionMismatch {
            expected: x.nrows(),
            found: labels.len(),
        });
    }
    if !(config.lambda >= 0.0 && config.lambda.is_finite()) {
        return Err(FusionError::InvalidConfig(format!("lambda must be >= 0, got {}", config.lambda)));
    }
    let scaler = Standardizer::fit(x);
    let z = scaler.apply(x);
    let theta = match config.loss {
        LossKind::Logistic => newton_logistic(&z, labels, config.lambda, config.max_iter)?,
        LossKind::SquaredHinge => newton_squared_hinge(&z, labels, config.lambda, config.max_iter)?,
    };
    let m = x.ncols();
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(FusionError::NonConvergence(config.max_iter));
    }
    Ok(FusionClassifier {
        feature_set: feature_set.clone(),
        weights: theta.rows(0, m).iter().copied().collect(),
        bias: theta[m],
        threshold: 0.0,
        scaler,
        loss: config.loss,
    })
}

/// Design with a trailing column of ones.
fn augmented(z: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, m) = z.shape();
    let mut a = DMatrix::from_element(n, m + 1, 1.0);
    a.columns_mut(0, m).copy_from(z);
    a
}

fn penalty(m: usize, lambda: f64) -> DVector<f64> {
    DVector::from_fn(m + 1, |i, _| if i < m { lambda } else { 0.0 })
}

fn solve(h: DMatrix<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(ch) = h.clone().cholesky() {
        return Some(ch.solve(g));
    }
    h.lu().solve(g)
}

fn logistic_objective(a: &DMatrix<f64>, y: &[f64], theta: &DVector<f64>, pen: &DVector<f64>) -> f64 {
    let f = a * theta;
    let loss: f64 = f
        .iter()
        .zip(y)
        .map(|(f, y)| {
            let t = -(2.0 * y - 1.0) * f;
            if t > 0.0 { t + (-t).exp().ln_1p() } else { t.exp().ln_1p() }
        })
        .sum();
    loss + 0.5 * theta.iter().zip(pen.iter()).map(|(t, l)| l * t * t).sum::<f64>()
}

fn newton_logistic(z: &DMatrix<f64>, labels: &[bool], lambda: f64, max_iter: usize) -> Result<DVector<f64>, FusionError> {
    let a = augmented(z);
    let m = z.ncols();
    let y: Vec<f64> = labels.iter().map(|&l| f64::from(u8::from(l))).collect();
    let pen = penalty(m, lambda);
    let mut theta = DVector::zeros(m + 1);
    let mut obj = logistic_objective(&a, &y, &theta, &pen);
    for _ in 0..max_iter {
        let f = &a * &theta;
        let p: Vec<f64> = f.iter().map(|v| 1.0 / (1.0 + (-v).exp())).collect();
        let resid = DVector::from_iterator(y.len(), p.iter().zip(&y).map(|(p, y)| p - y));
        let g = a.transpose() * resid + pen.component_mul(&theta);
        let mut aw = a.clone();
        for (i, mut row) in aw.row_iter_mut().enumerate() {
            row *= (p[i] * (1.0 - p[i])).max(1e-12);
        }
        let mut h = a.transpose() * aw;
        for i in 0..=m {
            h[(i, i)] += pen[i] + 1e-12;
        }
        let step = solve(h, &g).ok_or(FusionError::NonConvergence(max_iter))?;
        let mut t = 1.0;
        let mut next = &theta - &step * t;
        let mut next_obj = logistic_objective(&a, &y, &next, &pen);
        while next_obj > obj + 1e-12 * obj.abs().max(1.0) && t > 1e-10 {
            t *= 0.5;
            next = &theta - &step * t;
            next_obj = logistic_objective(&a, &y, &next, &pen);
        }
        let moved = (&next - &theta).amax();
        theta = next;
        obj = next_obj;
        if moved < NEWTON_TOL * theta.amax().max(1.0) || g.amax() < NEWTON_TOL {
            return Ok(theta);
        }
    }
    Err(FusionError::NonConvergence(max_iter))
}

fn newton_squared_hinge(z: &DMatrix<f64>, labels: &[bool], lambda: f64, max_iter: usize) -> Result<DVector<f64>, FusionError> {
    let a = augmented(z);
    let m = z.ncols();
    let s: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
    let pen = penalty(m, lambda.max(1e-9));
    let mut active: Vec<bool> = vec![true; s.len()];
    for _ in 0..max_iter {
        let rows: Vec<usize> = (0..s.len()).filter(|&i| active[i]).collect();
        let aa = a.select_rows(&rows);
        let target = DVector::from_iterator(rows.len(), rows.iter().map(|&i| s[i]));
        let mut h = aa.transpose() * &aa * 2.0;
        for i in 0..=m {
            h[(i, i)] += pen[i] + 1e-12;
        }
        let rhs = aa.transpose() * target * 2.0;
        let theta = solve(h, &rhs).ok_or(FusionError::NonConvergence(max_iter))?;
        let f = &a * &theta;
        let next: Vec<bool> = f.iter().zip(&s).map(|(f, s)| s * f < 1.0).collect();
        if next == active {
            return Ok(theta);
        }
        active = next;
    }
    Err(FusionError::NonConvergence(max_iter))
}

fn accuracy(decisions: &[bool], labels: &[bool]) -> f64 {
    decisions.iter().zip(labels).filter(|(d, l)| d == l).count() as f64 / labels.len() as f64
}

/// k-fold cross-validated accuracy with stratified seeded folds, followed
/// by a refit on all rows.
pub fn train_fusion(data: &FusionData, feature_set: &FusionFeatureSet, config: &TrainConfig) -> Result<FusionTraining, FusionError> {
    let n = data.len();
    if config.k_folds < 2 || n < config.k_folds {
        return Err(FusionError::InvalidConfig(format!(
            "{} folds need k >= 2 and at least k rows, got {n}",
            config.k_folds
        )));
    }
    let folds = stratified_folds(&data.labels, config.k_folds, config.seed);
    let per_fold: Vec<Result<(Vec<usize>, Vec<f64>, Vec<bool>), FusionError>> = (0..config.k_folds)
        .into_par_iter()
        .map(|fold| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| folds[i] == fold);
            let train_labels: Vec<bool> = train.iter().map(|&i| data.labels[i]).collect();
            if train_labels.iter().all(|&l| l) || train_labels.iter().all(|&l| !l) || test.is_empty() {
                return Err(FusionError::DegenerateFold(fold));
            }
            let clf = train_classifier(&data.features.select_rows(&train), &train_labels, feature_set, config)?;
            let x_test = data.features.select_rows(&test);
            let scores = clf.scores(&x_test)?;
            let decisions = scores.iter().map(|&s| s > clf.threshold).collect();
            Ok((test, scores, decisions))
        })
        .collect();

    let mut oof_scores = vec![0.0; n];
    let mut oof_decisions = vec![false; n];
    let mut fold_accuracies = Vec::with_capacity(config.k_folds);
    for result in per_fold {
        let (test, scores, decisions) = result?;
        let labels: Vec<bool> = test.iter().map(|&i| data.labels[i]).collect();
        fold_accuracies.push(accuracy(&decisions, &labels));
        for (k, &i) in test.iter().enumerate() {
            oof_scores[i] = scores[k];
            oof_decisions[i] = decisions[k];
        }
    }
    let classifier = train_classifier(&data.features, &data.labels, feature_set, config)?;
    Ok(FusionTraining {
        classifier,
        cv_accuracy: fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64,
        fold_accuracies,
        oof_scores,
        oof_decisions,
        folds,
    })
}
