use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use super::model::{basis_keys, fit_basis, fit_on_rows, hconcat, project_all, BasisKey};
use super::{ExpectationData, ExpectationError, ModelSpec, PcaScope};
use crate::numerics::{mean, pearson, sample_sd, PcaBasis};
use crate::rng::{fingerprint, stream_rng, Stream};

/// Repeated random train/test splits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub n_splits: usize,
    pub train_frac: f64,
    pub seed: u64,
    pub pca_scope: PcaScope,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            n_splits: 1000,
            train_frac: 0.8,
            seed: 0,
            pca_scope: PcaScope::PerFold,
        }
    }
}

impl SplitConfig {
    fn validate(&self, n: usize) -> Result<(), ExpectationError> {
        if self.n_splits == 0 {
            return Err(ExpectationError::InvalidConfig("n_splits must be at least 1".into()));
        }
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return Err(ExpectationError::InvalidConfig(format!(
                "train_frac must lie in (0, 1), got {}",
                self.train_frac
            )));
        }
        let n_train = n_train(n, self.train_frac);
        if n - n_train < 3 {
            return Err(ExpectationError::InsufficientScenes {
                n,
                required: n_train + 3,
            });
        }
        Ok(())
    }
}

/// Identity of the split sequence a distribution was computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitStream {
    pub seed: u64,
    pub n_scenes: usize,
    pub n_train: usize,
    pub scenes_fingerprint: u64,
    pub pca_scope: PcaScope,
}

/// Held-out correlations of one spec over repeated splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitDistribution {
    pub spec: ModelSpec,
    pub correlations: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
    pub stream: SplitStream,
}

impl SplitDistribution {
    pub fn new(spec: ModelSpec, correlations: Vec<f64>, stream: SplitStream) -> Self {
        Self {
            mean: mean(&correlations),
            sd: sample_sd(&correlations),
            spec,
            correlations,
            stream,
        }
    }
}

/// Out-of-fold predictions of k-fold cross-validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub spec: ModelSpec,
    pub r_cv: f64,
    pub fold_count: usize,
    pub n_scenes: usize,
    /// Prediction for each scene, in data order.
    pub predictions: Vec<f64>,
    /// Fold index of each scene.
    pub folds: Vec<usize>,
}

fn n_train(n: usize, train_frac: f64) -> usize {
    ((n as f64 * train_frac).round() as usize).clamp(1, n.saturating_sub(1).max(1))
}

/// Training and test rows (each ascending) of split `index`.
pub fn split_rows(n: usize, train_frac: f64, seed: u64, index: usize) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream_rng(seed, Stream::Split, index as u64));
    let (train, test) = order.split_at(n_train(n, train_frac));
    let (mut train, mut test) = (train.to_vec(), test.to_vec());
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Fold index for each of `n` items: a seeded permutation cut into `k`
/// contiguous folds whose sizes differ by at most one.
pub fn kfold_assignment(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream_rng(seed, Stream::KFold, 0));
    let (base, extra) = (n / k, n % k);
    let mut folds = vec![0; n];
    let mut pos = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        for &item in &order[pos..pos + size] {
            folds[item] = fold;
        }
        pos += size;
    }
    folds
}

type Fitted = (BTreeMap<BasisKey, PcaBasis>, BTreeMap<BasisKey, DMatrix<f64>>);

fn fit_keys(data: &ExpectationData, rows: &[usize], keys: &BTreeSet<BasisKey>) -> Result<Fitted, ExpectationError> {
    let bases = keys
        .iter()
        .map(|&key| Ok((key, fit_basis(data, rows, key)?)))
        .collect::<Result<BTreeMap<_, _>, ExpectationError>>()?;
    let projections = project_all(data, &bases)?;
    Ok((bases, projections))
}

fn held_out_r(
    spec: &ModelSpec,
    data: &ExpectationData,
    train: &[usize],
    test: &[usize],
    (bases, projections): &Fitted,
) -> Result<(f64, Vec<f64>), ExpectationError> {
    let model = fit_on_rows(spec, data, train, bases, projections)?;
    let blocks: Vec<DMatrix<f64>> = basis_keys(spec)?
        .iter()
        .map(|k| projections[k].select_rows(test))
        .collect();
    let predictions = model.predict_projected(&hconcat(&blocks)?)?;
    let observed: Vec<f64> = test.iter().map(|&i| data.targets[i]).collect();
    Ok((pearson(&predictions, &observed)?, predictions))
}

/// Repeated-split evaluation of several specs on shared splits.
///
/// PCA bases for a channel are fit once per split and shared by every spec
/// using that channel. Splits run in parallel; results are gathered in split
/// order.
pub fn evaluate_specs(
    data: &ExpectationData,
    specs: &[ModelSpec],
    config: &SplitConfig,
) -> Result<Vec<SplitDistribution>, ExpectationError> {
    let n = data.len();
    config.validate(n)?;
    let mut keys = BTreeSet::new();
    for spec in specs {
        keys.extend(basis_keys(spec)?);
    }
    let global = match config.pca_scope {
        PcaScope::Global => Some(fit_keys(data, &(0..n).collect::<Vec<_>>(), &keys)?),
        PcaScope::PerFold => None,
    };

    let per_split: Vec<Result<Vec<f64>, ExpectationError>> = (0..config.n_splits)
        .into_par_iter()
        .map(|i| {
            let (train, test) = split_rows(n, config.train_frac, config.seed, i);
            let local;
            let fitted = match &global {
                Some(g) => g,
                None => {
                    local = fit_keys(data, &train, &keys)?;
                    &local
                }
            };
            specs
                .iter()
                .map(|spec| Ok(held_out_r(spec, data, &train, &test, fitted)?.0))
                .collect()
        })
        .collect();

    let mut columns = vec![Vec::with_capacity(config.n_splits); specs.len()];
    for split in per_split {
        for (column, r) in columns.iter_mut().zip(split?) {
            column.push(r);
        }
    }
    let stream = SplitStream {
        seed: config.seed,
        n_scenes: n,
        n_train: n_train(n, config.train_frac),
        scenes_fingerprint: fingerprint(data.scene_ids.iter().map(String::as_str)),
        pca_scope: config.pca_scope,
    };
    Ok(specs
        .iter()
        .zip(columns)
        .map(|(spec, rs)| SplitDistribution::new(spec.clone(), rs, stream))
        .collect())
}

pub fn repeated_split_eval(
    spec: &ModelSpec,
    data: &ExpectationData,
    config: &SplitConfig,
) -> Result<SplitDistribution, ExpectationError> {
    Ok(evaluate_specs(data, std::slice::from_ref(spec), config)?.remove(0))
}

/// Single train/test holdout; identical to split 0 of [`repeated_split_eval`].
pub fn holdout_eval(
    spec: &ModelSpec,
    data: &ExpectationData,
    train_frac: f64,
    seed: u64,
    pca_scope: PcaScope,
) -> Result<f64, ExpectationError> {
    let config = SplitConfig {
        n_splits: 1,
        train_frac,
        seed,
        pca_scope,
    };
    config.validate(data.len())?;
    let (train, test) = split_rows(data.len(), train_frac, seed, 0);
    let keys: BTreeSet<BasisKey> = basis_keys(spec)?.into_iter().collect();
    let basis_rows = match pca_scope {
        PcaScope::PerFold => train.clone(),
        PcaScope::Global => (0..data.len()).collect(),
    };
    let fitted = fit_keys(data, &basis_rows, &keys)?;
    Ok(held_out_r(spec, data, &train, &test, &fitted)?.0)
}

/// k-fold cross-validation; out-of-fold predictions are concatenated in
/// scene order and correlated with the observed values.
pub fn kfold_eval(
    spec: &ModelSpec,
    data: &ExpectationData,
    k: usize,
    seed: u64,
    pca_scope: PcaScope,
) -> Result<CvResult, ExpectationError> {
    let n = data.len();
    if k < 2 || n < k {
        return Err(ExpectationError::InvalidConfig(format!(
            "{k}-fold cross-validation needs k >= 2 and at least k scenes, got {n}"
        )));
    }
    let folds = kfold_assignment(n, k, seed);
    let keys: BTreeSet<BasisKey> = basis_keys(spec)?.into_iter().collect();
    let global = match pca_scope {
        PcaScope::Global => Some(fit_keys(data, &(0..n).collect::<Vec<_>>(), &keys)?),
        PcaScope::PerFold => None,
    };
    let mut predictions = vec![f64::NAN; n];
    for fold in 0..k {
        let (test, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| folds[i] == fold);
        let local;
        let fitted = match &global {
            Some(g) => g,
            None => {
                local = fit_keys(data, &train, &keys)?;
                &local
            }
        };
        let model = fit_on_rows(spec, data, &train, &fitted.0, &fitted.1)?;
        let blocks: Vec<DMatrix<f64>> = basis_keys(spec)?
            .iter()
            .map(|key| fitted.1[key].select_rows(&test))
            .collect();
        for (i, p) in test.iter().zip(model.predict_projected(&hconcat(&blocks)?)?) {
            predictions[*i] = p;
        }
    }
    Ok(CvResult {
        spec: spec.clone(),
        r_cv: pearson(&predictions, &data.targets)?,
        fold_count: k,
        n_scenes: n,
        predictions,
        folds,
    })
}
