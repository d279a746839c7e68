use nalgebra::DMatrix;
use std::collections::BTreeMap;

use super::{ExpectationData, ExpectationError, ModelSpec};
use crate::dataset::{ChannelId, SceneRecord};
use crate::numerics::{ols_fit, NumericsError, PcaBasis, RegressionModel};

/// Column-wise affine normalization learned on training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Standardizer {
    /// Sample statistics of each column; zero-variance columns keep sd 1.
    pub fn fit(x: &DMatrix<f64>) -> Self {
        let n = x.nrows();
        let mut mean = Vec::with_capacity(x.ncols());
        let mut sd = Vec::with_capacity(x.ncols());
        for col in x.column_iter() {
            let m = col.iter().sum::<f64>() / n as f64;
            let ss = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
            let s = if n > 1 { (ss / (n - 1) as f64).sqrt() } else { 0.0 };
            mean.push(m);
            sd.push(if s > f64::EPSILON * m.abs().max(1.0) { s } else { 1.0 });
        }
        Self { mean, sd }
    }

    pub fn identity(p: usize) -> Self {
        Self {
            mean: vec![0.0; p],
            sd: vec![1.0; p],
        }
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut z = x.clone();
        for (j, mut col) in z.column_iter_mut().enumerate() {
            col.apply(|v| *v = (*v - self.mean[j]) / self.sd[j]);
        }
        z
    }
}

/// Channel-subset regression onto one rating dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationModel {
    pub spec: ModelSpec,
    /// PCA bases in spec channel order.
    pub bases: Vec<(ChannelId, PcaBasis)>,
    pub scaler: Standardizer,
    pub regression: RegressionModel,
    pub training_scene_ids: Vec<String>,
}

impl ExpectationModel {
    pub fn input_dim(&self) -> usize {
        self.regression.input_dim
    }

    /// Effective PCA dimension per channel.
    pub fn effective_k(&self) -> BTreeMap<ChannelId, usize> {
        self.bases.iter().map(|(c, b)| (*c, b.k())).collect()
    }

    /// Predicts from raw channel features, one row per scene.
    pub fn predict_channels(
        &self,
        features: &BTreeMap<ChannelId, DMatrix<f64>>,
    ) -> Result<Vec<f64>, ExpectationError> {
        let blocks = self
            .bases
            .iter()
            .map(|(c, basis)| {
                let x = features.get(c).ok_or(ExpectationError::MissingChannel(*c))?;
                Ok(basis.project(x)?)
            })
            .collect::<Result<Vec<_>, ExpectationError>>()?;
        self.predict_projected(&hconcat(&blocks)?)
    }

    /// Predicts from already projected (not standardized) features.
    pub(crate) fn predict_projected(&self, projected: &DMatrix<f64>) -> Result<Vec<f64>, ExpectationError> {
        Ok(self.regression.predict(&self.scaler.apply(projected))?)
    }

    pub fn predict_scene(&self, scene: &SceneRecord) -> Result<f64, ExpectationError> {
        Ok(self.predict_scenes(std::slice::from_ref(scene))?[0])
    }

    pub fn predict_scenes(&self, scenes: &[SceneRecord]) -> Result<Vec<f64>, ExpectationError> {
        let mut features = BTreeMap::new();
        for (c, basis) in &self.bases {
            let rows = scenes
                .iter()
                .map(|s| s.features(*c).ok_or(ExpectationError::MissingChannel(*c)))
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(bad) = rows.iter().position(|r| r.len() != basis.dim()) {
                return Err(ExpectationError::DimensionMismatch {
                    channel: *c,
                    scene_id: scenes[bad].scene_id.clone(),
                    expected: basis.dim(),
                    found: rows[bad].len(),
                });
            }
            let m = DMatrix::from_fn(rows.len(), basis.dim(), |i, j| rows[i][j]);
            features.insert(*c, m);
        }
        self.predict_channels(&features)
    }
}

/// Fits a model on every scene of `data`.
pub fn fit_expectation_model(
    spec: &ModelSpec,
    data: &ExpectationData,
) -> Result<ExpectationModel, ExpectationError> {
    let rows: Vec<usize> = (0..data.len()).collect();
    let bases = fit_bases(data, &rows, spec)?;
    let projections = project_all(data, &bases)?;
    fit_on_rows(spec, data, &rows, &bases, &projections)
}

/// Bases are shared between specs with the same channel and requested
/// PCA dimension.
pub(crate) type BasisKey = (ChannelId, usize);

/// PCA dimension actually used for a channel of width `d` with `n_train` rows.
pub fn effective_k(pca_dims: usize, n_train: usize, d: usize) -> usize {
    pca_dims.min(n_train.saturating_sub(2)).min(d)
}

pub(crate) fn basis_keys(spec: &ModelSpec) -> Result<Vec<BasisKey>, ExpectationError> {
    if spec.pca_dims == 0 {
        return Err(ExpectationError::InvalidConfig("pca_dims must be at least 1".into()));
    }
    if spec.channels.is_empty() {
        return Err(ExpectationError::InvalidConfig("channel subset is empty".into()));
    }
    Ok(spec.channels.channels().into_iter().map(|c| (c, spec.pca_dims)).collect())
}

pub(crate) fn fit_basis(
    data: &ExpectationData,
    rows: &[usize],
    (channel, pca_dims): BasisKey,
) -> Result<PcaBasis, ExpectationError> {
    let x = data.rows_of(channel, rows)?;
    let k = effective_k(pca_dims, rows.len(), x.ncols());
    if k == 0 {
        return Err(ExpectationError::InsufficientScenes {
            n: rows.len(),
            required: 3,
        });
    }
    Ok(PcaBasis::fit(&x, k)?)
}

pub(crate) fn fit_bases(
    data: &ExpectationData,
    rows: &[usize],
    spec: &ModelSpec,
) -> Result<BTreeMap<BasisKey, PcaBasis>, ExpectationError> {
    basis_keys(spec)?
        .into_iter()
        .map(|key| Ok((key, fit_basis(data, rows, key)?)))
        .collect()
}

pub(crate) fn project_all(
    data: &ExpectationData,
    bases: &BTreeMap<BasisKey, PcaBasis>,
) -> Result<BTreeMap<BasisKey, DMatrix<f64>>, ExpectationError> {
    bases
        .iter()
        .map(|(key, basis)| Ok((*key, basis.project(data.channel(key.0)?)?)))
        .collect()
}

/// Regression on `rows` using precomputed bases and projections of every
/// scene.
pub(crate) fn fit_on_rows(
    spec: &ModelSpec,
    data: &ExpectationData,
    rows: &[usize],
    bases: &BTreeMap<BasisKey, PcaBasis>,
    projections: &BTreeMap<BasisKey, DMatrix<f64>>,
) -> Result<ExpectationModel, ExpectationError> {
    let keys = basis_keys(spec)?;
    let blocks: Vec<DMatrix<f64>> = keys.iter().map(|k| projections[k].select_rows(rows)).collect();
    let design = hconcat(&blocks)?;
    let p = design.ncols();
    if rows.len() <= p + 1 {
        return Err(ExpectationError::InsufficientScenes {
            n: rows.len(),
            required: p + 2,
        });
    }
    let scaler = if spec.standardize {
        Standardizer::fit(&design)
    } else {
        Standardizer::identity(p)
    };
    let y: Vec<f64> = rows.iter().map(|&i| data.targets[i]).collect();
    let regression = ols_fit(&scaler.apply(&design), &y, spec.ridge)?;
    Ok(ExpectationModel {
        spec: spec.clone(),
        bases: keys.iter().map(|k| (k.0, bases[k].clone())).collect(),
        scaler,
        regression,
        training_scene_ids: rows.iter().map(|&i| data.scene_ids[i].clone()).collect(),
    })
}

pub(crate) fn hconcat(blocks: &[DMatrix<f64>]) -> Result<DMatrix<f64>, NumericsError> {
    let n = blocks.first().map_or(0, DMatrix::nrows);
    if let Some(b) = blocks.iter().find(|b| b.nrows() != n) {
        return Err(NumericsError::DimensionMismatch {
            expected: n,
            found: b.nrows(),
        });
    }
    let p = blocks.iter().map(DMatrix::ncols).sum();
    let mut out = DMatrix::zeros(n, p);
    let mut offset = 0;
    for b in blocks {
        out.columns_mut(offset, b.ncols()).copy_from(b);
        offset += b.ncols();
    }
    Ok(out)
}
