use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use super::FusionError;
use crate::dataset::{Category, DetectorScore, RatingDimension, SceneRecord};
use crate::expectations::ExpectationModel;

/// Fitted expectation models keyed by the category and dimension they
/// predict.
pub type ModelBank = BTreeMap<(Category, RatingDimension), ExpectationModel>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FusionFeature {
    DetectorScore,
    Expectation {
        category: Category,
        dimension: RatingDimension,
    },
}

impl fmt::Display for FusionFeature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DetectorScore => f.write_str("score"),
            Self::Expectation { category, dimension } => write!(f, "{category}_{dimension}"),
        }
    }
}

/// Ordered fusion columns; the detector score is always first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<FusionFeature>", into = "Vec<FusionFeature>")]
pub struct FusionFeatureSet(Vec<FusionFeature>);

impl FusionFeatureSet {
    pub fn baseline() -> Self {
        Self(vec![FusionFeature::DetectorScore])
    }

    /// Adds expectation columns for `category`, skipping duplicates.
    pub fn with(mut self, category: &Category, dimensions: &[RatingDimension]) -> Self {
        for &dimension in dimensions {
            let f = FusionFeature::Expectation {
                category: category.clone(),
                dimension,
            };
            if !self.0.contains(&f) {
                self.0.push(f);
            }
        }
        self
    }

    /// Score plus every rating dimension of each category.
    pub fn all_ratings(categories: &[Category]) -> Self {
        categories
            .iter()
            .fold(Self::baseline(), |s, c| s.with(c, &RatingDimension::ALL))
    }

    pub fn features(&self) -> &[FusionFeature] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn label(&self) -> String {
        self.0.iter().map(ToString::to_string).collect::<Vec<_>>().join("+")
    }
}

impl TryFrom<Vec<FusionFeature>> for FusionFeatureSet {
    type Error = String;

    fn try_from(v: Vec<FusionFeature>) -> Result<Self, String> {
        if v.first() != Some(&FusionFeature::DetectorScore)
            || v.iter().skip(1).any(|f| *f == FusionFeature::DetectorScore)
        {
            return Err("feature set must start with the single detector score".into());
        }
        Ok(Self(v))
    }
}

impl From<FusionFeatureSet> for Vec<FusionFeature> {
    fn from(s: FusionFeatureSet) -> Self {
        s.0
    }
}

/// Fusion design matrix with labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionData {
    pub scene_ids: Vec<String>,
    pub columns: Vec<String>,
    pub features: DMatrix<f64>,
    pub labels: Vec<bool>,
}

impl FusionData {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Rows restricted to `rows`, in that order.
    pub fn subset(&self, rows: &[usize]) -> Self {
        Self {
            scene_ids: rows.iter().map(|&i| self.scene_ids[i].clone()).collect(),
            columns: self.columns.clone(),
            features: self.features.select_rows(rows),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Appends extra columns (e.g. noise probes).
    pub fn with_columns(&self, names: &[String], extra: &DMatrix<f64>) -> Self {
        assert_eq!(extra.nrows(), self.len());
        let (n, m) = self.features.shape();
        let mut features = DMatrix::zeros(n, m + extra.ncols());
        features.columns_mut(0, m).copy_from(&self.features);
        features.columns_mut(m, extra.ncols()).copy_from(extra);
        let mut columns = self.columns.clone();
        columns.extend(names.iter().cloned());
        Self {
            scene_ids: self.scene_ids.clone(),
            columns,
            features,
            labels: self.labels.clone(),
        }
    }
}

/// Builds one row per scene: the detector's confidence for `target`
/// followed by expectation-model predictions from the scene's features.
pub fn build_fusion_features(
    scores: &[DetectorScore],
    detector_id: &str,
    target: &Category,
    models: &ModelBank,
    scenes: &[SceneRecord],
    set: &FusionFeatureSet,
) -> Result<FusionData, FusionError> {
    let lookup: HashMap<&str, f64> = scores
        .iter()
        .filter(|s| s.detector_id == detector_id && &s.category == target)
        .map(|s| (s.scene_id.as_str(), s.confidence))
        .collect();

    let mut features = DMatrix::zeros(scenes.len(), set.len());
    let mut labels = Vec::with_capacity(scenes.len());
    for (i, scene) in scenes.iter().enumerate() {
        features[(i, 0)] = *lookup.get(scene.scene_id.as_str()).ok_or_else(|| FusionError::MissingScore {
            scene_id: scene.scene_id.clone(),
            detector: detector_id.to_string(),
            category: target.clone(),
        })?;
        labels.push(scene.truth(target).ok_or_else(|| FusionError::MissingGroundTruth {
            scene_id: scene.scene_id.clone(),
            category: target.clone(),
        })?);
    }

    for (j, feature) in set.features().iter().enumerate().skip(1) {
        let FusionFeature::Expectation { category, dimension } = feature else {
            continue;
        };
        let model = models
            .get(&(category.clone(), *dimension))
            .ok_or_else(|| FusionError::MissingModel {
                category: category.clone(),
                dimension: *dimension,
            })?;
        for (channel, _) in &model.bases {
            if let Some(s) = scenes.iter().find(|s| s.features(*channel).is_none()) {
                return Err(FusionError::MissingChannel {
                    scene_id: s.scene_id.clone(),
                    channel: *channel,
                });
            }
        }
        for (i, p) in model.predict_scenes(scenes)?.into_iter().enumerate() {
            features[(i, j)] = p;
        }
    }

    Ok(FusionData {
        scene_ids: scenes.iter().map(|s| s.scene_id.clone()).collect(),
        columns: set.features().iter().map(ToString::to_string).collect(),
        features,
        labels,
    })
}
