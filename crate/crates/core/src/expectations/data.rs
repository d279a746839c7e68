use nalgebra::DMatrix;
use std::collections::{BTreeMap, HashMap};

use super::ExpectationError;
use crate::dataset::{Category, ChannelId, RatingAggregate, RatingDimension, SceneRecord};

/// Feature matrices and observed targets for one category and rating
/// dimension, restricted to scenes where the dimension is defined.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationData {
    pub category: Category,
    pub dimension: RatingDimension,
    pub scene_ids: Vec<String>,
    pub targets: Vec<f64>,
    pub channels: BTreeMap<ChannelId, DMatrix<f64>>,
}

impl ExpectationData {
    /// Joins scenes with their aggregates. Scenes are kept in input order;
    /// a channel is available only if every kept scene carries it.
    pub fn new(
        scenes: &[SceneRecord],
        aggregates: &[RatingAggregate],
        category: &Category,
        dimension: RatingDimension,
    ) -> Result<Self, ExpectationError> {
        let values: HashMap<&str, f64> = aggregates
            .iter()
            .filter(|a| &a.category == category)
            .filter_map(|a| Some((a.scene_id.as_str(), dimension.of(a)?)))
            .collect();
        let kept: Vec<(&SceneRecord, f64)> = scenes
            .iter()
            .filter_map(|s| Some((s, *values.get(s.scene_id.as_str())?)))
            .collect();
        if kept.is_empty() {
            return Err(ExpectationError::NoTargets {
                category: category.clone(),
                dimension,
            });
        }

        let mut channels = BTreeMap::new();
        for channel in ChannelId::ALL {
            if !kept.iter().all(|(s, _)| s.features(channel).is_some()) {
                continue;
            }
            let dim = kept[0].0.features(channel).map_or(0, <[f64]>::len);
            if let Some((s, _)) = kept
                .iter()
                .find(|(s, _)| s.features(channel).map_or(0, <[f64]>::len) != dim)
            {
                return Err(ExpectationError::DimensionMismatch {
                    channel,
                    scene_id: s.scene_id.clone(),
                    expected: dim,
                    found: s.features(channel).map_or(0, <[f64]>::len),
                });
            }
            let matrix = DMatrix::from_fn(kept.len(), dim, |i, j| {
                kept[i].0.features(channel).expect("checked")[j]
            });
            channels.insert(channel, matrix);
        }

        Ok(Self {
            category: category.clone(),
            dimension,
            scene_ids: kept.iter().map(|(s, _)| s.scene_id.clone()).collect(),
            targets: kept.iter().map(|(_, v)| *v).collect(),
            channels,
        })
    }

    pub fn len(&self) -> usize {
        self.scene_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scene_ids.is_empty()
    }

    pub fn channel(&self, channel: ChannelId) -> Result<&DMatrix<f64>, ExpectationError> {
        self.channels
            .get(&channel)
            .ok_or(ExpectationError::MissingChannel(channel))
    }

    /// Copy with targets replaced; used for permutation nulls and probes.
    pub fn with_targets(&self, targets: Vec<f64>) -> Self {
        assert_eq!(targets.len(), self.len());
        Self {
            targets,
            ..self.clone()
        }
    }

    pub(crate) fn rows_of(&self, channel: ChannelId, rows: &[usize]) -> Result<DMatrix<f64>, ExpectationError> {
        let m = self.channel(channel)?;
        Ok(m.select_rows(rows))
    }
}
