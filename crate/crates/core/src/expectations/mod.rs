//! Expectation models over channel subsets and their evaluation protocols.
//!
//! A model projects each of its channels onto the leading principal
//! components (fit on training scenes only unless [`PcaScope::Global`]),
//! z-scores the concatenated projections with training statistics and fits a
//! least-squares regression onto one rating dimension.

mod compare;
mod data;
mod model;
mod protocol;
mod table;
mod weights;

pub use compare::{compare_models, ModelComparison, SignificanceFlag};
pub use data::ExpectationData;
pub use model::{effective_k, fit_expectation_model, ExpectationModel, Standardizer};
pub use protocol::{
    evaluate_specs, holdout_eval, kfold_eval, kfold_assignment, repeated_split_eval, split_rows,
    CvResult, SplitConfig, SplitDistribution, SplitStream,
};
pub use table::{evaluate_all_specs, CeilingSummary, EvalConfig, SpecRow, SpecTable};
pub use weights::{label_weights, nontarget_weight_correlation, NontargetWeights};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Category, ChannelId, ChannelSet, RatingDimension};
use crate::numerics::NumericsError;

/// Where PCA bases are fit during evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PcaScope {
    /// Inside each training fold or split.
    #[default]
    PerFold,
    /// Once on every scene, including held-out ones.
    Global,
}

/// Which channels and rating dimension a model uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub channels: ChannelSet,
    pub pca_dims: usize,
    pub category: Category,
    pub dimension: RatingDimension,
    pub ridge: f64,
    /// z-score projected features before regression.
    pub standardize: bool,
}

impl ModelSpec {
    pub const DEFAULT_PCA_DIMS: usize = 20;

    pub fn new(channels: ChannelSet, category: Category, dimension: RatingDimension) -> Self {
        Self {
            channels,
            pca_dims: Self::DEFAULT_PCA_DIMS,
            category,
            dimension,
            ridge: 0.0,
            standardize: true,
        }
    }

    pub fn with_pca_dims(mut self, pca_dims: usize) -> Self {
        self.pca_dims = pca_dims;
        self
    }

    pub fn with_ridge(mut self, ridge: f64) -> Self {
        self.ridge = ridge;
        self
    }

    pub fn with_standardize(mut self, standardize: bool) -> Self {
        self.standardize = standardize;
        self
    }

    /// Same spec restricted to other channels.
    pub fn with_channels(&self, channels: ChannelSet) -> Self {
        Self {
            channels,
            ..self.clone()
        }
    }

    pub fn label(&self) -> String {
        format!("{}_{}_{}", self.category, self.dimension, self.channels)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExpectationError {
    #[error("channel {0} is not available for every scene")]
    MissingChannel(ChannelId),
    #[error("{n} training scenes available, at least {required} required")]
    InsufficientScenes { n: usize, required: usize },
    #[error("no scene has a value for {category} {dimension}")]
    NoTargets {
        category: Category,
        dimension: RatingDimension,
    },
    #[error("channel {channel}: scene '{scene_id}' has {found} features, expected {expected}")]
    DimensionMismatch {
        channel: ChannelId,
        scene_id: String,
        expected: usize,
        found: usize,
    },
    #[error("distributions were not computed on the same split stream")]
    UnpairedDistributions,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}
