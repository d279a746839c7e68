//! Detector-score augmentation with predicted expectations.
//!
//! Fusion features are always computed from scene features through fitted
//! expectation models, never from human ratings of the evaluation scenes.

mod association;
mod balance;
mod breakdown;
mod classifier;
mod features;
mod report;
mod roc;
mod transfer;

pub use association::{association_index, averaged_association, AssociationIndex};
pub use balance::balance_classes;
pub use breakdown::{error_breakdown, ErrorBreakdown};
pub use classifier::{
    stratified_folds, train_classifier, train_fusion, FusionClassifier, FusionTraining, LossKind, TrainConfig,
};
pub use features::{build_fusion_features, FusionData, FusionFeature, FusionFeatureSet, ModelBank};
pub use report::{AccuracyRow, AccuracyTable, Augmentation};
pub use roc::{roc, RocCurve, RocPoint};
pub use transfer::{transfer_analysis, CorrelationTest, TransferInput, TransferReport};

use thiserror::Error;

use crate::dataset::{Category, ChannelId, RatingDimension};
use crate::expectations::ExpectationError;
use crate::numerics::NumericsError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FusionError {
    #[error("scene '{scene_id}' has no {detector} score for {category}")]
    MissingScore {
        scene_id: String,
        detector: String,
        category: Category,
    },
    #[error("scene '{scene_id}' lacks channel {channel}")]
    MissingChannel { scene_id: String, channel: ChannelId },
    #[error("scene '{scene_id}' has no ground truth for {category}")]
    MissingGroundTruth { scene_id: String, category: Category },
    #[error("no expectation model for {category} {dimension}")]
    MissingModel {
        category: Category,
        dimension: RatingDimension,
    },
    #[error("training fold {0} contains a single class")]
    DegenerateFold(usize),
    #[error("classifier did not converge within {0} iterations")]
    NonConvergence(usize),
    #[error("ROC needs at least one positive and one negative")]
    SingleClassInput,
    #[error("anchor '{0}' is present in no scene")]
    EmptyAnchor(String),
    #[error("label '{0}' is not in the presence vocabulary")]
    UnknownLabel(String),
    #[error("expected {expected} values, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Expectation(#[from] ExpectationError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}
