//! Contextual expectation models for object detection.
//!
//! The crate learns how likely a target category (car, person, ...) is to
//! appear in a scene, and where and at what scale, from human rating data
//! and three per-scene feature channels (target-like detector statistics,
//! nontarget object labels, coarse blurred-scene descriptors). Predicted
//! expectations are then fused with external detector confidences through a
//! cross-validated linear classifier.
//!
//! Modules, bottom-up:
//!
//! - [`numerics`]: PCA, least squares, correlation, split-half reliability.
//! - [`dataset`]: domain types, CSV/JSON ingestion, rating aggregation,
//!   model persistence.
//! - [`expectations`]: channel-subset models and their evaluation protocols
//!   (k-fold, repeated 80/20 splits, paired model comparison).
//! - [`fusion`]: detector-score augmentation, ROC, error breakdowns,
//!   association-index transfer analysis.
//! - [`synth`]: planted-structure generators used as test oracles.
//! - [`cli`]: config-driven pipeline commands behind the `ctxprior` binary.
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

pub mod cli;
pub mod dataset;
pub mod expectations;
pub mod fusion;
pub mod numerics;
pub mod rng;
pub mod synth;

pub use dataset::{
    Category, ChannelId, ChannelSet, DetectorScore, Frame, PresenceMatrix, RatingAggregate,
    RatingDimension, RawRating, SceneRecord,
};
pub use expectations::{ExpectationData, ExpectationModel, ModelSpec, PcaScope};
pub use fusion::{FusionClassifier, FusionFeatureSet};
pub use numerics::{PcaBasis, RegressionModel};
