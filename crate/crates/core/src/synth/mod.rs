//! Synthetic datasets with planted, fully known structure.
//!
//! A seeded "world" fixes per-channel loadings and planted regression
//! weights. Expectation datasets draw scenes and per-subject ratings from it;
//! detection datasets draw labelled scenes whose coarse features carry a
//! context signal of known strength, plus detector scores.

mod calibrate;
mod config;
mod detection;
mod expectation;
mod world;
mod write;

pub use calibrate::{expected_model_r, expected_split_half, gaussian_discriminant_accuracy, subject_noise_for_reliability};
pub use config::{
    ChannelDims, DetectionConfig, DetectorModel, SynthConfig, NONTARGET_LABELS, REFERENCE_SCENE_COUNT, SCENE_CATEGORIES,
};
pub use detection::{generate_detection_dataset, DetectionSynth, DetectionTruth, DetectorTruth};
pub use expectation::{generate_expectation_dataset, ExpectationSynth, PlantedSignal, PlantedTruth};
pub use write::{write_synth_dataset, SynthFiles};

use thiserror::Error;

use crate::numerics::NumericsError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}
