//! Domain types, file ingestion, rating aggregation and model persistence.
//!
//! File formats:
//!
//! - features, one CSV per channel: `scene_id,f0,f1,...`
//! - scenes manifest (optional): `scene_id,scene_category[,gt:<category>...]`
//!   where ground-truth cells hold `0`, `1` or nothing
//! - ratings: `subject_id,scene_id,category,likelihood_raw,box_x,box_y,box_w,box_h`
//!   with all four box cells empty when no box was drawn
//! - detector scores: `scene_id,detector_id,category,confidence`
//! - presence matrix JSON: `{ "vocabulary": [...], "rows": { scene_id: [0/1,...] } }`
//! - models: versioned JSON, see [`save_model`]

mod aggregate;
mod load;
mod persist;
mod presence;
mod types;

pub use aggregate::{aggregate_ratings, rating_matrix};
pub use load::{
    load_dataset, read_detector_scores, read_ratings, write_channel_csv, write_detector_scores,
    write_json, write_ratings, write_scenes_csv, write_text, Dataset, DatasetPaths, SchemaConfig,
};
pub use persist::{load_model, save_model, SavedModel, MODEL_FORMAT, MODEL_VERSION};
pub use presence::PresenceMatrix;
pub use types::{
    Category, ChannelId, ChannelSet, DetectorScore, Frame, PixelBox, RatingAggregate,
    RatingDimension, RawRating, SceneRecord, SliderRange,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{file}: missing column '{column}'")]
    MissingColumn { file: String, column: String },
    #[error("{file}, line {line}: expected {expected} fields, found {found}")]
    DimensionMismatch {
        file: String,
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("{file}, line {line}: non-finite value in column '{column}' for scene '{scene_id}'")]
    NonFiniteValue {
        file: String,
        line: u64,
        scene_id: String,
        column: String,
    },
    #[error("{file}, line {line}: unknown scene '{scene_id}'")]
    UnknownSceneReference {
        file: String,
        line: u64,
        scene_id: String,
    },
    #[error("{file}, line {line}: column '{column}': {message}")]
    InvalidField {
        file: String,
        line: u64,
        column: String,
        message: String,
    },
    #[error("{file}, line {line}: duplicate entry {key}")]
    Duplicate { file: String, line: u64, key: String },
    #[error("no ratings for scene '{scene_id}', category '{category}'")]
    EmptyRatingSet { scene_id: String, category: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: {source}")]
    Csv {
        file: String,
        #[source]
        source: csv::Error,
    },
    #[error("{file}: {message}")]
    Json { file: String, message: String },
    #[error("invalid presence matrix: {0}")]
    InvalidPresence(String),
    #[error("model payload is not a recognized model file: {0}")]
    CorruptPayload(String),
    #[error("model file version {found} is not supported (this build reads version {supported})")]
    VersionMismatch { found: u32, supported: u32 },
}
