use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::path::Path;

use super::load::write_text;
use super::{ChannelId, DatasetError};
use crate::expectations::{ExpectationModel, ModelSpec, Standardizer};
use crate::fusion::{FusionClassifier, FusionFeatureSet, LossKind};
use crate::numerics::{PcaBasis, RegressionModel};

/// Magic string identifying model files.
pub const MODEL_FORMAT: &str = "ctxprior-model";
pub const MODEL_VERSION: u32 = 1;

/// A persisted model of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum SavedModel {
    Expectation(ExpectationModel),
    Fusion(FusionClassifier),
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    format: String,
    version: u32,
    kind: String,
    payload: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct MatrixDto {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl MatrixDto {
    fn from_matrix(m: &DMatrix<f64>) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.transpose().iter().copied().collect(),
        }
    }

    fn into_matrix(self) -> Result<DMatrix<f64>, DatasetError> {
        if self.data.len() != self.rows * self.cols {
            return Err(corrupt(format!(
                "matrix {}x{} holds {} values",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

#[derive(Serialize, Deserialize)]
struct BasisDto {
    channel: ChannelId,
    mean: Vec<f64>,
    components: MatrixDto,
    explained_variance: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ExpectationDto {
    spec: ModelSpec,
    bases: Vec<BasisDto>,
    scaler_mean: Vec<f64>,
    scaler_sd: Vec<f64>,
    weights: Vec<f64>,
    intercept: f64,
    training_scene_ids: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct FusionDto {
    feature_set: FusionFeatureSet,
    weights: Vec<f64>,
    bias: f64,
    threshold: f64,
    scaler_mean: Vec<f64>,
    scaler_sd: Vec<f64>,
    loss: LossKind,
}

fn corrupt(message: impl Into<String>) -> DatasetError {
    DatasetError::CorruptPayload(message.into())
}

impl SavedModel {
    fn kind(&self) -> &'static str {
        match self {
            Self::Expectation(_) => "expectation",
            Self::Fusion(_) => "fusion",
        }
    }

    pub fn to_json(&self) -> String {
        let payload = match self {
            Self::Expectation(m) => serde_json::to_value(ExpectationDto {
                spec: m.spec.clone(),
                bases: m
                    .bases
                    .iter()
                    .map(|(c, b)| BasisDto {
                        channel: *c,
                        mean: b.mean.iter().copied().collect(),
                        components: MatrixDto::from_matrix(&b.components),
                        explained_variance: b.explained_variance.clone(),
                    })
                    .collect(),
                scaler_mean: m.scaler.mean.clone(),
                scaler_sd: m.scaler.sd.clone(),
                weights: m.regression.weights.clone(),
                intercept: m.regression.intercept,
                training_scene_ids: m.training_scene_ids.clone(),
            }),
            Self::Fusion(c) => serde_json::to_value(FusionDto {
                feature_set: c.feature_set.clone(),
                weights: c.weights.clone(),
                bias: c.bias,
                threshold: c.threshold,
                scaler_mean: c.scaler.mean.clone(),
                scaler_sd: c.scaler.sd.clone(),
                loss: c.loss,
            }),
        }
        .expect("model payload serializes");
        let envelope = Envelope {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            kind: self.kind().into(),
            payload,
        };
        serde_json::to_string_pretty(&envelope).expect("model envelope serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, DatasetError> {
        let envelope: Envelope = serde_json::from_str(text).map_err(|e| corrupt(e.to_string()))?;
        if envelope.format != MODEL_FORMAT {
            return Err(corrupt(format!("unexpected format tag '{}'", envelope.format)));
        }
        if envelope.version != MODEL_VERSION {
            return Err(DatasetError::VersionMismatch {
                found: envelope.version,
                supported: MODEL_VERSION,
            });
        }
        match envelope.kind.as_str() {
            "expectation" => {
                let dto: ExpectationDto = serde_json::from_value(envelope.payload).map_err(|e| corrupt(e.to_string()))?;
                expectation_from_dto(dto).map(Self::Expectation)
            }
            "fusion" => {
                let dto: FusionDto = serde_json::from_value(envelope.payload).map_err(|e| corrupt(e.to_string()))?;
                let m = dto.weights.len();
                if dto.scaler_mean.len() != m || dto.scaler_sd.len() != m || m < dto.feature_set.len() {
                    return Err(corrupt("fusion weights and scaler lengths disagree"));
                }
                Ok(Self::Fusion(FusionClassifier {
                    feature_set: dto.feature_set,
                    weights: dto.weights,
                    bias: dto.bias,
                    threshold: dto.threshold,
                    scaler: Standardizer {
                        mean: dto.scaler_mean,
                        sd: dto.scaler_sd,
                    },
                    loss: dto.loss,
                }))
            }
            other => Err(corrupt(format!("unknown model kind '{other}'"))),
        }
    }

    pub fn into_expectation(self) -> Option<ExpectationModel> {
        match self {
            Self::Expectation(m) => Some(m),
            Self::Fusion(_) => None,
        }
    }

    pub fn into_fusion(self) -> Option<FusionClassifier> {
        match self {
            Self::Fusion(c) => Some(c),
            Self::Expectation(_) => None,
        }
    }
}

fn expectation_from_dto(dto: ExpectationDto) -> Result<ExpectationModel, DatasetError> {
    let mut bases = Vec::with_capacity(dto.bases.len());
    for b in dto.bases {
        let components = b.components.into_matrix()?;
        if components.ncols() != b.mean.len() || components.nrows() != b.explained_variance.len() {
            return Err(corrupt(format!("basis for channel {} has inconsistent shapes", b.channel)));
        }
        bases.push((
            b.channel,
            PcaBasis {
                mean: DVector::from_vec(b.mean),
                components,
                explained_variance: b.explained_variance,
            },
        ));
    }
    let channels: Vec<ChannelId> = bases.iter().map(|(c, _)| *c).collect();
    if channels != dto.spec.channels.channels() {
        return Err(corrupt("bases do not match the spec channels"));
    }
    let p: usize = bases.iter().map(|(_, b)| b.k()).sum();
    if dto.weights.len() != p || dto.scaler_mean.len() != p || dto.scaler_sd.len() != p {
        return Err(corrupt(format!("expected {p} regression inputs")));
    }
    Ok(ExpectationModel {
        spec: dto.spec,
        bases,
        scaler: Standardizer {
            mean: dto.scaler_mean,
            sd: dto.scaler_sd,
        },
        regression: RegressionModel {
            weights: dto.weights,
            intercept: dto.intercept,
            input_dim: p,
        },
        training_scene_ids: dto.training_scene_ids,
    })
}

/// Writes `{ format, version, kind, payload }` JSON. Floats are written in
/// shortest round-trip form, so reloading reproduces predictions exactly.
pub fn save_model(path: &Path, model: &SavedModel) -> Result<(), DatasetError> {
    write_text(path, &model.to_json())
}

pub fn load_model(path: &Path) -> Result<SavedModel, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    SavedModel::from_json(&text)
}
