use serde::{Deserialize, Serialize};

use super::FusionError;
use crate::dataset::PresenceMatrix;

/// `|p(object | anchor) - p(object)|` over the scenes of a presence matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationIndex {
    pub object: String,
    pub anchor: String,
    pub value: f64,
}

fn column(presence: &PresenceMatrix, label: &str) -> Result<Vec<bool>, FusionError> {
    presence
        .column(label)
        .ok_or_else(|| FusionError::UnknownLabel(label.to_string()))
}

pub fn association_index(presence: &PresenceMatrix, object: &str, anchor: &str) -> Result<AssociationIndex, FusionError> {
    let o = column(presence, object)?;
    let a = column(presence, anchor)?;
    let n_anchor = a.iter().filter(|&&v| v).count();
    if n_anchor == 0 {
        return Err(FusionError::EmptyAnchor(anchor.to_string()));
    }
    let joint = o.iter().zip(&a).filter(|(o, a)| **o && **a).count();
    let n_object = o.iter().filter(|&&v| v).count();
    let value = (joint as f64 / n_anchor as f64 - n_object as f64 / o.len() as f64).abs();
    Ok(AssociationIndex {
        object: object.to_string(),
        anchor: anchor.to_string(),
        value,
    })
}

/// Mean association of `object` over several anchors.
pub fn averaged_association(presence: &PresenceMatrix, object: &str, anchors: &[&str]) -> Result<f64, FusionError> {
    if anchors.is_empty() {
        return Err(FusionError::InvalidConfig("no anchors".into()));
    }
    let mut total = 0.0;
    for anchor in anchors {
        total += association_index(presence, object, anchor)?.value;
    }
    Ok(total / anchors.len() as f64)
}
