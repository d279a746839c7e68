use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{FusionClassifier, FusionError};

/// Miss and false-alarm counts at the operating threshold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBreakdown {
    pub hits: usize,
    pub misses: usize,
    pub false_alarms: usize,
    pub correct_rejections: usize,
    pub decisions: Vec<bool>,
}

impl ErrorBreakdown {
    pub fn from_decisions(decisions: Vec<bool>, labels: &[bool]) -> Result<Self, FusionError> {
        if decisions.len() != labels.len() {
            return Err(FusionError::DimensionMismatch {
                expected: labels.len(),
                found: decisions.len(),
            });
        }
        let mut b = Self {
            hits: 0,
            misses: 0,
            false_alarms: 0,
            correct_rejections: 0,
            decisions,
        };
        for (&d, &l) in b.decisions.iter().zip(labels) {
            match (l, d) {
                (true, true) => b.hits += 1,
                (true, false) => b.misses += 1,
                (false, true) => b.false_alarms += 1,
                (false, false) => b.correct_rejections += 1,
            }
        }
        Ok(b)
    }

    pub fn accuracy(&self) -> f64 {
        (self.hits + self.correct_rejections) as f64 / self.decisions.len().max(1) as f64
    }
}

pub fn error_breakdown(
    classifier: &FusionClassifier,
    features: &DMatrix<f64>,
    labels: &[bool],
) -> Result<ErrorBreakdown, FusionError> {
    ErrorBreakdown::from_decisions(classifier.decide(features)?, labels)
}
