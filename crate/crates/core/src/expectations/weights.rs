use serde::{Deserialize, Serialize};

use super::{ExpectationError, ExpectationModel};
use crate::dataset::ChannelId;
use crate::numerics::{pearson, NumericsError};

const TOP_N: usize = 5;

/// Per-label regression weights of two models and their agreement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NontargetWeights {
    pub r: f64,
    pub labels: Vec<String>,
    pub weights_a: Vec<f64>,
    pub weights_b: Vec<f64>,
    pub top_positive_a: Vec<(String, f64)>,
    pub top_negative_a: Vec<(String, f64)>,
    pub top_positive_b: Vec<(String, f64)>,
    pub top_negative_b: Vec<(String, f64)>,
}

/// Regression weights on the Nontarget channel mapped back to label space:
/// `sum_j (b_j / sd_j) * component_j`.
pub fn label_weights(model: &ExpectationModel) -> Result<Vec<f64>, ExpectationError> {
    let mut offset = 0;
    for (channel, basis) in &model.bases {
        if *channel == ChannelId::Nontarget {
            let mut w = vec![0.0; basis.dim()];
            for j in 0..basis.k() {
                let coef = model.regression.weights[offset + j] / model.scaler.sd[offset + j];
                for (wi, ci) in w.iter_mut().zip(basis.components.row(j).iter()) {
                    *wi += coef * ci;
                }
            }
            return Ok(w);
        }
        offset += basis.k();
    }
    Err(ExpectationError::MissingChannel(ChannelId::Nontarget))
}

fn top(labels: &[String], w: &[f64], positive: bool) -> Vec<(String, f64)> {
    let mut pairs: Vec<(String, f64)> = labels.iter().cloned().zip(w.iter().copied()).collect();
    pairs.retain(|(_, v)| if positive { *v > 0.0 } else { *v < 0.0 });
    pairs.sort_by(|x, y| {
        let ord = x.1.total_cmp(&y.1);
        (if positive { ord.reverse() } else { ord }).then_with(|| x.0.cmp(&y.0))
    });
    pairs.truncate(TOP_N);
    pairs
}

/// Correlation between the per-label nontarget weights of two models.
pub fn nontarget_weight_correlation(
    a: &ExpectationModel,
    b: &ExpectationModel,
    vocabulary: &[String],
) -> Result<NontargetWeights, ExpectationError> {
    let (wa, wb) = (label_weights(a)?, label_weights(b)?);
    for w in [&wa, &wb] {
        if w.len() != vocabulary.len() {
            return Err(NumericsError::DimensionMismatch {
                expected: vocabulary.len(),
                found: w.len(),
            }
            .into());
        }
    }
    Ok(NontargetWeights {
        r: pearson(&wa, &wb)?,
        labels: vocabulary.to_vec(),
        top_positive_a: top(vocabulary, &wa, true),
        top_negative_a: top(vocabulary, &wa, false),
        top_positive_b: top(vocabulary, &wb, true),
        top_negative_b: top(vocabulary, &wb, false),
        weights_a: wa,
        weights_b: wb,
    })
}
