use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::FusionError;
use crate::numerics::{pearson, NumericsError};
use crate::rng::{stream_rng, Stream};

/// Per-category inputs to the transfer analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferInput {
    pub category: String,
    /// Augmented minus baseline accuracy.
    pub benefit: f64,
    pub association: f64,
    pub baseline_accuracy: f64,
}

/// Pearson correlation with a two-sided permutation p-value. Both are
/// absent when either input is constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTest {
    pub r: Option<f64>,
    pub p_value: Option<f64>,
    pub n_permutations: usize,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub categories: Vec<String>,
    pub benefit_vs_association: CorrelationTest,
    pub benefit_vs_baseline: CorrelationTest,
}

fn permutation_test(x: &[f64], y: &[f64], n_permutations: usize, seed: u64, stream: u64) -> Result<CorrelationTest, FusionError> {
    let r = match pearson(x, y) {
        Ok(r) => r,
        Err(NumericsError::ConstantInput) => {
            return Ok(CorrelationTest {
                r: None,
                p_value: None,
                n_permutations,
                note: Some("undefined: constant input".into()),
            })
        }
        Err(e) => return Err(e.into()),
    };
    let mut rng = stream_rng(seed, Stream::Permutation, stream);
    let mut shuffled = x.to_vec();
    let mut extreme = 0usize;
    for _ in 0..n_permutations {
        shuffled.shuffle(&mut rng);
        if pearson(&shuffled, y)?.abs() >= r.abs() - 1e-12 {
            extreme += 1;
        }
    }
    Ok(CorrelationTest {
        r: Some(r),
        p_value: Some((extreme + 1) as f64 / (n_permutations + 1) as f64),
        n_permutations,
        note: None,
    })
}

/// Correlates augmentation benefit with association index and with baseline
/// accuracy across categories.
pub fn transfer_analysis(inputs: &[TransferInput], n_permutations: usize, seed: u64) -> Result<TransferReport, FusionError> {
    if inputs.len() < 3 {
        return Err(NumericsError::InvalidShape(format!(
            "transfer analysis needs at least 3 categories, got {}",
            inputs.len()
        ))
        .into());
    }
    let benefit: Vec<f64> = inputs.iter().map(|i| i.benefit).collect();
    let association: Vec<f64> = inputs.iter().map(|i| i.association).collect();
    let baseline: Vec<f64> = inputs.iter().map(|i| i.baseline_accuracy).collect();
    Ok(TransferReport {
        categories: inputs.iter().map(|i| i.category.clone()).collect(),
        benefit_vs_association: permutation_test(&benefit, &association, n_permutations, seed, 0)?,
        benefit_vs_baseline: permutation_test(&benefit, &baseline, n_permutations, seed, 1)?,
    })
}
