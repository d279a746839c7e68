use serde::{Deserialize, Serialize};

use super::{ExpectationError, SplitDistribution};

/// Significance marker for the fraction of paired splits won.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignificanceFlag {
    /// Reliably worse than the reference: `p_frac < 0.001`.
    Worse,
    /// Indistinguishable from the reference: `p_frac > 0.05`.
    Equivalent,
    /// Neither; report the fraction itself.
    Intermediate,
}

impl SignificanceFlag {
    pub fn from_p_frac(p_frac: f64) -> Self {
        if p_frac < 0.001 {
            Self::Worse
        } else if p_frac > 0.05 {
            Self::Equivalent
        } else {
            Self::Intermediate
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Self::Worse => "*",
            Self::Equivalent => "#",
            Self::Intermediate => "",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    /// Fraction of splits on which `a` strictly beat `b`.
    pub p_frac: f64,
    pub flag: SignificanceFlag,
}

/// Paired comparison of two distributions computed on the same splits.
pub fn compare_models(a: &SplitDistribution, b: &SplitDistribution) -> Result<ModelComparison, ExpectationError> {
    if a.stream != b.stream || a.correlations.len() != b.correlations.len() || a.correlations.is_empty() {
        return Err(ExpectationError::UnpairedDistributions);
    }
    let wins = a
        .correlations
        .iter()
        .zip(&b.correlations)
        .filter(|(x, y)| x > y)
        .count();
    let p_frac = wins as f64 / a.correlations.len() as f64;
    Ok(ModelComparison {
        p_frac,
        flag: SignificanceFlag::from_p_frac(p_frac),
    })
}
