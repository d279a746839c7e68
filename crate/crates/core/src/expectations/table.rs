use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::model::effective_k;
use super::{compare_models, evaluate_specs, ExpectationData, ExpectationError, ModelSpec, SignificanceFlag, SplitConfig};
use crate::dataset::{Category, ChannelId, ChannelSet, RatingDimension};
use crate::numerics::{split_half_ceiling, NumericsError, RatingMatrix};

/// Settings for a full spec table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub specs: Vec<ChannelSet>,
    pub pca_dims: usize,
    pub ridge: f64,
    pub standardize: bool,
    pub split: SplitConfig,
    pub ceiling_resamples: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            specs: ChannelSet::ALL.to_vec(),
            pca_dims: ModelSpec::DEFAULT_PCA_DIMS,
            ridge: 0.0,
            standardize: true,
            split: SplitConfig::default(),
            ceiling_resamples: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CeilingSummary {
    pub mean: f64,
    pub sd: f64,
    pub split_half_r: f64,
    pub corrected_rc: f64,
    pub n_resamples: usize,
    pub resampling: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecRow {
    pub spec: ChannelSet,
    pub mean: f64,
    pub sd: f64,
    /// Fraction of splits beating the best spec; absent on the best row.
    pub p_frac: Option<f64>,
    pub flag: Option<SignificanceFlag>,
    pub best: bool,
}

/// Ceiling plus one row per spec for a category and rating dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecTable {
    pub category: Category,
    pub dimension: RatingDimension,
    pub n_scenes: usize,
    pub effective_k: BTreeMap<ChannelId, usize>,
    pub ceiling: Option<CeilingSummary>,
    pub rows: Vec<SpecRow>,
    pub best: ChannelSet,
}

/// Evaluates every configured spec on shared splits and compares each with
/// the best one. `ratings` supplies per-subject values for the ceiling; with
/// fewer than two subjects the ceiling is reported absent.
pub fn evaluate_all_specs(
    data: &ExpectationData,
    ratings: Option<&RatingMatrix>,
    config: &EvalConfig,
) -> Result<SpecTable, ExpectationError> {
    if config.specs.is_empty() {
        return Err(ExpectationError::InvalidConfig("no specs to evaluate".into()));
    }
    let specs: Vec<ModelSpec> = config
        .specs
        .iter()
        .map(|&channels| {
            ModelSpec::new(channels, data.category.clone(), data.dimension)
                .with_pca_dims(config.pca_dims)
                .with_ridge(config.ridge)
                .with_standardize(config.standardize)
        })
        .collect();
    let dists = evaluate_specs(data, &specs, &config.split)?;
    let best = dists
        .iter()
        .enumerate()
        .fold(0, |b, (i, d)| if d.mean > dists[b].mean { i } else { b });

    let mut rows = Vec::with_capacity(dists.len());
    for (i, d) in dists.iter().enumerate() {
        let (p_frac, flag) = if i == best {
            (None, None)
        } else {
            let c = compare_models(d, &dists[best])?;
            (Some(c.p_frac), Some(c.flag))
        };
        rows.push(SpecRow {
            spec: d.spec.channels,
            mean: d.mean,
            sd: d.sd,
            p_frac,
            flag,
            best: i == best,
        });
    }

    let ceiling = match ratings {
        None => None,
        Some(m) => match split_half_ceiling(m, config.ceiling_resamples, config.split.seed) {
            Ok(e) => Some(CeilingSummary {
                mean: e.mean,
                sd: e.sd,
                split_half_r: e.split_half_r,
                corrected_rc: e.corrected_rc,
                n_resamples: e.n_resamples,
                resampling: "random subject halves without replacement".into(),
            }),
            Err(NumericsError::TooFewSubjects(_)) => None,
            Err(e) => return Err(e.into()),
        },
    };

    let n_train = dists[0].stream.n_train;
    let basis_rows = match config.split.pca_scope {
        super::PcaScope::PerFold => n_train,
        super::PcaScope::Global => data.len(),
    };
    let effective_k = data
        .channels
        .iter()
        .filter(|(c, _)| config.specs.iter().any(|s| s.contains(**c)))
        .map(|(c, m)| (*c, effective_k(config.pca_dims, basis_rows, m.ncols())))
        .collect();

    Ok(SpecTable {
        category: data.category.clone(),
        dimension: data.dimension,
        n_scenes: data.len(),
        effective_k,
        ceiling,
        rows,
        best: dists[best].spec.channels,
    })
}

impl SpecTable {
    pub fn row(&self, spec: ChannelSet) -> Option<&SpecRow> {
        self.rows.iter().find(|r| r.spec == spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec table serializes")
    }

    /// `row,mean,sd,p_frac,flag,best`; the ceiling row is first and marked
    /// `absent` when unavailable.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut write = |fields: [String; 6]| w.write_record(&fields).expect("in-memory csv");
        write(["row", "mean", "sd", "p_frac", "flag", "best"].map(String::from));
        match &self.ceiling {
            Some(c) => write(["Ceil".into(), c.mean.to_string(), c.sd.to_string(), String::new(), String::new(), String::new()]),
            None => write(["Ceil".into(), String::new(), String::new(), String::new(), "absent".into(), String::new()]),
        }
        for r in &self.rows {
            write([
                r.spec.label(),
                r.mean.to_string(),
                r.sd.to_string(),
                r.p_frac.map(|p| p.to_string()).unwrap_or_default(),
                r.flag.map(|f| f.symbol().to_string()).unwrap_or_default(),
                if r.best { "best".into() } else { String::new() },
            ]);
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf8 csv")
    }
}
