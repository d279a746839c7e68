use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::CliError;
use crate::dataset::{Category, ChannelId, ChannelSet, DatasetPaths, RatingDimension, SchemaConfig};
use crate::expectations::{EvalConfig, ModelSpec, PcaScope, SplitConfig};
use crate::fusion::{LossKind, TrainConfig};
use crate::synth::SynthConfig;

/// Input files. Relative paths are resolved against the config file's
/// directory; when the whole section is absent the files written by
/// `synth` into `<out>/data` are used.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub features: BTreeMap<ChannelId, PathBuf>,
    pub scenes: Option<PathBuf>,
    pub ratings: Option<PathBuf>,
    pub scores: Option<PathBuf>,
    pub presence: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpectationSection {
    pub categories: Vec<Category>,
    pub dimensions: Vec<RatingDimension>,
    /// Specs fitted and saved by `fit`.
    pub fit_specs: Vec<ChannelSet>,
    /// Specs compared by `evaluate`.
    pub eval_specs: Vec<ChannelSet>,
    pub pca_dims: usize,
    pub pca_scope: PcaScope,
    pub n_splits: usize,
    pub train_frac: f64,
    pub k_folds: usize,
    pub ridge: f64,
    pub standardize: bool,
    pub ceiling_resamples: usize,
}

impl Default for ExpectationSection {
    fn default() -> Self {
        Self {
            categories: vec![Category::car(), Category::person()],
            dimensions: RatingDimension::ALL.to_vec(),
            fit_specs: vec![ChannelSet::NC, ChannelSet::C],
            eval_specs: ChannelSet::ALL.to_vec(),
            pca_dims: ModelSpec::DEFAULT_PCA_DIMS,
            pca_scope: PcaScope::PerFold,
            n_splits: 1000,
            train_frac: 0.8,
            k_folds: 5,
            ridge: 0.0,
            standardize: true,
            ceiling_resamples: 1000,
        }
    }
}

/// A named subset of detection scenes selected by scene category; an empty
/// list keeps every scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSet {
    pub name: String,
    #[serde(default)]
    pub scene_categories: Vec<String>,
}

/// A fusion feature set: expectation dimensions per rating category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSetSpec {
    pub name: String,
    /// Rating categories whose expectations are added; `"target"` stands
    /// for the detection target.
    pub categories: Vec<String>,
    pub dimensions: Vec<RatingDimension>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionSection {
    /// Detectors to augment; all detectors in the score file when empty.
    pub detectors: Vec<String>,
    pub targets: Vec<Category>,
    /// Channel subset of the expectation models used as fusion inputs.
    pub context_spec: ChannelSet,
    pub feature_sets: Vec<FeatureSetSpec>,
    pub scene_sets: Vec<SceneSet>,
    pub k_folds: usize,
    pub lambda: f64,
    pub loss: LossKind,
    pub balance: bool,
}

impl Default for FusionSection {
    fn default() -> Self {
        Self {
            detectors: Vec::new(),
            targets: vec![Category::car(), Category::person()],
            context_spec: ChannelSet::C,
            feature_sets: vec![
                FeatureSetSpec {
                    name: "lklhd".into(),
                    categories: vec!["target".into()],
                    dimensions: vec![RatingDimension::Likelihood],
                },
                FeatureSetSpec {
                    name: "lklhd+yloc+scale".into(),
                    categories: vec!["target".into()],
                    dimensions: vec![RatingDimension::Likelihood, RatingDimension::YPos, RatingDimension::Scale],
                },
                FeatureSetSpec {
                    name: "all".into(),
                    categories: vec!["car".into(), "person".into()],
                    dimensions: RatingDimension::ALL.to_vec(),
                },
            ],
            scene_sets: vec![SceneSet {
                name: "all".into(),
                scene_categories: Vec::new(),
            }],
            k_folds: 5,
            lambda: 1.0,
            loss: LossKind::Logistic,
            balance: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    /// Formats of tabular reports. Models and provenance are always JSON.
    pub formats: Vec<ReportFormat>,
    /// Spec of the likelihood models whose nontarget weights are compared.
    pub weights_spec: ChannelSet,
    /// Anchor categories of the association index.
    pub anchors: Vec<String>,
    pub transfer_detector: Option<String>,
    pub transfer_scene_set: String,
    pub transfer_feature_set: String,
    pub n_permutations: usize,
}

impl Default for ReportSection {
    fn default() -> Self {
        Self {
            formats: vec![ReportFormat::Json, ReportFormat::Csv],
            weights_spec: ChannelSet::NC,
            anchors: vec!["car".into(), "person".into()],
            transfer_detector: None,
            transfer_scene_set: "all".into(),
            transfer_feature_set: "all".into(),
            n_permutations: 10_000,
        }
    }
}

/// Whole run configuration, as written in the TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub data: Option<DataSection>,
    #[serde(default)]
    pub schema: SchemaConfig,
    #[serde(default)]
    pub expectations: ExpectationSection,
    #[serde(default)]
    pub fusion: FusionSection,
    #[serde(default)]
    pub synth: SynthConfig,
    #[serde(default)]
    pub report: ReportSection,
}

/// Config plus the locations it refers to.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub out: PathBuf,
    pub data: DatasetPaths,
    pub presence: Option<PathBuf>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Applies flag overrides and resolves paths against `base`.
    pub fn resolve(mut self, base: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<Resolved, CliError> {
        if let Some(seed) = seed {
            self.seed = seed;
        }
        self.synth.seed = self.seed;
        let out = match out.or_else(|| self.out.as_ref().map(|o| base.join(o))) {
            Some(o) => o,
            None => base.join("out"),
        };
        self.out = None;
        let (data, presence) = match &self.data {
            Some(d) => {
                let paths = DatasetPaths {
                    features: d.features.clone(),
                    scenes: d.scenes.clone(),
                    ratings: d.ratings.clone(),
                    scores: d.scores.clone(),
                }
                .resolved(base);
                (paths, d.presence.as_ref().map(|p| base.join(p)))
            }
            None => {
                let dir = out.join("data");
                let features = ChannelId::ALL
                    .into_iter()
                    .map(|c| (c, dir.join(format!("features_{}.csv", c.letter()))))
                    .collect();
                (
                    DatasetPaths {
                        features,
                        scenes: Some(dir.join("scenes.csv")),
                        ratings: Some(dir.join("ratings.csv")),
                        scores: Some(dir.join("scores.csv")),
                    },
                    Some(dir.join("presence.json")),
                )
            }
        };
        self.validate()?;
        Ok(Resolved {
            config: self,
            out,
            data,
            presence,
        })
    }

    fn validate(&self) -> Result<(), CliError> {
        let e = &self.expectations;
        let fail = |m: &str| Err(CliError::Config(m.into()));
        if e.categories.is_empty() || e.dimensions.is_empty() {
            return fail("expectations.categories and expectations.dimensions must be nonempty");
        }
        if e.pca_dims == 0 {
            return fail("expectations.pca_dims must be at least 1");
        }
        if e.k_folds < 2 || self.fusion.k_folds < 2 {
            return fail("k_folds must be at least 2");
        }
        if !(e.train_frac > 0.0 && e.train_frac < 1.0) {
            return fail("expectations.train_frac must lie in (0, 1)");
        }
        if e.n_splits == 0 {
            return fail("expectations.n_splits must be at least 1");
        }
        Ok(())
    }
}

impl ReportSection {
    pub fn json(&self) -> bool {
        self.formats.contains(&ReportFormat::Json)
    }

    pub fn csv(&self) -> bool {
        self.formats.contains(&ReportFormat::Csv)
    }
}

impl ExpectationSection {
    pub fn spec(&self, channels: ChannelSet, category: &Category, dimension: RatingDimension) -> ModelSpec {
        ModelSpec::new(channels, category.clone(), dimension)
            .with_pca_dims(self.pca_dims)
            .with_ridge(self.ridge)
            .with_standardize(self.standardize)
    }

    pub fn eval_config(&self, seed: u64) -> EvalConfig {
        EvalConfig {
            specs: self.eval_specs.clone(),
            pca_dims: self.pca_dims,
            ridge: self.ridge,
            standardize: self.standardize,
            split: SplitConfig {
                n_splits: self.n_splits,
                train_frac: self.train_frac,
                seed,
                pca_scope: self.pca_scope,
            },
            ceiling_resamples: self.ceiling_resamples,
        }
    }
}

impl FusionSection {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            k_folds: self.k_folds,
            seed,
            lambda: self.lambda,
            loss: self.loss,
            ..TrainConfig::default()
        }
    }
}
