use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::dataset::{Category, ChannelId, ChannelSet};

/// Nontarget labels with their occurrence counts in the reference scene set.
pub const NONTARGET_LABELS: [(&str, usize); 36] = [
    ("window", 332),
    ("tree", 327),
    ("pole", 267),
    ("door", 160),
    ("fence", 149),
    ("sign", 147),
    ("roof", 147),
    ("text", 103),
    ("lamppost", 90),
    ("glass", 82),
    ("cable", 80),
    ("stripe", 58),
    ("box", 56),
    ("bush", 47),
    ("stair", 45),
    ("bench", 42),
    ("rock", 41),
    ("dustbin", 36),
    ("flower-pot", 35),
    ("lamp", 29),
    ("flower", 26),
    ("chair", 26),
    ("entrance", 23),
    ("cycle", 22),
    ("table", 20),
    ("boat", 19),
    ("statue", 17),
    ("hydrant", 8),
    ("flag", 8),
    ("wheel", 7),
    ("animal", 7),
    ("cone", 6),
    ("bird", 6),
    ("manhole-cover", 5),
    ("cloud", 5),
    ("bag", 2),
];

/// Size of the reference scene set the label counts refer to.
pub const REFERENCE_SCENE_COUNT: usize = 650;

pub const SCENE_CATEGORIES: [&str; 41] = [
    "airport terminal",
    "beach",
    "botanical garden",
    "bridge",
    "coast",
    "forest road",
    "orchard",
    "bamboo forest",
    "bus station",
    "cottage garden",
    "driveway",
    "forest",
    "forest path",
    "highway",
    "hill",
    "mountain",
    "mountain path",
    "mountain road",
    "park",
    "parking lot",
    "picnic area",
    "playground",
    "rainforest",
    "residential neighbourhood",
    "river",
    "runway",
    "shipyard",
    "ski lodge",
    "ski resort",
    "stage",
    "taxiway",
    "train station",
    "tundra",
    "valley",
    "vegetable garden",
    "village",
    "waterfall",
    "wheat field",
    "woodland",
    "workroom",
    "parade ground",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelDims {
    pub target: usize,
    pub nontarget: usize,
    pub coarse: usize,
}

impl Default for ChannelDims {
    fn default() -> Self {
        Self {
            target: 62,
            nontarget: 36,
            coarse: 532,
        }
    }
}

impl ChannelDims {
    pub fn of(&self, channel: ChannelId) -> usize {
        match channel {
            ChannelId::Target => self.target,
            ChannelId::Nontarget => self.nontarget,
            ChannelId::Coarse => self.coarse,
        }
    }
}

/// Detector score model: `signal * truth + noise_sd * N(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorModel {
    pub id: String,
    pub signal: f64,
    pub noise_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionConfig {
    /// Must be even; half the scenes contain each target.
    pub n_scenes: usize,
    pub targets: Vec<Category>,
    pub detectors: Vec<DetectorModel>,
    /// Separation (d') of target-present and target-absent scenes along the
    /// coarse-feature part of the target's planted likelihood signal.
    pub context_weight: f64,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            n_scenes: 2000,
            targets: vec![Category::car(), Category::person()],
            detectors: vec![DetectorModel {
                id: "cnn".into(),
                signal: 1.0,
                noise_sd: 0.524,
            }],
            context_weight: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_scenes: usize,
    pub dims: ChannelDims,
    /// Latent factors per channel; planted signals live in their span.
    pub latent_factors: usize,
    pub feature_noise: f64,
    /// Channels whose features drive the planted ratings.
    pub generating: ChannelSet,
    /// Scene-level noise added to the planted signal (unit variance) before
    /// subject noise; shared by all subjects.
    pub noise_sd: f64,
    /// Expected Spearman-Brown corrected split-half reliability.
    pub reliability: f64,
    pub n_subjects: usize,
    pub categories: Vec<Category>,
    /// Correlation between the nontarget likelihood weights of the first two
    /// categories.
    pub nontarget_weight_correlation: f64,
    /// Smallest PCA dimension the channels must support.
    pub pca_dims: usize,
    pub detection: DetectionConfig,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_scenes: REFERENCE_SCENE_COUNT,
            dims: ChannelDims::default(),
            latent_factors: 8,
            feature_noise: 0.5,
            generating: ChannelSet::NC,
            noise_sd: 0.5,
            reliability: 0.9,
            n_subjects: 11,
            categories: vec![Category::car(), Category::person()],
            nontarget_weight_correlation: -0.3,
            pca_dims: 20,
            detection: DetectionConfig::default(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |m: String| Err(SynthError::InvalidConfig(m));
        if self.n_scenes < 3 {
            return fail(format!("n_scenes must be at least 3, got {}", self.n_scenes));
        }
        for c in ChannelId::ALL {
            let d = self.dims.of(c);
            if d < self.pca_dims || d < self.latent_factors {
                return fail(format!(
                    "channel {c} dimension {d} is below pca_dims {} or latent_factors {}",
                    self.pca_dims, self.latent_factors
                ));
            }
        }
        if self.latent_factors == 0 || self.latent_factors >= self.n_scenes {
            return fail(format!("latent_factors must lie in [1, n_scenes), got {}", self.latent_factors));
        }
        if self.generating.is_empty() {
            return fail("generating channel subset is empty".into());
        }
        if !(self.reliability > 0.0 && self.reliability <= 1.0) {
            return fail(format!("reliability must lie in (0, 1], got {}", self.reliability));
        }
        if !(self.noise_sd >= 0.0 && self.feature_noise >= 0.0) {
            return fail("noise sds must be >= 0".into());
        }
        if self.n_subjects == 0 {
            return fail("n_subjects must be at least 1".into());
        }
        if self.categories.is_empty() {
            return fail("no categories".into());
        }
        if !(-1.0..=1.0).contains(&self.nontarget_weight_correlation) {
            return fail("nontarget_weight_correlation must lie in [-1, 1]".into());
        }
        let det = &self.detection;
        if !det.n_scenes.is_multiple_of(2) {
            return fail(format!("detection n_scenes must be even, got {}", det.n_scenes));
        }
        if !(det.context_weight >= 0.0) {
            return fail("context_weight must be >= 0".into());
        }
        if det.context_weight > 0.0 && !self.generating.contains(ChannelId::Coarse) {
            return fail("a context signal needs the coarse channel among the generating channels".into());
        }
        if let Some(t) = det.targets.iter().find(|t| !self.categories.contains(t)) {
            return fail(format!("detection target '{t}' is not a rated category"));
        }
        if det.detectors.iter().any(|d| !(d.noise_sd >= 0.0) || !d.signal.is_finite()) {
            return fail("detector noise_sd must be >= 0 and signal finite".into());
        }
        Ok(())
    }

    /// Nontarget vocabulary; the reference labels when the dimension matches.
    pub fn vocabulary(&self) -> Vec<String> {
        (0..self.dims.nontarget)
            .map(|j| match NONTARGET_LABELS.get(j) {
                Some((label, _)) => (*label).to_string(),
                None => format!("object{j}"),
            })
            .collect()
    }

    /// Presence probability of nontarget label `j`.
    pub(crate) fn prevalence(&self, j: usize) -> f64 {
        let (_, count) = NONTARGET_LABELS[j % NONTARGET_LABELS.len()];
        count as f64 / REFERENCE_SCENE_COUNT as f64
    }
}
