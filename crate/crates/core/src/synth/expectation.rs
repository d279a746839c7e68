use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use super::calibrate::{expected_model_r, expected_split_half, subject_noise_for_reliability};
use super::world::{normal, World};
use super::{SynthConfig, SynthError};
use crate::dataset::{
    aggregate_ratings, Category, ChannelId, ChannelSet, Frame, PixelBox, RatingAggregate, RatingDimension, RawRating,
    SceneRecord, SliderRange,
};
use crate::rng::{stream_rng, Stream};

/// Planted linear signal and its noisy human mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSignal {
    pub category: Category,
    pub dimension: RatingDimension,
    /// Raw-feature weights per generating channel; `latent = x . w + intercept`.
    pub weights: BTreeMap<ChannelId, Vec<f64>>,
    pub intercept: f64,
    /// Unit-variance planted signal per scene.
    pub latent: Vec<f64>,
    /// Signal plus scene-level noise; subjects scatter around this.
    pub human_mean: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedTruth {
    pub seed: u64,
    pub generating: ChannelSet,
    pub reliability: f64,
    pub noise_sd: f64,
    pub subject_noise_sd: f64,
    pub n_subjects: usize,
    pub expected_split_half_r: f64,
    /// Expected correlation of the planted signal with mean ratings.
    pub expected_model_r: f64,
    pub vocabulary: Vec<String>,
    pub scene_ids: Vec<String>,
    pub signals: Vec<PlantedSignal>,
    /// Scene id to `category:dimension` entries where some subject's
    /// geometry hit a clamp.
    pub clamped: BTreeMap<String, BTreeSet<String>>,
}

impl PlantedTruth {
    pub fn signal(&self, category: &Category, dimension: RatingDimension) -> Option<&PlantedSignal> {
        self.signals
            .iter()
            .find(|s| &s.category == category && s.dimension == dimension)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationSynth {
    pub scenes: Vec<SceneRecord>,
    pub ratings: Vec<RawRating>,
    pub aggregates: Vec<RatingAggregate>,
    pub truth: PlantedTruth,
}

/// Slider value of a subject's likelihood draw.
const LIKELIHOOD_CENTER: f64 = 50.0;
const LIKELIHOOD_GAIN: f64 = 12.0;

fn clamp(v: f64, lo: f64, hi: f64, hit: &mut bool) -> f64 {
    if v < lo || v > hi {
        *hit = true;
    }
    v.clamp(lo, hi)
}

/// Box from geometry draws; returns the box and the clamped dimensions.
fn draw_box(v: &[f64; 4], frame: &Frame) -> (PixelBox, [bool; 4]) {
    let (fw, fh) = (frame.width_px, frame.height_px);
    let mut hit = [false; 4];
    let area = clamp(0.06 + 0.015 * v[2], 0.005, 0.3, &mut hit[2]);
    let aspect = clamp(1.5 + 0.2 * v[3], 0.3, 4.0, &mut hit[3]);
    let mut w = (area * fw * fh / aspect).sqrt();
    let mut h = aspect * w;
    if w > fw || h > fh {
        let shrink = (fw / w).min(fh / h);
        w *= shrink;
        h *= shrink;
        hit[2] = true;
    }
    let cx = clamp((0.5 + 0.1 * v[0]) * fw, w / 2.0, fw - w / 2.0, &mut hit[0]);
    let cy = clamp((0.5 + 0.1 * v[1]) * fh, h / 2.0, fh - h / 2.0, &mut hit[1]);
    let b = PixelBox {
        x: (cx - w / 2.0).max(0.0),
        y: (cy - h / 2.0).max(0.0),
        w,
        h,
    };
    (b, hit)
}

/// Scenes, per-subject ratings and their aggregates drawn from the planted
/// world. Each subject rates every scene for every category.
pub fn generate_expectation_dataset(config: &SynthConfig) -> Result<ExpectationSynth, SynthError> {
    let world = World::new(config)?;
    let n = config.n_scenes;
    let var_h = 1.0 + config.noise_sd * config.noise_sd;
    let sigma = subject_noise_for_reliability(config.reliability, config.n_subjects, var_h)?;

    let signals: Vec<PlantedSignal> = world
        .signals
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let mut rng = stream_rng(config.seed, Stream::Noise, k as u64);
            PlantedSignal {
                category: s.category.clone(),
                dimension: s.dimension,
                weights: s.weights.iter().map(|(c, w)| (*c, w.iter().copied().collect())).collect(),
                intercept: s.intercept,
                latent: s.latent.clone(),
                human_mean: s.latent.iter().map(|v| v + config.noise_sd * normal(&mut rng)).collect(),
            }
        })
        .collect();

    let frame = Frame::default();
    let width = config.n_subjects.to_string().len().max(2);
    let subjects: Vec<String> = (1..=config.n_subjects).map(|j| format!("s{j:0width$}")).collect();
    let mut ratings = Vec::with_capacity(n * config.categories.len() * config.n_subjects);
    let mut clamped: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (i, scene) in world.scenes.iter().enumerate() {
        let mut rng = stream_rng(config.seed, Stream::SynthRatings, i as u64);
        for category in &config.categories {
            let h: Vec<f64> = RatingDimension::ALL
                .iter()
                .map(|d| {
                    signals
                        .iter()
                        .find(|s| &s.category == category && s.dimension == *d)
                        .expect("signal per category and dimension")
                        .human_mean[i]
                })
                .collect();
            for subject in &subjects {
                let v: Vec<f64> = h.iter().map(|m| m + sigma * normal(&mut rng)).collect();
                let mut lik_hit = false;
                let raw = clamp(LIKELIHOOD_CENTER + LIKELIHOOD_GAIN * v[0], 0.0, 100.0, &mut lik_hit);
                let mut notes = Vec::new();
                if lik_hit {
                    notes.push(RatingDimension::Likelihood);
                }
                let bbox = (raw > 0.0).then(|| {
                    let (b, hit) = draw_box(&[v[1], v[2], v[3], v[4]], &frame);
                    for (k, d) in RatingDimension::ALL[1..].iter().enumerate() {
                        if hit[k] {
                            notes.push(*d);
                        }
                    }
                    b
                });
                for d in notes {
                    clamped
                        .entry(scene.scene_id.clone())
                        .or_default()
                        .insert(format!("{category}:{d}"));
                }
                ratings.push(RawRating {
                    subject_id: subject.clone(),
                    scene_id: scene.scene_id.clone(),
                    category: category.clone(),
                    likelihood_raw: raw,
                    bbox,
                });
            }
        }
    }
    let aggregates = aggregate_ratings(&ratings, &frame, &SliderRange::default())
        .map_err(|e| SynthError::InvalidConfig(e.to_string()))?;

    let (m1, m2) = (config.n_subjects / 2, config.n_subjects - config.n_subjects / 2);
    let truth = PlantedTruth {
        seed: config.seed,
        generating: config.generating,
        reliability: config.reliability,
        noise_sd: config.noise_sd,
        subject_noise_sd: sigma,
        n_subjects: config.n_subjects,
        expected_split_half_r: if m1 > 0 { expected_split_half(var_h, sigma, m1, m2) } else { f64::NAN },
        expected_model_r: expected_model_r(config.noise_sd, sigma, config.n_subjects),
        vocabulary: config.vocabulary(),
        scene_ids: world.scenes.iter().map(|s| s.scene_id.clone()).collect(),
        signals,
        clamped,
    };
    Ok(ExpectationSynth {
        scenes: world.scenes,
        ratings,
        aggregates,
        truth,
    })
}
