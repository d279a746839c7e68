use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::calibrate::gaussian_discriminant_accuracy;
use super::world::{normal, scene_category, World};
use super::{SynthConfig, SynthError};
use crate::dataset::{Category, ChannelId, DetectorScore, RatingDimension, SceneRecord};
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorTruth {
    pub detector_id: String,
    pub target: Category,
    /// Optimal accuracy from the detector score alone.
    pub baseline_bayes: f64,
    /// Optimal accuracy from the score and the context signal together.
    pub augmented_bayes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionTruth {
    pub seed: u64,
    pub context_weight: f64,
    pub targets: Vec<Category>,
    pub detectors: Vec<DetectorTruth>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionSynth {
    /// Labelled scenes carrying only the coarse channel.
    pub scenes: Vec<SceneRecord>,
    pub scores: Vec<DetectorScore>,
    pub truth: DetectionTruth,
}

/// Labelled scenes whose coarse features are shifted, per target, along the
/// latent direction of that target's planted coarse likelihood signal so
/// present and absent scenes are separated by `context_weight` sds of it.
/// Detector scores are `signal * truth + noise_sd * N(0, 1)`, independent
/// of the features given the truth.
pub fn generate_detection_dataset(config: &SynthConfig) -> Result<DetectionSynth, SynthError> {
    let world = World::new(config)?;
    let det = &config.detection;
    let n = det.n_scenes;
    let r = config.latent_factors;
    let coarse = &world.models[&ChannelId::Coarse];

    let mut truths: Vec<Vec<bool>> = Vec::with_capacity(det.targets.len());
    let mut shifts = DMatrix::<f64>::zeros(n, r);
    for (t, target) in det.targets.iter().enumerate() {
        let mut y: Vec<bool> = (0..n).map(|i| i < n / 2).collect();
        y.shuffle(&mut stream_rng(config.seed, Stream::SynthDetection, t as u64));
        if det.context_weight > 0.0 {
            let signal = world
                .signal_for(target, RatingDimension::Likelihood)
                .expect("targets are validated against categories");
            let g = &coarse.loadings * &signal.weights[&ChannelId::Coarse];
            let step = g.transpose() * (det.context_weight * signal.channel_sd[&ChannelId::Coarse] / g.norm_squared());
            for (i, &present) in y.iter().enumerate() {
                let sign = if present { 0.5 } else { -0.5 };
                let mut row = shifts.row_mut(i);
                row += &step * sign;
            }
        }
        truths.push(y);
    }

    let mut rng = stream_rng(config.seed, Stream::SynthDetection, 1000);
    let z = DMatrix::from_fn(n, r, |_, _| normal(&mut rng)) + shifts;
    let x = coarse.features(&z, &mut rng);
    let width = n.to_string().len().max(5);
    let scenes: Vec<SceneRecord> = (0..n)
        .map(|i| {
            let mut s = SceneRecord::new(format!("det{:0width$}", i + 1), scene_category(&mut rng))
                .with_channel(ChannelId::Coarse, x.row(i).iter().copied().collect());
            for (t, target) in det.targets.iter().enumerate() {
                s = s.with_truth(target.clone(), truths[t][i]);
            }
            s
        })
        .collect();

    let mut scores = Vec::with_capacity(n * det.targets.len() * det.detectors.len());
    let mut detectors = Vec::new();
    for (k, d) in det.detectors.iter().enumerate() {
        for (t, target) in det.targets.iter().enumerate() {
            let mut rng = stream_rng(config.seed, Stream::SynthDetection, 2000 + (k * det.targets.len() + t) as u64);
            for (i, scene) in scenes.iter().enumerate() {
                let y = if truths[t][i] { 1.0 } else { 0.0 };
                scores.push(DetectorScore {
                    scene_id: scene.scene_id.clone(),
                    detector_id: d.id.clone(),
                    category: target.clone(),
                    confidence: d.signal * y + d.noise_sd * normal(&mut rng),
                });
            }
            let d_score = if d.noise_sd == 0.0 { f64::INFINITY } else { d.signal.abs() / d.noise_sd };
            detectors.push(DetectorTruth {
                detector_id: d.id.clone(),
                target: target.clone(),
                baseline_bayes: gaussian_discriminant_accuracy(d_score),
                augmented_bayes: gaussian_discriminant_accuracy(d_score.hypot(det.context_weight)),
            });
        }
    }

    Ok(DetectionSynth {
        scenes,
        scores,
        truth: DetectionTruth {
            seed: config.seed,
            context_weight: det.context_weight,
            targets: det.targets.clone(),
            detectors,
        },
    })
}
