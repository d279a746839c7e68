use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};
use std::collections::BTreeMap;

use super::{SynthConfig, SynthError, SCENE_CATEGORIES};
use crate::dataset::{Category, ChannelId, RatingDimension, SceneRecord};
use crate::numerics::{sample_sd, PcaBasis};
use crate::rng::{stream_rng, Stream};

pub(crate) fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| normal(rng))
}

/// Generative model of one channel: `x = z L + noise`, thresholded at
/// per-label offsets for the binary nontarget channel.
pub(crate) struct ChannelModel {
    pub loadings: DMatrix<f64>,
    pub offsets: Option<Vec<f64>>,
    pub feature_noise: f64,
}

impl ChannelModel {
    fn new(config: &SynthConfig, channel: ChannelId, rng: &mut ChaCha8Rng) -> Self {
        let (r, d) = (config.latent_factors, config.dims.of(channel));
        // Orthonormal rows scaled by a decreasing spectrum.
        let q = normal_matrix(rng, d, r).qr().q();
        let base = (d as f64 / r as f64).sqrt() * 2.0;
        let mut loadings = q.transpose();
        for (j, mut row) in loadings.row_iter_mut().enumerate() {
            row *= base * (1.0 - 0.5 * j as f64 / r as f64);
        }
        let offsets = (channel == ChannelId::Nontarget).then(|| {
            let std = Normal::standard();
            (0..d)
                .map(|j| {
                    let var = loadings.column(j).norm_squared() + config.feature_noise.powi(2);
                    var.sqrt() * std.inverse_cdf(config.prevalence(j))
                })
                .collect()
        });
        Self {
            loadings,
            offsets,
            feature_noise: config.feature_noise,
        }
    }

    /// Features for latent rows `z` (n x r).
    pub fn features(&self, z: &DMatrix<f64>, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let mut x = z * &self.loadings;
        for v in x.iter_mut() {
            *v += self.feature_noise * normal(rng);
        }
        if let Some(offsets) = &self.offsets {
            for (j, mut col) in x.column_iter_mut().enumerate() {
                col.apply(|v| *v = if *v + offsets[j] > 0.0 { 1.0 } else { 0.0 });
            }
        }
        x
    }
}

/// Planted linear signal for one category and rating dimension, scaled to
/// unit variance over the reference scenes.
#[derive(Debug, Clone)]
pub(crate) struct Signal {
    pub category: Category,
    pub dimension: RatingDimension,
    /// Raw-feature weights per generating channel.
    pub weights: BTreeMap<ChannelId, DVector<f64>>,
    pub intercept: f64,
    pub latent: Vec<f64>,
    /// Sd of each channel's contribution to `latent`.
    pub channel_sd: BTreeMap<ChannelId, f64>,
}

/// Seeded world shared by the expectation and detection generators.
pub(crate) struct World {
    pub models: BTreeMap<ChannelId, ChannelModel>,
    pub scenes: Vec<SceneRecord>,
    pub signals: Vec<Signal>,
}

pub(crate) fn scene_category(rng: &mut ChaCha8Rng) -> String {
    SCENE_CATEGORIES[rng.gen_range(0..SCENE_CATEGORIES.len())].to_string()
}

impl World {
    pub fn new(config: &SynthConfig) -> Result<Self, SynthError> {
        config.validate()?;
        let n = config.n_scenes;
        let r = config.latent_factors;
        let mut world_rng = stream_rng(config.seed, Stream::SynthWorld, 0);
        let models: BTreeMap<ChannelId, ChannelModel> = ChannelId::ALL
            .into_iter()
            .map(|c| (c, ChannelModel::new(config, c, &mut world_rng)))
            .collect();

        let mut features = BTreeMap::new();
        for (k, (c, model)) in models.iter().enumerate() {
            let mut rng = stream_rng(config.seed, Stream::SynthScenes, k as u64);
            let z = normal_matrix(&mut rng, n, r);
            features.insert(*c, model.features(&z, &mut rng));
        }
        let mut cat_rng = stream_rng(config.seed, Stream::SynthScenes, 100);
        let width = n.to_string().len().max(4);
        let scenes: Vec<SceneRecord> = (0..n)
            .map(|i| {
                let mut s = SceneRecord::new(format!("scene{:0width$}", i + 1), scene_category(&mut cat_rng));
                for (c, x) in &features {
                    s = s.with_channel(*c, x.row(i).iter().copied().collect());
                }
                s
            })
            .collect();

        // Leading empirical principal axes carry the planted signal, so it
        // survives any PCA truncation to at least `latent_factors` components.
        let generating = config.generating.channels();
        let mut axes = BTreeMap::new();
        for &c in &generating {
            axes.insert(c, PcaBasis::fit(&features[&c], r)?);
        }

        let mut u_rng = stream_rng(config.seed, Stream::SynthWorld, 1);
        let mut planted: Vec<(Category, RatingDimension, BTreeMap<ChannelId, DVector<f64>>)> = Vec::new();
        for category in &config.categories {
            for dimension in RatingDimension::ALL {
                let u = generating
                    .iter()
                    .map(|&c| (c, DVector::from_fn(r, |_, _| normal(&mut u_rng))))
                    .collect();
                planted.push((category.clone(), dimension, u));
            }
        }
        Self::couple_likelihoods(config, &models, &axes, &mut planted);

        let mut signals = Vec::with_capacity(planted.len());
        for (category, dimension, u) in planted {
            signals.push(Self::signal(category, dimension, &u, &axes, &features)?);
        }
        Ok(Self {
            models,
            scenes,
            signals,
        })
    }

    /// Correlates the nontarget likelihood weights of the first two
    /// categories, and makes the coarse likelihood directions of different
    /// categories orthogonal in latent space so context shifts for one
    /// category leave the others' signals untouched.
    fn couple_likelihoods(
        config: &SynthConfig,
        models: &BTreeMap<ChannelId, ChannelModel>,
        axes: &BTreeMap<ChannelId, PcaBasis>,
        planted: &mut [(Category, RatingDimension, BTreeMap<ChannelId, DVector<f64>>)],
    ) {
        let lik: Vec<usize> = planted
            .iter()
            .enumerate()
            .filter(|(_, p)| p.1 == RatingDimension::Likelihood)
            .map(|(i, _)| i)
            .collect();
        if lik.len() >= 2 && axes.contains_key(&ChannelId::Nontarget) {
            let rho = config.nontarget_weight_correlation;
            let first = planted[lik[0]].2[&ChannelId::Nontarget].clone();
            let second = planted[lik[1]].2.get_mut(&ChannelId::Nontarget).expect("generating");
            // Match norms so rho is the expected cosine.
            let own = second.clone() * (first.norm() / second.norm().max(f64::MIN_POSITIVE));
            *second = &first * rho + own * (1.0 - rho * rho).sqrt();
        }
        if let Some(basis) = axes.get(&ChannelId::Coarse) {
            let m = &models[&ChannelId::Coarse].loadings * basis.components.transpose();
            let mut done: Vec<DVector<f64>> = Vec::new();
            for &i in &lik {
                let u = planted[i].2.get_mut(&ChannelId::Coarse).expect("generating");
                for prev in &done {
                    let (g, gp) = (&m * &*u, &m * prev);
                    let alpha = g.dot(&gp) / gp.norm_squared();
                    *u -= prev * alpha;
                }
                done.push(u.clone());
            }
        }
    }

    fn signal(
        category: Category,
        dimension: RatingDimension,
        u: &BTreeMap<ChannelId, DVector<f64>>,
        axes: &BTreeMap<ChannelId, PcaBasis>,
        features: &BTreeMap<ChannelId, DMatrix<f64>>,
    ) -> Result<Signal, SynthError> {
        let n = features.values().next().map_or(0, DMatrix::nrows);
        let mut weights = BTreeMap::new();
        let mut parts = BTreeMap::new();
        for (c, u_c) in u {
            let basis = &axes[c];
            let beta = basis.components.transpose() * u_c;
            let s: Vec<f64> = (&features[c] * &beta).iter().copied().collect();
            let sd = sample_sd(&s);
            weights.insert(*c, beta / sd);
            parts.insert(*c, s.iter().map(|v| v / sd).collect::<Vec<f64>>());
        }
        let total: Vec<f64> = (0..n).map(|i| parts.values().map(|p| p[i]).sum()).collect();
        let scale = sample_sd(&total);
        let mut intercept = 0.0;
        let mut channel_sd = BTreeMap::new();
        for (c, w) in weights.iter_mut() {
            *w /= scale;
            intercept -= axes[c].mean.dot(w);
            channel_sd.insert(*c, 1.0 / scale);
        }
        let latent: Vec<f64> = (0..n)
            .map(|i| intercept + weights.iter().map(|(c, w)| features[c].row(i).dot(&w.transpose())).sum::<f64>())
            .collect();
        Ok(Signal {
            category,
            dimension,
            weights,
            intercept,
            latent,
            channel_sd,
        })
    }

    pub fn signal_for(&self, category: &Category, dimension: RatingDimension) -> Option<&Signal> {
        self.signals
            .iter()
            .find(|s| &s.category == category && s.dimension == dimension)
    }
}
