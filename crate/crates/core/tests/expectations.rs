use ctxprior::expectations::{
    compare_models, evaluate_all_specs, evaluate_specs, fit_expectation_model, holdout_eval, kfold_assignment,
    kfold_eval, label_weights, nontarget_weight_correlation, repeated_split_eval, split_rows, EvalConfig,
    ExpectationData, ExpectationError, SignificanceFlag, SplitConfig,
};
use ctxprior::numerics::{pearson, PcaBasis, RatingMatrix};
use ctxprior::synth::{generate_expectation_dataset, SynthConfig};
use ctxprior::{Category, ChannelId, ChannelSet, ModelSpec, PcaScope, RatingDimension};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::collections::BTreeMap;

fn gaussian(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, d, |_, _| rng.sample(StandardNormal))
}

/// Small three-channel data set. Coarse features are driven by five strong
/// latent factors; the target is a linear function of the coarse features
/// along the factor loadings, plus Gaussian noise. T and N are pure noise.
fn coarse_signal_data(n: usize, seed: u64, noise: f64) -> ExpectationData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = gaussian(&mut rng, n, 12);
    let nt = gaussian(&mut rng, n, 10);
    let factors = gaussian(&mut rng, n, 5);
    let loadings = gaussian(&mut rng, 5, 30) * 3.0;
    let beta = loadings.row_sum().transpose() / 30.0;
    let c = &factors * loadings + gaussian(&mut rng, n, 30);
    let signal = &c * beta;
    let targets = (0..n).map(|i| signal[i] + noise * rng.sample::<f64, _>(StandardNormal)).collect();
    ExpectationData {
        category: Category::car(),
        dimension: RatingDimension::Likelihood,
        scene_ids: (0..n).map(|i| format!("s{i:04}")).collect(),
        targets,
        channels: [(ChannelId::Target, t), (ChannelId::Nontarget, nt), (ChannelId::Coarse, c)]
            .into_iter()
            .collect(),
    }
}

fn spec(channels: ChannelSet, k: usize) -> ModelSpec {
    ModelSpec::new(channels, Category::car(), RatingDimension::Likelihood).with_pca_dims(k)
}

fn split_config(n_splits: usize, seed: u64) -> SplitConfig {
    SplitConfig {
        n_splits,
        train_frac: 0.8,
        seed,
        pca_scope: PcaScope::PerFold,
    }
}

#[test]
fn exact_linear_function_of_coarse_pcs_is_fit_in_sample() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 120;
    let c = gaussian(&mut rng, n, 40);
    let basis = PcaBasis::fit(&c, 20).unwrap();
    let scores = basis.project(&c).unwrap();
    let coef = DVector::from_fn(20, |j, _| (j as f64 - 9.5) / 7.0);
    let y = &scores * &coef;
    let data = ExpectationData {
        category: Category::car(),
        dimension: RatingDimension::Likelihood,
        scene_ids: (0..n).map(|i| format!("s{i}")).collect(),
        targets: y.iter().map(|v| v + 0.3).collect(),
        channels: [(ChannelId::Coarse, c)].into_iter().collect(),
    };
    let model = fit_expectation_model(&spec(ChannelSet::C, 20), &data).unwrap();
    let fitted = model.predict_channels(&data.channels).unwrap();
    let residual = fitted
        .iter()
        .zip(&data.targets)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    assert!(residual < 1e-6, "residual {residual}");
}

#[test]
fn tnc_on_default_dims_has_sixty_inputs() {
    let synth = generate_expectation_dataset(&SynthConfig::default()).unwrap();
    let data = ExpectationData::new(&synth.scenes, &synth.aggregates, &Category::car(), RatingDimension::Likelihood)
        .unwrap();
    assert_eq!(data.len(), 650);
    let model = fit_expectation_model(&spec(ChannelSet::TNC, 20), &data).unwrap();
    assert_eq!(model.input_dim(), 60);
    assert_eq!(model.training_scene_ids, data.scene_ids);
}

#[test]
fn planted_nc_signal_is_found_by_nc_and_missed_by_t() {
    let config = SynthConfig {
        seed: 5,
        noise_sd: 0.0,
        reliability: 1.0,
        ..Default::default()
    };
    let synth = generate_expectation_dataset(&config).unwrap();
    let planted = synth.truth.signal(&Category::car(), RatingDimension::Likelihood).unwrap();
    let data = ExpectationData::new(&synth.scenes, &synth.aggregates, &Category::car(), RatingDimension::Likelihood)
        .unwrap()
        .with_targets(planted.latent.clone());
    let t = kfold_eval(&spec(ChannelSet::T, 20), &data, 5, 1, PcaScope::PerFold).unwrap();
    let nc = kfold_eval(&spec(ChannelSet::NC, 20), &data, 5, 1, PcaScope::PerFold).unwrap();
    assert!(t.r_cv.abs() < 0.1, "T r_cv {}", t.r_cv);
    assert!(nc.r_cv > 0.9, "NC r_cv {}", nc.r_cv);
}

#[test]
fn noiseless_target_is_predicted_almost_perfectly() {
    let data = coarse_signal_data(300, 2, 0.0);
    let cv = kfold_eval(&spec(ChannelSet::C, 20), &data, 5, 3, PcaScope::PerFold).unwrap();
    assert!(cv.r_cv > 0.999, "r_cv {}", cv.r_cv);
}

#[test]
fn shuffled_targets_give_null_correlation() {
    use rand::seq::SliceRandom;
    let data = coarse_signal_data(650, 3, 0.3);
    let mut targets = data.targets.clone();
    targets.shuffle(&mut ChaCha8Rng::seed_from_u64(77));
    let cv = kfold_eval(&spec(ChannelSet::TNC, 20), &data.with_targets(targets), 5, 4, PcaScope::PerFold).unwrap();
    assert!(cv.r_cv.abs() < 0.15, "r_cv {}", cv.r_cv);
}

#[test]
fn kfold_predicts_every_scene_once_with_balanced_folds() {
    for n in [10, 11, 99, 650] {
        for k in [2, 5, 7] {
            let folds = kfold_assignment(n, k, 9);
            let mut sizes = vec![0usize; k];
            for &f in &folds {
                sizes[f] += 1;
            }
            assert_eq!(sizes.iter().sum::<usize>(), n);
            assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
    }
    let data = coarse_signal_data(103, 4, 0.5);
    let cv = kfold_eval(&spec(ChannelSet::NC, 8), &data, 5, 2, PcaScope::PerFold).unwrap();
    assert_eq!(cv.predictions.len(), 103);
    assert!(cv.predictions.iter().all(|p| p.is_finite()));
    assert_eq!(cv.folds, kfold_assignment(103, 5, 2));
    assert_eq!(cv.r_cv, pearson(&cv.predictions, &data.targets).unwrap());
}

#[test]
fn held_out_targets_never_reach_their_fold() {
    let data = coarse_signal_data(120, 5, 0.5);
    for scope in [PcaScope::PerFold, PcaScope::Global] {
        let s = spec(ChannelSet::TNC, 10);
        let before = kfold_eval(&s, &data, 5, 6, scope).unwrap();
        for fold in 0..5 {
            let perturbed: Vec<f64> = data
                .targets
                .iter()
                .zip(&before.folds)
                .map(|(&y, &f)| if f == fold { y * -3.0 + 100.0 } else { y })
                .collect();
            let after = kfold_eval(&s, &data.with_targets(perturbed), 5, 6, scope).unwrap();
            for i in (0..data.len()).filter(|&i| before.folds[i] == fold) {
                assert_eq!(before.predictions[i].to_bits(), after.predictions[i].to_bits());
            }
        }
    }
}

#[test]
fn train_rows_alone_determine_the_split_model() {
    let data = coarse_signal_data(100, 6, 0.5);
    let (train, test) = split_rows(data.len(), 0.8, 3, 0);
    assert_eq!(train.len(), 80);
    assert_eq!(test.len(), 20);
    let subset = |targets: &[f64]| ExpectationData {
        category: data.category.clone(),
        dimension: data.dimension,
        scene_ids: train.iter().map(|&i| data.scene_ids[i].clone()).collect(),
        targets: train.iter().map(|&i| targets[i]).collect(),
        channels: data.channels.iter().map(|(c, m)| (*c, m.select_rows(&train))).collect(),
    };
    let mut perturbed = data.targets.clone();
    for &i in &test {
        perturbed[i] += 10.0;
    }
    let s = spec(ChannelSet::NC, 8);
    let a = fit_expectation_model(&s, &subset(&data.targets)).unwrap();
    let b = fit_expectation_model(&s, &subset(&perturbed)).unwrap();
    let probe: BTreeMap<ChannelId, DMatrix<f64>> = data.channels.iter().map(|(c, m)| (*c, m.rows(0, 3).into())).collect();
    assert_eq!(a.predict_channels(&probe).unwrap(), b.predict_channels(&probe).unwrap());
}

#[test]
fn repeated_splits_are_deterministic_and_match_holdout() {
    let data = coarse_signal_data(150, 7, 1.0);
    let s = spec(ChannelSet::TC, 10);
    let a = repeated_split_eval(&s, &data, &split_config(40, 11)).unwrap();
    let b = repeated_split_eval(&s, &data, &split_config(40, 11)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.correlations.len(), 40);
    let mean = a.correlations.iter().sum::<f64>() / 40.0;
    assert!((a.mean - mean).abs() < 1e-12);

    let one = repeated_split_eval(&s, &data, &split_config(1, 11)).unwrap();
    let holdout = holdout_eval(&s, &data, 0.8, 11, PcaScope::PerFold).unwrap();
    assert_eq!(one.correlations, vec![holdout]);
    assert_eq!(a.correlations[0], holdout);
}

#[test]
fn shared_bases_give_the_same_results_as_separate_runs() {
    let data = coarse_signal_data(120, 8, 0.7);
    let specs = [spec(ChannelSet::C, 10), spec(ChannelSet::NC, 10), spec(ChannelSet::TNC, 10)];
    let joint = evaluate_specs(&data, &specs, &split_config(15, 2)).unwrap();
    for (s, d) in specs.iter().zip(&joint) {
        assert_eq!(&repeated_split_eval(s, &data, &split_config(15, 2)).unwrap(), d);
    }
}

#[test]
fn comparison_requires_paired_streams() {
    let data = coarse_signal_data(120, 9, 0.7);
    let a = repeated_split_eval(&spec(ChannelSet::C, 10), &data, &split_config(20, 1)).unwrap();
    let b = repeated_split_eval(&spec(ChannelSet::T, 10), &data, &split_config(20, 2)).unwrap();
    assert_eq!(compare_models(&a, &b), Err(ExpectationError::UnpairedDistributions));
    let same = compare_models(&a, &a).unwrap();
    assert_eq!(same.p_frac, 0.0);
    assert_eq!(same.flag, SignificanceFlag::Worse);
}

#[test]
fn significance_flags() {
    assert_eq!(SignificanceFlag::from_p_frac(0.0), SignificanceFlag::Worse);
    assert_eq!(SignificanceFlag::from_p_frac(0.000_999), SignificanceFlag::Worse);
    assert_eq!(SignificanceFlag::from_p_frac(0.001), SignificanceFlag::Intermediate);
    assert_eq!(SignificanceFlag::from_p_frac(0.05), SignificanceFlag::Intermediate);
    assert_eq!(SignificanceFlag::from_p_frac(0.050_001), SignificanceFlag::Equivalent);
    assert_eq!(SignificanceFlag::Worse.symbol(), "*");
    assert_eq!(SignificanceFlag::Equivalent.symbol(), "#");
}

#[test]
fn signal_channel_beats_noise_channel_on_nearly_every_split() {
    let data = coarse_signal_data(200, 10, 1.0);
    let dists = evaluate_specs(&data, &[spec(ChannelSet::C, 10), spec(ChannelSet::T, 10)], &split_config(1000, 3)).unwrap();
    let wins = dists[0]
        .correlations
        .iter()
        .zip(&dists[1].correlations)
        .filter(|(c, t)| c >= t)
        .count();
    assert!(wins >= 999, "C >= T on {wins}/1000 splits");
    assert_eq!(compare_models(&dists[1], &dists[0]).unwrap().p_frac, (1000 - wins) as f64 / 1000.0);
}

/// T and N carry equally strong, independent views of the same signal, so
/// neither should beat the other systematically. Averaged over data sets.
#[test]
fn equal_signal_specs_split_wins_evenly() {
    let mut fractions = Vec::new();
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let n = 200;
        let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let view = |rng: &mut ChaCha8Rng| {
            DMatrix::from_fn(n, 4, |i, j| {
                (if j == 0 { z[i] } else { 0.0 }) + rng.sample::<f64, _>(StandardNormal)
            })
        };
        let t = view(&mut rng);
        let nt = view(&mut rng);
        let data = ExpectationData {
            category: Category::car(),
            dimension: RatingDimension::Likelihood,
            scene_ids: (0..n).map(|i| format!("s{i}")).collect(),
            targets: z.clone(),
            channels: [(ChannelId::Target, t), (ChannelId::Nontarget, nt)].into_iter().collect(),
        };
        let d = evaluate_specs(&data, &[spec(ChannelSet::T, 4), spec(ChannelSet::N, 4)], &split_config(50, seed)).unwrap();
        fractions.push(compare_models(&d[0], &d[1]).unwrap().p_frac);
    }
    let mean = fractions.iter().sum::<f64>() / fractions.len() as f64;
    assert!((0.4..=0.6).contains(&mean), "mean p_frac {mean}: {fractions:?}");
}

#[test]
fn table_with_single_spec_and_single_subject() {
    let data = coarse_signal_data(80, 11, 0.5);
    let one_subject = RatingMatrix::new(
        vec!["a".into()],
        data.scene_ids.clone(),
        vec![data.targets.iter().map(|&v| Some(v)).collect()],
    )
    .unwrap();
    let config = EvalConfig {
        specs: vec![ChannelSet::C],
        pca_dims: 10,
        split: split_config(10, 1),
        ceiling_resamples: 10,
        ..Default::default()
    };
    let table = evaluate_all_specs(&data, Some(&one_subject), &config).unwrap();
    assert!(table.ceiling.is_none());
    assert_eq!(table.rows.len(), 1);
    assert_eq!(table.best, ChannelSet::C);
    let csv = table.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("Ceil,") && lines[1].contains("absent"));
    assert!(lines[2].starts_with("C,"));
}

#[test]
fn effective_k_is_capped_and_reported() {
    let data = coarse_signal_data(20, 12, 0.5);
    let config = EvalConfig {
        specs: vec![ChannelSet::C, ChannelSet::T],
        pca_dims: 20,
        split: split_config(5, 1),
        ceiling_resamples: 1,
        ..Default::default()
    };
    let table = evaluate_all_specs(&data, None, &config).unwrap();
    assert_eq!(table.effective_k[&ChannelId::Coarse], 14);
    assert_eq!(table.effective_k[&ChannelId::Target], 12);
    assert!(!table.effective_k.contains_key(&ChannelId::Nontarget));
}

#[test]
fn nontarget_weights_correlate_with_themselves_and_their_negation() {
    let data = coarse_signal_data(100, 13, 0.5);
    let model = fit_expectation_model(&spec(ChannelSet::NC, 8), &data).unwrap();
    let vocab: Vec<String> = (0..10).map(|j| format!("label{j}")).collect();
    let same = nontarget_weight_correlation(&model, &model, &vocab).unwrap();
    assert!((same.r - 1.0).abs() < 1e-12);
    let mut negated = model.clone();
    negated.regression.weights.iter_mut().for_each(|w| *w = -*w);
    let opposite = nontarget_weight_correlation(&model, &negated, &vocab).unwrap();
    assert!((opposite.r + 1.0).abs() < 1e-12);
    assert!(opposite.top_positive_a.len() <= 5 && opposite.top_negative_a.len() <= 5);

    let c_only = fit_expectation_model(&spec(ChannelSet::C, 8), &data).unwrap();
    assert_eq!(
        nontarget_weight_correlation(&model, &c_only, &vocab).unwrap_err(),
        ExpectationError::MissingChannel(ChannelId::Nontarget)
    );
}

#[test]
fn back_projected_weights_recover_planted_nontarget_weights() {
    let config = SynthConfig {
        seed: 21,
        generating: ChannelSet::N,
        noise_sd: 0.0,
        reliability: 1.0,
        detection: ctxprior::synth::DetectionConfig {
            context_weight: 0.0,
            ..Default::default()
        },
        ..Default::default()
    };
    let synth = generate_expectation_dataset(&config).unwrap();
    let planted = synth.truth.signal(&Category::car(), RatingDimension::Likelihood).unwrap();
    let data = ExpectationData::new(&synth.scenes, &synth.aggregates, &Category::car(), RatingDimension::Likelihood)
        .unwrap()
        .with_targets(planted.latent.clone());
    let model = fit_expectation_model(&spec(ChannelSet::N, 20), &data).unwrap();
    let recovered = label_weights(&model).unwrap();
    let basis = &model.bases[0].1;
    let beta = DVector::from_vec(planted.weights[&ChannelId::Nontarget].clone());
    let restricted = basis.components.transpose() * (&basis.components * beta);
    let r = pearson(&recovered, restricted.as_slice()).unwrap();
    assert!(r > 0.999, "r {r}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn kfold_assignment_is_a_balanced_partition(n in 2usize..300, k in 2usize..10, seed in any::<u64>()) {
        prop_assume!(k <= n);
        let folds = kfold_assignment(n, k, seed);
        let mut sizes = vec![0usize; k];
        for &f in &folds {
            prop_assert!(f < k);
            sizes[f] += 1;
        }
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        prop_assert_eq!(folds, kfold_assignment(n, k, seed));
    }

    #[test]
    fn split_rows_partition_and_are_sorted(n in 5usize..400, seed in any::<u64>(), index in 0usize..1000) {
        let (train, test) = split_rows(n, 0.8, seed, index);
        prop_assert_eq!(train.len() + test.len(), n);
        prop_assert!(train.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(test.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(train.iter().all(|i| test.binary_search(i).is_err()));
    }
}
