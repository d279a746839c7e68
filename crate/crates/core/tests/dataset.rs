use ctxprior::dataset::{
    aggregate_ratings, load_dataset, load_model, save_model, write_channel_csv, write_ratings, DatasetError,
    DatasetPaths, PixelBox, SavedModel, SchemaConfig,
};
use ctxprior::expectations::{fit_expectation_model, ExpectationData};
use ctxprior::fusion::{train_classifier, FusionFeatureSet, LossKind, TrainConfig};
use ctxprior::{Category, ChannelId, ChannelSet, Frame, ModelSpec, RatingDimension, RawRating, SceneRecord};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::path::Path;

const DIMS: [(ChannelId, usize); 3] = [(ChannelId::Target, 62), (ChannelId::Nontarget, 36), (ChannelId::Coarse, 532)];

fn fixture_scenes(n: usize, seed: u64) -> Vec<SceneRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            DIMS.iter().fold(SceneRecord::new(format!("s{i}"), ""), |s, &(c, d)| {
                s.with_channel(c, (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
            })
        })
        .collect()
}

fn write_features(dir: &Path, scenes: &[SceneRecord]) -> BTreeMap<ChannelId, std::path::PathBuf> {
    DIMS.iter()
        .map(|&(c, _)| {
            let path = dir.join(format!("features_{}.csv", c.letter()));
            write_channel_csv(&path, c, scenes).unwrap();
            (c, path)
        })
        .collect()
}

fn rating(subject: &str, scene: &str, raw: f64, bbox: Option<PixelBox>) -> RawRating {
    RawRating {
        subject_id: subject.into(),
        scene_id: scene.into(),
        category: Category::car(),
        likelihood_raw: raw,
        bbox,
    }
}

#[test]
fn three_scene_fixture_loads_with_channel_dims() {
    let dir = tempfile::tempdir().unwrap();
    let scenes = fixture_scenes(3, 1);
    let features = write_features(dir.path(), &scenes);
    let ratings_path = dir.path().join("ratings.csv");
    write_ratings(&ratings_path, &[rating("a", "s0", 50.0, None)]).unwrap();
    let paths = DatasetPaths {
        features,
        ratings: Some(ratings_path),
        ..Default::default()
    };
    let ds = load_dataset(&paths, &SchemaConfig::default()).unwrap();
    assert_eq!(ds.scenes.len(), 3);
    let dims: BTreeMap<ChannelId, usize> = DIMS.into_iter().collect();
    assert_eq!(ds.channel_dims(), dims);
    assert_eq!(ds.scenes, scenes);
}

#[test]
fn nan_feature_is_located() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("features_C.csv");
    std::fs::write(&path, "scene_id,f0,f1\na,1,2\nb,3,NaN\n").unwrap();
    let paths = DatasetPaths {
        features: [(ChannelId::Coarse, path)].into_iter().collect(),
        ..Default::default()
    };
    match load_dataset(&paths, &SchemaConfig::default()) {
        Err(DatasetError::NonFiniteValue { scene_id, column, line, .. }) => {
            assert_eq!(scene_id, "b");
            assert_eq!(column, "f1");
            assert_eq!(line, 3);
        }
        other => panic!("expected NonFiniteValue, got {other:?}"),
    }
}

#[test]
fn ragged_feature_row_is_a_dimension_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("features_T.csv");
    std::fs::write(&path, "scene_id,f0,f1\na,1,2\nb,3\n").unwrap();
    let paths = DatasetPaths {
        features: [(ChannelId::Target, path)].into_iter().collect(),
        ..Default::default()
    };
    assert!(matches!(
        load_dataset(&paths, &SchemaConfig::default()),
        Err(DatasetError::DimensionMismatch { expected: 3, found: 2, .. })
    ));
}

#[test]
fn rating_for_unknown_scene() {
    let dir = tempfile::tempdir().unwrap();
    let features = write_features(dir.path(), &fixture_scenes(3, 2));
    let ratings_path = dir.path().join("ratings.csv");
    write_ratings(&ratings_path, &[rating("a", "s1", 10.0, None), rating("a", "zzz", 10.0, None)]).unwrap();
    let paths = DatasetPaths {
        features,
        ratings: Some(ratings_path),
        ..Default::default()
    };
    match load_dataset(&paths, &SchemaConfig::default()) {
        Err(DatasetError::UnknownSceneReference { scene_id, line, .. }) => {
            assert_eq!(scene_id, "zzz");
            assert_eq!(line, 3);
        }
        other => panic!("expected UnknownSceneReference, got {other:?}"),
    }
}

#[test]
fn missing_ratings_column() {
    let dir = tempfile::tempdir().unwrap();
    let features = write_features(dir.path(), &fixture_scenes(2, 3));
    let ratings_path = dir.path().join("ratings.csv");
    std::fs::write(&ratings_path, "subject_id,scene_id,category\na,s0,car\n").unwrap();
    let paths = DatasetPaths {
        features,
        ratings: Some(ratings_path),
        ..Default::default()
    };
    match load_dataset(&paths, &SchemaConfig::default()) {
        Err(DatasetError::MissingColumn { column, .. }) => assert_eq!(column, "likelihood_raw"),
        other => panic!("expected MissingColumn, got {other:?}"),
    }
}

#[test]
fn box_outside_frame_and_box_without_likelihood_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let features = write_features(dir.path(), &fixture_scenes(2, 4));
    let ratings_path = dir.path().join("ratings.csv");
    for bad in [
        rating("a", "s0", 50.0, Some(PixelBox { x: 600.0, y: 0.0, w: 100.0, h: 10.0 })),
        rating("a", "s0", 0.0, Some(PixelBox { x: 0.0, y: 0.0, w: 10.0, h: 10.0 })),
    ] {
        write_ratings(&ratings_path, &[bad]).unwrap();
        let paths = DatasetPaths {
            features: features.clone(),
            ratings: Some(ratings_path.clone()),
            ..Default::default()
        };
        assert!(matches!(
            load_dataset(&paths, &SchemaConfig::default()),
            Err(DatasetError::InvalidField { line: 2, .. })
        ));
    }
}

/// Eleven subjects, five scenes, boxes for some subjects only; checked
/// against an explicit recomputation of every mean.
#[test]
fn eleven_subject_aggregation_matches_recomputed_means() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let frame = Frame::default();
    let mut ratings = Vec::new();
    for scene in 0..5 {
        for subject in 0..11 {
            let raw: f64 = if (scene + subject) % 4 == 0 { 0.0 } else { rng.gen_range(1.0..=100.0) };
            let bbox = (raw > 0.0 && subject % 3 != 0).then(|| {
                let w = rng.gen_range(10.0..300.0);
                let h = rng.gen_range(10.0..200.0);
                PixelBox {
                    x: rng.gen_range(0.0..(640.0 - w)),
                    y: rng.gen_range(0.0..(480.0 - h)),
                    w,
                    h,
                }
            });
            ratings.push(rating(&format!("p{subject}"), &format!("s{scene}"), raw, bbox));
        }
    }
    let aggregates = aggregate_ratings(&ratings, &frame, &Default::default()).unwrap();
    assert_eq!(aggregates.len(), 5);
    for agg in &aggregates {
        let rows: Vec<&RawRating> = ratings.iter().filter(|r| r.scene_id == agg.scene_id).collect();
        let boxes: Vec<PixelBox> = rows.iter().filter_map(|r| r.bbox).collect();
        let n = rows.len() as f64;
        let likelihood = rows.iter().map(|r| r.likelihood_raw / 100.0).sum::<f64>() / n;
        let m = boxes.len() as f64;
        let xpos = boxes.iter().map(|b| (b.x + b.w / 2.0) / 640.0).sum::<f64>() / m;
        let ypos = boxes.iter().map(|b| (b.y + b.h / 2.0) / 480.0).sum::<f64>() / m;
        let scale = boxes.iter().map(|b| b.w * b.h / (640.0 * 480.0)).sum::<f64>() / m;
        let aspect = boxes.iter().map(|b| b.h / b.w).sum::<f64>() / m;
        assert_eq!(agg.n_subjects, 11);
        assert_eq!(agg.n_boxes, boxes.len());
        assert!((agg.likelihood - likelihood).abs() < 1e-12);
        assert!((agg.xpos.unwrap() - xpos).abs() < 1e-12);
        assert!((agg.ypos.unwrap() - ypos).abs() < 1e-12);
        assert!((agg.scale.unwrap() - scale).abs() < 1e-12);
        assert!((agg.aspect.unwrap() - aspect).abs() < 1e-12);
    }

    let mut permuted = ratings.clone();
    permuted.reverse();
    permuted.rotate_left(17);
    assert_eq!(aggregate_ratings(&permuted, &frame, &Default::default()).unwrap(), aggregates);
}

fn fitted_model() -> (ctxprior::ExpectationModel, Vec<SceneRecord>) {
    let scenes = fixture_scenes(60, 5);
    let aggregates: Vec<_> = scenes
        .iter()
        .map(|s| {
            let c = s.features(ChannelId::Coarse).unwrap();
            let n = s.features(ChannelId::Nontarget).unwrap();
            ctxprior::RatingAggregate {
                scene_id: s.scene_id.clone(),
                category: Category::car(),
                likelihood: 0.5 + 0.1 * c[0] - 0.2 * n[3],
                xpos: None,
                ypos: None,
                scale: None,
                aspect: None,
                n_subjects: 1,
                n_boxes: 0,
            }
        })
        .collect();
    let data = ExpectationData::new(&scenes, &aggregates, &Category::car(), RatingDimension::Likelihood).unwrap();
    let spec = ModelSpec::new(ChannelSet::NC, Category::car(), RatingDimension::Likelihood).with_pca_dims(8);
    (fit_expectation_model(&spec, &data).unwrap(), fixture_scenes(10, 99))
}

#[test]
fn expectation_model_round_trip_predicts_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    let (model, probes) = fitted_model();
    let path = dir.path().join("m.json");
    save_model(&path, &SavedModel::Expectation(model.clone())).unwrap();
    let loaded = load_model(&path).unwrap().into_expectation().unwrap();
    let a = model.predict_scenes(&probes).unwrap();
    let b = loaded.predict_scenes(&probes).unwrap();
    assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    assert_eq!(loaded.spec, model.spec);
    assert_eq!(loaded.training_scene_ids, model.training_scene_ids);
}

#[test]
fn fusion_classifier_round_trip_scores_bit_identically() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 80;
    let labels: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
    let x = DMatrix::from_fn(n, 2, |i, j| rng.gen_range(-1.0..1.0) + if j == 0 && labels[i] { 1.0 } else { 0.0 });
    let set = FusionFeatureSet::baseline().with(&Category::car(), &[RatingDimension::Likelihood]);
    for loss in [LossKind::Logistic, LossKind::SquaredHinge] {
        let config = TrainConfig { loss, ..Default::default() };
        let clf = train_classifier(&x, &labels, &set, &config).unwrap();
        let text = SavedModel::Fusion(clf.clone()).to_json();
        let back = SavedModel::from_json(&text).unwrap().into_fusion().unwrap();
        assert_eq!(back, clf);
        let probe = DMatrix::from_fn(10, 2, |_, _| rng.gen_range(-3.0..3.0));
        assert_eq!(clf.scores(&probe).unwrap(), back.scores(&probe).unwrap());
    }
}

#[test]
fn flipped_magic_is_corrupt() {
    let (model, _) = fitted_model();
    let text = SavedModel::Expectation(model).to_json().replacen("ctxprior-model", "ctxprior-modle", 1);
    assert!(matches!(SavedModel::from_json(&text), Err(DatasetError::CorruptPayload(_))));
    assert!(matches!(SavedModel::from_json("{ not json"), Err(DatasetError::CorruptPayload(_))));
}

#[test]
fn future_version_is_rejected() {
    let (model, _) = fitted_model();
    let text = SavedModel::Expectation(model).to_json().replacen("\"version\": 1", "\"version\": 2", 1);
    assert!(matches!(
        SavedModel::from_json(&text),
        Err(DatasetError::VersionMismatch { found: 2, supported: 1 })
    ));
}

#[test]
fn truncated_weights_are_corrupt() {
    let (model, _) = fitted_model();
    let mut value: serde_json::Value = serde_json::from_str(&SavedModel::Expectation(model).to_json()).unwrap();
    value["payload"]["weights"].as_array_mut().unwrap().pop();
    assert!(matches!(
        SavedModel::from_json(&value.to_string()),
        Err(DatasetError::CorruptPayload(_))
    ));
}
