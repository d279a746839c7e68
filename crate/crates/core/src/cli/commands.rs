use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use super::config::{FeatureSetSpec, Resolved, RunConfig};
use super::CliError;
use crate::dataset::{
    aggregate_ratings, load_dataset, load_model, rating_matrix, save_model, write_json, write_text, Category,
    ChannelSet, Dataset, DatasetPaths, PresenceMatrix, RatingAggregate, RatingDimension, SavedModel, SceneRecord,
};
use crate::expectations::{
    evaluate_all_specs, fit_expectation_model, kfold_eval, nontarget_weight_correlation, ExpectationData,
    NontargetWeights,
};
use crate::fusion::{
    averaged_association, balance_classes, build_fusion_features, roc, train_fusion, transfer_analysis,
    AccuracyRow, AccuracyTable, ErrorBreakdown, FusionData, FusionFeatureSet, ModelBank, TransferInput,
    TransferReport,
};
use crate::numerics::{odd_even_split, pearson};
use crate::synth::{generate_detection_dataset, generate_expectation_dataset, write_synth_dataset};

/// A report wrapped with the configuration and seed that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance<T> {
    pub seed: u64,
    pub config: RunConfig,
    pub result: T,
}

fn emit_json<T: Serialize>(run: &Resolved, rel: &str, result: T) -> Result<PathBuf, CliError> {
    let path = run.out.join(rel);
    ensure_parent(&path)?;
    let wrapped = Provenance {
        seed: run.config.seed,
        config: run.config.clone(),
        result,
    };
    write_json(&path, &wrapped)?;
    Ok(path)
}

fn emit_text(run: &Resolved, rel: &str, text: &str) -> Result<PathBuf, CliError> {
    let path = run.out.join(rel);
    ensure_parent(&path)?;
    write_text(&path, text)?;
    Ok(path)
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    }
    Ok(())
}

fn require(paths: &[&Path]) -> Result<(), CliError> {
    match paths.iter().find(|p| !p.is_file()) {
        Some(p) => Err(CliError::Data(format!("missing input file: {}", p.display()))),
        None => Ok(()),
    }
}

fn rating_inputs(run: &Resolved) -> Result<DatasetPaths, CliError> {
    let d = &run.data;
    let Some(ratings) = &d.ratings else {
        return Err(CliError::Config("no ratings file configured".into()));
    };
    if d.features.is_empty() {
        return Err(CliError::Config("no feature files configured".into()));
    }
    let paths = DatasetPaths {
        features: d.features.clone(),
        scenes: d.scenes.clone(),
        ratings: Some(ratings.clone()),
        scores: None,
    };
    require(&paths.all())?;
    Ok(paths)
}

fn detection_inputs(run: &Resolved) -> Result<DatasetPaths, CliError> {
    let d = &run.data;
    let (Some(scenes), Some(scores)) = (&d.scenes, &d.scores) else {
        return Err(CliError::Config("augment needs a scenes manifest and a scores file".into()));
    };
    let paths = DatasetPaths {
        features: d.features.clone(),
        scenes: Some(scenes.clone()),
        ratings: None,
        scores: Some(scores.clone()),
    };
    require(&paths.all())?;
    Ok(paths)
}

struct Rated {
    dataset: Dataset,
    aggregates: Vec<RatingAggregate>,
}

fn load_rated(run: &Resolved) -> Result<Rated, CliError> {
    let paths = rating_inputs(run)?;
    let dataset = load_dataset(&paths, &run.config.schema)?;
    let schema = &dataset.schema;
    let aggregates = aggregate_ratings(&dataset.ratings, &schema.frame, &schema.slider)?;
    Ok(Rated { dataset, aggregates })
}

impl Rated {
    fn data(&self, category: &Category, dimension: RatingDimension) -> Result<ExpectationData, CliError> {
        Ok(ExpectationData::new(&self.dataset.scenes, &self.aggregates, category, dimension)?)
    }
}

fn model_file(run: &Resolved, label: &str) -> PathBuf {
    run.out.join("models").join(format!("{label}.json"))
}

/// Writes synthetic expectation and detection datasets to `<out>/data`.
pub fn cmd_synth(run: &Resolved) -> Result<Vec<PathBuf>, CliError> {
    let config = &run.config.synth;
    let expectation = generate_expectation_dataset(config)?;
    let detection = if config.detection.detectors.is_empty() {
        None
    } else {
        Some(generate_detection_dataset(config)?)
    };
    let files = write_synth_dataset(&run.out.join("data"), &expectation, detection.as_ref())?;
    let mut written: Vec<PathBuf> = files.paths.all().into_iter().map(Path::to_path_buf).collect();
    written.push(files.presence);
    written.push(files.truth);
    written.push(emit_json(run, "data/provenance.json", "synth")?);
    Ok(written)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitSummaryRow {
    pub category: Category,
    pub dimension: RatingDimension,
    pub spec: ChannelSet,
    pub n_scenes: usize,
    pub effective_k: BTreeMap<String, usize>,
    pub in_sample_r: f64,
    pub cv_r: f64,
    pub k_folds: usize,
    pub model_file: String,
}

/// Fits and saves one expectation model per category, dimension and spec.
pub fn cmd_fit(run: &Resolved) -> Result<Vec<PathBuf>, CliError> {
    let rated = load_rated(run)?;
    let e = &run.config.expectations;
    let mut rows = Vec::new();
    let mut written = Vec::new();
    for category in &e.categories {
        for &dimension in &e.dimensions {
            let data = rated.data(category, dimension)?;
            for &channels in &e.fit_specs {
                let spec = e.spec(channels, category, dimension);
                let model = fit_expectation_model(&spec, &data)?;
                let fitted = model.predict_channels(&data.channels)?;
                let in_sample_r = pearson(&fitted, &data.targets)?;
                let cv = kfold_eval(&spec, &data, e.k_folds, run.config.seed, e.pca_scope)?;
                let label = spec.label();
                let path = model_file(run, &label);
                ensure_parent(&path)?;
                rows.push(FitSummaryRow {
                    category: category.clone(),
                    dimension,
                    spec: channels,
                    n_scenes: data.len(),
                    effective_k: model.effective_k().into_iter().map(|(c, k)| (c.to_string(), k)).collect(),
                    in_sample_r,
                    cv_r: cv.r_cv,
                    k_folds: e.k_folds,
                    model_file: format!("models/{label}.json"),
                });
                save_model(&path, &SavedModel::Expectation(model))?;
                written.push(path);
            }
        }
    }
    let report = &run.config.report;
    if report.json() {
        written.push(emit_json(run, "fit/summary.json", &rows)?);
    }
    if report.csv() {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut record = |r: [String; 7]| w.write_record(&r).expect("in-memory csv");
        record(["category", "dimension", "spec", "n_scenes", "in_sample_r", "cv_r", "k_folds"].map(String::from));
        for r in &rows {
            record([
                r.category.to_string(),
                r.dimension.to_string(),
                r.spec.to_string(),
                r.n_scenes.to_string(),
                r.in_sample_r.to_string(),
                r.cv_r.to_string(),
                r.k_folds.to_string(),
            ]);
        }
        let text = String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf8 csv");
        written.push(emit_text(run, "fit/summary.csv", &text)?);
    }
    Ok(written)
}

/// Spec tables with ceiling for every category and dimension.
pub fn cmd_evaluate(run: &Resolved) -> Result<Vec<PathBuf>, CliError> {
    let rated = load_rated(run)?;
    let e = &run.config.expectations;
    let eval = e.eval_config(run.config.seed);
    let schema = &rated.dataset.schema;
    let mut written = Vec::new();
    for category in &e.categories {
        for &dimension in &e.dimensions {
            let data = rated.data(category, dimension)?;
            let ratings = rating_matrix(
                &rated.dataset.ratings,
                category,
                dimension,
                &data.scene_ids,
                &schema.frame,
                &schema.slider,
            )?;
            let table = evaluate_all_specs(&data, Some(&ratings), &eval)?;
            let stem = format!("evaluate/{category}_{dimension}");
            if run.config.report.json() {
                written.push(emit_json(run, &format!("{stem}.json"), &table)?);
            }
            if run.config.report.csv() {
                written.push(emit_text(run, &format!("{stem}.csv"), &table.to_csv())?);
            }
        }
    }
    Ok(written)
}

fn feature_set(spec: &FeatureSetSpec, target: &Category) -> FusionFeatureSet {
    spec.categories.iter().fold(FusionFeatureSet::baseline(), |set, c| {
        let category = if c == "target" { target.clone() } else { Category::new(c) };
        set.with(&category, &spec.dimensions)
    })
}

fn load_bank(run: &Resolved, sets: &[FusionFeatureSet]) -> Result<ModelBank, CliError> {
    let needed: BTreeSet<(Category, RatingDimension)> = sets
        .iter()
        .flat_map(|s| s.features())
        .filter_map(|f| match f {
            crate::fusion::FusionFeature::Expectation { category, dimension } => Some((category.clone(), *dimension)),
            crate::fusion::FusionFeature::DetectorScore => None,
        })
        .collect();
    let spec = run.config.fusion.context_spec;
    let mut bank = ModelBank::new();
    for (category, dimension) in needed {
        let path = model_file(run, &format!("{category}_{dimension}_{spec}"));
        require(&[&path])?;
        let model = load_model(&path)?
            .into_expectation()
            .ok_or_else(|| CliError::Data(format!("{}: not an expectation model", path.display())))?;
        bank.insert((category, dimension), model);
    }
    Ok(bank)
}

fn file_stem(parts: &[&str]) -> String {
    parts
        .iter()
        .map(|p| {
            p.chars()
                .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '+' { c } else { '_' })
                .collect::<String>()
        })
        .collect::<Vec<_>>()
        .join("__")
}

/// Baseline and augmented detection accuracy per detector, target, scene
/// set and feature set, with ROC curves and error breakdowns.
pub fn cmd_augment(run: &Resolved) -> Result<Vec<PathBuf>, CliError> {
    let fusion = &run.config.fusion;
    let paths = detection_inputs(run)?;
    let targets_sets: Vec<(Category, Vec<(String, FusionFeatureSet)>)> = fusion
        .targets
        .iter()
        .map(|t| {
            let sets = fusion.feature_sets.iter().map(|f| (f.name.clone(), feature_set(f, t))).collect();
            (t.clone(), sets)
        })
        .collect();
    let all_sets: Vec<FusionFeatureSet> = targets_sets.iter().flat_map(|(_, s)| s.iter().map(|(_, f)| f.clone())).collect();
    let bank = load_bank(run, &all_sets)?;
    let dataset = load_dataset(&paths, &run.config.schema)?;

    let detectors: Vec<String> = if fusion.detectors.is_empty() {
        dataset
            .scores
            .iter()
            .map(|s| s.detector_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    } else {
        fusion.detectors.clone()
    };
    if detectors.is_empty() {
        return Err(CliError::Data("the scores file lists no detectors".into()));
    }
    let config = fusion.train_config(run.config.seed);
    let baseline_set = FusionFeatureSet::baseline();
    let mut table = AccuracyTable::default();
    let mut written = Vec::new();

    for detector in &detectors {
        for (target, sets) in &targets_sets {
            let scored: BTreeSet<&str> = dataset
                .scores
                .iter()
                .filter(|s| &s.detector_id == detector && &s.category == target)
                .map(|s| s.scene_id.as_str())
                .collect();
            for scene_set in &fusion.scene_sets {
                let mut scenes: Vec<SceneRecord> = dataset
                    .scenes
                    .iter()
                    .filter(|s| s.truth(target).is_some() && scored.contains(s.scene_id.as_str()))
                    .filter(|s| scene_set.scene_categories.is_empty() || scene_set.scene_categories.contains(&s.scene_category))
                    .cloned()
                    .collect();
                if fusion.balance {
                    let labels: Vec<bool> = scenes.iter().map(|s| s.truth(target) == Some(true)).collect();
                    let keep = balance_classes(&labels, run.config.seed);
                    scenes = keep.into_iter().map(|i| scenes[i].clone()).collect();
                }
                if scenes.is_empty() {
                    return Err(CliError::Data(format!(
                        "no labelled, scored scenes for detector '{detector}', target '{target}', scene set '{}'",
                        scene_set.name
                    )));
                }

                let base_data = build_fusion_features(&dataset.scores, detector, target, &bank, &scenes, &baseline_set)?;
                let base = train_fusion(&base_data, &baseline_set, &config)?;
                let base_roc = roc(&base.oof_scores, &base_data.labels)?;
                let base_breakdown = ErrorBreakdown::from_decisions(base.oof_decisions.clone(), &base_data.labels)?;
                let baseline = 100.0 * base.cv_accuracy;
                let stem = |fs: &str| file_stem(&[detector, target.as_str(), &scene_set.name, fs]);
                written.push(emit_text(run, &format!("augment/roc/{}.csv", stem("baseline")), &base_roc.to_csv())?);

                let mut row = AccuracyRow {
                    detector: detector.clone(),
                    target: target.to_string(),
                    scene_set: scene_set.name.clone(),
                    n_scenes: scenes.len(),
                    baseline,
                    baseline_auc: base_roc.auc,
                    baseline_breakdown: (base_breakdown.misses, base_breakdown.false_alarms),
                    augmentations: Vec::new(),
                };
                for (name, set) in sets {
                    let data: FusionData = build_fusion_features(&dataset.scores, detector, target, &bank, &scenes, set)?;
                    let trained = train_fusion(&data, set, &config)?;
                    let curve = roc(&trained.oof_scores, &data.labels)?;
                    let breakdown = ErrorBreakdown::from_decisions(trained.oof_decisions.clone(), &data.labels)?;
                    row.augmentations.push(AccuracyRow::augmentation(
                        name.clone(),
                        100.0 * trained.cv_accuracy,
                        baseline,
                        curve.auc,
                        &breakdown,
                    ));
                    written.push(emit_text(run, &format!("augment/roc/{}.csv", stem(name)), &curve.to_csv())?);
                    let model_path = run.out.join(format!("augment/models/{}.json", stem(name)));
                    ensure_parent(&model_path)?;
                    save_model(&model_path, &SavedModel::Fusion(trained.classifier))?;
                    written.push(model_path);
                }
                table.rows.push(row);
            }
        }
    }
    if run.config.report.json() {
        written.push(emit_json(run, "augment/accuracy.json", &table)?);
    }
    if run.config.report.csv() {
        written.push(emit_text(run, "augment/accuracy.csv", &table.to_csv())?);
    }
    Ok(written)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReliabilityRow {
    pub category: Category,
    pub dimension: RatingDimension,
    pub n_subjects: usize,
    pub n_scenes: usize,
    pub odd_even_r: f64,
    pub corrected: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub reliability: Vec<ReliabilityRow>,
    pub nontarget_weights: Option<NontargetWeights>,
    pub transfer: Option<TransferReport>,
    pub notes: Vec<String>,
}

fn transfer(run: &Resolved, presence: &PresenceMatrix, notes: &mut Vec<String>) -> Result<Option<TransferReport>, CliError> {
    let r = &run.config.report;
    let path = run.out.join("augment/accuracy.json");
    if !path.is_file() {
        notes.push("transfer analysis skipped: run augment first".into());
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let table: Provenance<AccuracyTable> =
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let detector = match &r.transfer_detector {
        Some(d) => d.clone(),
        None => match table.result.rows.first() {
            Some(row) => row.detector.clone(),
            None => {
                notes.push("transfer analysis skipped: accuracy table is empty".into());
                return Ok(None);
            }
        },
    };
    let rows: Vec<_> = table
        .result
        .rows
        .iter()
        .filter(|row| row.detector == detector && row.scene_set == r.transfer_scene_set)
        .filter_map(|row| {
            let aug = row.augmentations.iter().find(|a| a.feature_set == r.transfer_feature_set)?;
            Some((row, aug))
        })
        .collect();
    if rows.len() < 3 {
        notes.push(format!(
            "transfer analysis skipped: {} categories available, at least 3 needed",
            rows.len()
        ));
        return Ok(None);
    }
    let mut inputs = Vec::new();
    for (row, aug) in rows {
        let anchors: Vec<&str> = r.anchors.iter().map(String::as_str).filter(|a| *a != row.target).collect();
        inputs.push(TransferInput {
            category: row.target.clone(),
            benefit: aug.delta,
            association: averaged_association(presence, &row.target, &anchors)?,
            baseline_accuracy: row.baseline,
        });
    }
    Ok(Some(transfer_analysis(&inputs, r.n_permutations, run.config.seed)?))
}

/// Split-half reliability, nontarget weight correlation and transfer
/// analysis.
pub fn cmd_report(run: &Resolved) -> Result<Vec<PathBuf>, CliError> {
    let rated = load_rated(run)?;
    if let Some(p) = &run.presence {
        if run.config.data.as_ref().is_some_and(|d| d.presence.is_some()) {
            require(&[p])?;
        }
    }
    let presence = match &run.presence {
        Some(p) if p.is_file() => Some(PresenceMatrix::read(p)?),
        _ => None,
    };
    let e = &run.config.expectations;
    let schema = &rated.dataset.schema;
    let mut notes = Vec::new();

    let mut reliability = Vec::new();
    for category in &e.categories {
        for &dimension in &e.dimensions {
            let data = rated.data(category, dimension)?;
            let ratings = rating_matrix(
                &rated.dataset.ratings,
                category,
                dimension,
                &data.scene_ids,
                &schema.frame,
                &schema.slider,
            )?;
            match odd_even_split(&ratings) {
                Ok(s) => reliability.push(ReliabilityRow {
                    category: category.clone(),
                    dimension,
                    n_subjects: ratings.n_subjects(),
                    n_scenes: s.n_scenes,
                    odd_even_r: s.r,
                    corrected: s.corrected,
                }),
                Err(err) => notes.push(format!("{category} {dimension}: split-half undefined ({err})")),
            }
        }
    }

    let nontarget_weights = match (&presence, e.categories.as_slice()) {
        (Some(presence), [a, b, ..]) => {
            let spec = run.config.report.weights_spec;
            let fit = |c: &Category| -> Result<_, CliError> {
                let data = rated.data(c, RatingDimension::Likelihood)?;
                Ok(fit_expectation_model(&e.spec(spec, c, RatingDimension::Likelihood), &data)?)
            };
            Some(nontarget_weight_correlation(&fit(a)?, &fit(b)?, presence.vocabulary())?)
        }
        (None, _) => {
            notes.push("nontarget weights skipped: no presence matrix".into());
            None
        }
        _ => {
            notes.push("nontarget weights skipped: fewer than two categories".into());
            None
        }
    };

    let transfer = match &presence {
        Some(p) => transfer(run, p, &mut notes)?,
        None => {
            notes.push("transfer analysis skipped: no presence matrix".into());
            None
        }
    };

    let report = Report {
        reliability,
        nontarget_weights,
        transfer,
        notes,
    };
    let mut written = vec![emit_json(run, "report/report.json", &report)?];
    if run.config.report.csv() {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut record = |r: [String; 6]| w.write_record(&r).expect("in-memory csv");
        record(["category", "dimension", "n_subjects", "n_scenes", "odd_even_r", "corrected"].map(String::from));
        for r in &report.reliability {
            record([
                r.category.to_string(),
                r.dimension.to_string(),
                r.n_subjects.to_string(),
                r.n_scenes.to_string(),
                r.odd_even_r.to_string(),
                r.corrected.to_string(),
            ]);
        }
        let text = String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf8 csv");
        written.push(emit_text(run, "report/reliability.csv", &text)?);
    }
    Ok(written)
}
