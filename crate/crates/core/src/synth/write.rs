use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::{DetectionSynth, DetectionTruth, ExpectationSynth, PlantedTruth};
use crate::dataset::{
    write_channel_csv, write_detector_scores, write_ratings, write_scenes_csv, ChannelId, DatasetError, DatasetPaths,
    PresenceMatrix, SceneRecord,
};

/// Files written for a synthetic dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthFiles {
    pub paths: DatasetPaths,
    pub presence: PathBuf,
    pub truth: PathBuf,
}

#[derive(Serialize)]
struct TruthSidecar<'a> {
    expectation: &'a PlantedTruth,
    detection: Option<&'a DetectionTruth>,
}

/// Writes features, scene manifest, ratings, scores, the nontarget presence
/// matrix of the rated scenes and a `truth.json` sidecar into `dir`.
pub fn write_synth_dataset(
    dir: &Path,
    expectation: &ExpectationSynth,
    detection: Option<&DetectionSynth>,
) -> Result<SynthFiles, DatasetError> {
    std::fs::create_dir_all(dir).map_err(|source| DatasetError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut scenes: Vec<SceneRecord> = expectation.scenes.clone();
    if let Some(d) = detection {
        scenes.extend(d.scenes.iter().cloned());
    }

    let mut features = BTreeMap::new();
    for channel in ChannelId::ALL {
        let path = dir.join(format!("features_{}.csv", channel.letter()));
        write_channel_csv(&path, channel, &scenes)?;
        features.insert(channel, path);
    }
    let truth_categories = detection.map(|d| d.truth.targets.clone()).unwrap_or_default();
    let scenes_path = dir.join("scenes.csv");
    write_scenes_csv(&scenes_path, &scenes, &truth_categories)?;
    let ratings_path = dir.join("ratings.csv");
    write_ratings(&ratings_path, &expectation.ratings)?;
    let scores_path = dir.join("scores.csv");
    write_detector_scores(&scores_path, detection.map_or(&[][..], |d| &d.scores))?;

    let presence_path = dir.join("presence.json");
    PresenceMatrix::from_nontarget_channel(&expectation.scenes, expectation.truth.vocabulary.clone())?
        .write(&presence_path)?;
    let truth_path = dir.join("truth.json");
    let sidecar = TruthSidecar {
        expectation: &expectation.truth,
        detection: detection.map(|d| &d.truth),
    };
    crate::dataset::write_json(&truth_path, &sidecar)?;

    Ok(SynthFiles {
        paths: DatasetPaths {
            features,
            scenes: Some(scenes_path),
            ratings: Some(ratings_path),
            scores: Some(scores_path),
        },
        presence: presence_path,
        truth: truth_path,
    })
}
