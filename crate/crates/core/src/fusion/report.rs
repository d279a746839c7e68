use serde::{Deserialize, Serialize};

use super::ErrorBreakdown;

/// One augmented classifier relative to its baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Augmentation {
    pub feature_set: String,
    pub accuracy: f64,
    pub delta: f64,
    pub auc: f64,
    pub misses: usize,
    pub false_alarms: usize,
}

/// Detector x scene-set row: baseline and each augmentation, in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub detector: String,
    pub target: String,
    pub scene_set: String,
    pub n_scenes: usize,
    pub baseline: f64,
    pub baseline_auc: f64,
    pub baseline_breakdown: (usize, usize),
    pub augmentations: Vec<Augmentation>,
}

impl AccuracyRow {
    pub fn augmentation(
        feature_set: String,
        accuracy: f64,
        baseline: f64,
        auc: f64,
        breakdown: &ErrorBreakdown,
    ) -> Augmentation {
        Augmentation {
            feature_set,
            accuracy,
            delta: accuracy - baseline,
            auc,
            misses: breakdown.misses,
            false_alarms: breakdown.false_alarms,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AccuracyTable {
    pub rows: Vec<AccuracyRow>,
}

impl AccuracyTable {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("accuracy table serializes")
    }

    /// Long format: one line per row and feature set, baseline included.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "detector", "target", "scene_set", "n_scenes", "feature_set", "accuracy", "delta", "auc", "misses",
            "false_alarms",
        ])
        .expect("in-memory csv");
        for r in &self.rows {
            let base = [
                r.detector.clone(),
                r.target.clone(),
                r.scene_set.clone(),
                r.n_scenes.to_string(),
                "score".into(),
                r.baseline.to_string(),
                "0".into(),
                r.baseline_auc.to_string(),
                r.baseline_breakdown.0.to_string(),
                r.baseline_breakdown.1.to_string(),
            ];
            w.write_record(&base).expect("in-memory csv");
            for a in &r.augmentations {
                w.write_record([
                    r.detector.clone(),
                    r.target.clone(),
                    r.scene_set.clone(),
                    r.n_scenes.to_string(),
                    a.feature_set.clone(),
                    a.accuracy.to_string(),
                    a.delta.to_string(),
                    a.auc.to_string(),
                    a.misses.to_string(),
                    a.false_alarms.to_string(),
                ])
                .expect("in-memory csv");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf8 csv")
    }
}
