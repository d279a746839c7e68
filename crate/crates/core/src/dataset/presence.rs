use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::{ChannelId, DatasetError, SceneRecord};

/// Scenes x object labels presence table.
#[derive(Debug, Clone, PartialEq)]
pub struct PresenceMatrix {
    vocabulary: Vec<String>,
    scene_ids: Vec<String>,
    rows: Vec<Vec<bool>>,
}

#[derive(Serialize, Deserialize)]
struct PresenceJson {
    vocabulary: Vec<String>,
    rows: BTreeMap<String, Vec<u8>>,
}

impl PresenceMatrix {
    pub fn new(
        vocabulary: Vec<String>,
        scene_ids: Vec<String>,
        rows: Vec<Vec<bool>>,
    ) -> Result<Self, DatasetError> {
        let unique: BTreeSet<&String> = vocabulary.iter().collect();
        if unique.len() != vocabulary.len() {
            return Err(DatasetError::InvalidPresence("duplicate vocabulary label".into()));
        }
        if rows.len() != scene_ids.len() {
            return Err(DatasetError::InvalidPresence(format!(
                "{} rows for {} scenes",
                rows.len(),
                scene_ids.len()
            )));
        }
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != vocabulary.len()) {
            return Err(DatasetError::InvalidPresence(format!(
                "scene '{}' has {} entries for a vocabulary of {}",
                scene_ids[i],
                row.len(),
                vocabulary.len()
            )));
        }
        Ok(Self {
            vocabulary,
            scene_ids,
            rows,
        })
    }

    /// Builds the matrix from binary nontarget features (values > 0.5 count
    /// as present). Scenes without the channel are skipped.
    pub fn from_nontarget_channel(scenes: &[SceneRecord], vocabulary: Vec<String>) -> Result<Self, DatasetError> {
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        for scene in scenes {
            if let Some(values) = scene.features(ChannelId::Nontarget) {
                ids.push(scene.scene_id.clone());
                rows.push(values.iter().map(|v| *v > 0.5).collect());
            }
        }
        Self::new(vocabulary, ids, rows)
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn scene_ids(&self) -> &[String] {
        &self.scene_ids
    }

    pub fn n_scenes(&self) -> usize {
        self.scene_ids.len()
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.vocabulary.iter().position(|v| v == label)
    }

    /// Presence of `label` in every scene, in scene order.
    pub fn column(&self, label: &str) -> Option<Vec<bool>> {
        let j = self.label_index(label)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn from_json(text: &str) -> Result<Self, DatasetError> {
        let parsed: PresenceJson = serde_json::from_str(text).map_err(|e| DatasetError::Json {
            file: "<presence>".into(),
            message: e.to_string(),
        })?;
        let mut ids = Vec::with_capacity(parsed.rows.len());
        let mut rows = Vec::with_capacity(parsed.rows.len());
        for (scene, values) in parsed.rows {
            let row = values
                .iter()
                .map(|v| match v {
                    0 => Ok(false),
                    1 => Ok(true),
                    other => Err(DatasetError::InvalidPresence(format!(
                        "scene '{scene}': entry {other} is not 0 or 1"
                    ))),
                })
                .collect::<Result<Vec<bool>, _>>()?;
            ids.push(scene);
            rows.push(row);
        }
        Self::new(parsed.vocabulary, ids, rows)
    }

    pub fn to_json(&self) -> String {
        let json = PresenceJson {
            vocabulary: self.vocabulary.clone(),
            rows: self
                .scene_ids
                .iter()
                .zip(&self.rows)
                .map(|(s, r)| (s.clone(), r.iter().map(|&b| u8::from(b)).collect()))
                .collect(),
        };
        serde_json::to_string_pretty(&json).expect("presence json")
    }

    pub fn read(path: &Path) -> Result<Self, DatasetError> {
        let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text).map_err(|e| match e {
            DatasetError::Json { message, .. } => DatasetError::Json {
                file: path.display().to_string(),
                message,
            },
            other => other,
        })
    }

    pub fn write(&self, path: &Path) -> Result<(), DatasetError> {
        super::load::write_text(path, &self.to_json())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_and_validation() {
        let m = PresenceMatrix::new(
            vec!["tree".into(), "bench".into()],
            vec!["a".into(), "b".into()],
            vec![vec![true, false], vec![false, false]],
        )
        .unwrap();
        let back = PresenceMatrix::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.column("tree"), Some(vec![true, false]));

        let dup = r#"{"vocabulary": ["a", "a"], "rows": {}}"#;
        assert!(matches!(PresenceMatrix::from_json(dup), Err(DatasetError::InvalidPresence(_))));
        let short = r#"{"vocabulary": ["a", "b"], "rows": {"s": [1]}}"#;
        assert!(matches!(PresenceMatrix::from_json(short), Err(DatasetError::InvalidPresence(_))));
        let bad = r#"{"vocabulary": ["a"], "rows": {"s": [2]}}"#;
        assert!(matches!(PresenceMatrix::from_json(bad), Err(DatasetError::InvalidPresence(_))));
    }
}
