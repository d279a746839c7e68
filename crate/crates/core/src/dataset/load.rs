use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{
    Category, ChannelId, DatasetError, DetectorScore, Frame, PixelBox, RawRating, SceneRecord,
    SliderRange,
};

/// Locations of the dataset files.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetPaths {
    #[serde(default)]
    pub features: BTreeMap<ChannelId, PathBuf>,
    #[serde(default)]
    pub scenes: Option<PathBuf>,
    #[serde(default)]
    pub ratings: Option<PathBuf>,
    #[serde(default)]
    pub scores: Option<PathBuf>,
}

impl DatasetPaths {
    /// Resolves relative paths against `base`.
    pub fn resolved(&self, base: &Path) -> Self {
        let join = |p: &PathBuf| base.join(p);
        Self {
            features: self.features.iter().map(|(c, p)| (*c, join(p))).collect(),
            scenes: self.scenes.as_ref().map(join),
            ratings: self.ratings.as_ref().map(join),
            scores: self.scores.as_ref().map(join),
        }
    }

    pub fn all(&self) -> Vec<&Path> {
        self.features
            .values()
            .chain(&self.scenes)
            .chain(&self.ratings)
            .chain(&self.scores)
            .map(PathBuf::as_path)
            .collect()
    }
}

/// Frame and slider conventions of a rating dataset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SchemaConfig {
    #[serde(default)]
    pub frame: Frame,
    #[serde(default)]
    pub slider: SliderRange,
}

/// Validated contents of a dataset.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub scenes: Vec<SceneRecord>,
    pub ratings: Vec<RawRating>,
    pub scores: Vec<DetectorScore>,
    pub schema: SchemaConfig,
}

impl Dataset {
    pub fn scene(&self, scene_id: &str) -> Option<&SceneRecord> {
        self.scenes.iter().find(|s| s.scene_id == scene_id)
    }

    /// Channel dimensionalities observed in the dataset.
    pub fn channel_dims(&self) -> BTreeMap<ChannelId, usize> {
        let mut dims = BTreeMap::new();
        for scene in &self.scenes {
            for (c, v) in &scene.channel_features {
                dims.entry(*c).or_insert(v.len());
            }
        }
        dims
    }

    pub fn categories(&self) -> BTreeSet<Category> {
        self.ratings.iter().map(|r| r.category.clone()).collect()
    }
}

fn file_name(path: &Path) -> String {
    path.display().to_string()
}

fn open_csv(path: &Path) -> Result<csv::Reader<std::fs::File>, DatasetError> {
    let file = std::fs::File::open(path).map_err(|source| DatasetError::Io {
        path: file_name(path),
        source,
    })?;
    Ok(csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

struct Table {
    file: String,
    header: Vec<String>,
    rows: Vec<(u64, csv::StringRecord)>,
}

impl Table {
    fn read(path: &Path) -> Result<Self, DatasetError> {
        let file = file_name(path);
        let mut reader = open_csv(path)?;
        let csv_err = |source| DatasetError::Csv {
            file: file.clone(),
            source,
        };
        let header: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(csv_err)?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() != header.len() {
                return Err(DatasetError::DimensionMismatch {
                    file: file.clone(),
                    line,
                    expected: header.len(),
                    found: record.len(),
                });
            }
            rows.push((line, record));
        }
        Ok(Self { file, header, rows })
    }

    fn column(&self, name: &str) -> Result<usize, DatasetError> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DatasetError::MissingColumn {
                file: self.file.clone(),
                column: name.to_string(),
            })
    }

    fn invalid(&self, line: u64, column: &str, message: impl Into<String>) -> DatasetError {
        DatasetError::InvalidField {
            file: self.file.clone(),
            line,
            column: column.to_string(),
            message: message.into(),
        }
    }

    fn number(&self, line: u64, column: &str, cell: &str, scene_id: &str) -> Result<f64, DatasetError> {
        let value: f64 = cell
            .parse()
            .map_err(|_| self.invalid(line, column, format!("'{cell}' is not a number")))?;
        if !value.is_finite() {
            return Err(DatasetError::NonFiniteValue {
                file: self.file.clone(),
                line,
                scene_id: scene_id.to_string(),
                column: column.to_string(),
            });
        }
        Ok(value)
    }
}

fn read_channel(path: &Path) -> Result<Vec<(String, Vec<f64>)>, DatasetError> {
    let table = Table::read(path)?;
    if table.header.first().map(String::as_str) != Some("scene_id") {
        return Err(DatasetError::MissingColumn {
            file: table.file.clone(),
            column: "scene_id".into(),
        });
    }
    if table.header.len() < 2 {
        return Err(DatasetError::MissingColumn {
            file: table.file.clone(),
            column: "f0".into(),
        });
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(table.rows.len());
    for (line, record) in &table.rows {
        let scene_id = record[0].to_string();
        if !seen.insert(scene_id.clone()) {
            return Err(DatasetError::Duplicate {
                file: table.file.clone(),
                line: *line,
                key: format!("scene '{scene_id}'"),
            });
        }
        let values = record
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, cell)| table.number(*line, &table.header[j], cell, &scene_id))
            .collect::<Result<Vec<f64>, _>>()?;
        out.push((scene_id, values));
    }
    Ok(out)
}

fn read_scene_manifest(path: &Path) -> Result<Vec<SceneRecord>, DatasetError> {
    let table = Table::read(path)?;
    let id_col = table.column("scene_id")?;
    let cat_col = table.column("scene_category")?;
    let truth_cols: Vec<(usize, Category)> = table
        .header
        .iter()
        .enumerate()
        .filter_map(|(j, h)| h.strip_prefix("gt:").map(|c| (j, Category::new(c))))
        .collect();
    let mut seen = BTreeSet::new();
    let mut scenes = Vec::with_capacity(table.rows.len());
    for (line, record) in &table.rows {
        let mut scene = SceneRecord::new(&record[id_col], &record[cat_col]);
        if !seen.insert(scene.scene_id.clone()) {
            return Err(DatasetError::Duplicate {
                file: table.file.clone(),
                line: *line,
                key: format!("scene '{}'", scene.scene_id),
            });
        }
        for (j, category) in &truth_cols {
            match &record[*j] {
                "" => {}
                "0" => scene = scene.with_truth(category.clone(), false),
                "1" => scene = scene.with_truth(category.clone(), true),
                other => {
                    return Err(table.invalid(*line, &table.header[*j], format!("expected 0 or 1, found '{other}'")))
                }
            }
        }
        scenes.push(scene);
    }
    Ok(scenes)
}

/// Reads a ratings CSV without cross-referencing scenes.
pub fn read_ratings(path: &Path, schema: &SchemaConfig) -> Result<Vec<RawRating>, DatasetError> {
    let table = Table::read(path)?;
    let cols = [
        "subject_id",
        "scene_id",
        "category",
        "likelihood_raw",
        "box_x",
        "box_y",
        "box_w",
        "box_h",
    ]
    .map(|c| table.column(c));
    let [subject, scene, category, likelihood, bx, by, bw, bh] = cols;
    let (subject, scene, category, likelihood) = (subject?, scene?, category?, likelihood?);
    let box_cols = [bx?, by?, bw?, bh?];

    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(table.rows.len());
    for (line, record) in &table.rows {
        let scene_id = &record[scene];
        let raw = table.number(*line, "likelihood_raw", &record[likelihood], scene_id)?;
        if !schema.slider.contains(raw) {
            return Err(table.invalid(
                *line,
                "likelihood_raw",
                format!("{raw} outside slider range [{}, {}]", schema.slider.min, schema.slider.max),
            ));
        }
        let cells: Vec<&str> = box_cols.iter().map(|&j| &record[j]).collect();
        let bbox = if cells.iter().all(|c| c.is_empty()) {
            None
        } else {
            let mut v = [0.0; 4];
            for (k, (&j, cell)) in box_cols.iter().zip(&cells).enumerate() {
                if cell.is_empty() {
                    return Err(table.invalid(*line, &table.header[j], "partial box"));
                }
                v[k] = table.number(*line, &table.header[j], cell, scene_id)?;
            }
            let b = PixelBox { x: v[0], y: v[1], w: v[2], h: v[3] };
            if !b.fits(&schema.frame) {
                return Err(table.invalid(*line, "box_x", "box lies outside the frame or is empty"));
            }
            if raw <= schema.slider.min {
                return Err(table.invalid(*line, "likelihood_raw", "box drawn for a zero-likelihood rating"));
            }
            Some(b)
        };
        let rating = RawRating {
            subject_id: record[subject].to_string(),
            scene_id: scene_id.to_string(),
            category: Category::new(&record[category]),
            likelihood_raw: raw,
            bbox,
        };
        let key = (rating.subject_id.clone(), rating.scene_id.clone(), rating.category.clone());
        if !seen.insert(key) {
            return Err(DatasetError::Duplicate {
                file: table.file.clone(),
                line: *line,
                key: format!(
                    "rating ({}, {}, {})",
                    rating.subject_id, rating.scene_id, rating.category
                ),
            });
        }
        out.push(rating);
    }
    Ok(out)
}

/// Reads a detector score CSV without cross-referencing scenes.
pub fn read_detector_scores(path: &Path) -> Result<Vec<DetectorScore>, DatasetError> {
    let table = Table::read(path)?;
    let scene = table.column("scene_id")?;
    let detector = table.column("detector_id")?;
    let category = table.column("category")?;
    let confidence = table.column("confidence")?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(table.rows.len());
    for (line, record) in &table.rows {
        let score = DetectorScore {
            scene_id: record[scene].to_string(),
            detector_id: record[detector].to_string(),
            category: Category::new(&record[category]),
            confidence: table.number(*line, "confidence", &record[confidence], &record[scene])?,
        };
        let key = (score.scene_id.clone(), score.detector_id.clone(), score.category.clone());
        if !seen.insert(key) {
            return Err(DatasetError::Duplicate {
                file: table.file.clone(),
                line: *line,
                key: format!(
                    "score ({}, {}, {})",
                    score.scene_id, score.detector_id, score.category
                ),
            });
        }
        out.push(score);
    }
    Ok(out)
}

fn line_of(path: &Path, scene_id: &str, column: &str) -> u64 {
    // Best effort: locate the offending row for the error message.
    let Ok(table) = Table::read(path) else {
        return 0;
    };
    let Ok(col) = table.column(column) else {
        return 0;
    };
    table
        .rows
        .iter()
        .find(|(_, r)| &r[col] == scene_id)
        .map_or(0, |(line, _)| *line)
}

/// Loads and cross-validates every file named in `paths`.
pub fn load_dataset(paths: &DatasetPaths, schema: &SchemaConfig) -> Result<Dataset, DatasetError> {
    let mut scenes: Vec<SceneRecord> = match &paths.scenes {
        Some(p) => read_scene_manifest(p)?,
        None => Vec::new(),
    };
    let mut index: HashMap<String, usize> = scenes
        .iter()
        .enumerate()
        .map(|(i, s)| (s.scene_id.clone(), i))
        .collect();

    for (&channel, path) in &paths.features {
        for (scene_id, values) in read_channel(path)? {
            let i = *index.entry(scene_id.clone()).or_insert_with(|| {
                scenes.push(SceneRecord::new(scene_id.clone(), ""));
                scenes.len() - 1
            });
            scenes[i].channel_features.insert(channel, values);
        }
    }

    let ratings = match &paths.ratings {
        Some(p) => {
            let ratings = read_ratings(p, schema)?;
            if let Some(r) = ratings.iter().find(|r| !index.contains_key(&r.scene_id)) {
                return Err(DatasetError::UnknownSceneReference {
                    file: file_name(p),
                    line: line_of(p, &r.scene_id, "scene_id"),
                    scene_id: r.scene_id.clone(),
                });
            }
            ratings
        }
        None => Vec::new(),
    };
    let scores = match &paths.scores {
        Some(p) => {
            let scores = read_detector_scores(p)?;
            if let Some(s) = scores.iter().find(|s| !index.contains_key(&s.scene_id)) {
                return Err(DatasetError::UnknownSceneReference {
                    file: file_name(p),
                    line: line_of(p, &s.scene_id, "scene_id"),
                    scene_id: s.scene_id.clone(),
                });
            }
            scores
        }
        None => Vec::new(),
    };

    Ok(Dataset {
        scenes,
        ratings,
        scores,
        schema: *schema,
    })
}

fn create(path: &Path) -> Result<csv::Writer<std::fs::File>, DatasetError> {
    let file = std::fs::File::create(path).map_err(|source| DatasetError::Io {
        path: file_name(path),
        source,
    })?;
    Ok(csv::Writer::from_writer(file))
}

fn finish(mut writer: csv::Writer<std::fs::File>, path: &Path) -> Result<(), DatasetError> {
    writer.flush().map_err(|source| DatasetError::Io {
        path: file_name(path),
        source,
    })
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> DatasetError + '_ {
    move |source| DatasetError::Csv {
        file: file_name(path),
        source,
    }
}

/// Writes one channel's features for every scene that has it.
pub fn write_channel_csv(path: &Path, channel: ChannelId, scenes: &[SceneRecord]) -> Result<(), DatasetError> {
    let dim = scenes
        .iter()
        .find_map(|s| s.features(channel))
        .map_or(0, <[f64]>::len);
    let mut w = create(path)?;
    let mut header = vec!["scene_id".to_string()];
    header.extend((0..dim).map(|j| format!("f{j}")));
    w.write_record(&header).map_err(csv_error(path))?;
    for scene in scenes {
        if let Some(values) = scene.features(channel) {
            let mut row = vec![scene.scene_id.clone()];
            row.extend(values.iter().map(|v| v.to_string()));
            w.write_record(&row).map_err(csv_error(path))?;
        }
    }
    finish(w, path)
}

/// Writes the scene manifest with one `gt:` column per category in `truth_categories`.
pub fn write_scenes_csv(
    path: &Path,
    scenes: &[SceneRecord],
    truth_categories: &[Category],
) -> Result<(), DatasetError> {
    let mut w = create(path)?;
    let mut header = vec!["scene_id".to_string(), "scene_category".to_string()];
    header.extend(truth_categories.iter().map(|c| format!("gt:{c}")));
    w.write_record(&header).map_err(csv_error(path))?;
    for scene in scenes {
        let mut row = vec![scene.scene_id.clone(), scene.scene_category.clone()];
        row.extend(truth_categories.iter().map(|c| match scene.truth(c) {
            Some(true) => "1".to_string(),
            Some(false) => "0".to_string(),
            None => String::new(),
        }));
        w.write_record(&row).map_err(csv_error(path))?;
    }
    finish(w, path)
}

pub fn write_ratings(path: &Path, ratings: &[RawRating]) -> Result<(), DatasetError> {
    let mut w = create(path)?;
    w.write_record([
        "subject_id",
        "scene_id",
        "category",
        "likelihood_raw",
        "box_x",
        "box_y",
        "box_w",
        "box_h",
    ])
    .map_err(csv_error(path))?;
    for r in ratings {
        let mut row = vec![
            r.subject_id.clone(),
            r.scene_id.clone(),
            r.category.to_string(),
            r.likelihood_raw.to_string(),
        ];
        match r.bbox {
            Some(b) => row.extend([b.x, b.y, b.w, b.h].iter().map(|v| v.to_string())),
            None => row.extend(std::iter::repeat_n(String::new(), 4)),
        }
        w.write_record(&row).map_err(csv_error(path))?;
    }
    finish(w, path)
}

pub fn write_detector_scores(path: &Path, scores: &[DetectorScore]) -> Result<(), DatasetError> {
    let mut w = create(path)?;
    w.write_record(["scene_id", "detector_id", "category", "confidence"])
        .map_err(csv_error(path))?;
    for s in scores {
        w.write_record([
            s.scene_id.as_str(),
            s.detector_id.as_str(),
            s.category.as_str(),
            &s.confidence.to_string(),
        ])
        .map_err(csv_error(path))?;
    }
    finish(w, path)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), DatasetError> {
    let mut file = std::fs::File::create(path).map_err(|source| DatasetError::Io {
        path: file_name(path),
        source,
    })?;
    file.write_all(text.as_bytes()).map_err(|source| DatasetError::Io {
        path: file_name(path),
        source,
    })
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: serde::Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), DatasetError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| DatasetError::Json {
        file: file_name(path),
        message: e.to_string(),
    })?;
    write_text(path, &(text + "\n"))
}
