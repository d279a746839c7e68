use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// One of the three per-scene feature channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ChannelId {
    #[serde(rename = "T")]
    Target,
    #[serde(rename = "N")]
    Nontarget,
    #[serde(rename = "C")]
    Coarse,
}

impl ChannelId {
    pub const ALL: [ChannelId; 3] = [ChannelId::Target, ChannelId::Nontarget, ChannelId::Coarse];

    pub fn letter(self) -> char {
        match self {
            ChannelId::Target => 'T',
            ChannelId::Nontarget => 'N',
            ChannelId::Coarse => 'C',
        }
    }

    fn bit(self) -> u8 {
        match self {
            ChannelId::Target => 1,
            ChannelId::Nontarget => 2,
            ChannelId::Coarse => 4,
        }
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for ChannelId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "T" | "t" | "target" => Ok(ChannelId::Target),
            "N" | "n" | "nontarget" => Ok(ChannelId::Nontarget),
            "C" | "c" | "coarse" => Ok(ChannelId::Coarse),
            other => Err(format!("unknown channel '{other}'")),
        }
    }
}

/// A nonempty subset of channels, written as in the model tables
/// (`T`, `N`, `C`, `TN`, `TC`, `NC`, `TNC`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChannelSet(u8);

impl ChannelSet {
    pub const T: ChannelSet = ChannelSet(1);
    pub const N: ChannelSet = ChannelSet(2);
    pub const C: ChannelSet = ChannelSet(4);
    pub const TN: ChannelSet = ChannelSet(3);
    pub const TC: ChannelSet = ChannelSet(5);
    pub const NC: ChannelSet = ChannelSet(6);
    pub const TNC: ChannelSet = ChannelSet(7);

    /// The seven subsets in table order.
    pub const ALL: [ChannelSet; 7] = [
        ChannelSet::TNC,
        ChannelSet::T,
        ChannelSet::N,
        ChannelSet::C,
        ChannelSet::TN,
        ChannelSet::TC,
        ChannelSet::NC,
    ];

    pub fn from_channels(channels: impl IntoIterator<Item = ChannelId>) -> Option<Self> {
        let bits = channels.into_iter().fold(0u8, |acc, c| acc | c.bit());
        (bits != 0).then_some(ChannelSet(bits))
    }

    pub fn contains(self, channel: ChannelId) -> bool {
        self.0 & channel.bit() != 0
    }

    /// Member channels in T, N, C order.
    pub fn channels(self) -> Vec<ChannelId> {
        ChannelId::ALL.into_iter().filter(|c| self.contains(*c)).collect()
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        false
    }

    pub fn label(self) -> String {
        self.channels().iter().map(|c| c.letter()).collect()
    }
}

impl fmt::Display for ChannelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for ChannelSet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let channels = s
            .trim()
            .chars()
            .map(|c| c.to_string().parse::<ChannelId>())
            .collect::<Result<Vec<_>, _>>()?;
        ChannelSet::from_channels(channels).ok_or_else(|| "empty channel set".to_string())
    }
}

impl Serialize for ChannelSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for ChannelSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Object category label (`car`, `person`, or any detector label).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Category(String);

impl Category {
    pub fn new(label: impl AsRef<str>) -> Self {
        Category(label.as_ref().trim().to_string())
    }

    pub fn car() -> Self {
        Category::new("car")
    }

    pub fn person() -> Self {
        Category::new("person")
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Category {
    fn from(s: &str) -> Self {
        Category::new(s)
    }
}

/// One scene: identity, per-channel features, optional target presence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    pub scene_id: String,
    pub scene_category: String,
    pub channel_features: BTreeMap<ChannelId, Vec<f64>>,
    pub ground_truth: Option<BTreeMap<Category, bool>>,
}

impl SceneRecord {
    pub fn new(scene_id: impl Into<String>, scene_category: impl Into<String>) -> Self {
        Self {
            scene_id: scene_id.into(),
            scene_category: scene_category.into(),
            channel_features: BTreeMap::new(),
            ground_truth: None,
        }
    }

    pub fn with_channel(mut self, channel: ChannelId, features: Vec<f64>) -> Self {
        self.channel_features.insert(channel, features);
        self
    }

    pub fn with_truth(mut self, category: Category, present: bool) -> Self {
        self.ground_truth
            .get_or_insert_with(BTreeMap::new)
            .insert(category, present);
        self
    }

    pub fn features(&self, channel: ChannelId) -> Option<&[f64]> {
        self.channel_features.get(&channel).map(Vec::as_slice)
    }

    pub fn truth(&self, category: &Category) -> Option<bool> {
        self.ground_truth.as_ref()?.get(category).copied()
    }
}

/// Pixel frame in which rating boxes are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub width_px: f64,
    pub height_px: f64,
}

impl Default for Frame {
    fn default() -> Self {
        Self {
            width_px: 640.0,
            height_px: 480.0,
        }
    }
}

/// Raw slider scale for likelihood ratings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliderRange {
    pub min: f64,
    pub max: f64,
}

impl Default for SliderRange {
    fn default() -> Self {
        Self { min: 0.0, max: 100.0 }
    }
}

impl SliderRange {
    /// Linear map of slider units onto [0, 1].
    pub fn normalize(&self, raw: f64) -> f64 {
        (raw - self.min) / (self.max - self.min)
    }

    pub fn contains(&self, raw: f64) -> bool {
        raw >= self.min && raw <= self.max
    }
}

/// Rectangle in pixels, top-left origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl PixelBox {
    pub const EDGE_TOLERANCE_PX: f64 = 1e-6;

    /// True when the box is nonempty and inside the frame, allowing
    /// [`PixelBox::EDGE_TOLERANCE_PX`] of rounding at the edges.
    pub fn fits(&self, frame: &Frame) -> bool {
        let tol = Self::EDGE_TOLERANCE_PX;
        self.w > 0.0
            && self.h > 0.0
            && self.x >= -tol
            && self.y >= -tol
            && self.x + self.w <= frame.width_px + tol
            && self.y + self.h <= frame.height_px + tol
    }

    pub fn center_x(&self, frame: &Frame) -> f64 {
        (self.x + self.w / 2.0) / frame.width_px
    }

    pub fn center_y(&self, frame: &Frame) -> f64 {
        (self.y + self.h / 2.0) / frame.height_px
    }

    /// Area as a fraction of the frame.
    pub fn scale(&self, frame: &Frame) -> f64 {
        (self.w * self.h) / (frame.width_px * frame.height_px)
    }

    /// Vertical over horizontal extent.
    pub fn aspect(&self) -> f64 {
        self.h / self.w
    }
}

/// One subject's rating of one scene for one category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRating {
    pub subject_id: String,
    pub scene_id: String,
    pub category: Category,
    pub likelihood_raw: f64,
    pub bbox: Option<PixelBox>,
}

/// The rating dimensions that expectation models predict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RatingDimension {
    Likelihood,
    XPos,
    YPos,
    Scale,
    Aspect,
}

impl RatingDimension {
    pub const ALL: [RatingDimension; 5] = [
        RatingDimension::Likelihood,
        RatingDimension::XPos,
        RatingDimension::YPos,
        RatingDimension::Scale,
        RatingDimension::Aspect,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RatingDimension::Likelihood => "likelihood",
            RatingDimension::XPos => "xpos",
            RatingDimension::YPos => "ypos",
            RatingDimension::Scale => "scale",
            RatingDimension::Aspect => "aspect",
        }
    }

    pub fn is_geometry(self) -> bool {
        self != RatingDimension::Likelihood
    }

    /// The aggregate's value for this dimension, if defined.
    pub fn of(self, aggregate: &RatingAggregate) -> Option<f64> {
        match self {
            RatingDimension::Likelihood => Some(aggregate.likelihood),
            RatingDimension::XPos => aggregate.xpos,
            RatingDimension::YPos => aggregate.ypos,
            RatingDimension::Scale => aggregate.scale,
            RatingDimension::Aspect => aggregate.aspect,
        }
    }

    /// A single subject's value for this dimension, if defined.
    pub fn of_rating(self, rating: &RawRating, frame: &Frame, slider: &SliderRange) -> Option<f64> {
        let bbox = rating.bbox.as_ref();
        match self {
            RatingDimension::Likelihood => Some(slider.normalize(rating.likelihood_raw)),
            RatingDimension::XPos => bbox.map(|b| b.center_x(frame)),
            RatingDimension::YPos => bbox.map(|b| b.center_y(frame)),
            RatingDimension::Scale => bbox.map(|b| b.scale(frame)),
            RatingDimension::Aspect => bbox.map(|b| b.aspect()),
        }
    }
}

impl fmt::Display for RatingDimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RatingDimension {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RatingDimension::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown rating dimension '{s}'"))
    }
}

/// Subject-averaged expectations for one scene and category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingAggregate {
    pub scene_id: String,
    pub category: Category,
    pub likelihood: f64,
    pub xpos: Option<f64>,
    pub ypos: Option<f64>,
    pub scale: Option<f64>,
    pub aspect: Option<f64>,
    pub n_subjects: usize,
    pub n_boxes: usize,
}

/// Highest confidence of one detector for one category in one scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorScore {
    pub scene_id: String,
    pub detector_id: String,
    pub category: Category,
    pub confidence: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seven_channel_subsets() {
        let labels: Vec<String> = ChannelSet::ALL.iter().map(|s| s.label()).collect();
        assert_eq!(labels, ["TNC", "T", "N", "C", "TN", "TC", "NC"]);
        for set in ChannelSet::ALL {
            assert_eq!(set.label().parse::<ChannelSet>().unwrap(), set);
        }
        assert_eq!("CN".parse::<ChannelSet>().unwrap(), ChannelSet::NC);
        assert!("".parse::<ChannelSet>().is_err());
        assert!("X".parse::<ChannelSet>().is_err());
        assert_eq!(ChannelSet::TNC.len(), 3);
    }

    #[test]
    fn full_frame_box_geometry() {
        let frame = Frame::default();
        let b = PixelBox { x: 0.0, y: 0.0, w: 640.0, h: 480.0 };
        assert!(b.fits(&frame));
        assert_eq!(b.center_x(&frame), 0.5);
        assert_eq!(b.center_y(&frame), 0.5);
        assert_eq!(b.scale(&frame), 1.0);
        assert_eq!(b.aspect(), 0.75);
        assert!(!PixelBox { x: 1.0, ..b }.fits(&frame));
        assert!(!PixelBox { w: 0.0, ..b }.fits(&frame));
    }

    #[test]
    fn dimension_names_round_trip() {
        for d in RatingDimension::ALL {
            assert_eq!(d.name().parse::<RatingDimension>().unwrap(), d);
        }
    }
}
