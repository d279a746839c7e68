use std::collections::BTreeMap;

use super::{Category, DatasetError, Frame, RatingAggregate, RatingDimension, RawRating, SliderRange};
use crate::numerics::{NumericsError, RatingMatrix};

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

impl RatingAggregate {
    /// Averages the ratings of one scene and category.
    ///
    /// Likelihood averages over every subject; location, scale and aspect
    /// average over subjects who drew a box.
    pub fn from_ratings(
        scene_id: &str,
        category: &Category,
        ratings: &[&RawRating],
        frame: &Frame,
        slider: &SliderRange,
    ) -> Result<Self, DatasetError> {
        if ratings.is_empty() {
            return Err(DatasetError::EmptyRatingSet {
                scene_id: scene_id.to_string(),
                category: category.to_string(),
            });
        }
        let mut ordered: Vec<&RawRating> = ratings.to_vec();
        ordered.sort_by(|a, b| {
            a.subject_id
                .cmp(&b.subject_id)
                .then(a.likelihood_raw.total_cmp(&b.likelihood_raw))
        });
        let boxes: Vec<_> = ordered.iter().filter_map(|r| r.bbox).collect();
        let geometry = |f: &dyn Fn(&super::PixelBox) -> f64| mean_of(boxes.iter().map(f));
        Ok(Self {
            scene_id: scene_id.to_string(),
            category: category.clone(),
            likelihood: mean_of(ordered.iter().map(|r| slider.normalize(r.likelihood_raw)))
                .expect("nonempty"),
            xpos: geometry(&|b| b.center_x(frame)),
            ypos: geometry(&|b| b.center_y(frame)),
            scale: geometry(&|b| b.scale(frame)),
            aspect: geometry(&|b| b.aspect()),
            n_subjects: ordered.len(),
            n_boxes: boxes.len(),
        })
    }
}

/// Aggregates ratings per (scene, category), sorted by scene id then category.
pub fn aggregate_ratings(
    ratings: &[RawRating],
    frame: &Frame,
    slider: &SliderRange,
) -> Result<Vec<RatingAggregate>, DatasetError> {
    let mut groups: BTreeMap<(&str, &Category), Vec<&RawRating>> = BTreeMap::new();
    for r in ratings {
        groups.entry((&r.scene_id, &r.category)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((scene, category), group)| {
            RatingAggregate::from_ratings(scene, category, &group, frame, slider)
        })
        .collect()
}

/// Subjects x scenes matrix of one rating dimension, for reliability
/// estimates. Missing ratings and missing boxes become gaps.
pub fn rating_matrix(
    ratings: &[RawRating],
    category: &Category,
    dimension: RatingDimension,
    scene_ids: &[String],
    frame: &Frame,
    slider: &SliderRange,
) -> Result<RatingMatrix, NumericsError> {
    let column: BTreeMap<&str, usize> = scene_ids
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let mut rows: BTreeMap<&str, Vec<Option<f64>>> = BTreeMap::new();
    for r in ratings.iter().filter(|r| &r.category == category) {
        let Some(&j) = column.get(r.scene_id.as_str()) else {
            continue;
        };
        let row = rows
            .entry(r.subject_id.as_str())
            .or_insert_with(|| vec![None; scene_ids.len()]);
        row[j] = dimension.of_rating(r, frame, slider);
    }
    let subjects = rows.keys().map(|s| s.to_string()).collect();
    RatingMatrix::new(subjects, scene_ids.to_vec(), rows.into_values().collect())
}

#[cfg(test)]
mod tests {
    use super::super::PixelBox;
    use super::*;

    fn rating(subject: &str, scene: &str, raw: f64, bbox: Option<PixelBox>) -> RawRating {
        RawRating {
            subject_id: subject.into(),
            scene_id: scene.into(),
            category: Category::car(),
            likelihood_raw: raw,
            bbox,
        }
    }

    const FULL: PixelBox = PixelBox { x: 0.0, y: 0.0, w: 640.0, h: 480.0 };

    #[test]
    fn single_full_frame_box() {
        let agg = aggregate_ratings(
            &[rating("s1", "a", 100.0, Some(FULL))],
            &Frame::default(),
            &SliderRange::default(),
        )
        .unwrap();
        let a = &agg[0];
        assert_eq!(a.likelihood, 1.0);
        assert_eq!(a.xpos, Some(0.5));
        assert_eq!(a.ypos, Some(0.5));
        assert_eq!(a.scale, Some(1.0));
        assert_eq!(a.aspect, Some(0.75));
        assert_eq!((a.n_subjects, a.n_boxes), (1, 1));
    }

    #[test]
    fn boxless_raters_count_only_towards_likelihood() {
        let agg = aggregate_ratings(
            &[rating("s1", "a", 0.0, None), rating("s2", "a", 100.0, Some(FULL))],
            &Frame::default(),
            &SliderRange::default(),
        )
        .unwrap();
        assert_eq!(agg[0].likelihood, 0.5);
        assert_eq!(agg[0].n_boxes, 1);
        assert_eq!(agg[0].scale, Some(1.0));
        assert_eq!(agg[0].aspect, Some(0.75));
    }

    #[test]
    fn zero_likelihood_scene_has_no_geometry() {
        let agg = aggregate_ratings(
            &[rating("s1", "a", 0.0, None), rating("s2", "a", 0.0, None)],
            &Frame::default(),
            &SliderRange::default(),
        )
        .unwrap();
        assert_eq!(agg[0].likelihood, 0.0);
        assert!(agg[0].xpos.is_none() && agg[0].aspect.is_none());
    }

    #[test]
    fn custom_slider_and_frame() {
        let slider = SliderRange { min: -1.0, max: 1.0 };
        let frame = Frame { width_px: 100.0, height_px: 50.0 };
        let b = PixelBox { x: 10.0, y: 10.0, w: 20.0, h: 10.0 };
        let agg = aggregate_ratings(&[rating("s", "a", 0.0, Some(b))], &frame, &slider).unwrap();
        assert_eq!(agg[0].likelihood, 0.5);
        assert_eq!(agg[0].xpos, Some(0.2));
        assert_eq!(agg[0].ypos, Some(0.3));
        assert_eq!(agg[0].scale, Some(200.0 / 5000.0));
        assert_eq!(agg[0].aspect, Some(0.5));
    }

    #[test]
    fn empty_group_is_an_error() {
        let err = RatingAggregate::from_ratings(
            "a",
            &Category::car(),
            &[],
            &Frame::default(),
            &SliderRange::default(),
        );
        assert!(matches!(err, Err(DatasetError::EmptyRatingSet { .. })));
    }

    #[test]
    fn matrix_marks_missing_boxes_as_gaps() {
        let ratings = [
            rating("s1", "a", 0.0, None),
            rating("s2", "a", 50.0, Some(FULL)),
            rating("s1", "b", 20.0, Some(FULL)),
        ];
        let scenes = vec!["a".to_string(), "b".to_string()];
        let m = rating_matrix(
            &ratings,
            &Category::car(),
            RatingDimension::Scale,
            &scenes,
            &Frame::default(),
            &SliderRange::default(),
        )
        .unwrap();
        assert_eq!(m.n_subjects(), 2);
        assert_eq!(m.scene_means(), vec![Some(1.0), Some(1.0)]);
    }
}
