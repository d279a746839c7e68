use rand::seq::SliceRandom;
use std::cmp::Ordering;

use super::{mean, pearson, sample_sd, spearman_brown, NumericsError};
use crate::rng::{stream_rng, Stream};

/// Per-subject ratings of a set of scenes; `None` marks a missing rating.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingMatrix {
    subject_ids: Vec<String>,
    scene_ids: Vec<String>,
    values: Vec<Vec<Option<f64>>>,
}

impl RatingMatrix {
    pub fn new(
        subject_ids: Vec<String>,
        scene_ids: Vec<String>,
        values: Vec<Vec<Option<f64>>>,
    ) -> Result<Self, NumericsError> {
        if values.len() != subject_ids.len() {
            return Err(NumericsError::DimensionMismatch {
                expected: subject_ids.len(),
                found: values.len(),
            });
        }
        if let Some(row) = values.iter().find(|row| row.len() != scene_ids.len()) {
            return Err(NumericsError::DimensionMismatch {
                expected: scene_ids.len(),
                found: row.len(),
            });
        }
        if values.iter().flatten().flatten().any(|v| !v.is_finite()) {
            return Err(NumericsError::NonFinite);
        }
        let mut sorted = subject_ids.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != subject_ids.len() {
            return Err(NumericsError::InvalidShape("duplicate subject ids".into()));
        }
        Ok(Self {
            subject_ids,
            scene_ids,
            values,
        })
    }

    /// Convenience constructor for a complete matrix.
    pub fn from_dense(
        subject_ids: Vec<String>,
        scene_ids: Vec<String>,
        values: Vec<Vec<f64>>,
    ) -> Result<Self, NumericsError> {
        let values = values
            .into_iter()
            .map(|row| row.into_iter().map(Some).collect())
            .collect();
        Self::new(subject_ids, scene_ids, values)
    }

    pub fn n_subjects(&self) -> usize {
        self.subject_ids.len()
    }

    pub fn n_scenes(&self) -> usize {
        self.scene_ids.len()
    }

    pub fn subject_ids(&self) -> &[String] {
        &self.subject_ids
    }

    pub fn scene_ids(&self) -> &[String] {
        &self.scene_ids
    }

    /// Per-scene mean over all subjects (None where nobody rated).
    pub fn scene_means(&self) -> Vec<Option<f64>> {
        let all: Vec<usize> = (0..self.n_subjects()).collect();
        self.group_means(&all)
    }

    /// Subject indices in natural order of their ids ("s2" before "s10").
    fn canonical_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.n_subjects()).collect();
        order.sort_by(|&a, &b| natural_cmp(&self.subject_ids[a], &self.subject_ids[b]));
        order
    }

    fn group_means(&self, group: &[usize]) -> Vec<Option<f64>> {
        (0..self.n_scenes())
            .map(|scene| {
                let mut rated: Vec<(&str, f64)> = group
                    .iter()
                    .filter_map(|&s| self.values[s][scene].map(|v| (self.subject_ids[s].as_str(), v)))
                    .collect();
                if rated.is_empty() {
                    return None;
                }
                // Fixed summation order keeps means independent of subject order.
                rated.sort_by(|a, b| a.0.cmp(b.0));
                Some(rated.iter().map(|r| r.1).sum::<f64>() / rated.len() as f64)
            })
            .collect()
    }

    /// Correlation between per-scene means of two subject groups over the
    /// scenes both groups rated.
    fn half_correlation(&self, a: &[usize], b: &[usize]) -> Result<(f64, usize), NumericsError> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .group_means(a)
            .into_iter()
            .zip(self.group_means(b))
            .filter_map(|(x, y)| Some((x?, y?)))
            .unzip();
        let r = pearson(&xs, &ys)?;
        Ok((r, xs.len()))
    }
}

/// Natural ordering: digit runs compare numerically.
fn natural_cmp(a: &str, b: &str) -> Ordering {
    fn chunks(s: &str) -> Vec<(bool, &str)> {
        let mut out = Vec::new();
        let mut start = 0;
        let bytes = s.as_bytes();
        for i in 1..=bytes.len() {
            if i == bytes.len() || bytes[i].is_ascii_digit() != bytes[start].is_ascii_digit() {
                out.push((bytes[start].is_ascii_digit(), &s[start..i]));
                start = i;
            }
        }
        out
    }
    let (ca, cb) = (chunks(a), chunks(b));
    for (x, y) in ca.iter().zip(&cb) {
        let ord = match (x, y) {
            ((true, x), (true, y)) => {
                let (x, y) = (x.trim_start_matches('0'), y.trim_start_matches('0'));
                x.len().cmp(&y.len()).then_with(|| x.cmp(y))
            }
            ((_, x), (_, y)) => x.cmp(y),
        };
        if ord.is_ne() {
            return ord;
        }
    }
    ca.len().cmp(&cb.len()).then_with(|| a.cmp(b))
}

/// Split-half reliability over random subject halves.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityEstimate {
    /// Mean raw split-half correlation over valid resamples.
    pub split_half_r: f64,
    /// Spearman-Brown correction of `split_half_r`.
    pub corrected_rc: f64,
    /// Resamples that produced a defined correlation.
    pub n_resamples: usize,
    /// Mean of the per-resample corrected correlations.
    pub mean: f64,
    /// Sample sd of the per-resample corrected correlations.
    pub sd: f64,
}

/// One deterministic split of subjects into two halves.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitHalf {
    pub r: f64,
    pub corrected: f64,
    pub n_scenes: usize,
}

/// Noise ceiling: for each resample, subjects are partitioned without
/// replacement into two random halves, per-scene half means are correlated,
/// and the correlation is Spearman-Brown corrected.
///
/// Half assignments are derived from subjects sorted by id, so permuting the
/// input rows does not change the result. Scenes missing from either half
/// are dropped from that resample.
pub fn split_half_ceiling(
    ratings: &RatingMatrix,
    n_resamples: usize,
    seed: u64,
) -> Result<ReliabilityEstimate, NumericsError> {
    let n = ratings.n_subjects();
    if n < 2 {
        return Err(NumericsError::TooFewSubjects(n));
    }
    let canonical = ratings.canonical_order();
    let half = n / 2;
    let mut raw = Vec::with_capacity(n_resamples);
    let mut corrected = Vec::with_capacity(n_resamples);
    for i in 0..n_resamples {
        let mut rng = stream_rng(seed, Stream::HalfSplit, i as u64);
        let mut order = canonical.clone();
        order.shuffle(&mut rng);
        let (a, b) = order.split_at(half);
        let Ok((r, _)) = ratings.half_correlation(a, b) else {
            continue;
        };
        let Ok(rc) = spearman_brown(r) else {
            continue;
        };
        raw.push(r);
        corrected.push(rc);
    }
    if raw.is_empty() {
        return Err(NumericsError::NoValidResample);
    }
    let split_half_r = mean(&raw);
    Ok(ReliabilityEstimate {
        split_half_r,
        corrected_rc: spearman_brown(split_half_r)?,
        n_resamples: raw.len(),
        mean: mean(&corrected),
        sd: sample_sd(&corrected),
    })
}

/// Split into odd- and even-numbered subjects (natural id order).
pub fn odd_even_split(ratings: &RatingMatrix) -> Result<SplitHalf, NumericsError> {
    let n = ratings.n_subjects();
    if n < 2 {
        return Err(NumericsError::TooFewSubjects(n));
    }
    let order = ratings.canonical_order();
    let odd: Vec<usize> = order.iter().step_by(2).copied().collect();
    let even: Vec<usize> = order.iter().skip(1).step_by(2).copied().collect();
    let (r, n_scenes) = ratings.half_correlation(&odd, &even)?;
    Ok(SplitHalf {
        r,
        corrected: spearman_brown(r)?,
        n_scenes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn ids(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{}", i + 1)).collect()
    }

    #[test]
    fn natural_order() {
        let mut v = vec!["s10", "s2", "s1", "s02b"];
        v.sort_by(|a, b| natural_cmp(a, b));
        assert_eq!(v, vec!["s1", "s2", "s02b", "s10"]);
    }

    #[test]
    fn identical_subjects_give_unit_ceiling() {
        let scene: Vec<f64> = (0..30).map(|i| ((i * 37) % 11) as f64 * 0.1).collect();
        let m = RatingMatrix::from_dense(ids("s", 6), ids("sc", 30), vec![scene; 6]).unwrap();
        let est = split_half_ceiling(&m, 50, 1).unwrap();
        assert_eq!(est.n_resamples, 50);
        assert!((est.mean - 1.0).abs() < 1e-12);
        assert!(est.sd < 1e-12);
    }

    #[test]
    fn independent_subjects_have_null_ceiling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let values: Vec<Vec<f64>> = (0..2)
            .map(|_| (0..650).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let m = RatingMatrix::from_dense(ids("s", 2), ids("sc", 650), values).unwrap();
        let est = split_half_ceiling(&m, 1000, 4).unwrap();
        assert!(est.mean.abs() < 0.1, "mean {}", est.mean);
    }

    #[test]
    fn subject_order_does_not_matter() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let values: Vec<Vec<f64>> = (0..7)
            .map(|_| (0..40).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let subjects = ids("s", 7);
        let a = RatingMatrix::from_dense(subjects.clone(), ids("sc", 40), values.clone()).unwrap();
        let perm = [3, 6, 0, 5, 1, 4, 2];
        let b = RatingMatrix::from_dense(
            perm.iter().map(|&i| subjects[i].clone()).collect(),
            ids("sc", 40),
            perm.iter().map(|&i| values[i].clone()).collect(),
        )
        .unwrap();
        assert_eq!(split_half_ceiling(&a, 64, 9).unwrap(), split_half_ceiling(&b, 64, 9).unwrap());
        assert_eq!(odd_even_split(&a).unwrap(), odd_even_split(&b).unwrap());
    }

    #[test]
    fn gaps_drop_scenes_with_an_empty_half() {
        // Only subject s1 rated scene 0; odd/even split leaves that scene
        // without an even-half mean.
        let mut values = vec![vec![Some(1.0), Some(2.0), Some(3.0), Some(5.0)]; 2];
        values[1][0] = None;
        let m = RatingMatrix::new(ids("s", 2), ids("sc", 4), values).unwrap();
        let split = odd_even_split(&m).unwrap();
        assert_eq!(split.n_scenes, 3);
        assert!((split.r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn estimate_fields_are_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let latent: Vec<f64> = (0..100).map(|_| StandardNormal.sample(&mut rng)).collect();
        let values: Vec<Vec<f64>> = (0..8)
            .map(|_| {
                latent
                    .iter()
                    .map(|v| v + <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
                    .collect()
            })
            .collect();
        let m = RatingMatrix::from_dense(ids("s", 8), ids("sc", 100), values).unwrap();
        let est = split_half_ceiling(&m, 200, 2).unwrap();
        let sb = 2.0 * est.split_half_r / (1.0 + est.split_half_r);
        assert!((est.corrected_rc - sb).abs() < 1e-15);
        assert!(est.sd > 0.0);
    }

    #[test]
    fn too_few_subjects() {
        let m = RatingMatrix::from_dense(ids("s", 1), ids("sc", 5), vec![vec![1.0; 5]]).unwrap();
        assert_eq!(split_half_ceiling(&m, 10, 0), Err(NumericsError::TooFewSubjects(1)));
        assert_eq!(odd_even_split(&m), Err(NumericsError::TooFewSubjects(1)));
    }
}
