use statrs::distribution::{ContinuousCDF, Normal};

use super::SynthError;

/// Expected raw correlation between the means of two subject groups of
/// sizes `m1` and `m2`, each rating `signal + sigma * noise` where the
/// signal has variance `var_signal`.
pub fn expected_split_half(var_signal: f64, sigma: f64, m1: usize, m2: usize) -> f64 {
    let s2 = sigma * sigma / var_signal;
    1.0 / ((1.0 + s2 / m1 as f64) * (1.0 + s2 / m2 as f64)).sqrt()
}

/// Subject noise sd giving a Spearman-Brown corrected split-half reliability
/// of `reliability` with `n_subjects` split into halves of `n/2` (floor) and
/// the rest. A single subject is calibrated on its own reliability.
pub fn subject_noise_for_reliability(reliability: f64, n_subjects: usize, var_signal: f64) -> Result<f64, SynthError> {
    if !(reliability > 0.0 && reliability <= 1.0) || n_subjects == 0 || !(var_signal > 0.0) {
        return Err(SynthError::InvalidConfig(format!(
            "cannot calibrate reliability {reliability} with {n_subjects} subjects"
        )));
    }
    if reliability == 1.0 {
        return Ok(0.0);
    }
    if n_subjects == 1 {
        return Ok((var_signal * (1.0 - reliability) / reliability).sqrt());
    }
    let target = reliability / (2.0 - reliability);
    let (m1, m2) = (n_subjects / 2, n_subjects - n_subjects / 2);
    let f = |sigma: f64| expected_split_half(var_signal, sigma, m1, m2) - target;
    let (mut lo, mut hi) = (0.0, var_signal.sqrt());
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Correlation between the planted (unit-variance) signal and the mean of
/// `n_subjects` ratings.
pub fn expected_model_r(noise_sd: f64, sigma: f64, n_subjects: usize) -> f64 {
    1.0 / (1.0 + noise_sd * noise_sd + sigma * sigma / n_subjects as f64).sqrt()
}

/// Accuracy of the optimal rule between two equal-prior Gaussians with
/// common covariance separated by Mahalanobis distance `d_prime`.
pub fn gaussian_discriminant_accuracy(d_prime: f64) -> f64 {
    if d_prime.is_infinite() {
        return 1.0;
    }
    Normal::standard().cdf(d_prime / 2.0)
}
