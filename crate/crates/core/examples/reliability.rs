//! Split-half reliability of subject ratings: the odd/even split and the
//! resampled noise ceiling.

use ctxprior::numerics::{odd_even_split, split_half_ceiling, RatingMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let scenes = 400;
    let truth: Vec<f64> = (0..scenes).map(|_| rng.sample(StandardNormal)).collect();
    let subjects: Vec<String> = (1..=11).map(|i| format!("s{i}")).collect();
    let values: Vec<Vec<f64>> = subjects
        .iter()
        .map(|_| truth.iter().map(|t| t + 1.2 * rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    let ids = (0..scenes).map(|i| format!("scene{i}")).collect();
    let ratings = RatingMatrix::from_dense(subjects, ids, values)?;

    let odd_even = odd_even_split(&ratings)?;
    println!("odd/even r {:.3}, corrected {:.3}", odd_even.r, odd_even.corrected);
    let ceiling = split_half_ceiling(&ratings, 1000, 5)?;
    println!(
        "ceiling {:.3} ± {:.3} over {} random halves",
        ceiling.mean, ceiling.sd, ceiling.n_resamples
    );
    Ok(())
}
