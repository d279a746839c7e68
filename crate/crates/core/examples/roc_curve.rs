//! ROC curve of tied, noisy scores exported as plot-ready CSV.

use ctxprior::fusion::roc;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let labels: Vec<bool> = (0..500).map(|i| i % 2 == 0).collect();
    let scores: Vec<f64> = labels
        .iter()
        .map(|&y| {
            let s: f64 = if y { 0.6 } else { 0.4 };
            (s + rng.gen_range(-0.3..0.3)).clamp(0.0, 1.0)
        })
        .map(|s| (s * 20.0).round() / 20.0)
        .collect();
    let curve = roc(&scores, &labels)?;
    println!("auc {:.4}, tpr at 10% fpr {:.3}", curve.auc, curve.tpr_at(0.1));
    print!("{}", curve.to_csv());
    Ok(())
}
