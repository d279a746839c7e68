//! Generates a planted synthetic dataset and writes it in the on-disk
//! formats read by `load_dataset`.
//!
//! ```text
//! cargo run --example synth_dataset -- /tmp/ctxprior-synth
//! ```

use ctxprior::dataset::{load_dataset, SchemaConfig};
use ctxprior::synth::{generate_detection_dataset, generate_expectation_dataset, write_synth_dataset, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "synth-out".into());
    let config = SynthConfig {
        seed: 1,
        n_scenes: 200,
        ..Default::default()
    };
    let expectation = generate_expectation_dataset(&config)?;
    let detection = generate_detection_dataset(&config)?;
    let files = write_synth_dataset(dir.as_ref(), &expectation, Some(&detection))?;

    let loaded = load_dataset(&files.paths, &SchemaConfig::default())?;
    println!(
        "{} scenes, {} ratings, {} detector scores written to {dir}",
        loaded.scenes.len(),
        loaded.ratings.len(),
        loaded.scores.len()
    );
    println!(
        "subject noise sd {:.3}, expected split-half r {:.3}, expected model r {:.3}",
        expectation.truth.subject_noise_sd, expectation.truth.expected_split_half_r, expectation.truth.expected_model_r
    );
    for d in &detection.truth.detectors {
        println!(
            "{} / {}: Bayes accuracy {:.1}% alone, {:.1}% with context",
            d.detector_id,
            d.target,
            100.0 * d.baseline_bayes,
            100.0 * d.augmented_bayes
        );
    }
    Ok(())
}
