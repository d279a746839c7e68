//! Compares every channel subset on repeated 80/20 splits and prints the
//! table with its noise ceiling.

use ctxprior::dataset::{rating_matrix, SliderRange};
use ctxprior::expectations::{evaluate_all_specs, EvalConfig, SplitConfig};
use ctxprior::synth::{generate_expectation_dataset, SynthConfig};
use ctxprior::{Category, ExpectationData, Frame, RatingDimension};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let synth = generate_expectation_dataset(&SynthConfig {
        seed: 2,
        n_scenes: 300,
        ..Default::default()
    })?;
    let person = Category::person();
    let data = ExpectationData::new(&synth.scenes, &synth.aggregates, &person, RatingDimension::Likelihood)?;
    let ids: Vec<String> = synth.scenes.iter().map(|s| s.scene_id.clone()).collect();
    let ratings = rating_matrix(
        &synth.ratings,
        &person,
        RatingDimension::Likelihood,
        &ids,
        &Frame::default(),
        &SliderRange::default(),
    )?;
    let config = EvalConfig {
        split: SplitConfig {
            n_splits: 100,
            ..Default::default()
        },
        ceiling_resamples: 200,
        ..Default::default()
    };
    let table = evaluate_all_specs(&data, Some(&ratings), &config)?;
    print!("{}", table.to_csv());
    println!("best: {}", table.best);
    Ok(())
}
