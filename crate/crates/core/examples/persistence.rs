//! Saves an expectation model, reloads it and checks that predictions are
//! unchanged.

use ctxprior::dataset::{load_model, save_model, SavedModel};
use ctxprior::expectations::fit_expectation_model;
use ctxprior::synth::{generate_expectation_dataset, SynthConfig};
use ctxprior::{Category, ChannelSet, ExpectationData, ModelSpec, RatingDimension};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let synth = generate_expectation_dataset(&SynthConfig {
        seed: 6,
        n_scenes: 200,
        ..Default::default()
    })?;
    let car = Category::car();
    let data = ExpectationData::new(&synth.scenes, &synth.aggregates, &car, RatingDimension::Scale)?;
    let spec = ModelSpec::new(ChannelSet::NC, car, RatingDimension::Scale);
    let model = fit_expectation_model(&spec, &data)?;

    let path = std::env::temp_dir().join("ctxprior-example-model.json");
    save_model(&path, &SavedModel::Expectation(model.clone()))?;
    let restored = load_model(&path)?.into_expectation().ok_or("not an expectation model")?;
    let before = model.predict_scenes(&synth.scenes)?;
    let after = restored.predict_scenes(&synth.scenes)?;
    assert_eq!(before, after);
    println!("{} predictions identical after reload from {}", after.len(), path.display());
    Ok(())
}
