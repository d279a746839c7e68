//! Fits a coarse-channel likelihood model, predicts it on labelled scenes
//! and fuses it with a detector score.

use ctxprior::expectations::fit_expectation_model;
use ctxprior::fusion::{build_fusion_features, error_breakdown, train_fusion, FusionFeatureSet, ModelBank, TrainConfig};
use ctxprior::synth::{generate_detection_dataset, generate_expectation_dataset, SynthConfig};
use ctxprior::{Category, ChannelSet, ExpectationData, ModelSpec, RatingDimension};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = SynthConfig {
        seed: 3,
        ..Default::default()
    };
    let synth = generate_expectation_dataset(&config)?;
    let detection = generate_detection_dataset(&config)?;
    let car = Category::car();

    let mut models = ModelBank::new();
    for dimension in RatingDimension::ALL {
        let data = ExpectationData::new(&synth.scenes, &synth.aggregates, &car, dimension)?;
        let spec = ModelSpec::new(ChannelSet::C, car.clone(), dimension);
        models.insert((car.clone(), dimension), fit_expectation_model(&spec, &data)?);
    }

    let train = TrainConfig::default();
    for set in [
        FusionFeatureSet::baseline(),
        FusionFeatureSet::baseline().with(&car, &[RatingDimension::Likelihood]),
        FusionFeatureSet::all_ratings(std::slice::from_ref(&car)),
    ] {
        let data = build_fusion_features(&detection.scores, "cnn", &car, &models, &detection.scenes, &set)?;
        let trained = train_fusion(&data, &set, &train)?;
        let errors = error_breakdown(&trained.classifier, &data.features, &data.labels)?;
        println!(
            "{:<60} cv accuracy {:5.1}%  misses {:4}  false alarms {:4}",
            set.label(),
            100.0 * trained.cv_accuracy,
            errors.misses,
            errors.false_alarms
        );
    }
    println!("Bayes optimum with context: {:.1}%", 100.0 * detection.truth.detectors[0].augmented_bayes);
    Ok(())
}
