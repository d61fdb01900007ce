//! One-shot selection: drop every feature whose variance tolerance factor
//! exceeds the threshold and refit on the rest.
//!
//! cargo run --example vtf_selection

use vtf::data::{split, standardize, synth_linear};
use vtf::evaluation::{independent_fit, vtf_selection, EvalConfig};
use vtf::nn::{train, ModelSpec, TrainConfig};
use vtf::rashomon::{explore, RashomonConfig};
use vtf::vtf::vtf_scores;

fn main() -> vtf::Result<()> {
    // three informative features and three pure noise columns
    let data = synth_linear(800, &[0.9, 0.6, 0.3, 0.0, 0.0, 0.0], 0.05, 5)?;
    let (train_set, test) = split(&data, 0.8, 5)?;
    let (train_set, test) = standardize(&train_set, &test)?;
    let mut base = ModelSpec::Linear.build(6, 5)?;
    let config = TrainConfig {
        epochs: 200,
        learning_rate: 0.01,
        ..TrainConfig::default()
    };
    train(&mut base, train_set.samples(), None, &config)?;

    let rashomon = RashomonConfig {
        n_retrains: Some(40),
        ..RashomonConfig::default()
    };
    let weights = explore(&base, &train_set, &rashomon, None, &|_| {})?;
    let vtf = vtf_scores(&weights)?;
    for (name, t) in vtf.feature_names.iter().zip(&vtf.scores) {
        println!("{name}: t = {t:.3}");
    }

    let eval = EvalConfig {
        train: TrainConfig {
            epochs: 300,
            batch_size: 32,
            learning_rate: 0.01,
            ..TrainConfig::default()
        },
        // noise features keep masks near their small initial values, so t
        // lands just under 1 on this data
        vtf_threshold: 0.5,
        ..EvalConfig::default()
    };
    let full = independent_fit(&train_set, &test, &eval)?;
    let selection = vtf_selection(&train_set, &test, &vtf, &eval, full)?;
    println!("\nunimportant (t > {}): {:?}", selection.threshold, selection.unimportant);
    println!("kept: {:?}", selection.kept);
    println!("test MSE with all features {full:.4}, with kept features {:?}", selection.metric);
    Ok(())
}
