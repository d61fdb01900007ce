//! The reference rankings: permutation importance, connection weights and
//! the Fisher score, on a two-class problem.
//!
//! cargo run --example baseline_methods

use vtf::baselines::{connection_weights, fisher_score, permutation_importance, DEFAULT_REPEATS};
use vtf::data::{split, standardize, synth_classification};
use vtf::nn::{train, Activation, ModelSpec, TrainConfig};
use vtf::vtf::rank;

fn main() -> vtf::Result<()> {
    // per-feature class separation; the last feature carries no signal
    let data = synth_classification(800, &[2.0, 1.0, 0.5, 0.0], 9)?;
    let (train_set, test) = split(&data, 0.8, 9)?;
    let (train_set, test) = standardize(&train_set, &test)?;
    let spec = ModelSpec::Mlp {
        hidden: vec![6],
        activation: Activation::Sigmoid,
        classification: true,
    };
    let mut model = spec.build(4, 9)?;
    let config = TrainConfig {
        epochs: 100,
        learning_rate: 0.01,
        ..TrainConfig::default()
    };
    train(&mut model, train_set.samples(), None, &config)?;

    let names = train_set.feature_names.clone();
    let profiles = [
        permutation_importance(&model, test.samples(), names.clone(), DEFAULT_REPEATS, 9)?,
        connection_weights(&model, names)?,
        fisher_score(&train_set)?,
    ];
    for p in &profiles {
        let order: Vec<String> = rank(p).iter().map(|r| format!("{} ({:.3})", r.name, r.score)).collect();
        println!("{:<20} {}", p.method.to_string(), order.join(", "));
    }
    Ok(())
}
