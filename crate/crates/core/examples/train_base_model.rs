//! Train a small MLP base model, inspect its history and round-trip it
//! through JSON.
//!
//! cargo run --example train_base_model

use vtf::data::{split, standardize, synth_linear};
use vtf::evaluation::test_metric;
use vtf::nn::{train, Activation, LayeredModel, ModelSpec, TrainConfig};

fn main() -> vtf::Result<()> {
    let data = synth_linear(600, &[1.0, -0.5, 0.25, 0.0], 0.1, 11)?;
    let (train_set, test) = split(&data, 0.8, 11)?;
    let (train_set, test) = standardize(&train_set, &test)?;

    let spec = ModelSpec::Mlp {
        hidden: vec![8, 4],
        activation: Activation::Relu,
        classification: false,
    };
    let mut model = spec.build(train_set.n_features(), 11)?;
    let config = TrainConfig {
        epochs: 150,
        batch_size: 32,
        learning_rate: 0.005,
        seed: 11,
        ..TrainConfig::default()
    };
    let history = train(&mut model, train_set.samples(), Some(test.samples()), &config)?;
    for epoch in (0..history.epochs()).step_by(30) {
        println!("epoch {:>3}: train {:.4e}  test {:.4e}", epoch + 1, history.train_loss[epoch], history.val_loss[epoch]);
    }
    println!("test MSE {:.4}", test_metric(&model, &test)?);

    let parameters = model.trainable_parameter_count();
    model.freeze();
    let json = model.to_json()?;
    let restored = LayeredModel::from_json(&json)?;
    assert_eq!(restored, model);
    println!("serialized {parameters} parameters in {} bytes, frozen: {}", json.len(), restored.is_frozen());
    Ok(())
}
