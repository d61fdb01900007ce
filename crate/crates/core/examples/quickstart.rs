//! Train a linear base model on synthetic data, explore its Rashomon set and
//! rank the features by VTF and RVTW.
//!
//! cargo run --example quickstart

use vtf::data::{split, standardize, synth_linear};
use vtf::nn::{train, ModelSpec, TrainConfig};
use vtf::rashomon::{explore, RashomonConfig};
use vtf::vtf::{rank, rvtw_scores, select_unimportant, vtf_scores, DEFAULT_THRESHOLD};

fn main() -> vtf::Result<()> {
    // y = 0.1 x1 + 0.3 x2 + 0.6 x3 + noise
    let data = synth_linear(1000, &[0.1, 0.3, 0.6], 0.05, 3)?;
    let (train_set, test) = split(&data, 0.8, 3)?;
    let (train_set, test) = standardize(&train_set, &test)?;

    let mut base = ModelSpec::Linear.build(train_set.n_features(), 3)?;
    let config = TrainConfig {
        epochs: 200,
        learning_rate: 0.01,
        ..TrainConfig::default()
    };
    let history = train(&mut base, train_set.samples(), Some(test.samples()), &config)?;
    println!("base model: train loss {:.3e} after {} epochs", history.final_loss, history.epochs());

    let rashomon = RashomonConfig {
        n_retrains: Some(40),
        ..RashomonConfig::default()
    };
    let weights = explore(&base, &train_set, &rashomon, None, &|_| {})?;
    println!("{} of {} retrains reached the loss target", weights.n_rows(), weights.attempted);

    for profile in [vtf_scores(&weights)?, rvtw_scores(&weights)?] {
        println!("\n{} (most important first)", profile.method);
        for r in rank(&profile) {
            println!("  {}. {} {:.4}", r.rank, r.name, r.score);
        }
    }
    let vtf = vtf_scores(&weights)?;
    let unimportant = select_unimportant(&vtf, DEFAULT_THRESHOLD)?;
    println!("\nfeatures with t > {DEFAULT_THRESHOLD}: {unimportant:?}");
    Ok(())
}
