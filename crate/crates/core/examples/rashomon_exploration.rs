//! Explore the Rashomon set with a progress callback and watch the mean
//! mask weights settle as retrains accumulate.
//!
//! cargo run --example rashomon_exploration

use std::sync::atomic::{AtomicUsize, Ordering};

use vtf::data::{split, standardize, synth_linear};
use vtf::nn::{train, ModelSpec, TrainConfig};
use vtf::rashomon::{explore, stability_curve, RashomonConfig, Tolerance};

fn main() -> vtf::Result<()> {
    let data = synth_linear(800, &[0.5, 0.2, 0.0, 0.8], 0.05, 7)?;
    let (train_set, test) = split(&data, 0.8, 7)?;
    let (train_set, _) = standardize(&train_set, &test)?;
    let mut base = ModelSpec::Linear.build(4, 7)?;
    let config = TrainConfig {
        epochs: 200,
        learning_rate: 0.01,
        ..TrainConfig::default()
    };
    train(&mut base, train_set.samples(), None, &config)?;

    let rashomon = RashomonConfig {
        tolerance: Tolerance::Relative(0.02),
        n_retrains: Some(30),
        base_seed: 7,
        ..RashomonConfig::default()
    };
    let done = AtomicUsize::new(0);
    let weights = explore(&base, &train_set, &rashomon, Some(2), &|rec| {
        let k = done.fetch_add(1, Ordering::Relaxed) + 1;
        if rec.accepted && k.is_multiple_of(10) {
            println!("{k:>2} finished; retrain {} took {} epochs", rec.retrain_index, rec.epochs_used);
        }
    })?;
    println!(
        "base loss {:.4e}, epsilon {:.2e}, accepted {}/{}",
        weights.base_loss,
        weights.epsilon,
        weights.n_rows(),
        weights.attempted
    );

    let curve = stability_curve(&weights)?;
    println!("\nrunning mean of each mask weight ({:?})", weights.feature_names);
    for (k, row) in curve.rows().into_iter().enumerate().step_by(5) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:7.3}")).collect();
        println!("after {:>2}: {}", k + 1, cells.join(" "));
    }
    Ok(())
}
