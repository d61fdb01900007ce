//! Contribution factors: first the hand-made three-feature system, then the
//! full pipeline from explored masks.
//!
//! cargo run --example contribution_factors

use ndarray::array;
use vtf::cf::{cf_analysis, prefix_solutions, solve_contributions, AugmentedSystem};
use vtf::data::{split, standardize, synth_classification};
use vtf::nn::{train, ModelSpec, TrainConfig};
use vtf::rashomon::{explore, RashomonConfig};

fn main() -> vtf::Result<()> {
    // first row: contributions add up; others: one mu row per retrain
    let coefficients = array![[1.0, 1.0, 1.0], [1.0, 2.0, 0.5], [4.0, 1.0, 0.5]];
    let names = vec!["x1".to_string(), "x2".into(), "x3".into()];
    let system = AugmentedSystem::from_coefficients(coefficients, names)?;
    let c = solve_contributions(&system)?;
    println!("hand-made system: {:?} via {:?}", c.normalized, c.method);

    let data = synth_classification(600, &[2.0, 1.0, 0.0], 2)?;
    let (train_set, test) = split(&data, 0.8, 2)?;
    let (train_set, test) = standardize(&train_set, &test)?;
    let mut base = ModelSpec::Logistic.build(3, 2)?;
    let config = TrainConfig {
        epochs: 100,
        learning_rate: 0.01,
        ..TrainConfig::default()
    };
    train(&mut base, train_set.samples(), None, &config)?;
    let rashomon = RashomonConfig {
        n_retrains: Some(20),
        ..RashomonConfig::default()
    };
    let weights = explore(&base, &train_set, &rashomon, None, &|_| {})?;

    match cf_analysis(&weights, &base, test.samples()) {
        Ok(analysis) => {
            println!("\nlogistic base, {} equations:", analysis.system.n_equations());
            for (name, v) in analysis.profile.feature_names.iter().zip(&analysis.profile.scores) {
                println!("  {name}: {v:.4}");
            }
            for note in &analysis.profile.notes {
                println!("  note: {note}");
            }
            let prefixes = prefix_solutions(&analysis.system);
            if let Some(last) = prefixes.last() {
                println!("  solution using all {} equations: {:?}", last.equations, last.normalized);
            }
        }
        Err(e) => println!("contribution system could not be normalized: {e}"),
    }
    Ok(())
}
