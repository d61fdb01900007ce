//! Drop-and-refit comparison of several rankings, saved as CSV and SVG.
//!
//! cargo run --example selection_curve [output-dir]

use std::path::PathBuf;

use vtf::baselines::{connection_weights, permutation_importance, DEFAULT_REPEATS};
use vtf::data::{split, standardize, synth_linear};
use vtf::evaluation::{compare_methods, Candidate, EvalConfig};
use vtf::nn::{train, ModelSpec, TrainConfig};
use vtf::plot::comparison_chart;
use vtf::rashomon::{explore, RashomonConfig};
use vtf::vtf::{rvtw_scores, vtf_scores};

fn main() -> vtf::Result<()> {
    let out_dir = std::env::args().nth(1).map_or_else(std::env::temp_dir, PathBuf::from);
    let data = synth_linear(800, &[1.0, 0.8, 0.6, 0.4, 0.2, 0.0, 0.0, 0.0], 0.05, 4)?;
    let (train_set, test) = split(&data, 0.8, 4)?;
    let (train_set, test) = standardize(&train_set, &test)?;
    let mut base = ModelSpec::Linear.build(8, 4)?;
    let config = TrainConfig {
        epochs: 200,
        learning_rate: 0.01,
        ..TrainConfig::default()
    };
    train(&mut base, train_set.samples(), None, &config)?;
    let rashomon = RashomonConfig {
        n_retrains: Some(30),
        ..RashomonConfig::default()
    };
    let weights = explore(&base, &train_set, &rashomon, None, &|_| {})?;

    let names = train_set.feature_names.clone();
    let candidates: Vec<Candidate> = vec![
        vtf_scores(&weights)?.into(),
        rvtw_scores(&weights)?.into(),
        permutation_importance(&base, test.samples(), names.clone(), DEFAULT_REPEATS, 4)?.into(),
        connection_weights(&base, names)?.into(),
    ];
    let eval = EvalConfig {
        train: TrainConfig {
            epochs: 300,
            batch_size: 32,
            learning_rate: 0.01,
            ..TrainConfig::default()
        },
        ..EvalConfig::default()
    };
    let report = compare_methods(&train_set, &test, &candidates, &eval)?;
    println!("baseline test MSE {:.4}", report.baseline);
    for m in &report.methods {
        let cells: Vec<String> = m.curve.iter().map(|p| p.metric.map_or("-".into(), |v| format!("{v:.3}"))).collect();
        println!("{:<20} {}", m.name, cells.join(" "));
    }
    let csv = out_dir.join("selection_curve.csv");
    let svg = out_dir.join("selection_curve.svg");
    std::fs::write(&csv, report.to_csv())?;
    std::fs::write(&svg, comparison_chart(&report))?;
    println!("wrote {} and {}", csv.display(), svg.display());
    Ok(())
}
