//! Load a CSV dataset, split and standardize it, then train and save a base
//! model. Defaults to the bundled regression fixture.
//!
//! cargo run --example csv_dataset [path.csv] [target-column]

use std::path::PathBuf;

use vtf::data::{load_csv, split, standardize, CsvSchema, TargetColumn};
use vtf::evaluation::test_metric;
use vtf::nn::{train, ModelSpec, TrainConfig};

fn main() -> vtf::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/regression.csv"), PathBuf::from);
    let schema = CsvSchema {
        target_column: args.next().map(TargetColumn::Name),
        ..CsvSchema::default()
    };
    let data = load_csv(&path, &schema)?;
    println!("{}: {} rows, features {:?}", path.display(), data.n_samples(), data.feature_names);
    println!("content hash {}", data.content_hash());

    let (train_set, test) = split(&data, 0.75, 1)?;
    let (train_set, test) = standardize(&train_set, &test)?;
    if let Some(params) = &train_set.standardization {
        println!("training-split means {:?}", params.mean);
    }
    let mut model = ModelSpec::Linear.build(train_set.n_features(), 1)?;
    let config = TrainConfig {
        epochs: 300,
        batch_size: 4,
        learning_rate: 0.01,
        ..TrainConfig::default()
    };
    train(&mut model, train_set.samples(), None, &config)?;
    println!("test MSE {:.4}", test_metric(&model, &test)?);
    let out = std::env::temp_dir().join("csv_dataset_model.json");
    std::fs::write(&out, model.to_json()?)?;
    println!("saved {}", out.display());
    Ok(())
}
