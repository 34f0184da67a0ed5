//! Drought presence: three forests, a soft-voting ensemble, saved models and
//! predictions from a reloaded ensemble.
//!
//! ```text
//! cargo run --release --example train_presence
//! ```

use droughtcast::learners::persist::ModelBundle;
use droughtcast::pipeline::{cmd_predict, cmd_train, RunConfig};
use droughtcast::preprocess::Task;
use droughtcast::synth::{generate, SynthConfig};
use droughtcast::window::write_prepared_csv;
use droughtcast::Error;

pub fn run_example() -> droughtcast::Result<()> {
    let dir = tempfile::tempdir().map_err(|e| Error::io("tempdir", e))?;
    let samples = generate(&SynthConfig::years(2008, 2016))?.window_samples("CA", 90)?;
    let data = dir.path().join("prepared.csv");
    write_prepared_csv(&data, &samples)?;

    let cfg = RunConfig {
        data: Some(data.clone()),
        out: Some(dir.path().join("models")),
        n_estimators: [10, 20, 30],
        ..RunConfig::default()
    };
    let outcome = cmd_train(&cfg, Task::Presence)?;
    println!("{}", outcome.report_text);
    for (name, r) in &outcome.reports {
        println!("{name:<24} accuracy {:.4}", r.accuracy);
    }

    let ensemble = outcome.model_paths.last().expect("ensemble path");
    let bundle = ModelBundle::load(ensemble)?;
    println!(
        "reloaded {} model over {} features",
        bundle.model.kind(),
        bundle.feature_names.len()
    );

    let preds = cmd_predict(
        &RunConfig {
            out: Some(dir.path().join("predictions.csv")),
            ..cfg
        },
        ensemble,
        &data,
    )?;
    for p in preds.iter().take(3) {
        println!("{} {} -> class {} (p = {:.3?})", p.fips, p.date, p.class, p.proba);
    }
    assert!(preds.iter().all(|p| (p.proba.iter().sum::<f64>() - 1.0).abs() < 1e-9));
    Ok(())
}

#[allow(dead_code)]
fn main() -> droughtcast::Result<()> {
    run_example()
}
