//! Drought intensity (D0 to D4) with a one-vs-rest wrapper around forests.
//!
//! Uses the library directly instead of the pipeline: split, scale, fit one
//! binary forest per class and inspect the per-class scores of a sample.

use droughtcast::learners::{fit_forest, fit_ovr, Classifier, ForestParams, Model};
use droughtcast::metrics::render_report;
use droughtcast::pipeline::{evaluate_model, split_for_task, RunConfig};
use droughtcast::preprocess::Task;
use droughtcast::synth::{generate, SynthConfig};
use droughtcast::trends::DroughtLabel;

pub fn run_example() -> droughtcast::Result<()> {
    let samples = generate(&SynthConfig::years(2006, 2018))?.window_samples("CA", 90)?;
    let cfg = RunConfig::default();
    let split = split_for_task(&samples, Task::Intensity, &cfg)?;
    let (x_train, y_train) = Task::Intensity.design(&split.train)?;
    let (x_test, y_test) = Task::Intensity.design(&split.test)?;
    println!(
        "{} drought rows for training, {} for testing",
        x_train.n_rows(),
        x_test.n_rows()
    );

    let params = ForestParams {
        n_estimators: 25,
        ..ForestParams::default()
    };
    let classes = Task::Intensity.classes();
    let ovr = fit_ovr(
        &x_train,
        &y_train,
        &classes,
        |x, y, seed| Ok(Model::Forest(fit_forest(x, y, &[0, 1], &params, seed)?)),
        cfg.seed,
    )?;
    assert_eq!(ovr.estimators().len(), 5);

    let row = x_test.row(0);
    let scores = ovr.raw_scores(row)?;
    let proba = ovr.predict_proba(row)?;
    for ((class, s), p) in classes.iter().zip(&scores).zip(&proba) {
        let label = DroughtLabel::from_class(*class as u8)?;
        println!("  {label:<3} {:<20} score {s:.3}  p {p:.3}", label.description());
    }

    let report = evaluate_model(&Model::OneVsRest(ovr), &x_test, &y_test, cfg.report_options())?;
    println!("{}", render_report("OneVsRest(RandomForest)", &report));
    Ok(())
}

#[allow(dead_code)]
fn main() -> droughtcast::Result<()> {
    run_example()
}
