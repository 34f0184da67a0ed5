//! Raw county timeseries to 90-day window samples.
//!
//! Generates a small synthetic dataset in the raw file layout (three time
//! splits, a FIPS registry and a soil table), runs the prepare step on it and
//! shows the first few prepared rows.
//!
//! ```text
//! cargo run --example prepare_dataset
//! ```

use droughtcast::pipeline::{cmd_prepare, RunConfig};
use droughtcast::synth::{generate, SynthConfig};
use droughtcast::window::read_prepared_csv;

pub fn run_example() -> droughtcast::Result<()> {
    let dir = tempfile::tempdir().map_err(|e| droughtcast::Error::io("tempdir", e))?;
    let paths = generate(&SynthConfig::years(2010, 2014))?.write_to_dir(dir.path())?;

    let cfg = RunConfig {
        train: Some(paths.train),
        validation: Some(paths.validation),
        test: Some(paths.test),
        fips: Some(paths.fips),
        out: Some(dir.path().join("prepared.csv")),
        ..RunConfig::default()
    };
    let summary = cmd_prepare(&cfg)?;
    println!(
        "{} rows, {} feature+score columns from {} counties",
        summary.rows, summary.columns, summary.counties
    );

    let samples = read_prepared_csv(&summary.out)?;
    assert_eq!(samples.len(), summary.rows);
    for s in samples.iter().take(3) {
        println!(
            "{} {}  PRECTOT={:.3}  T2M={:.2}  score={}  window={}d",
            s.fips, s.date, s.features[0], s.features[3], s.score, s.window_len
        );
    }
    // the first windows of a county are partial
    assert!(samples[0].window_len < 90);
    Ok(())
}

#[allow(dead_code)]
fn main() -> droughtcast::Result<()> {
    run_example()
}
