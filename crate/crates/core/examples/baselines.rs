//! Random forest against the two reference baselines, KNN and logistic
//! regression, on the same presence and intensity splits.

use droughtcast::pipeline::{compare_baselines, RunConfig, DEFAULT_KNN_K};
use droughtcast::preprocess::Task;
use droughtcast::synth::{generate, SynthConfig};

pub fn run_example() -> droughtcast::Result<()> {
    let samples = generate(&SynthConfig::years(2006, 2018))?.window_samples("CA", 90)?;
    let cfg = RunConfig {
        n_estimators: [40, 40, 40],
        ..RunConfig::default()
    };
    for task in [Task::Presence, Task::Intensity] {
        println!("{task}");
        for (name, r) in compare_baselines(&samples, task, &cfg, DEFAULT_KNN_K)? {
            println!(
                "  {name:<20} accuracy {:.4}  macro-F1 {:.4}",
                r.accuracy, r.macro_avg.f1
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> droughtcast::Result<()> {
    run_example()
}
