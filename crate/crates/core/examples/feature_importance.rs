//! Mean-decrease-impurity importance under three feature sets: all 18
//! features, a collinearity-pruned set and a nine-feature family set.

use droughtcast::importance::{collinearity_prune, run_scenarios};
use droughtcast::pipeline::RunConfig;
use droughtcast::synth::{generate, SynthConfig};

pub fn run_example() -> droughtcast::Result<()> {
    let samples = generate(&SynthConfig::years(2008, 2015))?.window_samples("CA", 90)?;
    let cfg = RunConfig {
        n_estimators: [30, 30, 30],
        ..RunConfig::default()
    };

    let pruned = collinearity_prune(&samples, cfg.collinearity_threshold)?;
    println!("collinearity pruning dropped {:?}", pruned.dropped);

    for report in run_scenarios(&samples, &cfg.scenario_config())? {
        println!(
            "{:<20} {:>2} features  accuracy {:.4}",
            report.scenario,
            report.retained.len(),
            report.accuracy
        );
        for (name, value) in report.ranking().into_iter().take(5) {
            println!("    {name:<12} {value:.4}");
        }
        let total: f64 = report.importances.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> droughtcast::Result<()> {
    run_example()
}
