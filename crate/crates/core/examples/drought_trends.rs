//! County trend analysis: the share of weeks carrying a drought label in two
//! periods, the change per county and a GeoJSON point layer for mapping.

use std::collections::BTreeMap;

use droughtcast::pipeline::{cmd_trends, RunConfig};
use droughtcast::synth::{generate, SynthConfig};
use droughtcast::trends::{DroughtLabel, Scenario};
use droughtcast::window::write_prepared_csv;
use droughtcast::Error;

pub fn run_example() -> droughtcast::Result<()> {
    let dir = tempfile::tempdir().map_err(|e| Error::io("tempdir", e))?;
    let dataset = generate(&SynthConfig::default())?;
    let paths = dataset.write_to_dir(dir.path())?;
    let data = dir.path().join("prepared.csv");
    write_prepared_csv(&data, &dataset.window_samples("CA", 90)?)?;

    let geojson = dir.path().join("d3_trends.geojson");
    let cfg = RunConfig {
        data: Some(data),
        fips: Some(paths.fips),
        soil: Some(paths.soil),
        out: Some(geojson.clone()),
        ..RunConfig::default()
    };

    for label in DroughtLabel::ALL {
        let t = cmd_trends(&cfg, Scenario::Long, label)?;
        println!("{}", t.summary);
    }

    let t = cmd_trends(&cfg, Scenario::Long, DroughtLabel::D3)?;
    let names: BTreeMap<_, _> = dataset.registry.iter().map(|e| (e.fips, e.name.as_str())).collect();
    for c in &t.summary.trends {
        println!("  {:<20} {:>6.2}% -> {:>6.2}%", names[&c.fips], c.pct_a, c.pct_b);
    }
    println!("{} map points written to {}", t.map_points, geojson.display());

    let first = t.yearly.first().expect("at least one year");
    println!("{}: {:?}", first.year, first.counts);
    Ok(())
}

#[allow(dead_code)]
fn main() -> droughtcast::Result<()> {
    run_example()
}
