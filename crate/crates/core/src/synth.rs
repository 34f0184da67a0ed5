//! Synthetic datasets in the raw timeseries layout.
//!
//! Used by the examples and the dataset-free tests. Each county follows a
//! slowly varying latent drought level in [0, 5]; daily weather is drawn
//! conditional on that level and the season, and the level itself is
//! published as the score every Tuesday. Drier years therefore show less
//! rain, lower humidity and higher temperatures, which gives classifiers a
//! real (if simplified) signal. From `shift_year` onward the latent level
//! drifts higher, mimicking a regime change toward more severe drought.

use std::f64::consts::PI;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate, Weekday};
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};

use crate::error::{Error, Result};
use crate::features::N_FEATURES;
use crate::ingest::{
    filter_state, merge_splits, write_fips_registry, write_timeseries, CountyCoord, DailyRecord, Fips, FipsEntry,
};
use crate::seed;
use crate::window::{build_window_samples, Aggregator, WindowSample};

#[derive(Debug, Clone)]
pub struct SynthCounty {
    pub fips: Fips,
    pub name: String,
    pub state: String,
    pub latitude: f64,
    pub longitude: f64,
}

impl SynthCounty {
    pub fn new(fips: &str, name: &str, state: &str, latitude: f64, longitude: f64) -> Self {
        SynthCounty {
            fips: fips.parse().expect("valid fips literal"),
            name: name.into(),
            state: state.into(),
            latitude,
            longitude,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub first_year: i32,
    pub last_year: i32,
    /// First year of the validation split.
    pub validation_from: i32,
    /// First year of the test split.
    pub test_from: i32,
    pub shift_year: i32,
    pub counties: Vec<SynthCounty>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            first_year: 2000,
            last_year: 2020,
            validation_from: 2017,
            test_from: 2019,
            shift_year: 2014,
            counties: default_counties(),
            seed: 7,
        }
    }
}

impl SynthConfig {
    /// A short run over `[first_year, last_year]` with the split boundaries
    /// placed in the last two years.
    pub fn years(first_year: i32, last_year: i32) -> Self {
        SynthConfig {
            first_year,
            last_year,
            validation_from: last_year - 1,
            test_from: last_year,
            shift_year: (first_year + last_year + 1) / 2,
            ..Default::default()
        }
    }
}

/// Six California counties and one Nevada county.
pub fn default_counties() -> Vec<SynthCounty> {
    vec![
        SynthCounty::new("06001", "Alameda County", "CA", 37.65, -121.92),
        SynthCounty::new("06019", "Fresno County", "CA", 36.76, -119.65),
        SynthCounty::new("06037", "Los Angeles County", "CA", 34.32, -118.22),
        SynthCounty::new("06065", "Riverside County", "CA", 33.74, -115.99),
        SynthCounty::new("06073", "San Diego County", "CA", 33.03, -116.74),
        SynthCounty::new("06089", "Shasta County", "CA", 40.76, -122.04),
        SynthCounty::new("32003", "Clark County", "NV", 36.21, -115.02),
    ]
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub train: Vec<DailyRecord>,
    pub validation: Vec<DailyRecord>,
    pub test: Vec<DailyRecord>,
    pub registry: Vec<FipsEntry>,
    pub coords: Vec<CountyCoord>,
}

/// Paths of a dataset written by [`SyntheticDataset::write_to_dir`].
#[derive(Debug, Clone)]
pub struct DatasetPaths {
    pub train: PathBuf,
    pub validation: PathBuf,
    pub test: PathBuf,
    pub fips: PathBuf,
    pub soil: PathBuf,
}

impl DatasetPaths {
    /// Conventional file names inside `dir`.
    pub fn in_dir(dir: &Path) -> Self {
        DatasetPaths {
            train: dir.join("train_timeseries.csv"),
            validation: dir.join("validation_timeseries.csv"),
            test: dir.join("test_timeseries.csv"),
            fips: dir.join("fips.csv"),
            soil: dir.join("soil_data.csv"),
        }
    }
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

pub fn generate(cfg: &SynthConfig) -> Result<SyntheticDataset> {
    if cfg.first_year > cfg.last_year {
        return Err(Error::Parameter("first_year after last_year".into()));
    }
    let mut out = SyntheticDataset {
        train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
        registry: Vec::new(),
        coords: Vec::new(),
    };
    for (i, county) in cfg.counties.iter().enumerate() {
        let mut rng = seed::rng(seed::derive(cfg.seed, i as u64));
        for r in county_series(cfg, county, &mut rng) {
            let year = r.date.year();
            if year >= cfg.test_from {
                out.test.push(r);
            } else if year >= cfg.validation_from {
                out.validation.push(r);
            } else {
                out.train.push(r);
            }
        }
        out.registry.push(FipsEntry {
            fips: county.fips,
            name: county.name.clone(),
            state: county.state.clone(),
        });
        out.coords.push(CountyCoord {
            fips: county.fips,
            latitude: county.latitude,
            longitude: county.longitude,
        });
    }
    Ok(out)
}

fn county_series<R: Rng>(cfg: &SynthConfig, county: &SynthCounty, rng: &mut R) -> Vec<DailyRecord> {
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let first = NaiveDate::from_ymd_opt(cfg.first_year, 1, 1).expect("valid year");
    let last = NaiveDate::from_ymd_opt(cfg.last_year, 12, 31).expect("valid year");

    // cooler and wetter to the north
    let t_base = 24.0 - 0.55 * (county.latitude - 32.0);
    let wetness = 0.6 + 0.08 * (county.latitude - 32.0);
    let ps_base = 101.0 - 0.4 * ((county.longitude + 124.0) / 3.0);
    let mut drought: f64 = rng.gen_range(0.0..1.5);

    let mut out = Vec::new();
    for date in first.iter_days().take_while(|d| *d <= last) {
        let year = date.year();
        let regime = if year >= cfg.shift_year { 3.1 } else { 0.7 };
        // multi-year swings on top of the regime level
        let cycle = 1.2 * (2.0 * PI * f64::from(year - cfg.first_year) / 6.0).sin();
        let target = (regime + cycle).clamp(0.0, 4.8);
        drought += 0.012 * (target - drought) + 0.07 * noise.sample(rng);
        drought = drought.clamp(0.0, 5.0);

        let doy = f64::from(date.ordinal());
        let wet_season = 0.5 * (1.0 + (2.0 * PI * (doy - 15.0) / 365.25).cos());
        let d = drought;

        let rain_p = (0.04 + 0.4 * wet_season * wetness * (1.0 - d / 6.0)).clamp(0.0, 1.0);
        let prectot = if rng.gen_bool(rain_p) {
            let mean = 7.0 * wetness * (1.0 - d / 7.0);
            Exp::new(1.0 / mean).expect("positive rate").sample(rng)
        } else {
            0.0
        };
        let t2m = t_base + 8.0 * (2.0 * PI * (doy - 110.0) / 365.25).sin() + 0.7 * d + 2.0 * noise.sample(rng);
        let t_range = (10.0 + 1.1 * d - 3.0 * wet_season + 1.5 * noise.sample(rng)).max(0.5);
        let qv2m = (6.0 + 0.3 * (t2m - 10.0) - 0.6 * d + 1.5 * wet_season + 0.8 * noise.sample(rng)).max(0.3);
        let t2mdew = t2m - (4.0 + 1.6 * d + noise.sample(rng).abs());
        let ps = ps_base + 0.18 * d - 0.3 * wet_season + 0.3 * noise.sample(rng);
        let ts = t2m + 1.0 + 1.5 * noise.sample(rng);
        let ws10 = (2.5 + 0.6 * noise.sample(rng)).max(0.1);
        let ws10_up = (1.5 + 0.5 * noise.sample(rng)).abs();
        let ws10_down = (1.0 + 0.4 * noise.sample(rng)).abs().min(ws10);
        let ws50 = ws10 * 1.6;
        let ws50_up = ws10_up * 1.4;
        let ws50_down = (ws10_down * 1.3).min(ws50);

        let mut f = [0.0; N_FEATURES];
        f[0] = prectot;
        f[1] = ps;
        f[2] = qv2m;
        f[3] = t2m;
        f[4] = t2mdew;
        f[5] = (t2m + t2mdew) / 2.0;
        f[6] = t2m + t_range / 2.0;
        f[7] = t2m - t_range / 2.0;
        f[8] = t_range;
        f[9] = ts;
        f[10] = ws10;
        f[11] = ws10 + ws10_up;
        f[12] = ws10 - ws10_down;
        f[13] = ws10_up + ws10_down;
        f[14] = ws50;
        f[15] = ws50 + ws50_up;
        f[16] = ws50 - ws50_down;
        f[17] = ws50_up + ws50_down;
        let features = f.map(round2);

        let score = (date.weekday() == Weekday::Tue).then(|| if d < 0.25 { 0.0 } else { (d * 1e4).round() / 1e4 });
        out.push(DailyRecord {
            fips: county.fips,
            date,
            features,
            score,
        });
    }
    out
}

impl SyntheticDataset {
    /// Merge the splits, keep `state` and aggregate `window_days` windows;
    /// the in-memory equivalent of the prepare command.
    pub fn window_samples(&self, state: &str, window_days: u32) -> Result<Vec<WindowSample>> {
        let merged = merge_splits(self.train.clone(), self.validation.clone(), self.test.clone())?;
        let filtered = filter_state(merged, &self.registry, state)?;
        build_window_samples(&filtered.records, window_days, Aggregator::Mean)
    }

    /// Write the five raw files (three timeseries splits, FIPS registry and a
    /// soil table with coordinates plus two filler soil columns).
    pub fn write_to_dir(&self, dir: &Path) -> Result<DatasetPaths> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let paths = DatasetPaths::in_dir(dir);
        let create = |p: &Path| File::create(p).map(BufWriter::new).map_err(|e| Error::io(p, e));
        write_timeseries(create(&paths.train)?, &self.train)?;
        write_timeseries(create(&paths.validation)?, &self.validation)?;
        write_timeseries(create(&paths.test)?, &self.test)?;
        write_fips_registry(create(&paths.fips)?, &self.registry)?;

        let mut wtr = csv::Writer::from_writer(create(&paths.soil)?);
        let err = |e| Error::csv(&paths.soil, e);
        wtr.write_record(["fips", "lat", "lon", "elevation", "slope1"])
            .map_err(err)?;
        for c in &self.coords {
            let fips = c.fips.as_str().trim_start_matches('0').to_string();
            wtr.write_record([
                fips,
                c.latitude.to_string(),
                c.longitude.to_string(),
                "100".to_string(),
                "0.05".to_string(),
            ])
            .map_err(err)?;
        }
        wtr.flush().map_err(|e| Error::io(&paths.soil, e))?;
        Ok(paths)
    }
}
