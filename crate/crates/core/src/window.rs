//! Trailing-window aggregation of daily records into weekly samples.
//!
//! A sample is emitted for every daily record that carries a score. Its
//! features aggregate the days in `[date - window_days + 1, date]` that are
//! present in the county's series. Windows at the start of a series are
//! shorter than `window_days` and are kept; `window_len` records how many
//! days contributed.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use chrono::{Duration, NaiveDate};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{FEATURE_NAMES, N_FEATURES};
use crate::ingest::{DailyRecord, Fips, DATE_FORMAT};

pub const DEFAULT_WINDOW_DAYS: u32 = 90;

#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    pub fips: Fips,
    pub date: NaiveDate,
    pub features: [f64; N_FEATURES],
    pub score: f64,
    pub window_len: u32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregator {
    #[default]
    Mean,
}

impl std::str::FromStr for Aggregator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Aggregator::Mean),
            other => Err(Error::Config(format!("unknown aggregator {other:?}"))),
        }
    }
}

impl Aggregator {
    fn aggregate(self, window: &[DailyRecord], out: &mut [f64; N_FEATURES]) {
        match self {
            Aggregator::Mean => {
                let n = window.len() as f64;
                for (j, slot) in out.iter_mut().enumerate() {
                    let mut sum = 0.0;
                    let mut lo = f64::INFINITY;
                    let mut hi = f64::NEG_INFINITY;
                    for r in window {
                        let v = r.features[j];
                        sum += v;
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                    // rounding in the sum can push the mean a ulp outside the data range
                    *slot = (sum / n).clamp(lo, hi);
                }
            }
        }
    }
}

/// Aggregate every scored day of every county over its trailing window.
///
/// `daily` must be sorted by fips, then date (as produced by
/// [`crate::ingest::merge_splits`]). Output is ordered the same way.
pub fn build_window_samples(
    daily: &[DailyRecord],
    window_days: u32,
    aggregator: Aggregator,
) -> Result<Vec<WindowSample>> {
    Ok(
        aggregate_windows(daily, window_days, aggregator, |r| r.score.is_some())?
            .into_iter()
            .map(|w| WindowSample {
                fips: w.fips,
                date: w.date,
                features: w.features,
                score: w.score.expect("only scored days selected"),
                window_len: w.window_len,
            })
            .collect(),
    )
}

/// Trailing-window features at an arbitrary selection of days.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowFeatures {
    pub fips: Fips,
    pub date: NaiveDate,
    pub features: [f64; N_FEATURES],
    pub score: Option<f64>,
    pub window_len: u32,
}

/// Aggregate the trailing window ending at every day for which `select`
/// holds. Same ordering contract as [`build_window_samples`].
pub fn aggregate_windows<F>(
    daily: &[DailyRecord],
    window_days: u32,
    aggregator: Aggregator,
    select: F,
) -> Result<Vec<WindowFeatures>>
where
    F: Fn(&DailyRecord) -> bool + Sync,
{
    if window_days < 1 {
        return Err(Error::Parameter("window_days must be at least 1".into()));
    }
    if let Some(w) = daily
        .windows(2)
        .find(|w| (w[0].fips, w[0].date) >= (w[1].fips, w[1].date))
    {
        return Err(Error::Input(format!(
            "daily records not strictly sorted by (fips, date) at {} {}",
            w[1].fips, w[1].date
        )));
    }

    let counties: Vec<&[DailyRecord]> = daily.chunk_by(|a, b| a.fips == b.fips).collect();
    let per_county: Vec<Vec<WindowFeatures>> = counties
        .par_iter()
        .map(|series| county_windows(series, window_days, aggregator, &select))
        .collect();
    Ok(per_county.into_iter().flatten().collect())
}

fn county_windows<F>(series: &[DailyRecord], window_days: u32, agg: Aggregator, select: &F) -> Vec<WindowFeatures>
where
    F: Fn(&DailyRecord) -> bool,
{
    let span = Duration::days(i64::from(window_days) - 1);
    let mut out = Vec::new();
    let mut start = 0;
    for (end, rec) in series.iter().enumerate() {
        if !select(rec) {
            continue;
        }
        let first_day = rec.date - span;
        while series[start].date < first_day {
            start += 1;
        }
        let window = &series[start..=end];
        let mut features = [0.0; N_FEATURES];
        agg.aggregate(window, &mut features);
        out.push(WindowFeatures {
            fips: rec.fips,
            date: rec.date,
            features,
            score: rec.score,
            window_len: window.len() as u32,
        });
    }
    out
}

pub fn prepared_header() -> Vec<&'static str> {
    let mut h = vec!["fips", "date"];
    h.extend(FEATURE_NAMES);
    h.extend(["score", "window_len"]);
    h
}

/// Write samples as `fips,date,<18 features>,score,window_len`.
///
/// Reals are printed in shortest round-trip form, so reading the file back
/// reproduces every value bit for bit.
pub fn write_prepared<W: Write>(w: W, samples: &[WindowSample]) -> Result<()> {
    let err = |e| Error::csv("<prepared>", e);
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(prepared_header()).map_err(err)?;
    for s in samples {
        let mut row = Vec::with_capacity(N_FEATURES + 4);
        row.push(s.fips.to_string());
        row.push(s.date.format(DATE_FORMAT).to_string());
        row.extend(s.features.iter().map(|v| v.to_string()));
        row.push(s.score.to_string());
        row.push(s.window_len.to_string());
        wtr.write_record(&row).map_err(err)?;
    }
    wtr.flush().map_err(|e| Error::io("<prepared>", e))
}

pub fn write_prepared_csv(path: &Path, samples: &[WindowSample]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::Input("refusing to write an empty prepared dataset".into()));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut buf = BufWriter::new(file);
    write_prepared(&mut buf, samples).map_err(|e| relabel(e, path))?;
    buf.flush().map_err(|e| Error::io(path, e))
}

fn relabel(e: Error, path: &Path) -> Error {
    match e {
        Error::Csv { source, .. } => Error::csv(path, source),
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    }
}

pub fn read_prepared_csv(path: &Path) -> Result<Vec<WindowSample>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_prepared(file).map_err(|e| relabel(e, path))
}

/// Read a prepared-sample file. The header must match [`prepared_header`] exactly.
pub fn read_prepared<R: Read>(r: R) -> Result<Vec<WindowSample>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let headers = rdr.headers().map_err(|e| Error::csv("<prepared>", e))?.clone();
    let expected = prepared_header();
    for name in &expected {
        if !headers.iter().any(|h| h == *name) {
            return Err(Error::Schema {
                column: name.to_string(),
            });
        }
    }
    if headers.len() != expected.len() || headers.iter().zip(&expected).any(|(a, b)| a != *b) {
        return Err(Error::Input(format!(
            "prepared file columns out of order: {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::csv("<prepared>", e))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let bad = |what: &str, v: &str| Error::Row {
            line,
            message: format!("unparseable {what} {v:?}"),
        };
        let fips: Fips = row[0].parse().map_err(|_| bad("fips", &row[0]))?;
        let date = NaiveDate::parse_from_str(&row[1], DATE_FORMAT).map_err(|_| bad("date", &row[1]))?;
        let mut features = [0.0; N_FEATURES];
        for (j, slot) in features.iter_mut().enumerate() {
            let cell = &row[2 + j];
            *slot = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(FEATURE_NAMES[j], cell))?;
        }
        let score: f64 = row[2 + N_FEATURES]
            .parse()
            .map_err(|_| bad("score", &row[2 + N_FEATURES]))?;
        if !(0.0..=5.0).contains(&score) {
            return Err(Error::Row {
                line,
                message: format!("score {score} outside [0, 5]"),
            });
        }
        let window_len: u32 = row[3 + N_FEATURES]
            .parse()
            .map_err(|_| bad("window_len", &row[3 + N_FEATURES]))?;
        if window_len == 0 {
            return Err(Error::Row {
                line,
                message: "window_len must be at least 1".into(),
            });
        }
        out.push(WindowSample {
            fips,
            date,
            features,
            score,
            window_len,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(fips: &str, days: usize, value: impl Fn(usize) -> f64, scored: &[usize]) -> Vec<DailyRecord> {
        let start = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
        (0..days)
            .map(|i| DailyRecord {
                fips: fips.parse().unwrap(),
                date: start + Duration::days(i as i64),
                features: [value(i); N_FEATURES],
                score: scored.contains(&i).then_some(1.0),
            })
            .collect()
    }

    #[test]
    fn constant_series_mean() {
        let daily = series("06001", 90, |_| 2.0, &[89]);
        let out = build_window_samples(&daily, 90, Aggregator::Mean).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].features[0], 2.0);
        assert_eq!(out[0].window_len, 90);
    }

    #[test]
    fn partial_window_at_series_start() {
        let daily = series("06001", 20, |i| i as f64 + 1.0, &[9]);
        let out = build_window_samples(&daily, 90, Aggregator::Mean).unwrap();
        assert_eq!(out[0].window_len, 10);
        assert_eq!(out[0].features[0], 5.5);
    }

    #[test]
    fn trailing_window_excludes_older_days() {
        let daily = series("06001", 200, |i| i as f64, &[199]);
        let out = build_window_samples(&daily, 90, Aggregator::Mean).unwrap();
        assert_eq!(out[0].window_len, 90);
        // days 110..=199
        assert_eq!(out[0].features[3], (110.0 + 199.0) / 2.0);
    }

    #[test]
    fn gaps_are_skipped() {
        let mut daily = series("06001", 10, |i| i as f64, &[9]);
        daily.remove(5);
        let out = build_window_samples(&daily, 5, Aggregator::Mean).unwrap();
        // days 5..=9 minus the removed day 5
        assert_eq!(out[0].window_len, 4);
        assert_eq!(out[0].features[0], (6.0 + 7.0 + 8.0 + 9.0) / 4.0);
    }

    #[test]
    fn parameter_and_order_errors() {
        let daily = series("06001", 3, |_| 1.0, &[2]);
        assert!(matches!(
            build_window_samples(&daily, 0, Aggregator::Mean),
            Err(Error::Parameter(_))
        ));
        let mut shuffled = daily.clone();
        shuffled.swap(0, 2);
        assert!(build_window_samples(&shuffled, 3, Aggregator::Mean).is_err());
        let unscored = series("06001", 3, |_| 1.0, &[]);
        assert!(build_window_samples(&unscored, 3, Aggregator::Mean).unwrap().is_empty());
    }

    #[test]
    fn multiple_counties_stay_separate() {
        let mut daily = series("06001", 30, |_| 1.0, &[29]);
        daily.extend(series("06003", 30, |_| 3.0, &[0, 29]));
        let out = build_window_samples(&daily, 90, Aggregator::Mean).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(out[0].features[0], 1.0);
        assert_eq!(out[1].window_len, 1);
        assert_eq!(out[2].features[0], 3.0);
        assert_eq!(out[2].window_len, 30);
    }

    #[test]
    fn prepared_round_trip_and_schema() {
        let daily = series("06001", 40, |i| (i as f64).sin() * 1e-3 + 0.1, &[6, 13, 20, 39]);
        let samples = build_window_samples(&daily, 90, Aggregator::Mean).unwrap();
        let mut buf = Vec::new();
        write_prepared(&mut buf, &samples).unwrap();
        assert_eq!(read_prepared(buf.as_slice()).unwrap(), samples);

        let text = String::from_utf8(buf).unwrap();
        let short = text.replacen(",WS50M_RANGE", "", 1);
        assert!(matches!(read_prepared(short.as_bytes()), Err(Error::Schema { .. })));
    }
}
