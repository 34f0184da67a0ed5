//! Raw dataset ingestion: daily timeseries splits, the FIPS registry and
//! county coordinates from the soil table.
//!
//! All readers locate columns by header name. Unknown columns are ignored
//! with a single warning per file, so the same reader handles the wide soil
//! table and the timeseries files.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{feature_index, FEATURE_ALIASES, FEATURE_NAMES, N_FEATURES};

pub const DATE_FORMAT: &str = "%Y-%m-%d";

/// Five-digit county FIPS code, stored zero-padded ("06037").
///
/// Numeric spellings with the leading zero stripped ("6037") are accepted on
/// input and normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Fips([u8; 5]);

impl Fips {
    pub fn as_str(&self) -> &str {
        // constructed from ASCII digits only
        std::str::from_utf8(&self.0).expect("ascii digits")
    }

    /// Two-digit state prefix, e.g. "06" for California.
    pub fn state_code(&self) -> &str {
        &self.as_str()[..2]
    }
}

impl FromStr for Fips {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        // some exports write the code as a float ("6037.0")
        let digits = s.strip_suffix(".0").unwrap_or(s);
        if digits.is_empty() || digits.len() > 5 || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::Domain(format!("invalid FIPS code {s:?}")));
        }
        let mut buf = [b'0'; 5];
        buf[5 - digits.len()..].copy_from_slice(digits.as_bytes());
        Ok(Fips(buf))
    }
}

impl TryFrom<String> for Fips {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Fips> for String {
    fn from(f: Fips) -> String {
        f.as_str().to_string()
    }
}

impl fmt::Display for Fips {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FipsEntry {
    pub fips: Fips,
    pub name: String,
    pub state: String,
}

/// One county-day of measurements plus the weekly score, when one was issued.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyRecord {
    pub fips: Fips,
    pub date: NaiveDate,
    pub features: [f64; N_FEATURES],
    pub score: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountyCoord {
    pub fips: Fips,
    pub latitude: f64,
    pub longitude: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// When false, rows with a missing or non-finite feature value are dropped
    /// with a warning instead of failing the parse.
    pub lenient: bool,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedTimeseries {
    pub records: Vec<DailyRecord>,
    pub dropped_rows: usize,
    pub ignored_columns: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct FilterOutcome {
    pub records: Vec<DailyRecord>,
    /// Rows dropped because their fips was not in the registry.
    pub unknown_rows: usize,
    pub unknown_fips: BTreeSet<Fips>,
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn reader_for<R: Read>(rdr: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(rdr)
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

fn row_err(line: u64, message: impl Into<String>) -> Error {
    Error::Row {
        line,
        message: message.into(),
    }
}

fn parse_date(s: &str, line: u64) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s, DATE_FORMAT)
        .or_else(|_| {
            // tolerate a trailing time component ("2000-01-04 00:00:00")
            let day = s.split([' ', 'T']).next().unwrap_or(s);
            NaiveDate::parse_from_str(day, DATE_FORMAT)
        })
        .map_err(|_| row_err(line, format!("unparseable date {s:?}")))
}

fn parse_f64(s: &str, column: &str, line: u64) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| row_err(line, format!("unparseable number {s:?} in column {column}")))
}

fn warn_ignored(source: &str, ignored: &[String]) {
    if !ignored.is_empty() {
        warn!(
            "{source}: ignoring {} unknown column(s): {}",
            ignored.len(),
            ignored.join(",")
        );
    }
}

struct TimeseriesLayout {
    fips: usize,
    date: usize,
    score: usize,
    features: [usize; N_FEATURES],
    ignored: Vec<String>,
}

fn timeseries_layout(headers: &csv::StringRecord) -> Result<TimeseriesLayout> {
    let mut fips = None;
    let mut date = None;
    let mut score = None;
    let mut features = [usize::MAX; N_FEATURES];
    let mut ignored = Vec::new();
    for (i, raw) in headers.iter().enumerate() {
        let name = FEATURE_ALIASES
            .iter()
            .find(|(alias, _)| *alias == raw)
            .map(|(_, canon)| *canon)
            .unwrap_or(raw);
        match name {
            "fips" => fips = Some(i),
            "date" => date = Some(i),
            "score" => score = Some(i),
            _ => match feature_index(name) {
                Some(j) => features[j] = i,
                None => ignored.push(raw.to_string()),
            },
        }
    }
    let missing = |c: &str| Error::Schema { column: c.to_string() };
    let fips = fips.ok_or_else(|| missing("fips"))?;
    let date = date.ok_or_else(|| missing("date"))?;
    if let Some(j) = features.iter().position(|&c| c == usize::MAX) {
        return Err(missing(FEATURE_NAMES[j]));
    }
    let score = score.ok_or_else(|| missing("score"))?;
    Ok(TimeseriesLayout {
        fips,
        date,
        score,
        features,
        ignored,
    })
}

/// Parse one daily timeseries file (strict mode).
pub fn parse_timeseries_csv(path: &Path) -> Result<Vec<DailyRecord>> {
    Ok(parse_timeseries_csv_with(path, ParseOptions::default())?.records)
}

pub fn parse_timeseries_csv_with(path: &Path, opts: ParseOptions) -> Result<ParsedTimeseries> {
    let file = open(path)?;
    read_timeseries(file, &path.display().to_string(), opts).map_err(|e| match e {
        Error::Csv { source, .. } => Error::csv(path, source),
        other => other,
    })
}

/// Parse timeseries CSV from any reader. `source` names the input in messages.
pub fn read_timeseries<R: Read>(rdr: R, source: &str, opts: ParseOptions) -> Result<ParsedTimeseries> {
    let mut rdr = reader_for(rdr);
    let headers = rdr.headers().map_err(|e| Error::csv(source, e))?.clone();
    let layout = timeseries_layout(&headers)?;
    warn_ignored(source, &layout.ignored);

    let mut seen = HashSet::new();
    let mut out = ParsedTimeseries {
        ignored_columns: layout.ignored.clone(),
        ..Default::default()
    };
    for row in rdr.records() {
        let row = row.map_err(|e| Error::csv(source, e))?;
        let line = line_of(&row);
        let fips: Fips = row[layout.fips]
            .parse()
            .map_err(|_| row_err(line, format!("invalid fips {:?}", &row[layout.fips])))?;
        let date = parse_date(&row[layout.date], line)?;

        let mut features = [0.0; N_FEATURES];
        let mut incomplete = None;
        for (j, &col) in layout.features.iter().enumerate() {
            let cell = &row[col];
            if cell.is_empty() {
                incomplete = Some(format!("missing value for {}", FEATURE_NAMES[j]));
                break;
            }
            let v = parse_f64(cell, FEATURE_NAMES[j], line)?;
            if !v.is_finite() {
                incomplete = Some(format!("non-finite value for {}", FEATURE_NAMES[j]));
                break;
            }
            features[j] = v;
        }
        if let Some(msg) = incomplete {
            if opts.lenient {
                warn!("{source}: line {line}: {msg}; row dropped");
                out.dropped_rows += 1;
                continue;
            }
            return Err(row_err(line, msg));
        }

        let score = match &row[layout.score] {
            "" => None,
            s => {
                let v = parse_f64(s, "score", line)?;
                if !(0.0..=5.0).contains(&v) {
                    return Err(row_err(line, format!("score {v} outside [0, 5]")));
                }
                Some(v)
            }
        };
        if !seen.insert((fips, date)) {
            return Err(Error::Duplicate { fips, date });
        }
        out.records.push(DailyRecord {
            fips,
            date,
            features,
            score,
        });
    }
    Ok(out)
}

/// Write daily records in the timeseries layout (`fips,date,<features>,score`).
pub fn write_timeseries<W: Write>(w: W, records: &[DailyRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["fips", "date"];
    header.extend(FEATURE_NAMES);
    header.push("score");
    wtr.write_record(&header).map_err(|e| Error::csv("<timeseries>", e))?;
    for r in records {
        let mut row = Vec::with_capacity(N_FEATURES + 3);
        row.push(r.fips.to_string());
        row.push(r.date.format(DATE_FORMAT).to_string());
        row.extend(r.features.iter().map(|v| v.to_string()));
        row.push(r.score.map(|s| s.to_string()).unwrap_or_default());
        wtr.write_record(&row).map_err(|e| Error::csv("<timeseries>", e))?;
    }
    wtr.flush().map_err(|e| Error::io("<timeseries>", e))
}

pub fn write_timeseries_csv(path: &Path, records: &[DailyRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_timeseries(std::io::BufWriter::new(file), records)
}

/// Concatenate the three time splits into one series sorted by fips, then date.
pub fn merge_splits(
    train: Vec<DailyRecord>,
    validation: Vec<DailyRecord>,
    test: Vec<DailyRecord>,
) -> Result<Vec<DailyRecord>> {
    let mut all = train;
    all.extend(validation);
    all.extend(test);
    all.sort_by_key(|r| (r.fips, r.date));
    if let Some(w) = all
        .windows(2)
        .find(|w| w[0].fips == w[1].fips && w[0].date == w[1].date)
    {
        return Err(Error::Duplicate {
            fips: w[0].fips,
            date: w[0].date,
        });
    }
    Ok(all)
}

/// Keep the records whose county belongs to `state`, preserving order.
///
/// Records with a fips missing from the registry are dropped and counted.
pub fn filter_state(records: Vec<DailyRecord>, registry: &[FipsEntry], state: &str) -> Result<FilterOutcome> {
    if registry.is_empty() {
        return Err(Error::Input("FIPS registry is empty".into()));
    }
    let lookup: HashMap<Fips, &str> = registry.iter().map(|e| (e.fips, e.state.as_str())).collect();
    let mut unknown_fips = BTreeSet::new();
    let mut unknown_rows = 0;
    let mut kept = Vec::with_capacity(records.len());
    for r in records {
        match lookup.get(&r.fips) {
            Some(s) if *s == state => kept.push(r),
            Some(_) => {}
            None => {
                unknown_rows += 1;
                unknown_fips.insert(r.fips);
            }
        }
    }
    if unknown_rows > 0 {
        warn!(
            "{unknown_rows} record(s) from {} county code(s) absent from the FIPS registry were dropped",
            unknown_fips.len()
        );
    }
    Ok(FilterOutcome {
        records: kept,
        unknown_rows,
        unknown_fips,
    })
}

fn find_column(headers: &csv::StringRecord, names: &[&str]) -> Option<usize> {
    headers
        .iter()
        .position(|h| names.iter().any(|n| h.eq_ignore_ascii_case(n)))
}

pub fn parse_fips_registry(path: &Path) -> Result<Vec<FipsEntry>> {
    read_fips_registry(open(path)?, &path.display().to_string())
}

/// Parse the county registry (`FIPS,Name,State`).
pub fn read_fips_registry<R: Read>(rdr: R, source: &str) -> Result<Vec<FipsEntry>> {
    let mut rdr = reader_for(rdr);
    let headers = rdr.headers().map_err(|e| Error::csv(source, e))?.clone();
    let col = |names: &[&str], label: &str| {
        find_column(&headers, names).ok_or_else(|| Error::Schema {
            column: label.to_string(),
        })
    };
    let fips_col = col(&["FIPS", "fips"], "FIPS")?;
    let name_col = col(&["Name"], "Name")?;
    let state_col = col(&["State"], "State")?;
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::csv(source, e))?;
        let line = line_of(&row);
        let fips = row[fips_col]
            .parse()
            .map_err(|_| row_err(line, format!("invalid FIPS {:?}", &row[fips_col])))?;
        let state = row[state_col].to_string();
        if state.len() != 2 || !state.bytes().all(|b| b.is_ascii_uppercase()) {
            return Err(row_err(line, format!("invalid state code {state:?}")));
        }
        out.push(FipsEntry {
            fips,
            name: row[name_col].to_string(),
            state,
        });
    }
    Ok(out)
}

pub fn write_fips_registry<W: Write>(w: W, entries: &[FipsEntry]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let err = |e| Error::csv("<fips>", e);
    wtr.write_record(["FIPS", "Name", "State"]).map_err(err)?;
    for e in entries {
        wtr.write_record([e.fips.as_str(), &e.name, &e.state]).map_err(err)?;
    }
    wtr.flush().map_err(|e| Error::io("<fips>", e))
}

pub fn parse_soil_coords(path: &Path) -> Result<BTreeMap<Fips, CountyCoord>> {
    read_soil_coords(open(path)?, &path.display().to_string())
}

/// Read county coordinates from the soil table; soil attributes are skipped.
/// Duplicate fips rows resolve last-wins with a warning.
pub fn read_soil_coords<R: Read>(rdr: R, source: &str) -> Result<BTreeMap<Fips, CountyCoord>> {
    let mut rdr = reader_for(rdr);
    let headers = rdr.headers().map_err(|e| Error::csv(source, e))?.clone();
    let col = |names: &[&str], label: &str| {
        find_column(&headers, names).ok_or_else(|| Error::Schema {
            column: label.to_string(),
        })
    };
    let fips_col = col(&["fips"], "fips")?;
    let lat_col = col(&["lat", "latitude"], "lat")?;
    let lon_col = col(&["lon", "longitude"], "lon")?;
    let ignored: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| ![fips_col, lat_col, lon_col].contains(i))
        .map(|(_, h)| h.to_string())
        .collect();
    if !ignored.is_empty() {
        log::debug!("{source}: {} soil attribute column(s) skipped", ignored.len());
    }

    let mut out = BTreeMap::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::csv(source, e))?;
        let line = line_of(&row);
        let fips: Fips = row[fips_col]
            .parse()
            .map_err(|_| row_err(line, format!("invalid fips {:?}", &row[fips_col])))?;
        let latitude = parse_f64(&row[lat_col], "lat", line)?;
        let longitude = parse_f64(&row[lon_col], "lon", line)?;
        if !(-90.0..=90.0).contains(&latitude) {
            return Err(row_err(line, format!("latitude {latitude} outside [-90, 90]")));
        }
        if !(-180.0..=180.0).contains(&longitude) {
            return Err(row_err(line, format!("longitude {longitude} outside [-180, 180]")));
        }
        let coord = CountyCoord {
            fips,
            latitude,
            longitude,
        };
        if out.insert(fips, coord).is_some() {
            warn!("{source}: line {line}: duplicate fips {fips}, keeping the later row");
        }
    }
    Ok(out)
}
