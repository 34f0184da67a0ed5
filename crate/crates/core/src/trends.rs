//! County-level drought trend statistics.
//!
//! Yearly label frequencies across all counties, per-county label
//! percentages over a period, percentage-point changes between two periods,
//! and point data for bubble maps (GeoJSON).

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use chrono::Datelike;
use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{CountyCoord, Fips};
use crate::preprocess::LabeledSample;

pub const N_LABELS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DroughtLabel {
    None,
    D0,
    D1,
    D2,
    D3,
    D4,
}

impl DroughtLabel {
    pub const ALL: [DroughtLabel; N_LABELS] = [
        DroughtLabel::None,
        DroughtLabel::D0,
        DroughtLabel::D1,
        DroughtLabel::D2,
        DroughtLabel::D3,
        DroughtLabel::D4,
    ];

    /// Label for an intensity class (0 = none, k = D(k-1)).
    pub fn from_class(class: u8) -> Result<Self> {
        Self::ALL
            .get(usize::from(class))
            .copied()
            .ok_or_else(|| Error::Domain(format!("intensity class {class} outside 0..=5")))
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn description(self) -> &'static str {
        match self {
            DroughtLabel::None => "No Drought",
            DroughtLabel::D0 => "Abnormally Dry",
            DroughtLabel::D1 => "Moderate Drought",
            DroughtLabel::D2 => "Severe Drought",
            DroughtLabel::D3 => "Extreme Drought",
            DroughtLabel::D4 => "Exceptional Drought",
        }
    }
}

impl fmt::Display for DroughtLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DroughtLabel::None => "0",
            DroughtLabel::D0 => "D0",
            DroughtLabel::D1 => "D1",
            DroughtLabel::D2 => "D2",
            DroughtLabel::D3 => "D3",
            DroughtLabel::D4 => "D4",
        })
    }
}

impl FromStr for DroughtLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "0" | "NONE" => Ok(DroughtLabel::None),
            "D0" => Ok(DroughtLabel::D0),
            "D1" => Ok(DroughtLabel::D1),
            "D2" => Ok(DroughtLabel::D2),
            "D3" => Ok(DroughtLabel::D3),
            "D4" => Ok(DroughtLabel::D4),
            other => Err(Error::Config(format!("unknown drought label {other:?}"))),
        }
    }
}

/// Inclusive calendar-year range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Period {
    pub first_year: i32,
    pub last_year: i32,
}

impl Period {
    pub const fn new(first_year: i32, last_year: i32) -> Self {
        Period { first_year, last_year }
    }

    pub fn contains(&self, year: i32) -> bool {
        (self.first_year..=self.last_year).contains(&year)
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.first_year, self.last_year)
    }
}

/// The two period comparisons used in the trend analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// 2000-2013 vs 2014-2020.
    Long,
    /// 2007-2013 vs 2014-2020.
    Recent,
}

impl Scenario {
    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Scenario::Long),
            2 => Ok(Scenario::Recent),
            other => Err(Error::Config(format!("scenario must be 1 or 2, got {other}"))),
        }
    }

    pub fn periods(self) -> (Period, Period) {
        match self {
            Scenario::Long => (Period::new(2000, 2013), Period::new(2014, 2020)),
            Scenario::Recent => (Period::new(2007, 2013), Period::new(2014, 2020)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct YearLabelCounts {
    pub year: i32,
    pub counts: [u64; N_LABELS],
}

impl YearLabelCounts {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Label occurrences per calendar year of the sample date, ascending by year.
pub fn yearly_counts(samples: &[LabeledSample]) -> Vec<YearLabelCounts> {
    let mut by_year: BTreeMap<i32, [u64; N_LABELS]> = BTreeMap::new();
    for s in samples {
        by_year.entry(s.date.year()).or_default()[usize::from(s.intensity_class)] += 1;
    }
    by_year
        .into_iter()
        .map(|(year, counts)| YearLabelCounts { year, counts })
        .collect()
}

pub fn write_yearly_csv<W: Write>(w: W, rows: &[YearLabelCounts]) -> Result<()> {
    let err = |e| Error::csv("<yearly>", e);
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["year".to_string()];
    header.extend(DroughtLabel::ALL.iter().map(|l| l.to_string()));
    wtr.write_record(&header).map_err(err)?;
    for r in rows {
        let mut rec = vec![r.year.to_string()];
        rec.extend(r.counts.iter().map(|c| c.to_string()));
        wtr.write_record(&rec).map_err(err)?;
    }
    wtr.flush().map_err(|e| Error::io("<yearly>", e))
}

/// Per-county, per-year label counts.
#[derive(Debug, Clone, Default)]
pub struct CountyYearTable {
    table: BTreeMap<Fips, BTreeMap<i32, [u64; N_LABELS]>>,
}

impl CountyYearTable {
    pub fn build(samples: &[LabeledSample]) -> Self {
        let mut table: BTreeMap<Fips, BTreeMap<i32, [u64; N_LABELS]>> = BTreeMap::new();
        for s in samples {
            table.entry(s.fips).or_default().entry(s.date.year()).or_default()[usize::from(s.intensity_class)] += 1;
        }
        CountyYearTable { table }
    }

    pub fn counties(&self) -> impl Iterator<Item = Fips> + '_ {
        self.table.keys().copied()
    }

    pub fn period_counts(&self, fips: Fips, period: Period) -> [u64; N_LABELS] {
        let mut out = [0; N_LABELS];
        if let Some(years) = self.table.get(&fips) {
            for (_, counts) in years.range(period.first_year..=period.last_year) {
                for (o, c) in out.iter_mut().zip(counts) {
                    *o += c;
                }
            }
        }
        out
    }

    /// Label percentages of one county over a period; `None` when the
    /// county has no samples in the period.
    pub fn percentages(&self, fips: Fips, period: Period) -> Option<[f64; N_LABELS]> {
        let counts = self.period_counts(fips, period);
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return None;
        }
        Some(counts.map(|c| 100.0 * c as f64 / total as f64))
    }
}

pub fn period_percentages(samples: &[LabeledSample], fips: Fips, period: Period) -> Option<[f64; N_LABELS]> {
    let subset: Vec<LabeledSample> = samples.iter().filter(|s| s.fips == fips).cloned().collect();
    let pct = CountyYearTable::build(&subset).percentages(fips, period);
    if pct.is_none() {
        warn!("county {fips} has no samples in {period}");
    }
    pct
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountyTrend {
    pub fips: Fips,
    pub label: DroughtLabel,
    pub pct_a: f64,
    pub pct_b: f64,
    /// `pct_b - pct_a`, in percentage points.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChangeSummary {
    pub label: DroughtLabel,
    pub period_a: Period,
    pub period_b: Period,
    pub trends: Vec<CountyTrend>,
    pub n_positive: usize,
    pub n_negative: usize,
    pub n_zero: usize,
    /// Counties missing samples in either period.
    pub skipped: Vec<Fips>,
}

impl fmt::Display for ChangeSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "label={} {} vs {}: positive={} negative={} zero={}",
            self.label, self.period_a, self.period_b, self.n_positive, self.n_negative, self.n_zero
        )
    }
}

pub fn change_summary(
    samples: &[LabeledSample],
    label: DroughtLabel,
    period_a: Period,
    period_b: Period,
) -> ChangeSummary {
    change_summary_from(&CountyYearTable::build(samples), label, period_a, period_b)
}

pub fn change_summary_from(
    table: &CountyYearTable,
    label: DroughtLabel,
    period_a: Period,
    period_b: Period,
) -> ChangeSummary {
    let mut trends = Vec::new();
    let mut skipped = Vec::new();
    for fips in table.counties() {
        match (table.percentages(fips, period_a), table.percentages(fips, period_b)) {
            (Some(a), Some(b)) => {
                let (pct_a, pct_b) = (a[label.index()], b[label.index()]);
                trends.push(CountyTrend {
                    fips,
                    label,
                    pct_a,
                    pct_b,
                    delta: pct_b - pct_a,
                });
            }
            _ => {
                warn!("county {fips} lacks samples in {period_a} or {period_b}; skipped");
                skipped.push(fips);
            }
        }
    }
    ChangeSummary {
        label,
        period_a,
        period_b,
        n_positive: trends.iter().filter(|t| t.delta > 0.0).count(),
        n_negative: trends.iter().filter(|t| t.delta < 0.0).count(),
        n_zero: trends.iter().filter(|t| t.delta == 0.0).count(),
        trends,
        skipped,
    }
}

/// CSV with columns `fips,name,label,pct_a,pct_b,delta`.
pub fn write_trends_csv<W: Write>(w: W, trends: &[CountyTrend], names: &BTreeMap<Fips, String>) -> Result<()> {
    let err = |e| Error::csv("<trends>", e);
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["fips", "name", "label", "pct_a", "pct_b", "delta"])
        .map_err(err)?;
    for t in trends {
        wtr.write_record([
            t.fips.to_string(),
            names.get(&t.fips).cloned().unwrap_or_default(),
            t.label.to_string(),
            t.pct_a.to_string(),
            t.pct_b.to_string(),
            t.delta.to_string(),
        ])
        .map_err(err)?;
    }
    wtr.flush().map_err(|e| Error::io("<trends>", e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureCollection {
    #[serde(rename = "type")]
    pub kind: String,
    pub features: Vec<PointFeature>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFeature {
    #[serde(rename = "type")]
    pub kind: String,
    pub geometry: PointGeometry,
    pub properties: TrendProperties,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointGeometry {
    #[serde(rename = "type")]
    pub kind: String,
    /// `[longitude, latitude]`
    pub coordinates: [f64; 2],
}

/// Bubble size is `magnitude` (= |delta|); bubble colour follows `sign`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendProperties {
    pub fips: String,
    pub name: String,
    pub label: String,
    pub pct_a: f64,
    pub pct_b: f64,
    pub delta: f64,
    pub magnitude: f64,
    pub sign: String,
}

#[derive(Debug, Clone)]
pub struct MapData {
    pub collection: FeatureCollection,
    /// Counties dropped for lack of coordinates.
    pub missing_coords: Vec<Fips>,
}

/// One GeoJSON point per county trend, placed at the county's coordinates.
pub fn emit_map_data(
    trends: &[CountyTrend],
    coords: &BTreeMap<Fips, CountyCoord>,
    names: &BTreeMap<Fips, String>,
) -> MapData {
    let mut features = Vec::with_capacity(trends.len());
    let mut missing_coords = Vec::new();
    for t in trends {
        let Some(c) = coords.get(&t.fips) else {
            warn!("no coordinates for county {}; left off the map", t.fips);
            missing_coords.push(t.fips);
            continue;
        };
        let sign = if t.delta > 0.0 {
            "positive"
        } else if t.delta < 0.0 {
            "negative"
        } else {
            "zero"
        };
        features.push(PointFeature {
            kind: "Feature".into(),
            geometry: PointGeometry {
                kind: "Point".into(),
                coordinates: [c.longitude, c.latitude],
            },
            properties: TrendProperties {
                fips: t.fips.to_string(),
                name: names.get(&t.fips).cloned().unwrap_or_default(),
                label: t.label.to_string(),
                pct_a: t.pct_a,
                pct_b: t.pct_b,
                delta: t.delta,
                magnitude: t.delta.abs(),
                sign: sign.into(),
            },
        });
    }
    MapData {
        collection: FeatureCollection {
            kind: "FeatureCollection".into(),
            features,
        },
        missing_coords,
    }
}

pub fn write_geojson<W: Write>(w: W, map: &MapData) -> Result<()> {
    serde_json::to_writer_pretty(w, &map.collection).map_err(|e| Error::Input(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn sample(fips: &str, year: i32, week: u32, class: u8) -> LabeledSample {
        LabeledSample {
            fips: fips.parse().unwrap(),
            date: NaiveDate::from_ymd_opt(year, 1, 1).unwrap() + chrono::Duration::weeks(week.into()),
            features: vec![],
            score: f64::from(class),
            intensity_class: class,
            presence: class > 0,
        }
    }

    #[test]
    fn labels_round_trip() {
        for l in DroughtLabel::ALL {
            assert_eq!(l.to_string().parse::<DroughtLabel>().unwrap(), l);
            assert_eq!(DroughtLabel::from_class(l.index() as u8).unwrap(), l);
        }
        assert!("D5".parse::<DroughtLabel>().is_err());
        assert!(DroughtLabel::from_class(6).is_err());
    }

    #[test]
    fn yearly_counts_by_label() {
        let samples = vec![
            sample("06001", 2005, 0, 0),
            sample("06001", 2005, 1, 0),
            sample("06003", 2006, 0, 5),
        ];
        let years = yearly_counts(&samples);
        assert_eq!(years.len(), 2);
        assert_eq!(years[0].counts, [2, 0, 0, 0, 0, 0]);
        assert_eq!(years[1].counts[5], 1);
        assert_eq!(years.iter().map(|y| y.total()).sum::<u64>(), 3);
    }

    #[test]
    fn percentages_sum_to_100() {
        let f: Fips = "06001".parse().unwrap();
        let all_zero: Vec<_> = (0..10).map(|w| sample("06001", 2001, w, 0)).collect();
        let p = period_percentages(&all_zero, f, Period::new(2000, 2013)).unwrap();
        assert_eq!(p, [100.0, 0.0, 0.0, 0.0, 0.0, 0.0]);

        let mixed: Vec<_> = (0..7).map(|w| sample("06001", 2001, w, (w % 6) as u8)).collect();
        let p = period_percentages(&mixed, f, Period::new(2000, 2013)).unwrap();
        assert!((p.iter().sum::<f64>() - 100.0).abs() < 1e-9);
        assert!(period_percentages(&mixed, f, Period::new(2014, 2020)).is_none());
    }

    #[test]
    fn change_counts() {
        let mut samples = Vec::new();
        // county 1: D4 appears only late; county 2: unchanged; county 3: fewer D4 late
        for w in 0..4 {
            samples.push(sample("06001", 2010, w, 0));
            samples.push(sample("06001", 2015, w, if w < 2 { 5 } else { 0 }));
            samples.push(sample("06003", 2010, w, 5));
            samples.push(sample("06003", 2015, w, 5));
            samples.push(sample("06005", 2010, w, 5));
            samples.push(sample("06005", 2015, w, 0));
        }
        samples.push(sample("06007", 2015, 0, 0));
        let (a, b) = Scenario::Long.periods();
        let s = change_summary(&samples, DroughtLabel::D4, a, b);
        assert_eq!((s.n_positive, s.n_negative, s.n_zero), (1, 1, 1));
        assert_eq!(s.skipped.len(), 1);
        assert_eq!(s.trends[0].delta, 50.0);
        assert!(s.to_string().contains("positive=1 negative=1 zero=1"));

        let reversed = change_summary(&samples, DroughtLabel::D4, b, a);
        for (x, y) in s.trends.iter().zip(&reversed.trends) {
            assert_eq!(x.delta, -y.delta);
        }
    }

    #[test]
    fn map_points_and_missing_coords() {
        let trends: Vec<CountyTrend> = ["06001", "06003"]
            .iter()
            .map(|f| CountyTrend {
                fips: f.parse().unwrap(),
                label: DroughtLabel::D3,
                pct_a: 10.0,
                pct_b: 5.0,
                delta: -5.0,
            })
            .collect();
        let mut coords = BTreeMap::new();
        let f: Fips = "06001".parse().unwrap();
        coords.insert(
            f,
            CountyCoord {
                fips: f,
                latitude: 37.6,
                longitude: -121.9,
            },
        );
        let map = emit_map_data(&trends, &coords, &BTreeMap::new());
        assert_eq!(map.collection.features.len(), 1);
        assert_eq!(map.missing_coords.len(), 1);
        let mut buf = Vec::new();
        write_geojson(&mut buf, &map).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["type"], "FeatureCollection");
        assert_eq!(v["features"][0]["geometry"]["type"], "Point");
        assert_eq!(v["features"][0]["geometry"]["coordinates"][0], -121.9);
        assert_eq!(v["features"][0]["properties"]["sign"], "negative");
        assert_eq!(v["features"][0]["properties"]["magnitude"], 5.0);
    }
}
