//! Label discretization, min-max scaling and the train/test split.

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FEATURE_NAMES, N_FEATURES};
use crate::ingest::Fips;
use crate::learners::Matrix;
use crate::seed;
use crate::window::WindowSample;

pub const DEFAULT_SEED: u64 = 20;
pub const DEFAULT_TEST_FRACTION: f64 = 0.3;

/// A window sample with scaled features and derived class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub fips: Fips,
    pub date: NaiveDate,
    pub features: Vec<f64>,
    pub score: f64,
    /// 0 = no drought, k in 1..=5 = D(k-1).
    pub intensity_class: u8,
    pub presence: bool,
}

/// Map a continuous score in [0, 5] to a class, rounding halves up.
pub fn discretize_score(score: f64) -> Result<u8> {
    if !(0.0..=5.0).contains(&score) {
        return Err(Error::Domain(format!("score {score} outside [0, 5]")));
    }
    Ok((score + 0.5).floor().min(5.0) as u8)
}

/// Per-feature min/max for the feature columns the scaler was fitted on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    /// Indices into the canonical feature list.
    pub columns: Vec<usize>,
    pub feature_names: Vec<String>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

pub fn fit_scaler(samples: &[WindowSample]) -> Result<ScalerParams> {
    let all: Vec<usize> = (0..N_FEATURES).collect();
    fit_scaler_columns(samples, &all)
}

pub fn fit_scaler_columns(samples: &[WindowSample], columns: &[usize]) -> Result<ScalerParams> {
    if samples.is_empty() {
        return Err(Error::Input("cannot fit a scaler on zero samples".into()));
    }
    if let Some(&c) = columns.iter().find(|&&c| c >= N_FEATURES) {
        return Err(Error::Parameter(format!("feature column {c} out of range")));
    }
    let mut min = vec![f64::INFINITY; columns.len()];
    let mut max = vec![f64::NEG_INFINITY; columns.len()];
    for s in samples {
        for (k, &c) in columns.iter().enumerate() {
            min[k] = min[k].min(s.features[c]);
            max[k] = max[k].max(s.features[c]);
        }
    }
    Ok(ScalerParams {
        columns: columns.to_vec(),
        feature_names: columns.iter().map(|&c| FEATURE_NAMES[c].to_string()).collect(),
        min,
        max,
    })
}

impl ScalerParams {
    pub fn width(&self) -> usize {
        self.columns.len()
    }

    /// Scale an already-selected feature vector (one value per fitted column).
    /// Out-of-range values are clamped; a constant feature maps to 0.
    pub fn scale(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.width() {
            return Err(Error::Dimension {
                expected: self.width(),
                found: x.len(),
            });
        }
        Ok(x.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&v, (&lo, &hi))| {
                if hi > lo {
                    ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect())
    }

    /// Select this scaler's columns from a full 18-feature vector and scale them.
    pub fn apply(&self, features: &[f64; N_FEATURES]) -> Vec<f64> {
        let selected: Vec<f64> = self.columns.iter().map(|&c| features[c]).collect();
        self.scale(&selected).expect("width matches by construction")
    }
}

pub fn apply_scaler(params: &ScalerParams, sample: &WindowSample) -> Vec<f64> {
    params.apply(&sample.features)
}

pub fn label_samples(samples: &[WindowSample], scaler: &ScalerParams) -> Result<Vec<LabeledSample>> {
    samples
        .iter()
        .map(|s| {
            let intensity_class = discretize_score(s.score)?;
            Ok(LabeledSample {
                fips: s.fips,
                date: s.date,
                features: scaler.apply(&s.features),
                score: s.score,
                intensity_class,
                presence: intensity_class >= 1,
            })
        })
        .collect()
}

/// Number of test rows for `n` samples: the test fraction rounded up.
pub fn test_size(n: usize, test_fraction: f64) -> usize {
    // 0.3 * 10 is 3.0000000000000004 in binary floating point
    let raw = (test_fraction * n as f64 * 1e9).round() / 1e9;
    (raw.ceil() as usize).min(n)
}

/// Seeded shuffle, then the first `n - test_size(n)` rows go to train and the
/// rest to test.
pub fn train_test_split<T>(samples: Vec<T>, test_fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Parameter(format!(
            "test fraction {test_fraction} must lie in (0, 1)"
        )));
    }
    if samples.len() < 10 {
        return Err(Error::Input(format!(
            "need at least 10 samples to split, got {}",
            samples.len()
        )));
    }
    let n = samples.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed));
    let n_train = n - test_size(n, test_fraction);

    let mut slots: Vec<Option<T>> = samples.into_iter().map(Some).collect();
    let mut take = |i: &usize| slots[*i].take().expect("permutation visits each index once");
    let train = order[..n_train].iter().map(&mut take).collect();
    let test = order[n_train..].iter().map(&mut take).collect();
    Ok((train, test))
}

/// The two prediction subtasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Drought vs no drought over all rows.
    Presence,
    /// D0..D4 (classes 1..=5) over drought rows only.
    Intensity,
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "presence" => Ok(Task::Presence),
            "intensity" => Ok(Task::Intensity),
            other => Err(Error::Config(format!(
                "unknown task {other:?} (expected presence or intensity)"
            ))),
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Task::Presence => "presence",
            Task::Intensity => "intensity",
        })
    }
}

impl Task {
    pub fn classes(self) -> Vec<u32> {
        match self {
            Task::Presence => vec![0, 1],
            Task::Intensity => vec![1, 2, 3, 4, 5],
        }
    }

    pub fn includes(self, s: &LabeledSample) -> bool {
        match self {
            Task::Presence => true,
            Task::Intensity => s.intensity_class >= 1,
        }
    }

    pub fn target(self, s: &LabeledSample) -> u32 {
        match self {
            Task::Presence => u32::from(s.presence),
            Task::Intensity => u32::from(s.intensity_class),
        }
    }

    pub fn subset(self, samples: &[LabeledSample]) -> Vec<LabeledSample> {
        samples.iter().filter(|s| self.includes(s)).cloned().collect()
    }

    /// Feature matrix and class indices (positions in [`Task::classes`]).
    pub fn design(self, samples: &[LabeledSample]) -> Result<(Matrix, Vec<usize>)> {
        let classes = self.classes();
        let width = samples.first().map(|s| s.features.len()).unwrap_or(0);
        let mut x = Matrix::with_capacity(samples.len(), width);
        let mut y = Vec::with_capacity(samples.len());
        for s in samples {
            let t = self.target(s);
            let k = classes
                .iter()
                .position(|&c| c == t)
                .ok_or_else(|| Error::Input(format!("label {t} not a {self} class")))?;
            x.push_row(&s.features)?;
            y.push(k);
        }
        Ok((x, y))
    }
}

pub fn presence_subset(samples: &[LabeledSample]) -> Vec<LabeledSample> {
    Task::Presence.subset(samples)
}

pub fn intensity_subset(samples: &[LabeledSample]) -> Vec<LabeledSample> {
    Task::Intensity.subset(samples)
}
