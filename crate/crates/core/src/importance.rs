//! Mean-decrease-impurity importance and feature-set scenarios.
//!
//! Each scenario keeps a subset of the canonical features, trains a presence
//! forest on it and records test accuracy plus the MDI ranking.

use std::io::Write;

use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::{FEATURE_NAMES, N_FEATURES};
use crate::learners::{fit_forest, Classifier, ForestParams, Matrix, RandomForest};
use crate::metrics::class_report;
use crate::preprocess::{fit_scaler_columns, label_samples, train_test_split, Task};
use crate::seed;
use crate::window::WindowSample;

pub const DEFAULT_COLLINEARITY_THRESHOLD: f64 = 0.9;

/// Forest-level MDI: each tree's impurity decreases are normalized to sum 1,
/// then averaged over the trees that split at least once.
pub fn mdi_importance(forest: &RandomForest) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; forest.n_features];
    let mut used = 0usize;
    for tree in &forest.trees {
        let dec = tree.impurity_decrease_by_feature();
        let total: f64 = dec.iter().sum();
        if total > 0.0 {
            for (a, d) in acc.iter_mut().zip(&dec) {
                *a += d / total;
            }
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::Degenerate(
            "no tree in the forest reduces impurity; importances undefined".into(),
        ));
    }
    let total: f64 = acc.iter().sum();
    Ok(acc.into_iter().map(|v| v / total).collect())
}

/// Pearson correlation matrix of the columns of `x`. Zero-variance columns
/// correlate 0 with everything (and 1 with themselves).
pub fn correlation_matrix(x: &Matrix) -> (Vec<Vec<f64>>, Vec<usize>) {
    let p = x.n_cols();
    let n = x.n_rows() as f64;
    let mut mean = vec![0.0; p];
    for r in x.rows() {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut cov = vec![vec![0.0; p]; p];
    for r in x.rows() {
        for i in 0..p {
            let di = r[i] - mean[i];
            for j in i..p {
                cov[i][j] += di * (r[j] - mean[j]);
            }
        }
    }
    let zero_var: Vec<usize> = (0..p).filter(|&i| cov[i][i] <= 0.0).collect();
    let mut corr = vec![vec![0.0; p]; p];
    for i in 0..p {
        corr[i][i] = 1.0;
        for j in i + 1..p {
            let r = if cov[i][i] > 0.0 && cov[j][j] > 0.0 {
                (cov[i][j] / (cov[i][i].sqrt() * cov[j][j].sqrt())).clamp(-1.0, 1.0)
            } else {
                0.0
            };
            corr[i][j] = r;
            corr[j][i] = r;
        }
    }
    (corr, zero_var)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneOutcome {
    /// Retained column indices, ascending.
    pub retained: Vec<usize>,
    /// `(dropped, kept partner, |r|)` in drop order.
    pub dropped: Vec<(usize, usize, f64)>,
}

/// Greedy collinearity pruning over the columns of `x`.
///
/// While some retained pair has `|r| > threshold`, take the pair with the
/// largest `|r|` and drop whichever member has the higher mean `|r|`
/// against the other retained columns (ties drop the higher index).
pub fn collinearity_prune_matrix(x: &Matrix, threshold: f64) -> Result<PruneOutcome> {
    if x.n_rows() < 2 {
        return Err(Error::Input("collinearity pruning needs at least two samples".into()));
    }
    let (corr, zero_var) = correlation_matrix(x);
    for &z in &zero_var {
        warn!("column {z} has zero variance; its correlations are taken as 0");
    }
    let p = x.n_cols();
    let mut retained: Vec<usize> = (0..p).collect();
    let mut dropped = Vec::new();
    loop {
        let mut worst: Option<(usize, usize, f64)> = None;
        for (a, &i) in retained.iter().enumerate() {
            for &j in &retained[a + 1..] {
                let r = corr[i][j].abs();
                if r > threshold && worst.is_none_or(|w| r > w.2) {
                    worst = Some((i, j, r));
                }
            }
        }
        let Some((i, j, r)) = worst else { break };
        let mean_abs = |f: usize| {
            let others: Vec<f64> = retained
                .iter()
                .filter(|&&g| g != f)
                .map(|&g| corr[f][g].abs())
                .collect();
            others.iter().sum::<f64>() / others.len() as f64
        };
        let (mi, mj) = (mean_abs(i), mean_abs(j));
        let (drop, keep) = if mi > mj { (i, j) } else { (j, i) };
        retained.retain(|&f| f != drop);
        dropped.push((drop, keep, r));
    }
    Ok(PruneOutcome { retained, dropped })
}

/// Collinearity pruning on the unscaled window features.
pub fn collinearity_prune(samples: &[WindowSample], threshold: f64) -> Result<PruneOutcome> {
    let mut x = Matrix::with_capacity(samples.len(), N_FEATURES);
    for s in samples {
        x.push_row(&s.features)?;
    }
    collinearity_prune_matrix(&x, threshold)
}

/// Drop the `_MIN`, `_MAX` and `_RANGE` variants, keeping the base measurements.
pub fn family_prune(names: &[&str]) -> Vec<usize> {
    names
        .iter()
        .enumerate()
        .filter(|(_, n)| !["_MIN", "_MAX", "_RANGE"].iter().any(|suf| n.ends_with(suf)))
        .map(|(i, _)| i)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImportanceReport {
    pub scenario: String,
    pub retained: Vec<String>,
    /// Aligned with `retained`.
    pub importances: Vec<f64>,
    pub accuracy: f64,
}

impl ImportanceReport {
    /// `(feature, importance)` by decreasing importance; ties keep canonical order.
    pub fn ranking(&self) -> Vec<(&str, f64)> {
        let mut r: Vec<(&str, f64)> = self
            .retained
            .iter()
            .map(String::as_str)
            .zip(self.importances.iter().copied())
            .collect();
        r.sort_by(|a, b| b.1.total_cmp(&a.1));
        r
    }

    pub fn top(&self, k: usize) -> Vec<&str> {
        self.ranking().into_iter().take(k).map(|(f, _)| f).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ScenarioConfig {
    pub forest: ForestParams,
    pub test_fraction: f64,
    pub seed: u64,
    pub collinearity_threshold: f64,
}

/// Feature subsets of the three scenarios: all features, collinearity-pruned,
/// and family-pruned.
pub fn scenario_columns(samples: &[WindowSample], threshold: f64) -> Result<Vec<(&'static str, Vec<usize>)>> {
    Ok(vec![
        ("full", (0..N_FEATURES).collect()),
        ("collinearity_pruned", collinearity_prune(samples, threshold)?.retained),
        ("family_pruned", family_prune(&FEATURE_NAMES)),
    ])
}

/// Train and evaluate one presence forest on a column subset.
///
/// The split uses `cfg.seed` and the forest uses `seed::variant(cfg.seed, 0)`,
/// the same streams as the first presence variant in training, so the
/// full-feature scenario reproduces that variant exactly.
pub fn evaluate_columns(
    samples: &[WindowSample],
    scenario: &str,
    columns: &[usize],
    cfg: &ScenarioConfig,
) -> Result<(ImportanceReport, RandomForest)> {
    let scaler = fit_scaler_columns(samples, columns)?;
    let labeled = label_samples(samples, &scaler)?;
    let (train, test) = train_test_split(labeled, cfg.test_fraction, cfg.seed)?;
    let task = Task::Presence;
    let (x_train, y_train) = task.design(&train)?;
    let (x_test, y_test) = task.design(&test)?;
    let classes = task.classes();
    let forest = fit_forest(&x_train, &y_train, &classes, &cfg.forest, seed::variant(cfg.seed, 0))?;
    let pred = forest.predict_batch(&x_test)?;
    let to_labels = |v: &[usize]| v.iter().map(|&k| classes[k]).collect::<Vec<u32>>();
    let report = class_report(&to_labels(&y_test), &to_labels(&pred), &classes)?;
    let importances = mdi_importance(&forest)?;
    Ok((
        ImportanceReport {
            scenario: scenario.to_string(),
            retained: scaler.feature_names.clone(),
            importances,
            accuracy: report.accuracy,
        },
        forest,
    ))
}

pub fn run_scenarios(samples: &[WindowSample], cfg: &ScenarioConfig) -> Result<Vec<ImportanceReport>> {
    let scenarios = scenario_columns(samples, cfg.collinearity_threshold)?;
    scenarios
        .par_iter()
        .map(|(name, cols)| evaluate_columns(samples, name, cols, cfg).map(|(r, _)| r))
        .collect()
}

/// `feature,importance,rank` rows, most important first.
pub fn write_importance_csv<W: Write>(w: W, report: &ImportanceReport) -> Result<()> {
    let err = |e| Error::csv("<importance>", e);
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["feature", "importance", "rank"]).map_err(err)?;
    for (rank, (f, imp)) in report.ranking().into_iter().enumerate() {
        wtr.write_record([f.to_string(), imp.to_string(), (rank + 1).to_string()])
            .map_err(err)?;
    }
    wtr.flush().map_err(|e| Error::io("<importance>", e))
}

/// `scenario,n_features,accuracy,top3,retained` rows.
pub fn write_summary_csv<W: Write>(w: W, reports: &[ImportanceReport]) -> Result<()> {
    let err = |e| Error::csv("<importance>", e);
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["scenario", "n_features", "accuracy", "top3", "retained"])
        .map_err(err)?;
    for r in reports {
        wtr.write_record([
            r.scenario.clone(),
            r.retained.len().to_string(),
            r.accuracy.to_string(),
            r.top(3).join(";"),
            r.retained.join(";"),
        ])
        .map_err(err)?;
    }
    wtr.flush().map_err(|e| Error::io("<importance>", e))
}
