//! End-to-end runs: configuration plus one function per command.
//!
//! Configuration layers, lowest to highest precedence: built-in defaults, a
//! TOML config file, `DROUGHTCAST_*` environment variables, command-line
//! flags. Every command is a pure function of its configuration and input
//! files; all randomness flows from `seed`.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FEATURE_NAMES;
use crate::importance::{self, ImportanceReport, ScenarioConfig};
use crate::ingest::{self, Fips, ParseOptions};
use crate::learners::persist::ModelBundle;
use crate::learners::{
    fit_forest, fit_logistic, fit_ovr, Classifier, ForestParams, KnnClassifier, LogisticParams, MaxFeatures, Model,
    TreeParams, VotingEnsemble,
};
use crate::metrics::{
    confusion_matrix, render_report, report_from_confusion, write_report_csv, ClassReport, ReportOptions,
};
use crate::preprocess::{self, discretize_score, fit_scaler, label_samples, Task};
use crate::seed;
use crate::trends::{self, ChangeSummary, DroughtLabel, Scenario};
use crate::window::{self, Aggregator, WindowSample};

pub const ENV_PREFIX: &str = "DROUGHTCAST_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub train: Option<PathBuf>,
    pub validation: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub fips: Option<PathBuf>,
    pub soil: Option<PathBuf>,
    /// Prepared-sample CSV (output of `prepare`, input of the other commands).
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub state: String,
    pub window_days: u32,
    pub aggregator: Aggregator,
    pub seed: u64,
    pub test_fraction: f64,
    /// Tree counts of the three forest variants.
    pub n_estimators: [usize; 3],
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// `None` means ⌊√n_features⌋.
    pub max_features: Option<usize>,
    pub collinearity_threshold: f64,
    /// Fit the scaler on the training split only instead of the full dataset.
    pub fit_on_train: bool,
    /// Drop rows with missing feature values instead of failing.
    pub lenient: bool,
    /// Leave classes absent from the truth out of the macro average.
    pub present_only: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            train: None,
            validation: None,
            test: None,
            fips: None,
            soil: None,
            data: None,
            out: None,
            state: "CA".into(),
            window_days: window::DEFAULT_WINDOW_DAYS,
            aggregator: Aggregator::Mean,
            seed: preprocess::DEFAULT_SEED,
            test_fraction: preprocess::DEFAULT_TEST_FRACTION,
            n_estimators: [100, 200, 300],
            max_depth: None,
            min_samples_leaf: 1,
            max_features: None,
            collinearity_threshold: importance::DEFAULT_COLLINEARITY_THRESHOLD,
            fit_on_train: false,
            lenient: false,
            present_only: false,
        }
    }
}

fn parse_env<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{ENV_PREFIX}{key}: cannot parse {v:?}")))
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Apply `DROUGHTCAST_<KEY>` overrides from `vars` (usually `std::env::vars()`).
    pub fn apply_env<I: IntoIterator<Item = (String, String)>>(&mut self, vars: I) -> Result<()> {
        for (k, v) in vars {
            let Some(key) = k.strip_prefix(ENV_PREFIX) else {
                continue;
            };
            match key {
                "TRAIN" => self.train = Some(v.into()),
                "VALIDATION" => self.validation = Some(v.into()),
                "TEST" => self.test = Some(v.into()),
                "FIPS" => self.fips = Some(v.into()),
                "SOIL" => self.soil = Some(v.into()),
                "DATA" => self.data = Some(v.into()),
                "OUT" => self.out = Some(v.into()),
                "STATE" => self.state = v,
                "WINDOW_DAYS" => self.window_days = parse_env(key, &v)?,
                "AGGREGATOR" => self.aggregator = parse_env(key, &v)?,
                "SEED" => self.seed = parse_env(key, &v)?,
                "TEST_FRACTION" => self.test_fraction = parse_env(key, &v)?,
                "N_ESTIMATORS" => self.n_estimators = parse_triple(&v)?,
                "MAX_DEPTH" => self.max_depth = Some(parse_env(key, &v)?),
                "MIN_SAMPLES_LEAF" => self.min_samples_leaf = parse_env(key, &v)?,
                "MAX_FEATURES" => self.max_features = Some(parse_env(key, &v)?),
                "THRESHOLD" | "COLLINEARITY_THRESHOLD" => self.collinearity_threshold = parse_env(key, &v)?,
                "FIT_ON_TRAIN" => self.fit_on_train = parse_env(key, &v)?,
                "LENIENT" => self.lenient = parse_env(key, &v)?,
                "PRESENT_ONLY" => self.present_only = parse_env(key, &v)?,
                // RUST_LOG-style keys for the binary, not configuration
                "LOG" | "CONFIG" => {}
                other => log::warn!("ignoring unknown environment override {ENV_PREFIX}{other}"),
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config(format!(
                "test_fraction {} must lie in (0, 1)",
                self.test_fraction
            )));
        }
        if self.window_days < 1 {
            return Err(Error::Config("window_days must be at least 1".into()));
        }
        if self.n_estimators.contains(&0) {
            return Err(Error::Config("every n_estimators value must be at least 1".into()));
        }
        if self.min_samples_leaf < 1 {
            return Err(Error::Config("min_samples_leaf must be at least 1".into()));
        }
        if self.state.len() != 2 || !self.state.bytes().all(|b| b.is_ascii_uppercase()) {
            return Err(Error::Config(format!("state {:?} is not a 2-letter code", self.state)));
        }
        Ok(())
    }

    /// Effective configuration as TOML, for provenance logging.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_else(|e| format!("# unrepresentable config: {e}"))
    }

    pub fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            min_samples_leaf: self.min_samples_leaf,
            max_features: self.max_features.map_or(MaxFeatures::Sqrt, MaxFeatures::Count),
        }
    }

    pub fn forest_params(&self, variant: usize) -> ForestParams {
        ForestParams {
            n_estimators: self.n_estimators[variant],
            tree: self.tree_params(),
        }
    }

    pub fn report_options(&self) -> ReportOptions {
        ReportOptions {
            present_only: self.present_only,
        }
    }

    pub fn scenario_config(&self) -> ScenarioConfig {
        ScenarioConfig {
            forest: self.forest_params(0),
            test_fraction: self.test_fraction,
            seed: self.seed,
            collinearity_threshold: self.collinearity_threshold,
        }
    }
}

pub fn parse_triple(v: &str) -> Result<[usize; 3]> {
    let parts: Vec<usize> = v
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("expected three comma-separated integers, got {v:?}")))?;
    parts
        .try_into()
        .map_err(|_| Error::Config(format!("expected exactly three values, got {v:?}")))
}

fn require<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    let p = p
        .as_deref()
        .ok_or_else(|| Error::Config(format!("missing required input --{flag}")))?;
    if !p.exists() {
        return Err(Error::Config(format!("--{flag}: {} does not exist", p.display())));
    }
    Ok(p)
}

fn require_out(p: &Option<PathBuf>) -> Result<&Path> {
    p.as_deref()
        .ok_or_else(|| Error::Config("missing required output --out".into()))
}

/// Files written by a command; removed again if the command fails part way.
#[derive(Default)]
struct Artifacts(Vec<PathBuf>);

impl Artifacts {
    fn create(&mut self, path: PathBuf) -> Result<BufWriter<File>> {
        let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
        self.0.push(path);
        Ok(BufWriter::new(f))
    }

    fn write(&mut self, path: PathBuf, bytes: &[u8]) -> Result<()> {
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.0.push(path);
        Ok(())
    }

    fn discard(self) {
        for p in self.0 {
            let _ = fs::remove_file(p);
        }
    }
}

fn finish<T>(artifacts: Artifacts, result: Result<T>) -> Result<T> {
    if result.is_err() {
        artifacts.discard();
    }
    result
}

fn flush(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone)]
pub struct PrepareSummary {
    pub rows: usize,
    /// Feature columns plus the score column.
    pub columns: usize,
    pub counties: usize,
    pub unknown_fips_rows: usize,
    pub out: PathBuf,
}

/// merge → state filter → window aggregation → prepared CSV.
pub fn cmd_prepare(cfg: &RunConfig) -> Result<PrepareSummary> {
    cfg.validate()?;
    let train = require(&cfg.train, "train")?;
    let validation = require(&cfg.validation, "validation")?;
    let test = require(&cfg.test, "test")?;
    let fips = require(&cfg.fips, "fips")?;
    let out = require_out(&cfg.out)?;
    let opts = ParseOptions { lenient: cfg.lenient };

    let ((tr, va), te) = rayon::join(
        || {
            rayon::join(
                || ingest::parse_timeseries_csv_with(train, opts),
                || ingest::parse_timeseries_csv_with(validation, opts),
            )
        },
        || ingest::parse_timeseries_csv_with(test, opts),
    );
    let merged = ingest::merge_splits(tr?.records, va?.records, te?.records)?;
    info!("merged {} daily records", merged.len());
    let registry = ingest::parse_fips_registry(fips)?;
    let filtered = ingest::filter_state(merged, &registry, &cfg.state)?;
    let samples = window::build_window_samples(&filtered.records, cfg.window_days, cfg.aggregator)?;
    let counties = samples
        .iter()
        .map(|s| s.fips)
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    window::write_prepared_csv(out, &samples)?;
    Ok(PrepareSummary {
        rows: samples.len(),
        columns: FEATURE_NAMES.len() + 1,
        counties,
        unknown_fips_rows: filtered.unknown_rows,
        out: out.to_path_buf(),
    })
}

/// Window samples split into train/test for one task, following the
/// configured scaling order.
pub struct TaskSplit {
    pub scaler: preprocess::ScalerParams,
    pub train: Vec<preprocess::LabeledSample>,
    pub test: Vec<preprocess::LabeledSample>,
}

/// Task subset → seeded split → scaler (fitted on all samples, or on the
/// training split when `fit_on_train`) → labels.
pub fn split_for_task(samples: &[WindowSample], task: Task, cfg: &RunConfig) -> Result<TaskSplit> {
    let mut subset = Vec::with_capacity(samples.len());
    for s in samples {
        let class = discretize_score(s.score)?;
        if task == Task::Presence || class >= 1 {
            subset.push(s.clone());
        }
    }
    let (train, test) = preprocess::train_test_split(subset, cfg.test_fraction, cfg.seed)?;
    let scaler = if cfg.fit_on_train {
        fit_scaler(&train)?
    } else {
        fit_scaler(samples)?
    };
    Ok(TaskSplit {
        train: label_samples(&train, &scaler)?,
        test: label_samples(&test, &scaler)?,
        scaler,
    })
}

pub fn variant_name(v: usize) -> String {
    format!("RandomForest {}", v + 1)
}

pub const ENSEMBLE_NAME: &str = "VotingEnsemble (Soft)";

/// Train variant `v`: a forest for presence, a one-vs-rest of forests for intensity.
pub fn fit_variant(task: Task, x: &crate::learners::Matrix, y: &[usize], cfg: &RunConfig, v: usize) -> Result<Model> {
    let params = cfg.forest_params(v);
    let classes = task.classes();
    let s = seed::variant(cfg.seed, v as u64);
    Ok(match task {
        Task::Presence => Model::Forest(fit_forest(x, y, &classes, &params, s)?),
        Task::Intensity => Model::OneVsRest(fit_ovr(
            x,
            y,
            &classes,
            |x, t, s| Ok(Model::Forest(fit_forest(x, t, &[0, 1], &params, s)?)),
            s,
        )?),
    })
}

pub fn evaluate_model(
    model: &Model,
    x: &crate::learners::Matrix,
    y: &[usize],
    opts: ReportOptions,
) -> Result<ClassReport> {
    let classes = model.classes();
    let pred = model.predict_batch(x)?;
    let labels = |v: &[usize]| v.iter().map(|&k| classes[k]).collect::<Vec<u32>>();
    report_from_confusion(&confusion_matrix(&labels(y), &labels(&pred), classes)?, opts)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub task: Task,
    /// Three variants followed by the ensemble.
    pub reports: Vec<(String, ClassReport)>,
    pub model_paths: Vec<PathBuf>,
    pub report_text: String,
    pub test_size: usize,
}

pub fn model_file(out_dir: &Path, task: Task, name: &str) -> PathBuf {
    out_dir.join(format!("{task}_{name}.model"))
}

/// Train three forest variants and their soft-voting ensemble, persist all
/// four models, and write text and CSV reports for the test split.
pub fn cmd_train(cfg: &RunConfig, task: Task) -> Result<TrainOutcome> {
    cfg.validate()?;
    let data = require(&cfg.data, "data")?;
    let out_dir = require_out(&cfg.out)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let samples = window::read_prepared_csv(data)?;

    let mut artifacts = Artifacts::default();
    let result = train_into(cfg, task, &samples, out_dir, &mut artifacts);
    finish(artifacts, result)
}

fn train_into(
    cfg: &RunConfig,
    task: Task,
    samples: &[WindowSample],
    out_dir: &Path,
    artifacts: &mut Artifacts,
) -> Result<TrainOutcome> {
    let split = split_for_task(samples, task, cfg)?;
    let (x_train, y_train) = task.design(&split.train)?;
    let (x_test, y_test) = task.design(&split.test)?;
    info!(
        "{task}: {} training rows, {} test rows",
        x_train.n_rows(),
        x_test.n_rows()
    );

    let mut members = Vec::with_capacity(3);
    let mut reports = Vec::with_capacity(4);
    for v in 0..3 {
        let model = fit_variant(task, &x_train, &y_train, cfg, v)?;
        let report = evaluate_model(&model, &x_test, &y_test, cfg.report_options())?;
        info!("{}: accuracy {}", variant_name(v), report.accuracy);
        reports.push((variant_name(v), report));
        members.push(model);
    }
    let ensemble = Model::Voting(VotingEnsemble::new(members.clone())?);
    reports.push((
        ENSEMBLE_NAME.to_string(),
        evaluate_model(&ensemble, &x_test, &y_test, cfg.report_options())?,
    ));

    let mut model_paths = Vec::new();
    let names = ["rf1", "rf2", "rf3"];
    for (name, model) in names.iter().zip(members) {
        let path = model_file(out_dir, task, name);
        let bundle = ModelBundle::new(task, *name, split.scaler.clone(), model)?;
        artifacts.write(path.clone(), &bundle.to_bytes()?)?;
        model_paths.push(path);
    }
    let path = model_file(out_dir, task, "ensemble");
    let bundle = ModelBundle::new(task, "ensemble", split.scaler.clone(), ensemble)?;
    artifacts.write(path.clone(), &bundle.to_bytes()?)?;
    model_paths.push(path);

    let report_text: String = reports
        .iter()
        .map(|(name, r)| render_report(name, r))
        .collect::<Vec<_>>()
        .join("\n");
    artifacts.write(out_dir.join(format!("{task}_report.txt")), report_text.as_bytes())?;
    let csv_path = out_dir.join(format!("{task}_report.csv"));
    let mut w = artifacts.create(csv_path.clone())?;
    for (i, (name, r)) in reports.iter().enumerate() {
        let mut buf = Vec::new();
        write_report_csv(&mut buf, name, r)?;
        // keep a single header line
        let text = String::from_utf8(buf).expect("csv is utf-8");
        let body = if i == 0 {
            text.as_str()
        } else {
            text.split_once('\n').map_or("", |x| x.1)
        };
        w.write_all(body.as_bytes()).map_err(|e| Error::io(&csv_path, e))?;
    }
    flush(w, &csv_path)?;

    Ok(TrainOutcome {
        task,
        reports,
        model_paths,
        report_text,
        test_size: x_test.n_rows(),
    })
}

pub const DEFAULT_KNN_K: usize = 5;

/// Forest variant 1 next to the two reference baselines (KNN and logistic
/// regression, one-vs-rest for intensity) on the same split.
pub fn compare_baselines(
    samples: &[WindowSample],
    task: Task,
    cfg: &RunConfig,
    k: usize,
) -> Result<Vec<(String, ClassReport)>> {
    let split = split_for_task(samples, task, cfg)?;
    let (x_train, y_train) = task.design(&split.train)?;
    let (x_test, y_test) = task.design(&split.test)?;
    let classes = task.classes();
    let opts = cfg.report_options();
    let mut out = Vec::with_capacity(3);

    let forest = fit_variant(task, &x_train, &y_train, cfg, 0)?;
    out.push((variant_name(0), evaluate_model(&forest, &x_test, &y_test, opts)?));

    let knn = KnnClassifier {
        train: x_train.clone(),
        labels: y_train.clone(),
        n_classes: classes.len(),
        k,
    };
    let pred = knn.predict_batch(&x_test)?;
    let labels = |v: &[usize]| v.iter().map(|&i| classes[i]).collect::<Vec<u32>>();
    let cm = confusion_matrix(&labels(&y_test), &labels(&pred), &classes)?;
    out.push((format!("KNN (k={k})"), report_from_confusion(&cm, opts)?));

    let params = LogisticParams::default();
    let logistic = match task {
        Task::Presence => Model::Logistic(fit_logistic(&x_train, &y_train, &params)?),
        Task::Intensity => Model::OneVsRest(fit_ovr(
            &x_train,
            &y_train,
            &classes,
            |x, t, _| Ok(Model::Logistic(fit_logistic(x, t, &params)?)),
            cfg.seed,
        )?),
    };
    out.push((
        "LogisticRegression".into(),
        evaluate_model(&logistic, &x_test, &y_test, opts)?,
    ));
    Ok(out)
}

/// Re-create the configured test split and evaluate a persisted model on it.
pub fn cmd_evaluate(cfg: &RunConfig, model_path: &Path) -> Result<(ClassReport, String)> {
    cfg.validate()?;
    let data = require(&cfg.data, "data")?;
    let bundle = ModelBundle::load(model_path)?;
    let samples = window::read_prepared_csv(data)?;
    let task = bundle.task;
    let mut subset = Vec::new();
    for s in &samples {
        if task == Task::Presence || discretize_score(s.score)? >= 1 {
            subset.push(s.clone());
        }
    }
    let (_, test) = preprocess::train_test_split(subset, cfg.test_fraction, cfg.seed)?;
    let labeled = label_samples(&test, &bundle.scaler)?;
    let (x, y) = task.design(&labeled)?;
    let report = evaluate_model(&bundle.model, &x, &y, cfg.report_options())?;
    let title = format!("{} ({task})", bundle.name);
    let text = render_report(&title, &report);
    Ok((report, text))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub fips: Fips,
    pub date: chrono::NaiveDate,
    pub class: u32,
    pub proba: Vec<f64>,
}

/// Score a prepared-sample file or raw daily records with a persisted model.
///
/// Raw dailies are window-aggregated first (with `window_days`); predictions
/// are made at scored days when the file has any scores, otherwise at every
/// day.
pub fn predict_file(
    bundle: &ModelBundle,
    input: &Path,
    window_days: u32,
    aggregator: Aggregator,
) -> Result<Vec<Prediction>> {
    let mut rdr = csv::Reader::from_path(input).map_err(|e| Error::csv(input, e))?;
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::csv(input, e))?
        .iter()
        .map(str::to_string)
        .collect();
    drop(rdr);
    let found: Vec<String> = headers
        .iter()
        .filter(|h| FEATURE_NAMES.contains(&h.as_str()))
        .cloned()
        .collect();
    if bundle.feature_names.iter().any(|f| !found.contains(f)) {
        return Err(Error::FeatureMismatch {
            expected: bundle.feature_names.clone(),
            found,
        });
    }

    let rows: Vec<(Fips, chrono::NaiveDate, [f64; crate::N_FEATURES])> = if headers.iter().any(|h| h == "window_len") {
        window::read_prepared_csv(input)?
            .into_iter()
            .map(|s| (s.fips, s.date, s.features))
            .collect()
    } else {
        let mut daily = ingest::parse_timeseries_csv(input)?;
        daily.sort_by_key(|r| (r.fips, r.date));
        let any_scored = daily.iter().any(|r| r.score.is_some());
        window::aggregate_windows(&daily, window_days, aggregator, |r| !any_scored || r.score.is_some())?
            .into_iter()
            .map(|w| (w.fips, w.date, w.features))
            .collect()
    };
    rows.into_iter()
        .map(|(fips, date, features)| {
            let x = bundle.scaler.apply(&features);
            let proba = bundle.model.predict_proba(&x)?;
            let class = bundle.classes[crate::learners::argmax(&proba)];
            Ok(Prediction {
                fips,
                date,
                class,
                proba,
            })
        })
        .collect()
}

pub fn write_predictions<W: Write>(w: W, classes: &[u32], preds: &[Prediction]) -> Result<()> {
    let err = |e| Error::csv("<predictions>", e);
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["fips".to_string(), "date".to_string(), "predicted".to_string()];
    header.extend(classes.iter().map(|c| format!("p_{c}")));
    wtr.write_record(&header).map_err(err)?;
    for p in preds {
        let mut row = vec![
            p.fips.to_string(),
            p.date.format(ingest::DATE_FORMAT).to_string(),
            p.class.to_string(),
        ];
        row.extend(p.proba.iter().map(|v| v.to_string()));
        wtr.write_record(&row).map_err(err)?;
    }
    wtr.flush().map_err(|e| Error::io("<predictions>", e))
}

pub fn cmd_predict(cfg: &RunConfig, model_path: &Path, input: &Path) -> Result<Vec<Prediction>> {
    cfg.validate()?;
    let out = require_out(&cfg.out)?;
    if !input.exists() {
        return Err(Error::Config(format!("input {} does not exist", input.display())));
    }
    let bundle = ModelBundle::load(model_path)?;
    let preds = predict_file(&bundle, input, cfg.window_days, cfg.aggregator)?;
    let mut artifacts = Artifacts::default();
    let result = (|| {
        let w = artifacts.create(out.to_path_buf())?;
        write_predictions(w, &bundle.classes, &preds)
    })();
    finish(artifacts, result).map(|_| preds)
}

/// Run the three feature-set scenarios and write one CSV per scenario plus a summary.
pub fn cmd_importance(cfg: &RunConfig) -> Result<Vec<ImportanceReport>> {
    cfg.validate()?;
    let data = require(&cfg.data, "data")?;
    let out_dir = require_out(&cfg.out)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let samples = window::read_prepared_csv(data)?;
    let reports = importance::run_scenarios(&samples, &cfg.scenario_config())?;

    let mut artifacts = Artifacts::default();
    let result = (|| {
        for r in &reports {
            let path = out_dir.join(format!("importance_{}.csv", r.scenario));
            let mut w = artifacts.create(path.clone())?;
            importance::write_importance_csv(&mut w, r)?;
            flush(w, &path)?;
        }
        let path = out_dir.join("importance_summary.csv");
        let mut w = artifacts.create(path.clone())?;
        importance::write_summary_csv(&mut w, &reports)?;
        flush(w, &path)
    })();
    finish(artifacts, result).map(|_| reports)
}

#[derive(Debug, Clone)]
pub struct TrendsOutcome {
    pub summary: ChangeSummary,
    pub yearly: Vec<trends::YearLabelCounts>,
    pub map_points: usize,
}

/// Change summary for one label and scenario. The output format follows the
/// `--out` extension: `.csv` gives the trend table, anything else GeoJSON.
pub fn cmd_trends(cfg: &RunConfig, scenario: Scenario, label: DroughtLabel) -> Result<TrendsOutcome> {
    cfg.validate()?;
    let data = require(&cfg.data, "data")?;
    let out = require_out(&cfg.out)?;
    let samples = window::read_prepared_csv(data)?;
    let labeled = label_samples(&samples, &fit_scaler(&samples)?)?;
    let yearly = trends::yearly_counts(&labeled);
    let (a, b) = scenario.periods();
    let summary = trends::change_summary(&labeled, label, a, b);

    let names: BTreeMap<Fips, String> = match &cfg.fips {
        Some(p) => ingest::parse_fips_registry(require(&Some(p.clone()), "fips")?)?
            .into_iter()
            .map(|e| (e.fips, e.name))
            .collect(),
        None => BTreeMap::new(),
    };

    let mut artifacts = Artifacts::default();
    let is_csv = out.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let result = (|| {
        let mut w = artifacts.create(out.to_path_buf())?;
        let points = if is_csv {
            trends::write_trends_csv(&mut w, &summary.trends, &names)?;
            0
        } else {
            let soil = require(&cfg.soil, "soil")?;
            let coords = ingest::parse_soil_coords(soil)?;
            let map = trends::emit_map_data(&summary.trends, &coords, &names);
            trends::write_geojson(&mut w, &map)?;
            map.collection.features.len()
        };
        flush(w, out)?;
        Ok(points)
    })();
    let map_points = finish(artifacts, result)?;
    Ok(TrendsOutcome {
        summary,
        yearly,
        map_points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn env_overrides() {
        let mut cfg = RunConfig::default();
        cfg.apply_env([
            ("DROUGHTCAST_SEED".to_string(), "7".to_string()),
            ("DROUGHTCAST_N_ESTIMATORS".to_string(), "5, 6,7".to_string()),
            ("HOME".to_string(), "/root".to_string()),
        ])
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.n_estimators, [5, 6, 7]);
        assert!(cfg
            .apply_env([("DROUGHTCAST_SEED".to_string(), "x".to_string())])
            .is_err());
    }

    #[test]
    fn toml_round_trip_and_validation() {
        let cfg = RunConfig::from_toml_str("seed = 3\nn_estimators = [1, 2, 3]\nstate = \"NV\"\n").unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.state, "NV");
        assert_eq!(RunConfig::from_toml_str(&cfg.to_toml()).unwrap(), cfg);
        assert!(RunConfig::from_toml_str("bogus = 1").is_err());
        let bad = RunConfig {
            test_fraction: 1.0,
            ..Default::default()
        };
        assert_eq!(bad.validate().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn missing_inputs_are_config_errors() {
        let err = cmd_prepare(&RunConfig::default()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("--train"));
    }

    #[test]
    fn triple_parsing() {
        assert_eq!(parse_triple("100,200,300").unwrap(), [100, 200, 300]);
        assert!(parse_triple("1,2").is_err());
    }
}
