//! Independent oracles and property checks shared by the integration tests
//! and the acceptance harness. Each `check_*` returns a short detail string
//! on success and a description of the first violation on failure.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use droughtcast::ingest::DailyRecord;
use droughtcast::learners::{
    fit_forest, fit_ovr, fit_tree, Classifier, DecisionTree, ForestParams, KnnClassifier, Matrix, MaxFeatures, Model,
    TreeParams, VotingEnsemble,
};
use droughtcast::metrics::class_report;
use droughtcast::pipeline::{self, RunConfig};
use droughtcast::preprocess::{fit_scaler, Task};
use droughtcast::synth::{generate, SynthConfig};
use droughtcast::trends::{DroughtLabel, Scenario};
use droughtcast::window::{build_window_samples, Aggregator, WindowSample};
use droughtcast::N_FEATURES;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<String, String>;

// ---------------------------------------------------------------- tree oracle

/// Exhaustive CART reference: every feature and every midpoint threshold is
/// scored with exact integer arithmetic.
pub enum OracleTree {
    Leaf(Vec<u64>),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<OracleTree>,
        right: Box<OracleTree>,
    },
}

/// Σ_k c_k² / n as a fraction (numerator, denominator).
fn purity(counts: &[u64]) -> (u128, u128) {
    let n: u64 = counts.iter().sum();
    (counts.iter().map(|&c| u128::from(c * c)).sum(), u128::from(n))
}

/// Sum of the two child purities, which is maximal exactly when the
/// weighted child Gini impurity is minimal.
fn split_score(left: &[u64], right: &[u64]) -> (u128, u128) {
    let (a, b) = purity(left);
    let (c, d) = purity(right);
    (a * d + c * b, b * d)
}

fn greater(x: (u128, u128), y: (u128, u128)) -> bool {
    x.0 * y.1 > y.0 * x.1
}

pub fn oracle_fit(rows: &[Vec<f64>], y: &[usize], n_classes: usize) -> OracleTree {
    let mut counts = vec![0u64; n_classes];
    for &c in y {
        counts[c] += 1;
    }
    let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
    if pure || rows.len() < 2 {
        return OracleTree::Leaf(counts);
    }
    let n_features = rows[0].len();
    let mut best: Option<((u128, u128), usize, f64)> = None;
    for f in 0..n_features {
        let mut values: Vec<f64> = rows.iter().map(|r| r[f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let mut l = vec![0u64; n_classes];
            let mut r = vec![0u64; n_classes];
            for (row, &c) in rows.iter().zip(y) {
                if row[f] <= t {
                    l[c] += 1;
                } else {
                    r[c] += 1;
                }
            }
            let s = split_score(&l, &r);
            if best.as_ref().is_none_or(|b| greater(s, b.0)) {
                best = Some((s, f, t));
            }
        }
    }
    let Some((_, feature, threshold)) = best else {
        return OracleTree::Leaf(counts);
    };
    let (mut lx, mut ly, mut rx, mut ry) = (vec![], vec![], vec![], vec![]);
    for (row, &c) in rows.iter().zip(y) {
        if row[feature] <= threshold {
            lx.push(row.clone());
            ly.push(c);
        } else {
            rx.push(row.clone());
            ry.push(c);
        }
    }
    OracleTree::Split {
        feature,
        threshold,
        left: Box::new(oracle_fit(&lx, &ly, n_classes)),
        right: Box::new(oracle_fit(&rx, &ry, n_classes)),
    }
}

pub fn oracle_predict(tree: &OracleTree, x: &[f64]) -> usize {
    match tree {
        OracleTree::Leaf(counts) => {
            let mut best = 0;
            for (i, &c) in counts.iter().enumerate() {
                if c > counts[best] {
                    best = i;
                }
            }
            best
        }
        OracleTree::Split {
            feature,
            threshold,
            left,
            right,
        } => oracle_predict(if x[*feature] <= *threshold { left } else { right }, x),
    }
}

/// A random small classification instance. Values sit on a coarse grid so
/// ties between thresholds and features are frequent.
pub fn random_instance(rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<usize>, usize) {
    let n = rng.gen_range(2..=60);
    let d = rng.gen_range(1..=3);
    let k = rng.gen_range(2..=3);
    let levels = rng.gen_range(2..=8);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| f64::from(rng.gen_range(0..levels)) / 4.0).collect())
        .collect();
    let y = (0..n).map(|_| rng.gen_range(0..k)).collect();
    (rows, y, k)
}

pub fn check_tree_oracle(instances: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = TreeParams {
        max_features: MaxFeatures::All,
        ..TreeParams::default()
    };
    let mut compared = 0usize;
    for case in 0..instances {
        let (rows, y, k) = random_instance(&mut rng);
        let x = Matrix::from_rows(&rows).map_err(|e| e.to_string())?;
        let all: Vec<usize> = (0..rows.len()).collect();
        let tree: DecisionTree = fit_tree(&x, &y, k, &all, &params, &mut ChaCha8Rng::seed_from_u64(case as u64))
            .map_err(|e| e.to_string())?;
        let oracle = oracle_fit(&rows, &y, k);
        let d = rows[0].len();
        let mut queries = rows.clone();
        for _ in 0..20 {
            queries.push((0..d).map(|_| rng.gen_range(-0.5..2.5)).collect());
        }
        for q in &queries {
            let got = tree.predict_index(q).map_err(|e| e.to_string())?;
            let want = oracle_predict(&oracle, q);
            if got != want {
                return Err(format!("instance {case}: query {q:?} predicted {got}, oracle {want}"));
            }
            compared += 1;
        }
    }
    Ok(format!("{instances} instances, {compared} predictions identical"))
}

// ----------------------------------------------------------------- knn oracle

/// All-pairs Euclidean distances, stable sort, majority vote.
pub fn knn_oracle(train: &[Vec<f64>], labels: &[usize], n_classes: usize, q: &[f64], k: usize) -> usize {
    let mut d: Vec<(f64, usize)> = train
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let s: f64 = r.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
            (s.sqrt(), i)
        })
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut votes = vec![0usize; n_classes];
    for &(_, i) in &d[..k] {
        votes[labels[i]] += 1;
    }
    (0..n_classes).fold(0, |best, c| if votes[c] > votes[best] { c } else { best })
}

pub fn check_knn_oracle(sets: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut compared = 0;
    for set in 0..sets {
        let d = rng.gen_range(1..=4);
        let n_classes = rng.gen_range(2..=4);
        let grid = rng.gen_bool(0.5);
        let point = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..d)
                .map(|_| {
                    if grid {
                        f64::from(rng.gen_range(0..5)) / 4.0
                    } else {
                        rng.gen::<f64>()
                    }
                })
                .collect()
        };
        let train: Vec<Vec<f64>> = (0..30).map(|_| point(&mut rng)).collect();
        let labels: Vec<usize> = (0..30).map(|_| rng.gen_range(0..n_classes)).collect();
        let k = rng.gen_range(1..=9);
        let queries: Vec<Vec<f64>> = (0..30).map(|_| point(&mut rng)).collect();
        let knn = KnnClassifier {
            train: Matrix::from_rows(&train).map_err(|e| e.to_string())?,
            labels: labels.clone(),
            n_classes,
            k,
        };
        let got = knn
            .predict_batch(&Matrix::from_rows(&queries).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        for (q, g) in queries.iter().zip(got) {
            let want = knn_oracle(&train, &labels, n_classes, q, k);
            if g != want {
                return Err(format!("set {set}, k={k}: query {q:?} gave {g}, oracle {want}"));
            }
            compared += 1;
        }
    }
    Ok(format!("{sets} point sets, {compared} queries identical"))
}

// ------------------------------------------------------------- metrics oracle

pub fn check_metrics_oracle(random_sets: usize, seed: u64) -> Check {
    let r = class_report(&[1, 1, 2], &[1, 2, 2], &[1, 2]).map_err(|e| e.to_string())?;
    let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
    let (c1, c2) = (&r.rows[0], &r.rows[1]);
    let hand = close(c1.precision, 1.0)
        && close(c1.recall, 0.5)
        && close(c1.f1, 2.0 / 3.0)
        && close(c2.precision, 0.5)
        && close(c2.recall, 1.0)
        && close(c2.f1, 2.0 / 3.0)
        && close(r.accuracy, 2.0 / 3.0)
        && c1.support == 2
        && c2.support == 1;
    if !hand {
        return Err(format!("hand example mismatch: {r:?}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..random_sets {
        let k = rng.gen_range(2..=6u32);
        let n = rng.gen_range(1..=200);
        let classes: Vec<u32> = (1..=k).collect();
        let truth: Vec<u32> = (0..n).map(|_| rng.gen_range(1..=k)).collect();
        let pred: Vec<u32> = truth
            .iter()
            .map(|&t| if rng.gen_bool(0.6) { t } else { rng.gen_range(1..=k) })
            .collect();
        let r = class_report(&truth, &pred, &classes).map_err(|e| e.to_string())?;
        let acc = truth.iter().zip(&pred).filter(|(a, b)| a == b).count() as f64 / n as f64;
        if (r.weighted_avg.recall - r.accuracy).abs() > 1e-12 || (r.accuracy - acc).abs() > 1e-12 {
            return Err(format!(
                "set {i}: weighted recall {} vs accuracy {} (direct {acc})",
                r.weighted_avg.recall, r.accuracy
            ));
        }
    }
    Ok(format!(
        "hand example exact; weighted recall = accuracy on {random_sets} random sets"
    ))
}

// ----------------------------------------------------------- probability laws

pub fn check_distribution(p: &[f64], what: &str) -> Result<(), String> {
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || p.iter().any(|&v| v.is_nan() || v < 0.0 || !v.is_finite()) {
        return Err(format!("{what}: invalid distribution {p:?} (sum {sum})"));
    }
    Ok(())
}

fn random_labeled(rng: &mut ChaCha8Rng, n: usize, d: usize, k: usize) -> (Matrix, Vec<usize>) {
    let mut x = Matrix::new(d);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        // every class appears at least once
        let c = if i < k { i } else { rng.gen_range(0..k) };
        let row: Vec<f64> = (0..d)
            .map(|j| rng.gen::<f64>() + if j == 0 { c as f64 * 0.3 } else { 0.0 })
            .collect();
        x.push_row(&row).expect("fixed width");
        y.push(c);
    }
    (x, y)
}

pub fn check_probability_laws(trials: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0;
    for t in 0..trials {
        let d = rng.gen_range(1..=5);
        let k = rng.gen_range(2..=5);
        let n = rng.gen_range(k.max(10)..=80);
        let (x, y) = random_labeled(&mut rng, n, d, k);
        let classes: Vec<u32> = (1..=k as u32).collect();
        let params = ForestParams {
            n_estimators: rng.gen_range(1..=8),
            tree: TreeParams {
                max_depth: if rng.gen_bool(0.5) {
                    Some(rng.gen_range(1..=4))
                } else {
                    None
                },
                min_samples_leaf: rng.gen_range(1..=3),
                max_features: MaxFeatures::Sqrt,
            },
        };
        let s = rng.gen::<u64>();
        let forests: Vec<Model> = (0..2)
            .map(|i| fit_forest(&x, &y, &classes, &params, s + i).map(Model::Forest))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let ovr = fit_ovr(
            &x,
            &y,
            &classes,
            |x, t, s| Ok(Model::Forest(fit_forest(x, t, &[0, 1], &params, s)?)),
            s,
        )
        .map(Model::OneVsRest)
        .map_err(|e| e.to_string())?;
        let mut members = forests.clone();
        members.push(ovr.clone());
        let ensemble = Model::Voting(VotingEnsemble::new(members).map_err(|e| e.to_string())?);
        let models = [("forest", &forests[0]), ("ovr", &ovr), ("ensemble", &ensemble)];
        for _ in 0..10 {
            let q: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..3.0)).collect();
            for (name, m) in models {
                let p = m.predict_proba(&q).map_err(|e| e.to_string())?;
                check_distribution(&p, &format!("trial {t} {name}"))?;
                checked += 1;
            }
        }
    }
    Ok(format!(
        "{checked} distributions over forests, one-vs-rest and ensembles"
    ))
}

// ---------------------------------------------------------- scaling / windows

pub fn check_scaling_laws(trials: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = NaiveDate::from_ymd_opt(2001, 1, 1).expect("date");
    for t in 0..trials {
        let n = rng.gen_range(2..=40);
        let constant = rng.gen_range(0..N_FEATURES);
        let samples: Vec<WindowSample> = (0..n)
            .map(|i| {
                let mut f = [0.0; N_FEATURES];
                for (j, v) in f.iter_mut().enumerate() {
                    *v = if j == constant {
                        7.25
                    } else {
                        rng.gen_range(-50.0..50.0)
                    };
                }
                WindowSample {
                    fips: "06001".parse().expect("fips"),
                    date: start + chrono::Days::new(i as u64),
                    features: f,
                    score: 1.0,
                    window_len: 1,
                }
            })
            .collect();
        let scaler = fit_scaler(&samples).map_err(|e| e.to_string())?;
        for s in &samples {
            let z = scaler.apply(&s.features);
            if z.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(format!("trial {t}: scaled value outside [0, 1]: {z:?}"));
            }
            if z[constant] != 0.0 {
                return Err(format!("trial {t}: constant feature mapped to {}", z[constant]));
            }
        }
        // unseen values are clamped into the range
        let wild = [1e6; N_FEATURES];
        if scaler.apply(&wild).iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(format!("trial {t}: unseen value escaped [0, 1]"));
        }
    }

    let data = generate(&SynthConfig::years(2003, 2003)).map_err(|e| e.to_string())?;
    let mut daily: Vec<DailyRecord> = data
        .train
        .iter()
        .chain(&data.validation)
        .chain(&data.test)
        .cloned()
        .collect();
    daily.sort_by_key(|r| (r.fips, r.date));
    let windows = build_window_samples(&daily, 1, Aggregator::Mean).map_err(|e| e.to_string())?;
    let scored: Vec<&DailyRecord> = daily.iter().filter(|r| r.score.is_some()).collect();
    if windows.len() != scored.len() {
        return Err(format!(
            "window_days=1 gave {} rows for {} scored days",
            windows.len(),
            scored.len()
        ));
    }
    for (w, r) in windows.iter().zip(&scored) {
        if w.features != r.features || w.date != r.date || Some(w.score) != r.score {
            return Err(format!("window_days=1 changed {} {}", r.fips, r.date));
        }
    }
    let knn = check_knn_oracle(30, seed ^ 0x5eed)?;
    Ok(format!(
        "{trials} scaler trials in [0, 1]; {} one-day windows equal raw rows; {knn}",
        windows.len()
    ))
}

// ---------------------------------------------------------------- determinism

/// Run prepare, train (both tasks), evaluate, predict, importance and trends
/// on a synthetic dataset inside `dir`, on a pool of `threads` threads, and
/// return the bytes of every produced artifact keyed by file name.
pub fn pipeline_artifacts(dir: &Path, threads: usize) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| e.to_string())?;
    pool.install(|| run_pipeline(dir)).map_err(|e| e.to_string())?;
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.join("out")];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).map_err(|e| e.to_string())? {
            let path = entry.map_err(|e| e.to_string())?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let key = path.strip_prefix(dir).expect("inside dir").display().to_string();
                out.insert(key, std::fs::read(&path).map_err(|e| e.to_string())?);
            }
        }
    }
    Ok(out)
}

fn run_pipeline(dir: &Path) -> droughtcast::Result<()> {
    let paths = generate(&SynthConfig::years(2006, 2018))?.write_to_dir(&dir.join("raw"))?;
    let out = dir.join("out");
    std::fs::create_dir_all(&out).map_err(|e| droughtcast::Error::io(&out, e))?;
    let prepared = out.join("prepared.csv");
    let base = RunConfig {
        train: Some(paths.train),
        validation: Some(paths.validation),
        test: Some(paths.test.clone()),
        fips: Some(paths.fips),
        soil: Some(paths.soil),
        n_estimators: [6, 8, 10],
        ..RunConfig::default()
    };
    pipeline::cmd_prepare(&RunConfig {
        out: Some(prepared.clone()),
        ..base.clone()
    })?;
    let models = RunConfig {
        data: Some(prepared.clone()),
        out: Some(out.join("models")),
        ..base.clone()
    };
    for task in [Task::Presence, Task::Intensity] {
        pipeline::cmd_train(&models, task)?;
    }
    let (_, text) = pipeline::cmd_evaluate(&models, &out.join("models/presence_ensemble.model"))?;
    std::fs::write(out.join("evaluate.txt"), text).map_err(|e| droughtcast::Error::io("evaluate.txt", e))?;
    pipeline::cmd_predict(
        &RunConfig {
            out: Some(out.join("predictions.csv")),
            ..models.clone()
        },
        &out.join("models/intensity_ensemble.model"),
        &paths.test,
    )?;
    pipeline::cmd_importance(&RunConfig {
        data: Some(prepared.clone()),
        out: Some(out.join("importance")),
        ..base.clone()
    })?;
    for (ext, label) in [("geojson", DroughtLabel::D3), ("csv", DroughtLabel::D1)] {
        pipeline::cmd_trends(
            &RunConfig {
                data: Some(prepared.clone()),
                out: Some(out.join(format!("trends.{ext}"))),
                ..base.clone()
            },
            Scenario::Long,
            label,
        )?;
    }
    Ok(())
}

pub fn check_determinism() -> Check {
    let runs: Vec<BTreeMap<String, Vec<u8>>> = [1usize, 4, 4]
        .iter()
        .map(|&threads| {
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            pipeline_artifacts(dir.path(), threads)
        })
        .collect::<Result<_, _>>()?;
    let reference = &runs[0];
    if reference.len() < 10 {
        return Err(format!("only {} artifacts produced", reference.len()));
    }
    for (i, run) in runs.iter().enumerate().skip(1) {
        if run.keys().ne(reference.keys()) {
            return Err(format!("run {i} produced a different file set"));
        }
        for (name, bytes) in run {
            if bytes != &reference[name] {
                return Err(format!("run {i}: {name} differs"));
            }
        }
    }
    Ok(format!(
        "{} artifacts byte-identical across 1-thread and 4-thread runs",
        reference.len()
    ))
}
