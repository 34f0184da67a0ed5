//! Classification reports: accuracy, per-class precision/recall/F1/support,
//! macro and weighted averages, confusion matrices.

use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

/// Square count matrix; entry `(i, j)` counts truth `classes[i]` predicted `classes[j]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub classes: Vec<u32>,
    pub counts: Vec<Vec<u64>>,
}

pub fn confusion_matrix(truth: &[u32], pred: &[u32], classes: &[u32]) -> Result<ConfusionMatrix> {
    if truth.len() != pred.len() {
        return Err(Error::Input(format!(
            "{} truth labels vs {} predictions",
            truth.len(),
            pred.len()
        )));
    }
    let k = classes.len();
    let index = |label: u32| {
        classes
            .iter()
            .position(|&c| c == label)
            .ok_or_else(|| Error::Input(format!("label {label} not in class list {classes:?}")))
    };
    let mut counts = vec![vec![0u64; k]; k];
    for (&t, &p) in truth.iter().zip(pred) {
        counts[index(t)?][index(p)?] += 1;
    }
    Ok(ConfusionMatrix {
        classes: classes.to_vec(),
        counts,
    })
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes.len()).map(|i| self.counts[i][i]).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassRow {
    pub class: u32,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// Set when a rate had a zero denominator and was reported as 0.
    pub zero_division: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassReport {
    pub accuracy: f64,
    /// Micro-averaged F1; equals accuracy for single-label problems.
    pub micro_f1: f64,
    pub rows: Vec<ClassRow>,
    pub macro_avg: Averages,
    pub weighted_avg: Averages,
    pub total_support: u64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ReportOptions {
    /// Exclude zero-support classes from the macro average.
    pub present_only: bool,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

pub fn class_report(truth: &[u32], pred: &[u32], classes: &[u32]) -> Result<ClassReport> {
    report_from_confusion(&confusion_matrix(truth, pred, classes)?, ReportOptions::default())
}

pub fn report_from_confusion(cm: &ConfusionMatrix, opts: ReportOptions) -> Result<ClassReport> {
    let k = cm.classes.len();
    if k == 0 {
        return Err(Error::Input("class report needs at least one class".into()));
    }
    let total = cm.total();
    let mut rows = Vec::with_capacity(k);
    for i in 0..k {
        let tp = cm.counts[i][i];
        let support: u64 = cm.counts[i].iter().sum();
        let predicted: u64 = (0..k).map(|r| cm.counts[r][i]).sum();
        let (precision, zp) = ratio(tp, predicted);
        let (recall, zr) = ratio(tp, support);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        rows.push(ClassRow {
            class: cm.classes[i],
            precision,
            recall,
            f1,
            support,
            zero_division: zp || zr,
        });
    }

    let macro_rows: Vec<&ClassRow> = rows.iter().filter(|r| !opts.present_only || r.support > 0).collect();
    let m = macro_rows.len().max(1) as f64;
    let macro_avg = Averages {
        precision: macro_rows.iter().map(|r| r.precision).sum::<f64>() / m,
        recall: macro_rows.iter().map(|r| r.recall).sum::<f64>() / m,
        f1: macro_rows.iter().map(|r| r.f1).sum::<f64>() / m,
    };
    let weighted = |f: fn(&ClassRow) -> f64| {
        if total == 0 {
            0.0
        } else {
            rows.iter().map(|r| f(r) * r.support as f64).sum::<f64>() / total as f64
        }
    };
    let weighted_avg = Averages {
        precision: weighted(|r| r.precision),
        recall: weighted(|r| r.recall),
        f1: weighted(|r| r.f1),
    };
    let (accuracy, _) = ratio(cm.trace(), total);
    Ok(ClassReport {
        accuracy,
        micro_f1: accuracy,
        rows,
        macro_avg,
        weighted_avg,
        total_support: total,
    })
}

/// Fixed-width text table: one row per class, a blank accuracy row, then the
/// macro and weighted averages. Rates carry two decimals; the header echoes
/// accuracy and micro F1 at full precision.
pub fn render_report(title: &str, report: &ClassReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{title}");
    let _ = writeln!(s, "accuracy_score: {}", report.accuracy);
    let _ = writeln!(s, "f1_score: {}", report.micro_f1);
    let _ = writeln!(
        s,
        "{:>14} {:>10} {:>10} {:>10} {:>10}",
        "", "precision", "recall", "f1-score", "support"
    );
    for r in &report.rows {
        let _ = writeln!(
            s,
            "{:>14} {:>10.2} {:>10.2} {:>10.2} {:>10}",
            r.class, r.precision, r.recall, r.f1, r.support
        );
    }
    let _ = writeln!(
        s,
        "{:>14} {:>10} {:>10} {:>10.2} {:>10}",
        "accuracy", "", "", report.accuracy, report.total_support
    );
    for (label, avg) in [("macro avg", &report.macro_avg), ("weighted avg", &report.weighted_avg)] {
        let _ = writeln!(
            s,
            "{:>14} {:>10.2} {:>10.2} {:>10.2} {:>10}",
            label, avg.precision, avg.recall, avg.f1, report.total_support
        );
    }
    s
}

/// One parsed line of a rendered report.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedRow {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

/// Parse the per-class and average rows back out of [`render_report`] output.
pub fn parse_rendered(text: &str) -> Result<Vec<RenderedRow>> {
    let mut out = Vec::new();
    for line in text.lines() {
        let cols: Vec<&str> = line.split_whitespace().collect();
        let (label, nums) = match cols.as_slice() {
            [a, b, rest @ ..] if *a == "macro" || *a == "weighted" => (format!("{a} {b}"), rest),
            [a, rest @ ..] if a.parse::<u32>().is_ok() => (a.to_string(), rest),
            _ => continue,
        };
        if nums.len() != 4 {
            continue;
        }
        let num = |i: usize| {
            nums[i]
                .parse::<f64>()
                .map_err(|_| Error::Input(format!("bad number {:?} in report", nums[i])))
        };
        out.push(RenderedRow {
            label,
            precision: num(0)?,
            recall: num(1)?,
            f1: num(2)?,
            support: nums[3]
                .parse()
                .map_err(|_| Error::Input(format!("bad support {:?}", nums[3])))?,
        });
    }
    Ok(out)
}

/// Structured export: one row per class, then `macro avg`, `weighted avg`
/// and `accuracy` summary rows.
pub fn write_report_csv<W: Write>(w: W, model: &str, report: &ClassReport) -> Result<()> {
    let err = |e| Error::csv("<report>", e);
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["model", "row", "precision", "recall", "f1", "support", "zero_division"])
        .map_err(err)?;
    for r in &report.rows {
        wtr.write_record([
            model.to_string(),
            r.class.to_string(),
            r.precision.to_string(),
            r.recall.to_string(),
            r.f1.to_string(),
            r.support.to_string(),
            r.zero_division.to_string(),
        ])
        .map_err(err)?;
    }
    for (label, avg) in [("macro avg", report.macro_avg), ("weighted avg", report.weighted_avg)] {
        wtr.write_record([
            model.to_string(),
            label.to_string(),
            avg.precision.to_string(),
            avg.recall.to_string(),
            avg.f1.to_string(),
            report.total_support.to_string(),
            String::new(),
        ])
        .map_err(err)?;
    }
    let acc = report.accuracy.to_string();
    wtr.write_record([
        model,
        "accuracy",
        &acc,
        &acc,
        &report.micro_f1.to_string(),
        &report.total_support.to_string(),
        "",
    ])
    .map_err(err)?;
    wtr.flush().map_err(|e| Error::io("<report>", e))
}
