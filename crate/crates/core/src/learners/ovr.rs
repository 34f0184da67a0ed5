use serde::{Deserialize, Serialize};

use super::{check_width, Classifier, Matrix, Model};
use crate::error::{Error, Result};
use crate::seed;

/// One binary model per class; the class-`k` model scores "k vs rest".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvrModel {
    classes: Vec<u32>,
    n_features: usize,
    estimators: Vec<Model>,
}

/// Fit one binary model per class with `base(x, targets, seed)`, where
/// targets are 1 for class `k` and 0 otherwise and the seed is
/// `seed::derive(seed, k)`.
pub fn fit_ovr<F>(x: &Matrix, y: &[usize], classes: &[u32], base: F, seed: u64) -> Result<OvrModel>
where
    F: Fn(&Matrix, &[usize], u64) -> Result<Model>,
{
    if classes.len() < 2 {
        return Err(Error::Training("one-vs-rest needs at least two classes".into()));
    }
    let mut estimators = Vec::with_capacity(classes.len());
    for (k, label) in classes.iter().enumerate() {
        let targets: Vec<usize> = y.iter().map(|&c| usize::from(c == k)).collect();
        if !targets.contains(&1) {
            return Err(Error::Training(format!("class {label} has no training rows")));
        }
        let model = base(x, &targets, seed::derive(seed, k as u64))?;
        if model.classes().len() != 2 {
            return Err(Error::Training(format!(
                "binary base model for class {label} reports {} classes",
                model.classes().len()
            )));
        }
        estimators.push(model);
    }
    Ok(OvrModel {
        classes: classes.to_vec(),
        n_features: x.n_cols(),
        estimators,
    })
}

impl OvrModel {
    pub fn estimators(&self) -> &[Model] {
        &self.estimators
    }

    /// Positive-class probability of each binary model, before renormalizing.
    pub fn raw_scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_width(self.n_features, x)?;
        self.estimators.iter().map(|m| Ok(m.predict_proba(x)?[1])).collect()
    }
}

impl Classifier for OvrModel {
    fn classes(&self) -> &[u32] {
        &self.classes
    }

    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut p = self.raw_scores(x)?;
        let total: f64 = p.iter().sum();
        if total > 0.0 {
            p.iter_mut().for_each(|v| *v /= total);
        } else {
            let k = p.len() as f64;
            p.iter_mut().for_each(|v| *v = 1.0 / k);
        }
        Ok(p)
    }
}
