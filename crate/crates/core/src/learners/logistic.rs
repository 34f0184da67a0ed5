use serde::{Deserialize, Serialize};

use super::{check_width, Classifier, Matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            learning_rate: 0.5,
            epochs: 500,
            l2: 1e-4,
        }
    }
}

/// Binary logistic regression over classes `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    classes: Vec<u32>,
    pub weights: Vec<f64>,
    pub bias: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogisticModel {
    pub fn from_parts(weights: Vec<f64>, bias: f64) -> Self {
        LogisticModel {
            classes: vec![0, 1],
            weights,
            bias,
        }
    }

    fn positive(&self, x: &[f64]) -> f64 {
        let z: f64 = self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        sigmoid(z)
    }
}

/// Full-batch gradient descent on mean log-loss plus `l2/2 · ‖w‖²`
/// (the bias is not penalized). Weights start at zero.
pub fn fit_logistic(x: &Matrix, y: &[usize], params: &LogisticParams) -> Result<LogisticModel> {
    if x.n_rows() == 0 || y.len() != x.n_rows() {
        return Err(Error::Training("logistic fit needs matching, nonempty rows".into()));
    }
    if y.iter().any(|&c| c > 1) {
        return Err(Error::Input("logistic targets must be binary".into()));
    }
    let n = x.n_rows() as f64;
    let mut model = LogisticModel::from_parts(vec![0.0; x.n_cols()], 0.0);
    let mut grad = vec![0.0; x.n_cols()];
    for _ in 0..params.epochs {
        grad.fill(0.0);
        let mut grad_b = 0.0;
        for (row, &t) in x.rows().zip(y) {
            let err = model.positive(row) - t as f64;
            for (g, v) in grad.iter_mut().zip(row) {
                *g += err * v;
            }
            grad_b += err;
        }
        for (w, g) in model.weights.iter_mut().zip(&grad) {
            *w -= params.learning_rate * (g / n + params.l2 * *w);
        }
        model.bias -= params.learning_rate * grad_b / n;
    }
    Ok(model)
}

impl Classifier for LogisticModel {
    fn classes(&self) -> &[u32] {
        &self.classes
    }

    fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_width(self.weights.len(), x)?;
        let p = self.positive(x);
        Ok(vec![1.0 - p, p])
    }
}
