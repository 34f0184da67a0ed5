//! Classifiers: CART trees, random forests, soft voting, one-vs-rest, and
//! two reference baselines (k-nearest neighbours, logistic regression).
//!
//! Models predict over class *indices* `0..n_classes`; the label attached to
//! each index is kept in the model's `classes` list.

mod ensemble;
mod forest;
mod knn;
mod logistic;
mod ovr;
pub mod persist;
mod tree;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ensemble::VotingEnsemble;
pub use forest::{fit_forest, ForestParams, RandomForest};
pub use knn::{knn_predict, KnnClassifier};
pub use logistic::{fit_logistic, LogisticModel, LogisticParams};
pub use ovr::{fit_ovr, OvrModel};
pub use tree::{best_split, fit_tree, gini, DecisionTree, MaxFeatures, Node, NodeKind, Split, TreeParams};

/// Dense row-major feature matrix.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Matrix {
    data: Vec<f64>,
    n_cols: usize,
}

impl Matrix {
    pub fn new(n_cols: usize) -> Self {
        Matrix {
            data: Vec::new(),
            n_cols,
        }
    }

    pub fn with_capacity(n_rows: usize, n_cols: usize) -> Self {
        Matrix {
            data: Vec::with_capacity(n_rows * n_cols),
            n_cols,
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n_cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut m = Matrix::with_capacity(rows.len(), n_cols);
        for r in rows {
            m.push_row(r.as_ref())?;
        }
        Ok(m)
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if self.data.is_empty() && self.n_cols == 0 {
            self.n_cols = row.len();
        }
        if row.len() != self.n_cols {
            return Err(Error::Dimension {
                expected: self.n_cols,
                found: row.len(),
            });
        }
        self.data.extend_from_slice(row);
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.data.len().checked_div(self.n_cols).unwrap_or(0)
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_cols.max(1))
    }

    /// Copy of the given columns, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> Matrix {
        let mut m = Matrix::with_capacity(self.n_rows(), columns.len());
        for r in self.rows() {
            m.data.extend(columns.iter().map(|&c| r[c]));
        }
        m
    }
}

/// A model producing a probability distribution over its classes.
pub trait Classifier {
    /// Class labels, in index order.
    fn classes(&self) -> &[u32];

    fn n_features(&self) -> usize;

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// Index of the most probable class; ties go to the lowest index.
    fn predict_index(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.predict_proba(x)?))
    }

    fn predict_class(&self, x: &[f64]) -> Result<u32> {
        Ok(self.classes()[self.predict_index(x)?])
    }

    fn predict_batch(&self, x: &Matrix) -> Result<Vec<usize>>
    where
        Self: Sync,
    {
        use rayon::prelude::*;
        (0..x.n_rows())
            .into_par_iter()
            .map(|i| self.predict_index(x.row(i)))
            .collect()
    }
}

/// First index of the maximum.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn check_width(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::Dimension {
            expected,
            found: x.len(),
        });
    }
    Ok(())
}

/// Any persisted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Model {
    Forest(RandomForest),
    OneVsRest(OvrModel),
    Voting(VotingEnsemble),
    Logistic(LogisticModel),
}

impl Model {
    fn inner(&self) -> &(dyn Classifier + Sync) {
        match self {
            Model::Forest(m) => m,
            Model::OneVsRest(m) => m,
            Model::Voting(m) => m,
            Model::Logistic(m) => m,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Model::Forest(_) => "random forest",
            Model::OneVsRest(_) => "one-vs-rest",
            Model::Voting(_) => "soft voting ensemble",
            Model::Logistic(_) => "logistic regression",
        }
    }
}

impl Classifier for Model {
    fn classes(&self) -> &[u32] {
        self.inner().classes()
    }

    fn n_features(&self) -> usize {
        self.inner().n_features()
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.inner().predict_proba(x)
    }
}
