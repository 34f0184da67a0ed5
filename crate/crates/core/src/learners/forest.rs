use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{fit_tree, DecisionTree, TreeParams};
use super::{check_width, Classifier, Matrix};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub tree: TreeParams,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_estimators: 100,
            tree: TreeParams::default(),
        }
    }
}

/// Bootstrap-aggregated CART trees; probabilities are the unweighted mean of
/// the trees' leaf distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub classes: Vec<u32>,
    pub n_features: usize,
    pub params: ForestParams,
    pub seed: u64,
    pub trees: Vec<DecisionTree>,
}

/// Fit a forest. Tree `i` draws its bootstrap sample and feature subsets from
/// the stream `seed::derive(seed, i)`, so the result does not depend on how
/// trees are scheduled across threads.
pub fn fit_forest(x: &Matrix, y: &[usize], classes: &[u32], params: &ForestParams, seed: u64) -> Result<RandomForest> {
    if params.n_estimators < 1 {
        return Err(Error::Parameter("n_estimators must be at least 1".into()));
    }
    let n = x.n_rows();
    if n == 0 {
        return Err(Error::Training("cannot fit a forest on zero rows".into()));
    }
    let trees = (0..params.n_estimators)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::rng(seed::derive(seed, i as u64));
            let rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            fit_tree(x, y, classes.len(), &rows, &params.tree, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RandomForest {
        classes: classes.to_vec(),
        n_features: x.n_cols(),
        params: *params,
        seed,
        trees,
    })
}

impl Classifier for RandomForest {
    fn classes(&self) -> &[u32] {
        &self.classes
    }

    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_width(self.n_features, x)?;
        let mut p = vec![0.0; self.classes.len()];
        for t in &self.trees {
            t.add_proba(x, &mut p);
        }
        let n = self.trees.len() as f64;
        p.iter_mut().for_each(|v| *v /= n);
        Ok(p)
    }
}
