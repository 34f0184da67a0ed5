use super::{check_width, Matrix};
use crate::error::{Error, Result};

/// Majority class among the `k` nearest training rows (Euclidean distance).
///
/// Distance ties go to the lower row index; vote ties to the lower class index.
pub fn knn_predict(train: &Matrix, labels: &[usize], n_classes: usize, query: &[f64], k: usize) -> Result<usize> {
    if k < 1 {
        return Err(Error::Parameter("k must be at least 1".into()));
    }
    if k > train.n_rows() {
        return Err(Error::Parameter(format!(
            "k = {k} exceeds {} training rows",
            train.n_rows()
        )));
    }
    check_width(train.n_cols(), query)?;
    let mut dist: Vec<(f64, usize)> = train
        .rows()
        .enumerate()
        .map(|(i, r)| {
            let d: f64 = r.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
            (d, i)
        })
        .collect();
    dist.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut votes = vec![0usize; n_classes];
    for &(_, i) in &dist[..k] {
        votes[labels[i]] += 1;
    }
    let mut best = 0;
    for (c, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = c;
        }
    }
    Ok(best)
}

/// Lazy KNN baseline holding its training set.
#[derive(Debug, Clone)]
pub struct KnnClassifier {
    pub train: Matrix,
    pub labels: Vec<usize>,
    pub n_classes: usize,
    pub k: usize,
}

impl KnnClassifier {
    pub fn predict_batch(&self, x: &Matrix) -> Result<Vec<usize>> {
        use rayon::prelude::*;
        (0..x.n_rows())
            .into_par_iter()
            .map(|i| knn_predict(&self.train, &self.labels, self.n_classes, x.row(i), self.k))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_match_with_k1() {
        let x = Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap();
        let y = vec![0, 1, 2];
        assert_eq!(knn_predict(&x, &y, 3, &[1.0, 1.0], 1).unwrap(), 1);
    }

    #[test]
    fn vote_tie_goes_to_lower_class() {
        let x = Matrix::from_rows(&[vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(knn_predict(&x, &[1, 0], 2, &[1.0], 2).unwrap(), 0);
    }

    #[test]
    fn distance_tie_goes_to_lower_row() {
        let x = Matrix::from_rows(&[vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(knn_predict(&x, &[1, 0], 2, &[1.0], 1).unwrap(), 1);
    }

    #[test]
    fn parameter_errors() {
        let x = Matrix::from_rows(&[vec![0.0]]).unwrap();
        assert!(knn_predict(&x, &[0], 1, &[0.0], 0).is_err());
        assert!(knn_predict(&x, &[0], 1, &[0.0], 2).is_err());
    }
}
