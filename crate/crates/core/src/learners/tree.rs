use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_width, Classifier, Matrix};
use crate::error::{Error, Result};

/// Gini impurity `1 - Σ p²` of a class-count vector.
pub fn gini(counts: &[u32]) -> Result<f64> {
    let total: u64 = counts.iter().map(|&c| u64::from(c)).sum();
    if total == 0 {
        return Err(Error::Domain("gini of an empty node".into()));
    }
    Ok(gini_unchecked(counts, total as f64))
}

#[inline]
fn gini_unchecked(counts: &[u32], total: f64) -> f64 {
    let mut sum_sq = 0.0;
    for &c in counts {
        let p = f64::from(c) / total;
        sum_sq += p * p;
    }
    1.0 - sum_sq
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaxFeatures {
    /// ⌊√n_features⌋, at least 1.
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        let k = match self {
            MaxFeatures::Sqrt => (n_features as f64).sqrt().floor() as usize,
            MaxFeatures::All => n_features,
            MaxFeatures::Count(k) => k,
        };
        k.clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_leaf: 1,
            max_features: MaxFeatures::Sqrt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NodeKind {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        counts: Vec<u32>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub n_samples: u32,
    pub impurity: f64,
    pub kind: NodeKind,
}

/// A fitted CART tree stored as a node arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    pub n_classes: usize,
    pub n_features: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// Parent impurity minus the size-weighted child impurities.
    pub impurity_decrease: f64,
}

/// Decreases closer than this count as ties, so rounding noise cannot beat
/// the tie-break order.
const TIE_EPS: f64 = 1e-12;

/// Best Gini split of `rows` over `candidates`.
///
/// Thresholds are midpoints between consecutive distinct values. The split
/// with the largest impurity decrease wins; ties go to the lowest feature
/// index, then the smallest threshold. Splits that leave a child with fewer
/// than `min_samples_leaf` rows are not considered. Zero-gain splits are
/// valid, so `None` means no admissible threshold exists at all.
pub fn best_split(
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    rows: &[usize],
    candidates: &[usize],
    min_samples_leaf: usize,
) -> Option<Split> {
    let mut scratch = SplitScratch::new(n_classes);
    let mut sorted_candidates = candidates.to_vec();
    sorted_candidates.sort_unstable();
    sorted_candidates.dedup();
    best_split_with(x, y, rows, &sorted_candidates, min_samples_leaf.max(1), &mut scratch)
}

struct SplitScratch {
    pairs: Vec<(f64, usize)>,
    total: Vec<u32>,
    left: Vec<u32>,
    right: Vec<u32>,
}

impl SplitScratch {
    fn new(n_classes: usize) -> Self {
        SplitScratch {
            pairs: Vec::new(),
            total: vec![0; n_classes],
            left: vec![0; n_classes],
            right: vec![0; n_classes],
        }
    }
}

fn best_split_with(
    x: &Matrix,
    y: &[usize],
    rows: &[usize],
    candidates: &[usize],
    min_leaf: usize,
    s: &mut SplitScratch,
) -> Option<Split> {
    let n = rows.len();
    if n < 2 * min_leaf {
        return None;
    }
    s.total.fill(0);
    for &r in rows {
        s.total[y[r]] += 1;
    }
    let nf = n as f64;
    let parent = gini_unchecked(&s.total, nf);

    let mut best: Option<Split> = None;
    for &f in candidates {
        s.pairs.clear();
        s.pairs.extend(rows.iter().map(|&r| (x.get(r, f), y[r])));
        s.pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        if s.pairs[0].0 == s.pairs[n - 1].0 {
            continue;
        }
        s.left.fill(0);
        s.right.copy_from_slice(&s.total);
        for i in 0..n - 1 {
            let (v, c) = s.pairs[i];
            s.left[c] += 1;
            s.right[c] -= 1;
            let next = s.pairs[i + 1].0;
            if v == next {
                continue;
            }
            let n_left = i + 1;
            let n_right = n - n_left;
            if n_left < min_leaf || n_right < min_leaf {
                continue;
            }
            let (nl, nr) = (n_left as f64, n_right as f64);
            let decrease = parent - (nl / nf) * gini_unchecked(&s.left, nl) - (nr / nf) * gini_unchecked(&s.right, nr);
            if best.is_none_or(|b| decrease > b.impurity_decrease + TIE_EPS) {
                let mut threshold = v / 2.0 + next / 2.0;
                // adjacent floats: the midpoint can round onto the upper value
                if threshold >= next || !threshold.is_finite() {
                    threshold = v;
                }
                best = Some(Split {
                    feature: f,
                    threshold,
                    impurity_decrease: decrease,
                });
            }
        }
    }
    best
}

fn is_constant(x: &Matrix, rows: &[usize], f: usize) -> bool {
    let first = x.get(rows[0], f);
    rows.iter().all(|&r| x.get(r, f) == first)
}

/// Row range `start..end` of the index buffer, depth, and the parent split
/// whose `left` (true) or `right` child slot this node fills.
type PendingNode = (usize, usize, usize, Option<(usize, bool)>);

/// Grow a CART tree on `rows` (indices into `x`/`y`; repeats allowed).
///
/// At each node features are drawn without replacement from `rng` until
/// `max_features` have been examined; if every drawn feature is constant on
/// the node, drawing continues until a non-constant one turns up or the
/// features run out.
pub fn fit_tree<R: Rng + ?Sized>(
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    rows: &[usize],
    params: &TreeParams,
    rng: &mut R,
) -> Result<DecisionTree> {
    if rows.is_empty() {
        return Err(Error::Training("cannot fit a tree on zero rows".into()));
    }
    if y.len() != x.n_rows() {
        return Err(Error::Input(format!("{} targets for {} rows", y.len(), x.n_rows())));
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= n_classes) {
        return Err(Error::Input(format!("class index {bad} >= {n_classes}")));
    }
    let n_features = x.n_cols();
    let mtry = params.max_features.resolve(n_features);
    let min_leaf = params.min_samples_leaf.max(1);

    let mut idx = rows.to_vec();
    let mut nodes: Vec<Node> = Vec::new();
    let mut scratch = SplitScratch::new(n_classes);
    let mut feature_pool: Vec<usize> = (0..n_features).collect();
    let mut candidates = Vec::with_capacity(n_features);

    let mut stack: Vec<PendingNode> = vec![(0, idx.len(), 0, None)];
    while let Some((start, end, depth, parent)) = stack.pop() {
        let node_rows = &mut idx[start..end];
        let n = node_rows.len();
        let mut counts = vec![0u32; n_classes];
        for &r in node_rows.iter() {
            counts[y[r]] += 1;
        }
        let impurity = gini_unchecked(&counts, n as f64);
        let id = nodes.len();
        if let Some((p, is_left)) = parent {
            if let NodeKind::Split { left, right, .. } = &mut nodes[p].kind {
                if is_left {
                    *left = id as u32;
                } else {
                    *right = id as u32;
                }
            }
        }

        let depth_ok = params.max_depth.is_none_or(|d| depth < d);
        let split = if depth_ok && impurity > 0.0 && n >= 2 * min_leaf && n_features > 0 {
            candidates.clear();
            let mut non_constant = 0;
            let mut drawn = 0;
            while drawn < n_features && (drawn < mtry || non_constant == 0) {
                let j = rng.gen_range(drawn..n_features);
                feature_pool.swap(drawn, j);
                let f = feature_pool[drawn];
                drawn += 1;
                if !is_constant(x, node_rows, f) {
                    non_constant += 1;
                    candidates.push(f);
                }
            }
            candidates.sort_unstable();
            best_split_with(x, y, node_rows, &candidates, min_leaf, &mut scratch)
        } else {
            None
        };

        match split {
            Some(s) => {
                let mut lo = 0;
                for i in 0..n {
                    if x.get(node_rows[i], s.feature) <= s.threshold {
                        node_rows.swap(lo, i);
                        lo += 1;
                    }
                }
                nodes.push(Node {
                    n_samples: n as u32,
                    impurity,
                    kind: NodeKind::Split {
                        feature: s.feature,
                        threshold: s.threshold,
                        left: 0,
                        right: 0,
                    },
                });
                // left subtree is built first
                stack.push((start + lo, end, depth + 1, Some((id, false))));
                stack.push((start, start + lo, depth + 1, Some((id, true))));
            }
            None => nodes.push(Node {
                n_samples: n as u32,
                impurity,
                kind: NodeKind::Leaf { counts },
            }),
        }
    }

    Ok(DecisionTree {
        nodes,
        n_classes,
        n_features,
    })
}

impl DecisionTree {
    pub fn leaf_counts(&self, x: &[f64]) -> &[u32] {
        let mut i = 0;
        loop {
            match &self.nodes[i].kind {
                NodeKind::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[*feature] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
                NodeKind::Leaf { counts } => return counts,
            }
        }
    }

    pub(crate) fn add_proba(&self, x: &[f64], acc: &mut [f64]) {
        let counts = self.leaf_counts(x);
        let total: f64 = counts.iter().map(|&c| f64::from(c)).sum();
        for (a, &c) in acc.iter_mut().zip(counts) {
            *a += f64::from(c) / total;
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &DecisionTree, i: usize) -> usize {
            match &t.nodes[i].kind {
                NodeKind::Split { left, right, .. } => 1 + walk(t, *left as usize).max(walk(t, *right as usize)),
                NodeKind::Leaf { .. } => 0,
            }
        }
        walk(self, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n.kind, NodeKind::Leaf { .. }))
            .count()
    }

    /// Unnormalized impurity decrease per feature: Σ over split nodes of
    /// `n·g - n_left·g_left - n_right·g_right`.
    pub fn impurity_decrease_by_feature(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_features];
        for node in &self.nodes {
            if let NodeKind::Split {
                feature, left, right, ..
            } = node.kind
            {
                let l = &self.nodes[left as usize];
                let r = &self.nodes[right as usize];
                out[feature] += f64::from(node.n_samples) * node.impurity
                    - f64::from(l.n_samples) * l.impurity
                    - f64::from(r.n_samples) * r.impurity;
            }
        }
        out
    }
}

/// A bare tree reports class indices as labels.
impl Classifier for DecisionTree {
    fn classes(&self) -> &[u32] {
        const IDX: [u32; 16] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15];
        &IDX[..self.n_classes.min(IDX.len())]
    }

    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_width(self.n_features, x)?;
        let mut p = vec![0.0; self.n_classes];
        self.add_proba(x, &mut p);
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    fn toy(rows: &[(&[f64], usize)]) -> (Matrix, Vec<usize>) {
        let feats: Vec<Vec<f64>> = rows.iter().map(|(f, _)| f.to_vec()).collect();
        (Matrix::from_rows(&feats).unwrap(), rows.iter().map(|r| r.1).collect())
    }

    #[test]
    fn gini_examples() {
        assert_eq!(gini(&[5, 0]).unwrap(), 0.0);
        assert_eq!(gini(&[2, 2]).unwrap(), 0.5);
        assert!((gini(&[1, 1, 1, 1, 1]).unwrap() - 0.8).abs() < 1e-15);
        assert!(gini(&[0, 0]).is_err());
    }

    #[test]
    fn single_split_example() {
        let (x, y) = toy(&[(&[0.0], 0), (&[1.0], 1)]);
        let s = best_split(&x, &y, 2, &[0, 1], &[0], 1).unwrap();
        assert_eq!(s.feature, 0);
        assert_eq!(s.threshold, 0.5);
        assert_eq!(s.impurity_decrease, 0.5);
    }

    #[test]
    fn identical_rows_have_no_split() {
        let (x, y) = toy(&[(&[1.0, 2.0], 0), (&[1.0, 2.0], 1), (&[1.0, 2.0], 0)]);
        assert!(best_split(&x, &y, 2, &[0, 1, 2], &[0, 1], 1).is_none());
    }

    #[test]
    fn tie_prefers_lowest_feature() {
        // both features separate the classes perfectly
        let (x, y) = toy(&[(&[0.0, 0.0], 0), (&[1.0, 1.0], 1)]);
        let s = best_split(&x, &y, 2, &[0, 1], &[1, 0], 1).unwrap();
        assert_eq!(s.feature, 0);
    }

    #[test]
    fn min_samples_leaf_limits_thresholds() {
        let (x, y) = toy(&[(&[0.0], 0), (&[1.0], 1), (&[2.0], 1), (&[3.0], 1)]);
        let s = best_split(&x, &y, 2, &[0, 1, 2, 3], &[0], 2).unwrap();
        assert_eq!(s.threshold, 1.5);
    }

    #[test]
    fn separable_data_gives_depth_one_tree() {
        let (x, y) = toy(&[(&[0.0], 0), (&[0.2], 0), (&[0.8], 1), (&[1.0], 1)]);
        let params = TreeParams {
            max_features: MaxFeatures::All,
            ..Default::default()
        };
        let t = fit_tree(&x, &y, 2, &[0, 1, 2, 3], &params, &mut seed::rng(1)).unwrap();
        assert_eq!(t.depth(), 1);
        assert_eq!(t.n_leaves(), 2);
        for node in &t.nodes {
            assert_eq!(node.impurity == 0.0, matches!(node.kind, NodeKind::Leaf { .. }));
        }
    }

    #[test]
    fn depth_zero_is_a_leaf() {
        let (x, y) = toy(&[(&[0.0], 0), (&[1.0], 1), (&[2.0], 1)]);
        let params = TreeParams {
            max_depth: Some(0),
            ..Default::default()
        };
        let t = fit_tree(&x, &y, 2, &[0, 1, 2], &params, &mut seed::rng(1)).unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.nodes[0].kind, NodeKind::Leaf { counts: vec![1, 2] });
    }

    #[test]
    fn xor_is_fit_exactly() {
        let (x, y) = toy(&[(&[0.0, 0.0], 0), (&[0.0, 1.0], 1), (&[1.0, 0.0], 1), (&[1.0, 1.0], 0)]);
        let params = TreeParams {
            max_features: MaxFeatures::All,
            ..Default::default()
        };
        let t = fit_tree(&x, &y, 2, &[0, 1, 2, 3], &params, &mut seed::rng(3)).unwrap();
        for (i, &label) in y.iter().enumerate() {
            assert_eq!(t.predict_index(x.row(i)).unwrap(), label);
        }
    }

    #[test]
    fn same_stream_same_tree() {
        let feats: Vec<Vec<f64>> = (0..50)
            .map(|i| vec![(i * 7 % 13) as f64, (i * 3 % 5) as f64, i as f64 * 0.1])
            .collect();
        let x = Matrix::from_rows(&feats).unwrap();
        let y: Vec<usize> = (0..50).map(|i| (i * 11 % 3) as usize).collect();
        let rows: Vec<usize> = (0..50).collect();
        let params = TreeParams {
            max_features: MaxFeatures::Count(1),
            ..Default::default()
        };
        let a = fit_tree(&x, &y, 3, &rows, &params, &mut seed::rng(9)).unwrap();
        let b = fit_tree(&x, &y, 3, &rows, &params, &mut seed::rng(9)).unwrap();
        assert_eq!(a, b);
        assert!(a.predict_proba(&[1.0]).is_err());
    }
}
