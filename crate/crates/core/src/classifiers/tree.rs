//! CART decision tree with Gini impurity.

use serde::{Deserialize, Serialize};

use crate::numkernel::{Matrix, SeededRng};

use super::argmax_counts;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TreeParams {
    /// `None` grows until nodes are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Features examined per split; `None` examines all of them in order.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_split: 2,
            max_features: None,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.min_samples_split < 2 {
            return Err(format!("min_samples_split must be >= 2, got {}", self.min_samples_split));
        }
        if self.max_depth == Some(0) {
            return Err("max_depth must be >= 1".into());
        }
        if self.max_features == Some(0) {
            return Err("max_features must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum TreeNode {
    Leaf {
        class: usize,
        histogram: Vec<usize>,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
    pub n_features: usize,
    pub n_classes: usize,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl DecisionTree {
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, params: &TreeParams, rng: &mut SeededRng) -> Self {
        let rows: Vec<usize> = (0..x.rows()).collect();
        Self::fit_rows(x, y, &rows, n_classes, params, rng)
    }

    /// Grows a tree on the given row multiset (duplicates allowed, as in a
    /// bootstrap sample). `rng` is only consulted when `max_features` is
    /// smaller than the feature count.
    pub fn fit_rows(
        x: &Matrix,
        y: &[usize],
        rows: &[usize],
        n_classes: usize,
        params: &TreeParams,
        rng: &mut SeededRng,
    ) -> Self {
        let mut tree = DecisionTree {
            nodes: Vec::new(),
            n_features: x.cols(),
            n_classes,
        };
        // (node slot, rows, depth)
        let mut work = vec![(0usize, rows.to_vec(), 0usize)];
        tree.nodes.push(placeholder());
        while let Some((slot, node_rows, depth)) = work.pop() {
            let histogram = histogram(y, &node_rows, n_classes);
            let pure = histogram.iter().filter(|&&c| c > 0).count() <= 1;
            let depth_capped = params.max_depth.is_some_and(|d| depth >= d);
            let split = if pure || depth_capped || node_rows.len() < params.min_samples_split {
                None
            } else {
                best_split(x, y, &node_rows, &histogram, params, rng)
            };
            match split {
                None => {
                    tree.nodes[slot] = TreeNode::Leaf {
                        class: argmax_counts(&histogram),
                        histogram,
                    };
                }
                Some(c) => {
                    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
                        node_rows.iter().partition(|&&r| x.get(r, c.feature) <= c.threshold);
                    let left = tree.nodes.len();
                    tree.nodes.push(placeholder());
                    let right = tree.nodes.len();
                    tree.nodes.push(placeholder());
                    tree.nodes[slot] = TreeNode::Split {
                        feature: c.feature,
                        threshold: c.threshold,
                        left,
                        right,
                    };
                    work.push((right, right_rows, depth + 1));
                    work.push((left, left_rows, depth + 1));
                }
            }
        }
        tree
    }

    pub fn leaf_histogram(&self, row: &[f64]) -> &[usize] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { histogram, .. } => return histogram,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { class, .. } => return *class,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[TreeNode], i: usize) -> usize {
            match &nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }
}

fn placeholder() -> TreeNode {
    TreeNode::Leaf {
        class: 0,
        histogram: Vec::new(),
    }
}

fn histogram(y: &[usize], rows: &[usize], n_classes: usize) -> Vec<usize> {
    let mut h = vec![0; n_classes];
    for &r in rows {
        h[y[r]] += 1;
    }
    h
}

/// Lowest weighted Gini over the examined features. Features are examined in
/// natural order, or in a seeded random order when subsampling; in that case
/// the search stops after `max_features` non-constant features.
fn best_split(
    x: &Matrix,
    y: &[usize],
    rows: &[usize],
    parent: &[usize],
    params: &TreeParams,
    rng: &mut SeededRng,
) -> Option<Candidate> {
    let d = x.cols();
    let order: Vec<usize> = match params.max_features {
        Some(m) if m < d => rng.permutation(d),
        _ => (0..d).collect(),
    };
    let budget = params.max_features.unwrap_or(d).min(d);
    let mut best: Option<Candidate> = None;
    let mut examined = 0;
    let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(rows.len());
    for &f in &order {
        if examined >= budget {
            break;
        }
        sorted.clear();
        sorted.extend(rows.iter().map(|&r| (x.get(r, f), y[r])));
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        if sorted.first().map(|s| s.0) == sorted.last().map(|s| s.0) {
            continue;
        }
        examined += 1;
        if let Some(c) = scan_feature(&sorted, parent, f) {
            if best.as_ref().is_none_or(|b| c.score < b.score) {
                best = Some(c);
            }
        }
    }
    best
}

/// Sweeps thresholds at midpoints between consecutive distinct values.
/// The score is `n * weighted Gini`, i.e. `sum_side (n_s - sum_k c_k^2 / n_s)`.
fn scan_feature(sorted: &[(f64, usize)], parent: &[usize], feature: usize) -> Option<Candidate> {
    let n = sorted.len();
    let mut left = vec![0usize; parent.len()];
    let mut right = parent.to_vec();
    let mut left_sq: f64 = 0.0;
    let mut right_sq: f64 = parent.iter().map(|&c| (c * c) as f64).sum();
    let mut best: Option<Candidate> = None;
    for i in 0..n - 1 {
        let k = sorted[i].1;
        left_sq += (2 * left[k] + 1) as f64;
        right_sq -= (2 * right[k] - 1) as f64;
        left[k] += 1;
        right[k] -= 1;
        let (a, b) = (sorted[i].0, sorted[i + 1].0);
        if a == b {
            continue;
        }
        let nl = (i + 1) as f64;
        let nr = (n - i - 1) as f64;
        let score = (nl - left_sq / nl) + (nr - right_sq / nr);
        if best.as_ref().is_none_or(|c| score < c.score) {
            let mut threshold = a + (b - a) / 2.0;
            // adjacent floats: the midpoint can round up onto b
            if threshold >= b {
                threshold = a;
            }
            best = Some(Candidate {
                feature,
                threshold,
                score,
            });
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_toy_is_a_stump() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]).unwrap();
        let y = [0, 0, 1, 1];
        let t = DecisionTree::fit(&x, &y, 2, &TreeParams::default(), &mut SeededRng::new(0));
        assert_eq!(t.depth(), 1);
        assert_eq!(t.nodes[0], TreeNode::Split { feature: 0, threshold: 1.5, left: 1, right: 2 });
        for (r, &label) in y.iter().enumerate() {
            assert_eq!(t.predict_row(x.row(r)), label);
        }
    }

    #[test]
    fn xor_is_learned_despite_zero_first_gain() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]).unwrap();
        let y = [0, 1, 1, 0];
        let t = DecisionTree::fit(&x, &y, 2, &TreeParams::default(), &mut SeededRng::new(0));
        for (r, &label) in y.iter().enumerate() {
            assert_eq!(t.predict_row(x.row(r)), label);
        }
    }

    #[test]
    fn conflicting_duplicates_become_a_leaf() {
        let x = Matrix::from_rows(&[[1.0], [1.0], [1.0]]).unwrap();
        let t = DecisionTree::fit(&x, &[0, 1, 1], 2, &TreeParams::default(), &mut SeededRng::new(0));
        assert_eq!(t.nodes, vec![TreeNode::Leaf { class: 1, histogram: vec![1, 2] }]);
    }

    #[test]
    fn depth_cap_and_histograms() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0], [4.0]]).unwrap();
        let y = [0, 1, 0, 1, 0];
        let p = TreeParams {
            max_depth: Some(1),
            ..TreeParams::default()
        };
        let t = DecisionTree::fit(&x, &y, 2, &p, &mut SeededRng::new(0));
        assert_eq!(t.depth(), 1);
        let total: usize = t
            .nodes
            .iter()
            .filter_map(|n| match n {
                TreeNode::Leaf { histogram, .. } => Some(histogram.iter().sum::<usize>()),
                _ => None,
            })
            .sum();
        assert_eq!(total, 5);
    }

    #[test]
    fn adjacent_float_threshold_separates() {
        let a = 1.0_f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let x = Matrix::from_rows(&[[a], [b]]).unwrap();
        let t = DecisionTree::fit(&x, &[0, 1], 2, &TreeParams::default(), &mut SeededRng::new(0));
        assert_eq!(t.predict_row(&[a]), 0);
        assert_eq!(t.predict_row(&[b]), 1);
    }
}
