//! Depth-limited CART classification trees and the composite classifier whose
//! root tests the binary user signal.
//!
//! Splits minimize weighted Gini impurity over midpoints between consecutive
//! distinct feature values. Ties go to the lowest feature index, then the
//! smallest threshold; leaf label ties go to 0.

use crate::data::{BinaryClassifier, Dataset, LabeledPoint, ValueKind};
use crate::error::{Error, Result};

/// Minimum impurity decrease for a split to be taken, and the margin used when
/// comparing candidate splits.
const IMPURITY_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf {
        predicted_label: u8,
        /// Training points of class 0 and class 1 that reached this leaf.
        class_counts: [usize; 2],
    },
    Split {
        feature_index: usize,
        threshold: f64,
        /// `feature <= threshold`
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn leaf(class_counts: [usize; 2]) -> Self {
        TreeNode::Leaf {
            predicted_label: majority(class_counts),
            class_counts,
        }
    }

    /// Maximum number of test nodes on a root-to-leaf path.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn num_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.num_leaves() + right.num_leaves(),
        }
    }

    /// Descends by threshold tests. Features beyond the largest split index
    /// are ignored; a too-short vector is an error.
    pub fn predict(&self, x: &[f64]) -> Result<u8> {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { predicted_label, .. } => return Ok(*predicted_label),
                TreeNode::Split {
                    feature_index,
                    threshold,
                    left,
                    right,
                } => {
                    let v = *x.get(*feature_index).ok_or(Error::DimensionMismatch {
                        expected: feature_index + 1,
                        actual: x.len(),
                    })?;
                    node = if v <= *threshold { left } else { right };
                }
            }
        }
    }

    fn max_feature_index(&self) -> Option<usize> {
        match self {
            TreeNode::Leaf { .. } => None,
            TreeNode::Split {
                feature_index,
                left,
                right,
                ..
            } => [Some(*feature_index), left.max_feature_index(), right.max_feature_index()]
                .into_iter()
                .flatten()
                .max(),
        }
    }
}

impl BinaryClassifier for TreeNode {
    fn classify(&self, point: &LabeledPoint) -> Result<u8> {
        self.predict(&point.features)
    }
}

fn majority(counts: [usize; 2]) -> u8 {
    u8::from(counts[1] > counts[0])
}

fn class_counts<'a>(points: impl IntoIterator<Item = &'a LabeledPoint>) -> [usize; 2] {
    let mut c = [0usize; 2];
    for p in points {
        c[usize::from(p.label == 1.0)] += 1;
    }
    c
}

pub fn gini(counts: [usize; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p0 = counts[0] as f64 / n;
    let p1 = counts[1] as f64 / n;
    1.0 - p0 * p0 - p1 * p1
}

/// A candidate split and its weighted child impurity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature_index: usize,
    pub threshold: f64,
    pub impurity: f64,
}

/// Best Gini split of the given points, or `None` when no candidate exists
/// (every feature is constant).
pub fn best_split(points: &[&LabeledPoint]) -> Option<SplitChoice> {
    let n = points.len();
    if n < 2 {
        return None;
    }
    let total = class_counts(points.iter().copied());
    let dim = points[0].features.len();
    let mut best: Option<SplitChoice> = None;
    let mut order: Vec<usize> = (0..n).collect();
    for f in 0..dim {
        order.sort_by(|&a, &b| points[a].features[f].total_cmp(&points[b].features[f]));
        let mut left = [0usize; 2];
        for pos in 0..n - 1 {
            let p = points[order[pos]];
            left[usize::from(p.label == 1.0)] += 1;
            let here = p.features[f];
            let next = points[order[pos + 1]].features[f];
            if here == next {
                continue;
            }
            let right = [total[0] - left[0], total[1] - left[1]];
            let n_left = (pos + 1) as f64;
            let impurity = (n_left * gini(left) + (n - pos - 1) as f64 * gini(right)) / n as f64;
            if best.is_none_or(|b| impurity < b.impurity - IMPURITY_EPS) {
                best = Some(SplitChoice {
                    feature_index: f,
                    threshold: here + (next - here) / 2.0,
                    impurity,
                });
            }
        }
    }
    best
}

/// Greedy top-down induction with at most `max_depth` tests per path.
pub fn fit_tree(d: &Dataset, max_depth: usize) -> Result<TreeNode> {
    d.require_binary_labels("dtree")?;
    let points: Vec<&LabeledPoint> = d.points().iter().collect();
    Ok(grow(&points, max_depth))
}

fn grow(points: &[&LabeledPoint], depth_left: usize) -> TreeNode {
    let counts = class_counts(points.iter().copied());
    if depth_left == 0 || counts[0] == 0 || counts[1] == 0 {
        return TreeNode::leaf(counts);
    }
    let Some(split) = best_split(points) else {
        return TreeNode::leaf(counts);
    };
    if split.impurity >= gini(counts) - IMPURITY_EPS {
        return TreeNode::leaf(counts);
    }
    let (left, right): (Vec<&LabeledPoint>, Vec<&LabeledPoint>) = points
        .iter()
        .partition(|p| p.features[split.feature_index] <= split.threshold);
    TreeNode::Split {
        feature_index: split.feature_index,
        threshold: split.threshold,
        left: Box::new(grow(&left, depth_left - 1)),
        right: Box::new(grow(&right, depth_left - 1)),
    }
}

/// Two trees dispatched by the binary user signal at the root.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeTree {
    pub tree_u0: TreeNode,
    pub tree_u1: TreeNode,
    pub max_depth: usize,
    /// Set when one signal value had no training points; that branch is then
    /// a leaf predicting this label.
    pub fallback_label: Option<u8>,
    pub feature_dim: usize,
}

impl CompositeTree {
    pub fn subtree(&self, u: u8) -> &TreeNode {
        if u == 1 {
            &self.tree_u1
        } else {
            &self.tree_u0
        }
    }

    /// Depth including the root test on `u`.
    pub fn depth(&self) -> usize {
        1 + self.tree_u0.depth().max(self.tree_u1.depth())
    }

    /// Checks the depth bound and that every split index is in range.
    pub fn validate(&self) -> Result<()> {
        for (name, t) in [("tree_u0", &self.tree_u0), ("tree_u1", &self.tree_u1)] {
            if t.depth() > self.max_depth {
                return Err(Error::invalid(
                    "dtree",
                    "max_depth",
                    format!("{name} has depth {} > {}", t.depth(), self.max_depth),
                ));
            }
            if let Some(i) = t.max_feature_index() {
                if i >= self.feature_dim {
                    return Err(Error::invalid(
                        "dtree",
                        "feature_index",
                        format!("{name} tests feature {i} but feature_dim is {}", self.feature_dim),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// `⌈η⌉`, the per-branch depth budget for entropy bound `η`.
pub fn depth_budget(eta: f64) -> Result<usize> {
    if !eta.is_finite() || eta < 0.0 {
        return Err(Error::invalid("dtree", "eta", format!("must be finite and >= 0, got {eta}")));
    }
    Ok(eta.ceil() as usize)
}

/// Partitions by user signal and fits one depth-`⌈η⌉` tree per partition.
pub fn fit_eerm_tree(d: &Dataset, eta: f64) -> Result<CompositeTree> {
    d.require_binary_labels("dtree")?;
    if d.signal_kind() != ValueKind::Binary {
        return Err(Error::WrongKind {
            module: "dtree",
            what: "user signals",
            expected: "binary",
        });
    }
    let max_depth = depth_budget(eta)?;
    let fallback = majority(class_counts(d.points()));
    let (with_u1, with_u0): (Vec<&LabeledPoint>, Vec<&LabeledPoint>) =
        d.points().iter().partition(|p| p.user_signal == 1.0);

    let mut fallback_label = None;
    let mut fit_branch = |part: &[&LabeledPoint]| {
        if part.is_empty() {
            fallback_label = Some(fallback);
            TreeNode::Leaf {
                predicted_label: fallback,
                class_counts: [0, 0],
            }
        } else {
            grow(part, max_depth)
        }
    };
    let tree_u0 = fit_branch(&with_u0);
    let tree_u1 = fit_branch(&with_u1);
    Ok(CompositeTree {
        tree_u0,
        tree_u1,
        max_depth,
        fallback_label,
        feature_dim: d.feature_dim(),
    })
}

pub fn predict_composite(c: &CompositeTree, x: &[f64], u: u8) -> Result<u8> {
    if x.len() != c.feature_dim {
        return Err(Error::DimensionMismatch {
            expected: c.feature_dim,
            actual: x.len(),
        });
    }
    if u > 1 {
        return Err(Error::invalid("dtree", "u", format!("user signal must be 0 or 1, got {u}")));
    }
    c.subtree(u).predict(x)
}

impl BinaryClassifier for CompositeTree {
    fn classify(&self, point: &LabeledPoint) -> Result<u8> {
        let u = match point.user_signal {
            v if v == 0.0 => 0,
            v if v == 1.0 => 1,
            v => return Err(Error::invalid("dtree", "u", format!("user signal must be 0 or 1, got {v}"))),
        };
        predict_composite(self, &point.features, u)
    }
}
