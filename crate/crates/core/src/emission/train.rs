//! CART induction with Gini impurity and bootstrap bagging.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::forest::{ForestModel, Node, Tree, MAX_DEPTH, NUM_TREES};
use super::{ForestError, FrameLabels};
use crate::features::{FeatureMatrix, Frame, NUM_BINS};

/// Candidate features tried at each split (about the square root of 9).
pub const FEATURES_PER_SPLIT: usize = 3;
/// Nodes with fewer samples become leaves.
pub const MIN_SAMPLES_SPLIT: usize = 4;
pub const MIN_TRAIN_FRAMES: usize = 100;

/// Trains the ten-tree forest. Output is a pure function of the inputs and
/// `seed`.
pub fn train_forest(
    features: &FeatureMatrix,
    labels: &FrameLabels,
    seed: u64,
) -> Result<ForestModel, ForestError> {
    let frames = features.frames();
    let n = frames.len();
    if n != labels.len() {
        return Err(ForestError::LengthMismatch {
            features: n,
            labels: labels.len(),
        });
    }
    if n < MIN_TRAIN_FRAMES {
        return Err(ForestError::TooFewFrames { frames: n });
    }
    let pos = labels.positives();
    if pos == 0 || pos == n {
        return Err(ForestError::SingleClass);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trees = Vec::with_capacity(NUM_TREES);
    for _ in 0..NUM_TREES {
        let mut sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let mut builder = TreeBuilder {
            frames,
            labels: &labels.0,
            rng: &mut rng,
            nodes: Vec::new(),
            scratch: Vec::with_capacity(n),
        };
        builder.grow(&mut sample, 0);
        trees.push(Tree::new(builder.nodes)?);
    }
    ForestModel::new(trees)
}

struct TreeBuilder<'a> {
    frames: &'a [Frame],
    labels: &'a [bool],
    rng: &'a mut ChaCha8Rng,
    nodes: Vec<Node>,
    scratch: Vec<(f64, bool)>,
}

struct Split {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl TreeBuilder<'_> {
    /// Appends the subtree for `sample` in preorder and returns its root index.
    fn grow(&mut self, sample: &mut [usize], depth: usize) -> u32 {
        let id = self.nodes.len() as u32;
        let n = sample.len();
        let pos = sample.iter().filter(|&&i| self.labels[i]).count();
        let leaf = Node::Leaf {
            positive_fraction: pos as f64 / n as f64,
        };
        self.nodes.push(leaf);
        if depth >= MAX_DEPTH || pos == 0 || pos == n || n < MIN_SAMPLES_SPLIT {
            return id;
        }
        let Some(split) = self.best_split(sample) else {
            return id;
        };
        let mid = partition(sample, |i| self.frames[i][split.feature] <= split.threshold);
        if mid == 0 || mid == n {
            return id;
        }
        let (l, r) = sample.split_at_mut(mid);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id as usize] = Node::Split {
            feature: split.feature as u8,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }

    fn best_split(&mut self, sample: &[usize]) -> Option<Split> {
        // partial Fisher-Yates over the feature indices
        let mut order: [usize; NUM_BINS] = core::array::from_fn(|i| i);
        for k in 0..FEATURES_PER_SPLIT {
            let j = self.rng.random_range(k..NUM_BINS);
            order.swap(k, j);
        }
        let total_pos = sample.iter().filter(|&&i| self.labels[i]).count() as f64;
        let n = sample.len() as f64;
        let mut best: Option<Split> = None;
        for &feature in &order[..FEATURES_PER_SPLIT] {
            self.scratch.clear();
            self.scratch
                .extend(sample.iter().map(|&i| (self.frames[i][feature], self.labels[i])));
            self.scratch.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_n = 0.0;
            let mut left_pos = 0.0;
            for w in 0..self.scratch.len() - 1 {
                let (v, y) = self.scratch[w];
                left_n += 1.0;
                if y {
                    left_pos += 1.0;
                }
                let next = self.scratch[w + 1].0;
                if !(v < next) {
                    continue;
                }
                let impurity = weighted_gini(left_n, left_pos)
                    + weighted_gini(n - left_n, total_pos - left_pos);
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    let mut threshold = v + (next - v) / 2.0;
                    if !(threshold < next) {
                        threshold = v;
                    }
                    best = Some(Split {
                        feature,
                        threshold,
                        impurity,
                    });
                }
            }
        }
        best
    }
}

/// Gini impurity of a node times its sample count.
#[inline]
fn weighted_gini(n: f64, pos: f64) -> f64 {
    let neg = n - pos;
    n - (pos * pos + neg * neg) / n
}

/// Moves items satisfying `pred` to the front and returns their count.
fn partition(items: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let mut mid = 0;
    for i in 0..items.len() {
        if pred(items[i]) {
            items.swap(mid, i);
            mid += 1;
        }
    }
    mid
}
