use alloc::vec::Vec;

use super::{clamp_prob, EmissionSeries, ForestError};
use crate::features::{FeatureMatrix, Frame, NUM_BINS};

pub const NUM_TREES: usize = 10;
/// Maximum number of internal nodes on any root-to-leaf path.
pub const MAX_DEPTH: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    /// Go to `left` when `frame[feature] <= threshold`, otherwise `right`.
    Split {
        feature: u8,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        positive_fraction: f64,
    },
}

/// Flat binary tree; node 0 is the root and children always follow their parent.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn new(nodes: Vec<Node>) -> Result<Self, ForestError> {
        let tree = Self { nodes };
        tree.check()?;
        Ok(tree)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub(crate) fn nodes_mut(&mut self) -> &mut [Node] {
        &mut self.nodes
    }

    /// Index of the leaf `frame` lands in.
    pub fn leaf_index(&self, frame: &Frame) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if frame[feature as usize] <= threshold {
                        left as usize
                    } else {
                        right as usize
                    };
                }
                Node::Leaf { .. } => return i,
            }
        }
    }

    pub fn predict(&self, frame: &Frame) -> f64 {
        match self.nodes[self.leaf_index(frame)] {
            Node::Leaf { positive_fraction } => positive_fraction,
            Node::Split { .. } => unreachable!("leaf_index returns a leaf"),
        }
    }

    /// Number of internal nodes on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        let mut depth = alloc::vec![0usize; self.nodes.len()];
        let mut max = 0;
        for (i, n) in self.nodes.iter().enumerate() {
            if let Node::Split { left, right, .. } = *n {
                depth[left as usize] = depth[i] + 1;
                depth[right as usize] = depth[i] + 1;
                max = max.max(depth[i] + 1);
            }
        }
        max
    }

    fn check(&self) -> Result<(), ForestError> {
        if self.nodes.is_empty() {
            return Err(ForestError::InvalidModel("empty tree"));
        }
        let n = self.nodes.len();
        let mut parents = alloc::vec![0u8; n];
        for (i, node) in self.nodes.iter().enumerate() {
            match *node {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if feature as usize >= NUM_BINS {
                        return Err(ForestError::InvalidModel("feature index out of range"));
                    }
                    if !threshold.is_finite() {
                        return Err(ForestError::InvalidModel("non-finite threshold"));
                    }
                    for c in [left as usize, right as usize] {
                        if c <= i || c >= n {
                            return Err(ForestError::InvalidModel("child index out of order"));
                        }
                        parents[c] += 1;
                    }
                }
                Node::Leaf { positive_fraction } => {
                    if !(0.0..=1.0).contains(&positive_fraction) {
                        return Err(ForestError::InvalidModel("leaf fraction outside [0, 1]"));
                    }
                }
            }
        }
        if parents[0] != 0 || parents[1..].iter().any(|&p| p != 1) {
            return Err(ForestError::InvalidModel("nodes do not form a tree"));
        }
        if self.depth() > MAX_DEPTH {
            return Err(ForestError::InvalidModel("tree deeper than the maximum depth"));
        }
        Ok(())
    }
}

/// Ten CART trees with soft voting.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    trees: Vec<Tree>,
}

impl ForestModel {
    pub fn new(trees: Vec<Tree>) -> Result<Self, ForestError> {
        if trees.len() != NUM_TREES {
            return Err(ForestError::InvalidModel("forest must have exactly 10 trees"));
        }
        for t in &trees {
            t.check()?;
        }
        Ok(Self { trees })
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    /// Mean leaf fraction over the trees, before clamping.
    pub fn vote(&self, frame: &Frame) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict(frame)).sum();
        sum / self.trees.len() as f64
    }

    pub fn predict_frame(&self, frame: &Frame) -> f64 {
        clamp_prob(self.vote(frame))
    }

    /// Sets the leaf value reached by `frame` in tree `tree`. Test helper for
    /// vote monotonicity.
    #[doc(hidden)]
    pub fn set_reached_leaf(&mut self, tree: usize, frame: &Frame, value: f64) {
        let t = &mut self.trees[tree];
        let i = t.leaf_index(frame);
        t.nodes_mut()[i] = Node::Leaf {
            positive_fraction: value.clamp(0.0, 1.0),
        };
    }
}

pub fn predict_emissions(model: &ForestModel, features: &FeatureMatrix) -> EmissionSeries {
    predict_frames(model, features.frames())
}

pub(crate) fn predict_frames(model: &ForestModel, frames: &[Frame]) -> EmissionSeries {
    EmissionSeries::clamped(frames.iter().map(|f| model.vote(f)).collect())
}
