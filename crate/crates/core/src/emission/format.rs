//! Binary forest format, little-endian:
//!
//! ```text
//! magic        4 bytes  "CSRF"
//! version      u16      1
//! tree_count   u16
//! per tree:
//!   node_count u32
//!   per node:
//!     tag      u8       0 = leaf, 1 = split
//!     leaf:    positive_fraction f64
//!     split:   feature u8, threshold f64, left u32, right u32
//! ```
//!
//! Trailing bytes are rejected. Decoded models are checked against the
//! same invariants as freshly trained ones.

use alloc::vec::Vec;

use super::forest::{ForestModel, Node, Tree};
use super::ForestError;

pub const MAGIC: [u8; 4] = *b"CSRF";
pub const FORMAT_VERSION: u16 = 1;

const TAG_LEAF: u8 = 0;
const TAG_SPLIT: u8 = 1;

pub fn serialize_forest(model: &ForestModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(model.trees().len() as u16).to_le_bytes());
    for tree in model.trees() {
        out.extend_from_slice(&(tree.nodes().len() as u32).to_le_bytes());
        for node in tree.nodes() {
            match *node {
                Node::Leaf { positive_fraction } => {
                    out.push(TAG_LEAF);
                    out.extend_from_slice(&positive_fraction.to_le_bytes());
                }
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    out.push(TAG_SPLIT);
                    out.push(feature);
                    out.extend_from_slice(&threshold.to_le_bytes());
                    out.extend_from_slice(&left.to_le_bytes());
                    out.extend_from_slice(&right.to_le_bytes());
                }
            }
        }
    }
    out
}

pub fn deserialize_forest(bytes: &[u8]) -> Result<ForestModel, ForestError> {
    let mut r = Reader { bytes };
    if r.take::<4>()? != MAGIC {
        return Err(ForestError::Format("bad magic"));
    }
    let version = u16::from_le_bytes(r.take()?);
    if version != FORMAT_VERSION {
        return Err(ForestError::Format("unsupported version"));
    }
    let tree_count = u16::from_le_bytes(r.take()?) as usize;
    let mut trees = Vec::with_capacity(tree_count.min(64));
    for _ in 0..tree_count {
        let node_count = u32::from_le_bytes(r.take()?) as usize;
        // every node needs at least 9 bytes
        if node_count > r.bytes.len() / 9 {
            return Err(ForestError::Format("truncated"));
        }
        let mut nodes = Vec::with_capacity(node_count);
        for _ in 0..node_count {
            let [tag] = r.take::<1>()?;
            nodes.push(match tag {
                TAG_LEAF => Node::Leaf {
                    positive_fraction: f64::from_le_bytes(r.take()?),
                },
                TAG_SPLIT => {
                    let [feature] = r.take::<1>()?;
                    Node::Split {
                        feature,
                        threshold: f64::from_le_bytes(r.take()?),
                        left: u32::from_le_bytes(r.take()?),
                        right: u32::from_le_bytes(r.take()?),
                    }
                }
                _ => return Err(ForestError::Format("unknown node tag")),
            });
        }
        trees.push(Tree::new(nodes)?);
    }
    if !r.bytes.is_empty() {
        return Err(ForestError::Format("trailing bytes"));
    }
    ForestModel::new(trees)
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], ForestError> {
        if self.bytes.len() < N {
            return Err(ForestError::Format("truncated"));
        }
        let (head, rest) = self.bytes.split_at(N);
        self.bytes = rest;
        Ok(head.try_into().expect("length checked"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn model() -> ForestModel {
        let tree = Tree::new(vec![
            Node::Split {
                feature: 4,
                threshold: -3.25,
                left: 1,
                right: 2,
            },
            Node::Leaf {
                positive_fraction: 0.125,
            },
            Node::Leaf {
                positive_fraction: 0.875,
            },
        ])
        .unwrap();
        ForestModel::new(vec![tree; 10]).unwrap()
    }

    #[test]
    fn round_trip() {
        let m = model();
        let bytes = serialize_forest(&m);
        assert_eq!(&bytes[..4], b"CSRF");
        assert_eq!(deserialize_forest(&bytes).unwrap(), m);
    }

    #[test]
    fn rejects_corrupt_input() {
        let bytes = serialize_forest(&model());
        assert!(matches!(deserialize_forest(&[]), Err(ForestError::Format(_))));
        for cut in [1, 5, 8, 12, bytes.len() - 1] {
            assert!(
                matches!(deserialize_forest(&bytes[..cut]), Err(ForestError::Format(_))),
                "cut at {cut}"
            );
        }
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(deserialize_forest(&extra).is_err());
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(deserialize_forest(&magic).is_err());
        let mut version = bytes.clone();
        version[4] = 9;
        assert!(deserialize_forest(&version).is_err());
        let mut tag = bytes;
        tag[12] = 7;
        assert!(deserialize_forest(&tag).is_err());
    }
}
