//! Random-forest emission model.
//!
//! A forest of CART trees maps each feature frame to the probability that a
//! heart sound (S1 or S2) is present in it. The decoder ties the emission of
//! both sounds to this one probability and the two silent states to its
//! complement.

mod format;
mod forest;
mod train;

use alloc::vec::Vec;
use core::fmt;

use crate::hsmm::DurationModel;

pub use format::{deserialize_forest, serialize_forest, FORMAT_VERSION, MAGIC};
pub use forest::{predict_emissions, ForestModel, Node, Tree, MAX_DEPTH, NUM_TREES};
pub use train::{train_forest, FEATURES_PER_SPLIT, MIN_SAMPLES_SPLIT, MIN_TRAIN_FRAMES};

/// Emission probabilities are clamped to `[EPS, 1 - EPS]`.
pub const EPS: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub enum ForestError {
    /// Training labels contain a single class.
    SingleClass,
    TooFewFrames { frames: usize },
    /// Feature and label lengths differ.
    LengthMismatch { features: usize, labels: usize },
    /// Tree structure breaks a model invariant.
    InvalidModel(&'static str),
    /// Serialized bytes are malformed.
    Format(&'static str),
    UnsortedPeaks,
    PeakOutOfRange { time_s: f64 },
}

impl fmt::Display for ForestError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ForestError::SingleClass => f.write_str("training labels contain a single class"),
            ForestError::TooFewFrames { frames } => write!(
                f,
                "{frames} training frames, need at least {MIN_TRAIN_FRAMES}"
            ),
            ForestError::LengthMismatch { features, labels } => {
                write!(f, "{features} feature frames but {labels} labels")
            }
            ForestError::InvalidModel(why) => write!(f, "invalid forest: {why}"),
            ForestError::Format(why) => write!(f, "malformed forest file: {why}"),
            ForestError::UnsortedPeaks => f.write_str("R-peak times are not sorted"),
            ForestError::PeakOutOfRange { time_s } => {
                write!(f, "R-peak at {time_s} s outside the labeled range")
            }
        }
    }
}

impl core::error::Error for ForestError {}

/// Per-frame probability that a heart sound is present.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionSeries {
    probs: Vec<f64>,
}

impl EmissionSeries {
    /// Wraps probabilities that already lie in `[EPS, 1 - EPS]`.
    pub fn new(probs: Vec<f64>) -> Option<Self> {
        probs
            .iter()
            .all(|p| (EPS..=1.0 - EPS).contains(p))
            .then_some(Self { probs })
    }

    /// Clamps arbitrary values into `[EPS, 1 - EPS]`. NaN maps to 0.5.
    pub fn clamped(mut probs: Vec<f64>) -> Self {
        for p in probs.iter_mut() {
            *p = clamp_prob(*p);
        }
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

#[inline]
pub(crate) fn clamp_prob(p: f64) -> f64 {
    if p.is_nan() {
        0.5
    } else {
        p.clamp(EPS, 1.0 - EPS)
    }
}

/// Binary per-frame training labels: `true` where a heart sound is present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameLabels(pub Vec<bool>);

impl FrameLabels {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }
}

/// Sound/no-sound labels from R-peak times using the default duration model.
pub fn derive_frame_labels(
    rpeaks_s: &[f64],
    num_frames: usize,
    frame_rate_hz: u32,
) -> Result<FrameLabels, ForestError> {
    derive_frame_labels_with(rpeaks_s, num_frames, frame_rate_hz, &DurationModel::default())
}

/// Frame `k` (starting at `k / frame_rate` s) is a sound frame when it falls
/// in the S1 span `[r, r + s1)` or the S2 span `[r + s1 + sys, r + s1 + sys + s2)`
/// of some R-peak `r`, using the mean durations of `durations`.
pub fn derive_frame_labels_with(
    rpeaks_s: &[f64],
    num_frames: usize,
    frame_rate_hz: u32,
    durations: &DurationModel,
) -> Result<FrameLabels, ForestError> {
    use crate::hsmm::CardiacState::*;
    if rpeaks_s.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(ForestError::UnsortedPeaks);
    }
    let fr = frame_rate_hz as f64;
    let end_s = num_frames as f64 / fr;
    if let Some(&bad) = rpeaks_s.iter().find(|&&r| !(0.0..end_s).contains(&r)) {
        return Err(ForestError::PeakOutOfRange { time_s: bad });
    }
    let s1 = durations.state(S1).mean_s;
    let sys = durations.state(Systole).mean_s;
    let s2 = durations.state(S2).mean_s;
    let mut labels = alloc::vec![false; num_frames];
    for &r in rpeaks_s {
        for (a, b) in [(r, r + s1), (r + s1 + sys, r + s1 + sys + s2)] {
            for k in span_frames(a, b, fr) {
                if let Some(slot) = labels.get_mut(k) {
                    *slot = true;
                }
            }
        }
    }
    Ok(FrameLabels(labels))
}

/// Frame indices `k` with `start <= k / fr < end`, tolerant to rounding in
/// the span arithmetic.
pub(crate) fn span_frames(start_s: f64, end_s: f64, fr: f64) -> core::ops::Range<usize> {
    const TOL: f64 = 1e-9;
    let lo = libm::ceil(start_s * fr - TOL).max(0.0) as usize;
    let hi = libm::ceil(end_s * fr - TOL).max(0.0) as usize;
    lo..hi.max(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn no_peaks_all_quiet() {
        let l = derive_frame_labels(&[], 300, 100).unwrap();
        assert_eq!(l.len(), 300);
        assert_eq!(l.positives(), 0);
    }

    #[test]
    fn one_peak_spans() {
        let l = derive_frame_labels(&[1.0], 300, 100).unwrap();
        let sound: Vec<usize> = (0..300).filter(|&k| l.0[k]).collect();
        let expected: Vec<usize> = (100..=112).chain(125..=134).collect();
        assert_eq!(sound, expected);
    }

    #[test]
    fn sound_fraction_at_70_bpm() {
        let period = 60.0 / 70.0;
        let peaks: Vec<f64> = (0..11).map(|i| i as f64 * period).filter(|&t| t < 10.0).collect();
        let l = derive_frame_labels(&peaks, 1000, 100).unwrap();
        let frac = l.positives() as f64 / 1000.0;
        let expected = (0.122 + 0.092) / period;
        assert!((frac - expected).abs() < 0.02, "{frac} vs {expected}");
    }

    #[test]
    fn unsorted_and_out_of_range() {
        assert_eq!(
            derive_frame_labels(&[2.0, 1.0], 300, 100),
            Err(ForestError::UnsortedPeaks)
        );
        assert_eq!(
            derive_frame_labels(&[3.5], 300, 100),
            Err(ForestError::PeakOutOfRange { time_s: 3.5 })
        );
    }

    #[test]
    fn emission_series_bounds() {
        assert!(EmissionSeries::new(vec![0.0]).is_none());
        assert!(EmissionSeries::new(vec![0.001, 0.999]).is_some());
        let c = EmissionSeries::clamped(vec![-1.0, 2.0, f64::NAN, 0.4]);
        assert_eq!(c.probs(), &[0.001, 0.999, 0.5, 0.4]);
    }
}
