//! Heart-sound segmentation for continuous phonocardiogram monitoring.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`features`]: log-magnitude STFT features (16-sample Hann window,
//!    hop 5, 9 bins) at 100 frames per second from 500 Hz audio.
//! 2. [`emission`]: a ten-tree random forest estimates, per frame, the
//!    probability that a heart sound is present.
//! 3. [`hsmm`]: duration-explicit Viterbi decoding into the cycle
//!    S1 -> Systole -> S2 -> Diastole.
//! 4. [`hr`]: S1 onsets give inter-beat intervals, a scalar Kalman filter
//!    gives heart rate, and local-mean outlier rejection gives HRV.
//!
//! [`synth`] produces synthetic recordings with exact ground truth and
//! [`eval`] scores estimates against it.
//!
//! The crate is `no_std` and needs only `alloc`.
#![cfg_attr(not(test), no_std)]
// `!(a <= b)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod emission;
pub mod eval;
pub mod features;
pub mod hr;
pub mod hsmm;
pub mod pipeline;
pub mod synth;

pub use emission::{
    deserialize_forest, derive_frame_labels, predict_emissions, serialize_forest, train_forest,
    EmissionSeries, ForestError, ForestModel, FrameLabels,
};
pub use features::{extract_features, AudioSegment, FeatureError, FeatureMatrix};
pub use hr::{
    estimate_heart_rate, estimate_hrv, find_beats, smooth_ground_truth, BeatSeries, HrError,
    HrEstimate, HrvEstimate, KalmanConfig,
};
pub use hsmm::{hsmm_decode, CardiacState, DecodeError, Decoded, DurationModel, StateSequence};
pub use pipeline::{SegmentError, Segmenter};
