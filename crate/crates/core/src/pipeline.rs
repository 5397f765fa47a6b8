//! Audio to state labels, and reference series for evaluation.

use alloc::vec::Vec;
use core::fmt;

use crate::emission::{predict_emissions, EmissionSeries, ForestModel};
use crate::features::{AudioSegment, FeatureError, FeatureExtractor};
use crate::hr::{hrv_from_intervals, smooth_ground_truth, HrError, HrvEstimate, GROUND_TRUTH_ALPHA};
use crate::hsmm::{hsmm_decode, DecodeError, Decoded, DurationModel};

#[derive(Debug, Clone, PartialEq)]
pub enum SegmentError {
    Features(FeatureError),
    Decode(DecodeError),
}

impl fmt::Display for SegmentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SegmentError::Features(e) => e.fmt(f),
            SegmentError::Decode(e) => e.fmt(f),
        }
    }
}

impl core::error::Error for SegmentError {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            SegmentError::Features(e) => Some(e),
            SegmentError::Decode(e) => Some(e),
        }
    }
}

impl From<FeatureError> for SegmentError {
    fn from(e: FeatureError) -> Self {
        SegmentError::Features(e)
    }
}

impl From<DecodeError> for SegmentError {
    fn from(e: DecodeError) -> Self {
        SegmentError::Decode(e)
    }
}

/// Feature extraction, emission estimation and HSMM decoding.
#[derive(Debug, Clone)]
pub struct Segmenter {
    extractor: FeatureExtractor,
    model: ForestModel,
    durations: DurationModel,
}

impl Segmenter {
    pub fn new(model: ForestModel, durations: DurationModel) -> Self {
        Self {
            extractor: FeatureExtractor::new(),
            model,
            durations,
        }
    }

    pub fn model(&self) -> &ForestModel {
        &self.model
    }

    pub fn durations(&self) -> &DurationModel {
        &self.durations
    }

    pub fn emissions(&self, audio: &AudioSegment) -> Result<EmissionSeries, SegmentError> {
        let features = self.extractor.extract(audio)?;
        Ok(predict_emissions(&self.model, &features))
    }

    pub fn segment(&self, audio: &AudioSegment) -> Result<Decoded, SegmentError> {
        let emissions = self.emissions(audio)?;
        Ok(hsmm_decode(&emissions, &self.durations)?)
    }
}

/// Reference heart rate from R-peaks: per-interval BPM stamped at the later
/// peak, exponentially smoothed.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceHr {
    pub times_s: Vec<f64>,
    pub raw_bpm: Vec<f64>,
    pub smoothed_bpm: Vec<f64>,
}

pub fn reference_hr(rpeak_times_s: &[f64], alpha: f64) -> Result<ReferenceHr, HrError> {
    if rpeak_times_s.len() < 2 {
        return Err(HrError::NoBeats);
    }
    let raw_bpm: Vec<f64> = rpeak_times_s.windows(2).map(|w| 60.0 / (w[1] - w[0])).collect();
    let smoothed_bpm = smooth_ground_truth(&raw_bpm, alpha)?;
    Ok(ReferenceHr {
        times_s: rpeak_times_s[1..].to_vec(),
        raw_bpm,
        smoothed_bpm,
    })
}

/// [`reference_hr`] with the default smoothing factor.
pub fn reference_hr_default(rpeak_times_s: &[f64]) -> Result<ReferenceHr, HrError> {
    reference_hr(rpeak_times_s, GROUND_TRUTH_ALPHA)
}

/// Reference HRV: local-mean outlier rejection on R-peak intervals, in ms.
pub fn reference_hrv(rpeak_times_s: &[f64]) -> Result<HrvEstimate, HrError> {
    let deltas_ms: Vec<f64> = rpeak_times_s
        .windows(2)
        .map(|w| (w[1] - w[0]) * 1000.0)
        .collect();
    hrv_from_intervals(&deltas_ms)
}
