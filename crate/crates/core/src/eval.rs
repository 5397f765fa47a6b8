//! Accuracy metrics against reference beats.

use alloc::vec::Vec;
use core::fmt;

use crate::hr::{find_beats, HrEstimate, HrvEstimate};
use crate::hsmm::StateSequence;

/// Spacing of the heart-rate comparison grid, s.
pub const HR_GRID_S: f64 = 2.0;
/// Maximum distance between an S1 onset and an R-peak for a match, s.
pub const S1_TOLERANCE_S: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    /// The series share less than one grid step.
    NoOverlap,
    /// Percentage error with a zero reference.
    ZeroTruth,
    LengthMismatch,
    Unsorted,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::NoOverlap => f.write_str("series overlap by less than one grid step"),
            EvalError::ZeroTruth => f.write_str("reference value is zero"),
            EvalError::LengthMismatch => f.write_str("times and values differ in length"),
            EvalError::Unsorted => f.write_str("time stamps are not sorted"),
        }
    }
}

impl core::error::Error for EvalError {}

/// Values stamped with non-decreasing times.
#[derive(Debug, Clone, Copy)]
pub struct TimedSeries<'a> {
    pub times_s: &'a [f64],
    pub values: &'a [f64],
}

impl<'a> TimedSeries<'a> {
    pub fn new(times_s: &'a [f64], values: &'a [f64]) -> Result<Self, EvalError> {
        if times_s.len() != values.len() {
            return Err(EvalError::LengthMismatch);
        }
        if times_s.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(EvalError::Unsorted);
        }
        Ok(Self { times_s, values })
    }

    /// Filtered estimate stamped at the beat that closes each interval.
    pub fn filtered(est: &'a HrEstimate) -> Result<Self, EvalError> {
        Self::new(&est.times_s, &est.filtered_bpm)
    }

    /// Most recent value at or before `t`.
    fn hold(&self, t: f64) -> Option<f64> {
        let idx = self.times_s.partition_point(|&x| x <= t);
        idx.checked_sub(1).map(|i| self.values[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HrErrorReport {
    pub median_abs_bpm: f64,
    pub mean_abs_bpm: f64,
    pub median_pct: f64,
    pub mean_pct: f64,
    /// Grid points compared.
    pub samples: usize,
}

impl HrErrorReport {
    pub fn rows(&self) -> [(&'static str, f64); 4] {
        [
            ("hr_median_abs_bpm", self.median_abs_bpm),
            ("hr_mean_abs_bpm", self.mean_abs_bpm),
            ("hr_median_pct", self.median_pct),
            ("hr_mean_pct", self.mean_pct),
        ]
    }
}

/// Compares two heart-rate series on a 2 s grid anchored at the start of
/// their overlap, holding each series at its most recent value.
pub fn compare_hr(
    estimate: TimedSeries<'_>,
    truth: TimedSeries<'_>,
) -> Result<HrErrorReport, EvalError> {
    let (Some(&e0), Some(&g0)) = (estimate.times_s.first(), truth.times_s.first()) else {
        return Err(EvalError::NoOverlap);
    };
    let start = e0.max(g0);
    let end = estimate.times_s[estimate.times_s.len() - 1].min(truth.times_s[truth.times_s.len() - 1]);
    if !(end - start >= HR_GRID_S) {
        return Err(EvalError::NoOverlap);
    }
    let mut abs = Vec::new();
    let mut pct = Vec::new();
    let mut k = 0usize;
    loop {
        let t = start + HR_GRID_S * k as f64;
        if t > end {
            break;
        }
        let (Some(e), Some(g)) = (estimate.hold(t), truth.hold(t)) else {
            return Err(EvalError::NoOverlap);
        };
        if g == 0.0 {
            return Err(EvalError::ZeroTruth);
        }
        let err = libm::fabs(e - g);
        abs.push(err);
        pct.push(100.0 * err / libm::fabs(g));
        k += 1;
    }
    Ok(HrErrorReport {
        median_abs_bpm: median(&mut abs.clone()),
        mean_abs_bpm: mean(&abs),
        median_pct: median(&mut pct.clone()),
        mean_pct: mean(&pct),
        samples: abs.len(),
    })
}

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Median; averages the middle pair for even lengths. Sorts `x` in place.
pub fn median(x: &mut [f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    x.sort_by(f64::total_cmp);
    let n = x.len();
    if n % 2 == 1 {
        x[n / 2]
    } else {
        (x[n / 2 - 1] + x[n / 2]) / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentationReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matches: usize,
    pub onsets: usize,
    pub peaks: usize,
}

impl SegmentationReport {
    pub fn rows(&self) -> [(&'static str, f64); 3] {
        [
            ("s1_precision", self.precision),
            ("s1_recall", self.recall),
            ("s1_f1", self.f1),
        ]
    }
}

/// Scores predicted S1 onsets against R-peaks.
pub fn score_s1_localisation(predicted: &StateSequence, rpeak_times_s: &[f64]) -> SegmentationReport {
    let onsets: Vec<f64> = find_beats(predicted).onset_times_s().collect();
    match_events(&onsets, rpeak_times_s, S1_TOLERANCE_S)
}

/// Greedy one-to-one matching of `predicted` to `reference` events: pairs are
/// taken in order of increasing distance, each event used at most once.
/// An empty side yields precision (or recall) 1.
pub fn match_events(predicted: &[f64], reference: &[f64], tolerance_s: f64) -> SegmentationReport {
    const SLACK: f64 = 1e-9;
    let mut sorted_ref: Vec<(f64, usize)> = reference.iter().copied().zip(0..).collect();
    sorted_ref.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, &p) in predicted.iter().enumerate() {
        let lo = sorted_ref.partition_point(|r| r.0 < p - tolerance_s - SLACK);
        for &(r, j) in &sorted_ref[lo..] {
            if r > p + tolerance_s + SLACK {
                break;
            }
            pairs.push((libm::fabs(r - p), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_p = alloc::vec![false; predicted.len()];
    let mut used_r = alloc::vec![false; reference.len()];
    let mut matches = 0;
    for (_, i, j) in pairs {
        if !used_p[i] && !used_r[j] {
            used_p[i] = true;
            used_r[j] = true;
            matches += 1;
        }
    }
    let ratio = |m: usize, n: usize| if n == 0 { 1.0 } else { m as f64 / n as f64 };
    let precision = ratio(matches, predicted.len());
    let recall = ratio(matches, reference.len());
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    SegmentationReport {
        precision,
        recall,
        f1,
        matches,
        onsets: predicted.len(),
        peaks: reference.len(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HrvErrorReport {
    pub abs_ms: f64,
    pub pct: f64,
}

impl HrvErrorReport {
    pub fn rows(&self) -> [(&'static str, f64); 2] {
        [("hrv_abs_ms", self.abs_ms), ("hrv_pct", self.pct)]
    }
}

pub fn compare_hrv(estimated: &HrvEstimate, truth: &HrvEstimate) -> Result<HrvErrorReport, EvalError> {
    if truth.value_ms == 0.0 {
        return Err(EvalError::ZeroTruth);
    }
    let abs_ms = libm::fabs(estimated.value_ms - truth.value_ms);
    Ok(HrvErrorReport {
        abs_ms,
        pct: 100.0 * abs_ms / truth.value_ms,
    })
}
