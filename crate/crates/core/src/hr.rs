//! Heart rate and heart rate variability from decoded state labels.

use alloc::vec::Vec;
use core::fmt;

use crate::hsmm::{CardiacState, StateSequence};

#[derive(Debug, Clone, PartialEq)]
pub enum HrError {
    NoBeats,
    /// Every candidate interval failed the local-mean test.
    AllRejected,
    EmptyInput,
    BadAlpha,
    BadConfig(&'static str),
}

impl fmt::Display for HrError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HrError::NoBeats => f.write_str("not enough beats"),
            HrError::AllRejected => f.write_str("all inter-beat intervals rejected as outliers"),
            HrError::EmptyInput => f.write_str("empty input series"),
            HrError::BadAlpha => f.write_str("smoothing factor must be in (0, 1]"),
            HrError::BadConfig(why) => write!(f, "invalid Kalman config: {why}"),
        }
    }
}

impl core::error::Error for HrError {}

/// S1 onsets and the intervals between them, in frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeatSeries {
    pub s1_onsets: Vec<usize>,
    pub deltas: Vec<usize>,
    pub frame_rate_hz: u32,
}

impl BeatSeries {
    pub fn from_onsets(s1_onsets: Vec<usize>, frame_rate_hz: u32) -> Self {
        let deltas = s1_onsets.windows(2).map(|w| w[1] - w[0]).collect();
        Self {
            s1_onsets,
            deltas,
            frame_rate_hz,
        }
    }

    /// Onset times in seconds.
    pub fn onset_times_s(&self) -> impl Iterator<Item = f64> + '_ {
        let fr = self.frame_rate_hz as f64;
        self.s1_onsets.iter().map(move |&o| o as f64 / fr)
    }
}

/// Frames where an S1 run begins. A leading S1 run at frame 0 counts.
pub fn find_beats(labels: &StateSequence) -> BeatSeries {
    let l = labels.labels();
    let onsets = (0..l.len())
        .filter(|&t| l[t] == CardiacState::S1 && (t == 0 || l[t - 1] != CardiacState::S1))
        .collect();
    BeatSeries::from_onsets(onsets, labels.frame_rate_hz())
}

/// Scalar random-walk Kalman filter parameters, in BPM units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanConfig {
    /// BPM^2 added per beat.
    pub process_variance: f64,
    pub measurement_variance: f64,
    /// Variance attached to the first measurement.
    pub initial_variance: f64,
}

impl Default for KalmanConfig {
    fn default() -> Self {
        Self {
            process_variance: 0.1,
            measurement_variance: 4.0,
            initial_variance: 100.0,
        }
    }
}

impl KalmanConfig {
    pub fn validate(&self) -> Result<(), HrError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.process_variance) {
            return Err(HrError::BadConfig("process variance must be positive"));
        }
        if !ok(self.measurement_variance) {
            return Err(HrError::BadConfig("measurement variance must be positive"));
        }
        if !ok(self.initial_variance) {
            return Err(HrError::BadConfig("initial variance must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KalmanFilter {
    cfg: KalmanConfig,
    state: Option<(f64, f64)>,
}

impl KalmanFilter {
    pub fn new(cfg: KalmanConfig) -> Self {
        Self { cfg, state: None }
    }

    /// Feeds one measurement and returns the posterior estimate. The first
    /// measurement initializes the state.
    pub fn update(&mut self, z: f64) -> f64 {
        let (x, p) = match self.state {
            None => (z, self.cfg.initial_variance),
            Some((x, p)) => {
                let prior = p + self.cfg.process_variance;
                let gain = prior / (prior + self.cfg.measurement_variance);
                (x + gain * (z - x), (1.0 - gain) * prior)
            }
        };
        self.state = Some((x, p));
        x
    }

    pub fn variance(&self) -> Option<f64> {
        self.state.map(|s| s.1)
    }
}

/// Per-beat heart rate, one value per inter-beat interval.
#[derive(Debug, Clone, PartialEq)]
pub struct HrEstimate {
    pub raw_bpm: Vec<f64>,
    pub filtered_bpm: Vec<f64>,
    /// Time of the beat closing each interval, in seconds.
    pub times_s: Vec<f64>,
}

pub fn estimate_heart_rate(beats: &BeatSeries, cfg: &KalmanConfig) -> Result<HrEstimate, HrError> {
    cfg.validate()?;
    if beats.deltas.is_empty() {
        return Err(HrError::NoBeats);
    }
    let fr = beats.frame_rate_hz as f64;
    let raw_bpm: Vec<f64> = beats.deltas.iter().map(|&d| 60.0 / (d as f64 / fr)).collect();
    let mut kf = KalmanFilter::new(*cfg);
    let filtered_bpm = raw_bpm.iter().map(|&z| kf.update(z)).collect();
    let times_s = beats.s1_onsets[1..].iter().map(|&o| o as f64 / fr).collect();
    Ok(HrEstimate {
        raw_bpm,
        filtered_bpm,
        times_s,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HrvEstimate {
    /// Population standard deviation of retained intervals, ms.
    pub value_ms: f64,
    pub retained_count: usize,
    pub rejected_count: usize,
}

/// Relative deviation from the local mean beyond which an interval is rejected.
pub const OUTLIER_FRACTION: f64 = 0.3;
/// Number of preceding intervals in the local mean.
pub const LOCAL_WINDOW: usize = 4;

pub fn estimate_hrv(beats: &BeatSeries) -> Result<HrvEstimate, HrError> {
    let ms_per_frame = 1000.0 / beats.frame_rate_hz as f64;
    let deltas: Vec<f64> = beats.deltas.iter().map(|&d| d as f64).collect();
    hrv_from_intervals(&deltas).map(|mut h| {
        h.value_ms *= ms_per_frame;
        h
    })
}

/// Local-mean outlier rejection followed by the population standard
/// deviation, in the units of `deltas`. `deltas[0]` only seeds the window.
pub fn hrv_from_intervals(deltas: &[f64]) -> Result<HrvEstimate, HrError> {
    if deltas.len() < 2 {
        return Err(HrError::NoBeats);
    }
    let mut retained = Vec::with_capacity(deltas.len());
    for i in 1..deltas.len() {
        let window = &deltas[i.saturating_sub(LOCAL_WINDOW)..i];
        let m = window.iter().sum::<f64>() / window.len() as f64;
        let d = deltas[i];
        if m * (1.0 - OUTLIER_FRACTION) <= d && d <= m * (1.0 + OUTLIER_FRACTION) {
            retained.push(d);
        }
    }
    if retained.is_empty() {
        return Err(HrError::AllRejected);
    }
    let n = retained.len() as f64;
    let mean = retained.iter().sum::<f64>() / n;
    let var = retained.iter().map(|&d| (d - mean) * (d - mean)).sum::<f64>() / n;
    Ok(HrvEstimate {
        value_ms: libm::sqrt(var),
        retained_count: retained.len(),
        rejected_count: deltas.len() - 1 - retained.len(),
    })
}

/// `s(0) = x(0)`, `s(t) = alpha * x(t) + (1 - alpha) * s(t - 1)`.
pub fn smooth_ground_truth(raw: &[f64], alpha: f64) -> Result<Vec<f64>, HrError> {
    if raw.is_empty() {
        return Err(HrError::EmptyInput);
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(HrError::BadAlpha);
    }
    let mut out = Vec::with_capacity(raw.len());
    let mut s = raw[0];
    out.push(s);
    for &x in &raw[1..] {
        // clamp away rounding so the output never leaves [min(s, x), max(s, x)]
        s = (alpha * x + (1.0 - alpha) * s).clamp(s.min(x), s.max(x));
        out.push(s);
    }
    Ok(out)
}

/// Smoothing factor applied to reference heart rate.
pub const GROUND_TRUTH_ALPHA: f64 = 0.075;
