//! Log-magnitude STFT features.
//!
//! Audio sampled at 500 Hz is cut into 16-sample frames with a hop of 5
//! samples (100 frames per second). Each frame is weighted with a symmetric
//! Hann window and transformed with an unnormalized 16-point real DFT; the
//! log-magnitudes of bins 0..=8 form the feature vector.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

/// Sample rate the feature definition is built around.
pub const SAMPLE_RATE_HZ: u32 = 500;
/// Window length in samples.
pub const FRAME_LEN: usize = 16;
/// Hop between consecutive frames in samples.
pub const HOP: usize = 5;
/// Bins kept from the real transform (`FRAME_LEN / 2 + 1`).
pub const NUM_BINS: usize = FRAME_LEN / 2 + 1;
/// Frames per second produced at [`SAMPLE_RATE_HZ`].
pub const FRAME_RATE_HZ: u32 = SAMPLE_RATE_HZ / HOP as u32;
/// Magnitudes are clamped here before taking the log.
pub const LOG_FLOOR: f64 = 1e-10;

/// One feature vector.
pub type Frame = [f64; NUM_BINS];

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureError {
    /// Fewer samples than one analysis window.
    TooShort { samples: usize },
    UnsupportedRate { rate_hz: u32 },
    /// A sample was NaN or infinite.
    NonFiniteInput { index: usize },
    /// A finite sample outside [-1, 1].
    OutOfRange { index: usize },
}

impl fmt::Display for FeatureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureError::TooShort { samples } => write!(
                f,
                "audio too short: {samples} samples, need at least {FRAME_LEN}"
            ),
            FeatureError::UnsupportedRate { rate_hz } => write!(
                f,
                "unsupported sample rate {rate_hz} Hz, expected {SAMPLE_RATE_HZ} Hz"
            ),
            FeatureError::NonFiniteInput { index } => {
                write!(f, "non-finite sample at index {index}")
            }
            FeatureError::OutOfRange { index } => {
                write!(f, "sample at index {index} outside [-1, 1]")
            }
        }
    }
}

impl core::error::Error for FeatureError {}

/// Mono PCM audio scaled to [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSegment {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl AudioSegment {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self, FeatureError> {
        if sample_rate_hz == 0 {
            return Err(FeatureError::UnsupportedRate { rate_hz: 0 });
        }
        check_samples(&samples)?;
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    /// Maps signed 16-bit PCM onto [-1, 1) by dividing by 32768.
    pub fn from_pcm16(pcm: &[i16], sample_rate_hz: u32) -> Result<Self, FeatureError> {
        Self::new(pcm.iter().map(|&s| pcm16_to_f64(s)).collect(), sample_rate_hz)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

#[inline]
pub fn pcm16_to_f64(s: i16) -> f64 {
    s as f64 / 32768.0
}

/// Inverse of [`pcm16_to_f64`], rounding and saturating.
#[inline]
pub fn f64_to_pcm16(x: f64) -> i16 {
    let v = libm::round(x * 32768.0);
    v.clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

fn check_samples(samples: &[f64]) -> Result<(), FeatureError> {
    for (index, &s) in samples.iter().enumerate() {
        if !s.is_finite() {
            return Err(FeatureError::NonFiniteInput { index });
        }
        if !(-1.0..=1.0).contains(&s) {
            return Err(FeatureError::OutOfRange { index });
        }
    }
    Ok(())
}

/// Number of complete frames in `num_samples` samples.
pub fn frame_count(num_samples: usize) -> usize {
    if num_samples < FRAME_LEN {
        0
    } else {
        (num_samples - FRAME_LEN) / HOP + 1
    }
}

/// Per-frame feature vectors at [`FRAME_RATE_HZ`].
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    frames: Vec<Frame>,
}

impl FeatureMatrix {
    /// Wraps precomputed frames. Every entry must be finite.
    pub fn from_frames(frames: Vec<Frame>) -> Option<Self> {
        frames
            .iter()
            .all(|f| f.iter().all(|v| v.is_finite()))
            .then_some(Self { frames })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame_rate_hz(&self) -> u32 {
        FRAME_RATE_HZ
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }
}

/// Precomputed window and twiddle factors for the 16-point transform.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    window: [f64; FRAME_LEN],
    cos: [[f64; FRAME_LEN]; NUM_BINS],
    sin: [[f64; FRAME_LEN]; NUM_BINS],
}

impl Default for FeatureExtractor {
    fn default() -> Self {
        Self::new()
    }
}

impl FeatureExtractor {
    pub fn new() -> Self {
        let window = hann_window();
        let mut cos = [[0.0; FRAME_LEN]; NUM_BINS];
        let mut sin = [[0.0; FRAME_LEN]; NUM_BINS];
        for b in 0..NUM_BINS {
            for n in 0..FRAME_LEN {
                // reduce b*n mod N first so the angle stays in [0, 2pi)
                let k = (b * n) % FRAME_LEN;
                let angle = 2.0 * PI * k as f64 / FRAME_LEN as f64;
                cos[b][n] = libm::cos(angle) * window[n];
                sin[b][n] = libm::sin(angle) * window[n];
            }
        }
        Self { window, cos, sin }
    }

    pub fn window(&self) -> &[f64; FRAME_LEN] {
        &self.window
    }

    /// Magnitudes |X_b| for one window of samples.
    pub fn magnitudes(&self, samples: &[f64; FRAME_LEN]) -> Frame {
        let mut out = [0.0; NUM_BINS];
        for (b, slot) in out.iter_mut().enumerate() {
            let mut re = 0.0;
            let mut im = 0.0;
            for (n, &x) in samples.iter().enumerate() {
                re += self.cos[b][n] * x;
                im -= self.sin[b][n] * x;
            }
            *slot = libm::sqrt(re * re + im * im);
        }
        out
    }

    pub fn frame(&self, samples: &[f64; FRAME_LEN]) -> Frame {
        let mut mags = self.magnitudes(samples);
        for m in mags.iter_mut() {
            *m = libm::log(m.max(LOG_FLOOR));
        }
        mags
    }

    /// Features for a raw sample slice. Trailing samples that do not fill
    /// a window are dropped. Samples are assumed finite.
    pub fn extract_slice(&self, samples: &[f64]) -> Vec<Frame> {
        let n = frame_count(samples.len());
        let mut frames = Vec::with_capacity(n);
        let mut buf = [0.0; FRAME_LEN];
        for k in 0..n {
            buf.copy_from_slice(&samples[k * HOP..k * HOP + FRAME_LEN]);
            frames.push(self.frame(&buf));
        }
        frames
    }

    pub fn extract(&self, audio: &AudioSegment) -> Result<FeatureMatrix, FeatureError> {
        if audio.sample_rate_hz() != SAMPLE_RATE_HZ {
            return Err(FeatureError::UnsupportedRate {
                rate_hz: audio.sample_rate_hz(),
            });
        }
        if audio.len() < FRAME_LEN {
            return Err(FeatureError::TooShort {
                samples: audio.len(),
            });
        }
        Ok(FeatureMatrix {
            frames: self.extract_slice(audio.samples()),
        })
    }
}

/// Symmetric Hann window, `0.5 * (1 - cos(2*pi*n / (L - 1)))`.
pub fn hann_window() -> [f64; FRAME_LEN] {
    let mut w = [0.0; FRAME_LEN];
    let denom = (FRAME_LEN - 1) as f64;
    for (n, v) in w.iter_mut().enumerate() {
        *v = 0.5 * (1.0 - libm::cos(2.0 * PI * n as f64 / denom));
    }
    w
}

/// Extracts features with a freshly built [`FeatureExtractor`].
pub fn extract_features(audio: &AudioSegment) -> Result<FeatureMatrix, FeatureError> {
    FeatureExtractor::new().extract(audio)
}
