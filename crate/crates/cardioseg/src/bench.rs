//! Per-stage latency on one second of synthetic audio.

use std::time::Instant;

use cardioseg_core::emission::{derive_frame_labels, predict_emissions, train_forest, FrameLabels};
use cardioseg_core::eval::median;
use cardioseg_core::features::FeatureExtractor;
use cardioseg_core::synth::{generate, SynthConfig};
use cardioseg_core::{extract_features, hsmm_decode, DurationModel, FeatureMatrix, ForestModel};

use crate::Error;

pub const MIN_REPS: usize = 30;

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub reps: usize,
    pub seed: u64,
    pub durations: DurationModel,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            reps: 100,
            seed: 0,
            durations: DurationModel::default(),
        }
    }
}

/// Median wall time per stage for one second of audio, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyReport {
    pub features_ms: f64,
    pub emissions_ms: f64,
    pub viterbi_ms: f64,
    pub total_ms: f64,
    pub reps: usize,
    pub frames: usize,
}

impl LatencyReport {
    pub fn rows(&self) -> [(&'static str, f64); 6] {
        [
            ("features_ms", self.features_ms),
            ("emissions_ms", self.emissions_ms),
            ("viterbi_ms", self.viterbi_ms),
            ("total_ms", self.total_ms),
            ("reps", self.reps as f64),
            ("frames", self.frames as f64),
        ]
    }
}

fn ms(a: Instant, b: Instant) -> f64 {
    (b - a).as_secs_f64() * 1e3
}

/// Times features, emissions and decoding over at least [`MIN_REPS`]
/// repetitions. `total_ms` is the median of per-repetition totals.
pub fn bench(model: &ForestModel, cfg: &BenchConfig) -> Result<LatencyReport, Error> {
    let audio = generate(&SynthConfig {
        duration_s: 1.0,
        seed: cfg.seed,
        ..SynthConfig::default()
    })?
    .audio;
    let extractor = FeatureExtractor::new();
    let reps = cfg.reps.max(MIN_REPS);
    let mut t = [const { Vec::new() }; 4];
    let mut frames = 0;
    for _ in 0..reps {
        let t0 = Instant::now();
        let fm = extractor.extract(&audio)?;
        let t1 = Instant::now();
        let em = predict_emissions(model, &fm);
        let t2 = Instant::now();
        let decoded = hsmm_decode(&em, &cfg.durations)?;
        let t3 = Instant::now();
        frames = std::hint::black_box(decoded).states.len();
        t[0].push(ms(t0, t1));
        t[1].push(ms(t1, t2));
        t[2].push(ms(t2, t3));
        t[3].push(ms(t0, t3));
    }
    let [f, e, v, total] = t.map(|mut x| median(&mut x));
    Ok(LatencyReport {
        features_ms: f,
        emissions_ms: e,
        viterbi_ms: v,
        total_ms: total,
        reps,
        frames,
    })
}

/// Forest trained on two synthetic minutes, for benchmarking without a
/// model file.
pub fn synthetic_model(seed: u64) -> Result<ForestModel, Error> {
    let mut frames = Vec::new();
    let mut labels = Vec::new();
    for (k, bpm) in [65.0, 90.0].into_iter().enumerate() {
        let rec = generate(&SynthConfig {
            mean_bpm: bpm,
            seed: seed.wrapping_add(k as u64),
            ..SynthConfig::default()
        })?;
        let fm = extract_features(&rec.audio)?;
        labels.extend(derive_frame_labels(&rec.rpeak_times_s, fm.len(), 100).map_err(Error::Train)?.0);
        frames.extend(fm.into_frames());
    }
    let fm = FeatureMatrix::from_frames(frames).expect("non-empty");
    train_forest(&fm, &FrameLabels(labels), seed).map_err(Error::Train)
}
