//! Synthetic phonocardiogram generator with exact ground truth.
//!
//! Each beat lays down an S1 burst at its R-peak and a quieter S2 burst
//! after the default systole, both Gaussian-envelope sinusoids with the
//! default S1/S2 durations. Noise is scaled so the realized signal-to-noise
//! ratio equals the configured value exactly, then the mixture is peak
//! normalized.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::emission::span_frames;
use crate::features::{frame_count, AudioSegment, FRAME_RATE_HZ, SAMPLE_RATE_HZ};
use crate::hsmm::{
    CardiacState, StateSequence, S1_MEAN_S, S2_MEAN_S, SYSTOLE_MEAN_S,
};

/// Peak absolute amplitude after normalization.
pub const PEAK_AMPLITUDE: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub enum SynthError {
    BadConfig(&'static str),
}

impl fmt::Display for SynthError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthError::BadConfig(why) => write!(f, "invalid synth config: {why}"),
        }
    }
}

impl core::error::Error for SynthError {}

/// Spectral shape of the additive noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseProfile {
    #[default]
    White,
    /// Sustained tones with slow amplitude swells.
    Music,
    /// Band-limited noise gated at a syllable rate.
    Speech,
    /// Low-frequency thumps at walking cadence.
    Footsteps,
}

impl NoiseProfile {
    pub fn name(self) -> &'static str {
        match self {
            NoiseProfile::White => "white",
            NoiseProfile::Music => "music",
            NoiseProfile::Speech => "speech",
            NoiseProfile::Footsteps => "footsteps",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [Self::White, Self::Music, Self::Speech, Self::Footsteps]
            .into_iter()
            .find(|p| p.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub duration_s: f64,
    pub mean_bpm: f64,
    /// Standard deviation of each inter-beat interval, ms.
    pub bpm_jitter_std_ms: f64,
    pub snr_db: f64,
    pub s1_carrier_hz: f64,
    pub s2_carrier_hz: f64,
    /// S2 amplitude relative to S1.
    pub s2_amplitude_ratio: f64,
    pub noise: NoiseProfile,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            duration_s: 60.0,
            mean_bpm: 70.0,
            bpm_jitter_std_ms: 20.0,
            snr_db: 20.0,
            s1_carrier_hz: 50.0,
            s2_carrier_hz: 70.0,
            s2_amplitude_ratio: 0.5,
            noise: NoiseProfile::White,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |why| Err(SynthError::BadConfig(why));
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return bad("duration must be positive");
        }
        if !(30.0..=220.0).contains(&self.mean_bpm) {
            return bad("mean BPM must be within [30, 220]");
        }
        if !(self.bpm_jitter_std_ms.is_finite() && self.bpm_jitter_std_ms >= 0.0) {
            return bad("jitter must be non-negative");
        }
        if !self.snr_db.is_finite() {
            return bad("SNR must be finite");
        }
        if !(self.s2_amplitude_ratio > 0.0 && self.s2_amplitude_ratio <= 1.0) {
            return bad("S2 amplitude ratio must be in (0, 1]");
        }
        let nyquist = SAMPLE_RATE_HZ as f64 / 2.0;
        for c in [self.s1_carrier_hz, self.s2_carrier_hz] {
            if !(c > 0.0 && c < nyquist) {
                return bad("carrier must lie between 0 Hz and Nyquist");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthRecord {
    pub audio: AudioSegment,
    /// Heart-sound component of `audio`, after the same normalization.
    pub clean: Vec<f64>,
    pub rpeak_times_s: Vec<f64>,
    pub true_states: StateSequence,
    /// Intervals between consecutive entries of `rpeak_times_s`.
    pub true_deltas_ms: Vec<f64>,
}

impl SynthRecord {
    /// `10 log10(P_clean / P_noise)` of the generated audio.
    pub fn measured_snr_db(&self) -> f64 {
        let ps: f64 = self.clean.iter().map(|x| x * x).sum();
        let pn: f64 = self
            .audio
            .samples()
            .iter()
            .zip(&self.clean)
            .map(|(a, c)| (a - c) * (a - c))
            .sum();
        10.0 * libm::log10(ps / pn)
    }
}

/// Shortest allowed interval: the sound span plus one frame.
fn min_interval_s() -> f64 {
    S1_MEAN_S + SYSTOLE_MEAN_S + S2_MEAN_S + 1.0 / FRAME_RATE_HZ as f64
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthRecord, SynthError> {
    cfg.validate()?;
    let fs = SAMPLE_RATE_HZ as f64;
    let n = libm::round(cfg.duration_s * fs) as usize;
    if n == 0 {
        return Err(SynthError::BadConfig("duration shorter than one sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let period_ms = 60_000.0 / cfg.mean_bpm;
    let interval_dist = Normal::new(period_ms, cfg.bpm_jitter_std_ms)
        .map_err(|_| SynthError::BadConfig("jitter must be finite"))?;
    let floor_ms = min_interval_s() * 1000.0;
    let draw_interval = |rng: &mut ChaCha8Rng| interval_dist.sample(rng).max(floor_ms);

    // a virtual beat before t = 0 keeps the leading frames in a real phase
    let first = rng.random::<f64>() * period_ms / 1000.0;
    let lead_ms = draw_interval(&mut rng);
    let mut beats = vec![first - lead_ms / 1000.0];
    let mut rpeaks = Vec::new();
    let mut deltas_ms = Vec::new();
    let mut t = first;
    while t < cfg.duration_s {
        rpeaks.push(t);
        beats.push(t);
        let d = draw_interval(&mut rng);
        let next = t + d / 1000.0;
        if next < cfg.duration_s {
            deltas_ms.push(d);
        }
        t = next;
    }

    let mut clean = vec![0.0; n];
    let s2_start = S1_MEAN_S + SYSTOLE_MEAN_S;
    for &r in &beats {
        add_burst(&mut clean, fs, r, S1_MEAN_S, cfg.s1_carrier_hz, 1.0);
        add_burst(
            &mut clean,
            fs,
            r + s2_start,
            S2_MEAN_S,
            cfg.s2_carrier_hz,
            cfg.s2_amplitude_ratio,
        );
    }

    let mut noise = noise_samples(cfg.noise, n, fs, &mut rng);
    let ps = mean_square(&clean);
    let pn = mean_square(&noise);
    let target = ps / libm::pow(10.0, cfg.snr_db / 10.0);
    let gain = if pn > 0.0 { libm::sqrt(target / pn) } else { 0.0 };
    noise.iter_mut().for_each(|v| *v *= gain);

    let mut mix: Vec<f64> = clean.iter().zip(&noise).map(|(c, v)| c + v).collect();
    let peak = mix.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        let k = PEAK_AMPLITUDE / peak;
        mix.iter_mut().for_each(|v| *v *= k);
        clean.iter_mut().for_each(|v| *v *= k);
    }
    let audio = AudioSegment::new(mix, SAMPLE_RATE_HZ)
        .map_err(|_| SynthError::BadConfig("generated audio out of range"))?;
    let true_states = label_states(&beats, frame_count(n));
    Ok(SynthRecord {
        audio,
        clean,
        rpeak_times_s: rpeaks,
        true_states,
        true_deltas_ms: deltas_ms,
    })
}

fn mean_square(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

/// Gaussian-envelope sinusoid over `[start, start + dur)`.
fn add_burst(out: &mut [f64], fs: f64, start: f64, dur: f64, carrier: f64, amp: f64) {
    let center = start + dur / 2.0;
    let width = dur / 4.0;
    let lo = libm::ceil(start * fs).max(0.0) as usize;
    let hi = (libm::ceil((start + dur) * fs).max(0.0) as usize).min(out.len());
    for (i, slot) in out.iter_mut().enumerate().take(hi).skip(lo) {
        let t = i as f64 / fs;
        let z = (t - center) / width;
        *slot += amp * libm::exp(-0.5 * z * z) * libm::sin(2.0 * PI * carrier * (t - start));
    }
}

fn noise_samples(profile: NoiseProfile, n: usize, fs: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let white = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
    match profile {
        NoiseProfile::White => (0..n).map(|_| white(rng)).collect(),
        NoiseProfile::Music => {
            let tones = [82.4, 123.5, 164.8, 207.7];
            let phases: Vec<f64> = tones.iter().map(|_| rng.random::<f64>() * 2.0 * PI).collect();
            (0..n)
                .map(|i| {
                    let t = i as f64 / fs;
                    let swell = 0.6 + 0.4 * libm::sin(2.0 * PI * 0.5 * t);
                    let tone: f64 = tones
                        .iter()
                        .zip(&phases)
                        .map(|(f, p)| libm::sin(2.0 * PI * f * t + p))
                        .sum();
                    swell * tone + 0.1 * white(rng)
                })
                .collect()
        }
        NoiseProfile::Speech => {
            // first difference pushes the white spectrum toward high frequencies
            let mut prev = 0.0;
            (0..n)
                .map(|i| {
                    let t = i as f64 / fs;
                    let w = white(rng);
                    let hp = w - prev;
                    prev = w;
                    let gate = libm::sin(2.0 * PI * 4.0 * t).max(0.0);
                    gate * hp
                })
                .collect()
        }
        NoiseProfile::Footsteps => {
            let step_period = 0.55;
            let offset = rng.random::<f64>() * step_period;
            (0..n)
                .map(|i| {
                    let t = i as f64 / fs;
                    let since = libm::fmod(t + step_period - offset, step_period);
                    let thump = libm::exp(-since / 0.03) * libm::sin(2.0 * PI * 20.0 * since);
                    thump + 0.05 * white(rng)
                })
                .collect()
        }
    }
}

fn label_states(beats: &[f64], num_frames: usize) -> StateSequence {
    let fr = FRAME_RATE_HZ as f64;
    let mut labels = vec![CardiacState::Diastole; num_frames];
    let sys_end = S1_MEAN_S + SYSTOLE_MEAN_S;
    let s2_end = sys_end + S2_MEAN_S;
    for &r in beats {
        for (state, a, b) in [
            (CardiacState::S1, r, r + S1_MEAN_S),
            (CardiacState::Systole, r + S1_MEAN_S, r + sys_end),
            (CardiacState::S2, r + sys_end, r + s2_end),
        ] {
            for k in span_frames(a, b, fr) {
                if let Some(slot) = labels.get_mut(k) {
                    *slot = state;
                }
            }
        }
    }
    StateSequence::new(labels, FRAME_RATE_HZ)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(seed: u64) -> SynthConfig {
        SynthConfig {
            duration_s: 10.0,
            mean_bpm: 60.0,
            bpm_jitter_std_ms: 0.0,
            snr_db: 40.0,
            seed,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn jitter_free_peaks() {
        let rec = generate(&cfg(1)).unwrap();
        let n = rec.rpeak_times_s.len();
        assert!(n == 10 || n == 11, "{n}");
        for w in rec.rpeak_times_s.windows(2) {
            assert!((w[1] - w[0] - 1.0).abs() < 1e-9);
        }
        assert_eq!(rec.true_deltas_ms.len(), n - 1);
        assert!(rec.true_deltas_ms.iter().all(|&d| d == 1000.0));
    }

    #[test]
    fn deterministic() {
        assert_eq!(generate(&cfg(3)).unwrap(), generate(&cfg(3)).unwrap());
        assert_ne!(
            generate(&cfg(3)).unwrap().audio,
            generate(&cfg(4)).unwrap().audio
        );
    }

    #[test]
    fn snr_exact_for_every_profile() {
        for noise in [
            NoiseProfile::White,
            NoiseProfile::Music,
            NoiseProfile::Speech,
            NoiseProfile::Footsteps,
        ] {
            for snr in [-20.0, 0.0, 20.0] {
                let rec = generate(&SynthConfig {
                    snr_db: snr,
                    noise,
                    ..cfg(5)
                })
                .unwrap();
                assert!((rec.measured_snr_db() - snr).abs() < 0.5, "{noise:?} {snr}");
                assert!(rec.audio.samples().iter().all(|v| v.abs() <= 1.0));
            }
        }
    }

    #[test]
    fn states_consistent_with_peaks() {
        let rec = generate(&SynthConfig {
            bpm_jitter_std_ms: 40.0,
            mean_bpm: 75.0,
            ..cfg(8)
        })
        .unwrap();
        rec.true_states.check_cyclic().unwrap();
        let runs = rec.true_states.runs();
        for &r in &rec.rpeak_times_s {
            let frame = r * 100.0;
            assert!(
                runs.iter()
                    .any(|run| run.state == CardiacState::S1
                        && (run.start as f64 - frame).abs() <= 1.0),
                "peak at {r}"
            );
        }
    }

    #[test]
    fn rejects_bad_config() {
        for bad in [
            SynthConfig { duration_s: 0.0, ..cfg(0) },
            SynthConfig { mean_bpm: 10.0, ..cfg(0) },
            SynthConfig { snr_db: f64::NAN, ..cfg(0) },
            SynthConfig { s2_amplitude_ratio: 0.0, ..cfg(0) },
            SynthConfig { s1_carrier_hz: 300.0, ..cfg(0) },
        ] {
            assert!(matches!(generate(&bad), Err(SynthError::BadConfig(_))));
        }
    }
}
