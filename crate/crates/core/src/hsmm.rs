//! Duration-explicit Viterbi decoding of the four-state cardiac cycle.
//!
//! The states follow the fixed cycle S1 -> Systole -> S2 -> Diastole -> S1.
//! Emissions are tied: S1 and S2 frames score `ln p_t`, Systole and
//! Diastole frames score `ln (1 - p_t)`, where `p_t` is the per-frame
//! probability that a heart sound is present. Each run of a state adds the
//! log-mass of its length under a discretized, truncated Gaussian.
//!
//! The first and last runs may be cut by the recording boundaries. Their
//! duration term is the survivor mass `P(len >= observed)` instead of the
//! point mass. A uniform initial prior is a constant and is left out of
//! the reported score.
//!
//! Decoding runs backwards over run start positions, so the arg-max for a
//! tie is picked deterministically: earliest first state in cycle order,
//! then the lexicographically smallest sequence of run lengths. Candidates
//! within [`TIE_EPS`] of the best score count as ties.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::emission::EmissionSeries;

/// Scores closer than this are treated as equal when breaking ties.
pub const TIE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum CardiacState {
    S1 = 0,
    Systole = 1,
    S2 = 2,
    Diastole = 3,
}

impl CardiacState {
    pub const ALL: [CardiacState; 4] = [
        CardiacState::S1,
        CardiacState::Systole,
        CardiacState::S2,
        CardiacState::Diastole,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Successor in the cardiac cycle.
    pub fn next(self) -> Self {
        Self::ALL[(self.index() + 1) % 4]
    }

    /// S1 and S2 share the "sound present" emission.
    pub fn is_sound(self) -> bool {
        matches!(self, CardiacState::S1 | CardiacState::S2)
    }

    pub fn name(self) -> &'static str {
        match self {
            CardiacState::S1 => "S1",
            CardiacState::Systole => "Systole",
            CardiacState::S2 => "S2",
            CardiacState::Diastole => "Diastole",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }
}

impl fmt::Display for CardiacState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecodeError {
    EmptyInput,
    /// Requested duration outside the state's `[min, max]` frame bounds.
    OutOfRange {
        state: CardiacState,
        length: usize,
    },
    /// Duration parameters violate the model invariants.
    BadDuration {
        state: CardiacState,
        reason: &'static str,
    },
}

impl fmt::Display for DecodeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecodeError::EmptyInput => f.write_str("empty emission series"),
            DecodeError::OutOfRange { state, length } => {
                write!(f, "{state} duration of {length} frames outside model bounds")
            }
            DecodeError::BadDuration { state, reason } => {
                write!(f, "invalid {state} duration model: {reason}")
            }
        }
    }
}

impl core::error::Error for DecodeError {}

/// Residence-time distribution of one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDuration {
    pub mean_s: f64,
    pub std_s: f64,
    pub min_frames: usize,
    pub max_frames: usize,
}

impl StateDuration {
    /// Bounds at mean +/- 3 std on the frame grid, with the minimum floored
    /// at one frame.
    pub fn new(mean_s: f64, std_s: f64, frame_rate_hz: u32) -> Self {
        let fr = frame_rate_hz as f64;
        let lo = libm::ceil((mean_s - 3.0 * std_s) * fr);
        let hi = libm::floor((mean_s + 3.0 * std_s) * fr);
        let min_frames = if lo < 1.0 { 1 } else { lo as usize };
        let max_frames = if hi < min_frames as f64 {
            min_frames
        } else {
            hi as usize
        };
        Self {
            mean_s,
            std_s,
            min_frames,
            max_frames,
        }
    }
}

/// Duration statistics for the four states.
#[derive(Debug, Clone, PartialEq)]
pub struct DurationModel {
    frame_rate_hz: u32,
    states: [StateDuration; 4],
    /// `log_mass[s][len - min]`
    log_mass: [Vec<f64>; 4],
    /// `log_survivor[s][len - 1]` for len in `1..=max`
    log_survivor: [Vec<f64>; 4],
}

/// Default S1 duration (s). Not measured in the source data set.
pub const S1_MEAN_S: f64 = 0.122;
pub const S1_STD_S: f64 = 0.022;
pub const SYSTOLE_MEAN_S: f64 = 0.128;
pub const SYSTOLE_STD_S: f64 = 0.062;
/// Default S2 duration (s). Not measured in the source data set.
pub const S2_MEAN_S: f64 = 0.092;
pub const S2_STD_S: f64 = 0.022;
pub const DIASTOLE_MEAN_S: f64 = 0.356;
pub const DIASTOLE_STD_S: f64 = 0.121;

impl Default for DurationModel {
    fn default() -> Self {
        Self::from_stats(
            crate::features::FRAME_RATE_HZ,
            [
                (S1_MEAN_S, S1_STD_S),
                (SYSTOLE_MEAN_S, SYSTOLE_STD_S),
                (S2_MEAN_S, S2_STD_S),
                (DIASTOLE_MEAN_S, DIASTOLE_STD_S),
            ],
        )
        .expect("default duration model is valid")
    }
}

impl DurationModel {
    /// Builds a model from `(mean_s, std_s)` per state in cycle order, with
    /// bounds derived by [`StateDuration::new`].
    pub fn from_stats(frame_rate_hz: u32, stats: [(f64, f64); 4]) -> Result<Self, DecodeError> {
        let states = stats.map(|(m, s)| StateDuration::new(m, s, frame_rate_hz));
        Self::new(frame_rate_hz, states)
    }

    pub fn new(frame_rate_hz: u32, states: [StateDuration; 4]) -> Result<Self, DecodeError> {
        for (state, d) in CardiacState::ALL.into_iter().zip(states.iter()) {
            let bad = |reason| Err(DecodeError::BadDuration { state, reason });
            if !(d.mean_s.is_finite() && d.mean_s > 0.0) {
                return bad("mean must be positive");
            }
            if !(d.std_s.is_finite() && d.std_s > 0.0) {
                return bad("std must be positive");
            }
            if d.min_frames < 1 {
                return bad("min must be at least one frame");
            }
            if d.max_frames < d.min_frames {
                return bad("max below min");
            }
        }
        if frame_rate_hz == 0 {
            return Err(DecodeError::BadDuration {
                state: CardiacState::S1,
                reason: "frame rate must be positive",
            });
        }
        let fr = frame_rate_hz as f64;
        let log_mass = states.map(|d| {
            let mu = d.mean_s * fr;
            let var = d.std_s * fr * d.std_s * fr;
            let raw: Vec<f64> = (d.min_frames..=d.max_frames)
                .map(|len| {
                    let z = len as f64 - mu;
                    -z * z / (2.0 * var)
                })
                .collect();
            let lse = log_sum_exp(&raw);
            raw.into_iter().map(|v| v - lse).collect::<Vec<_>>()
        });
        let log_survivor = core::array::from_fn(|s| {
            let d = &states[s];
            let masses = &log_mass[s];
            let mut out = vec![0.0; d.max_frames];
            // survivor(len) = sum over l >= len of mass(l); exactly 1 below min
            let mut tail: Vec<f64> = Vec::with_capacity(masses.len());
            for len in (d.min_frames..=d.max_frames).rev() {
                tail.push(masses[len - d.min_frames]);
                out[len - 1] = if len == d.min_frames {
                    0.0
                } else {
                    log_sum_exp(&tail).min(0.0)
                };
            }
            out
        });
        Ok(Self {
            frame_rate_hz,
            states,
            log_mass,
            log_survivor,
        })
    }

    /// Replaces one state's frame bounds, keeping its mean and std.
    pub fn with_bounds(
        &self,
        state: CardiacState,
        min_frames: usize,
        max_frames: usize,
    ) -> Result<Self, DecodeError> {
        let mut states = self.states;
        states[state.index()].min_frames = min_frames;
        states[state.index()].max_frames = max_frames;
        Self::new(self.frame_rate_hz, states)
    }

    pub fn frame_rate_hz(&self) -> u32 {
        self.frame_rate_hz
    }

    pub fn state(&self, state: CardiacState) -> &StateDuration {
        &self.states[state.index()]
    }

    pub fn states(&self) -> &[StateDuration; 4] {
        &self.states
    }

    pub fn max_frames(&self) -> usize {
        self.states.iter().map(|d| d.max_frames).max().unwrap_or(1)
    }

    /// Log-probability of a complete run of `length` frames.
    pub fn log_mass(&self, state: CardiacState, length: usize) -> Result<f64, DecodeError> {
        let d = &self.states[state.index()];
        if length < d.min_frames || length > d.max_frames {
            return Err(DecodeError::OutOfRange { state, length });
        }
        Ok(self.log_mass[state.index()][length - d.min_frames])
    }

    /// Log of `P(len >= length)`; `-inf` past the maximum, 0 for `length <= min`.
    pub fn log_survivor(&self, state: CardiacState, length: usize) -> f64 {
        let d = &self.states[state.index()];
        if length == 0 {
            0.0
        } else if length > d.max_frames {
            f64::NEG_INFINITY
        } else {
            self.log_survivor[state.index()][length - 1]
        }
    }

    /// Most likely complete run length of `state`.
    pub fn modal_frames(&self, state: CardiacState) -> usize {
        let d = &self.states[state.index()];
        let masses = &self.log_mass[state.index()];
        let mut best = 0;
        for (i, &m) in masses.iter().enumerate() {
            if m > masses[best] {
                best = i;
            }
        }
        d.min_frames + best
    }
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let sum: f64 = values.iter().map(|&v| libm::exp(v - max)).sum();
    max + libm::log(sum)
}

/// A maximal run of one state: frames `start..start + len`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Run {
    pub state: CardiacState,
    pub start: usize,
    pub len: usize,
}

/// Per-frame cardiac state labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSequence {
    labels: Vec<CardiacState>,
    frame_rate_hz: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SequenceViolation {
    /// Run at `frame` does not follow its predecessor in the cycle.
    CycleOrder { frame: usize },
    /// Interior run length outside the state's bounds.
    Duration { frame: usize, len: usize },
    /// Boundary run longer than the state's maximum.
    BoundaryTooLong { frame: usize, len: usize },
}

impl StateSequence {
    pub fn new(labels: Vec<CardiacState>, frame_rate_hz: u32) -> Self {
        Self {
            labels,
            frame_rate_hz,
        }
    }

    pub fn labels(&self) -> &[CardiacState] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn frame_rate_hz(&self) -> u32 {
        self.frame_rate_hz
    }

    pub fn into_labels(self) -> Vec<CardiacState> {
        self.labels
    }

    pub fn runs(&self) -> Vec<Run> {
        runs_of(&self.labels)
    }

    /// Checks cycle order only.
    pub fn check_cyclic(&self) -> Result<(), SequenceViolation> {
        let runs = self.runs();
        for w in runs.windows(2) {
            if w[1].state != w[0].state.next() {
                return Err(SequenceViolation::CycleOrder { frame: w[1].start });
            }
        }
        Ok(())
    }

    /// Checks cycle order and run lengths against `durations`. Interior runs
    /// must lie within `[min, max]`; the first and last runs only need to be
    /// at most `max`.
    pub fn validate(&self, durations: &DurationModel) -> Result<(), SequenceViolation> {
        self.check_cyclic()?;
        let runs = self.runs();
        let last = runs.len().saturating_sub(1);
        for (i, r) in runs.iter().enumerate() {
            let d = durations.state(r.state);
            if i == 0 || i == last {
                if r.len > d.max_frames {
                    return Err(SequenceViolation::BoundaryTooLong {
                        frame: r.start,
                        len: r.len,
                    });
                }
            } else if r.len < d.min_frames || r.len > d.max_frames {
                return Err(SequenceViolation::Duration {
                    frame: r.start,
                    len: r.len,
                });
            }
        }
        Ok(())
    }
}

pub fn runs_of(labels: &[CardiacState]) -> Vec<Run> {
    let mut runs: Vec<Run> = Vec::new();
    for (t, &s) in labels.iter().enumerate() {
        match runs.last_mut() {
            Some(r) if r.state == s => r.len += 1,
            _ => runs.push(Run {
                state: s,
                start: t,
                len: 1,
            }),
        }
    }
    runs
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub states: StateSequence,
    /// Objective value of the returned path.
    pub score: f64,
}

/// Per-frame log-emissions as prefix sums, so a run's emission term costs O(1).
struct EmissionPrefix {
    sound: Vec<f64>,
    quiet: Vec<f64>,
}

impl EmissionPrefix {
    fn new(probs: &[f64]) -> Self {
        let mut sound = Vec::with_capacity(probs.len() + 1);
        let mut quiet = Vec::with_capacity(probs.len() + 1);
        let (mut a, mut b) = (0.0, 0.0);
        sound.push(a);
        quiet.push(b);
        for &p in probs {
            a += libm::log(p);
            b += libm::log(1.0 - p);
            sound.push(a);
            quiet.push(b);
        }
        Self { sound, quiet }
    }

    #[inline]
    fn run(&self, state: CardiacState, start: usize, end: usize) -> f64 {
        if state.is_sound() {
            self.sound[end] - self.sound[start]
        } else {
            self.quiet[end] - self.quiet[start]
        }
    }
}

/// Most likely state sequence for `emissions` under `durations`.
///
/// Runs in `O(T * 4 * max_duration)` time and `O(T)` memory.
pub fn hsmm_decode(
    emissions: &EmissionSeries,
    durations: &DurationModel,
) -> Result<Decoded, DecodeError> {
    let probs = emissions.probs();
    let t_len = probs.len();
    if t_len == 0 {
        return Err(DecodeError::EmptyInput);
    }
    let em = EmissionPrefix::new(probs);

    // best[t][s]: best score of frames t.. given a non-first run of s starts at t
    // choice[t][s]: length of that run
    let mut best = vec![[f64::NEG_INFINITY; 4]; t_len];
    let mut choice = vec![[0usize; 4]; t_len];
    let mut cand: Vec<f64> = Vec::with_capacity(durations.max_frames() + 1);

    for t in (1..t_len).rev() {
        let remaining = t_len - t;
        for state in CardiacState::ALL {
            let s = state.index();
            let d = durations.state(state);
            let next = state.next().index();
            cand.clear();
            // interior runs, lengths min..=max that leave room for a successor
            let hi = d.max_frames.min(remaining - 1);
            for len in d.min_frames..hi + 1 {
                let mass = durations.log_mass[s][len - d.min_frames];
                cand.push(em.run(state, t, t + len) + mass + best[t + len][next]);
            }
            let interior = cand.len();
            // the run reaches the end of the recording
            let tail = durations.log_survivor(state, remaining);
            let tail_score = if tail == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                em.run(state, t, t_len) + tail
            };
            let (idx, score) = pick(&cand, tail_score);
            best[t][s] = score;
            choice[t][s] = if idx < interior {
                d.min_frames + idx
            } else {
                remaining
            };
        }
    }

    // first run starts at frame 0 and may be truncated on the left
    let mut first: Vec<(CardiacState, usize, f64)> = Vec::new();
    for state in CardiacState::ALL {
        let max_len = durations.state(state).max_frames.min(t_len);
        #[allow(clippy::needless_range_loop)]
        for len in 1..=max_len {
            let surv = durations.log_survivor(state, len);
            let rest = if len == t_len {
                0.0
            } else {
                best[len][state.next().index()]
            };
            first.push((state, len, em.run(state, 0, len) + surv + rest));
        }
    }
    let top = first
        .iter()
        .map(|c| c.2)
        .fold(f64::NEG_INFINITY, f64::max);
    let &(mut state, len0, score) = first
        .iter()
        .find(|c| c.2 >= top - TIE_EPS)
        .ok_or(DecodeError::EmptyInput)?;

    let mut labels = Vec::with_capacity(t_len);
    labels.extend(core::iter::repeat_n(state, len0));
    let mut t = len0;
    while t < t_len {
        state = state.next();
        let len = choice[t][state.index()];
        labels.extend(core::iter::repeat_n(state, len));
        t += len;
    }
    Ok(Decoded {
        states: StateSequence::new(labels, durations.frame_rate_hz()),
        score,
    })
}

/// Smallest index whose score is within [`TIE_EPS`] of the maximum over
/// `interior` followed by `tail`.
fn pick(interior: &[f64], tail: f64) -> (usize, f64) {
    let top = interior.iter().copied().fold(tail, f64::max);
    for (i, &v) in interior.iter().enumerate() {
        if v >= top - TIE_EPS {
            return (i, v);
        }
    }
    (interior.len(), tail)
}

/// Objective value of `labels` under the decoder's scoring, or `None` if the
/// labeling is not a valid path.
pub fn path_score(
    emissions: &EmissionSeries,
    durations: &DurationModel,
    labels: &StateSequence,
) -> Option<f64> {
    let probs = emissions.probs();
    if probs.len() != labels.len() || labels.is_empty() {
        return None;
    }
    labels.validate(durations).ok()?;
    let runs = labels.runs();
    let last = runs.len() - 1;
    let mut score = 0.0;
    for (i, r) in runs.iter().enumerate() {
        for &p in &probs[r.start..r.start + r.len] {
            score += if r.state.is_sound() {
                libm::log(p)
            } else {
                libm::log(1.0 - p)
            };
        }
        score += if i == 0 || i == last {
            durations.log_survivor(r.state, r.len)
        } else {
            durations.log_mass(r.state, r.len).ok()?
        };
    }
    Some(score)
}
