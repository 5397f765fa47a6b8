//! Slow, independent reference implementations for tests.
//!
//! Nothing here shares code paths with the production implementations beyond
//! plain data types: the decoder oracle enumerates segmentations and derives
//! its own duration masses, and the feature oracle evaluates the DFT sum
//! directly.

use cardioseg_core::hsmm::{CardiacState, DurationModel, TIE_EPS};

/// Hann-weighted 16-point DFT magnitudes by direct summation, bins 0..=8.
pub fn naive_magnitudes(window: &[f64]) -> [f64; 9] {
    assert_eq!(window.len(), 16);
    let mut out = [0.0; 9];
    for (b, slot) in out.iter_mut().enumerate() {
        let (mut re, mut im) = (0.0f64, 0.0f64);
        for (n, &x) in window.iter().enumerate() {
            let w = 0.5 * (1.0 - (2.0 * std::f64::consts::PI * n as f64 / 15.0).cos());
            let angle = -2.0 * std::f64::consts::PI * (b * n) as f64 / 16.0;
            re += w * x * angle.cos();
            im += w * x * angle.sin();
        }
        *slot = (re * re + im * im).sqrt();
    }
    out
}

/// Naive log-magnitude frames, hop 5, floor 1e-10.
pub fn naive_features(samples: &[f64]) -> Vec<[f64; 9]> {
    let mut frames = Vec::new();
    let mut start = 0;
    while start + 16 <= samples.len() {
        let mags = naive_magnitudes(&samples[start..start + 16]);
        frames.push(mags.map(|m| m.max(1e-10).ln()));
        start += 5;
    }
    frames
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleDecode {
    pub labels: Vec<CardiacState>,
    pub score: f64,
    pub first_state: CardiacState,
    pub run_lengths: Vec<usize>,
    /// Complete segmentations scored.
    pub leaves: u64,
}

/// Duration tables rebuilt from the model's parameters.
struct Durations {
    min: [usize; 4],
    max: [usize; 4],
    /// log mass by length, index = length
    mass: [Vec<f64>; 4],
    /// log survivor by length, index = length
    surv: [Vec<f64>; 4],
}

impl Durations {
    fn new(model: &DurationModel) -> Self {
        let fr = model.frame_rate_hz() as f64;
        let mut out = Durations {
            min: [0; 4],
            max: [0; 4],
            mass: Default::default(),
            surv: Default::default(),
        };
        for s in CardiacState::ALL {
            let d = model.state(s);
            let i = s.index();
            let mu = d.mean_s * fr;
            let sd = d.std_s * fr;
            let weights: Vec<f64> = (0..=d.max_frames)
                .map(|l| {
                    if l < d.min_frames {
                        0.0
                    } else {
                        (-(l as f64 - mu).powi(2) / (2.0 * sd * sd)).exp()
                    }
                })
                .collect();
            let z: f64 = weights.iter().sum();
            out.min[i] = d.min_frames;
            out.max[i] = d.max_frames;
            out.mass[i] = weights.iter().map(|w| (w / z).ln()).collect();
            out.surv[i] = (0..=d.max_frames)
                .map(|l| {
                    let tail: f64 = weights[l.max(1)..].iter().sum();
                    (tail / z).ln().min(0.0)
                })
                .collect();
        }
        out
    }
}

struct Search<'a> {
    sound: Vec<f64>,
    quiet: Vec<f64>,
    d: &'a Durations,
    prune: bool,
    /// pass 1: running maximum; pass 2: acceptance threshold
    bound: f64,
    found: Option<(f64, Vec<usize>)>,
    path: Vec<usize>,
    leaves: u64,
    first_pass: bool,
}

impl Search<'_> {
    fn emit(&self, s: CardiacState, t: usize) -> f64 {
        if s.is_sound() {
            self.sound[t]
        } else {
            self.quiet[t]
        }
    }

    fn leaf(&mut self, score: f64) -> bool {
        self.leaves += 1;
        if self.first_pass {
            if score > self.bound {
                self.bound = score;
            }
            false
        } else if score >= self.bound {
            self.found = Some((score, self.path.clone()));
            true
        } else {
            false
        }
    }

    fn pruned(&self, acc: f64) -> bool {
        // every remaining term is <= 0
        self.prune && acc < self.bound - 1e-12
    }

    /// Runs starting at `t` with `state`, not the first run. Returns true to stop.
    fn run_from(&mut self, t: usize, state: CardiacState, acc: f64) -> bool {
        let total = self.sound.len();
        let i = state.index();
        let mut em = 0.0;
        for len in 1..=total - t {
            em += self.emit(state, t + len - 1);
            if len > self.d.max[i] {
                break;
            }
            if t + len < total {
                if len >= self.d.min[i] {
                    let sc = acc + em + self.d.mass[i][len];
                    if self.pruned(sc) {
                        continue;
                    }
                    self.path.push(len);
                    let stop = self.run_from(t + len, state.next(), sc);
                    self.path.pop();
                    if stop {
                        return true;
                    }
                }
            } else {
                let sc = acc + em + self.d.surv[i][len];
                self.path.push(len);
                let stop = self.leaf(sc);
                self.path.pop();
                if stop {
                    return true;
                }
            }
        }
        false
    }

    fn start(&mut self) -> bool {
        let total = self.sound.len();
        for state in CardiacState::ALL {
            let i = state.index();
            let mut em = 0.0;
            for len in 1..=self.d.max[i].min(total) {
                em += self.emit(state, len - 1);
                let sc = em + self.d.surv[i][len];
                self.path.clear();
                self.path.push(state.index());
                self.path.push(len);
                let stop = if len == total {
                    self.leaf(sc)
                } else if self.pruned(sc) {
                    false
                } else {
                    self.run_from(len, state.next(), sc)
                };
                if stop {
                    return true;
                }
            }
        }
        false
    }
}

/// Exhaustive search over every cyclic segmentation of `probs`.
///
/// Picks the maximum score, then the first segmentation in enumeration order
/// (first state, then run lengths ascending) within `TIE_EPS` of it. With
/// `prune`, partial paths that already fall below the bound are skipped;
/// this stays exact because every score term is non-positive.
pub fn brute_force_decode(probs: &[f64], model: &DurationModel, prune: bool) -> OracleDecode {
    assert!(!probs.is_empty());
    let d = Durations::new(model);
    let mut search = Search {
        sound: probs.iter().map(|p| p.ln()).collect(),
        quiet: probs.iter().map(|p| (1.0 - p).ln()).collect(),
        d: &d,
        prune,
        bound: f64::NEG_INFINITY,
        found: None,
        path: Vec::new(),
        leaves: 0,
        first_pass: true,
    };
    search.start();
    let best = search.bound;
    let leaves = search.leaves;
    search.first_pass = false;
    search.bound = best - TIE_EPS;
    assert!(search.start(), "second pass must find the maximum");
    let (score, path) = search.found.expect("found");
    let first_state = CardiacState::from_index(path[0]).unwrap();
    let run_lengths = path[1..].to_vec();
    let mut labels = Vec::with_capacity(probs.len());
    let mut s = first_state;
    for &len in &run_lengths {
        labels.extend(std::iter::repeat_n(s, len));
        s = s.next();
    }
    OracleDecode {
        labels,
        score,
        first_state,
        run_lengths,
        leaves,
    }
}
