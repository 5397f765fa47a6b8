//! Feature extraction against a direct DFT sum.

use cardioseg_core::features::{
    extract_features, frame_count, AudioSegment, FeatureExtractor, FRAME_LEN, HOP, LOG_FLOOR,
};
use cardioseg_oracles::{naive_features, naive_magnitudes};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn random_signals_match_naive_dft() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let ex = FeatureExtractor::new();
    for case in 0..100 {
        let n = rng.random_range(16..=2000);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let got = extract_features(&AudioSegment::new(x.clone(), 500).unwrap()).unwrap();
        let want = naive_features(&x);
        assert_eq!(got.len(), want.len(), "case {case}");
        assert_eq!(got.len(), frame_count(n));
        for (t, (a, b)) in got.frames().iter().zip(&want).enumerate() {
            for k in 0..9 {
                assert!((a[k] - b[k]).abs() < 1e-7, "case {case} frame {t} bin {k}");
            }
            let w: [f64; FRAME_LEN] = x[t * HOP..t * HOP + FRAME_LEN].try_into().unwrap();
            let (m1, m2) = (ex.magnitudes(&w), naive_magnitudes(&w));
            for k in 0..9 {
                assert!((m1[k] - m2[k]).abs() < 1e-9, "case {case} frame {t} bin {k}");
            }
        }
    }
}

#[test]
fn frame_count_formula() {
    for n in 16..400 {
        assert_eq!(frame_count(n), (n - 16) / 5 + 1);
        assert_eq!(naive_features(&vec![0.0; n]).len(), frame_count(n));
    }
}

#[test]
fn shifting_by_hop_multiples_shifts_frames() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x: Vec<f64> = (0..800).map(|_| rng.random_range(-0.5..0.5)).collect();
    let mut padded = vec![0.0; 5000];
    padded.extend_from_slice(&x);
    let a = extract_features(&AudioSegment::new(x, 500).unwrap()).unwrap();
    let b = extract_features(&AudioSegment::new(padded, 500).unwrap()).unwrap();
    let off = 5000 / HOP;
    assert_eq!(b.len(), a.len() + off);
    for (t, f) in a.frames().iter().enumerate() {
        assert_eq!(f, &b.frames()[t + off]);
    }
    for f in &b.frames()[..off - 3] {
        assert!(f.iter().all(|&v| v == LOG_FLOOR.ln()));
    }
}

proptest! {
    #[test]
    fn features_are_finite_and_floored(x in prop::collection::vec(-1.0f64..=1.0, 16..600)) {
        let fm = extract_features(&AudioSegment::new(x.clone(), 500).unwrap()).unwrap();
        prop_assert_eq!(fm.len(), frame_count(x.len()));
        for f in fm.frames() {
            for &v in f {
                prop_assert!(v.is_finite());
                prop_assert!(v >= LOG_FLOOR.ln());
                // |X_k| <= sum of window weights = 7.5
                prop_assert!(v <= 7.5f64.ln() + 1e-12);
            }
        }
    }

    #[test]
    fn scaling_shifts_log_features(x in prop::collection::vec(-1.0f64..=1.0, 16..200), g in 0.01f64..1.0) {
        let a = naive_features(&x);
        let y: Vec<f64> = x.iter().map(|v| v * g).collect();
        let fa = extract_features(&AudioSegment::new(x, 500).unwrap()).unwrap();
        let fb = extract_features(&AudioSegment::new(y, 500).unwrap()).unwrap();
        for ((p, q), r) in fa.frames().iter().zip(fb.frames()).zip(&a) {
            for k in 0..9 {
                // only bins well above the floor scale cleanly
                if r[k] > -15.0 {
                    prop_assert!((q[k] - p[k] - g.ln()).abs() < 1e-6);
                }
            }
        }
    }
}
