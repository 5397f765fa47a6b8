use cardioseg_core::emission::{derive_frame_labels, train_forest, FrameLabels};
use cardioseg_core::eval::{compare_hr, score_s1_localisation, TimedSeries};
use cardioseg_core::features::{extract_features, FeatureMatrix};
use cardioseg_core::hr::{estimate_heart_rate, find_beats, KalmanConfig};
use cardioseg_core::pipeline::{reference_hr_default, Segmenter};
use cardioseg_core::synth::{generate, SynthConfig};
use cardioseg_core::{DurationModel, ForestModel};

fn train(seeds: &[(u64, f64)], snr_db: f64) -> ForestModel {
    let mut frames = Vec::new();
    let mut labels = Vec::new();
    for &(seed, bpm) in seeds {
        let rec = generate(&SynthConfig {
            duration_s: 60.0,
            mean_bpm: bpm,
            snr_db,
            seed,
            ..SynthConfig::default()
        })
        .unwrap();
        let fm = extract_features(&rec.audio).unwrap();
        let l = derive_frame_labels(&rec.rpeak_times_s, fm.len(), 100).unwrap();
        frames.extend(fm.into_frames());
        labels.extend(l.0);
    }
    train_forest(
        &FeatureMatrix::from_frames(frames).unwrap(),
        &FrameLabels(labels),
        42,
    )
    .unwrap()
}

#[test]
fn synthetic_rest_recording() {
    let model = train(&[(100, 60.0), (101, 75.0), (102, 90.0), (103, 100.0)], 20.0);
    let seg = Segmenter::new(model, DurationModel::default());
    for (seed, bpm) in [(200, 62.0), (201, 70.0), (202, 85.0), (203, 98.0)] {
        let rec = generate(&SynthConfig {
            duration_s: 60.0,
            mean_bpm: bpm,
            snr_db: 20.0,
            seed,
            ..SynthConfig::default()
        })
        .unwrap();
        let decoded = seg.segment(&rec.audio).unwrap();
        let report = score_s1_localisation(&decoded.states, &rec.rpeak_times_s);
        let beats = find_beats(&decoded.states);
        let hr = estimate_heart_rate(&beats, &KalmanConfig::default()).unwrap();
        let truth = reference_hr_default(&rec.rpeak_times_s).unwrap();
        let err = compare_hr(
            TimedSeries::filtered(&hr).unwrap(),
            TimedSeries::new(&truth.times_s, &truth.smoothed_bpm).unwrap(),
        )
        .unwrap();
        println!("bpm {bpm}: f1 {:.3} median abs {:.3}", report.f1, err.median_abs_bpm);
        assert!(report.f1 >= 0.9);
    }
}
