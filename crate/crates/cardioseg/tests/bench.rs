use cardioseg::bench::{bench, synthetic_model, BenchConfig, MIN_REPS};

#[test]
fn report_shape() {
    let model = synthetic_model(3).unwrap();
    let r = bench(&model, &BenchConfig { reps: 5, ..BenchConfig::default() }).unwrap();
    println!("{r:?}");
    assert_eq!(r.reps, MIN_REPS);
    assert_eq!(r.frames, 97);
    assert!(r.features_ms > 0.0 && r.emissions_ms > 0.0 && r.viterbi_ms > 0.0);
    // medians are not additive; allow a little slack for timer jitter
    assert!(r.total_ms >= 0.9 * (r.features_ms + r.emissions_ms + r.viterbi_ms));
}
