use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cardioseg::bench::{bench, synthetic_model, BenchConfig, MIN_REPS};
use cardioseg::config::{load_model, PipelineConfig, DEFAULT_CHUNK_LENGTH_S};
use cardioseg::csvio::{self, load, save};
use cardioseg::stream::{Pipeline, PipelineOutput};
use cardioseg::wav::{open_wav, samples, write_wav};
use cardioseg::{read_wav, Error};
use cardioseg_core::emission::{derive_frame_labels, serialize_forest, train_forest, FrameLabels};
use cardioseg_core::eval::{compare_hr, compare_hrv, score_s1_localisation, TimedSeries};
use cardioseg_core::features::FRAME_RATE_HZ;
use cardioseg_core::hr::{estimate_heart_rate, estimate_hrv, find_beats, KalmanConfig};
use cardioseg_core::pipeline::{reference_hr_default, reference_hrv};
use cardioseg_core::synth::{generate, NoiseProfile, SynthConfig};
use cardioseg_core::{extract_features, CardiacState, DurationModel, FeatureMatrix, StateSequence};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cardioseg", version, about = "Heart-sound segmentation and heart-rate estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic recording with known R-peaks.
    Synth(SynthArgs),
    /// Train an emission forest from recordings and their R-peaks.
    Train(TrainArgs),
    /// Label every frame of a recording with a cardiac state.
    Segment(SegmentArgs),
    /// Beats, heart rate and HRV from a labels file.
    Estimate(EstimateArgs),
    /// Score labels and heart rate against reference R-peaks.
    Evaluate(EvaluateArgs),
    /// Per-stage latency on one second of audio.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 60.0)]
    duration_s: f64,
    #[arg(long, default_value_t = 70.0)]
    bpm: f64,
    /// Standard deviation of each beat interval, ms.
    #[arg(long, default_value_t = 20.0)]
    jitter_ms: f64,
    #[arg(long, default_value_t = 20.0, allow_hyphen_values = true)]
    snr_db: f64,
    /// white, music, speech or footsteps.
    #[arg(long, default_value = "white", value_parser = parse_noise)]
    noise: NoiseProfile,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    wav: PathBuf,
    #[arg(long)]
    peaks: PathBuf,
    /// Optional per-frame ground-truth states.
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Training recordings; pair each with a --peaks file, in order.
    #[arg(long, required = true)]
    wav: Vec<PathBuf>,
    #[arg(long, required = true)]
    peaks: Vec<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DurationArgs {
    /// Replace one state's duration statistics, e.g. `S1=0.12,0.02`
    /// (mean and standard deviation in seconds). Repeatable.
    #[arg(long = "duration", value_parser = parse_duration)]
    overrides: Vec<(CardiacState, f64, f64)>,
}

impl DurationArgs {
    fn model(&self) -> Result<DurationModel, Error> {
        let mut stats = DurationModel::default().states().map(|d| (d.mean_s, d.std_s));
        for &(s, m, sd) in &self.overrides {
            stats[s.index()] = (m, sd);
        }
        Ok(DurationModel::from_stats(FRAME_RATE_HZ, stats)?)
    }
}

#[derive(Args)]
struct KalmanArgs {
    #[arg(long, default_value_t = KalmanConfig::default().process_variance)]
    process_variance: f64,
    #[arg(long, default_value_t = KalmanConfig::default().measurement_variance)]
    measurement_variance: f64,
}

impl KalmanArgs {
    fn config(&self) -> KalmanConfig {
        KalmanConfig {
            process_variance: self.process_variance,
            measurement_variance: self.measurement_variance,
            ..KalmanConfig::default()
        }
    }
}

#[derive(Args)]
struct SegmentArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    wav: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    beats: Option<PathBuf>,
    #[arg(long)]
    hr: Option<PathBuf>,
    #[arg(long)]
    hrv: Option<PathBuf>,
    /// Chunk length in seconds; at least 1.
    #[arg(long, default_value_t = DEFAULT_CHUNK_LENGTH_S)]
    chunk_s: f64,
    /// Decode the whole file at once instead of in chunks.
    #[arg(long)]
    whole: bool,
    #[command(flatten)]
    durations: DurationArgs,
    #[command(flatten)]
    kalman: KalmanArgs,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    beats: Option<PathBuf>,
    #[arg(long)]
    hr: Option<PathBuf>,
    #[arg(long)]
    hrv: Option<PathBuf>,
    #[command(flatten)]
    kalman: KalmanArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    peaks: PathBuf,
    /// Heart-rate CSV to score; computed from the labels when absent.
    #[arg(long)]
    hr: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Model file; a forest trained on synthetic audio when absent.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    durations: DurationArgs,
}

fn parse_noise(s: &str) -> Result<NoiseProfile, String> {
    NoiseProfile::from_name(&s.to_ascii_lowercase()).ok_or_else(|| format!("unknown noise profile `{s}`"))
}

fn parse_duration(s: &str) -> Result<(CardiacState, f64, f64), String> {
    let err = || format!("expected STATE=MEAN_S,STD_S, got `{s}`");
    let (state, rest) = s.split_once('=').ok_or_else(err)?;
    let (m, sd) = rest.split_once(',').ok_or_else(err)?;
    let state = CardiacState::from_name(state.trim()).ok_or_else(|| format!("unknown state `{state}`"))?;
    let m = m.trim().parse().map_err(|_| err())?;
    let sd = sd.trim().parse().map_err(|_| err())?;
    Ok((state, m, sd))
}

fn synth(a: SynthArgs) -> Result<(), Error> {
    let rec = generate(&SynthConfig {
        duration_s: a.duration_s,
        mean_bpm: a.bpm,
        bpm_jitter_std_ms: a.jitter_ms,
        snr_db: a.snr_db,
        noise: a.noise,
        seed: a.seed,
        ..SynthConfig::default()
    })?;
    write_wav(&a.wav, &rec.audio)?;
    save(&a.peaks, |w| csvio::write_peaks(w, &rec.rpeak_times_s))?;
    if let Some(p) = &a.labels {
        save(p, |w| csvio::write_labels(w, rec.true_states.labels()))?;
    }
    Ok(())
}

fn train(a: TrainArgs) -> Result<(), Error> {
    if a.wav.len() != a.peaks.len() {
        return Err(Error::Config(format!(
            "{} --wav files but {} --peaks files",
            a.wav.len(),
            a.peaks.len()
        )));
    }
    let mut frames = Vec::new();
    let mut labels = Vec::new();
    for (wav, peaks) in a.wav.iter().zip(&a.peaks) {
        let fm = extract_features(&read_wav(wav)?)?;
        let rpeaks = load(peaks, csvio::parse_peaks)?;
        let l = derive_frame_labels(&rpeaks, fm.len(), FRAME_RATE_HZ).map_err(Error::Train)?;
        frames.extend(fm.into_frames());
        labels.extend(l.0);
    }
    let fm = FeatureMatrix::from_frames(frames).ok_or_else(|| Error::Config("no training frames".into()))?;
    let model = train_forest(&fm, &FrameLabels(labels), a.seed).map_err(Error::Train)?;
    std::fs::write(&a.out, serialize_forest(&model)).map_err(|e| Error::io(&a.out, e))
}

fn write_estimates(
    out: &PipelineOutput,
    beats: Option<&Path>,
    hr: Option<&Path>,
    hrv: Option<&Path>,
) -> Result<(), Error> {
    if let Some(p) = beats {
        save(p, |w| csvio::write_beats(w, &out.beats))?;
    }
    if let Some(p) = hr {
        let est = out.hr.clone()?;
        save(p, |w| csvio::write_hr(w, &est))?;
    }
    if let Some(p) = hrv {
        let est = out.hrv.clone()?;
        save(p, |w| csvio::write_hrv(w, &est))?;
    }
    Ok(())
}

fn segment(a: SegmentArgs) -> Result<(), Error> {
    let cfg = PipelineConfig {
        durations: a.durations.model()?,
        kalman: a.kalman.config(),
        chunk_length_s: a.chunk_s,
        labels_out: Some(a.labels.clone()),
        beats_out: a.beats.clone(),
        hr_out: a.hr.clone(),
        hrv_out: a.hrv.clone(),
        ..PipelineConfig::new(&a.model)
    };
    let pipeline = Pipeline::from_config(&cfg)?;
    let out = if a.whole {
        pipeline.run_whole(&read_wav(&a.wav)?)?
    } else {
        let reader = open_wav(&a.wav)?;
        pipeline.run_streaming(samples(reader, &a.wav))?
    };
    save(&a.labels, |w| csvio::write_labels(w, out.labels.labels()))?;
    write_estimates(&out, a.beats.as_deref(), a.hr.as_deref(), a.hrv.as_deref())
}

fn estimate(a: EstimateArgs) -> Result<(), Error> {
    let labels = StateSequence::new(load(&a.labels, csvio::parse_labels)?, FRAME_RATE_HZ);
    let beats = find_beats(&labels);
    let out = PipelineOutput {
        hr: estimate_heart_rate(&beats, &a.kalman.config()),
        hrv: estimate_hrv(&beats),
        labels,
        beats,
        chunks: 0,
    };
    write_estimates(&out, a.beats.as_deref(), a.hr.as_deref(), a.hrv.as_deref())
}

fn evaluate(a: EvaluateArgs) -> Result<(), Error> {
    let labels = StateSequence::new(load(&a.labels, csvio::parse_labels)?, FRAME_RATE_HZ);
    let peaks = load(&a.peaks, csvio::parse_peaks)?;
    let beats = find_beats(&labels);
    let hr = match &a.hr {
        Some(p) => load(p, csvio::parse_hr)?,
        None => estimate_heart_rate(&beats, &KalmanConfig::default())?,
    };
    let truth = reference_hr_default(&peaks)?;
    let hr_err = compare_hr(
        TimedSeries::filtered(&hr)?,
        TimedSeries::new(&truth.times_s, &truth.smoothed_bpm)?,
    )?;
    let seg = score_s1_localisation(&labels, &peaks);
    let mut rows: Vec<(String, f64)> = Vec::new();
    rows.extend(hr_err.rows().map(|(k, v)| (k.to_string(), v)));
    rows.extend(seg.rows().map(|(k, v)| (k.to_string(), v)));
    match (estimate_hrv(&beats), reference_hrv(&peaks)) {
        (Ok(est), Ok(t)) => rows.extend(compare_hrv(&est, &t)?.rows().map(|(k, v)| (k.to_string(), v))),
        (e, t) => {
            let why = e.err().or(t.err()).expect("one side failed");
            eprintln!("warning: HRV rows omitted: {why}");
        }
    }
    save(&a.out, |w| csvio::write_report(w, &rows))
}

fn run_bench(a: BenchArgs) -> Result<(), Error> {
    if a.reps < MIN_REPS {
        return Err(Error::Config(format!("--reps must be at least {MIN_REPS}")));
    }
    let model = match &a.model {
        Some(p) => load_model(p)?,
        None => synthetic_model(a.seed)?,
    };
    let cfg = BenchConfig {
        reps: a.reps,
        seed: a.seed,
        durations: a.durations.model()?,
    };
    let report = bench(&model, &cfg)?;
    let rows: Vec<(String, f64)> = report.rows().map(|(k, v)| (k.to_string(), v)).into();
    match &a.out {
        Some(p) => save(p, |w| csvio::write_report(w, &rows)),
        None => csvio::write_report(std::io::stdout().lock(), &rows).map_err(|e| Error::io("<stdout>", e)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Train(a) => train(a),
        Command::Segment(a) => segment(a),
        Command::Estimate(a) => estimate(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Bench(a) => run_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
