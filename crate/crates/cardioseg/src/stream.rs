//! Chunked segmentation with bounded memory.
//!
//! Chunks of `chunk_length_s` start every `chunk_length_s - 0.5` seconds,
//! rounded to a whole number of frames so chunk frames land on the global
//! frame grid. Each chunk is decoded on its own; in the 0.5 s overlap the
//! labels of the later chunk are kept.

use cardioseg_core::features::{FRAME_RATE_HZ, HOP, SAMPLE_RATE_HZ};
use cardioseg_core::hr::{
    estimate_heart_rate, estimate_hrv, find_beats, BeatSeries, HrError, HrEstimate, HrvEstimate,
    KalmanConfig,
};
use cardioseg_core::pipeline::SegmentError;
use cardioseg_core::{AudioSegment, CardiacState, DurationModel, FeatureError, Segmenter, StateSequence};

use crate::config::PipelineConfig;
use crate::Error;

pub const OVERLAP_S: f64 = 0.5;

#[derive(Debug, thiserror::Error)]
#[error("chunk {chunk}: {kind}")]
pub struct StreamError {
    pub chunk: usize,
    pub kind: StreamFailure,
}

#[derive(Debug, thiserror::Error)]
pub enum StreamFailure {
    #[error(transparent)]
    Segment(#[from] SegmentError),
    #[error(transparent)]
    Samples(#[from] FeatureError),
    #[error("reading audio: {0}")]
    Source(Box<Error>),
}

impl StreamError {
    pub(crate) fn is_internal(&self) -> bool {
        matches!(self.kind, StreamFailure::Segment(SegmentError::Decode(_)))
            || matches!(&self.kind, StreamFailure::Source(e) if e.exit_code() == 1)
    }
}

/// Samples per chunk and samples between chunk starts.
pub fn chunk_geometry(chunk_length_s: f64) -> (usize, usize) {
    let sr = SAMPLE_RATE_HZ as f64;
    let overlap = (OVERLAP_S * sr) as usize;
    let step_frames = ((chunk_length_s - OVERLAP_S) * FRAME_RATE_HZ as f64).round() as usize;
    let step = step_frames.max(1) * HOP;
    (step + overlap, step)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub labels: StateSequence,
    pub beats: BeatSeries,
    pub hr: Result<HrEstimate, HrError>,
    pub hrv: Result<HrvEstimate, HrError>,
    pub chunks: usize,
}

impl PipelineOutput {
    fn from_labels(labels: Vec<CardiacState>, kalman: &KalmanConfig, chunks: usize) -> Self {
        let labels = StateSequence::new(labels, FRAME_RATE_HZ);
        let beats = find_beats(&labels);
        let hr = estimate_heart_rate(&beats, kalman);
        let hrv = estimate_hrv(&beats);
        Self {
            labels,
            beats,
            hr,
            hrv,
            chunks,
        }
    }
}

/// One loaded model plus the streaming settings.
#[derive(Debug, Clone)]
pub struct Pipeline {
    segmenter: Segmenter,
    kalman: KalmanConfig,
    chunk_length_s: f64,
}

impl Pipeline {
    pub fn new(segmenter: Segmenter, kalman: KalmanConfig, chunk_length_s: f64) -> Self {
        Self {
            segmenter,
            kalman,
            chunk_length_s,
        }
    }

    pub fn from_config(cfg: &PipelineConfig) -> Result<Self, Error> {
        cfg.validate()?;
        let segmenter = Segmenter::new(cfg.load_model()?, cfg.durations.clone());
        Ok(Self::new(segmenter, cfg.kalman, cfg.chunk_length_s))
    }

    pub fn durations(&self) -> &DurationModel {
        self.segmenter.durations()
    }

    /// Decodes the whole recording at once.
    pub fn run_whole(&self, audio: &AudioSegment) -> Result<PipelineOutput, StreamError> {
        let decoded = self.segmenter.segment(audio).map_err(|e| StreamError {
            chunk: 0,
            kind: e.into(),
        })?;
        Ok(PipelineOutput::from_labels(decoded.states.into_labels(), &self.kalman, 1))
    }

    /// Pulls samples from `source` one chunk at a time. Only the current
    /// chunk's audio is held; the labels grow at one byte per frame.
    pub fn run_streaming<I>(&self, source: I) -> Result<PipelineOutput, StreamError>
    where
        I: IntoIterator<Item = Result<f64, Error>>,
    {
        self.run_streaming_observed(source, |_, _| {})
    }

    /// [`Pipeline::run_streaming`], calling `on_chunk(chunk, labels)` with
    /// the labels committed so far after each chunk.
    pub fn run_streaming_observed<I, F>(&self, source: I, mut on_chunk: F) -> Result<PipelineOutput, StreamError>
    where
        I: IntoIterator<Item = Result<f64, Error>>,
        F: FnMut(usize, &[CardiacState]),
    {
        let (chunk_len, step) = chunk_geometry(self.chunk_length_s);
        let step_frames = step / HOP;
        let mut source = source.into_iter().peekable();
        let mut buf: Vec<f64> = Vec::with_capacity(chunk_len);
        let mut labels = Vec::new();
        let mut chunk = 0;
        loop {
            while buf.len() < chunk_len {
                match source.next() {
                    Some(Ok(x)) => buf.push(x),
                    Some(Err(e)) => {
                        return Err(StreamError {
                            chunk,
                            kind: StreamFailure::Source(Box::new(e)),
                        })
                    }
                    None => break,
                }
            }
            let last = source.peek().is_none();
            let fail = |kind| StreamError { chunk, kind };
            let audio = AudioSegment::new(buf.clone(), SAMPLE_RATE_HZ)
                .map_err(|e| fail(StreamFailure::Samples(e)))?;
            let decoded = self
                .segmenter
                .segment(&audio)
                .map_err(|e| fail(StreamFailure::Segment(e)))?;
            let states = decoded.states.labels();
            if last {
                labels.extend_from_slice(states);
                on_chunk(chunk, &labels);
                return Ok(PipelineOutput::from_labels(labels, &self.kalman, chunk + 1));
            }
            labels.extend_from_slice(&states[..step_frames]);
            on_chunk(chunk, &labels);
            buf.drain(..step);
            chunk += 1;
        }
    }
}

/// Loads the model named in `cfg` and runs the chunked pipeline over `source`.
pub fn run_pipeline_streaming<I>(source: I, cfg: &PipelineConfig) -> Result<PipelineOutput, Error>
where
    I: IntoIterator<Item = Result<f64, Error>>,
{
    Ok(Pipeline::from_config(cfg)?.run_streaming(source)?)
}
