use std::path::PathBuf;

use cardioseg_core::emission::ForestError;
use cardioseg_core::eval::EvalError;
use cardioseg_core::hr::HrError;
use cardioseg_core::hsmm::DecodeError;
use cardioseg_core::synth::SynthError;
use cardioseg_core::FeatureError;

use crate::stream::StreamError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: file not found", path.display())]
    NotFound { path: PathBuf },
    /// WAV header not PCM16 mono 500 Hz. `field` names the offending field.
    #[error("{}: unsupported {field}: {detail}", path.display())]
    BadFormat {
        path: PathBuf,
        field: &'static str,
        detail: String,
    },
    #[error("{}: {source}", path.display())]
    Wav { path: PathBuf, source: hound::Error },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: line {line}: {msg}", path.display())]
    Csv { path: PathBuf, line: u64, msg: String },
    #[error("{}: {source}", path.display())]
    Model { path: PathBuf, source: ForestError },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error("training: {0}")]
    Train(ForestError),
    #[error("heart rate: {0}")]
    Hr(#[from] HrError),
    #[error("evaluation: {0}")]
    Eval(#[from] EvalError),
    #[error("synthesis: {0}")]
    Synth(#[from] SynthError),
    #[error("decoding: {0}")]
    Decode(#[from] DecodeError),
}

impl Error {
    /// 2 for problems with the caller's inputs, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 1,
            Error::Stream(e) if e.is_internal() => 1,
            _ => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::NotFound { path }
        } else {
            Error::Io { path, source }
        }
    }
}
