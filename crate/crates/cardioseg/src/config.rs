use std::path::{Path, PathBuf};

use cardioseg_core::emission::deserialize_forest;
use cardioseg_core::hr::KalmanConfig;
use cardioseg_core::{DurationModel, ForestModel};

use crate::Error;

pub const DEFAULT_CHUNK_LENGTH_S: f64 = 10.0;
pub const MIN_CHUNK_LENGTH_S: f64 = 1.0;

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub model_path: PathBuf,
    pub durations: DurationModel,
    pub kalman: KalmanConfig,
    pub chunk_length_s: f64,
    pub labels_out: Option<PathBuf>,
    pub beats_out: Option<PathBuf>,
    pub hr_out: Option<PathBuf>,
    pub hrv_out: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn new(model_path: impl Into<PathBuf>) -> Self {
        Self {
            model_path: model_path.into(),
            durations: DurationModel::default(),
            kalman: KalmanConfig::default(),
            chunk_length_s: DEFAULT_CHUNK_LENGTH_S,
            labels_out: None,
            beats_out: None,
            hr_out: None,
            hrv_out: None,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(self.chunk_length_s.is_finite() && self.chunk_length_s >= MIN_CHUNK_LENGTH_S) {
            return Err(Error::Config(format!(
                "chunk_length_s must be at least {MIN_CHUNK_LENGTH_S}, got {}",
                self.chunk_length_s
            )));
        }
        self.kalman.validate()?;
        if !self.model_path.is_file() {
            return Err(Error::NotFound {
                path: self.model_path.clone(),
            });
        }
        for out in [&self.labels_out, &self.beats_out, &self.hr_out, &self.hrv_out]
            .into_iter()
            .flatten()
        {
            let dir = match out.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            if !dir.is_dir() {
                return Err(Error::NotFound { path: dir.into() });
            }
        }
        Ok(())
    }

    pub fn load_model(&self) -> Result<ForestModel, Error> {
        load_model(&self.model_path)
    }
}

pub fn load_model(path: &Path) -> Result<ForestModel, Error> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    deserialize_forest(&bytes).map_err(|source| Error::Model {
        path: path.into(),
        source,
    })
}
