//! Files, streaming execution and benchmarking on top of `cardioseg-core`.

pub mod bench;
pub mod config;
pub mod csvio;
pub mod error;
pub mod stream;
pub mod wav;

pub use bench::{bench, BenchConfig, LatencyReport};
pub use config::PipelineConfig;
pub use error::Error;
pub use stream::{run_pipeline_streaming, PipelineOutput, StreamError};
pub use wav::{read_wav, write_wav};
