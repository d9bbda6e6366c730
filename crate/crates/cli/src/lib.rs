//! Batch runner: configuration, the end-to-end pipeline and report files.

use std::path::Path;

pub mod config;
pub mod pipeline;

pub use config::{ModelEntry, PipelineConfig, OUTPUT_DIR_ENV};
pub use pipeline::{read_manifest, run_pipeline, RunManifest, RunOptions, REPORT_FORMAT_VERSION};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: tabrisk::Error,
    },
    #[error("writing {path}: {detail}")]
    Io { path: String, detail: String },
}

impl PipelineError {
    pub fn from_core(stage: &'static str) -> impl Fn(tabrisk::Error) -> PipelineError {
        move |source| PipelineError::Stage { stage, source }
    }

    pub fn io(path: &Path, e: std::io::Error) -> PipelineError {
        PipelineError::Io {
            path: path.display().to_string(),
            detail: e.to_string(),
        }
    }

    pub fn stage(&self) -> Option<&'static str> {
        match self {
            PipelineError::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}
