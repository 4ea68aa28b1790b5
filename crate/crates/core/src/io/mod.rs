//! Files on disk: WAV, manifests, fixtures, configuration and batch jobs.

pub mod config;
pub mod fixtures;
pub mod manifest;
pub mod pipeline;
pub mod tables;
pub mod wav;

pub use config::PipelineConfig;
pub use manifest::{load_cycles, load_manifest, Manifest, ManifestRow};
pub use wav::{load_wav, write_wav, WavFormat};
