//! Cardiac audio augmentation toolkit.
//!
//! Traditional PCG/ECG augmentations, heart-cycle rearrangement with
//! correlation-aware crossfades, denoising-diffusion schedules, samplers and
//! losses with a small trainable denoiser, and binary classification metrics.
//!
//! All numeric code is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the bottom of this file name the common instantiations.

pub mod augment;
pub mod cycles;
pub mod ddpm;
pub mod error;
pub mod hpss;
pub mod io;
pub mod metrics;
pub mod record;
pub mod rng;
pub mod scalar;
pub mod signal;
pub mod spectral;

pub use error::{Error, Result};
pub use record::{Label, PairedRecord};
pub use rng::RandomStream;
pub use scalar::Real;
pub use signal::{bandpass, normalize, resample, time_stretch, Signal};
pub use spectral::{istft, mel_spectrogram, stft, MelConfig, MelSpectrogram, Spectrogram};

pub type Signal32 = Signal<f32>;
pub type Signal64 = Signal<f64>;
pub type Spectrogram32 = Spectrogram<f32>;
pub type Spectrogram64 = Spectrogram<f64>;
pub type MelSpectrogram32 = MelSpectrogram<f32>;
pub type MelSpectrogram64 = MelSpectrogram<f64>;
