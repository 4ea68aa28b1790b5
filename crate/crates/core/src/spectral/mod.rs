//! Short-time Fourier analysis and mel projection.

mod mel;
mod stft;

pub use mel::{
    hz_to_mel, mel_filterbank, mel_spectrogram, mel_to_hz, MelConfig, MelSpectrogram,
};
pub use stft::{istft, sine_window, stft, stft_with, Spectrogram, StftConfig};
