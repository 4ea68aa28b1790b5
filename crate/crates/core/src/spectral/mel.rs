use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::stft::stft;
use crate::signal::{resample, Signal};
use crate::{Real, Result};

const F_SP: f64 = 200.0 / 3.0;
const MIN_LOG_HZ: f64 = 1000.0;
const MIN_LOG_MEL: f64 = MIN_LOG_HZ / F_SP;

fn log_step() -> f64 {
    6.4f64.ln() / 27.0
}

/// Slaney mel scale: linear below 1 kHz, logarithmic above.
pub fn hz_to_mel(hz: f64) -> f64 {
    if hz >= MIN_LOG_HZ {
        MIN_LOG_MEL + (hz / MIN_LOG_HZ).ln() / log_step()
    } else {
        hz / F_SP
    }
}

pub fn mel_to_hz(mel: f64) -> f64 {
    if mel >= MIN_LOG_MEL {
        MIN_LOG_HZ * (log_step() * (mel - MIN_LOG_MEL)).exp()
    } else {
        mel * F_SP
    }
}

/// Triangular filters with Slaney area normalisation, shape
/// `(n_mels, n_fft / 2 + 1)`.
pub fn mel_filterbank(n_fft: usize, sample_rate: f64, n_mels: usize, fmin: f64, fmax: f64) -> Array2<f64> {
    let n_bins = n_fft / 2 + 1;
    let fft_freqs: Vec<f64> = (0..n_bins)
        .map(|k| k as f64 * sample_rate / n_fft as f64)
        .collect();
    let (lo, hi) = (hz_to_mel(fmin), hz_to_mel(fmax));
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (n_mels + 1) as f64))
        .collect();

    let mut bank = Array2::zeros((n_mels, n_bins));
    for m in 0..n_mels {
        let (left, centre, right) = (edges[m], edges[m + 1], edges[m + 2]);
        let enorm = 2.0 / (right - left);
        for (k, &f) in fft_freqs.iter().enumerate() {
            let rise = (f - left) / (centre - left);
            let fall = (right - f) / (right - centre);
            bank[[m, k]] = rise.min(fall).max(0.0) * enorm;
        }
    }
    bank
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MelConfig {
    pub sample_rate: f64,
    pub window_len: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub fmin: f64,
    /// `None` means Nyquist.
    pub fmax: Option<f64>,
}

impl Default for MelConfig {
    /// The ECG conditioner: 4 kHz, window 1024, hop 256, 80 bands.
    fn default() -> Self {
        Self {
            sample_rate: 4000.0,
            window_len: 1024,
            hop: 256,
            n_mels: 80,
            fmin: 0.0,
            fmax: None,
        }
    }
}

impl MelConfig {
    pub fn fmax(&self) -> f64 {
        self.fmax.unwrap_or(self.sample_rate / 2.0)
    }
}

/// Power mel spectrogram, shape `(frames, n_mels)`, all entries `>= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct MelSpectrogram<T> {
    pub bands: Array2<T>,
    pub config: MelConfig,
}

impl<T: Real> MelSpectrogram<T> {
    pub fn frames(&self) -> usize {
        self.bands.nrows()
    }

    pub fn n_mels(&self) -> usize {
        self.bands.ncols()
    }
}

/// Mel filterbank applied to `|STFT|^2` (sine window). Resamples to
/// `config.sample_rate` first when needed.
pub fn mel_spectrogram<T: Real>(signal: &Signal<T>, config: &MelConfig) -> Result<MelSpectrogram<T>> {
    let signal = resample(signal, config.sample_rate)?;
    let spec = stft(&signal, config.window_len, config.hop)?;
    let bank = mel_filterbank(config.window_len, config.sample_rate, config.n_mels, config.fmin, config.fmax());
    let power = spec.bins.mapv(|c| c.norm_sqr().as_f64());
    let bands = power.dot(&bank.t()).mapv(|v| T::lit(v.max(0.0)));
    Ok(MelSpectrogram {
        bands,
        config: *config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::RandomStream;
    use std::f64::consts::PI;

    #[test]
    fn scale_roundtrip_and_anchor_points() {
        assert!((hz_to_mel(1000.0) - 15.0).abs() < 1e-12);
        assert!((hz_to_mel(200.0) - 3.0).abs() < 1e-12);
        for hz in [0.0, 37.0, 999.0, 1000.0, 1500.0, 2000.0] {
            assert!((mel_to_hz(hz_to_mel(hz)) - hz).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_signal_zero_bands() {
        let z = Signal::<f64>::zeros(8000, 4000.0).unwrap();
        let mel = mel_spectrogram(&z, &MelConfig::default()).unwrap();
        assert_eq!(mel.n_mels(), 80);
        assert!(mel.bands.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn white_noise_fills_every_band() {
        let s = Signal::new(RandomStream::new(4).normal_vec::<f64>(8000), 4000.0).unwrap();
        let mel = mel_spectrogram(&s, &MelConfig::default()).unwrap();
        for frame in mel.bands.outer_iter() {
            assert!(frame.iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn tone_lands_in_nearest_centre_band() {
        let s = Signal::new(
            (0..8000).map(|i| (2.0 * PI * 100.0 * i as f64 / 4000.0).sin()).collect(),
            4000.0,
        )
        .unwrap();
        let mel = mel_spectrogram(&s, &MelConfig::default()).unwrap();
        let frame = mel.bands.row(mel.frames() / 2);
        let k = (0..80).max_by(|&a, &b| frame[a].total_cmp(&frame[b])).unwrap();
        // oracle: evenly spaced Slaney mel centres on [0, 2000] Hz
        let top = 15.0 + (2.0f64).ln() / (6.4f64.ln() / 27.0);
        let centres: Vec<f64> = (1..=80).map(|i| top * i as f64 / 81.0 * 200.0 / 3.0).collect();
        let want = (0..80)
            .min_by(|&a, &b| (centres[a] - 100.0).abs().total_cmp(&(centres[b] - 100.0).abs()))
            .unwrap();
        assert!(centres[want] < 1000.0);
        assert_eq!(k, want);
    }

    #[test]
    fn resamples_to_conditioner_rate() {
        let s = Signal::<f64>::zeros(2000, 2000.0).unwrap();
        let mel = mel_spectrogram(&s, &MelConfig::default()).unwrap();
        assert_eq!(mel.frames(), 4000 / 256 + 1);
    }
}
