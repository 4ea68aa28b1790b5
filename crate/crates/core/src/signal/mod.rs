//! Uniformly sampled waveforms and the time-domain operations shared by every
//! other module.

pub mod filter;
mod resample;

pub use filter::{bandpass, BandEdges, FirFilter};
pub use resample::{resample, time_stretch};

use crate::scalar::compensated_sum;
use crate::{Error, Real, Result};

/// A real waveform with its sample rate.
///
/// Samples are always finite and the sample rate is always positive.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal<T> {
    samples: Vec<T>,
    sample_rate: f64,
}

impl<T: Real> Signal<T> {
    pub fn new(samples: Vec<T>, sample_rate: f64) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn zeros(len: usize, sample_rate: f64) -> Result<Self> {
        Self::new(vec![T::zero(); len], sample_rate)
    }

    /// Same sample rate, new samples.
    pub fn with_samples(&self, samples: Vec<T>) -> Result<Self> {
        Self::new(samples, self.sample_rate)
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn mean(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        compensated_sum(&self.samples) / self.samples.len() as f64
    }

    /// Mean squared amplitude.
    pub fn power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples
            .iter()
            .map(|s| {
                let s = s.as_f64();
                s * s
            })
            .sum::<f64>()
            / self.samples.len() as f64
    }

    pub fn peak(&self) -> T {
        self.samples
            .iter()
            .fold(T::zero(), |acc, s| acc.max(s.abs()))
    }

    /// Lossless for `f32 -> f64`; rounds for `f64 -> f32`.
    pub fn cast<U: Real>(&self) -> Signal<U> {
        Signal {
            samples: self.samples.iter().map(|s| U::lit(s.as_f64())).collect(),
            sample_rate: self.sample_rate,
        }
    }

    /// Samples `[start, end)` as a new signal.
    pub fn slice(&self, start: usize, end: usize) -> Signal<T> {
        Signal {
            samples: self.samples[start..end].to_vec(),
            sample_rate: self.sample_rate,
        }
    }
}

/// Zero mean, peak absolute value 1.
///
/// A constant input maps to all zeros. Applying `normalize` to its own output
/// returns the same samples bit for bit.
pub fn normalize<T: Real>(signal: &Signal<T>) -> Signal<T> {
    let xs = signal.samples();
    let Some(&first) = xs.first() else {
        return signal.clone();
    };
    if xs.iter().all(|&x| x == first) {
        return Signal {
            samples: vec![T::zero(); xs.len()],
            sample_rate: signal.sample_rate,
        };
    }

    let peak_in = signal.peak().as_f64();
    let mut mean = signal.mean();
    // a mean at rounding level is already zero; leaves normalized input untouched
    if mean.abs() <= 16.0 * T::epsilon().as_f64() * peak_in {
        mean = 0.0;
    }
    let mean = T::lit(mean);
    let centered: Vec<T> = xs.iter().map(|&x| x - mean).collect();
    let peak = centered.iter().fold(T::zero(), |acc, s| acc.max(s.abs()));
    let samples = if peak > T::zero() {
        centered.into_iter().map(|x| x / peak).collect()
    } else {
        centered
    };
    Signal {
        samples,
        sample_rate: signal.sample_rate,
    }
}

/// Mirror index without repeating the edge sample (`dcba|abcd|cba`), valid
/// for any offset.
pub(crate) fn reflect_index(i: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let r = i.rem_euclid(period);
    if r >= len as isize {
        (period - r) as usize
    } else {
        r as usize
    }
}
