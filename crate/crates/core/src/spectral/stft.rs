use ndarray::Array2;
use num_complex::Complex;
use rustfft::FftPlanner;

use crate::signal::{reflect_index, Signal};
use crate::{Error, Real, Result};

/// `w(n) = sin(pi (n + 1/2) / N)`.
pub fn sine_window<T: Real>(len: usize) -> Vec<T> {
    (0..len)
        .map(|n| T::lit((std::f64::consts::PI * (n as f64 + 0.5) / len as f64).sin()))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StftConfig {
    pub window_len: usize,
    pub hop: usize,
    /// Reflect-pad by `window_len / 2` on both ends so frame `t` is centred
    /// on sample `t * hop`.
    pub center: bool,
}

impl StftConfig {
    pub fn new(window_len: usize, hop: usize) -> Self {
        Self {
            window_len,
            hop,
            center: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.window_len < 2 || !self.window_len.is_multiple_of(2) {
            return Err(Error::IncompatibleStft(format!(
                "window length {} must be even and at least 2",
                self.window_len
            )));
        }
        if self.hop == 0 || self.hop > self.window_len {
            return Err(Error::IncompatibleStft(format!(
                "hop {} must lie in 1..={}",
                self.hop, self.window_len
            )));
        }
        Ok(())
    }
}

/// One-sided STFT, shape `(frames, window_len / 2 + 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrogram<T> {
    pub bins: Array2<Complex<T>>,
    pub config: StftConfig,
    pub window: Vec<T>,
    pub signal_len: usize,
    pub sample_rate: f64,
}

impl<T: Real> Spectrogram<T> {
    pub fn frames(&self) -> usize {
        self.bins.nrows()
    }

    pub fn freq_bins(&self) -> usize {
        self.bins.ncols()
    }

    /// Same layout with new cell values.
    pub fn with_bins(&self, bins: Array2<Complex<T>>) -> Self {
        Self {
            bins,
            config: self.config,
            window: self.window.clone(),
            signal_len: self.signal_len,
            sample_rate: self.sample_rate,
        }
    }

    pub fn magnitudes(&self) -> Array2<T> {
        self.bins.mapv(|c| c.norm())
    }

    pub fn energy(&self) -> f64 {
        self.bins.iter().map(|c| c.norm_sqr().as_f64()).sum()
    }
}

/// Centred STFT with a sine window.
pub fn stft<T: Real>(signal: &Signal<T>, window_len: usize, hop: usize) -> Result<Spectrogram<T>> {
    stft_with(signal, StftConfig::new(window_len, hop))
}

pub fn stft_with<T: Real>(signal: &Signal<T>, config: StftConfig) -> Result<Spectrogram<T>> {
    config.validate()?;
    let n = config.window_len;
    let xs = signal.samples();
    let window = sine_window::<T>(n);

    // frame t reads source sample (t * hop + i - offset), zero when absent
    let (offset, frames) = if config.center {
        (n / 2, xs.len() / config.hop + 1)
    } else if xs.len() < n {
        (0, 1)
    } else {
        (0, (xs.len() - n) / config.hop + 1)
    };
    let fetch = |i: isize| -> T {
        if xs.is_empty() {
            return T::zero();
        }
        if config.center {
            xs[reflect_index(i, xs.len())]
        } else if (0..xs.len() as isize).contains(&i) {
            xs[i as usize]
        } else {
            T::zero()
        }
    };

    let fft = FftPlanner::<T>::new().plan_fft_forward(n);
    let n_bins = n / 2 + 1;
    let mut bins = Array2::from_elem((frames, n_bins), Complex::new(T::zero(), T::zero()));
    let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
    let mut scratch = vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
    for t in 0..frames {
        let start = (t * config.hop) as isize - offset as isize;
        for (i, slot) in buf.iter_mut().enumerate() {
            *slot = Complex::new(window[i] * fetch(start + i as isize), T::zero());
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for (dst, src) in bins.row_mut(t).iter_mut().zip(&buf[..n_bins]) {
            *dst = *src;
        }
    }
    Ok(Spectrogram {
        bins,
        config,
        window,
        signal_len: xs.len(),
        sample_rate: signal.sample_rate(),
    })
}

/// Weighted overlap-add inverse of [`stft_with`].
pub fn istft<T: Real>(spec: &Spectrogram<T>) -> Result<Signal<T>> {
    let config = spec.config;
    config.validate()?;
    let n = config.window_len;
    if spec.window.len() != n || spec.freq_bins() != n / 2 + 1 {
        return Err(Error::IncompatibleStft(format!(
            "window of {} and {} bins do not match window length {n}",
            spec.window.len(),
            spec.freq_bins()
        )));
    }
    if spec.window.iter().any(|w| *w <= T::zero()) {
        return Err(Error::IncompatibleStft(
            "window must be strictly positive for overlap-add".into(),
        ));
    }
    let offset = if config.center { n / 2 } else { 0 };
    let out_len = spec.signal_len;
    let span = out_len + 2 * offset;
    let mut acc = vec![T::zero(); span.max((spec.frames().saturating_sub(1)) * config.hop + n)];
    let mut wsum = vec![T::zero(); acc.len()];

    let ifft = FftPlanner::<T>::new().plan_fft_inverse(n);
    let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
    let mut scratch = vec![Complex::new(T::zero(), T::zero()); ifft.get_inplace_scratch_len()];
    let scale = T::lit(1.0 / n as f64);
    for (t, row) in spec.bins.outer_iter().enumerate() {
        buf[..=n / 2].copy_from_slice(row.as_slice().expect("standard layout"));
        for k in 1..n / 2 {
            buf[n - k] = buf[k].conj();
        }
        ifft.process_with_scratch(&mut buf, &mut scratch);
        let start = t * config.hop;
        for i in 0..n {
            let w = spec.window[i];
            acc[start + i] = acc[start + i] + w * buf[i].re * scale;
            wsum[start + i] = wsum[start + i] + w * w;
        }
    }
    let samples = (0..out_len)
        .map(|i| {
            let j = i + offset;
            if j < acc.len() && wsum[j] > T::epsilon() {
                acc[j] / wsum[j]
            } else {
                T::zero()
            }
        })
        .collect();
    Signal::new(samples, spec.sample_rate)
}
