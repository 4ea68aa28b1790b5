use std::f64::consts::PI;

use num_complex::Complex;
use rustfft::FftPlanner;

use super::{reflect_index, Signal};
use crate::{Error, Real, Result};

/// Stop-band attenuation the designer targets.
const DESIGN_ATTENUATION_DB: f64 = 60.0;
const MAX_TAPS: usize = (1 << 17) + 1;

/// Pass and stop edges of a band-pass response, in Hz.
///
/// `stop_lo = None` makes the response low-pass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandEdges {
    pub stop_lo: Option<f64>,
    pub pass_lo: f64,
    pub pass_hi: f64,
    pub stop_hi: f64,
}

impl BandEdges {
    /// Transition bands used by [`bandpass`]: stop at `lo/2` and at
    /// `min(2 hi, 0.99 Nyquist)`.
    pub fn octave(lo_hz: f64, hi_hz: f64, sample_rate: f64) -> Self {
        let nyquist = sample_rate / 2.0;
        Self {
            stop_lo: (lo_hz > 0.0).then_some(lo_hz / 2.0),
            pass_lo: lo_hz,
            pass_hi: hi_hz,
            stop_hi: (2.0 * hi_hz).min(0.99 * nyquist).max(hi_hz + 1e-3 * nyquist),
        }
    }

    /// Symmetric transitions of `width` Hz on each side of the pass band.
    pub fn with_transition(lo_hz: f64, hi_hz: f64, width: f64, sample_rate: f64) -> Self {
        let nyquist = sample_rate / 2.0;
        let stop_lo = lo_hz - width;
        Self {
            stop_lo: (stop_lo > 0.0).then_some(stop_lo),
            pass_lo: if stop_lo > 0.0 { lo_hz } else { 0.0 },
            pass_hi: hi_hz,
            stop_hi: (hi_hz + width).min(nyquist),
        }
    }
}

/// Linear-phase Kaiser-windowed-sinc FIR, applied centred (zero delay).
#[derive(Clone, Debug)]
pub struct FirFilter {
    taps: Vec<f64>,
}

impl FirFilter {
    pub fn design(edges: BandEdges, sample_rate: f64) -> Result<Self> {
        let nyquist = sample_rate / 2.0;
        let bad = || Error::InvalidBand {
            lo_hz: edges.pass_lo,
            hi_hz: edges.pass_hi,
            sample_rate_hz: sample_rate,
        };
        if !(edges.pass_lo >= 0.0 && edges.pass_lo < edges.pass_hi && edges.pass_hi < nyquist) {
            return Err(bad());
        }
        if edges.stop_hi <= edges.pass_hi || edges.stop_hi > nyquist {
            return Err(bad());
        }
        let mut transition = edges.stop_hi - edges.pass_hi;
        if let Some(stop_lo) = edges.stop_lo {
            if !(stop_lo >= 0.0 && stop_lo < edges.pass_lo) {
                return Err(bad());
            }
            transition = transition.min(edges.pass_lo - stop_lo);
        }

        let a = DESIGN_ATTENUATION_DB;
        let beta = 0.1102 * (a - 8.7);
        let width = transition / sample_rate;
        let mut len = ((a - 7.95) / (14.36 * width)).ceil() as usize + 1;
        len = len.min(MAX_TAPS);
        if len.is_multiple_of(2) {
            len += 1;
        }

        let fc_hi = 0.5 * (edges.pass_hi + edges.stop_hi) / sample_rate;
        let mut taps = lowpass_taps(fc_hi, len, beta);
        if let Some(stop_lo) = edges.stop_lo {
            let fc_lo = 0.5 * (stop_lo + edges.pass_lo) / sample_rate;
            for (t, l) in taps.iter_mut().zip(lowpass_taps(fc_lo, len, beta)) {
                *t -= l;
            }
        }
        Ok(Self { taps })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Filters with mirrored edges; output length equals input length.
    pub fn apply<T: Real>(&self, signal: &Signal<T>) -> Result<Signal<T>> {
        let xs = signal.samples();
        if xs.is_empty() || xs.iter().all(|x| x.is_zero()) {
            return Ok(signal.clone());
        }
        let half = self.taps.len() / 2;
        let padded_len = xs.len() + 2 * half;
        let full_len = padded_len + self.taps.len() - 1;
        let n_fft = full_len.next_power_of_two();

        let mut planner = FftPlanner::<T>::new();
        let fwd = planner.plan_fft_forward(n_fft);
        let inv = planner.plan_fft_inverse(n_fft);

        let mut a = vec![Complex::new(T::zero(), T::zero()); n_fft];
        for (j, slot) in a.iter_mut().take(padded_len).enumerate() {
            let src = reflect_index(j as isize - half as isize, xs.len());
            slot.re = xs[src];
        }
        let mut b = vec![Complex::new(T::zero(), T::zero()); n_fft];
        for (slot, &h) in b.iter_mut().zip(&self.taps) {
            slot.re = T::lit(h);
        }
        fwd.process(&mut a);
        fwd.process(&mut b);
        for (x, y) in a.iter_mut().zip(&b) {
            *x = *x * *y;
        }
        inv.process(&mut a);

        let scale = T::lit(1.0 / n_fft as f64);
        let out = a[2 * half..2 * half + xs.len()]
            .iter()
            .map(|c| c.re * scale)
            .collect();
        signal.with_samples(out)
    }
}

fn lowpass_taps(cutoff: f64, len: usize, beta: f64) -> Vec<f64> {
    let mid = (len / 2) as f64;
    let norm = bessel_i0(beta);
    (0..len)
        .map(|n| {
            let x = n as f64 - mid;
            let sinc = if x == 0.0 {
                2.0 * cutoff
            } else {
                (2.0 * PI * cutoff * x).sin() / (PI * x)
            };
            let r = x / mid.max(1.0);
            sinc * bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / norm
        })
        .collect()
}

/// Modified Bessel function of the first kind, order zero.
pub(crate) fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Band-pass between `lo_hz` and `hi_hz` (`lo_hz = 0` gives a low-pass).
pub fn bandpass<T: Real>(signal: &Signal<T>, lo_hz: f64, hi_hz: f64) -> Result<Signal<T>> {
    let fs = signal.sample_rate();
    if !(lo_hz >= 0.0 && lo_hz < hi_hz && hi_hz < fs / 2.0) {
        return Err(Error::InvalidBand {
            lo_hz,
            hi_hz,
            sample_rate_hz: fs,
        });
    }
    FirFilter::design(BandEdges::octave(lo_hz, hi_hz, fs), fs)?.apply(signal)
}
