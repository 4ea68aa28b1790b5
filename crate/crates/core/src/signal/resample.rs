use std::f64::consts::PI;

use super::filter::bessel_i0;
use super::{reflect_index, Signal};
use crate::{Error, Real, Result};

const KAISER_BETA: f64 = 8.6;
/// Taps per phase at unit ratio; widened by `1/ratio` when decimating.
const TAPS_PER_PHASE: usize = 32;
/// Phase table resolution; adjacent phases are linearly interpolated.
const PHASES: usize = 512;
const CUTOFF: f64 = 0.95;

/// Polyphase windowed-sinc kernel table for one conversion ratio.
struct PhaseTable {
    half_width: isize,
    /// `(PHASES + 1)` rows of `2 * half_width` taps, each row summing to one.
    rows: Vec<Vec<f64>>,
}

impl PhaseTable {
    fn new(ratio: f64) -> Self {
        let scale = ratio.min(1.0);
        let half_width = ((TAPS_PER_PHASE as f64 / 2.0) / scale).ceil() as isize;
        let fc = 0.5 * CUTOFF * scale;
        let norm = bessel_i0(KAISER_BETA);
        let rows = (0..=PHASES)
            .map(|p| {
                let frac = p as f64 / PHASES as f64;
                let mut row: Vec<f64> = (-half_width + 1..=half_width)
                    .map(|j| {
                        let x = frac - j as f64;
                        let sinc = if x == 0.0 {
                            2.0 * fc
                        } else {
                            (2.0 * PI * fc * x).sin() / (PI * x)
                        };
                        let r = x / half_width as f64;
                        sinc * bessel_i0(KAISER_BETA * (1.0 - r * r).max(0.0).sqrt()) / norm
                    })
                    .collect();
                let sum: f64 = row.iter().sum();
                row.iter_mut().for_each(|t| *t /= sum);
                row
            })
            .collect();
        Self { half_width, rows }
    }
}

fn resample_by_ratio<T: Real>(xs: &[T], ratio: f64, out_len: usize) -> Vec<T> {
    if xs.is_empty() {
        return vec![T::zero(); out_len];
    }
    let table = PhaseTable::new(ratio);
    let hw = table.half_width;
    (0..out_len)
        .map(|m| {
            let pos = m as f64 / ratio;
            let base = pos.floor();
            let frac = pos - base;
            let base = base as isize;
            let p = frac * PHASES as f64;
            let p0 = (p.floor() as usize).min(PHASES - 1);
            let w = p - p0 as f64;
            let (r0, r1) = (&table.rows[p0], &table.rows[p0 + 1]);
            let mut acc = 0.0f64;
            for (k, j) in (-hw + 1..=hw).enumerate() {
                let tap = r0[k] + w * (r1[k] - r0[k]);
                acc += tap * xs[reflect_index(base + j, xs.len())].as_f64();
            }
            T::lit(acc)
        })
        .collect()
}

/// Converts to `target_rate_hz`; output length is
/// `round(len * target / source)`. Equal rates return the input unchanged.
pub fn resample<T: Real>(signal: &Signal<T>, target_rate_hz: f64) -> Result<Signal<T>> {
    if !(target_rate_hz.is_finite() && target_rate_hz > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "target rate must be positive, got {target_rate_hz}"
        )));
    }
    if target_rate_hz == signal.sample_rate() {
        return Ok(signal.clone());
    }
    let ratio = target_rate_hz / signal.sample_rate();
    let out_len = (signal.len() as f64 * ratio).round() as usize;
    Signal::new(
        resample_by_ratio(signal.samples(), ratio, out_len),
        target_rate_hz,
    )
}

/// Lengthens by `factor` at the same sample rate, lowering every frequency
/// by `1/factor`.
pub fn time_stretch<T: Real>(signal: &Signal<T>, factor: f64) -> Result<Signal<T>> {
    if !(1.0..=1.1).contains(&factor) {
        return Err(Error::InvalidArgument(format!(
            "stretch factor {factor} outside [1, 1.1]"
        )));
    }
    if factor == 1.0 {
        return Ok(signal.clone());
    }
    let out_len = (signal.len() as f64 * factor).round() as usize;
    signal.with_samples(resample_by_ratio(signal.samples(), factor, out_len))
}
