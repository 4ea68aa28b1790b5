//! Median-filter harmonic/percussive separation and the randomized two-stage
//! HPSS augmentation.
//!
//! Magnitudes are median-filtered along time (harmonic ridges) and along
//! frequency (transients). Binary masks compare the two medians against
//! thresholds `lambda_h`, `lambda_p >= 1` and are applied to the complex STFT
//! so phase survives the inverse transform. With both thresholds at least one
//! the masks are disjoint; cells that satisfy neither form a residual that is
//! dropped.

use ndarray::{Array2, ArrayView1, ArrayViewMut1, Axis, Zip};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::spectral::{istft, stft};
use crate::{normalize, RandomStream, Real, Result, Signal, Spectrogram};

/// Guard added to median denominators.
pub const ETA: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HpssParams {
    pub lambda_h: f64,
    pub lambda_p: f64,
    /// Half-length of the time-direction median, in frames.
    pub ell_h: usize,
    /// Half-length of the frequency-direction median, in bins.
    pub ell_p: usize,
    #[serde(default = "default_eta")]
    pub eta: f64,
}

fn default_eta() -> f64 {
    ETA
}

impl HpssParams {
    pub fn new(lambda_h: f64, lambda_p: f64, ell_h: usize, ell_p: usize) -> Self {
        Self {
            lambda_h,
            lambda_p,
            ell_h,
            ell_p,
            eta: ETA,
        }
    }
}

fn median_of_sorted<T: Real>(sorted: &[T]) -> T {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / T::lit(2.0)
    }
}

/// Running median over `[i - ell, i + ell]` clipped to the lane.
fn sliding_median<T: Real>(lane: ArrayView1<T>, ell: usize, mut out: ArrayViewMut1<T>) {
    let m = lane.len();
    if m == 0 {
        return;
    }
    let cmp = |a: &T, b: &T| a.partial_cmp(b).expect("finite magnitude");
    let mut window: Vec<T> = lane.iter().take(ell.min(m - 1) + 1).copied().collect();
    window.sort_by(cmp);
    for i in 0..m {
        out[i] = median_of_sorted(&window);
        let incoming = i + 1 + ell;
        if incoming < m {
            let v = lane[incoming];
            let at = window.partition_point(|w| cmp(w, &v).is_lt());
            window.insert(at, v);
        }
        if i >= ell {
            let v = lane[i - ell];
            let at = window.partition_point(|w| cmp(w, &v).is_lt());
            window.remove(at);
        }
    }
}

/// Median along frames (axis 0) for every frequency bin.
pub fn median_filter_time<T: Real>(mag: &Array2<T>, ell: usize) -> Array2<T> {
    let mut out = Array2::zeros(mag.raw_dim());
    for (lane, dst) in mag.lanes(Axis(0)).into_iter().zip(out.lanes_mut(Axis(0))) {
        sliding_median(lane, ell, dst);
    }
    out
}

/// Median along frequency (axis 1) for every frame.
pub fn median_filter_freq<T: Real>(mag: &Array2<T>, ell: usize) -> Array2<T> {
    let mut out = Array2::zeros(mag.raw_dim());
    for (lane, dst) in mag.lanes(Axis(1)).into_iter().zip(out.lanes_mut(Axis(1))) {
        sliding_median(lane, ell, dst);
    }
    out
}

/// Harmonic and percussive binary masks for a magnitude spectrogram.
pub fn hpss_masks<T: Real>(mag: &Array2<T>, params: &HpssParams) -> (Array2<bool>, Array2<bool>) {
    let yh = median_filter_time(mag, params.ell_h);
    let yp = median_filter_freq(mag, params.ell_p);
    let mut mh = Array2::from_elem(mag.raw_dim(), false);
    let mut mp = Array2::from_elem(mag.raw_dim(), false);
    Zip::from(&mut mh)
        .and(&mut mp)
        .and(&yh)
        .and(&yp)
        .for_each(|h, p, &a, &b| {
            let (a, b) = (a.as_f64(), b.as_f64());
            *h = a / (b + params.eta) > params.lambda_h;
            *p = b / (a + params.eta) >= params.lambda_p;
        });
    (mh, mp)
}

fn apply_mask<T: Real>(spec: &Spectrogram<T>, mask: &Array2<bool>) -> Spectrogram<T> {
    let zero = Complex::new(T::zero(), T::zero());
    let mut bins = spec.bins.clone();
    Zip::from(&mut bins).and(mask).for_each(|c, &keep| {
        if !keep {
            *c = zero;
        }
    });
    spec.with_bins(bins)
}

/// Splits `spec` into `(harmonic, percussive)` complex spectrograms.
pub fn hpss_decompose<T: Real>(spec: &Spectrogram<T>, params: &HpssParams) -> (Spectrogram<T>, Spectrogram<T>) {
    let (mh, mp) = hpss_masks(&spec.magnitudes(), params);
    (apply_mask(spec, &mh), apply_mask(spec, &mp))
}

/// Distribution bounds for the two-stage augmentation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HpssRanges {
    pub window_lens: Vec<usize>,
    pub hops: Vec<usize>,
    pub first_lambda: (f64, f64),
    pub second_lambda: (f64, f64),
    pub ell: (usize, usize),
    pub component_weight: (f64, f64),
    pub mix_weight: (f64, f64),
}

impl Default for HpssRanges {
    fn default() -> Self {
        Self {
            window_lens: vec![512, 1024, 2048],
            hops: vec![16, 32, 64, 128],
            first_lambda: (1.0, 2.0),
            second_lambda: (1.0, 4.0),
            ell: (5, 30),
            component_weight: (0.01, 10.0),
            mix_weight: (0.01, 0.05),
        }
    }
}

/// Gains of the four second-stage components.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HpssWeights {
    pub a_hh: f64,
    pub a_hp: f64,
    pub a_ph: f64,
    pub a_pp: f64,
}

impl HpssWeights {
    pub fn unit() -> Self {
        Self {
            a_hh: 1.0,
            a_hp: 1.0,
            a_ph: 1.0,
            a_pp: 1.0,
        }
    }
}

/// One two-stage decomposition and weighted reconstruction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HpssConstruction {
    pub window_len: usize,
    pub hop: usize,
    pub first: HpssParams,
    /// Second stage applied to the first-stage harmonic part.
    pub of_harmonic: HpssParams,
    /// Second stage applied to the first-stage percussive part.
    pub of_percussive: HpssParams,
    pub weights: HpssWeights,
}

/// Every random quantity consumed by one HPSS augmentation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HpssDraw {
    pub primary: HpssConstruction,
    pub secondary: HpssConstruction,
    pub a_hpss: f64,
}

fn draw_params(rng: &mut RandomStream, lambda: (f64, f64), ell: (usize, usize)) -> HpssParams {
    HpssParams {
        lambda_h: rng.uniform(lambda.0, lambda.1),
        lambda_p: rng.uniform(lambda.0, lambda.1),
        ell_h: rng.randint(ell.0 as i64, ell.1 as i64) as usize,
        ell_p: rng.randint(ell.0 as i64, ell.1 as i64) as usize,
        eta: ETA,
    }
}

impl HpssConstruction {
    pub fn sample(rng: &mut RandomStream, ranges: &HpssRanges) -> Self {
        let window_len = rng.choose(&ranges.window_lens);
        let hop = rng.choose(&ranges.hops);
        let first = draw_params(rng, ranges.first_lambda, ranges.ell);
        let of_harmonic = draw_params(rng, ranges.second_lambda, ranges.ell);
        let of_percussive = draw_params(rng, ranges.second_lambda, ranges.ell);
        let (lo, hi) = ranges.component_weight;
        let weights = HpssWeights {
            a_hh: rng.uniform(lo, hi),
            a_hp: rng.uniform(lo, hi),
            a_ph: rng.uniform(lo, hi),
            a_pp: rng.uniform(lo, hi),
        };
        Self {
            window_len,
            hop,
            first,
            of_harmonic,
            of_percussive,
            weights,
        }
    }

    fn reconstruct<T: Real>(&self, signal: &Signal<T>) -> Result<Vec<T>> {
        let spec = stft(signal, self.window_len, self.hop)?;
        let (xh, xp) = hpss_decompose(&spec, &self.first);
        let (xhh, xhp) = hpss_decompose(&xh, &self.of_harmonic);
        let (xph, xpp) = hpss_decompose(&xp, &self.of_percussive);
        let w = self.weights;
        let parts = [(xhh, w.a_hh), (xhp, w.a_hp), (xph, w.a_ph), (xpp, w.a_pp)];
        let mut out = vec![T::zero(); signal.len()];
        for (part, gain) in parts {
            let gain = T::lit(gain);
            for (o, x) in out.iter_mut().zip(istft(&part)?.samples()) {
                *o = *o + gain * *x;
            }
        }
        Ok(out)
    }
}

impl HpssDraw {
    pub fn sample(rng: &mut RandomStream, ranges: &HpssRanges) -> Self {
        let primary = HpssConstruction::sample(rng, ranges);
        let secondary = HpssConstruction::sample(rng, ranges);
        let a_hpss = rng.uniform(ranges.mix_weight.0, ranges.mix_weight.1);
        Self {
            primary,
            secondary,
            a_hpss,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HpssStatus {
    Applied,
    /// Signal shorter than a drawn window; passed through unchanged.
    TooShort,
}

/// `normalize(s1 + a_hpss * s2)` where each `s` is a weighted sum of the four
/// second-stage components.
pub fn apply_two_stage<T: Real>(signal: &Signal<T>, draw: &HpssDraw) -> Result<(Signal<T>, HpssStatus)> {
    let longest = draw.primary.window_len.max(draw.secondary.window_len);
    if signal.len() < longest {
        log::warn!(
            "hpss skipped: {} samples is shorter than the {longest}-sample window",
            signal.len()
        );
        return Ok((signal.clone(), HpssStatus::TooShort));
    }
    let s1 = draw.primary.reconstruct(signal)?;
    let s2 = draw.secondary.reconstruct(signal)?;
    let a = T::lit(draw.a_hpss);
    let mixed = s1.iter().zip(&s2).map(|(&x, &y)| x + a * y).collect();
    Ok((normalize(&signal.with_samples(mixed)?), HpssStatus::Applied))
}

/// Draws a fresh [`HpssDraw`] with default ranges and applies it.
pub fn hpss_reconstruct_two_stage<T: Real>(
    signal: &Signal<T>,
    rng: &mut RandomStream,
) -> Result<(Signal<T>, HpssStatus)> {
    apply_two_stage(signal, &HpssDraw::sample(rng, &HpssRanges::default()))
}
