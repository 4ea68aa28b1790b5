//! Conditional denoising diffusion: schedules, the closed-form forward
//! process, epsilon-prediction losses and ancestral sampling, plus a small
//! trainable denoiser.

pub mod adam;
pub mod checkpoint;
pub mod gradcheck;
pub mod model;
pub mod train;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::{Error, RandomStream, Real, Result};

/// Fixed variance schedule. Index `t - 1` of each vector holds step `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSchedule<T> {
    betas: Vec<T>,
    alphas: Vec<T>,
    alpha_bars: Vec<T>,
    beta_tildes: Vec<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulePreset {
    /// T = 50, betas linear in [1e-4, 5e-2].
    Diffwave,
    /// T = 1000, betas linear in [1e-6, 1e-2].
    Wavegrad,
}

/// Six-step fast inference betas.
pub const INFERENCE_BETAS: [f64; 6] = [1e-4, 1e-3, 1e-2, 5e-2, 2e-1, 5e-1];

impl<T: Real> NoiseSchedule<T> {
    pub fn from_betas(betas: &[f64]) -> Result<Self> {
        if betas.is_empty() || betas.iter().any(|&b| !(b > 0.0 && b < 1.0)) {
            return Err(Error::InvalidArgument(format!(
                "betas must be non-empty and inside (0, 1): {betas:?}"
            )));
        }
        let betas: Vec<T> = betas.iter().map(|&b| T::lit(b)).collect();
        let alphas: Vec<T> = betas.iter().map(|&b| T::one() - b).collect();
        let mut alpha_bars = Vec::with_capacity(betas.len());
        let mut acc = T::one();
        for &a in &alphas {
            acc = acc * a;
            alpha_bars.push(acc);
        }
        let beta_tildes = (0..betas.len())
            .map(|i| match i {
                0 => betas[0],
                _ => (T::one() - alpha_bars[i - 1]) / (T::one() - alpha_bars[i]) * betas[i],
            })
            .collect();
        Ok(Self {
            betas,
            alphas,
            alpha_bars,
            beta_tildes,
        })
    }

    /// `beta_t = beta_min + (t - 1)(beta_max - beta_min)/(T - 1)`.
    pub fn linear(steps: usize, beta_min: f64, beta_max: f64) -> Result<Self> {
        if steps == 0 || !(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "linear schedule needs T >= 1 and 0 < {beta_min} <= {beta_max} < 1"
            )));
        }
        let betas: Vec<f64> = (0..steps)
            .map(|i| match steps {
                1 => beta_min,
                _ => beta_min + i as f64 * (beta_max - beta_min) / (steps - 1) as f64,
            })
            .collect();
        Self::from_betas(&betas)
    }

    pub fn preset(preset: SchedulePreset) -> Self {
        match preset {
            SchedulePreset::Diffwave => Self::linear(50, 1e-4, 5e-2),
            SchedulePreset::Wavegrad => Self::linear(1000, 1e-6, 1e-2),
        }
        .expect("preset bounds are valid")
    }

    pub fn inference() -> Self {
        Self::from_betas(&INFERENCE_BETAS).expect("inference betas are valid")
    }

    pub fn steps(&self) -> usize {
        self.betas.len()
    }

    pub fn betas(&self) -> &[T] {
        &self.betas
    }

    pub fn alphas(&self) -> &[T] {
        &self.alphas
    }

    pub fn alpha_bars(&self) -> &[T] {
        &self.alpha_bars
    }

    pub fn beta_tildes(&self) -> &[T] {
        &self.beta_tildes
    }

    /// `alpha_bar_t` for `t` in `0..=T`, with `alpha_bar_0 = 1`.
    pub fn alpha_bar(&self, t: usize) -> T {
        match t {
            0 => T::one(),
            _ => self.alpha_bars[t - 1],
        }
    }

    fn check_step(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.steps() {
            return Err(Error::InvalidArgument(format!(
                "step {t} outside 1..={}",
                self.steps()
            )));
        }
        Ok(())
    }
}

/// Alias kept for callers that prefer the free-function form.
pub fn make_linear_schedule<T: Real>(steps: usize, beta_min: f64, beta_max: f64) -> Result<NoiseSchedule<T>> {
    NoiseSchedule::linear(steps, beta_min, beta_max)
}

/// `sqrt(level^2) y0 + sqrt(1 - level^2) eps`, where `level = sqrt(alpha_bar)`.
pub fn diffuse_at_level<T: Real>(y0: &[T], level: T, eps: &[T]) -> Result<Vec<T>> {
    if y0.len() != eps.len() {
        return Err(Error::ShapeMismatch {
            expected: y0.len(),
            actual: eps.len(),
        });
    }
    let noise = (T::one() - level * level).sqrt();
    Ok(y0.iter().zip(eps).map(|(&y, &e)| level * y + noise * e).collect())
}

/// `y_t = sqrt(alpha_bar_t) y0 + sqrt(1 - alpha_bar_t) eps`.
pub fn forward_diffuse<T: Real>(y0: &[T], t: usize, eps: &[T], schedule: &NoiseSchedule<T>) -> Result<Vec<T>> {
    schedule.check_step(t)?;
    if y0.len() != eps.len() {
        return Err(Error::ShapeMismatch {
            expected: y0.len(),
            actual: eps.len(),
        });
    }
    let ab = schedule.alpha_bar(t);
    let (a, b) = (ab.sqrt(), (T::one() - ab).sqrt());
    Ok(y0.iter().zip(eps).map(|(&y, &e)| a * y + b * e).collect())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    #[default]
    L1,
    L2,
}

/// Mean absolute or squared residual, accumulated in `f64` in index order.
pub fn epsilon_loss<T: Real>(pred: &[T], truth: &[T], norm: Norm) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::ShapeMismatch {
            expected: truth.len(),
            actual: pred.len(),
        });
    }
    let mut acc = 0.0;
    for (p, t) in pred.iter().zip(truth) {
        let r = p.as_f64() - t.as_f64();
        acc += match norm {
            Norm::L1 => r.abs(),
            Norm::L2 => r * r,
        };
    }
    Ok(acc / pred.len().max(1) as f64)
}

/// `d loss / d pred` for [`epsilon_loss`] divided over `count` elements.
pub(crate) fn epsilon_loss_grad<T: Real>(pred: &[T], truth: &[T], norm: Norm, count: usize) -> Vec<T> {
    let scale = T::lit(1.0 / count as f64);
    pred.iter()
        .zip(truth)
        .map(|(&p, &t)| {
            let r = p - t;
            match norm {
                Norm::L1 if r > T::zero() => scale,
                Norm::L1 if r < T::zero() => -scale,
                Norm::L1 => T::zero(),
                Norm::L2 => scale * T::lit(2.0) * r,
            }
        })
        .collect()
}

/// Local (ECG mel, frames x bands) and global (label) conditioning.
#[derive(Clone, Debug, PartialEq)]
pub struct Conditioner<T> {
    pub mel: Array2<T>,
    /// Samples per mel frame; frame `f` is centred on sample `f * hop`.
    pub hop: usize,
    pub label: Option<usize>,
}

impl<T: Real> Conditioner<T> {
    /// Frame whose centre is nearest to sample `n`.
    pub fn frame_of(&self, n: usize) -> usize {
        ((n + self.hop / 2) / self.hop).min(self.mel.nrows().saturating_sub(1))
    }
}

/// An epsilon predictor. `level` is `sqrt(alpha_bar)` of the input.
pub trait Denoise<T> {
    fn predict(&self, y: &[T], cond: &Conditioner<T>, level: T) -> Vec<T>;
}

impl<T, F> Denoise<T> for F
where
    F: Fn(&[T], &Conditioner<T>, T) -> Vec<T>,
{
    fn predict(&self, y: &[T], cond: &Conditioner<T>, level: T) -> Vec<T> {
        self(y, cond, level)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SampleOptions<T> {
    /// Drop the `sigma_t z` term at every step.
    pub zero_sigma: bool,
    /// Start from this `y_T` instead of a standard normal draw.
    pub initial: Option<Vec<T>>,
}

/// Ancestral sampling, `t = T..1`:
/// `y_{t-1} = (y_t - (1 - a_t)/sqrt(1 - ab_t) eps) / sqrt(a_t) + sigma_t z`
/// with `sigma_t = sqrt(beta_tilde_t)` and `z = 0` at `t = 1`.
pub fn reverse_sample<T: Real, D: Denoise<T> + ?Sized>(
    denoiser: &D,
    cond: &Conditioner<T>,
    schedule: &NoiseSchedule<T>,
    rng: &mut RandomStream,
    len: usize,
    options: &SampleOptions<T>,
) -> Result<Vec<T>> {
    let mut y = match &options.initial {
        Some(y) if y.len() != len => {
            return Err(Error::ShapeMismatch {
                expected: len,
                actual: y.len(),
            })
        }
        Some(y) => y.clone(),
        None => rng.normal_vec(len),
    };
    for t in (1..=schedule.steps()).rev() {
        let i = t - 1;
        let alpha = schedule.alphas[i];
        let ab = schedule.alpha_bars[i];
        let eps = denoiser.predict(&y, cond, ab.sqrt());
        if eps.len() != len {
            return Err(Error::ShapeMismatch {
                expected: len,
                actual: eps.len(),
            });
        }
        let c = (T::one() - alpha) / (T::one() - ab).sqrt();
        let inv = T::one() / alpha.sqrt();
        for (v, e) in y.iter_mut().zip(&eps) {
            *v = (*v - c * *e) * inv;
        }
        if t > 1 && !options.zero_sigma {
            let sigma = schedule.beta_tildes[i].sqrt();
            for v in y.iter_mut() {
                *v = *v + sigma * T::lit(rng.normal());
            }
        }
    }
    Ok(y)
}

/// Draws `t` uniformly from `1..=T`, then `sqrt(alpha_bar)` uniformly from
/// `[sqrt(ab_t), sqrt(ab_{t-1})]`. Returns `(level, t)`.
pub fn sample_noise_level_continuous<T: Real>(schedule: &NoiseSchedule<T>, rng: &mut RandomStream) -> (T, usize) {
    let t = rng.randint(1, schedule.steps() as i64) as usize;
    let lo = schedule.alpha_bar(t).sqrt().as_f64();
    let hi = schedule.alpha_bar(t - 1).sqrt().as_f64();
    (T::lit(rng.uniform(lo, hi)), t)
}
