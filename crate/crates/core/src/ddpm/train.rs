//! Minibatch training of [`ToyDenoiser`] on paired PCG/ECG records.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::model::{DenoiserConfig, ParamStore, ToyDenoiser};
use super::{
    diffuse_at_level, epsilon_loss, epsilon_loss_grad, reverse_sample, sample_noise_level_continuous, Conditioner,
    NoiseSchedule, Norm, SampleOptions, SchedulePreset, INFERENCE_BETAS,
};
use crate::cycles::{apply_rearrangement, plan_rearrangement, CycleBoundaries};
use crate::record::{Label, PairedRecord};
use crate::{mel_spectrogram, normalize, resample, Error, MelConfig, RandomStream, Real, Result, Signal};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub norm: Norm,
    pub schedule: SchedulePreset,
    pub inference_betas: Vec<f64>,
    /// Condition on a continuous `sqrt(alpha_bar)` drawn inside the bucket of
    /// a random step, rather than on the step's own value.
    pub continuous_levels: bool,
    pub steps: usize,
    /// PCG samples per training example, at the mel sample rate.
    pub crop_len: usize,
    pub rearrange_probability: f64,
    pub validate_every: usize,
    pub validation_size: usize,
    /// Stop once validation loss falls to this fraction of its initial value.
    pub stop_ratio: Option<f64>,
    pub mel: MelConfig,
    pub denoiser: DenoiserConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 2e-4,
            batch_size: 8,
            norm: Norm::L1,
            schedule: SchedulePreset::Diffwave,
            inference_betas: INFERENCE_BETAS.to_vec(),
            continuous_levels: true,
            steps: 2000,
            crop_len: 1024,
            rearrange_probability: 0.75,
            validate_every: 50,
            validation_size: 16,
            stop_ratio: None,
            mel: MelConfig::default(),
            denoiser: DenoiserConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and non-negative");
        }
        if self.batch_size == 0 || self.validate_every == 0 || self.validation_size == 0 {
            return bad("batch_size, validate_every and validation_size must be positive");
        }
        if self.crop_len < self.mel.hop {
            return bad("crop_len must cover at least one mel hop");
        }
        if !(0.0..=1.0).contains(&self.rearrange_probability) {
            return bad("rearrange_probability must lie in [0, 1]");
        }
        if self.denoiser.n_mels != self.mel.n_mels {
            return bad("denoiser.n_mels must equal mel.n_mels");
        }
        NoiseSchedule::<f64>::from_betas(&self.inference_betas)?;
        Ok(())
    }

    pub fn schedule<T: Real>(&self) -> NoiseSchedule<T> {
        NoiseSchedule::preset(self.schedule)
    }

    pub fn inference_schedule<T: Real>(&self) -> Result<NoiseSchedule<T>> {
        NoiseSchedule::from_betas(&self.inference_betas)
    }
}

/// A record resampled to the mel rate, PCG and ECG of equal length.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainRecord<T> {
    pub pcg: Signal<T>,
    pub ecg: Signal<T>,
    pub cycles: Option<CycleBoundaries>,
    pub label: Label,
}

impl<T: Real> TrainRecord<T> {
    pub fn from_paired(record: &PairedRecord<T>, mel: &MelConfig) -> Result<Self> {
        let ecg = record
            .ecg
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument(format!("record {} has no ECG to condition on", record.id)))?;
        let ratio = mel.sample_rate / record.pcg.sample_rate();
        let mut pcg = normalize(&resample(&record.pcg, mel.sample_rate)?);
        let mut ecg = normalize(&resample(ecg, mel.sample_rate)?);
        let len = pcg.len().min(ecg.len());
        pcg = pcg.slice(0, len);
        ecg = ecg.slice(0, len);
        let cycles = match &record.cycles {
            Some(c) => {
                let kept = c.scaled(ratio).indices().iter().copied().filter(|&i| i <= len).collect();
                Some(CycleBoundaries::new(kept)?)
            }
            None => None,
        };
        Ok(Self {
            pcg,
            ecg,
            cycles,
            label: record.label,
        })
    }
}

/// `ln(1 + p)` applied to a power mel spectrogram.
pub fn log_mel<T: Real>(bands: &Array2<T>) -> Array2<T> {
    bands.mapv(|p| p.ln_1p())
}

/// Log-mel conditioner for an ECG already at `mel.sample_rate`.
pub fn ecg_conditioner<T: Real>(ecg: &Signal<T>, mel: &MelConfig, label: Option<Label>) -> Result<Conditioner<T>> {
    let spec = mel_spectrogram(ecg, mel)?;
    Ok(Conditioner {
        mel: log_mel(&spec.bands),
        hop: mel.hop,
        label: label.map(Label::index),
    })
}

/// One noisy training example.
#[derive(Clone, Debug, PartialEq)]
pub struct Example<T> {
    pub noisy: Vec<T>,
    pub eps: Vec<T>,
    pub level: T,
    pub cond: Conditioner<T>,
}

fn draw_level<T: Real>(schedule: &NoiseSchedule<T>, continuous: bool, rng: &mut RandomStream) -> T {
    if continuous {
        sample_noise_level_continuous(schedule, rng).0
    } else {
        let t = rng.randint(1, schedule.steps() as i64) as usize;
        schedule.alpha_bar(t).sqrt()
    }
}

/// Collates one example: optional cycle rearrangement (same plan on PCG and
/// ECG), a hop-aligned crop, the ECG log-mel, a noise level and `eps`.
pub fn make_example<T: Real>(
    record: &TrainRecord<T>,
    config: &TrainConfig,
    schedule: &NoiseSchedule<T>,
    rearrange: bool,
    rng: &mut RandomStream,
) -> Result<Example<T>> {
    let (mut pcg, mut ecg) = (record.pcg.clone(), record.ecg.clone());
    if let (true, Some(bounds)) = (rearrange, &record.cycles) {
        let plan = plan_rearrangement(bounds.cycle_count(), config.rearrange_probability, rng);
        if !plan.is_identity() {
            pcg = apply_rearrangement(&pcg, bounds, &plan)?.0;
            ecg = apply_rearrangement(&ecg, bounds, &plan)?.0;
        }
    }
    if pcg.len() < config.crop_len {
        return Err(Error::InvalidArgument(format!(
            "record of {} samples is shorter than crop_len {}",
            pcg.len(),
            config.crop_len
        )));
    }
    let hop = config.mel.hop;
    let start = hop * rng.randint(0, ((pcg.len() - config.crop_len) / hop) as i64) as usize;
    let end = start + config.crop_len;
    let y0 = pcg.slice(start, end);
    let cond = ecg_conditioner(&ecg.slice(start, end), &config.mel, Some(record.label))?;
    let level = draw_level(schedule, config.continuous_levels, rng);
    let eps: Vec<T> = rng.normal_vec(config.crop_len);
    let noisy = diffuse_at_level(y0.samples(), level, &eps)?;
    Ok(Example {
        noisy,
        eps,
        level,
        cond,
    })
}

/// Mean loss over all samples of `batch`; adds its gradient to `grads`.
pub fn batch_loss_and_grad<T: Real>(
    model: &ToyDenoiser<T>,
    batch: &[Example<T>],
    norm: Norm,
    grads: &mut ParamStore<T>,
) -> Result<f64> {
    let total: usize = batch.iter().map(|e| e.eps.len()).sum();
    let mut loss = 0.0;
    for ex in batch {
        let (out, pass) = model.forward_pass(&ex.noisy, &ex.cond, ex.level);
        loss += epsilon_loss(&out, &ex.eps, norm)? * ex.eps.len() as f64;
        let dout = epsilon_loss_grad(&out, &ex.eps, norm, total);
        model.backward(&pass, &ex.cond, &dout, grads);
    }
    Ok(loss / total as f64)
}

pub fn batch_loss<T: Real>(model: &ToyDenoiser<T>, batch: &[Example<T>], norm: Norm) -> Result<f64> {
    let total: usize = batch.iter().map(|e| e.eps.len()).sum();
    let mut loss = 0.0;
    for ex in batch {
        let out = model.forward_pass(&ex.noisy, &ex.cond, ex.level).0;
        loss += epsilon_loss(&out, &ex.eps, norm)? * ex.eps.len() as f64;
    }
    Ok(loss / total as f64)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Training minibatch loss per step.
    pub losses: Vec<f64>,
    /// `(step, loss)` on the frozen validation batch; step 0 is before training.
    pub validation: Vec<(usize, f64)>,
    pub best_step: usize,
    pub best_validation: f64,
}

impl TrainReport {
    pub fn initial_validation(&self) -> f64 {
        self.validation.first().map_or(f64::NAN, |v| v.1)
    }
}

/// Adam on minibatches of collated examples; returns the parameters with the
/// lowest frozen-validation loss.
pub fn train_toy_denoiser<T: Real>(
    dataset: &[TrainRecord<T>],
    config: &TrainConfig,
    rng: &RandomStream,
) -> Result<(ToyDenoiser<T>, TrainReport)> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    config.validate()?;
    let schedule = config.schedule::<T>();
    let mut model = ToyDenoiser::new(config.denoiser.clone(), &mut rng.split("init"))?.zero_output();

    let mut vrng = rng.split("validation");
    let validation = (0..config.validation_size)
        .map(|_| {
            let rec = &dataset[vrng.randint(0, dataset.len() as i64 - 1) as usize];
            make_example(rec, config, &schedule, false, &mut vrng)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = TrainReport::default();
    let initial = batch_loss(&model, &validation, config.norm)?;
    report.validation.push((0, initial));
    report.best_validation = initial;
    let mut best = model.params().clone();
    let mut adam = Adam::new(model.params().len(), config.learning_rate);

    for step in 1..=config.steps {
        let mut srng = rng.split(format!("batch/{step}"));
        let batch = (0..config.batch_size)
            .map(|_| {
                let rec = &dataset[srng.randint(0, dataset.len() as i64 - 1) as usize];
                make_example(rec, config, &schedule, true, &mut srng)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut grads = model.params().zeros_like();
        let loss = batch_loss_and_grad(&model, &batch, config.norm, &mut grads)?;
        adam.step(model.params_mut().values_mut(), grads.values());
        report.losses.push(loss);

        if step % config.validate_every == 0 || step == config.steps {
            let v = batch_loss(&model, &validation, config.norm)?;
            log::info!("step {step}: train {loss:.5}, validation {v:.5}");
            report.validation.push((step, v));
            if v < report.best_validation {
                report.best_validation = v;
                report.best_step = step;
                best = model.params().clone();
            }
            if config.stop_ratio.is_some_and(|r| v <= r * initial) {
                break;
            }
        }
    }
    *model.params_mut() = best;
    Ok((model, report))
}

/// Samples a PCG conditioned on `ecg` (any rate; resampled to the mel rate).
pub fn generate_pcg<T: Real>(
    model: &ToyDenoiser<T>,
    ecg: &Signal<T>,
    label: Option<Label>,
    mel: &MelConfig,
    schedule: &NoiseSchedule<T>,
    rng: &mut RandomStream,
) -> Result<Signal<T>> {
    let ecg = normalize(&resample(ecg, mel.sample_rate)?);
    let cond = ecg_conditioner(&ecg, mel, label)?;
    let y = reverse_sample(model, &cond, schedule, rng, ecg.len(), &SampleOptions::default())?;
    Signal::new(y, mel.sample_rate)
}
