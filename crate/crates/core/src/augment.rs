//! Stochastic PCG/ECG augmentation chains.
//!
//! Drawing and applying are kept apart. [`plan_pair`] consumes every random
//! number and returns an [`AugmentPlan`]; [`apply_plan`] is a pure function of
//! the record, the plan and the noise bank, so a serialized plan replays the
//! output bit for bit.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::hpss::{apply_two_stage, HpssDraw, HpssRanges, HpssStatus};
use crate::record::PairedRecord;
use crate::signal::filter::{BandEdges, FirFilter};
use crate::{normalize, resample, time_stretch, Error, RandomStream, Real, Result, Signal};

/// Closed interval `(lo, hi)`.
pub type Range = (f64, f64);

/// Which stretch rule a paired record uses. Solo ECG always uses the ECG rule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StretchRule {
    /// Gate `pcg_stretch`, factor chosen from `pcg_stretch_factors`.
    #[default]
    Pcg,
    /// Gate `ecg_stretch`, factor uniform in `ecg_stretch_range`.
    Ecg,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub pcg_hpss: f64,
    /// Applies to each of the two PCG noise stages.
    pub pcg_noise: f64,
    pub pcg_stretch: f64,
    pub pcg_am: f64,
    pub pcg_eq: f64,
    pub pcg_ext_noise: f64,
    pub ecg_noise: f64,
    pub ecg_wander: f64,
    pub ecg_stretch: f64,
    pub ecg_eq: f64,
    pub ecg_ext_noise: f64,

    pub paired_stretch_rule: StretchRule,
    pub pcg_stretch_factors: Vec<f64>,
    pub ecg_stretch_range: Range,

    pub noise_sigmas: Vec<f64>,
    pub noise_mean: Range,
    pub am_depth: Range,
    pub wander_depth: Range,
    pub fast_rate_hz: Range,
    pub slow_rate_hz: Range,
    /// Sinusoid phase offset, radians.
    pub phase: Range,

    pub eq_bands: usize,
    /// Band width as a fraction of the EQ range.
    pub eq_bandwidth: Range,
    pub eq_gain: Range,
    pub pcg_eq_hz: Range,
    pub ecg_eq_hz: Range,

    pub snr_db: Range,
    pub hpss: HpssRanges,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            pcg_hpss: 0.75,
            pcg_noise: 0.075,
            pcg_stretch: 0.75,
            pcg_am: 0.75,
            pcg_eq: 0.25,
            pcg_ext_noise: 0.5,
            ecg_noise: 0.075,
            ecg_wander: 0.30,
            ecg_stretch: 0.25,
            ecg_eq: 0.25,
            ecg_ext_noise: 0.5,
            paired_stretch_rule: StretchRule::Pcg,
            pcg_stretch_factors: vec![1.004, 1.006],
            ecg_stretch_range: (1.0, 1.06),
            noise_sigmas: vec![0.01, 0.001, 0.0001],
            noise_mean: (0.0, 0.1),
            am_depth: (0.01, 0.25),
            wander_depth: (0.01, 0.2),
            fast_rate_hz: (0.05, 0.5),
            slow_rate_hz: (0.001, 0.05),
            phase: (0.0, 1.0),
            eq_bands: 5,
            eq_bandwidth: (0.05, 0.20),
            eq_gain: (0.1, 1.0),
            pcg_eq_hz: (2.0, 500.0),
            ecg_eq_hz: (0.25, 100.0),
            snr_db: (5.0, 20.0),
            hpss: HpssRanges::default(),
        }
    }
}

impl AugmentConfig {
    /// Every gate probability forced to zero.
    pub fn disabled() -> Self {
        Self {
            pcg_hpss: 0.0,
            pcg_noise: 0.0,
            pcg_stretch: 0.0,
            pcg_am: 0.0,
            pcg_eq: 0.0,
            pcg_ext_noise: 0.0,
            ecg_noise: 0.0,
            ecg_wander: 0.0,
            ecg_stretch: 0.0,
            ecg_eq: 0.0,
            ecg_ext_noise: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::Config(what));
        for (name, p) in [
            ("pcg_hpss", self.pcg_hpss),
            ("pcg_noise", self.pcg_noise),
            ("pcg_stretch", self.pcg_stretch),
            ("pcg_am", self.pcg_am),
            ("pcg_eq", self.pcg_eq),
            ("pcg_ext_noise", self.pcg_ext_noise),
            ("ecg_noise", self.ecg_noise),
            ("ecg_wander", self.ecg_wander),
            ("ecg_stretch", self.ecg_stretch),
            ("ecg_eq", self.ecg_eq),
            ("ecg_ext_noise", self.ecg_ext_noise),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        for (name, (lo, hi)) in [
            ("ecg_stretch_range", self.ecg_stretch_range),
            ("noise_mean", self.noise_mean),
            ("am_depth", self.am_depth),
            ("wander_depth", self.wander_depth),
            ("fast_rate_hz", self.fast_rate_hz),
            ("slow_rate_hz", self.slow_rate_hz),
            ("phase", self.phase),
            ("eq_bandwidth", self.eq_bandwidth),
            ("eq_gain", self.eq_gain),
            ("pcg_eq_hz", self.pcg_eq_hz),
            ("ecg_eq_hz", self.ecg_eq_hz),
            ("snr_db", self.snr_db),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return bad(format!("{name} = [{lo}, {hi}] is not a proper range"));
            }
        }
        let (lo, hi) = self.ecg_stretch_range;
        let stretch_ok = |f: f64| (1.0..=1.1).contains(&f);
        if !stretch_ok(lo) || !stretch_ok(hi) || self.pcg_stretch_factors.iter().any(|&f| !stretch_ok(f)) {
            return bad("stretch factors must lie in [1, 1.1]".into());
        }
        if self.pcg_stretch_factors.is_empty() || self.noise_sigmas.is_empty() {
            return bad("pcg_stretch_factors and noise_sigmas must be non-empty".into());
        }
        if self.noise_sigmas.iter().any(|&s| !(s >= 0.0 && s.is_finite())) {
            return bad("noise_sigmas must be non-negative".into());
        }
        if self.eq_bands == 0 || self.eq_bandwidth.1 > 1.0 || self.eq_bandwidth.0 <= 0.0 {
            return bad("eq_bands must be positive and eq_bandwidth within (0, 1]".into());
        }
        if self.pcg_eq_hz.0 <= 0.0 || self.ecg_eq_hz.0 <= 0.0 {
            return bad("EQ ranges must start above 0 Hz".into());
        }
        Ok(())
    }
}

/// Additive Gaussian noise `N(mean, sigma^2)`; samples come from a stream
/// seeded with `seed`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianNoise {
    pub sigma: f64,
    pub mean: f64,
    pub seed: u64,
}

impl GaussianNoise {
    pub fn sample(rng: &mut RandomStream, config: &AugmentConfig) -> Self {
        Self {
            sigma: rng.choose(&config.noise_sigmas),
            mean: rng.uniform(config.noise_mean.0, config.noise_mean.1),
            seed: rng.next_u64(),
        }
    }
}

/// `b1 sin(2 pi c1 t + d1) + b2 sin(2 pi c2 t + d2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sinusoids {
    pub depth: [f64; 2],
    pub rate_hz: [f64; 2],
    pub phase: [f64; 2],
}

impl Sinusoids {
    pub fn sample(rng: &mut RandomStream, depth: Range, config: &AugmentConfig) -> Self {
        let d1 = rng.uniform(depth.0, depth.1);
        let d2 = rng.uniform(depth.0, depth.1);
        let c1 = rng.uniform(config.fast_rate_hz.0, config.fast_rate_hz.1);
        let c2 = rng.uniform(config.slow_rate_hz.0, config.slow_rate_hz.1);
        let p1 = rng.uniform(config.phase.0, config.phase.1);
        let p2 = rng.uniform(config.phase.0, config.phase.1);
        Self {
            depth: [d1, d2],
            rate_hz: [c1, c2],
            phase: [p1, p2],
        }
    }

    pub fn at(&self, t: f64) -> f64 {
        (0..2)
            .map(|k| self.depth[k] * (2.0 * PI * self.rate_hz[k] * t + self.phase[k]).sin())
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EqBand {
    pub lo_hz: f64,
    pub hi_hz: f64,
    pub gain: f64,
}

fn sample_eq(rng: &mut RandomStream, (lo, hi): Range, config: &AugmentConfig) -> Vec<EqBand> {
    (0..config.eq_bands)
        .map(|_| {
            let width = (hi - lo) * rng.uniform(config.eq_bandwidth.0, config.eq_bandwidth.1);
            let lo_hz = rng.uniform(lo, hi - width);
            EqBand {
                lo_hz,
                hi_hz: lo_hz + width,
                gain: rng.uniform(config.eq_gain.0, config.eq_gain.1),
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Pcg,
    Ecg,
}

/// Recorded noise clips by kind.
#[derive(Clone, Debug, Default)]
pub struct ExternalNoiseBank {
    pcg: Vec<Signal<f64>>,
    ecg: Vec<Signal<f64>>,
}

impl ExternalNoiseBank {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, kind: NoiseKind, clip: Signal<f64>) -> Result<()> {
        if clip.is_empty() {
            return Err(Error::Config(format!("empty {kind:?} noise clip")));
        }
        match kind {
            NoiseKind::Pcg => self.pcg.push(clip),
            NoiseKind::Ecg => self.ecg.push(clip),
        }
        Ok(())
    }

    pub fn clips(&self, kind: NoiseKind) -> &[Signal<f64>] {
        match kind {
            NoiseKind::Pcg => &self.pcg,
            NoiseKind::Ecg => &self.ecg,
        }
    }

    /// Copy with every clip resampled to `rate_hz`.
    pub fn resampled(&self, rate_hz: f64) -> Result<Self> {
        let conv = |v: &[Signal<f64>]| v.iter().map(|c| resample(c, rate_hz)).collect::<Result<Vec<_>>>();
        Ok(Self {
            pcg: conv(&self.pcg)?,
            ecg: conv(&self.ecg)?,
        })
    }
}

/// Segment of bank clip `clip`, starting at `offset` (fraction of the clip)
/// and mixed at `snr_db`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExternalNoise {
    pub clip: usize,
    pub offset: f64,
    pub snr_db: f64,
}

impl ExternalNoise {
    fn sample(rng: &mut RandomStream, clips: usize, config: &AugmentConfig) -> Self {
        Self {
            clip: rng.randint(0, clips as i64 - 1) as usize,
            offset: rng.uniform(0.0, 1.0),
            snr_db: rng.uniform(config.snr_db.0, config.snr_db.1),
        }
    }
}

/// `None` means the stage's gate did not fire.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PcgPlan {
    pub hpss: Option<HpssDraw>,
    pub noise: Option<GaussianNoise>,
    pub am: Option<Sinusoids>,
    pub noise_2: Option<GaussianNoise>,
    pub eq: Option<Vec<EqBand>>,
    pub external_noise: Option<ExternalNoise>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EcgPlan {
    pub noise: Option<GaussianNoise>,
    pub wander: Option<Sinusoids>,
    pub eq: Option<Vec<EqBand>>,
    pub external_noise: Option<ExternalNoise>,
}

/// All draws for one paired record. `stretch` is shared by both channels.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AugmentPlan {
    pub stretch: Option<f64>,
    pub pcg: PcgPlan,
    pub ecg: Option<EcgPlan>,
}

/// All draws for a solo ECG.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EcgSoloPlan {
    pub stretch: Option<f64>,
    pub ecg: EcgPlan,
}

fn gated<P>(rng: &RandomStream, label: &str, p: f64, draw: impl FnOnce(&mut RandomStream) -> P) -> Option<P> {
    let mut s = rng.split(label);
    s.chance(p).then(|| draw(&mut s))
}

fn require_clips(bank: &ExternalNoiseBank, kind: NoiseKind, p: f64) -> Result<usize> {
    let n = bank.clips(kind).len();
    if p > 0.0 && n == 0 {
        return Err(Error::Config(format!(
            "external {kind:?} noise enabled but the noise bank has no {kind:?} clips"
        )));
    }
    Ok(n)
}

fn draw_stretch(rng: &RandomStream, config: &AugmentConfig, rule: StretchRule) -> Option<f64> {
    match rule {
        StretchRule::Pcg => gated(rng, "stretch", config.pcg_stretch, |s| s.choose(&config.pcg_stretch_factors)),
        StretchRule::Ecg => gated(rng, "stretch", config.ecg_stretch, |s| {
            s.uniform(config.ecg_stretch_range.0, config.ecg_stretch_range.1)
        }),
    }
}

fn draw_ecg(rng: &RandomStream, config: &AugmentConfig, clips: usize) -> EcgPlan {
    EcgPlan {
        noise: gated(rng, "ecg/noise", config.ecg_noise, |s| GaussianNoise::sample(s, config)),
        wander: gated(rng, "ecg/wander", config.ecg_wander, |s| {
            Sinusoids::sample(s, config.wander_depth, config)
        }),
        eq: gated(rng, "ecg/eq", config.ecg_eq, |s| sample_eq(s, config.ecg_eq_hz, config)),
        external_noise: gated(rng, "ecg/external", config.ecg_ext_noise, |s| {
            ExternalNoise::sample(s, clips, config)
        }),
    }
}

/// Draws every gate and parameter for one paired record. Each stage reads
/// its own child stream of `rng`.
pub fn plan_pair(
    config: &AugmentConfig,
    bank: &ExternalNoiseBank,
    with_ecg: bool,
    rng: &RandomStream,
) -> Result<AugmentPlan> {
    config.validate()?;
    let pcg_clips = require_clips(bank, NoiseKind::Pcg, config.pcg_ext_noise)?;
    let ecg = if with_ecg {
        let clips = require_clips(bank, NoiseKind::Ecg, config.ecg_ext_noise)?;
        Some(draw_ecg(rng, config, clips))
    } else {
        None
    };
    let pcg = PcgPlan {
        hpss: gated(rng, "pcg/hpss", config.pcg_hpss, |s| HpssDraw::sample(s, &config.hpss)),
        noise: gated(rng, "pcg/noise", config.pcg_noise, |s| GaussianNoise::sample(s, config)),
        am: gated(rng, "pcg/am", config.pcg_am, |s| Sinusoids::sample(s, config.am_depth, config)),
        noise_2: gated(rng, "pcg/noise_2", config.pcg_noise, |s| GaussianNoise::sample(s, config)),
        eq: gated(rng, "pcg/eq", config.pcg_eq, |s| sample_eq(s, config.pcg_eq_hz, config)),
        external_noise: gated(rng, "pcg/external", config.pcg_ext_noise, |s| {
            ExternalNoise::sample(s, pcg_clips, config)
        }),
    };
    let rule = if with_ecg { config.paired_stretch_rule } else { StretchRule::Pcg };
    Ok(AugmentPlan {
        stretch: draw_stretch(rng, config, rule),
        pcg,
        ecg,
    })
}

/// Draws the ECG chain for an ECG with no PCG partner.
pub fn plan_ecg(config: &AugmentConfig, bank: &ExternalNoiseBank, rng: &RandomStream) -> Result<EcgSoloPlan> {
    config.validate()?;
    let clips = require_clips(bank, NoiseKind::Ecg, config.ecg_ext_noise)?;
    Ok(EcgSoloPlan {
        stretch: draw_stretch(rng, config, StretchRule::Ecg),
        ecg: draw_ecg(rng, config, clips),
    })
}

fn times(len: usize, fs: f64) -> impl Iterator<Item = f64> {
    (0..len).map(move |n| n as f64 / fs)
}

pub fn add_gaussian_noise<T: Real>(signal: &Signal<T>, noise: &GaussianNoise) -> Result<Signal<T>> {
    let mut rng = RandomStream::new(noise.seed);
    let out = signal
        .samples()
        .iter()
        .map(|&x| x + T::lit(noise.mean + noise.sigma * rng.normal()))
        .collect();
    signal.with_samples(out)
}

/// `s(t) (1 + m(t))`.
pub fn amplitude_modulate<T: Real>(signal: &Signal<T>, m: &Sinusoids) -> Result<Signal<T>> {
    let out = signal
        .samples()
        .iter()
        .zip(times(signal.len(), signal.sample_rate()))
        .map(|(&x, t)| x * T::lit(1.0 + m.at(t)))
        .collect();
    signal.with_samples(out)
}

/// `s(t) + m(t)`.
pub fn baseline_wander<T: Real>(signal: &Signal<T>, m: &Sinusoids) -> Result<Signal<T>> {
    let out = signal
        .samples()
        .iter()
        .zip(times(signal.len(), signal.sample_rate()))
        .map(|(&x, t)| x + T::lit(m.at(t)))
        .collect();
    signal.with_samples(out)
}

/// `normalize(s + sum_k g_k BP_k(s))`. Each band has transitions half its
/// width on either side.
pub fn parametric_eq<T: Real>(signal: &Signal<T>, bands: &[EqBand]) -> Result<Signal<T>> {
    let fs = signal.sample_rate();
    let mut acc: Vec<f64> = signal.samples().iter().map(|x| x.as_f64()).collect();
    for band in bands {
        let width = (band.hi_hz - band.lo_hz) / 2.0;
        let filter = FirFilter::design(BandEdges::with_transition(band.lo_hz, band.hi_hz, width, fs), fs)?;
        let filtered = filter.apply(signal)?;
        for (a, y) in acc.iter_mut().zip(filtered.samples()) {
            *a += band.gain * y.as_f64();
        }
    }
    Ok(normalize(&signal.with_samples(acc.into_iter().map(T::lit).collect())?))
}

/// The noise component [`mix_external_noise`] adds: the clip, resampled,
/// looped from `offset`, scaled so `signal_power / noise_power` is the SNR.
pub fn external_noise_component(
    len: usize,
    rate_hz: f64,
    signal_power: f64,
    clip: &Signal<f64>,
    noise: &ExternalNoise,
) -> Result<Vec<f64>> {
    let clip = resample(clip, rate_hz)?;
    let xs = clip.samples();
    if xs.is_empty() {
        return Err(Error::Config("noise clip resampled to zero length".into()));
    }
    let start = ((noise.offset * xs.len() as f64) as usize).min(xs.len() - 1);
    let seg: Vec<f64> = (0..len).map(|i| xs[(start + i) % xs.len()]).collect();
    let seg_power = seg.iter().map(|v| v * v).sum::<f64>() / len.max(1) as f64;
    let scale = if seg_power > 0.0 && noise.snr_db.is_finite() {
        (signal_power / 10f64.powf(noise.snr_db / 10.0) / seg_power).sqrt()
    } else {
        0.0
    };
    Ok(seg.into_iter().map(|v| scale * v).collect())
}

pub fn mix_external_noise<T: Real>(
    signal: &Signal<T>,
    bank: &ExternalNoiseBank,
    kind: NoiseKind,
    noise: &ExternalNoise,
) -> Result<Signal<T>> {
    let clip = bank.clips(kind).get(noise.clip).ok_or_else(|| {
        Error::Config(format!("{kind:?} noise clip {} not in bank", noise.clip))
    })?;
    let added = external_noise_component(signal.len(), signal.sample_rate(), signal.power(), clip, noise)?;
    let out = signal
        .samples()
        .iter()
        .zip(added)
        .map(|(&x, n)| T::lit(x.as_f64() + n))
        .collect();
    Ok(normalize(&signal.with_samples(out)?))
}

fn apply_ecg_chain<T: Real>(
    mut ecg: Signal<T>,
    plan: &EcgPlan,
    stretch: Option<f64>,
    bank: &ExternalNoiseBank,
) -> Result<Signal<T>> {
    if let Some(n) = &plan.noise {
        ecg = add_gaussian_noise(&ecg, n)?;
    }
    if let Some(w) = &plan.wander {
        ecg = baseline_wander(&ecg, w)?;
    }
    if let Some(f) = stretch {
        ecg = time_stretch(&ecg, f)?;
    }
    if let Some(bands) = &plan.eq {
        ecg = parametric_eq(&ecg, bands)?;
    }
    if let Some(x) = &plan.external_noise {
        ecg = mix_external_noise(&ecg, bank, NoiseKind::Ecg, x)?;
    }
    Ok(ecg)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Augmented<T> {
    pub record: PairedRecord<T>,
    pub plan: AugmentPlan,
    /// `None` when the HPSS gate did not fire.
    pub hpss_status: Option<HpssStatus>,
}

/// PCG: HPSS, noise, stretch, AM, noise, EQ, external noise.
/// ECG: noise, wander, stretch, EQ, external noise.
pub fn apply_plan<T: Real>(
    record: &PairedRecord<T>,
    plan: &AugmentPlan,
    bank: &ExternalNoiseBank,
) -> Result<Augmented<T>> {
    if record.ecg.is_some() != plan.ecg.is_some() {
        return Err(Error::InvalidArgument(format!(
            "record {} and its plan disagree on whether an ECG is present",
            record.id
        )));
    }
    let p = &plan.pcg;
    let mut pcg = record.pcg.clone();
    let mut hpss_status = None;
    if let Some(draw) = &p.hpss {
        let (out, status) = apply_two_stage(&pcg, draw)?;
        pcg = out;
        hpss_status = Some(status);
    }
    if let Some(n) = &p.noise {
        pcg = add_gaussian_noise(&pcg, n)?;
    }
    if let Some(f) = plan.stretch {
        pcg = time_stretch(&pcg, f)?;
    }
    if let Some(m) = &p.am {
        pcg = amplitude_modulate(&pcg, m)?;
    }
    if let Some(n) = &p.noise_2 {
        pcg = add_gaussian_noise(&pcg, n)?;
    }
    if let Some(bands) = &p.eq {
        pcg = parametric_eq(&pcg, bands)?;
    }
    if let Some(x) = &p.external_noise {
        pcg = mix_external_noise(&pcg, bank, NoiseKind::Pcg, x)?;
    }

    let ecg = match (&record.ecg, &plan.ecg) {
        (Some(ecg), Some(ep)) => Some(apply_ecg_chain(ecg.clone(), ep, plan.stretch, bank)?),
        _ => None,
    };
    let cycles = match (plan.stretch, &record.cycles) {
        (Some(f), Some(c)) => Some(c.scaled(f)),
        (_, c) => c.clone(),
    };
    Ok(Augmented {
        record: PairedRecord {
            id: record.id.clone(),
            pcg,
            ecg,
            label: record.label,
            cycles,
            provenance: record.provenance.clone(),
        },
        plan: plan.clone(),
        hpss_status,
    })
}

pub fn augment_pair<T: Real>(
    record: &PairedRecord<T>,
    config: &AugmentConfig,
    bank: &ExternalNoiseBank,
    rng: &RandomStream,
) -> Result<Augmented<T>> {
    let plan = plan_pair(config, bank, record.ecg.is_some(), rng)?;
    apply_plan(record, &plan, bank)
}

pub fn apply_ecg_plan<T: Real>(ecg: &Signal<T>, plan: &EcgSoloPlan, bank: &ExternalNoiseBank) -> Result<Signal<T>> {
    apply_ecg_chain(ecg.clone(), &plan.ecg, plan.stretch, bank)
}

pub fn augment_ecg<T: Real>(
    ecg: &Signal<T>,
    config: &AugmentConfig,
    bank: &ExternalNoiseBank,
    rng: &RandomStream,
) -> Result<Signal<T>> {
    apply_ecg_plan(ecg, &plan_ecg(config, bank, rng)?, bank)
}
