//! Synthetic paired PCG/ECG records with exact cycle boundaries.
//!
//! Each cycle starts at an R peak. The PCG carries a damped S1 burst shortly
//! after it and an S2 burst a third of the way in; abnormal records add a
//! 150-400 Hz murmur between the two. Labels alternate normal/abnormal.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use crate::cycles::CycleBoundaries;
use crate::record::Label;
use crate::{RandomStream, Result, Signal};

use super::config::PipelineConfig;
use super::manifest::write_cycles;
use super::wav::{write_wav, WavFormat};

pub const FIXTURE_RATE: f64 = 2000.0;
pub const NOISE_PCG_RATE: f64 = 2000.0;
pub const NOISE_ECG_RATE: f64 = 360.0;
const LEAD_IN_SECS: f64 = 0.25;
const TAIL_SECS: f64 = 0.3;
const NOISE_CLIPS: usize = 2;
const NOISE_SECS: f64 = 3.0;

#[derive(Clone, Debug)]
pub struct FixtureRecord {
    pub id: String,
    pub pcg: Signal<f64>,
    pub ecg: Signal<f64>,
    pub label: Label,
    pub cycles: CycleBoundaries,
}

#[derive(Clone, Debug)]
pub struct FixtureSet {
    pub manifest: PathBuf,
    pub config: PathBuf,
    pub labels: PathBuf,
    pub ids: Vec<String>,
}

fn damped_burst(out: &mut [f64], start: usize, freq: f64, amp: f64, tau: f64, phase: f64) {
    let attack = 0.004;
    let span = (8.0 * tau * FIXTURE_RATE) as usize;
    for (k, y) in out.iter_mut().skip(start).take(span).enumerate() {
        let t = k as f64 / FIXTURE_RATE;
        let env = (t / attack).min(1.0) * (-t / tau).exp();
        *y += amp * env * (2.0 * PI * freq * t + phase).sin();
    }
}

fn gaussian_wave(out: &mut [f64], centre: f64, amp: f64, width: f64) {
    let lo = ((centre - 5.0 * width) * FIXTURE_RATE).floor().max(0.0) as usize;
    let hi = (((centre + 5.0 * width) * FIXTURE_RATE).ceil() as usize).min(out.len());
    for (n, y) in out.iter_mut().enumerate().take(hi).skip(lo) {
        let d = (n as f64 / FIXTURE_RATE - centre) / width;
        *y += amp * (-0.5 * d * d).exp();
    }
}

fn peak_normalized(mut xs: Vec<f64>) -> Vec<f64> {
    let peak = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if peak > 0.0 {
        xs.iter_mut().for_each(|x| *x /= peak);
    }
    xs
}

/// Generates record `index` of the fixture set for `seed`.
pub fn fixture_record(seed: u64, index: usize) -> Result<FixtureRecord> {
    let mut rng = RandomStream::new(seed).split("fixture").split(index.to_string());
    let label = if index.is_multiple_of(2) { Label::Normal } else { Label::Abnormal };
    let n_cycles = rng.randint(4, 7) as usize;
    let lengths: Vec<f64> = (0..n_cycles).map(|_| rng.uniform(0.7, 1.0)).collect();

    let mut bounds = vec![(LEAD_IN_SECS * FIXTURE_RATE).round() as usize];
    let mut t = LEAD_IN_SECS;
    for len in &lengths {
        t += len;
        bounds.push((t * FIXTURE_RATE).round() as usize);
    }
    let total = bounds[n_cycles] + (TAIL_SECS * FIXTURE_RATE).round() as usize;

    let mut pcg = vec![0.0; total];
    let mut ecg = vec![0.0; total];
    let s1_freq = rng.uniform(30.0, 80.0);
    let s2_freq = rng.uniform(70.0, 150.0);
    for c in 0..n_cycles {
        let start = bounds[c];
        let len = bounds[c + 1] - start;
        let s1 = start + (0.04 * FIXTURE_RATE) as usize;
        let s2 = start + (0.35 * len as f64) as usize;
        damped_burst(&mut pcg, s1, s1_freq * rng.uniform(0.95, 1.05), 1.0, 0.025, rng.uniform(0.0, 2.0 * PI));
        damped_burst(&mut pcg, s2, s2_freq * rng.uniform(0.95, 1.05), 0.7, 0.02, rng.uniform(0.0, 2.0 * PI));

        if label == Label::Abnormal {
            let m0 = s1 + (0.09 * FIXTURE_RATE) as usize;
            let m1 = s2.saturating_sub((0.02 * FIXTURE_RATE) as usize).max(m0 + 1);
            let tones: Vec<(f64, f64)> = (0..8)
                .map(|_| (rng.uniform(150.0, 400.0), rng.uniform(0.0, 2.0 * PI)))
                .collect();
            let span = (m1 - m0) as f64;
            for (k, y) in pcg[m0..m1].iter_mut().enumerate() {
                let w = (PI * k as f64 / span).sin().powi(2);
                let tt = k as f64 / FIXTURE_RATE;
                let v: f64 = tones.iter().map(|(f, ph)| (2.0 * PI * f * tt + ph).sin()).sum();
                *y += 0.06 * w * v;
            }
        }

        let r = start as f64 / FIXTURE_RATE;
        let len_s = len as f64 / FIXTURE_RATE;
        gaussian_wave(&mut ecg, r - 0.16, 0.15, 0.025);
        gaussian_wave(&mut ecg, r - 0.025, -0.1, 0.008);
        gaussian_wave(&mut ecg, r, 1.0, 0.008);
        gaussian_wave(&mut ecg, r + 0.025, -0.25, 0.008);
        gaussian_wave(&mut ecg, r + 0.35 * len_s, 0.3, 0.045);
    }
    let mut bg = rng.split("background");
    for y in pcg.iter_mut() {
        *y += 0.005 * bg.normal();
    }
    for y in ecg.iter_mut() {
        *y += 0.005 * bg.normal();
    }

    Ok(FixtureRecord {
        id: format!("fx{index:03}"),
        pcg: Signal::new(peak_normalized(pcg), FIXTURE_RATE)?,
        ecg: Signal::new(peak_normalized(ecg), FIXTURE_RATE)?,
        label,
        cycles: CycleBoundaries::new(bounds)?,
    })
}

/// Background noise clips: rumble plus hiss for PCG, hiss plus mains hum
/// for ECG (at a different rate so mixing exercises resampling).
pub fn noise_clip(seed: u64, pcg: bool, index: usize) -> Result<Signal<f64>> {
    let kind = if pcg { "pcg" } else { "ecg" };
    let mut rng = RandomStream::new(seed).split("noise").split(kind).split(index.to_string());
    let rate = if pcg { NOISE_PCG_RATE } else { NOISE_ECG_RATE };
    let n = (NOISE_SECS * rate) as usize;
    let mut xs = Vec::with_capacity(n);
    let mut state = 0.0;
    let hum = rng.uniform(0.2, 0.5);
    for i in 0..n {
        let w = rng.normal();
        let x = if pcg {
            state = 0.98 * state + 0.1 * w;
            state + 0.2 * w
        } else {
            0.5 * w + hum * (2.0 * PI * 50.0 * i as f64 / rate).sin()
        };
        xs.push(x);
    }
    Signal::new(peak_normalized(xs), rate)
}

/// Writes `count` records plus noise clips, a manifest, a label CSV and a
/// default pipeline config under `out`. Output bytes depend only on `seed`.
pub fn make_fixtures(seed: u64, count: usize, out: &Path) -> Result<FixtureSet> {
    for dir in ["pcg", "ecg", "cycles", "noise"] {
        std::fs::create_dir_all(out.join(dir))?;
    }
    let mut manifest = csv::Writer::from_path(out.join("manifest.csv"))?;
    manifest.write_record(["id", "pcg", "ecg", "annotations", "label"])?;
    let mut labels = csv::Writer::from_path(out.join("labels.csv"))?;
    labels.write_record(["id", "label"])?;
    let mut ids = Vec::with_capacity(count);
    for i in 0..count {
        let rec = fixture_record(seed, i)?;
        let pcg = format!("pcg/{}.wav", rec.id);
        let ecg = format!("ecg/{}.wav", rec.id);
        let cyc = format!("cycles/{}.csv", rec.id);
        write_wav(&out.join(&pcg), &rec.pcg, WavFormat::Float32)?;
        write_wav(&out.join(&ecg), &rec.ecg, WavFormat::Float32)?;
        write_cycles(&out.join(&cyc), &rec.cycles)?;
        manifest.write_record([rec.id.as_str(), &pcg, &ecg, &cyc, rec.label.as_str()])?;
        labels.write_record([rec.id.as_str(), rec.label.as_str()])?;
        ids.push(rec.id);
    }
    manifest.flush()?;
    labels.flush()?;

    let mut config = PipelineConfig { seed: Some(seed), ..PipelineConfig::default() };
    for (pcg, list) in [(true, &mut config.noise.pcg), (false, &mut config.noise.ecg)] {
        for j in 0..NOISE_CLIPS {
            let rel = format!("noise/{}_{j}.wav", if pcg { "pcg" } else { "ecg" });
            write_wav(&out.join(&rel), &noise_clip(seed, pcg, j)?, WavFormat::Float32)?;
            list.push(PathBuf::from(rel));
        }
    }
    std::fs::write(out.join("config.json"), serde_json::to_string_pretty(&config)? + "\n")?;

    Ok(FixtureSet {
        manifest: out.join("manifest.csv"),
        config: out.join("config.json"),
        labels: out.join("labels.csv"),
        ids,
    })
}
