//! Batch augmentation with provenance sidecars.
//!
//! Copy `k` of record `id` draws from `seed / "record" / id / "copy/k"`, so
//! every copy is independent of processing order. The sidecar holds every
//! draw; [`replay`] rebuilds the copy from it without a random stream.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::augment::{apply_plan, plan_pair, AugmentPlan, Augmented, ExternalNoiseBank};
use crate::cycles::{apply_rearrangement, plan_rearrangement, CycleBoundaries, RearrangePlan};
use crate::hpss::HpssStatus;
use crate::record::{Label, PairedRecord};
use crate::{normalize, Error, RandomStream, Result, Signal};

use super::config::{FragmentConfig, NoisePaths, PipelineConfig};
use super::manifest::{Manifest, ManifestRow};
use super::wav::{write_wav, write_wav_to, WavFormat};

pub const SIDECAR_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceFiles {
    pub pcg: String,
    pub ecg: Option<String>,
    pub annotations: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FragmentSpan {
    pub start: usize,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputFiles {
    pub pcg: String,
    pub ecg: Option<String>,
    /// `(pcg, ecg)` file names per fragment.
    pub fragments: Vec<(String, Option<String>)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub version: u32,
    pub seed: u64,
    pub id: String,
    pub label: Label,
    pub copy: usize,
    pub stream: Vec<String>,
    pub sample_rate: f64,
    pub wav_format: WavFormat,
    pub source: SourceFiles,
    pub noise: NoisePaths,
    /// `None` when rearrangement is off or the record has no cycles.
    pub rearrangement: Option<RearrangePlan>,
    pub plan: AugmentPlan,
    pub hpss_status: Option<HpssStatus>,
    pub cycles: Option<Vec<usize>>,
    pub fragments: Vec<FragmentSpan>,
    pub outputs: OutputFiles,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AugmentSummary {
    pub records: usize,
    pub copies: usize,
    pub files: Vec<PathBuf>,
}

pub fn copy_stream(seed: u64, id: &str, copy: usize) -> RandomStream {
    RandomStream::new(seed).split("record").split(id).split(format!("copy/{copy}"))
}

pub fn pcg_name(id: &str, copy: usize) -> String {
    format!("{id}__aug{copy}.wav")
}

pub fn ecg_name(id: &str, copy: usize) -> String {
    format!("{id}__ecg__aug{copy}.wav")
}

pub fn sidecar_name(id: &str, copy: usize) -> String {
    format!("{id}__aug{copy}.json")
}

/// Loads a manifest row at `rate_hz` with both channels peak-normalized.
pub fn prepare_record(manifest: &Manifest, row: &ManifestRow, rate_hz: f64) -> Result<PairedRecord<f64>> {
    let mut rec = manifest.load_record::<f64>(row, rate_hz)?;
    rec.pcg = normalize(&rec.pcg);
    rec.ecg = rec.ecg.as_ref().map(normalize);
    Ok(rec)
}

/// Evenly spaced windows of `seconds`; none if the signal is shorter.
pub fn fragment_spans(len: usize, rate_hz: f64, fragments: &FragmentConfig) -> Vec<FragmentSpan> {
    let flen = (fragments.seconds * rate_hz).round() as usize;
    if flen == 0 || flen > len {
        return Vec::new();
    }
    let room = len - flen;
    (0..fragments.count)
        .map(|j| {
            let start = if fragments.count == 1 {
                room / 2
            } else {
                (j as f64 * room as f64 / (fragments.count - 1) as f64).round() as usize
            };
            FragmentSpan { start, len: flen }
        })
        .collect()
}

/// Applies a drawn rearrangement (to both channels) and augmentation plan.
pub fn apply_copy(
    record: &PairedRecord<f64>,
    rearrangement: Option<&RearrangePlan>,
    plan: &AugmentPlan,
    bank: &ExternalNoiseBank,
) -> Result<Augmented<f64>> {
    let mut rec = record.clone();
    if let (Some(rp), Some(bounds)) = (rearrangement, &record.cycles) {
        let (pcg, new_bounds) = apply_rearrangement(&record.pcg, bounds, rp)?;
        if let Some(ecg) = &record.ecg {
            rec.ecg = Some(apply_rearrangement(ecg, bounds, rp)?.0);
        }
        rec.pcg = pcg;
        rec.cycles = Some(new_bounds);
    }
    apply_plan(&rec, plan, bank)
}

/// Draws the rearrangement and augmentation for one copy.
pub fn draw_copy(
    record: &PairedRecord<f64>,
    config: &PipelineConfig,
    bank: &ExternalNoiseBank,
    stream: &RandomStream,
) -> Result<(Option<RearrangePlan>, AugmentPlan)> {
    let rearrangement = match &record.cycles {
        Some(c) if config.rearrange.augment => {
            let mut rng = stream.split("rearrange");
            Some(plan_rearrangement(c.cycle_count(), config.rearrange.probability, &mut rng))
        }
        _ => None,
    };
    let plan = plan_pair(&config.augment, bank, record.ecg.is_some(), &stream.split("augment"))?;
    Ok((rearrangement, plan))
}

fn atomic_write(path: &Path, write: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    write(&tmp)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn write_signal(path: &Path, signal: &Signal<f64>, format: WavFormat) -> Result<()> {
    atomic_write(path, |tmp| write_wav(tmp, signal, format))
}

fn fragment_files(id: &str, copy: usize, spans: &[FragmentSpan], with_ecg: bool) -> Vec<(String, Option<String>)> {
    (0..spans.len())
        .map(|j| {
            (
                format!("{id}__aug{copy}__frag{j}.wav"),
                with_ecg.then(|| format!("{id}__ecg__aug{copy}__frag{j}.wav")),
            )
        })
        .collect()
}

fn source_files(row: &ManifestRow) -> SourceFiles {
    let s = |p: &PathBuf| p.display().to_string();
    SourceFiles {
        pcg: s(&row.pcg),
        ecg: row.ecg.as_ref().map(s),
        annotations: row.annotations.as_ref().map(s),
    }
}

/// Writes `copies` augmented copies of every manifest row into `out`.
pub fn run_augment(
    manifest: &Manifest,
    config: &PipelineConfig,
    seed: u64,
    copies: usize,
    out: &Path,
) -> Result<AugmentSummary> {
    config.validate()?;
    let bank = config.noise_bank()?;
    std::fs::create_dir_all(out)?;
    let mut summary = AugmentSummary { records: manifest.rows.len(), copies, files: Vec::new() };
    for row in &manifest.rows {
        let record = prepare_record(manifest, row, config.sample_rate)?;
        for k in 0..copies {
            let stream = copy_stream(seed, &row.id, k);
            let (rearrangement, plan) = draw_copy(&record, config, &bank, &stream)?;
            let aug = apply_copy(&record, rearrangement.as_ref(), &plan, &bank)?;
            let spans = config
                .fragments
                .as_ref()
                .map(|f| fragment_spans(aug.record.pcg.len(), config.sample_rate, f))
                .unwrap_or_default();
            if config.fragments.is_some() && spans.is_empty() {
                log::warn!("{} copy {k}: too short for fragments", row.id);
            }
            let outputs = OutputFiles {
                pcg: pcg_name(&row.id, k),
                ecg: aug.record.ecg.is_some().then(|| ecg_name(&row.id, k)),
                fragments: fragment_files(&row.id, k, &spans, aug.record.ecg.is_some()),
            };

            let mut written = vec![out.join(&outputs.pcg)];
            write_signal(&written[0], &aug.record.pcg, config.wav_format)?;
            if let (Some(name), Some(ecg)) = (&outputs.ecg, &aug.record.ecg) {
                written.push(out.join(name));
                write_signal(&out.join(name), ecg, config.wav_format)?;
            }
            for (span, (pname, ename)) in spans.iter().zip(&outputs.fragments) {
                let end = span.start + span.len;
                write_signal(&out.join(pname), &aug.record.pcg.slice(span.start, end), config.wav_format)?;
                written.push(out.join(pname));
                if let (Some(ename), Some(ecg)) = (ename, &aug.record.ecg) {
                    write_signal(&out.join(ename), &ecg.slice(span.start, end), config.wav_format)?;
                    written.push(out.join(ename));
                }
            }

            let sidecar = Sidecar {
                version: SIDECAR_VERSION,
                seed,
                id: row.id.clone(),
                label: row.label,
                copy: k,
                stream: stream.path().to_vec(),
                sample_rate: config.sample_rate,
                wav_format: config.wav_format,
                source: source_files(row),
                noise: config.noise.clone(),
                rearrangement,
                plan,
                hpss_status: aug.hpss_status,
                cycles: aug.record.cycles.as_ref().map(|c| c.indices().to_vec()),
                fragments: spans,
                outputs,
            };
            let path = out.join(sidecar_name(&row.id, k));
            let text = serde_json::to_string_pretty(&sidecar)? + "\n";
            atomic_write(&path, |tmp| Ok(std::fs::write(tmp, text)?))?;
            written.push(path);
            log::debug!("{} copy {k}: {} files", row.id, written.len());
            summary.files.extend(written);
        }
    }
    Ok(summary)
}

pub fn load_sidecar(path: &Path) -> Result<Sidecar> {
    let text = std::fs::read_to_string(path)?;
    let s: Sidecar = serde_json::from_str(&text)?;
    if s.version != SIDECAR_VERSION {
        return Err(Error::Config(format!("{}: unsupported sidecar version {}", path.display(), s.version)));
    }
    Ok(s)
}

/// Rebuilds a copy from its sidecar alone (plus the source record and noise
/// bank). No random draws are made.
pub fn replay(sidecar: &Sidecar, manifest: &Manifest, bank: &ExternalNoiseBank) -> Result<Augmented<f64>> {
    let row = manifest
        .rows
        .iter()
        .find(|r| r.id == sidecar.id)
        .ok_or_else(|| Error::InvalidArgument(format!("record {} not in manifest", sidecar.id)))?;
    let record = prepare_record(manifest, row, sidecar.sample_rate)?;
    let aug = apply_copy(&record, sidecar.rearrangement.as_ref(), &sidecar.plan, bank)?;
    if aug.record.cycles.as_ref().map(|c| c.indices().to_vec()) != sidecar.cycles {
        return Err(Error::InvalidArgument(format!("replay of {} copy {} diverged", sidecar.id, sidecar.copy)));
    }
    Ok(aug)
}

/// Encodes a signal as the pipeline would write it.
pub fn encode_wav(signal: &Signal<f64>, format: WavFormat) -> Result<Vec<u8>> {
    let mut buf = std::io::Cursor::new(Vec::new());
    write_wav_to(&mut buf, signal, format)?;
    Ok(buf.into_inner())
}

/// Cycle boundaries recorded in a sidecar.
pub fn sidecar_cycles(sidecar: &Sidecar) -> Result<Option<CycleBoundaries>> {
    sidecar.cycles.clone().map(CycleBoundaries::new).transpose()
}
