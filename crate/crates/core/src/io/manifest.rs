//! Record manifests and cycle annotations.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::cycles::CycleBoundaries;
use crate::record::{Label, PairedRecord};
use crate::{resample, Error, Real, Result, Signal};

use super::wav::load_wav;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestRow {
    pub id: String,
    pub pcg: PathBuf,
    pub ecg: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub label: Label,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Manifest {
    /// Directory relative paths are resolved against.
    pub root: PathBuf,
    pub rows: Vec<ManifestRow>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRow {
    id: String,
    pcg: String,
    #[serde(default)]
    ecg: String,
    #[serde(default)]
    annotations: String,
    label: String,
}

fn optional_path(s: &str) -> Option<PathBuf> {
    let s = s.trim();
    (!s.is_empty()).then(|| PathBuf::from(s))
}

fn row_error(path: &Path, row: usize, message: impl Into<String>) -> Error {
    Error::Row {
        path: path.to_path_buf(),
        row,
        message: message.into(),
    }
}

/// Parses `id,pcg,ecg,annotations,label`. Rows are numbered by file line
/// (the header is row 1).
pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| row_error(path, line, e.to_string()))?;
        let row = rec.position().map_or(line, |p| p.line() as usize);
        let raw: RawRow = rec
            .deserialize(Some(&csv::StringRecord::from(vec!["id", "pcg", "ecg", "annotations", "label"])))
            .map_err(|e| row_error(path, row, e.to_string()))?;
        if raw.id.is_empty() {
            return Err(row_error(path, row, "empty id"));
        }
        if !seen.insert(raw.id.clone()) {
            return Err(row_error(path, row, format!("duplicate id {:?}", raw.id)));
        }
        let label: Label = raw
            .label
            .parse()
            .map_err(|_| row_error(path, row, format!("unknown label {:?}", raw.label)))?;
        let pcg = optional_path(&raw.pcg).ok_or_else(|| row_error(path, row, "missing pcg path"))?;
        rows.push(ManifestRow {
            id: raw.id,
            pcg,
            ecg: optional_path(&raw.ecg),
            annotations: optional_path(&raw.annotations),
            label,
        });
    }
    let header = reader.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["id", "pcg", "ecg", "annotations", "label"] {
        return Err(row_error(path, 1, format!("header must be id,pcg,ecg,annotations,label (got {})", header.iter().collect::<Vec<_>>().join(","))));
    }
    Ok(Manifest {
        root: path.parent().map(Path::to_path_buf).unwrap_or_default(),
        rows,
    })
}

/// One sample index per line, strictly increasing. Blank lines and lines
/// starting with `#` are skipped.
pub fn parse_cycles(text: &str, path: &Path) -> Result<CycleBoundaries> {
    let mut indices: Vec<usize> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: usize = line
            .parse()
            .map_err(|_| row_error(path, row, format!("not a sample index: {line:?}")))?;
        if let Some(&prev) = indices.last() {
            if v <= prev {
                return Err(row_error(path, row, format!("boundaries must increase ({prev} then {v})")));
            }
        }
        indices.push(v);
    }
    CycleBoundaries::new(indices)
}

pub fn load_cycles(path: &Path) -> Result<CycleBoundaries> {
    parse_cycles(&std::fs::read_to_string(path)?, path)
}

pub fn write_cycles(path: &Path, bounds: &CycleBoundaries) -> Result<()> {
    let mut text = String::new();
    for i in bounds.indices() {
        text.push_str(&format!("{i}\n"));
    }
    std::fs::write(path, text)?;
    Ok(())
}

impl Manifest {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    /// Loads one row. Both channels are resampled to `rate_hz` and cycle
    /// indices (given at the PCG file's rate) are rescaled to match.
    pub fn load_record<T: Real>(&self, row: &ManifestRow, rate_hz: f64) -> Result<PairedRecord<T>> {
        let pcg_raw = load_wav::<T>(&self.resolve(&row.pcg))?;
        let ecg_raw = row.ecg.as_ref().map(|p| load_wav::<T>(&self.resolve(p))).transpose()?;
        let cycles = row.annotations.as_ref().map(|p| load_cycles(&self.resolve(p))).transpose()?;
        let raw = PairedRecord {
            id: row.id.clone(),
            pcg: pcg_raw,
            ecg: ecg_raw,
            label: row.label,
            cycles,
            provenance: row.pcg.display().to_string(),
        };
        raw.validate()?;

        for (name, s) in [("PCG", Some(&raw.pcg)), ("ECG", raw.ecg.as_ref())] {
            if let Some(s) = s.filter(|s| s.sample_rate() != rate_hz) {
                log::info!("{}: resampling {name} {} Hz -> {rate_hz} Hz", row.id, s.sample_rate());
            }
        }
        let ratio = rate_hz / raw.pcg.sample_rate();
        let pcg = resample(&raw.pcg, rate_hz)?;
        // Both channels share one clock after resampling; absorb the
        // sub-period rounding difference.
        let ecg = match &raw.ecg {
            Some(e) => {
                let mut xs = resample(e, rate_hz)?.into_samples();
                let last = xs.last().copied().unwrap_or_else(T::zero);
                xs.resize(pcg.len(), last);
                Some(Signal::new(xs, rate_hz)?)
            }
            None => None,
        };
        let cycles = raw.cycles.map(|c| if ratio == 1.0 { c } else { c.scaled(ratio) });
        let record = PairedRecord { pcg, ecg, cycles, ..raw };
        record.validate()?;
        Ok(record)
    }
}
