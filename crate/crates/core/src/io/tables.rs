//! Prediction and label CSVs for subject-level metrics.

use std::collections::HashMap;
use std::path::Path;

use crate::metrics::aggregate_subject;
use crate::record::Label;
use crate::{Error, Result};

fn rows(path: &Path, header: [&str; 2]) -> Result<Vec<(usize, String, String)>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let got = reader.headers()?.clone();
    if got.iter().collect::<Vec<_>>() != header {
        return Err(Error::Row {
            path: path.to_path_buf(),
            row: 1,
            message: format!("header must be {}", header.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::Row { path: path.to_path_buf(), row, message: e.to_string() })?;
        if rec.len() != 2 {
            return Err(Error::Row { path: path.to_path_buf(), row, message: "expected 2 fields".into() });
        }
        out.push((row, rec[0].to_string(), rec[1].to_string()));
    }
    Ok(out)
}

/// `id,score` rows; an id may repeat (one row per fragment).
pub fn load_predictions(path: &Path) -> Result<Vec<(String, f64)>> {
    rows(path, ["id", "score"])?
        .into_iter()
        .map(|(row, id, score)| {
            let v: f64 = score.parse().ok().filter(|v: &f64| (0.0..=1.0).contains(v)).ok_or_else(|| Error::Row {
                path: path.to_path_buf(),
                row,
                message: format!("score {score:?} is not a number in [0, 1]"),
            })?;
            Ok((id, v))
        })
        .collect()
}

/// `id,label` rows; labels are `normal`/`abnormal`/`unsure` or `0`/`1`.
pub fn load_labels(path: &Path) -> Result<Vec<(String, Label)>> {
    let mut seen = HashMap::new();
    rows(path, ["id", "label"])?
        .into_iter()
        .map(|(row, id, label)| {
            let err = |m: String| Error::Row { path: path.to_path_buf(), row, message: m };
            let l = match label.as_str() {
                "0" => Label::Normal,
                "1" => Label::Abnormal,
                s => s.parse().map_err(|_| err(format!("unknown label {s:?}")))?,
            };
            if seen.insert(id.clone(), row).is_some() {
                return Err(err(format!("duplicate id {id:?}")));
            }
            Ok((id, l))
        })
        .collect()
}

/// Averages fragment scores per subject. Returns `(predictions, truths)`
/// in label-file order; `unsure` subjects are skipped.
pub fn subject_outcomes(
    predictions: &[(String, f64)],
    labels: &[(String, Label)],
    threshold: f64,
) -> Result<(Vec<bool>, Vec<bool>)> {
    let mut scores: HashMap<&str, Vec<f64>> = HashMap::new();
    for (id, s) in predictions {
        scores.entry(id.as_str()).or_default().push(*s);
    }
    let known: HashMap<&str, Label> = labels.iter().map(|(id, l)| (id.as_str(), *l)).collect();
    if let Some(id) = scores.keys().find(|id| !known.contains_key(*id)) {
        return Err(Error::InvalidArgument(format!("prediction for unlabelled id {id:?}")));
    }
    let mut preds = Vec::new();
    let mut truths = Vec::new();
    for (id, label) in labels {
        if *label == Label::Unsure {
            log::info!("skipping unsure subject {id}");
            continue;
        }
        let s = scores
            .get(id.as_str())
            .ok_or_else(|| Error::InvalidArgument(format!("no prediction for {id:?}")))?;
        preds.push(aggregate_subject(s, threshold)?);
        truths.push(*label == Label::Abnormal);
    }
    Ok((preds, truths))
}
