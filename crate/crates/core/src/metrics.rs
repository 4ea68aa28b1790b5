//! Binary classification measures and fragment-to-subject aggregation.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Positive and negative roles exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            tp: self.tn,
            fp: self.fn_,
            tn: self.tp,
            fn_: self.fp,
        }
    }
}

/// Tallies predictions against labels; `true` is the positive class.
pub fn confusion(preds: &[bool], labels: &[bool]) -> Result<ConfusionMatrix> {
    if preds.len() != labels.len() {
        return Err(Error::ShapeMismatch {
            expected: labels.len(),
            actual: preds.len(),
        });
    }
    if preds.is_empty() {
        return Err(Error::InvalidArgument("no predictions to score".into()));
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &l) in preds.iter().zip(labels) {
        match (p, l) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, false) => cm.tn += 1,
            (false, true) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

/// `None` marks a measure whose denominator is zero; it renders as `NaN`
/// and serializes as `null`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub acc: Option<f64>,
    pub balanced_acc: Option<f64>,
    pub tpr: Option<f64>,
    pub tnr: Option<f64>,
    pub ppv: Option<f64>,
    pub npv: Option<f64>,
    pub f1_pos: Option<f64>,
    pub f1_neg: Option<f64>,
    pub mcc: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn harmonic(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    let (a, b) = (a?, b?);
    (a + b > 0.0).then(|| 2.0 * a * b / (a + b))
}

pub fn compute_metrics(cm: &ConfusionMatrix) -> MetricsReport {
    let ConfusionMatrix { tp, fp, tn, fn_ } = *cm;
    let tpr = ratio(tp, tp + fn_);
    let tnr = ratio(tn, tn + fp);
    let ppv = ratio(tp, tp + fp);
    let npv = ratio(tn, tn + fn_);
    let (tpf, fpf, tnf, fnf) = (tp as f64, fp as f64, tn as f64, fn_ as f64);
    let den = (tpf + fpf) * (tpf + fnf) * (tnf + fpf) * (tnf + fnf);
    MetricsReport {
        acc: ratio(tp + tn, cm.total()),
        balanced_acc: tpr.zip(tnr).map(|(a, b)| (a + b) / 2.0),
        tpr,
        tnr,
        ppv,
        npv,
        f1_pos: harmonic(ppv, tpr),
        f1_neg: harmonic(npv, tnr),
        mcc: (den > 0.0).then(|| (tpf * tnf - fpf * fnf) / den.sqrt()),
    }
}

pub const TABLE_COLUMNS: [&str; 9] = ["Acc", "Acc-mu", "TPR", "TNR", "PPV", "NPV", "F1+", "F1-", "MCC"];
const COLUMN_WIDTH: usize = 8;

impl MetricsReport {
    fn cells(&self) -> [String; 9] {
        let pct = |v: Option<f64>| v.map_or_else(|| "NaN".to_string(), |x| format!("{:.2}", 100.0 * x));
        [
            pct(self.acc),
            pct(self.balanced_acc),
            pct(self.tpr),
            pct(self.tnr),
            pct(self.ppv),
            pct(self.npv),
            pct(self.f1_pos),
            pct(self.f1_neg),
            self.mcc.map_or_else(|| "NaN".to_string(), |x| format!("{x:.3}")),
        ]
    }

    pub fn table_header() -> String {
        let mut out = String::new();
        for (i, c) in TABLE_COLUMNS.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{c:>COLUMN_WIDTH$}");
        }
        out
    }

    /// Percentages with two decimals, MCC with three, right-aligned.
    pub fn table_row(&self) -> String {
        let mut out = String::new();
        for (i, c) in self.cells().iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{c:>COLUMN_WIDTH$}");
        }
        out
    }
}

/// Mean fragment score against `threshold`; a tie is positive.
pub fn aggregate_subject(scores: &[f64], threshold: f64) -> Result<bool> {
    if scores.is_empty() {
        return Err(Error::InvalidArgument("subject has no fragment scores".into()));
    }
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    Ok(mean >= threshold)
}
