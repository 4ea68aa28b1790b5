//! Paired PCG/ECG records.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cycles::CycleBoundaries;
use crate::{Error, Real, Result, Signal};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Normal,
    Abnormal,
    Unsure,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Normal, Label::Abnormal, Label::Unsure];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Normal => "normal",
            Label::Abnormal => "abnormal",
            Label::Unsure => "unsure",
        }
    }

    /// Index into [`Label::ALL`]; used for label embeddings.
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Label::ALL
            .into_iter()
            .find(|l| l.as_str() == s.trim())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown label {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairedRecord<T> {
    pub id: String,
    pub pcg: Signal<T>,
    pub ecg: Option<Signal<T>>,
    pub label: Label,
    pub cycles: Option<CycleBoundaries>,
    pub provenance: String,
}

impl<T: Real> PairedRecord<T> {
    /// Checks that an attached ECG lasts as long as the PCG to within one
    /// sample period of the coarser channel, and that cycles fit the PCG.
    pub fn validate(&self) -> Result<()> {
        if let Some(ecg) = &self.ecg {
            let gap = (self.pcg.duration_secs() - ecg.duration_secs()).abs();
            let period = 1.0 / self.pcg.sample_rate().min(ecg.sample_rate());
            if gap >= period {
                return Err(Error::InvalidArgument(format!(
                    "record {}: PCG lasts {:.6} s but ECG {:.6} s",
                    self.id,
                    self.pcg.duration_secs(),
                    ecg.duration_secs()
                )));
            }
        }
        if let Some(c) = &self.cycles {
            c.check_within(self.pcg.len())?;
        }
        Ok(())
    }
}
