//! The signal chain from continuous recordings to clean, labeled epochs.

mod clean;
mod epochs;
mod filter;

pub use clean::{baseline_correct, reject_artifacts, RejectionReport};
pub use epochs::{
    eligible_no_brake_starts, extract_brake_epochs, extract_no_brake_epochs,
    extract_no_brake_epochs_from, ExtractionReport,
};
pub use filter::{
    apply_filter, design_bandpass, BandpassDesign, FirFilter, DEFAULT_HIGH_HZ, DEFAULT_LOW_HZ,
    DEFAULT_NUM_TAPS,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Epoch timing and cleaning parameters, all in ms / µV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpochWindowSpec {
    pub pre_ms: f64,
    pub post_ms: f64,
    pub baseline_ms: f64,
    pub artifact_threshold_uv: f64,
    pub no_brake_min_separation_ms: f64,
    pub no_brake_window_ms: f64,
}

impl Default for EpochWindowSpec {
    fn default() -> Self {
        EpochWindowSpec {
            pre_ms: 3000.0,
            post_ms: 1000.0,
            baseline_ms: 500.0,
            artifact_threshold_uv: 300.0,
            no_brake_min_separation_ms: 3000.0,
            no_brake_window_ms: 4000.0,
        }
    }
}

impl EpochWindowSpec {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.pre_ms,
            self.post_ms,
            self.baseline_ms,
            self.artifact_threshold_uv,
            self.no_brake_min_separation_ms,
            self.no_brake_window_ms,
        ];
        // an infinite rejection threshold is allowed (disables rejection)
        if all.iter().any(|v| !(*v > 0.0)) || all[..3].iter().chain(&all[4..]).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "epoch window parameters must be strictly positive: {self:?}"
            )));
        }
        if self.baseline_ms > self.pre_ms + self.post_ms {
            return Err(Error::InvalidArgument(format!(
                "baseline of {} ms exceeds the {} ms epoch",
                self.baseline_ms,
                self.pre_ms + self.post_ms
            )));
        }
        Ok(())
    }

    pub fn epoch_ms(&self) -> f64 {
        self.pre_ms + self.post_ms
    }
}
