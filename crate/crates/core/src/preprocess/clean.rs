use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ms_to_samples, ClassLabel, EpochSet};

/// Emitted by the preprocessing step as JSON.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionReport {
    pub total: usize,
    pub rejected: usize,
    pub kept_per_class: std::collections::BTreeMap<ClassLabel, usize>,
}

impl RejectionReport {
    pub fn merge(&mut self, other: &RejectionReport) {
        self.total += other.total;
        self.rejected += other.rejected;
        for (k, v) in &other.kept_per_class {
            *self.kept_per_class.entry(*k).or_default() += v;
        }
    }
}

/// Drops every epoch holding a sample with `|v| > threshold_uv`.
pub fn reject_artifacts(set: &EpochSet, threshold_uv: f64) -> Result<(EpochSet, RejectionReport)> {
    if !(threshold_uv > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "artifact threshold must be positive, got {threshold_uv}"
        )));
    }
    let kept: Vec<_> = set
        .epochs()
        .iter()
        .filter(|e| e.data.iter().all(|v| v.abs() <= threshold_uv))
        .cloned()
        .collect();
    let out = set.with_epochs(kept);
    let report = RejectionReport {
        total: set.len(),
        rejected: set.len() - out.len(),
        kept_per_class: ClassLabel::ALL
            .into_iter()
            .map(|l| (l, out.count(l)))
            .filter(|&(_, n)| n > 0)
            .collect(),
    };
    Ok((out, report))
}

/// Subtracts, per epoch and channel, the mean of the first `baseline_ms`.
pub fn baseline_correct(set: &EpochSet, baseline_ms: f64) -> Result<EpochSet> {
    let n = ms_to_samples(baseline_ms, set.sample_rate());
    let t = set.samples_per_epoch();
    if !(baseline_ms > 0.0) || n == 0 || n > t {
        return Err(Error::InvalidArgument(format!(
            "baseline of {baseline_ms} ms does not fit the {} ms epoch",
            set.epoch_duration_ms()
        )));
    }
    let epochs = set
        .epochs()
        .iter()
        .map(|e| {
            let mut e = e.clone();
            for ch in e.data.chunks_exact_mut(t) {
                let mean = ch[..n].iter().sum::<f64>() / n as f64;
                ch.iter_mut().for_each(|v| *v -= mean);
            }
            e
        })
        .collect();
    Ok(set.with_epochs(epochs))
}
