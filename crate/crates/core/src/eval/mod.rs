//! Evaluation protocol: class balancing, stratified repeated splits,
//! sliding-window accuracy curves, prediction time, EBRT statistics and
//! topographic difference maps.

mod ebrt;
mod protocol;
mod topomap;

use std::collections::BTreeMap;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

pub use ebrt::{ebrt_stats, ebrt_stats_from_values, ebrt_values, percentile, EbrtStats};
pub use protocol::{
    aggregate_curves, evaluate_pair, evaluate_subjects, run_protocol, run_protocol_observed, AccuracyCurve,
    CurvePoint, EvalProtocol, RunReport, SubjectEvaluation,
};
pub use topomap::{topomap_export, TopomapRow, TOPOMAP_HALF_WINDOW_MS};

use crate::error::{Error, Result};
use crate::model::{ClassLabel, EpochSet};
use crate::rng::RngSeed;

/// The three two-class problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassPair {
    EmergencyVsNone,
    NormalVsNone,
    EmergencyVsNormal,
}

impl ClassPair {
    pub const ALL: [ClassPair; 3] = [ClassPair::EmergencyVsNone, ClassPair::NormalVsNone, ClassPair::EmergencyVsNormal];

    pub fn classes(self) -> [ClassLabel; 2] {
        match self {
            ClassPair::EmergencyVsNone => [ClassLabel::Emergency, ClassLabel::NoBraking],
            ClassPair::NormalVsNone => [ClassLabel::Normal, ClassLabel::NoBraking],
            ClassPair::EmergencyVsNormal => [ClassLabel::Emergency, ClassLabel::Normal],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClassPair::EmergencyVsNone => "emergency-vs-none",
            ClassPair::NormalVsNone => "normal-vs-none",
            ClassPair::EmergencyVsNormal => "emergency-vs-normal",
        }
    }
}

impl std::fmt::Display for ClassPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ClassPair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|p| p.as_str() == s).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "unknown pair {s:?}; valid: emergency-vs-none, normal-vs-none, emergency-vs-normal"
            ))
        })
    }
}

pub(crate) fn class_counts(set: &EpochSet) -> BTreeMap<ClassLabel, usize> {
    let mut m = BTreeMap::new();
    for e in set.epochs() {
        *m.entry(e.label).or_insert(0) += 1;
    }
    m
}

/// Keeps only the two classes and downsamples the larger one uniformly
/// without replacement to the size of the smaller. Original order is kept.
pub fn balance_classes(set: &EpochSet, classes: [ClassLabel; 2], seed: RngSeed) -> Result<EpochSet> {
    let idx: [Vec<usize>; 2] = classes.map(|c| {
        set.epochs()
            .iter()
            .enumerate()
            .filter(|(_, e)| e.label == c)
            .map(|(i, _)| i)
            .collect()
    });
    for (c, members) in classes.iter().zip(&idx) {
        if members.is_empty() {
            return Err(Error::MissingClass(*c));
        }
    }
    let n = idx[0].len().min(idx[1].len());
    let mut rng = seed.rng();
    let mut keep = Vec::with_capacity(2 * n);
    for members in &idx {
        if members.len() == n {
            keep.extend_from_slice(members);
        } else {
            keep.extend(index::sample(&mut rng, members.len(), n).into_iter().map(|k| members[k]));
        }
    }
    keep.sort_unstable();
    Ok(set.with_epochs(keep.into_iter().map(|i| set.epochs()[i].clone()).collect()))
}

/// Stratified split of epoch indices. Per class the training share is
/// `round(n * fraction)` (halves round up), clamped so both sides get at
/// least one epoch. Both index lists are sorted.
pub fn split_indices(set: &EpochSet, train_fraction: f64, seed: RngSeed) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("train fraction {train_fraction} outside (0, 1)")));
    }
    let mut rng = seed.rng();
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (class, count) in class_counts(set) {
        if count < 2 {
            return Err(Error::TooFewEpochs {
                class,
                count,
                required: 2,
            });
        }
        let mut members: Vec<usize> = set
            .epochs()
            .iter()
            .enumerate()
            .filter(|(_, e)| e.label == class)
            .map(|(i, _)| i)
            .collect();
        members.shuffle(&mut rng);
        let n_train = ((count as f64 * train_fraction).round() as usize).clamp(1, count - 1);
        train.extend_from_slice(&members[..n_train]);
        test.extend_from_slice(&members[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split_half(set: &EpochSet, train_fraction: f64, seed: RngSeed) -> Result<(EpochSet, EpochSet)> {
    let (train, test) = split_indices(set, train_fraction, seed)?;
    let pick = |idx: &[usize]| set.with_epochs(idx.iter().map(|&i| set.epochs()[i].clone()).collect());
    Ok((pick(&train), pick(&test)))
}

/// `p = Nc / N`.
pub fn accuracy(predictions: &[ClassLabel], labels: &[ClassLabel]) -> Result<f64> {
    if predictions.is_empty() || predictions.len() != labels.len() {
        return Err(Error::InvalidArgument(format!(
            "accuracy needs equal nonempty inputs, got {} predictions and {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let nc = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(nc as f64 / predictions.len() as f64)
}

/// Earliest window end `t* <= 0` such that every curve point in `[t*, 0]`
/// reaches `threshold`; `None` if the latest point at or before 0 misses it.
pub fn prediction_time(curve: &AccuracyCurve, threshold: f64) -> Option<f64> {
    let mut best = None;
    for p in curve.points.iter().rev().filter(|p| p.window_end_ms <= 0.0) {
        if p.mean_accuracy >= threshold {
            best = Some(p.window_end_ms);
        } else {
            break;
        }
    }
    best
}
