//! Per-subject glue between the generator, the signal chain and evaluation.

use crate::error::Result;
use crate::model::{ContinuousRecording, EpochSet};
use crate::par::{try_map_indexed, Execution};
use crate::preprocess::{
    apply_filter, baseline_correct, design_bandpass, extract_brake_epochs, extract_no_brake_epochs_from,
    reject_artifacts, EpochWindowSpec, ExtractionReport, FirFilter, RejectionReport, DEFAULT_HIGH_HZ,
    DEFAULT_LOW_HZ, DEFAULT_NUM_TAPS,
};
use crate::rng::RngSeed;
use crate::synth::{generate_subject, ErpTemplateConfig, NoiseConfig, ReactionTimeModel, ScenarioConfig};

/// Default number of no-braking epochs drawn per subject.
pub const DEFAULT_NO_BRAKE_EPOCHS: usize = 200;

#[derive(Debug, Clone)]
pub struct SubjectEpochs {
    pub epochs: EpochSet,
    pub extraction: ExtractionReport,
    pub rejection: RejectionReport,
}

/// The default 1–45 Hz, 401-tap band-pass at `sample_rate`.
pub fn default_filter(sample_rate: u32) -> Result<FirFilter> {
    design_bandpass(DEFAULT_LOW_HZ, DEFAULT_HIGH_HZ, sample_rate as f64, DEFAULT_NUM_TAPS)
}

/// Filters every recording, cuts brake epochs from each, draws
/// `no_brake_count` no-braking epochs from all of them together, then drops
/// artifact epochs and baseline-corrects the rest.
pub fn preprocess_subject(
    recordings: &[&ContinuousRecording],
    spec: &EpochWindowSpec,
    filter: &FirFilter,
    no_brake_count: usize,
    seed: RngSeed,
) -> Result<SubjectEpochs> {
    let filtered = recordings
        .iter()
        .map(|r| apply_filter(r, filter))
        .collect::<Result<Vec<_>>>()?;
    let mut extraction = ExtractionReport::default();
    let mut merged: Option<EpochSet> = None;
    for rec in &filtered {
        let (set, report) = extract_brake_epochs(rec, spec)?;
        extraction.presses += report.presses;
        extraction.extracted += report.extracted;
        extraction.skipped += report.skipped;
        merged = Some(match merged {
            None => set,
            Some(m) => m.merge(&set)?,
        });
    }
    let refs: Vec<&ContinuousRecording> = filtered.iter().collect();
    let quiet = extract_no_brake_epochs_from(&refs, spec, no_brake_count, seed)?;
    let all = match merged {
        None => quiet,
        Some(m) => m.merge(&quiet)?,
    };
    let (kept, rejection) = reject_artifacts(&all, spec.artifact_threshold_uv)?;
    let epochs = baseline_correct(&kept, spec.baseline_ms)?;
    Ok(SubjectEpochs {
        epochs,
        extraction,
        rejection,
    })
}

/// Configuration of a synthetic cohort.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CohortConfig {
    pub scenario: ScenarioConfig,
    pub erp: ErpTemplateConfig,
    pub noise: NoiseConfig,
    pub reaction: ReactionTimeModel,
    pub epochs: EpochWindowSpec,
}

/// Generates and preprocesses one subject (emergency and normal sessions).
/// Subject `i` of a cohort uses `seed.split(i)`.
pub fn synthetic_subject(cfg: &CohortConfig, filter: &FirFilter, no_brake_count: usize, seed: RngSeed) -> Result<SubjectEpochs> {
    let recs = generate_subject(&cfg.scenario, &cfg.erp, &cfg.noise, &cfg.reaction, seed)?;
    let refs: Vec<&ContinuousRecording> = recs.iter().collect();
    preprocess_subject(&refs, &cfg.epochs, filter, no_brake_count, seed.split(u64::MAX))
}

/// Subjects `0..n`, subject `i` from `seed.split(i)`.
pub fn synthetic_cohort(
    cfg: &CohortConfig,
    filter: &FirFilter,
    subjects: usize,
    no_brake_count: usize,
    seed: RngSeed,
    exec: Execution,
) -> Result<Vec<SubjectEpochs>> {
    try_map_indexed(subjects, exec, |i| synthetic_subject(cfg, filter, no_brake_count, seed.split(i as u64)))
}
