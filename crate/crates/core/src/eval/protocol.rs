use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{accuracy, balance_classes, class_counts, split_indices, ClassPair};
use crate::classifiers::{fit, ClassifierConfig, ClassifierKind};
use crate::error::{Error, Result};
use crate::model::{ClassLabel, EpochSet};
use crate::par::{try_map_indexed, Execution};
use crate::rng::RngSeed;

/// Stream ids under the protocol seed.
const BALANCE_STREAM: u64 = 1 << 32;
const SPLIT_STREAM: u64 = 0;
const FIT_STREAM: u64 = 1;

/// Times are ms relative to the brake-pedal onset. One classifier is
/// trained per repetition on the training window and then slid over the
/// test epochs; accuracy is attributed to the window end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalProtocol {
    pub repetitions: usize,
    pub train_fraction: f64,
    pub train_window_end_ms: f64,
    pub train_window_len_ms: f64,
    pub test_window_len_ms: f64,
    pub window_step_ms: f64,
    pub window_end_first_ms: f64,
    pub window_end_last_ms: f64,
    pub classifier: ClassifierKind,
    pub hyperparameters: ClassifierConfig,
    pub seed: RngSeed,
}

impl Default for EvalProtocol {
    fn default() -> Self {
        EvalProtocol {
            repetitions: 10,
            train_fraction: 0.5,
            train_window_end_ms: 0.0,
            train_window_len_ms: 1000.0,
            test_window_len_ms: 1000.0,
            window_step_ms: 50.0,
            window_end_first_ms: -2000.0,
            window_end_last_ms: 1000.0,
            classifier: ClassifierKind::Rmdm,
            hyperparameters: ClassifierConfig::default(),
            seed: RngSeed(0),
        }
    }
}

impl EvalProtocol {
    /// Evaluated window ends, first to last inclusive.
    pub fn window_ends(&self) -> Vec<f64> {
        let span = self.window_end_last_ms - self.window_end_first_ms;
        let n = (span / self.window_step_ms + 1e-9).floor() as usize + 1;
        (0..n)
            .map(|i| self.window_end_first_ms + i as f64 * self.window_step_ms)
            .collect()
    }

    /// Parameter checks that do not depend on data.
    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0
            || !(self.train_fraction > 0.0 && self.train_fraction < 1.0)
            || !(self.train_window_len_ms > 0.0)
            || !(self.test_window_len_ms > 0.0)
            || !(self.window_step_ms > 0.0)
            || !(self.window_end_first_ms <= self.window_end_last_ms)
            || ![self.train_window_end_ms, self.window_end_first_ms, self.window_end_last_ms]
                .iter()
                .all(|v| v.is_finite())
        {
            return Err(Error::InvalidArgument(format!("invalid evaluation protocol: {self:?}")));
        }
        self.hyperparameters.validate()
    }

    /// Checks that the training window and every test window fit inside
    /// every epoch of `set`.
    pub fn validate_for(&self, set: &EpochSet) -> Result<()> {
        self.validate()?;
        let mut offsets: Vec<u32> = set.epochs().iter().map(|e| e.t0_offset_ms).collect();
        offsets.sort_unstable();
        offsets.dedup();
        for t0 in offsets {
            let e = set.epochs().iter().find(|e| e.t0_offset_ms == t0).expect("offset present");
            set.window_bounds(e, self.train_window_end_ms, self.train_window_len_ms)?;
            set.window_bounds(e, self.window_end_first_ms, self.test_window_len_ms)?;
            set.window_bounds(e, self.window_end_last_ms, self.test_window_len_ms)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub window_end_ms: f64,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AccuracyCurve {
    pub points: Vec<CurvePoint>,
}

impl AccuracyCurve {
    pub fn at(&self, window_end_ms: f64) -> Option<&CurvePoint> {
        self.points.iter().find(|p| (p.window_end_ms - window_end_ms).abs() < 1e-6)
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = if v.len() > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

/// Pointwise mean and sample standard deviation over rows.
fn summarize(ends: &[f64], rows: &[Vec<f64>]) -> AccuracyCurve {
    AccuracyCurve {
        points: ends
            .iter()
            .enumerate()
            .map(|(j, &t)| {
                let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
                let (mean, std) = mean_std(&col);
                CurvePoint {
                    window_end_ms: t,
                    mean_accuracy: mean,
                    std_accuracy: std,
                    n: col.len(),
                }
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub classifier: ClassifierKind,
    pub classes: [ClassLabel; 2],
    pub repetitions: usize,
    pub window_ends_ms: Vec<f64>,
    /// One row per repetition, one accuracy per window end.
    pub repetition_accuracies: Vec<Vec<f64>>,
    pub counts_before_balancing: BTreeMap<ClassLabel, usize>,
    pub counts_after_balancing: BTreeMap<ClassLabel, usize>,
    pub test_epochs_per_repetition: Vec<usize>,
    /// Epochs dropped by artifact rejection upstream, if known.
    pub rejected_epochs: usize,
    /// Predictions that fell exactly on a decision boundary.
    pub ties: usize,
    /// Fits whose Riemannian class mean hit the iteration cap.
    pub unconverged_fits: usize,
    /// Excluded from serialized reports so reruns stay byte-identical.
    #[serde(skip)]
    pub wall_time_s: f64,
}

struct RepResult {
    accuracies: Vec<f64>,
    test_epochs: usize,
    ties: usize,
    converged: bool,
}

/// Evaluates an already balanced two-class set. The hook receives the
/// epoch indices that feed each fit.
pub fn run_protocol_observed(
    set: &EpochSet,
    protocol: &EvalProtocol,
    exec: Execution,
    fit_hook: &(dyn Fn(usize, &[usize]) + Sync),
) -> Result<(AccuracyCurve, RunReport)> {
    let started = Instant::now();
    protocol.validate_for(set)?;
    let counts = class_counts(set);
    let classes: Vec<ClassLabel> = counts.keys().copied().collect();
    let classes: [ClassLabel; 2] = match classes.as_slice() {
        [a, b] => [*a, *b],
        [one] => return Err(Error::SingleClass(*one)),
        _ => return Err(Error::InvalidData(format!("expected two classes, found {classes:?}"))),
    };
    let ends = protocol.window_ends();
    let kind = protocol.classifier;

    let reps = try_map_indexed(protocol.repetitions, exec, |rep| -> Result<RepResult> {
        let rep_seed = protocol.seed.split(rep as u64);
        let (train, test) = split_indices(set, protocol.train_fraction, rep_seed.split(SPLIT_STREAM))?;
        fit_hook(rep, &train);
        let windows = train
            .iter()
            .map(|&i| set.window(i, protocol.train_window_end_ms, protocol.train_window_len_ms))
            .collect::<Result<Vec<_>>>()?;
        let labels: Vec<ClassLabel> = train.iter().map(|&i| set.epochs()[i].label).collect();
        let model = fit(
            kind,
            &windows,
            &labels,
            &protocol.hyperparameters,
            set.sample_rate(),
            rep_seed.split(FIT_STREAM),
        )?;
        if !model.converged() {
            log::warn!("repetition {rep}: class mean did not converge");
        }
        let truth: Vec<ClassLabel> = test.iter().map(|&i| set.epochs()[i].label).collect();
        let mut ties = 0;
        let mut accuracies = Vec::with_capacity(ends.len());
        for &end in &ends {
            let mut preds = Vec::with_capacity(test.len());
            for &i in &test {
                let p = model.predict(&set.window(i, end, protocol.test_window_len_ms)?)?;
                ties += usize::from(p.tie);
                preds.push(p.label);
            }
            accuracies.push(accuracy(&preds, &truth)?);
        }
        Ok(RepResult {
            accuracies,
            test_epochs: test.len(),
            ties,
            converged: model.converged(),
        })
    })?;

    let rows: Vec<Vec<f64>> = reps.iter().map(|r| r.accuracies.clone()).collect();
    let curve = summarize(&ends, &rows);
    let report = RunReport {
        classifier: kind,
        classes,
        repetitions: protocol.repetitions,
        window_ends_ms: ends,
        repetition_accuracies: rows,
        counts_before_balancing: counts.clone(),
        counts_after_balancing: counts,
        test_epochs_per_repetition: reps.iter().map(|r| r.test_epochs).collect(),
        rejected_epochs: 0,
        ties: reps.iter().map(|r| r.ties).sum(),
        unconverged_fits: reps.iter().filter(|r| !r.converged).count(),
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    Ok((curve, report))
}

pub fn run_protocol(set: &EpochSet, protocol: &EvalProtocol, exec: Execution) -> Result<(AccuracyCurve, RunReport)> {
    run_protocol_observed(set, protocol, exec, &|_, _| {})
}

/// Balances `set` to the pair's classes, then runs the protocol.
pub fn evaluate_pair(
    set: &EpochSet,
    pair: ClassPair,
    protocol: &EvalProtocol,
    exec: Execution,
) -> Result<(AccuracyCurve, RunReport)> {
    let before = class_counts(&set.select(&pair.classes()));
    let balanced = balance_classes(set, pair.classes(), protocol.seed.split(BALANCE_STREAM))?;
    let (curve, mut report) = run_protocol(&balanced, protocol, exec)?;
    report.counts_before_balancing = before;
    Ok((curve, report))
}

#[derive(Debug, Clone)]
pub struct SubjectEvaluation {
    /// Mean and standard deviation across subject-mean curves.
    pub curve: AccuracyCurve,
    pub subjects: Vec<(AccuracyCurve, RunReport)>,
}

/// Each subject is trained and tested on its own data; the summary curve
/// averages the per-subject mean curves. Subject `i` uses the protocol
/// seed split by `i`.
pub fn evaluate_subjects(
    sets: &[EpochSet],
    pair: ClassPair,
    protocol: &EvalProtocol,
    exec: Execution,
) -> Result<SubjectEvaluation> {
    if sets.is_empty() {
        return Err(Error::InvalidArgument("no subjects to evaluate".into()));
    }
    let subjects = try_map_indexed(sets.len(), exec, |i| {
        let p = EvalProtocol {
            seed: protocol.seed.split(i as u64),
            ..*protocol
        };
        evaluate_pair(&sets[i], pair, &p, exec)
    })?;
    let curves: Vec<AccuracyCurve> = subjects.iter().map(|(c, _)| c.clone()).collect();
    Ok(SubjectEvaluation {
        curve: aggregate_curves(&curves)?,
        subjects,
    })
}

/// Pointwise mean and sample standard deviation of curve means.
pub fn aggregate_curves(curves: &[AccuracyCurve]) -> Result<AccuracyCurve> {
    let first = curves
        .first()
        .ok_or_else(|| Error::InvalidArgument("no curves to aggregate".into()))?;
    let ends: Vec<f64> = first.points.iter().map(|p| p.window_end_ms).collect();
    for c in curves {
        let e: Vec<f64> = c.points.iter().map(|p| p.window_end_ms).collect();
        if e != ends {
            return Err(Error::InvalidData("curves have different window ends".into()));
        }
    }
    let rows: Vec<Vec<f64>> = curves
        .iter()
        .map(|c| c.points.iter().map(|p| p.mean_accuracy).collect())
        .collect();
    Ok(summarize(&ends, &rows))
}
