use std::sync::Mutex;

use brakesense::classifiers::{cnn_fit_tracked, ClassifierKind, CnnConfig};
use brakesense::eval::{balance_classes, evaluate_subjects, run_protocol_observed, ClassPair, EvalProtocol};
use brakesense::format::{read_epochset, write_epochset};
use brakesense::pipeline::{default_filter, synthetic_cohort, synthetic_subject, CohortConfig, SubjectEpochs};
use brakesense::{ClassLabel, EpochSet, Execution, RngSeed};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

fn short_cohort() -> CohortConfig {
    let mut cfg = CohortConfig::default();
    cfg.scenario.session_minutes = 12.0;
    cfg
}

fn short_subject(seed: u64) -> SubjectEpochs {
    let cfg = short_cohort();
    let filter = default_filter(cfg.scenario.sample_rate_hz).unwrap();
    synthetic_subject(&cfg, &filter, 60, RngSeed(seed)).unwrap()
}

fn quick_protocol(kind: ClassifierKind) -> EvalProtocol {
    EvalProtocol {
        classifier: kind,
        repetitions: 3,
        window_end_first_ms: -1000.0,
        window_end_last_ms: 0.0,
        window_step_ms: 250.0,
        seed: RngSeed(5),
        ..Default::default()
    }
}

#[test]
fn preprocessed_epochs_are_clean_and_baselined() {
    let s = short_subject(1);
    let set = &s.epochs;
    assert_eq!(set.n_channels(), 28);
    assert_eq!(set.samples_per_epoch(), 800);
    assert!(set.count(ClassLabel::Emergency) > 5);
    assert!(set.count(ClassLabel::Normal) > 5);
    assert!(set.count(ClassLabel::NoBraking) <= 60);
    assert_eq!(s.rejection.total - s.rejection.rejected, set.len());
    for e in set.epochs() {
        assert_eq!(e.t0_offset_ms, 3000);
        for c in 0..set.n_channels() {
            let ch = e.channel(c, set.samples_per_epoch());
            // baseline is 500 ms = 100 samples, corrected after rejection
            assert!(ch[..100].iter().sum::<f64>().abs() / 100.0 < 1e-9);
        }
    }
}

#[test]
fn no_test_epoch_reaches_a_fit() {
    let s = short_subject(2);
    let set = balance_classes(&s.epochs, [ClassLabel::Emergency, ClassLabel::NoBraking], RngSeed(3)).unwrap();
    for kind in [ClassifierKind::CspLda, ClassifierKind::Rmdm] {
        let seen: Mutex<Vec<(usize, Vec<usize>)>> = Mutex::new(Vec::new());
        let hook = |rep: usize, idx: &[usize]| seen.lock().unwrap().push((rep, idx.to_vec()));
        let (_, report) = run_protocol_observed(&set, &quick_protocol(kind), Execution::Parallel, &hook).unwrap();
        let mut seen = seen.into_inner().unwrap();
        seen.sort();
        assert_eq!(seen.len(), 3, "one fit per repetition");
        for (rep, train) in &seen {
            let mut uniq = train.clone();
            uniq.sort_unstable();
            uniq.dedup();
            assert_eq!(uniq.len(), train.len());
            // every epoch is either fitted on or tested, never both
            assert_eq!(train.len() + report.test_epochs_per_repetition[*rep], set.len());
            for class in [ClassLabel::Emergency, ClassLabel::NoBraking] {
                let n = train.iter().filter(|&&i| set.epochs()[i].label == class).count();
                assert_eq!(n, (set.count(class) as f64 * 0.5).round() as usize);
            }
        }
        assert_ne!(seen[0].1, seen[1].1, "repetitions draw fresh splits");
    }
}

#[test]
fn sequential_and_parallel_runs_are_identical() {
    let cfg = short_cohort();
    let filter = default_filter(200).unwrap();
    let seq = synthetic_cohort(&cfg, &filter, 2, 60, RngSeed(9), Execution::Sequential).unwrap();
    let par = synthetic_cohort(&cfg, &filter, 2, 60, RngSeed(9), Execution::Parallel).unwrap();
    let sets: Vec<EpochSet> = seq.into_iter().map(|s| s.epochs).collect();
    assert_eq!(sets, par.into_iter().map(|s| s.epochs).collect::<Vec<_>>());
    for kind in [ClassifierKind::CspLda, ClassifierKind::Rmdm] {
        let p = quick_protocol(kind);
        let a = evaluate_subjects(&sets, ClassPair::EmergencyVsNone, &p, Execution::Sequential).unwrap();
        let b = evaluate_subjects(&sets, ClassPair::EmergencyVsNone, &p, Execution::Parallel).unwrap();
        assert_eq!(a.curve, b.curve);
    }
}

#[test]
fn decoders_beat_chance_on_a_short_cohort() {
    let sets = [short_subject(4).epochs];
    for kind in [ClassifierKind::CspLda, ClassifierKind::Rmdm] {
        let ev = evaluate_subjects(&sets, ClassPair::EmergencyVsNone, &quick_protocol(kind), Execution::Parallel).unwrap();
        let at0 = ev.curve.at(0.0).unwrap().mean_accuracy;
        let early = ev.curve.at(-1000.0).unwrap().mean_accuracy;
        assert!(at0 > 0.8, "{kind}: {at0}");
        assert!(early < at0, "{kind}: {early} vs {at0}");
    }
}

#[test]
fn epoch_files_round_trip_to_the_quantized_set() {
    let s = short_subject(6);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.epo");
    write_epochset(&s.epochs, &path).unwrap();
    let back = read_epochset(&path).unwrap();
    let q = s.epochs.quantized();
    assert_eq!(back.epochs(), q.epochs());
    assert_eq!(back.montage(), q.montage());
}

#[test]
fn cnn_loss_is_nonincreasing_on_a_toy_set() {
    let mut rng = RngSeed(7).rng();
    let windows: Vec<DMatrix<f64>> = (0..16)
        .map(|_| DMatrix::from_fn(8, 100, |_, _| -> f64 { StandardNormal.sample(&mut rng) }))
        .collect();
    let mut labels: Vec<ClassLabel> = (0..16)
        .map(|i| if i < 8 { ClassLabel::Emergency } else { ClassLabel::NoBraking })
        .collect();
    labels.shuffle(&mut rng);
    let cfg = CnnConfig {
        dropout: 0.0,
        batch_size: 16,
        epochs: 60,
        ..CnnConfig::default()
    };
    let model = cnn_fit_tracked(&windows, &labels, &cfg, 200, RngSeed(8), true).unwrap();
    let h = &model.loss_history;
    assert_eq!(h.len(), 60);
    for w in h.windows(2) {
        assert!(w[1] <= w[0], "loss rose from {} to {}", w[0], w[1]);
    }
    assert!(h[59] < 0.5 * h[0]);
}
