//! The subcommands.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use brakesense::classifiers::ClassifierKind;
use brakesense::eval::{
    ebrt_stats, evaluate_subjects, prediction_time, topomap_export, AccuracyCurve, ClassPair, EvalProtocol,
    RunReport,
};
use brakesense::format::{encode_epochset, encode_recording, read_epochset, read_recording};
use brakesense::model::{BrakeClass, EpochSet};
use brakesense::output::{curve_csv, fmt_sig, to_json, topomap_csv};
use brakesense::par::try_map_indexed;
use brakesense::pipeline::preprocess_subject;
use brakesense::preprocess::{ExtractionReport, FirFilter, RejectionReport};
use brakesense::synth::{generate_subject, write_events_csv};
use brakesense::{ContinuousRecording, Execution, RngSeed};
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::files::{collect, create_dir, group_by_parent, write, write_entry, write_manifest};
use crate::{ClfArg, GlobalArgs, PairArg};

/// Threshold at which prediction times are reported.
pub const PREDICTION_THRESHOLD: f64 = 0.75;

pub struct Context {
    pub config: PipelineConfig,
    pub config_hash: String,
    pub seed: RngSeed,
    pub out: PathBuf,
    /// `--out` was given explicitly.
    pub out_explicit: bool,
    pub exec: Execution,
    pub strict: bool,
}

impl Context {
    pub fn new(args: &GlobalArgs) -> Result<Self, CliError> {
        let config = match &args.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        Ok(Context {
            config_hash: config.hash(),
            seed: args.seed.map_or(config.protocol.seed, RngSeed),
            out: args.out.clone().unwrap_or_else(|| config.output_dir.clone()),
            out_explicit: args.out.is_some(),
            exec: if args.jobs == 1 { Execution::Sequential } else { Execution::Parallel },
            strict: args.strict,
            config,
        })
    }

    fn filter(&self) -> Result<FirFilter, CliError> {
        self.config.filter()
    }
}

fn mode_name(mode: BrakeClass) -> &'static str {
    match mode {
        BrakeClass::Emergency => "emergency",
        BrakeClass::Normal => "normal",
    }
}

pub fn simulate(ctx: &Context) -> Result<(), CliError> {
    let cohort = ctx.config.cohort();
    create_dir(&ctx.out)?;
    let started = Instant::now();
    let per_subject = try_map_indexed(ctx.config.subjects, ctx.exec, |i| {
        let recs = generate_subject(&cohort.scenario, &cohort.erp, &cohort.noise, &cohort.reaction, ctx.seed.split(i as u64))?;
        let mut entries = Vec::new();
        for (rec, mode) in recs.iter().zip([BrakeClass::Emergency, BrakeClass::Normal]) {
            let stem = format!("subject-{i:02}/{}", mode_name(mode));
            entries.push(write_entry(&ctx.out, &format!("{stem}.rec"), &encode_recording(rec)?)?);
            entries.push(write_entry(&ctx.out, &format!("{stem}_events.csv"), write_events_csv(rec.events()).as_bytes())?);
        }
        log::info!("subject {i}: 2 sessions written");
        Ok::<_, CliError>(entries)
    })?;
    let entries: Vec<_> = per_subject.into_iter().flatten().collect();
    let n = entries.len() / 2;
    write_manifest(&ctx.out, "simulate", &ctx.config_hash, ctx.seed.0, entries)?;
    println!(
        "simulated {} subjects ({n} recordings) into {} in {:.1} s",
        ctx.config.subjects,
        ctx.out.display(),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct SubjectPreprocessing {
    subject: String,
    recordings: Vec<String>,
    extraction: ExtractionReport,
    rejection: RejectionReport,
}

#[derive(Debug, Serialize)]
struct PreprocessReport {
    subjects: Vec<SubjectPreprocessing>,
    total: RejectionReport,
}

pub fn preprocess(ctx: &Context, inputs: &[PathBuf], threshold: Option<f64>) -> Result<(), CliError> {
    let mut spec = ctx.config.epochs;
    if let Some(t) = threshold {
        spec.artifact_threshold_uv = t;
        spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let filter = ctx.filter()?;
    let groups: Vec<(PathBuf, Vec<PathBuf>)> = group_by_parent(collect(inputs, "rec")?).into_iter().collect();
    let names: Vec<String> = groups
        .iter()
        .enumerate()
        .map(|(i, (dir, _))| {
            dir.file_name()
                .map_or_else(|| format!("subject-{i:02}"), |n| n.to_string_lossy().into_owned())
        })
        .collect();
    if let Some(dup) = names.iter().enumerate().find(|(i, n)| names[..*i].contains(n)) {
        return Err(CliError::Usage(format!(
            "two input directories are both named {:?}; subjects need distinct directory names",
            dup.1
        )));
    }
    create_dir(&ctx.out)?;
    // subject i reproduces the library cohort when fed the simulate output
    let results = try_map_indexed(groups.len(), ctx.exec, |i| {
        let (_, files) = &groups[i];
        let recs = files
            .iter()
            .map(|f| read_recording(f).map_err(|e| CliError::Data(format!("{}: {e}", f.display()))))
            .collect::<Result<Vec<ContinuousRecording>, _>>()?;
        let refs: Vec<&ContinuousRecording> = recs.iter().collect();
        let seed = ctx.seed.split(i as u64).split(u64::MAX);
        let subject = preprocess_subject(&refs, &spec, &filter, ctx.config.no_brake_epochs, seed)?;
        let entry = write_entry(&ctx.out, &format!("{}.epo", names[i]), &encode_epochset(&subject.epochs)?)?;
        log::info!(
            "{}: {} epochs kept, {} rejected",
            names[i],
            subject.epochs.len(),
            subject.rejection.rejected
        );
        let row = SubjectPreprocessing {
            subject: names[i].clone(),
            recordings: files.iter().map(|f| f.display().to_string()).collect(),
            extraction: subject.extraction,
            rejection: subject.rejection,
        };
        Ok::<_, CliError>((entry, row))
    })?;
    let (entries, rows): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let mut total = RejectionReport::default();
    rows.iter().for_each(|r| total.merge(&r.rejection));
    let report = PreprocessReport { subjects: rows, total };
    write(&ctx.out.join("rejection.json"), to_json(&report)?.as_bytes())?;
    write_manifest(&ctx.out, "preprocess", &ctx.config_hash, ctx.seed.0, entries)?;
    println!(
        "preprocessed {} subjects into {}: {} of {} epochs rejected",
        groups.len(),
        ctx.out.display(),
        report.total.rejected,
        report.total.total
    );
    Ok(())
}

fn load_subjects(ctx: &Context, inputs: &[PathBuf]) -> Result<(Vec<String>, Vec<EpochSet>), CliError> {
    let files = collect(inputs, "epo")?;
    let sets = try_map_indexed(files.len(), ctx.exec, |i| {
        read_epochset(&files[i]).map_err(|e| CliError::Data(format!("{}: {e}", files[i].display())))
    })?;
    let names = files.iter().map(|f| f.display().to_string()).collect();
    Ok((names, sets))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubjectRun {
    pub source: String,
    pub curve: AccuracyCurve,
    pub report: RunReport,
}

/// Contents of a run directory's `report.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub pair: ClassPair,
    pub classifier: ClassifierKind,
    pub seed: RngSeed,
    pub config_hash: String,
    pub protocol: EvalProtocol,
    /// Mean and standard deviation across subject-mean curves.
    pub curve: AccuracyCurve,
    pub prediction_time_ms: Option<f64>,
    pub subjects: Vec<SubjectRun>,
}

#[derive(Debug, Serialize)]
struct Timing {
    wall_time_s: f64,
    subjects: Vec<f64>,
}

pub fn run_dir_name(pair: ClassPair, kind: ClassifierKind) -> String {
    format!("{pair}-{kind}")
}

pub fn evaluate(ctx: &Context, inputs: &[PathBuf], pair: PairArg, clf: Option<ClfArg>) -> Result<(), CliError> {
    let (names, sets) = load_subjects(ctx, inputs)?;
    let kinds = clf.map_or_else(|| vec![ctx.config.protocol.classifier], ClfArg::kinds);
    for pair in pair.pairs() {
        for &kind in &kinds {
            let protocol = EvalProtocol {
                classifier: kind,
                seed: ctx.seed,
                ..ctx.config.protocol
            };
            let started = Instant::now();
            let ev = evaluate_subjects(&sets, pair, &protocol, ctx.exec)?;
            let wall = started.elapsed().as_secs_f64();
            let unconverged: usize = ev.subjects.iter().map(|(_, r)| r.unconverged_fits).sum();
            if unconverged > 0 {
                let msg = format!("{pair} {kind}: {unconverged} Riemannian mean fits hit the iteration cap");
                if ctx.strict {
                    return Err(CliError::Numerical(msg));
                }
                log::warn!("{msg}");
            }
            let report = EvaluationReport {
                pair,
                classifier: kind,
                seed: ctx.seed,
                config_hash: ctx.config_hash.clone(),
                protocol,
                prediction_time_ms: prediction_time(&ev.curve, PREDICTION_THRESHOLD),
                curve: ev.curve.clone(),
                subjects: names
                    .iter()
                    .zip(&ev.subjects)
                    .map(|(n, (c, r))| SubjectRun {
                        source: n.clone(),
                        curve: c.clone(),
                        report: r.clone(),
                    })
                    .collect(),
            };
            let timing = Timing {
                wall_time_s: wall,
                subjects: ev.subjects.iter().map(|(_, r)| r.wall_time_s).collect(),
            };
            let dir = ctx.out.join(run_dir_name(pair, kind));
            write(&dir.join("curve.csv"), curve_csv(&ev.curve).as_bytes())?;
            write(&dir.join("report.json"), to_json(&report)?.as_bytes())?;
            write(&dir.join("timing.json"), to_json(&timing)?.as_bytes())?;
            let at0 = ev.curve.at(0.0).map_or("n/a".into(), |p| fmt_sig(p.mean_accuracy));
            println!("{pair} {kind}: accuracy at 0 ms {at0} over {} subjects ({wall:.1} s) -> {}", sets.len(), dir.display());
        }
    }
    Ok(())
}

/// One row of the summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub pair: ClassPair,
    pub classifier: ClassifierKind,
    pub subjects: usize,
    pub at_0: Option<(f64, f64)>,
    pub at_minus_100: Option<(f64, f64)>,
    pub prediction_time_ms: Option<f64>,
    pub run: PathBuf,
}

fn run_dirs(paths: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut out = BTreeSet::new();
    for p in paths {
        if !p.is_dir() {
            return Err(CliError::Data(format!("run directory {} does not exist", p.display())));
        }
        if p.join("report.json").is_file() {
            out.insert(p.clone());
            continue;
        }
        let mut subdirs: Vec<PathBuf> = std::fs::read_dir(p)
            .map_err(|e| CliError::Data(format!("cannot list {}: {e}", p.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|q| q.is_dir())
            .collect();
        subdirs.sort();
        if subdirs.is_empty() {
            return Err(CliError::Data(format!("{} has no report.json", p.display())));
        }
        for d in subdirs {
            if !d.join("report.json").is_file() {
                return Err(CliError::Data(format!("{} has no report.json", d.display())));
            }
            out.insert(d);
        }
    }
    Ok(out.into_iter().collect())
}

fn read_report(dir: &Path) -> Result<EvaluationReport, CliError> {
    let path = dir.join("report.json");
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn summarize(runs: &[PathBuf]) -> Result<Vec<SummaryRow>, CliError> {
    let mut rows = Vec::new();
    for dir in run_dirs(runs)? {
        let r = read_report(&dir)?;
        let at = |t: f64| r.curve.at(t).map(|p| (p.mean_accuracy, p.std_accuracy));
        rows.push(SummaryRow {
            pair: r.pair,
            classifier: r.classifier,
            subjects: r.subjects.len(),
            at_0: at(0.0),
            at_minus_100: at(-100.0),
            prediction_time_ms: r.prediction_time_ms,
            run: dir,
        });
    }
    rows.sort_by(|a, b| (a.pair, a.classifier, &a.run).cmp(&(b.pair, b.classifier, &b.run)));
    Ok(rows)
}

fn percent(v: Option<(f64, f64)>) -> String {
    v.map_or("n/a".into(), |(m, s)| format!("{:.2} ± {:.2} %", 100.0 * m, 100.0 * s))
}

pub fn summary_text(rows: &[SummaryRow]) -> String {
    let mut s = format!(
        "{:<20} {:<10} {:>8}  {:<18} {:<18} {}\n",
        "pair", "classifier", "subjects", "acc @ 0 ms", "acc @ -100 ms", "t(0.75) ms"
    );
    for r in rows {
        let pt = r.prediction_time_ms.map_or("n/a".into(), fmt_sig);
        let _ = writeln!(
            s,
            "{:<20} {:<10} {:>8}  {:<18} {:<18} {pt}",
            r.pair.as_str(),
            r.classifier.as_str(),
            r.subjects,
            percent(r.at_0),
            percent(r.at_minus_100),
        );
    }
    s
}

pub fn summary_csv(rows: &[SummaryRow]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let opt = |v: Option<f64>| v.map_or(String::new(), fmt_sig);
    let csv_err = |e: csv::Error| CliError::Data(e.to_string());
    w.write_record([
        "pair",
        "classifier",
        "subjects",
        "mean_acc_0ms",
        "std_acc_0ms",
        "mean_acc_minus100ms",
        "std_acc_minus100ms",
        "prediction_time_ms",
        "run",
    ])
    .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.pair.as_str().to_string(),
            r.classifier.as_str().to_string(),
            r.subjects.to_string(),
            opt(r.at_0.map(|v| v.0)),
            opt(r.at_0.map(|v| v.1)),
            opt(r.at_minus_100.map(|v| v.0)),
            opt(r.at_minus_100.map(|v| v.1)),
            opt(r.prediction_time_ms),
            r.run.display().to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Data(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn report(ctx: &Context, runs: &[PathBuf]) -> Result<(), CliError> {
    let rows = summarize(runs)?;
    let text = summary_text(&rows);
    print!("{text}");
    if ctx.out_explicit {
        write(&ctx.out.join("summary.txt"), text.as_bytes())?;
        write(&ctx.out.join("summary.csv"), summary_csv(&rows)?.as_bytes())?;
    }
    Ok(())
}

pub fn topomap(ctx: &Context, inputs: &[PathBuf], pair: PairArg, times: &[f64]) -> Result<(), CliError> {
    let (_, sets) = load_subjects(ctx, inputs)?;
    let mut pooled = sets[0].clone();
    for s in &sets[1..] {
        pooled = pooled.merge(s)?;
    }
    for pair in pair.pairs() {
        let [a, b] = pair.classes();
        let (sa, sb) = (pooled.select(&[a]), pooled.select(&[b]));
        for (set, label) in [(&sa, a), (&sb, b)] {
            if set.is_empty() {
                return Err(CliError::Data(format!("no {} epochs in the inputs", label.as_str())));
            }
        }
        let rows = topomap_export(&sa, &sb, times)?;
        let path = ctx.out.join(format!("topomap-{pair}.csv"));
        write(&path, topomap_csv(&rows).as_bytes())?;
        println!("{pair}: {} - {} epochs, {} rows -> {}", sa.len(), sb.len(), rows.len(), path.display());
    }
    Ok(())
}

pub fn ebrt(ctx: &Context, inputs: &[PathBuf]) -> Result<(), CliError> {
    let files = collect(inputs, "rec")?;
    let logs = try_map_indexed(files.len(), ctx.exec, |i| {
        read_recording(&files[i])
            .map(|r| r.events().to_vec())
            .map_err(|e| CliError::Data(format!("{}: {e}", files[i].display())))
    })?;
    let stats = ebrt_stats(logs.iter().map(Vec::as_slice))?;
    let path = ctx.out.join("ebrt.json");
    write(&path, to_json(&stats)?.as_bytes())?;
    println!(
        "EBRT over {} pairs: {} ± {} ms, P5 {} / P50 {} / P95 {} ms -> {}",
        stats.n,
        fmt_sig(stats.mean_ms),
        fmt_sig(stats.std_ms),
        fmt_sig(stats.p5_ms),
        fmt_sig(stats.p50_ms),
        fmt_sig(stats.p95_ms),
        path.display()
    );
    Ok(())
}
