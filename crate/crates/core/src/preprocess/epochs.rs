use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::EpochWindowSpec;
use crate::error::{Error, Result};
use crate::model::{ms_to_samples, ContinuousRecording, Epoch, EpochSet, EventKind};
use crate::rng::RngSeed;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub presses: usize,
    pub extracted: usize,
    /// Presses whose window would leave the recording.
    pub skipped: usize,
}

fn copy_window(rec: &ContinuousRecording, start: usize, len: usize) -> Vec<f64> {
    let mut data = Vec::with_capacity(rec.n_channels() * len);
    for c in 0..rec.n_channels() {
        data.extend(rec.channel(c)[start..start + len].iter().map(|&v| v as f64));
    }
    data
}

fn check_exact(ms: f64, rate: u32) -> Result<usize> {
    let n = ms_to_samples(ms, rate);
    let exact = ms * rate as f64 / 1000.0;
    if (exact - n as f64).abs() > 1e-9 {
        log::warn!("{ms} ms is not a whole number of samples at {rate} Hz; rounded to {n}");
    }
    Ok(n)
}

/// One epoch per pedal press, `[press - pre, press + post)`.
pub fn extract_brake_epochs(
    rec: &ContinuousRecording,
    spec: &EpochWindowSpec,
) -> Result<(EpochSet, ExtractionReport)> {
    spec.validate()?;
    let rate = rec.sample_rate();
    let pre = check_exact(spec.pre_ms, rate)?;
    let len = check_exact(spec.epoch_ms(), rate)?;
    let mut report = ExtractionReport::default();
    let mut epochs = Vec::new();
    for ev in rec.events() {
        let EventKind::BrakePedalPress { class } = ev.kind else {
            continue;
        };
        report.presses += 1;
        let onset = ms_to_samples(ev.time_ms, rate) as isize;
        let start = onset - pre as isize;
        if start < 0 || start as usize + len > rec.n_samples() {
            report.skipped += 1;
            continue;
        }
        epochs.push(Epoch {
            label: class.label(),
            t0_offset_ms: spec.pre_ms.round() as u32,
            data: copy_window(rec, start as usize, len),
        });
        report.extracted += 1;
    }
    let set = EpochSet::new(rec.montage().clone(), rate, len, epochs, "")?;
    Ok((set, report))
}

/// Start samples of every no-braking window keeping the required distance
/// from all brake events (light onsets and pedal presses alike).
pub fn eligible_no_brake_starts(rec: &ContinuousRecording, spec: &EpochWindowSpec) -> Vec<(usize, usize)> {
    let rate = rec.sample_rate() as f64;
    let win = ms_to_samples(spec.no_brake_window_ms, rec.sample_rate()) as f64;
    let sep = spec.no_brake_min_separation_ms * rate / 1000.0;
    let last_start = rec.n_samples() as f64 - win;
    if last_start < 0.0 {
        return Vec::new();
    }
    // forbidden starts per event e: (e - sep - win, e + sep), open interval
    let mut forbidden: Vec<(f64, f64)> = rec
        .events()
        .iter()
        .map(|e| {
            let at = e.time_ms * rate / 1000.0;
            (at - sep - win, at + sep)
        })
        .collect();
    forbidden.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut ranges = Vec::new();
    let mut next = 0.0f64; // first start not yet known to be forbidden
    for (lo, hi) in forbidden {
        // allowed: integer s with next <= s <= lo (s <= lo is allowed, open)
        let a = next.ceil();
        let b = lo.floor().min(last_start);
        if b >= a {
            ranges.push((a as usize, b as usize + 1));
        }
        next = next.max(hi);
    }
    let a = next.ceil();
    if last_start >= a {
        ranges.push((a as usize, last_start as usize + 1));
    }
    ranges
}

/// Draws `count` no-braking windows without replacement from the eligible
/// positions of all `recs` together.
pub fn extract_no_brake_epochs_from(
    recs: &[&ContinuousRecording],
    spec: &EpochWindowSpec,
    count: usize,
    seed: RngSeed,
) -> Result<EpochSet> {
    spec.validate()?;
    if count == 0 {
        return Err(Error::InvalidArgument("no-braking epoch count must be positive".into()));
    }
    let first = recs
        .first()
        .ok_or_else(|| Error::InvalidArgument("no recordings given".into()))?;
    let rate = first.sample_rate();
    if recs
        .iter()
        .any(|r| r.sample_rate() != rate || r.montage() != first.montage())
    {
        return Err(Error::InvalidData("recordings differ in montage or sample rate".into()));
    }
    let len = check_exact(spec.no_brake_window_ms, rate)?;
    let pre = ms_to_samples(spec.pre_ms, rate);
    // (recording, start, end) flattened so a single index draw covers all of them
    let mut segments: Vec<(usize, usize, usize)> = Vec::new();
    for (ri, r) in recs.iter().enumerate() {
        segments.extend(eligible_no_brake_starts(r, spec).into_iter().map(|(a, b)| (ri, a, b)));
    }
    let available: usize = segments.iter().map(|(_, a, b)| b - a).sum();
    if available < count {
        return Err(Error::InsufficientWindows {
            requested: count,
            available,
        });
    }
    let mut rng = seed.rng();
    let mut picks = index::sample(&mut rng, available, count).into_vec();
    picks.sort_unstable();
    let mut epochs = Vec::with_capacity(count);
    let mut seg = 0;
    let mut offset = 0;
    for p in picks {
        while p >= offset + segments[seg].2 - segments[seg].1 {
            offset += segments[seg].2 - segments[seg].1;
            seg += 1;
        }
        let (ri, a, _) = segments[seg];
        let start = a + (p - offset);
        epochs.push(Epoch {
            label: crate::model::ClassLabel::NoBraking,
            t0_offset_ms: (pre as f64 * 1000.0 / rate as f64).round() as u32,
            data: copy_window(recs[ri], start, len),
        });
    }
    EpochSet::new(first.montage().clone(), rate, len, epochs, "")
}

pub fn extract_no_brake_epochs(
    rec: &ContinuousRecording,
    spec: &EpochWindowSpec,
    count: usize,
    seed: RngSeed,
) -> Result<EpochSet> {
    extract_no_brake_epochs_from(&[rec], spec, count, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BrakeClass, ChannelMontage, Event};

    fn montage() -> ChannelMontage {
        ChannelMontage::new(vec!["A".into(), "B".into()], vec![(0.0, 0.0), (0.1, 0.0)]).unwrap()
    }

    fn press(t: f64) -> Event {
        Event {
            time_ms: t,
            kind: EventKind::BrakePedalPress {
                class: BrakeClass::Emergency,
            },
        }
    }

    /// Channel A carries the sample index so windows can be located.
    fn ramp_recording(seconds: usize, events: Vec<Event>) -> ContinuousRecording {
        let n = seconds * 200;
        let mut s: Vec<f32> = (0..n).map(|i| i as f32).collect();
        s.extend(std::iter::repeat(0.0).take(n));
        ContinuousRecording::new(montage(), 200, s, events).unwrap()
    }

    #[test]
    fn brake_epoch_window_arithmetic() {
        let rec = ramp_recording(60, vec![press(1000.0), press(10_000.0)]);
        let (set, rep) = extract_brake_epochs(&rec, &EpochWindowSpec::default()).unwrap();
        assert_eq!(rep.presses, 2);
        assert_eq!(rep.skipped, 1);
        assert_eq!(set.len(), 1);
        let e = &set.epochs()[0];
        assert_eq!(e.t0_offset_ms, 3000);
        assert_eq!(set.samples_per_epoch(), 800);
        // [7000, 11000) ms = samples [1400, 2200)
        assert_eq!(e.data[0], 1400.0);
        assert_eq!(e.data[799], 2199.0);
        assert_eq!(e.label, crate::model::ClassLabel::Emergency);
    }

    #[test]
    fn counts_add_up() {
        let events: Vec<Event> = (0..189).map(|i| press(2000.0 + i as f64 * 5000.0)).collect();
        let rec = ramp_recording(960, events);
        let (set, rep) = extract_brake_epochs(&rec, &EpochWindowSpec::default()).unwrap();
        assert_eq!(set.len() + rep.skipped, rep.presses);
        assert_eq!(rep.presses, 189);
        assert_eq!(set.len(), 188);
    }

    #[test]
    fn no_brake_windows_keep_their_distance() {
        let mut events = Vec::new();
        let mut t = 20_000.0;
        while t < 1_790_000.0 {
            events.push(press(t));
            t += 40_000.0;
        }
        let rec = ramp_recording(1800, events.clone());
        let spec = EpochWindowSpec::default();
        let set = extract_no_brake_epochs(&rec, &spec, 200, RngSeed(1)).unwrap();
        assert_eq!(set.len(), 200);
        for e in set.epochs() {
            let start_ms = e.data[0] as f64 * 5.0;
            let end_ms = start_ms + 4000.0;
            // brute force over all events
            for ev in &events {
                let d = if ev.time_ms < start_ms {
                    start_ms - ev.time_ms
                } else if ev.time_ms > end_ms {
                    ev.time_ms - end_ms
                } else {
                    0.0
                };
                assert!(d >= 3000.0, "window at {start_ms} is {d} ms from {}", ev.time_ms);
            }
        }
        let again = extract_no_brake_epochs(&rec, &spec, 200, RngSeed(1)).unwrap();
        assert_eq!(again, set);
        let other = extract_no_brake_epochs(&rec, &spec, 200, RngSeed(2)).unwrap();
        assert_ne!(other, set);
    }

    #[test]
    fn eligible_positions_match_brute_force() {
        let events = vec![press(9000.0), press(12_345.0), press(30_000.0)];
        let rec = ramp_recording(45, events.clone());
        let spec = EpochWindowSpec::default();
        let ranges = eligible_no_brake_starts(&rec, &spec);
        let fast: Vec<usize> = ranges.iter().flat_map(|&(a, b)| a..b).collect();
        let slow: Vec<usize> = (0..=rec.n_samples() - 800)
            .filter(|&s| {
                let start = s as f64 * 5.0;
                let end = start + 4000.0;
                events.iter().all(|e| {
                    let d = (start - e.time_ms).max(e.time_ms - end).max(0.0);
                    d >= 3000.0
                })
            })
            .collect();
        assert_eq!(fast, slow);
    }

    #[test]
    fn dense_events_leave_no_room() {
        // every 5 s with 3 s clearance needs 10 s gaps for a 4 s window
        let events: Vec<Event> = (1..12).map(|i| press(i as f64 * 5000.0)).collect();
        let rec = ramp_recording(60, events);
        match extract_no_brake_epochs(&rec, &EpochWindowSpec::default(), 1, RngSeed(0)) {
            Err(Error::InsufficientWindows { requested: 1, available: 0 }) => {}
            other => panic!("{other:?}"),
        }
    }
}
