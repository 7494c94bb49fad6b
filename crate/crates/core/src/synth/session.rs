use std::fmt::Write as _;

use rand::Rng;

use super::erp::{occipital_passband_gain, time_courses, weight, ErpWeights, FRONTAL};
use super::noise::{mixing_matrix, outlier_rate_per_ms, pink_noise, poisson_times};
use super::{ErpTemplateConfig, NoiseConfig, ReactionTimeModel, ScenarioConfig};
use crate::error::Result;
use crate::model::{BrakeClass, ChannelMontage, ContinuousRecording, Event, EventKind};
use crate::rng::RngSeed;

// Stream ids under a subject seed.
const MIXING_STREAM: u64 = 0;
const SESSION_STREAM_BASE: u64 = 1;
// Stream ids under a session seed.
const SCHEDULE: u64 = 0;
const SOURCES: u64 = 1;
const SENSOR: u64 = 2;
const BLINKS: u64 = 3;
const OUTLIERS: u64 = 4;

/// Brake stimuli spaced uniformly in `inter_event_s`. In emergency mode each
/// light onset is followed by a press after a sampled response time; in
/// normal mode only presses are emitted. Events past the end are dropped.
pub fn generate_schedule(scn: &ScenarioConfig, rt: &ReactionTimeModel, rng: &mut impl Rng) -> Vec<Event> {
    let duration = scn.duration_ms();
    let [lo, hi] = scn.inter_event_s;
    let mut events = Vec::new();
    let mut t = 0.0;
    loop {
        t += 1000.0 * if hi > lo { rng.random_range(lo..=hi) } else { lo };
        match scn.mode {
            BrakeClass::Emergency => {
                let press = t + rt.sample(rng);
                if press >= duration {
                    break;
                }
                events.push(Event {
                    time_ms: t,
                    kind: EventKind::BrakeLightOn,
                });
                events.push(Event {
                    time_ms: press,
                    kind: EventKind::BrakePedalPress {
                        class: BrakeClass::Emergency,
                    },
                });
            }
            BrakeClass::Normal => {
                if t >= duration {
                    break;
                }
                events.push(Event {
                    time_ms: t,
                    kind: EventKind::BrakePedalPress {
                        class: BrakeClass::Normal,
                    },
                });
            }
        }
    }
    events
}

fn add_bump(channel: &mut [f64], rate: f64, center_window: (f64, f64), f: impl Fn(f64) -> f64) {
    let (a, b) = center_window;
    let i0 = ((a * rate / 1000.0).ceil().max(0.0)) as usize;
    let i1 = ((b * rate / 1000.0).floor().max(-1.0) + 1.0) as usize;
    for i in i0..i1.min(channel.len()) {
        channel[i] += f(i as f64 * 1000.0 / rate);
    }
}

/// One synthetic session for the subject identified by `seed`. The spatial
/// mixing depends only on the subject seed, so emergency and normal sessions
/// of one subject share it.
pub fn generate_session(
    scn: &ScenarioConfig,
    erp: &ErpTemplateConfig,
    noise: &NoiseConfig,
    rt: &ReactionTimeModel,
    seed: RngSeed,
) -> Result<ContinuousRecording> {
    scn.validate()?;
    erp.validate()?;
    noise.validate()?;
    let montage = ChannelMontage::standard();
    let c = montage.len();
    let n = scn.n_samples();
    let rate = scn.sample_rate_hz as f64;
    let duration = scn.duration_ms();
    let session = seed.split(SESSION_STREAM_BASE + scn.mode as u64);

    let events = generate_schedule(scn, rt, &mut session.split(SCHEDULE).rng());

    let mixing = mixing_matrix(c, noise, &mut seed.split(MIXING_STREAM).rng());
    let mut src_rng = session.split(SOURCES).rng();
    let sources: Vec<Vec<f64>> = (0..c).map(|_| pink_noise(n, &mut src_rng)).collect();
    let mut data = vec![vec![0.0f64; n]; c];
    for (ch, out) in data.iter_mut().enumerate() {
        for (j, src) in sources.iter().enumerate() {
            let w = mixing[(ch, j)];
            out.iter_mut().zip(src).for_each(|(o, s)| *o += w * s);
        }
    }
    drop(sources);

    if noise.sensor_noise_uv > 0.0 {
        let mut rng = session.split(SENSOR).rng();
        for out in data.iter_mut() {
            for o in out.iter_mut() {
                let z: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng);
                *o += noise.sensor_noise_uv * z;
            }
        }
    }

    let weights = ErpWeights::for_channels(montage.names());
    let (lo, hi) = erp.support_ms();
    let occipital_gain = 1.0 / occipital_passband_gain(erp, scn.sample_rate_hz);
    for ev in &events {
        let EventKind::BrakePedalPress { class } = ev.kind else {
            continue;
        };
        let label = class.label();
        for (ch, out) in data.iter_mut().enumerate() {
            let (wo, wc) = (weights.occipital[ch] * occipital_gain, weights.central[ch]);
            if wo == 0.0 && wc == 0.0 {
                continue;
            }
            add_bump(out, rate, (ev.time_ms + lo, ev.time_ms + hi), |t| {
                let (occ, cen) = time_courses(erp, label, t - ev.time_ms);
                wo * occ + wc * cen
            });
        }
    }

    let mut blink_rng = session.split(BLINKS).rng();
    let blinks = poisson_times(noise.blink_rate_per_min / 60_000.0, duration, &mut blink_rng);
    let frontal: Vec<f64> = montage.names().iter().map(|nm| weight(&FRONTAL, nm)).collect();
    let d = noise.blink_duration_ms;
    for &t0 in &blinks {
        let amp = noise.blink_amplitude_uv * blink_rng.random_range(0.7..1.2);
        for (ch, out) in data.iter_mut().enumerate() {
            if frontal[ch] > 0.0 {
                let a = amp * frontal[ch];
                add_bump(out, rate, (t0, t0 + d), |t| a * super::bump(t, t0, t0 + d / 2.0, t0 + d));
            }
        }
    }

    let mut out_rng = session.split(OUTLIERS).rng();
    let spikes = poisson_times(outlier_rate_per_ms(noise), duration, &mut out_rng);
    let d = noise.outlier_duration_ms;
    for &t0 in &spikes {
        let ch = out_rng.random_range(0..c);
        let sign = if out_rng.random::<bool>() { 1.0 } else { -1.0 };
        let a = sign * noise.outlier_amplitude_uv;
        add_bump(&mut data[ch], rate, (t0, t0 + d), |t| a * super::bump(t, t0, t0 + d / 2.0, t0 + d));
    }

    let samples: Vec<f32> = data.into_iter().flatten().map(|v| v as f32).collect();
    ContinuousRecording::new(montage, scn.sample_rate_hz, samples, events)
}

/// Emergency and normal sessions of one subject.
pub fn generate_subject(
    scn: &ScenarioConfig,
    erp: &ErpTemplateConfig,
    noise: &NoiseConfig,
    rt: &ReactionTimeModel,
    seed: RngSeed,
) -> Result<[ContinuousRecording; 2]> {
    let emergency = ScenarioConfig {
        mode: BrakeClass::Emergency,
        ..*scn
    };
    let normal = ScenarioConfig {
        mode: BrakeClass::Normal,
        ..*scn
    };
    Ok([
        generate_session(&emergency, erp, noise, rt, seed)?,
        generate_session(&normal, erp, noise, rt, seed)?,
    ])
}

/// `timestamp_ms,kind,class` rows.
pub fn write_events_csv(events: &[Event]) -> String {
    let mut s = String::from("timestamp_ms,kind,class\n");
    for e in events {
        let (kind, class) = match e.kind {
            EventKind::BrakeLightOn => ("brake_light_on", ""),
            EventKind::BrakePedalPress { class } => ("brake_pedal_press", class.as_str()),
        };
        let _ = writeln!(s, "{},{kind},{class}", e.time_ms);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::fit_default_rt_model;

    fn short(mode: BrakeClass, minutes: f64) -> ScenarioConfig {
        ScenarioConfig {
            session_minutes: minutes,
            mode,
            ..Default::default()
        }
    }

    #[test]
    fn schedule_spacing_and_pairing() {
        let rt = fit_default_rt_model();
        let scn = short(BrakeClass::Emergency, 600.0);
        let ev = generate_schedule(&scn, &rt, &mut RngSeed(11).rng());
        let lights: Vec<f64> = ev.iter().filter(|e| e.kind == EventKind::BrakeLightOn).map(|e| e.time_ms).collect();
        for w in lights.windows(2) {
            let gap = w[1] - w[0];
            assert!((15_000.0..=60_000.0).contains(&gap), "{gap}");
        }
        for pair in ev.chunks(2) {
            assert_eq!(pair[0].kind, EventKind::BrakeLightOn);
            assert!(matches!(pair[1].kind, EventKind::BrakePedalPress { class: BrakeClass::Emergency }));
            let d = pair[1].time_ms - pair[0].time_ms;
            assert!((300.0..=1490.0).contains(&d));
        }
    }

    #[test]
    fn expected_press_count() {
        // 1800 s / 37.5 s mean gap
        let rt = fit_default_rt_model();
        let scn = short(BrakeClass::Emergency, 30.0);
        for s in 0..20 {
            let ev = generate_schedule(&scn, &rt, &mut RngSeed(s).rng());
            let presses = ev.len() / 2;
            assert!((33..=63).contains(&presses), "{presses}");
        }
    }

    #[test]
    fn sessions_are_deterministic_and_share_mixing() {
        let rt = fit_default_rt_model();
        let erp = ErpTemplateConfig::default();
        let noise = NoiseConfig::default();
        let scn = short(BrakeClass::Normal, 1.0);
        let a = generate_session(&scn, &erp, &noise, &rt, RngSeed(5)).unwrap();
        let b = generate_session(&scn, &erp, &noise, &rt, RngSeed(5)).unwrap();
        assert_eq!(a, b);
        let c = generate_session(&scn, &erp, &noise, &rt, RngSeed(6)).unwrap();
        assert_ne!(a, c);
        assert_eq!(a.n_samples(), 12_000);
        assert_eq!(a.n_channels(), 28);
    }

    #[test]
    fn events_csv_layout() {
        let ev = vec![
            Event { time_ms: 1500.0, kind: EventKind::BrakeLightOn },
            Event { time_ms: 2262.5, kind: EventKind::BrakePedalPress { class: BrakeClass::Emergency } },
        ];
        assert_eq!(
            write_events_csv(&ev),
            "timestamp_ms,kind,class\n1500,brake_light_on,\n2262.5,brake_pedal_press,emergency\n"
        );
    }
}
