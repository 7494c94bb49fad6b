use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BrakeClass, Event, EventKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EbrtStats {
    pub n: usize,
    pub mean_ms: f64,
    /// Sample standard deviation; 0 for a single pair.
    pub std_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
    pub p5_ms: f64,
    pub p25_ms: f64,
    pub p50_ms: f64,
    pub p75_ms: f64,
    pub p95_ms: f64,
}

/// Linear interpolation between order statistics at rank `(n-1)p` of an
/// ascending slice.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Response times of one recording: each emergency press is paired with
/// the earliest still unmatched brake-light onset before it.
pub fn ebrt_values(events: &[Event]) -> Result<Vec<f64>> {
    let mut pending = VecDeque::new();
    let mut out = Vec::new();
    for e in events {
        match e.kind {
            EventKind::BrakeLightOn => pending.push_back(e.time_ms),
            EventKind::BrakePedalPress {
                class: BrakeClass::Emergency,
            } => {
                let light = pending.pop_front().ok_or_else(|| {
                    Error::UnmatchedEvents(format!("emergency press at {} ms has no brake light", e.time_ms))
                })?;
                out.push(e.time_ms - light);
            }
            EventKind::BrakePedalPress { .. } => {}
        }
    }
    if let Some(t) = pending.front() {
        return Err(Error::UnmatchedEvents(format!(
            "{} brake light(s) without a press, first at {t} ms",
            pending.len()
        )));
    }
    Ok(out)
}

pub fn ebrt_stats_from_values(values: &[f64]) -> Result<EbrtStats> {
    if values.is_empty() {
        return Err(Error::UnmatchedEvents("no emergency light/press pairs".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = if v.len() > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(EbrtStats {
        n: v.len(),
        mean_ms: mean,
        std_ms: std,
        min_ms: v[0],
        max_ms: v[v.len() - 1],
        p5_ms: percentile(&v, 0.05),
        p25_ms: percentile(&v, 0.25),
        p50_ms: percentile(&v, 0.50),
        p75_ms: percentile(&v, 0.75),
        p95_ms: percentile(&v, 0.95),
    })
}

/// Statistics pooled over the event logs of several recordings.
pub fn ebrt_stats<'a>(event_logs: impl IntoIterator<Item = &'a [Event]>) -> Result<EbrtStats> {
    let mut all = Vec::new();
    for log in event_logs {
        all.extend(ebrt_values(log)?);
    }
    ebrt_stats_from_values(&all)
}
