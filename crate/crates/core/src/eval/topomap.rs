use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::EpochSet;

/// Each map value averages the samples within this distance of the
/// requested time.
pub const TOPOMAP_HALF_WINDOW_MS: f64 = 25.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopomapRow {
    pub channel: String,
    pub x: f32,
    pub y: f32,
    pub time_ms: f64,
    pub value_uv: f64,
}

/// Per-channel grand average over epochs and over `[t - 25, t + 25]` ms.
fn grand_average(set: &EpochSet, t_ms: f64) -> Result<Vec<f64>> {
    if set.is_empty() {
        return Err(Error::InvalidArgument("empty epoch set".into()));
    }
    let t_len = set.samples_per_epoch();
    let half = TOPOMAP_HALF_WINDOW_MS * set.sample_rate() as f64 / 1000.0;
    let mut acc = vec![0.0; set.n_channels()];
    for e in set.epochs() {
        let centre = set.sample_at(e, t_ms);
        let lo = (centre - half - 1e-9).ceil();
        let hi = (centre + half + 1e-9).floor();
        if lo < 0.0 || hi >= t_len as f64 || hi < lo {
            return Err(Error::WindowOutOfBounds {
                start_ms: t_ms - TOPOMAP_HALF_WINDOW_MS,
                end_ms: t_ms + TOPOMAP_HALF_WINDOW_MS,
                epoch_start_ms: -(e.t0_offset_ms as f64),
                epoch_end_ms: set.epoch_duration_ms() - e.t0_offset_ms as f64,
            });
        }
        let (lo, hi) = (lo as usize, hi as usize);
        for (c, a) in acc.iter_mut().enumerate() {
            let ch = e.channel(c, t_len);
            *a += ch[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64;
        }
    }
    acc.iter_mut().for_each(|a| *a /= set.len() as f64);
    Ok(acc)
}

/// Grand-average difference `a - b` per channel at each requested time
/// (ms relative to brake onset). Rows are ordered by time, then channel.
pub fn topomap_export(a: &EpochSet, b: &EpochSet, times_ms: &[f64]) -> Result<Vec<TopomapRow>> {
    if a.montage() != b.montage() {
        return Err(Error::InvalidData("epoch sets use different montages".into()));
    }
    let mut rows = Vec::with_capacity(times_ms.len() * a.n_channels());
    for &t in times_ms {
        let ga = grand_average(a, t)?;
        let gb = grand_average(b, t)?;
        for (c, (name, &(x, y))) in a.montage().names().iter().zip(a.montage().positions()).enumerate() {
            rows.push(TopomapRow {
                channel: name.clone(),
                x,
                y,
                time_ms: t,
                value_uv: ga[c] - gb[c],
            });
        }
    }
    Ok(rows)
}
