//! Background EEG: spatially mixed pink noise, sensor noise, blinks and
//! large outlier transients.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// Per-channel RMS of the mixed pink background, before filtering.
    pub rms_uv: f64,
    /// Number of strong background generators; the remaining source
    /// directions form a weak full-rank floor.
    pub dominant_sources: usize,
    /// Ratio of the dominant to the floor singular values of the mixing
    /// matrix before per-channel normalization.
    pub mixing_condition: f64,
    /// Independent white noise per electrode.
    pub sensor_noise_uv: f64,
    pub blink_rate_per_min: f64,
    pub blink_amplitude_uv: f64,
    pub blink_duration_ms: f64,
    /// Probability that a 4 s stretch contains an outlier transient.
    pub outlier_probability: f64,
    pub outlier_amplitude_uv: f64,
    pub outlier_duration_ms: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            rms_uv: 10.0,
            dominant_sources: 3,
            mixing_condition: 100.0,
            sensor_noise_uv: 1.5,
            blink_rate_per_min: 2.0,
            blink_amplitude_uv: 80.0,
            blink_duration_ms: 300.0,
            outlier_probability: 0.02,
            outlier_amplitude_uv: 500.0,
            outlier_duration_ms: 60.0,
        }
    }
}

/// Span over which `outlier_probability` is defined.
pub const OUTLIER_REFERENCE_MS: f64 = 4000.0;

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            self.sensor_noise_uv,
            self.blink_rate_per_min,
            self.blink_amplitude_uv,
            self.outlier_amplitude_uv,
        ];
        if !(self.rms_uv > 0.0 && self.rms_uv.is_finite())
            || !(self.mixing_condition >= 1.0 && self.mixing_condition.is_finite())
            || self.dominant_sources == 0
            || nonneg.iter().any(|v| !(*v >= 0.0 && v.is_finite()))
            || !(self.blink_duration_ms > 0.0 && self.outlier_duration_ms > 0.0)
            || !(0.0..1.0).contains(&self.outlier_probability)
        {
            return Err(Error::InvalidArgument(format!("invalid noise configuration: {self:?}")));
        }
        Ok(())
    }
}

/// Random full-rank mixing: `diag(r) · Q · diag(s)` with `Q` orthogonal,
/// `s` equal to 1 for the dominant sources and `1/condition` for the rest,
/// and `r` scaling every row to `rms_uv`. Invertible by construction.
pub fn mixing_matrix(n: usize, cfg: &NoiseConfig, rng: &mut impl Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| -> f64 { StandardNormal.sample(rng) });
    let q = g.qr().q();
    let s = DVector::from_fn(n, |i, _| {
        if i < cfg.dominant_sources {
            1.0
        } else {
            1.0 / cfg.mixing_condition
        }
    });
    let mut m: DMatrix<f64> = q * DMatrix::from_diagonal(&s);
    for mut row in m.row_iter_mut() {
        let norm = row.norm();
        row.scale_mut(cfg.rms_uv / norm);
    }
    m
}

/// Unit-variance pink (1/f) noise via Paul Kellet's refined filter bank.
pub fn pink_noise(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let warmup = 4096;
    let mut b = [0.0f64; 7];
    let mut out = Vec::with_capacity(n);
    for i in 0..n + warmup {
        let w: f64 = StandardNormal.sample(rng);
        b[0] = 0.99886 * b[0] + w * 0.055_517_9;
        b[1] = 0.99332 * b[1] + w * 0.075_075_9;
        b[2] = 0.96900 * b[2] + w * 0.153_852_0;
        b[3] = 0.86650 * b[3] + w * 0.310_485_6;
        b[4] = 0.55000 * b[4] + w * 0.532_952_2;
        b[5] = -0.7616 * b[5] - w * 0.016_898_0;
        let p = b[0] + b[1] + b[2] + b[3] + b[4] + b[5] + b[6] + w * 0.5362;
        b[6] = w * 0.115_926;
        if i >= warmup {
            out.push(p);
        }
    }
    let mean = out.iter().sum::<f64>() / n.max(1) as f64;
    let sd = (out.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n.max(1) as f64).sqrt();
    if sd > 0.0 {
        out.iter_mut().for_each(|v| *v = (*v - mean) / sd);
    }
    out
}

/// Arrival times (ms) of a homogeneous Poisson process on `[0, duration)`.
pub fn poisson_times(rate_per_ms: f64, duration_ms: f64, rng: &mut impl Rng) -> Vec<f64> {
    let mut times = Vec::new();
    if !(rate_per_ms > 0.0) {
        return times;
    }
    let exp = Exp::new(rate_per_ms).expect("positive rate");
    let mut t = exp.sample(rng);
    while t < duration_ms {
        times.push(t);
        t += exp.sample(rng);
    }
    times
}

/// Outlier rate per ms so that a reference stretch holds one with the
/// configured probability.
pub fn outlier_rate_per_ms(cfg: &NoiseConfig) -> f64 {
    -(1.0 - cfg.outlier_probability).ln() / OUTLIER_REFERENCE_MS
}
