//! Class-conditional ERP templates time-locked to the pedal press.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ClassLabel, STANDARD_CHANNELS};
use crate::preprocess::{design_bandpass, DEFAULT_HIGH_HZ, DEFAULT_LOW_HZ, DEFAULT_NUM_TAPS};

/// Latencies are ms relative to the pedal press; amplitudes in µV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErpTemplateConfig {
    pub occipital_peak_uv: f64,
    pub occipital_onset_ms: f64,
    pub occipital_peak_ms: f64,
    pub occipital_offset_ms: f64,
    pub motor_negativity_uv: f64,
    pub motor_onset_ms: f64,
    pub motor_peak_ms: f64,
    pub motor_offset_ms: f64,
    pub normal_negativity_uv: f64,
    pub normal_onset_ms: f64,
    pub normal_offset_ms: f64,
    /// Global multiplier on every component; 0 removes all class structure.
    pub amplitude_scale: f64,
}

impl Default for ErpTemplateConfig {
    fn default() -> Self {
        ErpTemplateConfig {
            occipital_peak_uv: 6.0,
            occipital_onset_ms: -400.0,
            occipital_peak_ms: -300.0,
            occipital_offset_ms: -100.0,
            motor_negativity_uv: -3.0,
            motor_onset_ms: -200.0,
            motor_peak_ms: 0.0,
            motor_offset_ms: 300.0,
            normal_negativity_uv: -1.5,
            normal_onset_ms: -900.0,
            normal_offset_ms: -400.0,
            amplitude_scale: 1.0,
        }
    }
}

impl ErpTemplateConfig {
    pub fn validate(&self) -> Result<()> {
        let ordered = |a: f64, b: f64, c: f64| a < b && b < c;
        if !(self.amplitude_scale >= 0.0 && self.amplitude_scale.is_finite())
            || !ordered(self.occipital_onset_ms, self.occipital_peak_ms, self.occipital_offset_ms)
            || !ordered(self.motor_onset_ms, self.motor_peak_ms, self.motor_offset_ms)
            || !(self.normal_onset_ms < self.normal_offset_ms)
        {
            return Err(Error::InvalidArgument(format!("inconsistent ERP template: {self:?}")));
        }
        Ok(())
    }

    /// Time span outside of which every template is zero.
    pub fn support_ms(&self) -> (f64, f64) {
        let lo = self.occipital_onset_ms.min(self.motor_onset_ms).min(self.normal_onset_ms);
        let hi = self.occipital_offset_ms.max(self.motor_offset_ms).max(self.normal_offset_ms);
        (lo, hi)
    }
}

const OCCIPITAL: [(&str, f64); 8] = [
    ("Oz", 1.0),
    ("O1", 0.85),
    ("O2", 0.85),
    ("Pz", 0.4),
    ("P3", 0.3),
    ("P4", 0.3),
    ("P5", 0.25),
    ("P6", 0.25),
];

const CENTRAL: [(&str, f64); 7] = [
    ("Cz", 1.0),
    ("C3", 0.8),
    ("C4", 0.8),
    ("FC1", 0.5),
    ("FC2", 0.5),
    ("CP1", 0.5),
    ("CP2", 0.5),
];

/// Frontal weighting for eye blinks.
pub(crate) const FRONTAL: [(&str, f64); 11] = [
    ("Fz", 1.0),
    ("F3", 0.9),
    ("F4", 0.9),
    ("F5", 0.8),
    ("F6", 0.8),
    ("FC1", 0.5),
    ("FC2", 0.5),
    ("FC5", 0.45),
    ("FC6", 0.45),
    ("FT7", 0.4),
    ("FT8", 0.4),
];

pub(crate) fn weight(table: &[(&str, f64)], channel: &str) -> f64 {
    table
        .iter()
        .find(|(n, _)| *n == channel)
        .map_or(0.0, |&(_, w)| w)
}

/// Asymmetric raised-cosine bump, 0 outside `[onset, offset]`, 1 at `peak`.
pub fn bump(t: f64, onset: f64, peak: f64, offset: f64) -> f64 {
    use std::f64::consts::PI;
    if t <= onset || t >= offset {
        0.0
    } else if t <= peak {
        0.5 * (1.0 - (PI * (t - onset) / (peak - onset)).cos())
    } else {
        0.5 * (1.0 + (PI * (t - peak) / (offset - peak)).cos())
    }
}

/// Per-channel spatial weights of each component for one montage.
#[derive(Debug, Clone)]
pub(crate) struct ErpWeights {
    pub occipital: Vec<f64>,
    pub central: Vec<f64>,
}

impl ErpWeights {
    pub fn for_channels(names: &[String]) -> Self {
        ErpWeights {
            occipital: names.iter().map(|n| weight(&OCCIPITAL, n)).collect(),
            central: names.iter().map(|n| weight(&CENTRAL, n)).collect(),
        }
    }
}

/// Temporal profiles `(occipital, central)` in µV at unit spatial weight.
pub(crate) fn time_courses(erp: &ErpTemplateConfig, class: ClassLabel, t: f64) -> (f64, f64) {
    let s = erp.amplitude_scale;
    match class {
        ClassLabel::Emergency => (
            s * erp.occipital_peak_uv
                * bump(t, erp.occipital_onset_ms, erp.occipital_peak_ms, erp.occipital_offset_ms),
            s * erp.motor_negativity_uv
                * bump(t, erp.motor_onset_ms, erp.motor_peak_ms, erp.motor_offset_ms),
        ),
        ClassLabel::Normal => {
            let mid = 0.5 * (erp.normal_onset_ms + erp.normal_offset_ms);
            (
                0.0,
                s * erp.normal_negativity_uv * bump(t, erp.normal_onset_ms, mid, erp.normal_offset_ms),
            )
        }
        ClassLabel::NoBraking => (0.0, 0.0),
    }
}

/// Peak response of the default band-pass to the unit occipital waveform.
///
/// The occipital peak amplitude describes the preprocessed grand average,
/// where a slow positive component loses about a third of its height to the
/// 1 Hz high-pass edge. The generator divides the injected source by this
/// gain. Sample rates too low for the default band give 1.
pub fn occipital_passband_gain(erp: &ErpTemplateConfig, sample_rate: u32) -> f64 {
    let Ok(filter) = design_bandpass(DEFAULT_LOW_HZ, DEFAULT_HIGH_HZ, sample_rate as f64, DEFAULT_NUM_TAPS) else {
        return 1.0;
    };
    let dt = 1000.0 / sample_rate as f64;
    let mid = (DEFAULT_NUM_TAPS - 1) / 2;
    let (on, peak, off) = (erp.occipital_onset_ms, erp.occipital_peak_ms, erp.occipital_offset_ms);
    filter
        .taps()
        .iter()
        .enumerate()
        .map(|(k, h)| h * bump(peak + (k as f64 - mid as f64) * dt, on, peak, off))
        .sum()
}

/// Template value for one channel of the standard montage.
pub fn erp_value(erp: &ErpTemplateConfig, class: ClassLabel, channel: &str, t_rel_ms: f64) -> Result<f64> {
    if !STANDARD_CHANNELS.contains(&channel) {
        return Err(Error::UnknownChannel(channel.to_string()));
    }
    let (occ, cen) = time_courses(erp, class, t_rel_ms);
    Ok(weight(&OCCIPITAL, channel) * occ + weight(&CENTRAL, channel) * cen)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn occipital_peak_value() {
        let erp = ErpTemplateConfig::default();
        assert_eq!(erp_value(&erp, ClassLabel::Emergency, "Oz", -300.0).unwrap(), 6.0);
        let half = ErpTemplateConfig {
            amplitude_scale: 0.5,
            ..erp
        };
        assert_eq!(erp_value(&half, ClassLabel::Emergency, "Oz", -300.0).unwrap(), 3.0);
    }

    #[test]
    fn null_and_normal_classes() {
        let erp = ErpTemplateConfig::default();
        for ch in STANDARD_CHANNELS {
            for t in [-3000.0, -650.0, -300.0, 0.0, 999.0] {
                assert_eq!(erp_value(&erp, ClassLabel::NoBraking, ch, t).unwrap(), 0.0);
            }
        }
        assert_eq!(erp_value(&erp, ClassLabel::Normal, "Oz", -300.0).unwrap(), 0.0);
        assert_eq!(erp_value(&erp, ClassLabel::Normal, "Cz", -650.0).unwrap(), -1.5);
        assert_eq!(erp_value(&erp, ClassLabel::Emergency, "Cz", 0.0).unwrap(), -3.0);
    }

    #[test]
    fn zero_scale_silences_everything() {
        let erp = ErpTemplateConfig {
            amplitude_scale: 0.0,
            ..Default::default()
        };
        for class in ClassLabel::ALL {
            for t in (-3000..1000).step_by(25) {
                assert_eq!(erp_value(&erp, class, "Cz", t as f64).unwrap().abs(), 0.0);
                assert_eq!(erp_value(&erp, class, "Oz", t as f64).unwrap().abs(), 0.0);
            }
        }
    }

    #[test]
    fn passband_gain_matches_filtered_waveform() {
        let erp = ErpTemplateConfig::default();
        let g = occipital_passband_gain(&erp, 200);
        let f = design_bandpass(DEFAULT_LOW_HZ, DEFAULT_HIGH_HZ, 200.0, DEFAULT_NUM_TAPS).unwrap();
        // 10 s at 200 Hz, peak at sample 1000
        let x: Vec<f64> = (0..2000)
            .map(|i| bump(i as f64 * 5.0 - 5300.0, erp.occipital_onset_ms, erp.occipital_peak_ms, erp.occipital_offset_ms))
            .collect();
        let y = f.apply(&x).unwrap();
        assert!((y[1000] - g).abs() < 1e-12);
        assert!(g > 0.5 && g < 0.9);
        assert_eq!(occipital_passband_gain(&erp, 80), 1.0);
    }

    #[test]
    fn unknown_channel() {
        let erp = ErpTemplateConfig::default();
        assert!(matches!(
            erp_value(&erp, ClassLabel::Emergency, "TP9", 0.0),
            Err(Error::UnknownChannel(_))
        ));
    }

    #[test]
    fn bump_is_continuous() {
        for t in [-400.0, -300.0, -100.0] {
            let a = bump(t - 1e-6, -400.0, -300.0, -100.0);
            let b = bump(t + 1e-6, -400.0, -300.0, -100.0);
            assert!((a - b).abs() < 1e-6);
        }
    }
}
