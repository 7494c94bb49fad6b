//! Synthetic driving sessions: brake-event schedules, response times and
//! multichannel EEG with class-conditional ERPs.

mod erp;
mod noise;
mod reaction;
mod session;

pub use erp::{bump, erp_value, occipital_passband_gain, ErpTemplateConfig};
pub use noise::{mixing_matrix, outlier_rate_per_ms, pink_noise, poisson_times, NoiseConfig};
pub use reaction::{
    fit_default_rt_model, sample_reaction_time, ReactionTimeModel, DEFAULT_RT_FIT_SSE,
    DEFAULT_RT_MU, DEFAULT_RT_SHIFT_MS, DEFAULT_RT_SIGMA, RT_MAX_MS, RT_MIN_MS,
    RT_TARGET_PERCENTILES,
};
pub use session::{generate_schedule, generate_session, generate_subject, write_events_csv};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::BrakeClass;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub session_minutes: f64,
    /// Uniform range of the spacing between successive brake stimuli, s.
    pub inter_event_s: [f64; 2],
    pub mode: BrakeClass,
    pub sample_rate_hz: u32,
    /// Lead-vehicle speed; informational only.
    pub lead_speed_kmh: f64,
    /// Following-distance range; informational only.
    pub gap_m: [f64; 2],
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            session_minutes: 30.0,
            inter_event_s: [15.0, 60.0],
            mode: BrakeClass::Emergency,
            sample_rate_hz: 200,
            lead_speed_kmh: 60.0,
            gap_m: [6.0, 12.0],
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.inter_event_s;
        let [g0, g1] = self.gap_m;
        if !(self.session_minutes > 0.0 && self.session_minutes.is_finite())
            || !(lo > 0.0 && lo <= hi && hi.is_finite())
            || !(g0 > 0.0 && g0 <= g1)
            || !(self.lead_speed_kmh > 0.0)
            || self.sample_rate_hz == 0
        {
            return Err(Error::InvalidArgument(format!("invalid scenario: {self:?}")));
        }
        Ok(())
    }

    pub fn duration_ms(&self) -> f64 {
        self.session_minutes * 60_000.0
    }

    pub fn n_samples(&self) -> usize {
        (self.session_minutes * 60.0 * self.sample_rate_hz as f64).round() as usize
    }
}
