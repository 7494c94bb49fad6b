//! Emergency braking response time (brake light to pedal press).

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::rng::RngSeed;

/// Fitted by least squares of the truncated quantiles against
/// P5/P25/P50/P75/P95 = 520/660/750/850/1020 ms (Nelder-Mead refinement of a
/// grid search). Fitted quantiles 522.9/653.0/750.9/855.3/1017.8 ms,
/// RMS residual 4.27 ms, mean 758.1 ms, sd 150.7 ms.
pub const DEFAULT_RT_SHIFT_MS: f64 = -818.887_255_588_2;
pub const DEFAULT_RT_MU: f64 = 7.358_679_819_187;
pub const DEFAULT_RT_SIGMA: f64 = 0.095_492_913_260;
/// Sum of squared quantile residuals at the frozen parameters, ms².
pub const DEFAULT_RT_FIT_SSE: f64 = 91.182_894;
pub const RT_MIN_MS: f64 = 300.0;
pub const RT_MAX_MS: f64 = 1490.0;

/// Target percentiles the default model was fitted to.
pub const RT_TARGET_PERCENTILES: [(f64, f64); 5] =
    [(0.05, 520.0), (0.25, 660.0), (0.50, 750.0), (0.75, 850.0), (0.95, 1020.0)];

/// `shift + LogNormal(mu, sigma)`, truncated to `[min_ms, max_ms]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactionTimeModel {
    pub shift_ms: f64,
    pub mu: f64,
    pub sigma: f64,
    pub min_ms: f64,
    pub max_ms: f64,
}

impl Default for ReactionTimeModel {
    fn default() -> Self {
        fit_default_rt_model()
    }
}

pub fn fit_default_rt_model() -> ReactionTimeModel {
    ReactionTimeModel {
        shift_ms: DEFAULT_RT_SHIFT_MS,
        mu: DEFAULT_RT_MU,
        sigma: DEFAULT_RT_SIGMA,
        min_ms: RT_MIN_MS,
        max_ms: RT_MAX_MS,
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

impl ReactionTimeModel {
    fn untruncated_cdf(&self, x: f64) -> f64 {
        if x <= self.shift_ms {
            return 0.0;
        }
        if self.sigma == 0.0 {
            return if (x - self.shift_ms).ln() >= self.mu { 1.0 } else { 0.0 };
        }
        std_normal().cdf(((x - self.shift_ms).ln() - self.mu) / self.sigma)
    }

    /// CDF mass of the truncation bounds, `(F(min), F(max))`.
    fn mass(&self) -> (f64, f64) {
        (self.untruncated_cdf(self.min_ms), self.untruncated_cdf(self.max_ms))
    }

    /// Quantile of the truncated distribution.
    pub fn quantile(&self, p: f64) -> f64 {
        let (a, b) = self.mass();
        let x = if self.sigma == 0.0 || b <= a {
            self.shift_ms + self.mu.exp()
        } else {
            let u = (a + p.clamp(0.0, 1.0) * (b - a)).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
            self.shift_ms + (self.mu + self.sigma * std_normal().inverse_cdf(u)).exp()
        };
        x.clamp(self.min_ms, self.max_ms)
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        self.quantile(rng.random::<f64>())
    }

    /// Mean by midpoint quadrature over the quantile function.
    pub fn mean(&self) -> f64 {
        let n = 100_000;
        (0..n).map(|i| self.quantile((i as f64 + 0.5) / n as f64)).sum::<f64>() / n as f64
    }
}

pub fn sample_reaction_time(model: &ReactionTimeModel, seed: RngSeed) -> f64 {
    model.sample(&mut seed.rng())
}
