//! Windowed-sinc FIR band-pass design and zero-phase application.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ContinuousRecording;

pub const DEFAULT_NUM_TAPS: usize = 401;
pub const DEFAULT_LOW_HZ: f64 = 1.0;
pub const DEFAULT_HIGH_HZ: f64 = 45.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandpassDesign {
    pub low_hz: f64,
    pub high_hz: f64,
    pub num_taps: usize,
    pub sample_rate: f64,
}

/// Linear-phase FIR filter (symmetric taps, odd length).
#[derive(Debug, Clone, PartialEq)]
pub struct FirFilter {
    taps: Vec<f64>,
    design: BandpassDesign,
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Hamming-windowed sinc band-pass, normalized to unit gain at the band center.
pub fn design_bandpass(low_hz: f64, high_hz: f64, sample_rate: f64, num_taps: usize) -> Result<FirFilter> {
    if !(low_hz > 0.0 && low_hz < high_hz && high_hz < sample_rate / 2.0) {
        return Err(Error::InvalidArgument(format!(
            "band edges must satisfy 0 < low < high < rate/2, got {low_hz}..{high_hz} Hz at {sample_rate} Hz"
        )));
    }
    if num_taps % 2 == 0 || num_taps < 3 {
        return Err(Error::InvalidArgument(format!(
            "tap count must be odd and >= 3, got {num_taps}"
        )));
    }
    let f1 = low_hz / sample_rate;
    let f2 = high_hz / sample_rate;
    let mid = (num_taps - 1) as f64 / 2.0;
    let mut taps: Vec<f64> = (0..num_taps)
        .map(|n| {
            let m = n as f64 - mid;
            let ideal = 2.0 * f2 * sinc(2.0 * f2 * m) - 2.0 * f1 * sinc(2.0 * f1 * m);
            let w = 0.54 - 0.46 * (2.0 * PI * n as f64 / (num_taps - 1) as f64).cos();
            ideal * w
        })
        .collect();
    // mirror so the taps are symmetric bit-for-bit
    for k in 0..num_taps / 2 {
        taps[num_taps - 1 - k] = taps[k];
    }
    let mut filter = FirFilter {
        taps,
        design: BandpassDesign {
            low_hz,
            high_hz,
            num_taps,
            sample_rate,
        },
    };
    let g = filter.magnitude((low_hz + high_hz) / 2.0);
    filter.taps.iter_mut().for_each(|t| *t /= g);
    Ok(filter)
}

impl FirFilter {
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn design(&self) -> &BandpassDesign {
        &self.design
    }

    pub fn group_delay(&self) -> usize {
        (self.taps.len() - 1) / 2
    }

    /// |H(f)| from the DTFT of the taps.
    pub fn magnitude(&self, freq_hz: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / self.design.sample_rate;
        let (re, im) = self.taps.iter().enumerate().fold((0.0, 0.0), |(re, im), (n, &h)| {
            let a = w * n as f64;
            (re + h * a.cos(), im - h * a.sin())
        });
        re.hypot(im)
    }

    /// Zero-phase filtering of one channel: reflection padding of the group
    /// delay on both sides, then the delay-compensated convolution.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut conv = Convolver::new(&self.taps);
        conv.apply(x)
    }
}

/// Reusable FFT plan for filtering many channels with one filter.
pub(crate) struct Convolver {
    taps: Vec<f64>,
    nfft: usize,
    spectrum: Vec<Complex<f64>>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Convolver {
    pub fn new(taps: &[f64]) -> Self {
        let nfft = (4 * taps.len()).next_power_of_two().max(1024);
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(nfft);
        let inv = planner.plan_fft_inverse(nfft);
        let mut spectrum: Vec<Complex<f64>> = (0..nfft)
            .map(|i| Complex::new(taps.get(i).copied().unwrap_or(0.0), 0.0))
            .collect();
        fwd.process(&mut spectrum);
        Convolver {
            taps: taps.to_vec(),
            nfft,
            spectrum,
            fwd,
            inv,
        }
    }

    pub fn apply(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        let n_taps = self.taps.len();
        let half = (n_taps - 1) / 2;
        if x.len() <= n_taps {
            return Err(Error::RecordingTooShort {
                samples: x.len(),
                taps: n_taps,
            });
        }
        let n = x.len();
        // reflect without repeating the edge sample
        let mut padded = Vec::with_capacity(n + 2 * half);
        padded.extend((1..=half).rev().map(|i| x[i]));
        padded.extend_from_slice(x);
        padded.extend((0..half).map(|i| x[n - 2 - i]));

        if n < 4 * n_taps {
            return Ok(self.direct(&padded, n));
        }
        // overlap-save; out[i] = sum_k h[k] padded[i + k] (h is symmetric)
        let step = self.nfft - (n_taps - 1);
        let scale = 1.0 / self.nfft as f64;
        let mut out = Vec::with_capacity(n);
        let mut buf = vec![Complex::new(0.0, 0.0); self.nfft];
        let mut start = 0;
        while start < n {
            for (j, b) in buf.iter_mut().enumerate() {
                *b = Complex::new(padded.get(start + j).copied().unwrap_or(0.0), 0.0);
            }
            self.fwd.process(&mut buf);
            for (b, h) in buf.iter_mut().zip(&self.spectrum) {
                *b *= h;
            }
            self.inv.process(&mut buf);
            let take = step.min(n - start);
            out.extend(buf[n_taps - 1..n_taps - 1 + take].iter().map(|c| c.re * scale));
            start += take;
        }
        Ok(out)
    }

    fn direct(&self, padded: &[f64], n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| {
                self.taps
                    .iter()
                    .zip(&padded[i..i + self.taps.len()])
                    .map(|(h, v)| h * v)
                    .sum()
            })
            .collect()
    }
}

/// Filters every channel of a recording; events are carried over unchanged.
pub fn apply_filter(rec: &ContinuousRecording, filter: &FirFilter) -> Result<ContinuousRecording> {
    if rec.n_samples() == 0 {
        return Err(Error::InvalidArgument("empty recording".into()));
    }
    let mut conv = Convolver::new(filter.taps());
    let mut out = Vec::with_capacity(rec.samples().len());
    for c in 0..rec.n_channels() {
        let x: Vec<f64> = rec.channel(c).iter().map(|&v| v as f64).collect();
        out.extend(conv.apply(&x)?.into_iter().map(|v| v as f32));
    }
    Ok(rec.with_samples(out))
}
