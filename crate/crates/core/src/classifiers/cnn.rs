//! Compact EEGNet-style convolutional network with hand-written
//! backpropagation, trained by mini-batch Adam.
//!
//! Layers: spatial depthwise filter (D per temporal filter) and temporal
//! convolution (F1 kernels, "same" padding), per-sample normalization of each
//! map over time with a learned gain and bias, ELU, average pool, dropout,
//! separable convolution (depthwise temporal + pointwise to F2 maps), bias,
//! ELU, average pool, dropout, dense softmax over two classes.
//!
//! The temporal and spatial convolutions are both linear with nothing in
//! between, so the spatial projection is applied first: the result is the
//! same and the long temporal kernel runs on F1·D maps instead of F1·C rows.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::lda::two_classes;
use crate::error::{Error, Result};
use crate::model::ClassLabel;
use crate::rng::RngSeed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CnnConfig {
    pub temporal_filters: usize,
    pub depth_multiplier: usize,
    pub separable_filters: usize,
    /// Temporal kernel length; half the sample rate by default.
    pub temporal_kernel_ms: f64,
    /// Depthwise kernel of the separable block, in pooled samples.
    pub separable_kernel: usize,
    pub pool1: usize,
    pub pool2: usize,
    pub dropout: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
}

impl Default for CnnConfig {
    fn default() -> Self {
        CnnConfig {
            temporal_filters: 8,
            depth_multiplier: 2,
            separable_filters: 16,
            temporal_kernel_ms: 500.0,
            separable_kernel: 16,
            pool1: 4,
            pool2: 8,
            dropout: 0.25,
            epochs: 100,
            batch_size: 16,
            learning_rate: 1e-3,
            momentum: 0.9,
        }
    }
}

impl CnnConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.temporal_filters,
            self.depth_multiplier,
            self.separable_filters,
            self.separable_kernel,
            self.pool1,
            self.pool2,
            self.batch_size,
        ];
        if positive.contains(&0)
            || !(self.temporal_kernel_ms > 0.0)
            || !(0.0..1.0).contains(&self.dropout)
            || !(self.learning_rate > 0.0 && self.learning_rate.is_finite())
            || !(0.0..1.0).contains(&self.momentum)
        {
            return Err(Error::InvalidArgument(format!("invalid CNN configuration: {self:?}")));
        }
        Ok(())
    }
}

/// Layer sizes for one input shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CnnShape {
    pub channels: usize,
    pub samples: usize,
    pub f1: usize,
    pub d: usize,
    pub f2: usize,
    pub k1: usize,
    pub k2: usize,
    pub pool1: usize,
    pub pool2: usize,
}

impl CnnShape {
    pub fn new(channels: usize, samples: usize, sample_rate: u32, cfg: &CnnConfig) -> Result<Self> {
        cfg.validate()?;
        let k1 = ((cfg.temporal_kernel_ms * sample_rate as f64 / 1000.0).round() as usize).max(1);
        let shape = CnnShape {
            channels,
            samples,
            f1: cfg.temporal_filters,
            d: cfg.depth_multiplier,
            f2: cfg.separable_filters,
            k1,
            k2: cfg.separable_kernel,
            pool1: cfg.pool1,
            pool2: cfg.pool2,
        };
        if channels == 0 || shape.l2() == 0 {
            return Err(Error::InvalidArgument(format!(
                "{channels}x{samples} input is too small for pooling {}x{}",
                cfg.pool1, cfg.pool2
            )));
        }
        Ok(shape)
    }

    fn maps(&self) -> usize {
        self.f1 * self.d
    }
    fn l1(&self) -> usize {
        self.samples / self.pool1
    }
    fn l2(&self) -> usize {
        self.l1() / self.pool2
    }
    fn pad1(&self) -> usize {
        (self.k1 - 1) / 2
    }
    fn pad2(&self) -> usize {
        (self.k2 - 1) / 2
    }
    fn dense_in(&self) -> usize {
        self.f2 * self.l2()
    }
}

pub const PARAM_NAMES: [&str; 9] = [
    "spatial",
    "temporal",
    "gain1",
    "bias1",
    "depthwise",
    "pointwise",
    "bias2",
    "dense",
    "dense_bias",
];

/// Learnable tensors, row-major, in `PARAM_NAMES` order.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnParams {
    /// `maps x C`
    pub spatial: Vec<f64>,
    /// `F1 x K1`
    pub temporal: Vec<f64>,
    /// Per-map scale and shift after normalization.
    pub gain1: Vec<f64>,
    pub bias1: Vec<f64>,
    /// `maps x K2`
    pub depthwise: Vec<f64>,
    /// `F2 x maps`
    pub pointwise: Vec<f64>,
    pub bias2: Vec<f64>,
    /// `2 x (F2 * L2)`
    pub dense: Vec<f64>,
    pub dense_bias: Vec<f64>,
}

impl CnnParams {
    pub fn zeros(s: &CnnShape) -> Self {
        let maps = s.maps();
        CnnParams {
            spatial: vec![0.0; maps * s.channels],
            temporal: vec![0.0; s.f1 * s.k1],
            gain1: vec![0.0; maps],
            bias1: vec![0.0; maps],
            depthwise: vec![0.0; maps * s.k2],
            pointwise: vec![0.0; s.f2 * maps],
            bias2: vec![0.0; s.f2],
            dense: vec![0.0; 2 * s.dense_in()],
            dense_bias: vec![0.0; 2],
        }
    }

    /// Glorot-uniform weights, unit gains, zero biases.
    pub fn glorot(s: &CnnShape, rng: &mut impl Rng) -> Self {
        let mut p = Self::zeros(s);
        p.gain1.iter_mut().for_each(|g| *g = 1.0);
        let mut fill = |v: &mut [f64], fan_in: usize, fan_out: usize| {
            let lim = (6.0 / (fan_in + fan_out) as f64).sqrt();
            v.iter_mut().for_each(|w| *w = rng.random_range(-lim..lim));
        };
        fill(&mut p.spatial, s.channels, s.channels * s.d);
        fill(&mut p.temporal, s.k1, s.k1 * s.f1);
        fill(&mut p.depthwise, s.k2, s.k2);
        fill(&mut p.pointwise, s.maps(), s.f2);
        fill(&mut p.dense, s.dense_in(), 2);
        p
    }

    pub fn tensors(&self) -> [&[f64]; 9] {
        [
            &self.spatial,
            &self.temporal,
            &self.gain1,
            &self.bias1,
            &self.depthwise,
            &self.pointwise,
            &self.bias2,
            &self.dense,
            &self.dense_bias,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Vec<f64>; 9] {
        [
            &mut self.spatial,
            &mut self.temporal,
            &mut self.gain1,
            &mut self.bias1,
            &mut self.depthwise,
            &mut self.pointwise,
            &mut self.bias2,
            &mut self.dense,
            &mut self.dense_bias,
        ]
    }

    fn fill_zero(&mut self) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v = 0.0);
        }
    }
}

#[derive(Debug, Clone)]
pub struct CnnModel {
    pub classes: [ClassLabel; 2],
    pub shape: CnnShape,
    pub config: CnnConfig,
    pub params: CnnParams,
    /// Mean training loss (dropout off) after each epoch, when tracked.
    pub loss_history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnnPrediction {
    pub label: ClassLabel,
    /// Probabilities of `classes[0]` and `classes[1]`.
    pub probabilities: [f64; 2],
    pub tie: bool,
}

pub const ADAM_BETA2: f64 = 0.999;
/// Variance floor of the per-map normalization.
pub const NORM_EPS: f64 = 1e-5;
pub const ADAM_EPS: f64 = 1e-8;

/// `out[i] += sum_k w[k] * src[i + k]`, accumulated in `k` order.
/// Register-blocked over `i`; `src` must hold `out.len() + w.len() - 1`.
#[inline(always)]
fn correlate_generic(src: &[f64], w: &[f64], out: &mut [f64]) {
    const B: usize = 8;
    let n = out.len();
    assert!(src.len() + 1 >= n + w.len());
    let mut i = 0;
    while i + B <= n {
        let mut acc = [0.0f64; B];
        acc.copy_from_slice(&out[i..i + B]);
        for (k, &wk) in w.iter().enumerate() {
            let s = &src[i + k..i + k + B];
            for b in 0..B {
                acc[b] += wk * s[b];
            }
        }
        out[i..i + B].copy_from_slice(&acc);
        i += B;
    }
    for (j, o) in out.iter_mut().enumerate().skip(i) {
        for (k, &wk) in w.iter().enumerate() {
            *o += wk * src[j + k];
        }
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn correlate_avx2(src: &[f64], w: &[f64], out: &mut [f64]) {
    correlate_generic(src, w, out)
}

fn correlate(src: &[f64], w: &[f64], out: &mut [f64]) {
    #[cfg(target_arch = "x86_64")]
    if std::is_x86_feature_detected!("avx2") {
        // SAFETY: the required CPU feature was detected at runtime
        return unsafe { correlate_avx2(src, w, out) };
    }
    correlate_generic(src, w, out)
}

#[inline]
fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

#[inline]
fn elu_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        x.exp()
    }
}

/// Per-channel standardization of one window, channel-major output.
pub fn standardize_window(window: &DMatrix<f64>) -> Vec<f64> {
    let (c, t) = window.shape();
    let mut out = Vec::with_capacity(c * t);
    for row in window.row_iter() {
        let m = row.mean();
        let var = row.iter().map(|v| (v - m).powi(2)).sum::<f64>() / t.max(1) as f64;
        let inv = if var > 0.0 { 1.0 / var.sqrt() } else { 1.0 };
        out.extend(row.iter().map(|v| (v - m) * inv));
    }
    out
}

/// Intermediate activations of one forward pass.
struct Trace {
    /// `maps x (T + K1 - 1)`, spatial projections with zero padding.
    zp: Vec<f64>,
    /// `maps x T` normalized convolution output.
    xhat1: Vec<f64>,
    /// Per-map reciprocal standard deviation of the convolution output.
    inv_sd1: Vec<f64>,
    /// `maps x T` pre-activations.
    a1: Vec<f64>,
    /// `maps x (L1 + K2 - 1)`, dropped pooled maps with zero padding.
    d1p: Vec<f64>,
    /// `maps x L1`
    u: Vec<f64>,
    /// `F2 x L1` pre-activations.
    v: Vec<f64>,
    /// `F2 * L2`, flattened dense input after dropout.
    d2: Vec<f64>,
    logits: [f64; 2],
}

struct Masks {
    m1: Vec<f64>,
    m2: Vec<f64>,
}

impl Masks {
    fn draw(s: &CnnShape, p: f64, rng: &mut impl Rng) -> Self {
        let keep = 1.0 / (1.0 - p);
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
                .collect()
        };
        let m1 = draw(s.maps() * s.l1());
        let m2 = draw(s.dense_in());
        Masks { m1, m2 }
    }
}

fn forward(s: &CnnShape, p: &CnnParams, x: &[f64], masks: Option<&Masks>) -> Trace {
    let (c_n, t_n, maps) = (s.channels, s.samples, s.maps());
    let (l1, l2) = (s.l1(), s.l2());
    let w1 = t_n + s.k1 - 1;
    let pad1 = s.pad1();

    let mut zp = vec![0.0; maps * w1];
    for m in 0..maps {
        let row = &mut zp[m * w1 + pad1..m * w1 + pad1 + t_n];
        for c in 0..c_n {
            axpy(p.spatial[m * c_n + c], &x[c * t_n..(c + 1) * t_n], row);
        }
    }
    let mut xhat1 = vec![0.0; maps * t_n];
    let mut inv_sd1 = vec![0.0; maps];
    let mut a1 = vec![0.0; maps * t_n];
    for m in 0..maps {
        let f = m / s.d;
        let xh = &mut xhat1[m * t_n..(m + 1) * t_n];
        correlate(&zp[m * w1..(m + 1) * w1], &p.temporal[f * s.k1..(f + 1) * s.k1], xh);
        let mean = xh.iter().sum::<f64>() / t_n as f64;
        let var = xh.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / t_n as f64;
        let inv = 1.0 / (var + NORM_EPS).sqrt();
        xh.iter_mut().for_each(|v| *v = (*v - mean) * inv);
        inv_sd1[m] = inv;
        for (a, x) in a1[m * t_n..(m + 1) * t_n].iter_mut().zip(xh.iter()) {
            *a = p.gain1[m] * x + p.bias1[m];
        }
    }
    let w2 = l1 + s.k2 - 1;
    let pad2 = s.pad2();
    let mut d1p = vec![0.0; maps * w2];
    for m in 0..maps {
        for j in 0..l1 {
            let base = m * t_n + j * s.pool1;
            let mean = a1[base..base + s.pool1].iter().map(|&v| elu(v)).sum::<f64>() / s.pool1 as f64;
            let keep = masks.map_or(1.0, |mk| mk.m1[m * l1 + j]);
            d1p[m * w2 + pad2 + j] = mean * keep;
        }
    }
    let mut u = vec![0.0; maps * l1];
    for m in 0..maps {
        correlate(&d1p[m * w2..(m + 1) * w2], &p.depthwise[m * s.k2..(m + 1) * s.k2], &mut u[m * l1..(m + 1) * l1]);
    }
    let mut v = vec![0.0; s.f2 * l1];
    for o in 0..s.f2 {
        let out = &mut v[o * l1..(o + 1) * l1];
        out.iter_mut().for_each(|x| *x = p.bias2[o]);
        for m in 0..maps {
            axpy(p.pointwise[o * maps + m], &u[m * l1..(m + 1) * l1], out);
        }
    }
    let mut d2 = vec![0.0; s.dense_in()];
    for o in 0..s.f2 {
        for j in 0..l2 {
            let base = o * l1 + j * s.pool2;
            let mean = v[base..base + s.pool2].iter().map(|&x| elu(x)).sum::<f64>() / s.pool2 as f64;
            let keep = masks.map_or(1.0, |mk| mk.m2[o * l2 + j]);
            d2[o * l2 + j] = mean * keep;
        }
    }
    let n_in = s.dense_in();
    let logits = [
        p.dense_bias[0] + dot(&p.dense[..n_in], &d2),
        p.dense_bias[1] + dot(&p.dense[n_in..], &d2),
    ];
    Trace {
        zp,
        xhat1,
        inv_sd1,
        a1,
        d1p,
        u,
        v,
        d2,
        logits,
    }
}

fn softmax(l: [f64; 2]) -> [f64; 2] {
    let m = l[0].max(l[1]);
    let e = [(l[0] - m).exp(), (l[1] - m).exp()];
    let z = e[0] + e[1];
    [e[0] / z, e[1] / z]
}

/// Cross-entropy of the softmax of `logits` against class index `y`.
fn cross_entropy(logits: [f64; 2], y: usize) -> f64 {
    let m = logits[0].max(logits[1]);
    let lse = m + ((logits[0] - m).exp() + (logits[1] - m).exp()).ln();
    lse - logits[y]
}

/// Accumulates `scale * dL/dθ` for one sample into `g`.
fn backward(s: &CnnShape, p: &CnnParams, x: &[f64], tr: &Trace, masks: Option<&Masks>, y: usize, scale: f64, g: &mut CnnParams) {
    let (c_n, t_n, maps) = (s.channels, s.samples, s.maps());
    let (l1, l2) = (s.l1(), s.l2());
    let n_in = s.dense_in();
    let probs = softmax(tr.logits);
    let dlog = [
        scale * (probs[0] - if y == 0 { 1.0 } else { 0.0 }),
        scale * (probs[1] - if y == 1 { 1.0 } else { 0.0 }),
    ];

    g.dense_bias[0] += dlog[0];
    g.dense_bias[1] += dlog[1];
    axpy(dlog[0], &tr.d2, &mut g.dense[..n_in]);
    axpy(dlog[1], &tr.d2, &mut g.dense[n_in..]);
    let mut dd2: Vec<f64> = (0..n_in)
        .map(|i| p.dense[i] * dlog[0] + p.dense[n_in + i] * dlog[1])
        .collect();
    if let Some(mk) = masks {
        dd2.iter_mut().zip(&mk.m2).for_each(|(d, k)| *d *= k);
    }

    let mut dv = vec![0.0; s.f2 * l1];
    for o in 0..s.f2 {
        for j in 0..l2 {
            let gpool = dd2[o * l2 + j] / s.pool2 as f64;
            for t in j * s.pool2..(j + 1) * s.pool2 {
                dv[o * l1 + t] = gpool * elu_grad(tr.v[o * l1 + t]);
            }
        }
    }
    let mut du = vec![0.0; maps * l1];
    for o in 0..s.f2 {
        let dvo = &dv[o * l1..(o + 1) * l1];
        g.bias2[o] += dvo.iter().sum::<f64>();
        for m in 0..maps {
            g.pointwise[o * maps + m] += dot(dvo, &tr.u[m * l1..(m + 1) * l1]);
            axpy(p.pointwise[o * maps + m], dvo, &mut du[m * l1..(m + 1) * l1]);
        }
    }

    let w2 = l1 + s.k2 - 1;
    let pad2 = s.pad2();
    let mut da1 = vec![0.0; maps * t_n];
    let mut dd1p = vec![0.0; w2];
    for m in 0..maps {
        let dum = &du[m * l1..(m + 1) * l1];
        let src = &tr.d1p[m * w2..(m + 1) * w2];
        dd1p.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..s.k2 {
            g.depthwise[m * s.k2 + j] += dot(dum, &src[j..j + l1]);
            axpy(p.depthwise[m * s.k2 + j], dum, &mut dd1p[j..j + l1]);
        }
        for jj in 0..l1 {
            let keep = masks.map_or(1.0, |mk| mk.m1[m * l1 + jj]);
            let gpool = dd1p[pad2 + jj] * keep / s.pool1 as f64;
            for t in jj * s.pool1..(jj + 1) * s.pool1 {
                da1[m * t_n + t] = gpool * elu_grad(tr.a1[m * t_n + t]);
            }
        }
    }

    let w1 = t_n + s.k1 - 1;
    let pad1 = s.pad1();
    // dz[i] = sum_k w[k] da[i + pad1 - k]: correlation of the zero-padded
    // gradient with the reversed kernel
    let mut dpad = vec![0.0; t_n + 2 * (s.k1 - 1)];
    let mut dz = vec![0.0; t_n];
    let mut rev = vec![0.0; s.k1];
    let mut dconv = vec![0.0; t_n];
    for m in 0..maps {
        let f = m / s.d;
        let dam = &da1[m * t_n..(m + 1) * t_n];
        let xh = &tr.xhat1[m * t_n..(m + 1) * t_n];
        g.bias1[m] += dam.iter().sum::<f64>();
        g.gain1[m] += dot(dam, xh);
        // through the normalization: inv * (dx - mean(dx) - xhat * mean(dx * xhat))
        let gain = p.gain1[m];
        let mean_d = gain * dam.iter().sum::<f64>() / t_n as f64;
        let mean_dx = gain * dot(dam, xh) / t_n as f64;
        for ((d, a), x) in dconv.iter_mut().zip(dam).zip(xh) {
            *d = tr.inv_sd1[m] * (gain * a - mean_d - x * mean_dx);
        }
        let dam = &dconv[..];
        let kernel = &p.temporal[f * s.k1..(f + 1) * s.k1];
        correlate(&tr.zp[m * w1..(m + 1) * w1], dam, &mut g.temporal[f * s.k1..(f + 1) * s.k1]);
        dpad[s.k1 - 1..s.k1 - 1 + t_n].copy_from_slice(dam);
        rev.iter_mut().zip(kernel.iter().rev()).for_each(|(r, w)| *r = *w);
        dz.iter_mut().for_each(|v| *v = 0.0);
        correlate(&dpad[pad1..], &rev, &mut dz);
        for c in 0..c_n {
            g.spatial[m * c_n + c] += dot(&dz, &x[c * t_n..(c + 1) * t_n]);
        }
    }
}

fn class_index(classes: &[ClassLabel; 2], l: ClassLabel) -> usize {
    usize::from(l == classes[1])
}

fn check_inputs(windows: &[DMatrix<f64>], labels: &[ClassLabel]) -> Result<(usize, usize)> {
    if windows.len() != labels.len() || windows.is_empty() {
        return Err(Error::InvalidArgument("windows and labels differ in length".into()));
    }
    let shape = windows[0].shape();
    if windows.iter().any(|w| w.shape() != shape) {
        return Err(Error::InvalidArgument("windows differ in shape".into()));
    }
    if windows.iter().any(|w| w.iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFinite("CNN input".into()));
    }
    Ok(shape)
}

impl CnnModel {
    /// Untrained network with Glorot-initialized weights.
    pub fn init(classes: [ClassLabel; 2], shape: CnnShape, config: CnnConfig, seed: RngSeed) -> Self {
        let params = CnnParams::glorot(&shape, &mut seed.rng());
        CnnModel {
            classes,
            shape,
            config,
            params,
            loss_history: Vec::new(),
        }
    }

    fn check_window(&self, window: &DMatrix<f64>) -> Result<()> {
        if window.shape() != (self.shape.channels, self.shape.samples) {
            return Err(Error::InvalidArgument(format!(
                "window is {}x{}, network expects {}x{}",
                window.nrows(),
                window.ncols(),
                self.shape.channels,
                self.shape.samples
            )));
        }
        Ok(())
    }

    /// Softmax output for one window.
    pub fn probabilities(&self, window: &DMatrix<f64>) -> Result<[f64; 2]> {
        self.check_window(window)?;
        let x = standardize_window(window);
        Ok(softmax(forward(&self.shape, &self.params, &x, None).logits))
    }

    /// Mean cross-entropy without dropout.
    pub fn loss(&self, windows: &[DMatrix<f64>], labels: &[ClassLabel]) -> Result<f64> {
        check_inputs(windows, labels)?;
        let mut total = 0.0;
        for (w, l) in windows.iter().zip(labels) {
            self.check_window(w)?;
            let x = standardize_window(w);
            total += cross_entropy(forward(&self.shape, &self.params, &x, None).logits, class_index(&self.classes, *l));
        }
        Ok(total / windows.len() as f64)
    }

    /// Mean cross-entropy and its gradient without dropout.
    pub fn loss_and_gradient(&self, windows: &[DMatrix<f64>], labels: &[ClassLabel]) -> Result<(f64, CnnParams)> {
        check_inputs(windows, labels)?;
        let mut g = CnnParams::zeros(&self.shape);
        let scale = 1.0 / windows.len() as f64;
        let mut total = 0.0;
        for (w, l) in windows.iter().zip(labels) {
            self.check_window(w)?;
            let x = standardize_window(w);
            let y = class_index(&self.classes, *l);
            let tr = forward(&self.shape, &self.params, &x, None);
            total += cross_entropy(tr.logits, y);
            backward(&self.shape, &self.params, &x, &tr, None, y, scale, &mut g);
        }
        Ok((total * scale, g))
    }
}

/// Trains from the Glorot initialization drawn from `seed`; shuffling and
/// dropout masks come from the same stream. With `track_loss` the
/// dropout-free training loss is recorded after every epoch.
pub fn cnn_fit_tracked(
    windows: &[DMatrix<f64>],
    labels: &[ClassLabel],
    config: &CnnConfig,
    sample_rate: u32,
    seed: RngSeed,
    track_loss: bool,
) -> Result<CnnModel> {
    let (c, t) = check_inputs(windows, labels)?;
    let classes = two_classes(labels)?;
    let shape = CnnShape::new(c, t, sample_rate, config)?;
    let mut model = CnnModel::init(classes, shape, *config, seed.split(0));
    let mut rng = seed.split(1).rng();
    let inputs: Vec<Vec<f64>> = windows.iter().map(standardize_window).collect();
    let targets: Vec<usize> = labels.iter().map(|l| class_index(&classes, *l)).collect();

    let mut grad = CnnParams::zeros(&shape);
    let mut velocity = CnnParams::zeros(&shape);
    let mut second = CnnParams::zeros(&shape);
    let mut step = 0i32;
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            grad.fill_zero();
            let scale = 1.0 / batch.len() as f64;
            let mut batch_loss = 0.0;
            for &i in batch {
                let masks = (config.dropout > 0.0).then(|| Masks::draw(&shape, config.dropout, &mut rng));
                let tr = forward(&shape, &model.params, &inputs[i], masks.as_ref());
                batch_loss += cross_entropy(tr.logits, targets[i]);
                backward(&shape, &model.params, &inputs[i], &tr, masks.as_ref(), targets[i], scale, &mut grad);
            }
            if !batch_loss.is_finite() {
                return Err(Error::NonFiniteLoss(format!(
                    "epoch {epoch}: batch loss {batch_loss} over {} samples",
                    batch.len()
                )));
            }
            step += 1;
            let (lr, b1) = (config.learning_rate, config.momentum);
            let c1 = 1.0 - b1.powi(step);
            let c2 = 1.0 - ADAM_BETA2.powi(step);
            for (((w, m1), m2), g) in model
                .params
                .tensors_mut()
                .into_iter()
                .zip(velocity.tensors_mut())
                .zip(second.tensors_mut())
                .zip(grad.tensors())
            {
                for (((wi, mi), vi), gi) in w.iter_mut().zip(m1.iter_mut()).zip(m2.iter_mut()).zip(g) {
                    *mi = b1 * *mi + (1.0 - b1) * gi;
                    *vi = ADAM_BETA2 * *vi + (1.0 - ADAM_BETA2) * gi * gi;
                    *wi -= lr * (*mi / c1) / ((*vi / c2).sqrt() + ADAM_EPS);
                }
            }
        }
        if track_loss {
            let l = inputs
                .iter()
                .zip(&targets)
                .map(|(x, &y)| cross_entropy(forward(&shape, &model.params, x, None).logits, y))
                .sum::<f64>()
                / inputs.len() as f64;
            model.loss_history.push(l);
        }
    }
    Ok(model)
}

pub fn cnn_fit(
    windows: &[DMatrix<f64>],
    labels: &[ClassLabel],
    config: &CnnConfig,
    sample_rate: u32,
    seed: RngSeed,
) -> Result<CnnModel> {
    cnn_fit_tracked(windows, labels, config, sample_rate, seed, false)
}

pub fn cnn_predict(model: &CnnModel, window: &DMatrix<f64>) -> Result<CnnPrediction> {
    let probabilities = model.probabilities(window)?;
    let tie = probabilities[0] == probabilities[1];
    let label = if probabilities[1] > probabilities[0] { model.classes[1] } else { model.classes[0] };
    Ok(CnnPrediction {
        label,
        probabilities,
        tie,
    })
}
