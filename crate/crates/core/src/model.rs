//! Domain types shared by every stage of the pipeline.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The 28 recording electrodes, in storage order.
pub const STANDARD_CHANNELS: [&str; 28] = [
    "F5", "F3", "Fz", "F4", "F6", "FT7", "FC5", "FC1", "FC2", "FC6", "FT8", "T7", "C3", "Cz", "C4",
    "T8", "CP5", "CP1", "CP2", "CP6", "P5", "P3", "Pz", "P4", "P6", "O1", "Oz", "O2",
];

// Azimuthal projection, nose at +y, Cz at the origin, the T7-Oz-T8 ring at 0.8.
const STANDARD_POSITIONS: [(f32, f32); 28] = [
    (-0.52, 0.47),
    (-0.33, 0.42),
    (0.0, 0.40),
    (0.33, 0.42),
    (0.52, 0.47),
    (-0.76, 0.25),
    (-0.55, 0.22),
    (-0.18, 0.20),
    (0.18, 0.20),
    (0.55, 0.22),
    (0.76, 0.25),
    (-0.80, 0.0),
    (-0.40, 0.0),
    (0.0, 0.0),
    (0.40, 0.0),
    (0.80, 0.0),
    (-0.55, -0.22),
    (-0.18, -0.20),
    (0.18, -0.20),
    (0.55, -0.22),
    (-0.52, -0.47),
    (-0.33, -0.42),
    (0.0, -0.40),
    (0.33, -0.42),
    (0.52, -0.47),
    (-0.25, -0.76),
    (0.0, -0.80),
    (0.25, -0.76),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMontage {
    names: Vec<String>,
    positions: Vec<(f32, f32)>,
}

impl ChannelMontage {
    pub fn new(names: Vec<String>, positions: Vec<(f32, f32)>) -> Result<Self> {
        if names.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "montage needs at least 2 channels, got {}",
                names.len()
            )));
        }
        if names.len() != positions.len() {
            return Err(Error::InvalidArgument(format!(
                "{} channel names but {} positions",
                names.len(),
                positions.len()
            )));
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(Error::InvalidArgument(format!("duplicate channel {n:?}")));
            }
        }
        if let Some((n, _)) = names
            .iter()
            .zip(&positions)
            .find(|(_, (x, y))| !(x * x + y * y <= 1.0))
        {
            return Err(Error::InvalidArgument(format!(
                "channel {n:?} lies outside the unit disc"
            )));
        }
        Ok(ChannelMontage { names, positions })
    }

    pub fn standard() -> Self {
        ChannelMontage {
            names: STANDARD_CHANNELS.iter().map(|s| s.to_string()).collect(),
            positions: STANDARD_POSITIONS.to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn positions(&self) -> &[(f32, f32)] {
        &self.positions
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

impl Default for ChannelMontage {
    fn default() -> Self {
        Self::standard()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BrakeClass {
    Emergency,
    Normal,
}

impl BrakeClass {
    pub fn label(self) -> ClassLabel {
        match self {
            BrakeClass::Emergency => ClassLabel::Emergency,
            BrakeClass::Normal => ClassLabel::Normal,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BrakeClass::Emergency => "emergency",
            BrakeClass::Normal => "normal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    BrakeLightOn,
    BrakePedalPress { class: BrakeClass },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time_ms: f64,
    pub kind: EventKind,
}

/// Epoch classes. The declaration order is the tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassLabel {
    Emergency,
    Normal,
    NoBraking,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 3] = [ClassLabel::Emergency, ClassLabel::Normal, ClassLabel::NoBraking];

    pub fn code(self) -> u8 {
        match self {
            ClassLabel::Emergency => 0,
            ClassLabel::Normal => 1,
            ClassLabel::NoBraking => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(ClassLabel::Emergency),
            1 => Some(ClassLabel::Normal),
            2 => Some(ClassLabel::NoBraking),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::Emergency => "emergency",
            ClassLabel::Normal => "normal",
            ClassLabel::NoBraking => "no-braking",
        }
    }
}

/// Multichannel continuous EEG (µV, channel-major) with its event log.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousRecording {
    montage: ChannelMontage,
    sample_rate: u32,
    n_samples: usize,
    samples: Vec<f32>,
    events: Vec<Event>,
}

impl ContinuousRecording {
    pub fn new(
        montage: ChannelMontage,
        sample_rate: u32,
        samples: Vec<f32>,
        events: Vec<Event>,
    ) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidArgument("sample rate must be positive".into()));
        }
        let c = montage.len();
        if samples.len() % c != 0 {
            return Err(Error::InvalidArgument(format!(
                "{} samples is not a multiple of {c} channels",
                samples.len()
            )));
        }
        let n_samples = samples.len() / c;
        let duration = n_samples as f64 * 1000.0 / sample_rate as f64;
        let mut prev = f64::NEG_INFINITY;
        for e in &events {
            if !(e.time_ms >= 0.0 && e.time_ms < duration) {
                return Err(Error::InvalidArgument(format!(
                    "event at {} ms outside recording of {duration} ms",
                    e.time_ms
                )));
            }
            if e.time_ms < prev {
                return Err(Error::InvalidArgument("event timestamps must be nondecreasing".into()));
            }
            prev = e.time_ms;
        }
        Ok(ContinuousRecording {
            montage,
            sample_rate,
            n_samples,
            samples,
            events,
        })
    }

    pub fn montage(&self) -> &ChannelMontage {
        &self.montage
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn n_channels(&self) -> usize {
        self.montage.len()
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn duration_ms(&self) -> f64 {
        self.n_samples as f64 * 1000.0 / self.sample_rate as f64
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        &self.samples[c * self.n_samples..(c + 1) * self.n_samples]
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub(crate) fn with_samples(&self, samples: Vec<f32>) -> Self {
        debug_assert_eq!(samples.len(), self.samples.len());
        ContinuousRecording {
            samples,
            ..self.clone_meta()
        }
    }

    fn clone_meta(&self) -> Self {
        ContinuousRecording {
            montage: self.montage.clone(),
            sample_rate: self.sample_rate,
            n_samples: self.n_samples,
            samples: Vec::new(),
            events: self.events.clone(),
        }
    }
}

/// Converts a duration to a sample count, `round(ms * rate / 1000)`.
pub fn ms_to_samples(ms: f64, sample_rate: u32) -> usize {
    (ms * sample_rate as f64 / 1000.0).round() as usize
}

/// One labeled segment, channel-major, in µV.
#[derive(Debug, Clone, PartialEq)]
pub struct Epoch {
    pub label: ClassLabel,
    /// Position of the brake-pedal onset inside the epoch, ms from its start.
    pub t0_offset_ms: u32,
    pub data: Vec<f64>,
}

impl Epoch {
    pub fn channel(&self, c: usize, samples_per_epoch: usize) -> &[f64] {
        &self.data[c * samples_per_epoch..(c + 1) * samples_per_epoch]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochSet {
    montage: ChannelMontage,
    sample_rate: u32,
    samples_per_epoch: usize,
    epochs: Vec<Epoch>,
    pub provenance: String,
}

impl EpochSet {
    pub fn new(
        montage: ChannelMontage,
        sample_rate: u32,
        samples_per_epoch: usize,
        epochs: Vec<Epoch>,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if sample_rate == 0 || samples_per_epoch == 0 {
            return Err(Error::InvalidArgument(
                "sample rate and epoch length must be positive".into(),
            ));
        }
        let want = montage.len() * samples_per_epoch;
        if let Some((i, e)) = epochs.iter().enumerate().find(|(_, e)| e.data.len() != want) {
            return Err(Error::InvalidData(format!(
                "epoch {i} has {} samples, expected {want}",
                e.data.len()
            )));
        }
        Ok(EpochSet {
            montage,
            sample_rate,
            samples_per_epoch,
            epochs,
            provenance: provenance.into(),
        })
    }

    /// Same shape and metadata, different epochs.
    pub fn with_epochs(&self, epochs: Vec<Epoch>) -> Self {
        debug_assert!(epochs
            .iter()
            .all(|e| e.data.len() == self.montage.len() * self.samples_per_epoch));
        EpochSet {
            montage: self.montage.clone(),
            sample_rate: self.sample_rate,
            samples_per_epoch: self.samples_per_epoch,
            epochs,
            provenance: self.provenance.clone(),
        }
    }

    pub fn montage(&self) -> &ChannelMontage {
        &self.montage
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn n_channels(&self) -> usize {
        self.montage.len()
    }

    pub fn samples_per_epoch(&self) -> usize {
        self.samples_per_epoch
    }

    pub fn epoch_duration_ms(&self) -> f64 {
        self.samples_per_epoch as f64 * 1000.0 / self.sample_rate as f64
    }

    pub fn epochs(&self) -> &[Epoch] {
        &self.epochs
    }

    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn count(&self, label: ClassLabel) -> usize {
        self.epochs.iter().filter(|e| e.label == label).count()
    }

    pub fn counts(&self) -> [usize; 3] {
        ClassLabel::ALL.map(|l| self.count(l))
    }

    /// Epochs of the given classes, original order kept.
    pub fn select(&self, classes: &[ClassLabel]) -> EpochSet {
        self.with_epochs(
            self.epochs
                .iter()
                .filter(|e| classes.contains(&e.label))
                .cloned()
                .collect(),
        )
    }

    /// Appends the epochs of `other`, which must share shape and montage.
    pub fn merge(&self, other: &EpochSet) -> Result<EpochSet> {
        if other.montage != self.montage
            || other.sample_rate != self.sample_rate
            || other.samples_per_epoch != self.samples_per_epoch
        {
            return Err(Error::InvalidData(
                "cannot merge epoch sets with different shape or montage".into(),
            ));
        }
        let mut epochs = self.epochs.clone();
        epochs.extend(other.epochs.iter().cloned());
        Ok(self.with_epochs(epochs))
    }

    /// Rounds every sample to `f32`, the on-disk precision.
    pub fn quantized(&self) -> EpochSet {
        self.with_epochs(
            self.epochs
                .iter()
                .map(|e| Epoch {
                    data: e.data.iter().map(|&v| v as f32 as f64).collect(),
                    ..e.clone()
                })
                .collect(),
        )
    }

    /// Sample index of a time given relative to the epoch's brake onset.
    pub fn sample_at(&self, epoch: &Epoch, t_rel_ms: f64) -> f64 {
        (epoch.t0_offset_ms as f64 + t_rel_ms) * self.sample_rate as f64 / 1000.0
    }

    /// The window `[end_ms - len_ms, end_ms)` relative to brake onset as a
    /// channels x time matrix.
    pub fn window(&self, index: usize, end_ms: f64, len_ms: f64) -> Result<DMatrix<f64>> {
        let epoch = &self.epochs[index];
        let (start, len) = self.window_bounds(epoch, end_ms, len_ms)?;
        let t = self.samples_per_epoch;
        Ok(DMatrix::from_fn(self.n_channels(), len, |c, j| {
            epoch.data[c * t + start + j]
        }))
    }

    /// `(start_sample, n_samples)` of a window, checked against the epoch.
    pub fn window_bounds(&self, epoch: &Epoch, end_ms: f64, len_ms: f64) -> Result<(usize, usize)> {
        let start_ms = epoch.t0_offset_ms as f64 + end_ms - len_ms;
        let len = ms_to_samples(len_ms, self.sample_rate);
        let start = (start_ms * self.sample_rate as f64 / 1000.0).round();
        if len == 0 || start < 0.0 || start as usize + len > self.samples_per_epoch {
            return Err(Error::WindowOutOfBounds {
                start_ms: end_ms - len_ms,
                end_ms,
                epoch_start_ms: -(epoch.t0_offset_ms as f64),
                epoch_end_ms: self.epoch_duration_ms() - epoch.t0_offset_ms as f64,
            });
        }
        Ok((start as usize, len))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_montage_is_valid() {
        let m = ChannelMontage::standard();
        assert_eq!(m.len(), 28);
        ChannelMontage::new(m.names().to_vec(), m.positions().to_vec()).unwrap();
        assert_eq!(m.index_of("Oz"), Some(26));
    }

    #[test]
    fn montage_rejects_duplicates_and_far_positions() {
        let dup = ChannelMontage::new(vec!["A".into(), "A".into()], vec![(0.0, 0.0); 2]);
        assert!(dup.is_err());
        let far = ChannelMontage::new(vec!["A".into(), "B".into()], vec![(0.0, 0.0), (1.0, 0.5)]);
        assert!(far.is_err());
        let one = ChannelMontage::new(vec!["A".into()], vec![(0.0, 0.0)]);
        assert!(one.is_err());
    }

    #[test]
    fn recording_rejects_unordered_events() {
        let m = ChannelMontage::new(vec!["A".into(), "B".into()], vec![(0.0, 0.0); 2]).unwrap();
        let ev = |t| Event {
            time_ms: t,
            kind: EventKind::BrakeLightOn,
        };
        assert!(ContinuousRecording::new(m.clone(), 100, vec![0.0; 200], vec![ev(50.0), ev(10.0)]).is_err());
        assert!(ContinuousRecording::new(m.clone(), 100, vec![0.0; 200], vec![ev(1000.0)]).is_err());
        assert!(ContinuousRecording::new(m, 100, vec![0.0; 200], vec![ev(10.0), ev(10.0)]).is_ok());
    }

    #[test]
    fn window_arithmetic() {
        let m = ChannelMontage::new(vec!["A".into(), "B".into()], vec![(0.0, 0.0); 2]).unwrap();
        let t = 800;
        let data: Vec<f64> = (0..2 * t).map(|i| i as f64).collect();
        let set = EpochSet::new(
            m,
            200,
            t,
            vec![Epoch {
                label: ClassLabel::Emergency,
                t0_offset_ms: 3000,
                data,
            }],
            "",
        )
        .unwrap();
        let w = set.window(0, 0.0, 1000.0).unwrap();
        assert_eq!(w.shape(), (2, 200));
        assert_eq!(w[(0, 0)], 400.0);
        assert_eq!(w[(1, 199)], (t + 599) as f64);
        assert!(set.window(0, 1000.0, 1000.0).is_ok());
        assert!(set.window(0, 1050.0, 1000.0).is_err());
        assert!(set.window(0, -2050.0, 1000.0).is_err());
    }
}
