//! Little-endian binary containers.
//!
//! `EPO1` (epoch sets):
//!
//! ```text
//! 0   magic "EPO1"
//! 4   u16 version = 1
//! 6   u16 channel count C
//! 8   u32 samples per epoch T
//! 12  u32 sample rate (Hz)
//! 16  u32 epoch count N
//! 20  C x (u16 byte length, UTF-8 channel name)
//!     C x (f32 x, f32 y) scalp positions
//!     N x (u8 label, u32 t0_offset_ms, C*T f32 samples channel-major)
//! ```
//!
//! The provenance string is not part of `EPO1` and is not preserved.
//!
//! `REC1` (continuous recordings) follows the same conventions:
//! magic, u16 version, u16 C, u32 sample rate, u64 samples per channel,
//! names, positions, u32 event count, events as (f64 time_ms, u8 kind,
//! u8 class), then C*S f32 samples channel-major. Kind 0 is a brake-light
//! onset, kind 1 a pedal press; class 0 is emergency, 1 normal, 255 none.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, FormatError, Result};
use crate::model::{
    BrakeClass, ChannelMontage, ClassLabel, ContinuousRecording, Epoch, EpochSet, Event, EventKind,
};

pub const EPO_MAGIC: [u8; 4] = *b"EPO1";
pub const EPO_VERSION: u16 = 1;
pub const REC_MAGIC: [u8; 4] = *b"REC1";
pub const REC_VERSION: u16 = 1;

/// Fixed header bytes before the channel names.
pub const EPO_HEADER_LEN: usize = 20;

#[derive(Default)]
pub(crate) struct ByteWriter {
    pub buf: Vec<u8>,
}

impl ByteWriter {
    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }
    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    pub fn u16(&mut self, v: u16) {
        self.bytes(&v.to_le_bytes());
    }
    pub fn u32(&mut self, v: u32) {
        self.bytes(&v.to_le_bytes());
    }
    pub fn u64(&mut self, v: u64) {
        self.bytes(&v.to_le_bytes());
    }
    pub fn f32(&mut self, v: f32) {
        self.bytes(&v.to_le_bytes());
    }
    pub fn f64(&mut self, v: f64) {
        self.bytes(&v.to_le_bytes());
    }
    pub fn f64s(&mut self, vs: &[f64]) {
        self.u32(vs.len() as u32);
        for &v in vs {
            self.f64(v);
        }
    }
    pub fn len_u32(&mut self, n: usize) -> Result<()> {
        let v = u32::try_from(n)
            .map_err(|_| FormatError::ShapeMismatch(format!("{n} does not fit in u32")))?;
        self.u32(v);
        Ok(())
    }
    pub fn names(&mut self, montage: &ChannelMontage) -> Result<()> {
        for n in montage.names() {
            let len = u16::try_from(n.len())
                .map_err(|_| FormatError::ShapeMismatch(format!("channel name too long: {n}")))?;
            self.u16(len);
            self.bytes(n.as_bytes());
        }
        for &(x, y) in montage.positions() {
            self.f32(x);
            self.f32(y);
        }
        Ok(())
    }
}

pub(crate) struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        ByteReader { buf, pos: 0 }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        match end {
            Some(end) => {
                let s = &self.buf[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(FormatError::Truncated {
                offset: self.pos,
                needed: n - (self.buf.len() - self.pos),
            }),
        }
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], FormatError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }
    pub fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.take(1)?[0])
    }
    pub fn u16(&mut self) -> Result<u16, FormatError> {
        Ok(u16::from_le_bytes(self.array()?))
    }
    pub fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.array()?))
    }
    pub fn u64(&mut self) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.array()?))
    }
    pub fn f32(&mut self) -> Result<f32, FormatError> {
        Ok(f32::from_le_bytes(self.array()?))
    }
    pub fn f64(&mut self) -> Result<f64, FormatError> {
        Ok(f64::from_le_bytes(self.array()?))
    }
    pub fn f64s(&mut self) -> Result<Vec<f64>, FormatError> {
        let n = self.u32()? as usize;
        self.ensure(n.saturating_mul(8))?;
        (0..n).map(|_| self.f64()).collect()
    }
    /// Fails early when fewer than `n` bytes remain.
    pub fn ensure(&self, n: usize) -> Result<(), FormatError> {
        let left = self.buf.len() - self.pos;
        if n > left {
            return Err(FormatError::Truncated {
                offset: self.pos,
                needed: n - left,
            });
        }
        Ok(())
    }
    pub fn magic(&mut self, expected: [u8; 4]) -> Result<(), FormatError> {
        let found = self.array::<4>()?;
        if found != expected {
            return Err(FormatError::BadMagic { expected, found });
        }
        Ok(())
    }
    pub fn version(&mut self, expected: u16) -> Result<(), FormatError> {
        let found = self.u16()?;
        if found != expected {
            return Err(FormatError::VersionMismatch { expected, found });
        }
        Ok(())
    }
    pub fn montage(&mut self, c: usize) -> Result<ChannelMontage, FormatError> {
        let mut names = Vec::with_capacity(c);
        for _ in 0..c {
            let len = self.u16()? as usize;
            let raw = self.take(len)?;
            let s = std::str::from_utf8(raw)
                .map_err(|e| FormatError::Malformed(format!("channel name: {e}")))?;
            names.push(s.to_string());
        }
        let mut positions = Vec::with_capacity(c);
        for _ in 0..c {
            positions.push((self.f32()?, self.f32()?));
        }
        ChannelMontage::new(names, positions).map_err(|e| FormatError::ShapeMismatch(e.to_string()))
    }
    pub fn finish(&self) -> Result<(), FormatError> {
        if self.pos != self.buf.len() {
            return Err(FormatError::ShapeMismatch(format!(
                "{} trailing bytes after payload",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

pub fn encode_epochset(set: &EpochSet) -> Result<Vec<u8>> {
    let c = set.n_channels();
    let t = set.samples_per_epoch();
    let mut w = ByteWriter::default();
    w.bytes(&EPO_MAGIC);
    w.u16(EPO_VERSION);
    w.u16(u16::try_from(c).map_err(|_| FormatError::ShapeMismatch(format!("{c} channels")))?);
    w.len_u32(t)?;
    w.u32(set.sample_rate());
    w.len_u32(set.len())?;
    w.names(set.montage())?;
    w.buf.reserve(set.len() * (5 + 4 * c * t));
    for e in set.epochs() {
        w.u8(e.label.code());
        w.u32(e.t0_offset_ms);
        for &v in &e.data {
            w.f32(v as f32);
        }
    }
    Ok(w.buf)
}

pub fn decode_epochset(bytes: &[u8]) -> Result<EpochSet> {
    let mut r = ByteReader::new(bytes);
    r.magic(EPO_MAGIC)?;
    r.version(EPO_VERSION)?;
    let c = r.u16()? as usize;
    let t = r.u32()? as usize;
    let rate = r.u32()?;
    let n = r.u32()? as usize;
    if c < 2 || t == 0 || rate == 0 {
        return Err(FormatError::ShapeMismatch(format!(
            "header declares {c} channels, {t} samples, {rate} Hz"
        ))
        .into());
    }
    let montage = r.montage(c)?;
    let record = 5 + 4 * c * t;
    r.ensure(n.saturating_mul(record))?;
    let mut epochs = Vec::with_capacity(n);
    for i in 0..n {
        let code = r.u8()?;
        let label = ClassLabel::from_code(code)
            .ok_or_else(|| FormatError::Malformed(format!("epoch {i}: label code {code}")))?;
        let t0_offset_ms = r.u32()?;
        let raw = r.take(4 * c * t)?;
        let data = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("chunk of 4")) as f64)
            .collect();
        epochs.push(Epoch {
            label,
            t0_offset_ms,
            data,
        });
    }
    r.finish()?;
    EpochSet::new(montage, rate, t, epochs, "")
}

pub fn write_epochset(set: &EpochSet, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &encode_epochset(set)?)
}

pub fn read_epochset(path: impl AsRef<Path>) -> Result<EpochSet> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_epochset(&bytes)
}

/// Byte size of an `EPO1` file for the given shape.
pub fn epochset_file_len(montage: &ChannelMontage, samples_per_epoch: usize, n_epochs: usize) -> usize {
    let c = montage.len();
    let names: usize = montage.names().iter().map(|n| 2 + n.len()).sum();
    EPO_HEADER_LEN + names + 8 * c + n_epochs * (5 + 4 * c * samples_per_epoch)
}

pub fn encode_recording(rec: &ContinuousRecording) -> Result<Vec<u8>> {
    let c = rec.n_channels();
    let mut w = ByteWriter::default();
    w.bytes(&REC_MAGIC);
    w.u16(REC_VERSION);
    w.u16(u16::try_from(c).map_err(|_| FormatError::ShapeMismatch(format!("{c} channels")))?);
    w.u32(rec.sample_rate());
    w.u64(rec.n_samples() as u64);
    w.names(rec.montage())?;
    w.len_u32(rec.events().len())?;
    for e in rec.events() {
        w.f64(e.time_ms);
        let (kind, class) = match e.kind {
            EventKind::BrakeLightOn => (0, 255),
            EventKind::BrakePedalPress { class } => (1, class as u8),
        };
        w.u8(kind);
        w.u8(class);
    }
    w.buf.reserve(4 * rec.samples().len());
    for &v in rec.samples() {
        w.f32(v);
    }
    Ok(w.buf)
}

pub fn decode_recording(bytes: &[u8]) -> Result<ContinuousRecording> {
    let mut r = ByteReader::new(bytes);
    r.magic(REC_MAGIC)?;
    r.version(REC_VERSION)?;
    let c = r.u16()? as usize;
    let rate = r.u32()?;
    let s = usize::try_from(r.u64()?)
        .map_err(|_| FormatError::ShapeMismatch("sample count overflows".into()))?;
    let montage = r.montage(c)?;
    let n_events = r.u32()? as usize;
    r.ensure(n_events.saturating_mul(10))?;
    let mut events = Vec::with_capacity(n_events);
    for i in 0..n_events {
        let time_ms = r.f64()?;
        let kind = r.u8()?;
        let class = r.u8()?;
        let kind = match (kind, class) {
            (0, _) => EventKind::BrakeLightOn,
            (1, 0) => EventKind::BrakePedalPress {
                class: BrakeClass::Emergency,
            },
            (1, 1) => EventKind::BrakePedalPress {
                class: BrakeClass::Normal,
            },
            _ => {
                return Err(
                    FormatError::Malformed(format!("event {i}: kind {kind} class {class}")).into(),
                )
            }
        };
        events.push(Event { time_ms, kind });
    }
    let total = c
        .checked_mul(s)
        .ok_or_else(|| FormatError::ShapeMismatch("sample count overflows".into()))?;
    let raw = r.take(total.saturating_mul(4))?;
    let samples = raw
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().expect("chunk of 4")))
        .collect();
    r.finish()?;
    ContinuousRecording::new(montage, rate, samples, events)
        .map_err(|e| FormatError::ShapeMismatch(e.to_string()).into())
}

pub fn write_recording(rec: &ContinuousRecording, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &encode_recording(rec)?)
}

pub fn read_recording(path: impl AsRef<Path>) -> Result<ContinuousRecording> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_recording(&bytes)
}

/// Writes to a sibling temp file, then renames over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
