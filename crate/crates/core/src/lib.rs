//! Offline EEG braking-intention decoding.
//!
//! The crate covers the whole offline chain: synthetic driving sessions with
//! brake events and class-conditional ERPs ([`synth`]), the band-pass /
//! epoching / artifact-rejection / baseline chain ([`preprocess`]), three
//! two-class decoders behind one contract ([`classifiers`]) and the
//! repeated-split sliding-window evaluation protocol ([`eval`]).
//!
//! All randomness flows from a single [`RngSeed`]; equal seeds and configs
//! give bit-identical datasets, splits, models and output files.

pub mod classifiers;
pub mod error;
pub mod eval;
pub mod format;
pub mod linalg;
pub mod model;
pub mod output;
pub mod par;
pub mod pipeline;
pub mod preprocess;
pub mod rng;
pub mod synth;

pub use error::{Error, FormatError, Result};
pub use model::{
    BrakeClass, ChannelMontage, ClassLabel, ContinuousRecording, Epoch, EpochSet, Event,
    EventKind,
};
pub use par::Execution;
pub use rng::{split_rng, RngSeed};
