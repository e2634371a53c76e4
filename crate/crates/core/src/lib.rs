//! Asynchronous LED-to-rolling-shutter camera link.
//!
//! The transmitter repeats each packet's data sub-packet (start frame,
//! asynchronous bits, RLL-coded payload) across a packet slot. The camera
//! model turns the chip waveform into per-row luminance under a varying frame
//! rate, and the receiver slices rows back into chips, reads payload fragments
//! around each start frame, groups them by asynchronous-bit state, fuses and
//! votes them into payloads, and reports missed payloads.
//!
//! Formula code in [`analysis`] is generic over [`Scalar`] and is normally
//! evaluated exactly with [`Exact`].

pub mod analysis;
pub mod camera;
pub mod chips;
pub mod config;
pub mod error;
pub mod frame;
pub mod link;
pub mod rll;
pub mod rx;
pub mod scalar;

pub use camera::{CameraConfig, CameraError, FrameSample, GeometryConfig};
pub use chips::{Chip, ChipStream};
pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use frame::{AbState, FrameStructure, PacketPlan};
pub use link::LinkSpec;
pub use rll::RllScheme;
pub use rx::{DecodedPart, GapReport, LinkReport, ReceiverConfig};
pub use scalar::{Exact, Sample, Scalar};

/// Frame with `f64` row luminance.
pub type Frame = FrameSample<f64>;
/// Frame with `f32` row luminance.
pub type Frame32 = FrameSample<f32>;
/// Exact rate or throughput value.
pub type ExactRate = Exact;
/// Throughput inputs evaluated exactly.
pub type ExactThroughputInputs = analysis::ThroughputInputs<Exact>;
/// Throughput inputs in floating point.
pub type ThroughputInputs = analysis::ThroughputInputs<f64>;
