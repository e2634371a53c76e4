//! Receiver: frames in, payloads and gap reports out.

mod decode;
mod fuse;
mod gaps;
mod signal;

pub use decode::{decode_frame, find_sf, DecodedPart, Direction};
pub use fuse::{
    fuse_pair, group_parts, majority_vote, recover_group, Fused, RecoveredPayload, Vote,
};
pub use gaps::{
    cycle_distance, detect_missed, missed_between, state_cycle, GapReport, Observation,
};
pub use signal::{
    best_phase, binarize, binarize_aligned, binarize_with_phase, detrend, detrend_window,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::FrameSample;
use crate::chips::{pack_msb_first, Chip};
use crate::frame::FrameStructure;
use crate::rll::RllScheme;
use crate::scalar::Sample;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RxError {
    #[error(
        "prefix of {prefix} and suffix of {suffix} bits cannot cover a {payload_bits}-bit payload"
    )]
    UnfusablePair {
        prefix: usize,
        suffix: usize,
        payload_bits: usize,
    },
    #[error("invalid receiver configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReceiverConfig {
    pub scheme: RllScheme,
    pub version: FrameStructure,
    pub payload_bits: usize,
    pub rows_per_chip: f64,
    pub fusion: bool,
}

impl ReceiverConfig {
    pub fn validate(&self) -> Result<(), RxError> {
        if self.payload_bits == 0 || !self.payload_bits.is_multiple_of(self.scheme.block_bits()) {
            return Err(RxError::InvalidConfig(format!(
                "payload_bits {} must be a positive multiple of {} for {}",
                self.payload_bits,
                self.scheme.block_bits(),
                self.scheme
            )));
        }
        if !(self.rows_per_chip > 0.0 && self.rows_per_chip.is_finite()) {
            return Err(RxError::InvalidConfig(format!(
                "rows_per_chip must be positive, got {}",
                self.rows_per_chip
            )));
        }
        Ok(())
    }
}

/// Chips read from the LED-covered rows of one frame.
pub fn frame_chips<T: Sample>(frame: &FrameSample<T>, config: &ReceiverConfig) -> Vec<Chip> {
    let rows = frame.covered();
    if rows.is_empty() {
        return Vec::new();
    }
    let signal = detrend(rows, detrend_window(config.rows_per_chip, config.scheme));
    binarize_aligned(&signal, config.rows_per_chip)
}

/// Decode every frame independently, in parallel. Output keeps frame order.
pub fn decode_frames<T: Sample>(
    frames: &[FrameSample<T>],
    config: &ReceiverConfig,
) -> Vec<Vec<DecodedPart>> {
    frames
        .par_iter()
        .map(|f| {
            decode_frame(
                &frame_chips(f, config),
                f.index,
                config.scheme,
                config.version,
                config.payload_bits,
            )
        })
        .collect()
}

/// Everything the receiver concluded from a frame sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Reception {
    pub parts: Vec<Vec<DecodedPart>>,
    pub payloads: Vec<RecoveredPayload>,
    pub gaps: Vec<GapReport>,
    pub unrecovered_groups: usize,
}

impl Reception {
    /// Recovered payload bits concatenated in order.
    pub fn payload_bits(&self) -> Vec<u8> {
        self.payloads
            .iter()
            .flat_map(|p| p.bits.iter().copied())
            .collect()
    }

    pub fn missed_detected(&self) -> usize {
        self.gaps.iter().map(|g| g.missed_count as usize).sum()
    }
}

/// Fuse, vote and (for the two-pair structure) detect gaps over decoded parts.
pub fn assemble(parts: Vec<Vec<DecodedPart>>, config: &ReceiverConfig) -> Reception {
    let flat: Vec<DecodedPart> = parts.iter().flatten().cloned().collect();
    let groups = group_parts(&flat);
    let mut payloads = Vec::new();
    let mut unrecovered = 0;
    for g in &groups {
        match recover_group(g, config.payload_bits, config.fusion) {
            Some(p) => payloads.push(p),
            None => unrecovered += 1,
        }
    }
    let gaps = if config.version == FrameStructure::V2TwoAbPairs {
        let order = state_cycle(config.version);
        let obs: Vec<Observation<'_>> = payloads
            .iter()
            .map(|p| Observation {
                state: p.ab_state,
                payload: &p.bits,
                first_frame: p.first_frame,
                last_frame: p.last_frame,
            })
            .collect();
        detect_missed(&obs, &order)
    } else {
        Vec::new()
    };
    Reception {
        parts,
        payloads,
        gaps,
        unrecovered_groups: unrecovered,
    }
}

pub fn receive<T: Sample>(
    frames: &[FrameSample<T>],
    config: &ReceiverConfig,
) -> Result<Reception, RxError> {
    config.validate()?;
    Ok(assemble(decode_frames(frames, config), config))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayloadDump {
    pub ab_state: String,
    pub hex: String,
    pub bits: String,
    pub first_frame: usize,
    pub last_frame: usize,
    pub samples: usize,
    pub fused: bool,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkReport {
    pub scheme: RllScheme,
    pub version: FrameStructure,
    pub payload_bits: usize,
    pub frames: usize,
    pub frames_with_sf: usize,
    pub parts: usize,
    pub complete_parts: usize,
    pub recovered: usize,
    pub fused: usize,
    pub voted: usize,
    pub flagged: usize,
    pub unrecovered_groups: usize,
    pub missed_detected: usize,
    pub gaps: Vec<GapReport>,
    pub payloads: Vec<PayloadDump>,
}

pub fn to_hex(bits: &[u8]) -> String {
    pack_msb_first(bits)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl LinkReport {
    pub fn new(reception: &Reception, config: &ReceiverConfig) -> Self {
        let parts = reception.parts.iter().map(Vec::len).sum();
        let complete_parts = reception
            .parts
            .iter()
            .flatten()
            .filter(|p| p.complete)
            .count();
        let p = &reception.payloads;
        Self {
            scheme: config.scheme,
            version: config.version,
            payload_bits: config.payload_bits,
            frames: reception.parts.len(),
            frames_with_sf: reception.parts.iter().filter(|v| !v.is_empty()).count(),
            parts,
            complete_parts,
            recovered: p.len(),
            fused: p.iter().filter(|x| x.fused).count(),
            voted: p.iter().filter(|x| x.samples > 1).count(),
            flagged: p.iter().filter(|x| x.flagged).count(),
            unrecovered_groups: reception.unrecovered_groups,
            missed_detected: reception.missed_detected(),
            gaps: reception.gaps.clone(),
            payloads: p
                .iter()
                .map(|x| PayloadDump {
                    ab_state: x.ab_state.label(config.version),
                    hex: to_hex(&x.bits),
                    bits: x.bits.iter().map(|b| char::from(b'0' + b)).collect(),
                    first_frame: x.first_frame,
                    last_frame: x.last_frame,
                    samples: x.samples,
                    fused: x.fused,
                    flagged: x.flagged,
                })
                .collect(),
        }
    }
}
