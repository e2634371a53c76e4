//! Transmit-side frame structures.
//!
//! A packet carries one payload, repeated back-to-back as `N` identical
//! sub-packets (`SF ‖ Ab ‖ RLL(payload) ‖ Ab`). The asynchronous bits encode
//! the packet clock state: one bit toggling every packet (structure #1), or
//! two bits forming a period-4 counter (structure #2). Ab bits are sent as
//! Manchester pairs whatever the payload code is.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chips::{Chip, ChipStream};
use crate::rll::{encode_rll, manchester_bit, manchester_pair, RllError, RllScheme};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrameError {
    #[error(transparent)]
    Rll(#[from] RllError),
    #[error("plan infeasible: {0}")]
    PlanInfeasible(String),
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("payload {index} has {found} bits, plan expects {expected}")]
    PayloadLength {
        index: usize,
        expected: usize,
        found: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FrameStructure {
    /// One Ab before and one after the payload.
    #[serde(rename = "v1")]
    V1OneAbPair,
    /// (Ab1, Ab2) before and after the payload.
    #[serde(rename = "v2")]
    V2TwoAbPairs,
}

impl FrameStructure {
    /// Ab bits carried at each end of the payload.
    pub const fn ab_bits(self) -> usize {
        match self {
            FrameStructure::V1OneAbPair => 1,
            FrameStructure::V2TwoAbPairs => 2,
        }
    }

    /// Chips occupied by the Ab bits at one end.
    pub const fn ab_chips(self) -> usize {
        2 * self.ab_bits()
    }

    /// Number of distinct Ab states before the pattern repeats.
    pub const fn state_period(self) -> usize {
        1 << self.ab_bits()
    }

    /// Ab overhead counted per packet in OOK states (both ends, one state per bit).
    pub const fn ab_overhead_states(self) -> usize {
        2 * self.ab_bits()
    }
}

impl fmt::Display for FrameStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FrameStructure::V1OneAbPair => "v1",
            FrameStructure::V2TwoAbPairs => "v2",
        })
    }
}

impl FromStr for FrameStructure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "v1" | "1" => Ok(FrameStructure::V1OneAbPair),
            "v2" | "2" => Ok(FrameStructure::V2TwoAbPairs),
            other => Err(format!(
                "unknown frame structure {other:?} (expected v1 or v2)"
            )),
        }
    }
}

/// Combined Ab state: bit 0 is Ab1, bit 1 is Ab2 (always 0 under V1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AbState(pub u8);

impl AbState {
    pub fn for_packet(version: FrameStructure, packet_index: u64) -> Self {
        match version {
            FrameStructure::V1OneAbPair => AbState(ab_state_v1(packet_index)),
            FrameStructure::V2TwoAbPairs => {
                let (ab1, ab2) = ab_state_v2(packet_index);
                AbState(ab1 | (ab2 << 1))
            }
        }
    }

    pub fn ab1(self) -> u8 {
        self.0 & 1
    }

    pub fn ab2(self) -> u8 {
        (self.0 >> 1) & 1
    }

    /// Manchester chips for this state: Ab1 pair, then Ab2 pair under V2.
    pub fn chips(self, version: FrameStructure) -> Vec<Chip> {
        let mut out = Vec::with_capacity(version.ab_chips());
        out.extend_from_slice(&manchester_pair(self.ab1()));
        if version == FrameStructure::V2TwoAbPairs {
            out.extend_from_slice(&manchester_pair(self.ab2()));
        }
        out
    }

    /// Parse Ab chips; `None` if any pair is not a Manchester symbol.
    pub fn from_chips(chips: &[Chip], version: FrameStructure) -> Option<Self> {
        if chips.len() != version.ab_chips() {
            return None;
        }
        let ab1 = manchester_bit(&chips[..2])?;
        let ab2 = match version {
            FrameStructure::V1OneAbPair => 0,
            FrameStructure::V2TwoAbPairs => manchester_bit(&chips[2..4])?,
        };
        Some(AbState(ab1 | (ab2 << 1)))
    }

    pub fn label(self, version: FrameStructure) -> String {
        match version {
            FrameStructure::V1OneAbPair => format!("{}", self.ab1()),
            FrameStructure::V2TwoAbPairs => format!("{}{}", self.ab1(), self.ab2()),
        }
    }
}

/// Structure #1 Ab: 1 for odd packet indices, 0 for even.
pub fn ab_state_v1(i: u64) -> u8 {
    (i % 2) as u8
}

/// Structure #2 (Ab1, Ab2): Ab1 toggles every packet, Ab2 every second packet.
pub fn ab_state_v2(i: u64) -> (u8, u8) {
    ((i % 2) as u8, ((i / 2) % 2) as u8)
}

/// Smallest integer `N` with `N * ds_length >= t_cam_max`.
pub fn repetition_count<T: Scalar>(t_cam_max: T, ds_length: T) -> u64 {
    assert!(
        t_cam_max > T::zero() && ds_length > T::zero(),
        "repetition_count needs positive arguments"
    );
    let approx = (t_cam_max.to_f64() / ds_length.to_f64()).floor().max(1.0) as u64;
    let mut n = approx.saturating_sub(1).max(1);
    while T::from_int(n as i64) * ds_length < t_cam_max {
        n += 1;
    }
    n
}

/// Chips in one sub-packet, from the start of its SF to the start of the next.
pub fn subpacket_chips(scheme: RllScheme, version: FrameStructure, payload_bits: usize) -> usize {
    scheme.preamble().len() + 2 * version.ab_chips() + scheme.encoded_chips(payload_bits)
}

pub fn build_subpacket(
    payload: &[u8],
    packet_index: u64,
    scheme: RllScheme,
    version: FrameStructure,
) -> Result<Vec<Chip>, RllError> {
    let body = encode_rll(payload, scheme)?;
    let ab = AbState::for_packet(version, packet_index).chips(version);
    let mut out = Vec::with_capacity(scheme.preamble().len() + body.len() + 2 * ab.len());
    out.extend_from_slice(scheme.preamble());
    out.extend_from_slice(&ab);
    out.extend_from_slice(&body);
    out.extend_from_slice(&ab);
    Ok(out)
}

/// Idle chips closing a packet slot when `N` sub-packets do not fill it.
///
/// The pattern has runs of at most three, so no preamble can form across it,
/// and its last two chips are never a Manchester symbol, so a receiver reading
/// backwards from the next SF rejects them as an Ab.
pub fn slot_filler(len: usize) -> Vec<Chip> {
    const PATTERN: [Chip; 4] = [0, 0, 1, 1];
    let mut out = Vec::with_capacity(len);
    if len % 2 == 1 {
        out.push(0);
    }
    let even = len - out.len();
    out.extend((0..even).map(|j| PATTERN[j % 4]));
    out
}

/// Timing of a packet stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketPlan {
    pub optical_clock_hz: f64,
    pub packet_rate: f64,
    pub subpacket_chips: usize,
    pub repetitions: usize,
}

impl PacketPlan {
    pub fn new(
        optical_clock_hz: f64,
        packet_rate: f64,
        subpacket_chips: usize,
        repetitions: usize,
    ) -> Result<Self, FrameError> {
        let plan = Self {
            optical_clock_hz,
            packet_rate,
            subpacket_chips,
            repetitions,
        };
        plan.validate()?;
        Ok(plan)
    }

    /// Plan with the minimum repetition count for the longest camera
    /// inter-frame interval `t_cam_max`.
    pub fn minimal(
        optical_clock_hz: f64,
        packet_rate: f64,
        scheme: RllScheme,
        version: FrameStructure,
        payload_bits: usize,
        t_cam_max: f64,
    ) -> Result<Self, FrameError> {
        let ds = subpacket_chips(scheme, version, payload_bits);
        let n = repetition_count(t_cam_max, ds as f64 / optical_clock_hz) as usize;
        Self::new(optical_clock_hz, packet_rate, ds, n)
    }

    /// Plan repeating the sub-packet as many whole times as fit in the packet
    /// slot; fails if that is fewer than the minimum for `t_cam_max`.
    pub fn filled(
        optical_clock_hz: f64,
        packet_rate: f64,
        scheme: RllScheme,
        version: FrameStructure,
        payload_bits: usize,
        t_cam_max: f64,
    ) -> Result<Self, FrameError> {
        let ds = subpacket_chips(scheme, version, payload_bits);
        let slot = slot_chips(optical_clock_hz, packet_rate)?;
        let min = repetition_count(t_cam_max, ds as f64 / optical_clock_hz) as usize;
        let fit = slot / ds.max(1);
        if fit < min {
            return Err(FrameError::PlanInfeasible(format!(
                "a {slot}-chip packet slot holds {fit} sub-packets of {ds} chips, {min} needed for a {:.4} s frame interval",
                t_cam_max
            )));
        }
        let mut n = fit;
        // a one-chip remainder cannot be made unreadable as an Ab; give it a whole sub-packet
        if slot - n * ds == 1 && n > min {
            n -= 1;
        }
        Self::new(optical_clock_hz, packet_rate, ds, n)
    }

    pub fn validate(&self) -> Result<(), FrameError> {
        if !(self.optical_clock_hz.is_finite() && self.optical_clock_hz > 0.0) {
            return Err(FrameError::InvalidPlan(format!(
                "optical_clock_hz must be positive, got {}",
                self.optical_clock_hz
            )));
        }
        if !(self.packet_rate.is_finite() && self.packet_rate > 0.0) {
            return Err(FrameError::InvalidPlan(format!(
                "packet_rate must be positive, got {}",
                self.packet_rate
            )));
        }
        if self.subpacket_chips == 0 || self.repetitions == 0 {
            return Err(FrameError::InvalidPlan(
                "subpacket_chips and repetitions must be at least 1".into(),
            ));
        }
        let slot = slot_chips(self.optical_clock_hz, self.packet_rate)?;
        let used = self.repetitions * self.subpacket_chips;
        if used > slot {
            return Err(FrameError::PlanInfeasible(format!(
                "{} sub-packets of {} chips need {used} chips but the packet slot has {slot}",
                self.repetitions, self.subpacket_chips
            )));
        }
        if slot - used == 1 {
            return Err(FrameError::PlanInfeasible(
                "a one-chip slot remainder would read as a valid Ab; change the repetition count"
                    .into(),
            ));
        }
        Ok(())
    }

    pub fn slot_chips(&self) -> usize {
        slot_chips(self.optical_clock_hz, self.packet_rate).expect("validated plan")
    }

    pub fn ds_length_s(&self) -> f64 {
        self.subpacket_chips as f64 / self.optical_clock_hz
    }

    pub fn packet_length_s(&self) -> f64 {
        1.0 / self.packet_rate
    }

    pub fn filler_chips(&self) -> usize {
        self.slot_chips() - self.repetitions * self.subpacket_chips
    }

    /// Packet index transmitting chip `chip_index`.
    pub fn packet_of_chip(&self, chip_index: usize) -> usize {
        chip_index / self.slot_chips()
    }
}

/// Chips per packet slot; the clock must be an integer multiple of the packet rate.
pub fn slot_chips(optical_clock_hz: f64, packet_rate: f64) -> Result<usize, FrameError> {
    let ratio = optical_clock_hz / packet_rate;
    let rounded = ratio.round();
    if rounded < 1.0 || (ratio - rounded).abs() > 1e-9 * ratio.max(1.0) {
        return Err(FrameError::InvalidPlan(format!(
            "optical clock {optical_clock_hz} Hz is not an integer multiple of packet rate {packet_rate}/s"
        )));
    }
    Ok(rounded as usize)
}

pub fn build_packet_stream(
    payloads: &[Vec<u8>],
    plan: &PacketPlan,
    scheme: RllScheme,
    version: FrameStructure,
) -> Result<ChipStream, FrameError> {
    plan.validate()?;
    let slot = plan.slot_chips();
    let filler = slot_filler(plan.filler_chips());
    let mut chips = Vec::with_capacity(payloads.len() * slot);
    for (i, payload) in payloads.iter().enumerate() {
        let sub = build_subpacket(payload, i as u64, scheme, version)?;
        if sub.len() != plan.subpacket_chips {
            let expected =
                (plan.subpacket_chips - scheme.preamble().len() - 2 * version.ab_chips())
                    / scheme.codeword_chips()
                    * scheme.block_bits();
            return Err(FrameError::PayloadLength {
                index: i,
                expected,
                found: payload.len(),
            });
        }
        for _ in 0..plan.repetitions {
            chips.extend_from_slice(&sub);
        }
        chips.extend_from_slice(&filler);
    }
    Ok(
        ChipStream::new(chips, plan.optical_clock_hz)
            .expect("chips are binary and clock validated"),
    )
}
