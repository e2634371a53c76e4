//! End-to-end link: payloads → chip stream → camera → receiver, with ground truth.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::camera::{sample_frames, CameraConfig, FrameSample, GeometryConfig};
use crate::chips::ChipStream;
use crate::error::{Error, Result};
use crate::frame::{build_packet_stream, subpacket_chips, FrameError, FrameStructure, PacketPlan};
use crate::rll::RllScheme;
use crate::rx::{self, missed_between, state_cycle, Observation, ReceiverConfig, Reception};

/// Transmitter-side parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub scheme: RllScheme,
    pub version: FrameStructure,
    pub optical_clock_hz: f64,
    pub packet_rate: f64,
    pub payload_bits: usize,
    /// Sub-packet repetitions per packet; as many as fit in the slot when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repetitions: Option<usize>,
}

impl LinkSpec {
    pub fn subpacket_chips(&self) -> usize {
        subpacket_chips(self.scheme, self.version, self.payload_bits)
    }

    pub fn validate(&self) -> Result<(), FrameError> {
        let block = self.scheme.block_bits();
        if self.payload_bits == 0 || !self.payload_bits.is_multiple_of(block) {
            return Err(FrameError::InvalidPlan(format!(
                "payload_bits {} must be a positive multiple of {block} for {}",
                self.payload_bits, self.scheme
            )));
        }
        Ok(())
    }

    /// Packet plan for a camera. The repetition floor uses the camera's longest
    /// inter-frame interval, capped at the packet length.
    pub fn plan(&self, camera: &CameraConfig) -> Result<PacketPlan, FrameError> {
        self.validate()?;
        match self.repetitions {
            Some(n) => PacketPlan::new(
                self.optical_clock_hz,
                self.packet_rate,
                self.subpacket_chips(),
                n,
            ),
            None => {
                let t_cam_max = camera.max_interval_s().min(1.0 / self.packet_rate);
                PacketPlan::filled(
                    self.optical_clock_hz,
                    self.packet_rate,
                    self.scheme,
                    self.version,
                    self.payload_bits,
                    t_cam_max,
                )
            }
        }
    }

    pub fn receiver(&self, camera: &CameraConfig, fusion: bool) -> ReceiverConfig {
        ReceiverConfig {
            scheme: self.scheme,
            version: self.version,
            payload_bits: self.payload_bits,
            rows_per_chip: camera.rows_per_chip(self.optical_clock_hz),
            fusion,
        }
    }
}

/// `count` random payloads; distinct when `distinct` is set.
pub fn random_payloads(
    count: usize,
    bits: usize,
    distinct: bool,
    seed: u64,
) -> Result<Vec<Vec<u8>>> {
    if distinct && bits < 64 && (count as u128) > (1u128 << bits) {
        return Err(Error::Config(format!(
            "cannot draw {count} distinct {bits}-bit payloads"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p: Vec<u8> = (0..bits).map(|_| rng.random_range(0..2u8)).collect();
        if !distinct || seen.insert(p.clone()) {
            out.push(p);
        }
    }
    Ok(out)
}

/// Split a bit stream into payloads, zero-padding the last one.
pub fn payloads_from_bits(bits: &[u8], payload_bits: usize) -> Vec<Vec<u8>> {
    bits.chunks(payload_bits)
        .map(|c| {
            let mut p = c.to_vec();
            p.resize(payload_bits, 0);
            p
        })
        .collect()
}

/// Chip stream, frames and reception of one simulated run.
#[derive(Debug, Clone)]
pub struct LinkRun {
    pub plan: PacketPlan,
    pub stream: ChipStream,
    pub frames: Vec<FrameSample<f64>>,
    pub reception: Reception,
}

pub fn transmit(
    spec: &LinkSpec,
    camera: &CameraConfig,
    payloads: &[Vec<u8>],
) -> Result<(PacketPlan, ChipStream)> {
    let plan = spec.plan(camera)?;
    let stream = build_packet_stream(payloads, &plan, spec.scheme, spec.version)?;
    Ok((plan, stream))
}

pub fn simulate_link(
    spec: &LinkSpec,
    camera: &CameraConfig,
    geometry: &GeometryConfig,
    payloads: &[Vec<u8>],
    fusion: bool,
) -> Result<LinkRun> {
    let (plan, stream) = transmit(spec, camera, payloads)?;
    let frames = sample_frames::<f64>(&stream, camera, geometry, stream.duration_s())?;
    let reception = rx::receive(&frames, &spec.receiver(camera, fusion))?;
    Ok(LinkRun {
        plan,
        stream,
        frames,
        reception,
    })
}

/// Receiver output scored against distinct transmitted payloads.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkStats {
    pub transmitted: usize,
    pub recovered_distinct: usize,
    /// Recovered payloads matching no transmitted payload.
    pub payload_errors: usize,
    /// Recovered packets appearing out of transmit order.
    pub order_errors: usize,
    pub duplicates: usize,
    /// Packets never recovered between the first and last recovered packet.
    pub missed: usize,
    pub missed_detected: usize,
    pub undetected: usize,
    pub spurious: usize,
    /// Packet indices skipped according to ground truth and according to the receiver.
    pub gap_mismatches: usize,
}

/// Score a reception. Transmitted payloads must be distinct so each recovered
/// payload identifies its packet.
pub fn score(
    transmitted: &[Vec<u8>],
    reception: &Reception,
    version: FrameStructure,
) -> Result<LinkStats> {
    let index: HashMap<&[u8], usize> = transmitted
        .iter()
        .enumerate()
        .map(|(i, p)| (p.as_slice(), i))
        .collect();
    if index.len() != transmitted.len() {
        return Err(Error::Config(
            "scoring needs distinct transmitted payloads".into(),
        ));
    }
    let order = state_cycle(version);
    let mut stats = LinkStats {
        transmitted: transmitted.len(),
        ..Default::default()
    };
    let mut prev: Option<(usize, Observation<'_>)> = None;
    let mut seen = HashSet::new();
    for p in &reception.payloads {
        let Some(&i) = index.get(p.bits.as_slice()) else {
            stats.payload_errors += 1;
            continue;
        };
        seen.insert(i);
        let obs = Observation {
            state: p.ab_state,
            payload: &p.bits,
            first_frame: p.first_frame,
            last_frame: p.last_frame,
        };
        if let Some((j, last)) = &prev {
            let reported = if version == FrameStructure::V2TwoAbPairs {
                missed_between(&order, last, &obs)
            } else {
                0
            };
            if i == *j {
                stats.duplicates += 1;
                stats.spurious += reported;
            } else if i < *j {
                stats.order_errors += 1;
            } else {
                let truth = i - j - 1;
                stats.missed += truth;
                stats.missed_detected += reported.min(truth);
                stats.undetected += truth.saturating_sub(reported);
                stats.spurious += reported.saturating_sub(truth);
                if truth != reported {
                    stats.gap_mismatches += 1;
                }
            }
        }
        prev = Some((i, obs));
    }
    stats.recovered_distinct = seen.len();
    Ok(stats)
}
