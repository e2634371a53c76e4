//! Recovery against distance with and without fragment fusion.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::montecarlo::derive_seed;
use crate::camera::{CameraConfig, DeltaProcess, GeometryConfig};
use crate::error::Result;
use crate::frame::FrameStructure;
use crate::link::{random_payloads, score, simulate_link, LinkSpec};
use crate::rll::RllScheme;
use crate::rx::{assemble, ReceiverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionStudy {
    pub scheme: RllScheme,
    pub optical_clock_hz: f64,
    pub packet_rate: f64,
    pub camera: CameraConfig,
    /// Payload sizes for the maximum-distance curve.
    pub payload_bits_grid: Vec<usize>,
    /// Payload size for the distance table.
    pub reference_payload_bits: usize,
    pub distance_ratios: Vec<f64>,
    pub packets: usize,
    /// Packets per bisection probe.
    pub bisection_packets: usize,
    /// Recovery fraction defining the maximum distance.
    pub threshold: f64,
    pub bisection_steps: usize,
    pub seed: u64,
}

impl Default for FusionStudy {
    fn default() -> Self {
        Self {
            scheme: RllScheme::Manchester,
            optical_clock_hz: 8000.0,
            // about 160 frames per packet
            packet_rate: 1.0 / 6.0,
            camera: CameraConfig {
                rows: 896,
                row_period_s: 31.25e-6,
                row_exposure_s: 31.25e-6,
                mean_fps: 27.5,
                delta_fps: 7.5,
                delta_process: DeltaProcess::Uniform,
                noise_sigma: 0.0,
                seed: 0,
                drops: None,
                start_offset_s: None,
            },
            payload_bits_grid: vec![40, 60, 80, 100],
            reference_payload_bits: 100,
            distance_ratios: vec![0.5, 1.0, 1.5, 1.8, 2.0, 2.5],
            packets: 60,
            bisection_packets: 20,
            threshold: 0.5,
            bisection_steps: 10,
            seed: 1,
        }
    }
}

impl FusionStudy {
    pub fn link(&self, payload_bits: usize) -> LinkSpec {
        LinkSpec {
            scheme: self.scheme,
            version: FrameStructure::V1OneAbPair,
            optical_clock_hz: self.optical_clock_hz,
            packet_rate: self.packet_rate,
            payload_bits,
            repetitions: None,
        }
    }

    pub fn rows_per_subpacket(&self, payload_bits: usize) -> f64 {
        self.link(payload_bits).subpacket_chips() as f64
            * self.camera.rows_per_chip(self.optical_clock_hz)
    }

    /// Distance in units of the reference payload's d0.
    pub fn absolute_distance(&self, payload_bits: usize, ratio: f64) -> f64 {
        ratio * self.rows_per_subpacket(self.reference_payload_bits)
            / self.rows_per_subpacket(payload_bits)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionRow {
    pub distance_ratio: f64,
    pub ds_length: usize,
    pub fusion: bool,
    pub recovered_fraction: f64,
}

/// Recovered fractions `(with fusion, without)` at `ratio × d0`, from one simulation.
pub fn recovery_fractions(
    study: &FusionStudy,
    payload_bits: usize,
    ratio: f64,
    seed: u64,
) -> Result<(f64, f64)> {
    recovery_fractions_n(study, payload_bits, ratio, study.packets, seed)
}

fn recovery_fractions_n(
    study: &FusionStudy,
    payload_bits: usize,
    ratio: f64,
    packets: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let link = study.link(payload_bits);
    let payloads = random_payloads(packets, payload_bits, true, seed)?;
    let camera = CameraConfig {
        seed: derive_seed(seed, 1),
        ..study.camera.clone()
    };
    let geometry = GeometryConfig::at_d0_ratio(study.rows_per_subpacket(payload_bits), ratio);
    let run = simulate_link(&link, &camera, &geometry, &payloads, true)?;
    let on = score(&payloads, &run.reception, link.version)?;
    let off_cfg = ReceiverConfig {
        fusion: false,
        ..link.receiver(&camera, false)
    };
    let off = score(
        &payloads,
        &assemble(run.reception.parts, &off_cfg),
        link.version,
    )?;
    let n = payloads.len() as f64;
    Ok((
        on.recovered_distinct as f64 / n,
        off.recovered_distinct as f64 / n,
    ))
}

/// Largest distance ratio whose recovery stays at or above the threshold, by bisection.
pub fn max_distance_ratio(
    study: &FusionStudy,
    payload_bits: usize,
    fusion: bool,
    seed: u64,
) -> Result<f64> {
    let pick = |r: (f64, f64)| if fusion { r.0 } else { r.1 };
    let (mut lo, mut hi) = (0.5, 2.5);
    for step in 0..study.bisection_steps {
        let mid = 0.5 * (lo + hi);
        if pick(recovery_fractions_n(
            study,
            payload_bits,
            mid,
            study.bisection_packets,
            derive_seed(seed, step as u64),
        )?) >= study.threshold
        {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxDistance {
    pub ds_length: usize,
    pub fusion: bool,
    pub distance_ratio: f64,
    /// Distance in units of the reference payload's d0.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionSummary {
    pub rows: Vec<FusionRow>,
    pub max_distance: Vec<MaxDistance>,
}

pub fn fusion_gain_experiment(study: &FusionStudy) -> Result<FusionSummary> {
    let ds_ref = study.link(study.reference_payload_bits).subpacket_chips();
    let table: Vec<Result<Vec<FusionRow>>> = study
        .distance_ratios
        .par_iter()
        .enumerate()
        .map(|(i, &ratio)| {
            let (on, off) = recovery_fractions(
                study,
                study.reference_payload_bits,
                ratio,
                derive_seed(study.seed, i as u64),
            )?;
            Ok(vec![
                FusionRow {
                    distance_ratio: ratio,
                    ds_length: ds_ref,
                    fusion: true,
                    recovered_fraction: on,
                },
                FusionRow {
                    distance_ratio: ratio,
                    ds_length: ds_ref,
                    fusion: false,
                    recovered_fraction: off,
                },
            ])
        })
        .collect();
    let mut rows = Vec::new();
    for r in table {
        rows.extend(r?);
    }
    let jobs: Vec<(usize, bool)> = study
        .payload_bits_grid
        .iter()
        .flat_map(|&b| [(b, false), (b, true)])
        .collect();
    let max_distance: Vec<Result<MaxDistance>> = jobs
        .par_iter()
        .enumerate()
        .map(|(i, &(bits, fusion))| {
            let ratio =
                max_distance_ratio(study, bits, fusion, derive_seed(study.seed, 100 + i as u64))?;
            Ok(MaxDistance {
                ds_length: study.link(bits).subpacket_chips(),
                fusion,
                distance_ratio: ratio,
                distance: study.absolute_distance(bits, ratio),
            })
        })
        .collect();
    Ok(FusionSummary {
        rows,
        max_distance: max_distance.into_iter().collect::<Result<_>>()?,
    })
}
