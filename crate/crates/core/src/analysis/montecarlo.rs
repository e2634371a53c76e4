//! Monte Carlo oracles for the skip probability and the detection error rate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{der, AnalysisError, DerInputs};
use crate::camera::{CameraConfig, GeometryConfig};
use crate::error::Result;
use crate::frame::FrameStructure;
use crate::link::{random_payloads, score, simulate_link, LinkSpec, LinkStats};

/// Per-trial seed derived from a master seed (splitmix64 step).
pub(crate) fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Empirical counterpart of [`super::skip_probability`]: sampling instant
/// `t ~ U[0, T]`, jitter `X ~ U(−Δ, Δ)`, overrun when `t + X > T`, over six
/// packet lengths.
pub fn monte_carlo_skip(
    t: f64,
    delta: f64,
    trials: usize,
    seed: u64,
) -> std::result::Result<f64, AnalysisError> {
    if trials == 0 {
        return Err(AnalysisError::NoTrials);
    }
    if !(t > 0.0 && delta >= 0.0) {
        return Err(AnalysisError::InvalidInput(format!(
            "need T > 0 and Δ ≥ 0, got T = {t}, Δ = {delta}"
        )));
    }
    if delta == 0.0 {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hits = (0..trials)
        .filter(|_| {
            let ti: f64 = rng.random_range(0.0..=t);
            let x: f64 = rng.random_range(-delta..delta);
            ti + x > t
        })
        .count();
    Ok(hits as f64 / trials as f64 / 6.0)
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerEstimate {
    pub trials: usize,
    pub transmitted: usize,
    pub undetected: usize,
    pub spurious: usize,
    pub payload_errors: usize,
    pub der: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Longest realized gap between delivered frames, in seconds.
    pub max_frame_gap_s: f64,
}

/// Run full encode → channel → decode trials of the two-pair structure and
/// count missed payloads that no gap report accounts for.
pub fn monte_carlo_der(
    spec: &LinkSpec,
    camera: &CameraConfig,
    packets_per_trial: usize,
    trials: usize,
    seed: u64,
) -> Result<DerEstimate> {
    if trials == 0 || packets_per_trial == 0 {
        return Err(AnalysisError::NoTrials.into());
    }
    if spec.version != FrameStructure::V2TwoAbPairs {
        return Err(AnalysisError::InvalidInput(
            "detection needs the two-pair frame structure".into(),
        )
        .into());
    }
    let results: Vec<Result<(LinkStats, f64)>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let s = derive_seed(seed, t);
            let payloads = random_payloads(packets_per_trial, spec.payload_bits, true, s)?;
            let cam = CameraConfig {
                seed: derive_seed(s, 1),
                ..camera.clone()
            };
            let run = simulate_link(
                spec,
                &cam,
                &GeometryConfig::full_coverage(),
                &payloads,
                true,
            )?;
            let gap = run
                .frames
                .windows(2)
                .map(|w| w[1].start_time_s - w[0].start_time_s)
                .fold(0.0, f64::max);
            Ok((score(&payloads, &run.reception, spec.version)?, gap))
        })
        .collect();
    let mut est = DerEstimate {
        trials,
        transmitted: 0,
        undetected: 0,
        spurious: 0,
        payload_errors: 0,
        der: 0.0,
        ci_low: 0.0,
        ci_high: 0.0,
        max_frame_gap_s: 0.0,
    };
    for r in results {
        let (s, gap) = r?;
        est.transmitted += s.transmitted;
        est.undetected += s.undetected;
        est.spurious += s.spurious;
        est.payload_errors += s.payload_errors;
        est.max_frame_gap_s = est.max_frame_gap_s.max(gap);
    }
    est.der = est.undetected as f64 / est.transmitted as f64;
    (est.ci_low, est.ci_high) = wilson_interval(est.undetected, est.transmitted, 1.96);
    Ok(est)
}

/// Webcam-timed camera whose frame rate spans `[floor, floor + 10)` fps.
pub fn der_camera(floor_fps: f64, seed: u64) -> CameraConfig {
    CameraConfig {
        mean_fps: floor_fps + 5.0,
        delta_fps: 5.0,
        ..CameraConfig::webcam(seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerRow {
    pub fps_floor: f64,
    pub packet_rate: f64,
    pub der_formula: f64,
    pub der_empirical: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// DER formula beside its Monte Carlo estimate for each camera floor.
pub fn der_study(
    spec: &LinkSpec,
    floors: &[f64],
    packets_per_trial: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<DerRow>> {
    floors
        .iter()
        .enumerate()
        .map(|(i, &floor)| {
            let camera = der_camera(floor, seed);
            let est = monte_carlo_der(
                spec,
                &camera,
                packets_per_trial,
                trials,
                derive_seed(seed, 1000 + i as u64),
            )?;
            let formula = der(&DerInputs {
                packet_rate: spec.packet_rate,
                mean_frame_rate: camera.mean_fps,
                min_frame_rate: floor,
            })?;
            Ok(DerRow {
                fps_floor: floor,
                packet_rate: spec.packet_rate,
                der_formula: formula,
                der_empirical: est.der,
                ci_low: est.ci_low,
                ci_high: est.ci_high,
            })
        })
        .collect()
}
