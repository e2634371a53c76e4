//! Bit-rate limit against optical clock frequency.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{bit_rate_limit, symbols_per_image, AnalysisError, ThroughputInputs};
use crate::frame::FrameStructure;
use crate::rll::RllScheme;
use crate::scalar::{Exact, Scalar};

/// 100 Hz to 8 kHz in 100 Hz steps.
pub const DEFAULT_FREQUENCIES: std::ops::RangeInclusive<u64> = 1..=80;

/// SF chips plus the Ab chips counted once per image.
pub fn overhead_chips(scheme: RllScheme, version: FrameStructure) -> u64 {
    (scheme.preamble().len() + version.ab_overhead_states()) as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepStatus {
    Ok,
    NonPositiveBudget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub scheme: RllScheme,
    pub f_hz: u64,
    #[serde(rename = "L")]
    pub l: u64,
    #[serde(rename = "OH")]
    pub oh: u64,
    pub eta: f64,
    pub bitrate_bps: f64,
    pub status: SweepStatus,
}

impl SweepRow {
    pub fn exact(
        scheme: RllScheme,
        f_hz: u64,
        version: FrameStructure,
        fps_min: Exact,
        n_frame: Exact,
    ) -> (Self, Option<Exact>) {
        let l = symbols_per_image(f_hz);
        let oh = overhead_chips(scheme, version);
        let inputs = ThroughputInputs {
            subpackets_per_image: n_frame,
            ..ThroughputInputs::new(
                scheme,
                Exact::from_integer(l as i64),
                Exact::from_integer(oh as i64),
                fps_min,
                fps_min,
            )
        };
        let limit = bit_rate_limit(&inputs);
        let row = SweepRow {
            scheme,
            f_hz,
            l,
            oh,
            eta: scheme.efficiency::<f64>(),
            bitrate_bps: limit.as_ref().map_or(0.0, |v| v.to_f64()),
            status: match limit {
                Ok(_) => SweepStatus::Ok,
                Err(AnalysisError::NonPositiveBudget(_)) => SweepStatus::NonPositiveBudget,
                Err(_) => SweepStatus::NonPositiveBudget,
            },
        };
        (row, limit.ok())
    }
}

/// One row per (scheme, frequency), evaluated exactly.
pub fn sweep_frequency(
    schemes: &[RllScheme],
    f_list: &[u64],
    version: FrameStructure,
    fps_min: Exact,
    n_frame: Exact,
) -> Vec<SweepRow> {
    schemes
        .iter()
        .flat_map(|&s| {
            f_list
                .iter()
                .map(move |&f| SweepRow::exact(s, f, version, fps_min, n_frame).0)
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], w: W) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

/// An achieved-parameters configuration with the measured figures it is compared to.
#[derive(Debug, Clone, PartialEq)]
pub struct Table8Row {
    pub name: String,
    pub scheme: RllScheme,
    pub f_hz: u64,
    pub computed_limit_bps: Exact,
    pub measured_limit_bps: u64,
    pub measured_throughput_bps: u64,
}

/// Computed limits at 20 fps for the three USB-webcam configurations, next to
/// the measured figures.
pub fn table8_comparison() -> Vec<Table8Row> {
    [
        ("manchester_1k", RllScheme::Manchester, 1000, 600, 300),
        ("manchester_2k", RllScheme::Manchester, 2000, 1200, 500),
        ("4b6b_2k", RllScheme::FourB6B, 2000, 1900, 600),
    ]
    .into_iter()
    .map(|(name, scheme, f, lim, thr)| {
        let (_, limit) = SweepRow::exact(
            scheme,
            f,
            FrameStructure::V1OneAbPair,
            Exact::from_integer(20),
            Exact::from_integer(1),
        );
        Table8Row {
            name: name.to_string(),
            scheme,
            f_hz: f,
            computed_limit_bps: limit.expect("feasible configuration"),
            measured_limit_bps: lim,
            measured_throughput_bps: thr,
        }
    })
    .collect()
}

/// Plain-text summary: crossover points and the measured-vs-computed table.
pub fn sweep_report(rows: &[SweepRow]) -> String {
    let mut s = String::new();
    writeln!(s, "bit-rate limit sweep: {} rows", rows.len()).ok();
    let mut fs: Vec<u64> = rows.iter().map(|r| r.f_hz).collect();
    fs.sort_unstable();
    fs.dedup();
    let best_at = |f: u64| {
        rows.iter()
            .filter(|r| r.f_hz == f && r.status == SweepStatus::Ok)
            .max_by(|a, b| a.bitrate_bps.total_cmp(&b.bitrate_bps))
            .map(|r| r.scheme)
    };
    let mut last = None;
    for &f in &fs {
        let b = best_at(f);
        if b != last {
            match b {
                Some(scheme) => writeln!(s, "  from {f} Hz the highest limit is {scheme}").ok(),
                None => writeln!(s, "  at {f} Hz no scheme has a positive budget").ok(),
            };
            last = b;
        }
    }
    writeln!(s).ok();
    writeln!(
        s,
        "USB webcam configurations (20 fps floor, one sub-packet per image):"
    )
    .ok();
    writeln!(
        s,
        "  {:<14} {:>10} {:>16} {:>16} {:>18}",
        "config", "clock", "computed limit", "measured limit", "measured achieved"
    )
    .ok();
    for r in table8_comparison() {
        writeln!(
            s,
            "  {:<14} {:>7} Hz {:>12.1} bps {:>12} bps {:>14} bps",
            r.name,
            r.f_hz,
            r.computed_limit_bps.to_f64(),
            r.measured_limit_bps,
            r.measured_throughput_bps
        )
        .ok();
    }
    writeln!(
        s,
        "  the measured figures come from hardware and are not reproduced by the limit formula"
    )
    .ok();
    s
}
