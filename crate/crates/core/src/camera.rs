//! Rolling-shutter camera model.
//!
//! Frames start at cumulative inter-frame intervals drawn from the varying
//! frame rate `R(t) = E[R] + δ(t)·ΔR`. Row `r` of a frame starting at `t`
//! integrates the chip waveform over `[t + r·row_period, +row_exposure]`.
//! The LED covers a contiguous block of rows centred in the frame whose
//! height shrinks as `1/distance`.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chips::ChipStream;
use crate::scalar::{sample, Sample, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CameraError {
    #[error("invalid camera configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("requested {requested_s} s but the waveform lasts {available_s} s")]
    DurationExceedsWaveform { requested_s: f64, available_s: f64 },
    #[error("frames csv line {line}: {message}")]
    Csv { line: u64, message: String },
}

/// Distribution of the normalized frame-rate deviation δ on (-1, 1).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeltaProcess {
    #[default]
    Uniform,
    /// Zero-mean Gaussian with standard deviation `sigma`, rejected outside (-1, 1).
    TruncatedGaussian { sigma: f64 },
}

impl DeltaProcess {
    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            DeltaProcess::Uniform => loop {
                let d: f64 = rng.random_range(-1.0..1.0);
                if d > -1.0 {
                    return d;
                }
            },
            DeltaProcess::TruncatedGaussian { sigma } => {
                let normal = Normal::new(0.0, sigma).expect("sigma validated");
                loop {
                    let d = normal.sample(rng);
                    if d > -1.0 && d < 1.0 {
                        return d;
                    }
                }
            }
        }
    }
}

/// Random frame loss on delivery; at most `max_consecutive` frames in a row are lost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameDrops {
    pub prob: f64,
    pub max_consecutive: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraConfig {
    pub rows: usize,
    pub row_period_s: f64,
    pub row_exposure_s: f64,
    pub mean_fps: f64,
    pub delta_fps: f64,
    #[serde(default)]
    pub delta_process: DeltaProcess,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drops: Option<FrameDrops>,
    /// Start time of the first frame; drawn from `[0, 1/mean_fps)` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_offset_s: Option<f64>,
}

// independent random streams derived from one seed
const STREAM_INTERVALS: u64 = 1;
const STREAM_OFFSET: u64 = 2;
const STREAM_DROPS: u64 = 3;
const STREAM_NOISE: u64 = 4;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

impl CameraConfig {
    /// USB-webcam-like camera: 20–35 fps, 28 ms rolling capture over 448 rows.
    pub fn webcam(seed: u64) -> Self {
        Self {
            rows: 448,
            row_period_s: 62.5e-6,
            row_exposure_s: 62.5e-6,
            mean_fps: 27.5,
            delta_fps: 7.5,
            delta_process: DeltaProcess::Uniform,
            noise_sigma: 0.0,
            seed,
            drops: None,
            start_offset_s: None,
        }
    }

    /// Rolling capture time: first row start to last row start plus one row period.
    pub fn t_cap(&self) -> f64 {
        self.rows as f64 * self.row_period_s
    }

    pub fn min_fps(&self) -> f64 {
        self.mean_fps - self.delta_fps
    }

    pub fn max_fps(&self) -> f64 {
        self.mean_fps + self.delta_fps
    }

    /// Longest possible single inter-frame interval (before drops).
    pub fn max_interval_s(&self) -> f64 {
        1.0 / self.min_fps()
    }

    /// Longest possible gap between delivered frames, drops included.
    pub fn max_delivered_gap_s(&self) -> f64 {
        let lost = self
            .drops
            .map_or(0, |d| if d.prob > 0.0 { d.max_consecutive } else { 0 });
        (lost + 1) as f64 * self.max_interval_s()
    }

    /// Rows spanned by one chip.
    pub fn rows_per_chip(&self, optical_clock_hz: f64) -> f64 {
        1.0 / (optical_clock_hz * self.row_period_s)
    }

    pub fn validate(&self) -> Result<(), CameraError> {
        let bad = |m: String| Err(CameraError::InvalidConfig(m));
        if self.rows == 0 {
            return bad("rows must be positive".into());
        }
        if !(self.row_period_s > 0.0 && self.row_period_s.is_finite()) {
            return bad(format!(
                "row_period_s must be positive, got {}",
                self.row_period_s
            ));
        }
        if !(self.row_exposure_s > 0.0 && self.row_exposure_s.is_finite()) {
            return bad(format!(
                "row_exposure_s must be positive, got {}",
                self.row_exposure_s
            ));
        }
        if !(self.delta_fps >= 0.0 && self.mean_fps.is_finite()) {
            return bad(format!(
                "delta_fps must be non-negative, got {}",
                self.delta_fps
            ));
        }
        if self.min_fps() <= 0.0 {
            return bad(format!(
                "mean_fps - delta_fps must be positive (mean {}, delta {})",
                self.mean_fps, self.delta_fps
            ));
        }
        if 1.0 / self.max_fps() < self.t_cap() {
            return bad(format!(
                "shortest inter-frame interval {:.6} s is below the rolling capture time {:.6} s",
                1.0 / self.max_fps(),
                self.t_cap()
            ));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!(
                "noise_sigma must be non-negative, got {}",
                self.noise_sigma
            ));
        }
        if let DeltaProcess::TruncatedGaussian { sigma } = self.delta_process {
            if !(sigma > 0.0 && sigma.is_finite()) {
                return bad(format!(
                    "truncated gaussian sigma must be positive, got {sigma}"
                ));
            }
        }
        if let Some(d) = self.drops {
            if !(0.0..1.0).contains(&d.prob) {
                return bad(format!(
                    "drop probability must be in [0, 1), got {}",
                    d.prob
                ));
            }
        }
        if let Some(o) = self.start_offset_s {
            if !(o >= 0.0 && o.is_finite()) {
                return bad(format!("start_offset_s must be non-negative, got {o}"));
            }
        }
        Ok(())
    }
}

/// LED footprint model: the LED image spans `F·led_size / (distance·row_pitch)` rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryConfig {
    pub focal_length: f64,
    pub led_size: f64,
    /// Sensor height of one row, in the unit of `focal_length`.
    pub row_pitch: f64,
    pub distance: f64,
}

impl GeometryConfig {
    /// An LED that fills every row at any reasonable frame height.
    pub fn full_coverage() -> Self {
        Self {
            focal_length: 1.0,
            led_size: 1.0e9,
            row_pitch: 1.0,
            distance: 1.0,
        }
    }

    /// Geometry at `ratio × d0`, where d0 is the distance at which the LED
    /// spans exactly `rows_per_subpacket` rows.
    pub fn at_d0_ratio(rows_per_subpacket: f64, ratio: f64) -> Self {
        Self {
            focal_length: 1.0,
            led_size: rows_per_subpacket,
            row_pitch: 1.0,
            distance: ratio,
        }
    }

    pub fn validate(&self) -> Result<(), CameraError> {
        for (name, v) in [
            ("focal_length", self.focal_length),
            ("led_size", self.led_size),
            ("row_pitch", self.row_pitch),
            ("distance", self.distance),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CameraError::InvalidGeometry(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Unclipped height of the LED image in rows.
    pub fn led_rows(&self) -> f64 {
        self.focal_length * self.led_size / (self.distance * self.row_pitch)
    }

    /// Distance at which the LED spans exactly `rows_per_subpacket` rows.
    pub fn d0_effective(&self, rows_per_subpacket: f64) -> f64 {
        self.focal_length * self.led_size / (self.row_pitch * rows_per_subpacket)
    }
}

/// Rows lit by the LED: `round(rows_per_subpacket · d0/d)`, capped at `total_rows`.
pub fn covered_rows(
    geometry: &GeometryConfig,
    rows_per_subpacket: f64,
    total_rows: usize,
) -> usize {
    let d0 = geometry.d0_effective(rows_per_subpacket);
    let rows = (rows_per_subpacket * d0 / geometry.distance).round();
    if rows.is_finite() {
        (rows.max(0.0) as usize).min(total_rows)
    } else {
        total_rows
    }
}

/// One captured image reduced to per-row luminance.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSample<T> {
    pub index: usize,
    pub start_time_s: f64,
    pub row_luma: Vec<T>,
    pub covered_rows: usize,
}

impl<T: Sample> FrameSample<T> {
    /// First lit row; the footprint is centred.
    pub fn covered_start(&self) -> usize {
        (self.row_luma.len() - self.covered_rows.min(self.row_luma.len())) / 2
    }

    pub fn covered(&self) -> &[T] {
        let s = self.covered_start();
        &self.row_luma[s..s + self.covered_rows]
    }
}

/// Inter-frame intervals `1/(E[R] + δ_k·ΔR)`.
pub fn frame_intervals(config: &CameraConfig, count: usize) -> Result<Vec<f64>, CameraError> {
    config.validate()?;
    let mut rng = stream_rng(config.seed, STREAM_INTERVALS);
    Ok(interval_iter(config, &mut rng).take(count).collect())
}

fn interval_iter<'a>(
    config: &'a CameraConfig,
    rng: &'a mut ChaCha8Rng,
) -> impl Iterator<Item = f64> + 'a {
    std::iter::repeat_with(move || {
        let delta = if config.delta_fps == 0.0 {
            0.0
        } else {
            config.delta_process.draw(rng)
        };
        1.0 / (config.mean_fps + delta * config.delta_fps)
    })
}

/// Cumulative on-time of a chip waveform, in chip units.
struct Integrator<'a> {
    chips: &'a [u8],
    prefix: Vec<u64>,
    clock_hz: f64,
}

impl<'a> Integrator<'a> {
    fn new(stream: &'a ChipStream) -> Self {
        let mut prefix = Vec::with_capacity(stream.len() + 1);
        prefix.push(0u64);
        let mut acc = 0u64;
        for &c in stream.chips() {
            acc += c as u64;
            prefix.push(acc);
        }
        Self {
            chips: stream.chips(),
            prefix,
            clock_hz: stream.clock_hz(),
        }
    }

    /// Mean waveform level over `[a, b)`. Whole chips are summed from the
    /// integer prefix so only the two partial chips carry rounding error.
    fn mean(&self, a: f64, b: f64) -> f64 {
        let n = self.chips.len();
        let (xa, xb) = (a * self.clock_hz, b * self.clock_hz);
        let split = |x: f64| -> (usize, f64) {
            if x <= 0.0 {
                (0, 0.0)
            } else if x >= n as f64 {
                (n, 0.0)
            } else {
                let j = x.floor() as usize;
                (j, (x - j as f64) * self.chips[j] as f64)
            }
        };
        let (ja, fa) = split(xa);
        let (jb, fb) = split(xb);
        let whole = self.prefix[jb] as f64 - self.prefix[ja] as f64;
        (whole + fb - fa) / (xb - xa)
    }
}

/// Capture frames of `waveform` during `[0, duration_s]`. Only frames whose
/// full rolling exposure ends within the duration are returned.
pub fn sample_frames<T: Sample>(
    waveform: &ChipStream,
    camera: &CameraConfig,
    geometry: &GeometryConfig,
    duration_s: f64,
) -> Result<Vec<FrameSample<T>>, CameraError> {
    camera.validate()?;
    geometry.validate()?;
    if duration_s > waveform.duration_s() * (1.0 + 1e-12) {
        return Err(CameraError::DurationExceedsWaveform {
            requested_s: duration_s,
            available_s: waveform.duration_s(),
        });
    }

    let rows = camera.rows;
    let rows_per_chip = camera.rows_per_chip(waveform.clock_hz());
    // covered rows do not depend on the sub-packet length; any reference works
    let lit = covered_rows(geometry, rows_per_chip, rows);
    let lit_start = (rows - lit) / 2;
    let frame_span = (rows - 1) as f64 * camera.row_period_s + camera.row_exposure_s;

    let integrator = Integrator::new(waveform);
    let mut interval_rng = stream_rng(camera.seed, STREAM_INTERVALS);
    let mut intervals = interval_iter(camera, &mut interval_rng);
    let mut drop_rng = stream_rng(camera.seed, STREAM_DROPS);
    let mut noise_rng = stream_rng(camera.seed, STREAM_NOISE);
    let noise = (camera.noise_sigma > 0.0)
        .then(|| Normal::new(0.0, camera.noise_sigma).expect("sigma validated"));

    let mut t = match camera.start_offset_s {
        Some(o) => o,
        None => stream_rng(camera.seed, STREAM_OFFSET).random_range(0.0..1.0 / camera.mean_fps),
    };
    let mut frames = Vec::new();
    let mut consecutive_drops = 0usize;
    while t + frame_span <= duration_s {
        let dropped = match camera.drops {
            Some(d) if d.prob > 0.0 && consecutive_drops < d.max_consecutive => {
                drop_rng.random_bool(d.prob)
            }
            _ => false,
        };
        if dropped {
            consecutive_drops += 1;
        } else {
            consecutive_drops = 0;
            let mut luma = Vec::with_capacity(rows);
            for r in 0..rows {
                let mut v = if (lit_start..lit_start + lit).contains(&r) {
                    let a = t + r as f64 * camera.row_period_s;
                    integrator.mean(a, a + camera.row_exposure_s)
                } else {
                    0.0
                };
                if let Some(n) = &noise {
                    v = (v + n.sample(&mut noise_rng)).clamp(0.0, 1.0);
                }
                luma.push(sample::<T>(v));
            }
            frames.push(FrameSample {
                index: frames.len(),
                start_time_s: t,
                row_luma: luma,
                covered_rows: lit,
            });
        }
        t += intervals.next().expect("infinite iterator");
    }
    Ok(frames)
}

/// Write frames as `frame_index,start_time_s,row,luma`.
pub fn write_frames_csv<T: Sample, W: Write>(
    frames: &[FrameSample<T>],
    w: W,
) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["frame_index", "start_time_s", "row", "luma"])?;
    for f in frames {
        let start = format!("{}", f.start_time_s);
        for (row, v) in f.row_luma.iter().enumerate() {
            out.write_record([
                f.index.to_string(),
                start.clone(),
                row.to_string(),
                format!("{}", Scalar::to_f64(*v)),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Read frames written by [`write_frames_csv`]. The CSV carries no coverage
/// information, so the number of lit rows is supplied by the caller.
pub fn read_frames_csv<R: Read>(
    r: R,
    covered: impl Fn(usize) -> usize,
) -> Result<Vec<FrameSample<f64>>, CameraError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = reader
        .headers()
        .map_err(|e| CameraError::Csv {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let expected = ["frame_index", "start_time_s", "row", "luma"];
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(CameraError::Csv {
            line: 1,
            message: format!("expected header {}", expected.join(",")),
        });
    }
    let mut frames: Vec<FrameSample<f64>> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| CameraError::Csv {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize, name: &str| -> Result<&str, CameraError> {
            rec.get(i).ok_or_else(|| CameraError::Csv {
                line,
                message: format!("missing {name}"),
            })
        };
        let parse_err = |name: &str, v: &str| CameraError::Csv {
            line,
            message: format!("bad {name} {v:?}"),
        };
        let fi: usize = field(0, "frame_index")?
            .parse()
            .map_err(|_| parse_err("frame_index", &rec[0]))?;
        let start: f64 = field(1, "start_time_s")?
            .parse()
            .map_err(|_| parse_err("start_time_s", &rec[1]))?;
        let row: usize = field(2, "row")?
            .parse()
            .map_err(|_| parse_err("row", &rec[2]))?;
        let luma: f64 = field(3, "luma")?
            .parse()
            .map_err(|_| parse_err("luma", &rec[3]))?;
        if frames.last().map(|f| f.index) != Some(fi) {
            if frames.iter().any(|f| f.index == fi) {
                return Err(CameraError::Csv {
                    line,
                    message: format!("frame {fi} rows are not contiguous"),
                });
            }
            frames.push(FrameSample {
                index: fi,
                start_time_s: start,
                row_luma: Vec::new(),
                covered_rows: 0,
            });
        }
        let frame = frames.last_mut().expect("pushed above");
        if row != frame.row_luma.len() {
            return Err(CameraError::Csv {
                line,
                message: format!(
                    "frame {fi}: expected row {}, found {row}",
                    frame.row_luma.len()
                ),
            });
        }
        frame.row_luma.push(luma);
    }
    for f in &mut frames {
        f.covered_rows = covered(f.row_luma.len()).min(f.row_luma.len());
    }
    Ok(frames)
}
