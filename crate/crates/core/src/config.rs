//! Experiment configuration and named presets.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::camera::{CameraConfig, DeltaProcess, GeometryConfig};
use crate::error::{Error, Result};
use crate::frame::{FrameStructure, PacketPlan};
use crate::link::LinkSpec;
use crate::rll::RllScheme;
use crate::rx::ReceiverConfig;

fn default_true() -> bool {
    true
}

fn default_one() -> usize {
    1
}

fn default_geometry() -> GeometryConfig {
    GeometryConfig::full_coverage()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chips: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payloads: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub link: LinkSpec,
    pub camera: CameraConfig,
    #[serde(default = "default_geometry")]
    pub geometry: GeometryConfig,
    #[serde(default = "default_true")]
    pub fusion: bool,
    /// Packets to transmit when payloads are generated.
    pub packets: usize,
    pub seed: u64,
    #[serde(default = "default_one")]
    pub trials: usize,
    #[serde(default)]
    pub output: OutputPaths,
}

pub const PRESETS: [&str; 5] = [
    "table5_v1",
    "table5_v2",
    "table8_manchester_1k",
    "table8_manchester_2k",
    "table8_4b6b_2k",
];

impl ExperimentConfig {
    pub fn preset(name: &str) -> Option<Self> {
        let link = |scheme, version, clock, rate, bits| LinkSpec {
            scheme,
            version,
            optical_clock_hz: clock,
            packet_rate: rate,
            payload_bits: bits,
            repetitions: None,
        };
        let base = |link: LinkSpec, camera: CameraConfig| ExperimentConfig {
            link,
            camera,
            geometry: GeometryConfig::full_coverage(),
            fusion: true,
            packets: 500,
            seed: 1,
            trials: 1,
            output: OutputPaths::default(),
        };
        use FrameStructure::*;
        use RllScheme::*;
        Some(match name {
            "table8_manchester_1k" => base(
                link(Manchester, V1OneAbPair, 1000.0, 10.0, 6),
                CameraConfig::webcam(1),
            ),
            "table8_manchester_2k" => base(
                link(Manchester, V1OneAbPair, 2000.0, 10.0, 20),
                CameraConfig::webcam(1),
            ),
            "table8_4b6b_2k" => base(
                link(FourB6B, V1OneAbPair, 2000.0, 10.0, 24),
                CameraConfig::webcam(1),
            ),
            "table5_v1" => base(
                link(Manchester, V1OneAbPair, 4000.0, 20.0, 20),
                CameraConfig::webcam(1),
            ),
            "table5_v2" => base(
                link(Manchester, V2TwoAbPairs, 4000.0, 20.0, 18),
                Self::undersampling_camera(1),
            ),
            _ => return None,
        })
    }

    /// 5–20 fps camera with the webcam's sensor timing.
    pub fn undersampling_camera(seed: u64) -> CameraConfig {
        CameraConfig {
            mean_fps: 12.5,
            delta_fps: 7.5,
            delta_process: DeltaProcess::Uniform,
            ..CameraConfig::webcam(seed)
        }
    }

    /// Camera with the experiment seed applied.
    pub fn camera(&self) -> CameraConfig {
        CameraConfig {
            seed: self.seed,
            ..self.camera.clone()
        }
    }

    pub fn plan(&self) -> Result<PacketPlan> {
        Ok(self.link.plan(&self.camera())?)
    }

    pub fn receiver(&self) -> ReceiverConfig {
        self.link.receiver(&self.camera(), self.fusion)
    }

    /// Check every parameter; errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        let camera = self.camera();
        camera.validate()?;
        self.geometry.validate()?;
        self.link.validate()?;
        self.plan()?;
        self.receiver().validate()?;
        if self.link.version == FrameStructure::V1OneAbPair
            && camera.min_fps() < self.link.packet_rate
        {
            return Err(Error::Config(format!(
                "frame structure v1 needs a camera frame rate no less than the packet rate: camera.mean_fps - camera.delta_fps = {} fps < packet_rate = {}/s (use v2 for undersampling)",
                camera.min_fps(),
                self.link.packet_rate
            )));
        }
        if camera.rows_per_chip(self.link.optical_clock_hz) < 1.0 {
            return Err(Error::Config(format!(
                "optical_clock_hz {} is faster than the row rate {} rows/s",
                self.link.optical_clock_hz,
                1.0 / camera.row_period_s
            )));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for name in PRESETS {
            let cfg = ExperimentConfig::preset(name).unwrap();
            cfg.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
            let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
            assert_eq!(back, cfg);
        }
        assert!(ExperimentConfig::preset("nope").is_none());
    }

    #[test]
    fn preset_plans() {
        let p = ExperimentConfig::preset("table8_manchester_1k")
            .unwrap()
            .plan()
            .unwrap();
        assert_eq!(
            (p.subpacket_chips, p.repetitions, p.filler_chips()),
            (22, 4, 12)
        );
        let p = ExperimentConfig::preset("table5_v2")
            .unwrap()
            .plan()
            .unwrap();
        assert_eq!(
            (p.subpacket_chips, p.repetitions, p.filler_chips()),
            (50, 4, 0)
        );
        let p = ExperimentConfig::preset("table8_4b6b_2k")
            .unwrap()
            .plan()
            .unwrap();
        assert_eq!((p.subpacket_chips, p.repetitions), (50, 4));
    }

    #[test]
    fn v1_undersampling_rejected() {
        let mut cfg = ExperimentConfig::preset("table5_v1").unwrap();
        cfg.camera = ExperimentConfig::undersampling_camera(1);
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("packet_rate"), "{err}");
    }

    #[test]
    fn field_errors_are_named() {
        let mut cfg = ExperimentConfig::preset("table5_v1").unwrap();
        cfg.link.payload_bits = 0;
        assert!(cfg
            .validate()
            .unwrap_err()
            .to_string()
            .contains("payload_bits"));
        let mut cfg = ExperimentConfig::preset("table5_v1").unwrap();
        cfg.camera.row_period_s = -1.0;
        assert!(cfg
            .validate()
            .unwrap_err()
            .to_string()
            .contains("row_period_s"));
    }
}
