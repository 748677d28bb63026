//! The single JSON file that drives `simulate`, `map` and `eval`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use seasky_core::associate::{DescriptorConfig, StereoConfig};
use seasky_core::detect::{CfarConfig, DbscanConfig};
use seasky_core::evaluate::{ComparisonConfig, WallFrame};
use seasky_core::geometry::{RigidTransform, SonarExtrinsics, TransformConfig};
use seasky_core::leading_edge::LeadingEdgeConfig;
use seasky_core::mapping::KeyframeConfig;
use seasky_core::preprocess::PreprocessConfig;
use seasky_core::simulate::{LidarPattern, NoiseModel, Scene, SonarSimConfig, TrajectorySpec};
use seasky_core::SonarIntrinsics;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SonarPair {
    pub horizontal: SonarIntrinsics,
    pub vertical: SonarIntrinsics,
}

impl Default for SonarPair {
    fn default() -> Self {
        SonarPair {
            horizontal: SonarIntrinsics::horizontal_default(),
            vertical: SonarIntrinsics::vertical_default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessPair {
    pub horizontal: PreprocessConfig,
    pub vertical: PreprocessConfig,
    /// Skip preprocessing and feed raw frames to detection.
    pub bypass: bool,
}

impl Default for PreprocessPair {
    fn default() -> Self {
        PreprocessPair {
            horizontal: PreprocessConfig::horizontal(),
            vertical: PreprocessConfig::vertical(),
            bypass: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectConfig {
    pub horizontal: CfarConfig,
    pub vertical: CfarConfig,
    pub dbscan: DbscanConfig,
    pub descriptor: DescriptorConfig,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig {
            horizontal: CfarConfig::horizontal(),
            vertical: CfarConfig::vertical(),
            dbscan: DbscanConfig::default(),
            descriptor: DescriptorConfig::default(),
        }
    }
}

/// Sensor placements on the vehicle body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Mounts {
    /// Horizontal sonar to body. The vertical sonar follows through the extrinsics.
    pub horizontal_sonar: TransformConfig,
    pub lidar: TransformConfig,
}

impl Default for Mounts {
    fn default() -> Self {
        Mounts {
            horizontal_sonar: TransformConfig::identity(),
            lidar: TransformConfig::identity(),
        }
    }
}

/// Which trajectory poses also carry a sensor frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FramePolicy {
    pub horizontal_every: usize,
    pub vertical_every: usize,
    pub lidar_every: usize,
}

impl Default for FramePolicy {
    fn default() -> Self {
        // 30 Hz trajectory: 15 Hz horizontal, 10 Hz vertical, 1 Hz lidar
        FramePolicy {
            horizontal_every: 2,
            vertical_every: 3,
            lidar_every: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub scene: Scene,
    pub trajectory: Option<TrajectorySpec>,
    pub noise: NoiseModel,
    pub sonar: SonarSimConfig,
    pub lidar: LidarPattern,
    pub frames: FramePolicy,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            scene: Scene::default(),
            trajectory: None,
            noise: NoiseModel::noiseless(),
            sonar: SonarSimConfig::default(),
            lidar: LidarPattern::default(),
            frames: FramePolicy::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    /// Frame in which widths and along-wall densities are measured.
    pub wall_frame: Option<WallFrame>,
    /// Keep only points whose along-wall coordinate lies in this interval.
    pub segment: Option<[f64; 2]>,
    /// Keep only points whose height (wall frame z) lies in this interval.
    pub height: Option<[f64; 2]>,
    pub comparison: ComparisonConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoConfig {
    pub dataset_dir: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub sonar: SonarPair,
    pub extrinsics: TransformConfig,
    pub mounts: Mounts,
    pub preprocess: PreprocessPair,
    pub leading_edge: LeadingEdgeConfig,
    pub detect: DetectConfig,
    pub keyframes: KeyframeConfig,
    /// Maximum timestamp gap for pairing a horizontal with a vertical frame.
    pub pairing_window_s: f64,
    pub io: IoConfig,
    pub simulate: SimulateConfig,
    pub evaluation: EvaluationConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            sonar: SonarPair::default(),
            extrinsics: TransformConfig {
                rotation_axis: [1.0, 0.0, 0.0],
                rotation_deg: -90.0,
                translation_m: [0.0; 3],
            },
            mounts: Mounts::default(),
            preprocess: PreprocessPair::default(),
            leading_edge: LeadingEdgeConfig::default(),
            detect: DetectConfig::default(),
            keyframes: KeyframeConfig::default(),
            pairing_window_s: 0.075,
            io: IoConfig::default(),
            simulate: SimulateConfig::default(),
            evaluation: EvaluationConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Parses and validates a config file; relative I/O paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::data(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: PipelineConfig =
            serde_json::from_str(&text).map_err(|e| CliError::data(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.io.dataset_dir, &mut cfg.io.output_dir].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let wrap = |what: &str, r: seasky_core::Result<()>| r.map_err(|e| CliError::data(format!("{what}: {e}")));
        wrap("preprocess.horizontal", self.preprocess.horizontal.validate())?;
        wrap("preprocess.vertical", self.preprocess.vertical.validate())?;
        wrap("detect.horizontal", self.detect.horizontal.validate())?;
        wrap("detect.vertical", self.detect.vertical.validate())?;
        wrap("detect.dbscan", self.detect.dbscan.validate())?;
        wrap("detect.descriptor", self.detect.descriptor.validate())?;
        wrap("simulate.scene", self.simulate.scene.validate())?;
        wrap("simulate.noise", self.simulate.noise.validate())?;
        wrap("simulate.sonar", self.simulate.sonar.validate())?;
        wrap("extrinsics", self.extrinsics.to_transform().map(|_| ()))?;
        wrap("mounts.horizontal_sonar", self.mounts.horizontal_sonar.to_transform().map(|_| ()))?;
        wrap("mounts.lidar", self.mounts.lidar.to_transform().map(|_| ()))?;
        for (side, cfar, intr) in [
            ("horizontal", &self.detect.horizontal, &self.sonar.horizontal),
            ("vertical", &self.detect.vertical, &self.sonar.vertical),
        ] {
            if intr.num_range_bins() < cfar.min_rows() {
                return Err(CliError::data(format!(
                    "detect.{side}: CFAR needs at least {} range bins, sonar has {}",
                    cfar.min_rows(),
                    intr.num_range_bins()
                )));
            }
        }
        if !(self.pairing_window_s >= 0.0) {
            return Err(CliError::data("pairing_window_s must be non-negative"));
        }
        let f = self.simulate.frames;
        if f.horizontal_every == 0 || f.vertical_every == 0 || f.lidar_every == 0 {
            return Err(CliError::data("simulate.frames intervals must be positive"));
        }
        if !(self.keyframes.translation_m > 0.0 && self.keyframes.rotation_rad > 0.0) {
            return Err(CliError::data("keyframe thresholds must be positive"));
        }
        if let (Some(a), Some(b)) = (&self.io.dataset_dir, &self.io.output_dir) {
            if a == b {
                return Err(CliError::data("io.dataset_dir and io.output_dir must differ"));
            }
        }
        Ok(())
    }

    pub fn extrinsics(&self) -> SonarExtrinsics {
        SonarExtrinsics::from_config(&self.extrinsics).expect("validated")
    }

    pub fn horizontal_mount(&self) -> RigidTransform {
        self.mounts.horizontal_sonar.to_transform().expect("validated")
    }

    /// Vertical sonar to body.
    pub fn vertical_mount(&self) -> RigidTransform {
        self.horizontal_mount().compose(&self.extrinsics().vertical_to_horizontal)
    }

    pub fn lidar_mount(&self) -> RigidTransform {
        self.mounts.lidar.to_transform().expect("validated")
    }

    pub fn stereo(&self) -> StereoConfig {
        StereoConfig {
            horizontal_cfar: self.detect.horizontal,
            vertical_cfar: self.detect.vertical,
            dbscan: self.detect.dbscan,
            descriptor: self.detect.descriptor,
        }
    }

    /// SHA-256 of the canonical JSON form of the effective configuration.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serialises");
        hex::encode(Sha256::digest(&bytes))
    }
}
