//! Synthetic scenes, trajectories and sensor raycasting with ground truth.

mod noise;
mod scene;
mod trajectory;

pub use noise::{apply_noise, NoiseModel};
pub use scene::{RayHit, Scene, Surface};
pub use trajectory::{generate_trajectory, TrajectoryKind, TrajectorySpec};

use nalgebra::Vector3;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::geometry::RigidTransform;
use crate::sonar::{CartesianPoint, PolarSonarImage, SonarIntrinsics};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SonarSimConfig {
    /// Rays spread evenly over the vertical aperture for every beam.
    pub elevation_rays: usize,
    /// Cell intensity is `gain * (summed reflectivity / elevation_rays)`, saturating at full scale.
    pub gain: f64,
}

impl Default for SonarSimConfig {
    fn default() -> Self {
        SonarSimConfig {
            elevation_rays: 64,
            gain: 4.0,
        }
    }
}

impl SonarSimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.elevation_rays == 0 {
            return Err(Error::Config("elevation_rays must be positive".into()));
        }
        if !(self.gain > 0.0 && self.gain.is_finite()) {
            return Err(Error::Config("gain must be positive".into()));
        }
        Ok(())
    }
}

/// A ray hit that landed in image cell `(range_bin, column)`; `point` is in the sonar frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruthHit {
    pub range_bin: usize,
    pub column: usize,
    pub point: Vector3<f64>,
    pub surface: usize,
}

#[derive(Debug, Clone)]
pub struct SonarCapture {
    pub image: PolarSonarImage,
    pub hits: Vec<GroundTruthHit>,
}

/// Renders one sonar frame. `sensor_to_world` places the sonar in the scene.
pub fn raycast_sonar(
    scene: &Scene,
    sensor_to_world: &RigidTransform,
    intr: &SonarIntrinsics,
    cfg: &SonarSimConfig,
    timestamp: f64,
) -> Result<SonarCapture> {
    cfg.validate()?;
    let (rows, cols) = (intr.num_range_bins(), intr.num_beams());
    let mut energy = Array2::<f64>::zeros((rows, cols));
    let mut hits = Vec::new();
    let k = cfg.elevation_rays;
    let aperture = intr.vertical_aperture();
    let origin = sensor_to_world.translation;
    let to_sensor = sensor_to_world.inverse();
    for col in 0..cols {
        let theta = intr.bearing_unchecked(col);
        for e in 0..k {
            let phi = -aperture / 2.0 + (e as f64 + 0.5) * aperture / k as f64;
            let dir = Vector3::new(phi.cos() * theta.cos(), phi.cos() * theta.sin(), phi.sin());
            let world_dir = sensor_to_world.rotation * dir;
            let Some(hit) = scene.first_underwater_hit(&origin, &world_dir) else {
                continue;
            };
            let Some(bin) = intr.bin_of_range(hit.distance) else {
                continue;
            };
            energy[[bin, col]] += hit.reflectivity;
            hits.push(GroundTruthHit {
                range_bin: bin,
                column: col,
                point: to_sensor.apply_vector(&hit.point),
                surface: hit.surface,
            });
        }
    }
    let full = intr.full_scale();
    let data = energy.mapv(|s| ((cfg.gain * s / k as f64).min(1.0) * full).round());
    Ok(SonarCapture {
        image: PolarSonarImage::new(*intr, data, timestamp)?,
        hits,
    })
}

/// Spinning-lidar ray pattern: `azimuth_steps` columns over 360° times the listed elevations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LidarPattern {
    pub azimuth_steps: usize,
    pub elevations_deg: Vec<f64>,
    pub max_range_m: f64,
}

impl Default for LidarPattern {
    fn default() -> Self {
        LidarPattern {
            azimuth_steps: 720,
            elevations_deg: (0..16).map(|i| -15.0 + 2.0 * i as f64).collect(),
            max_range_m: 50.0,
        }
    }
}

/// First hits above the water level, returned in the lidar frame with reflectivity as intensity.
pub fn raycast_lidar(scene: &Scene, sensor_to_world: &RigidTransform, pattern: &LidarPattern) -> Vec<CartesianPoint> {
    let origin = sensor_to_world.translation;
    let to_sensor = sensor_to_world.inverse();
    let mut out = Vec::new();
    for elev in &pattern.elevations_deg {
        let phi = elev.to_radians();
        for a in 0..pattern.azimuth_steps {
            let az = 2.0 * std::f64::consts::PI * a as f64 / pattern.azimuth_steps as f64;
            let dir = sensor_to_world.rotation * Vector3::new(phi.cos() * az.cos(), phi.cos() * az.sin(), phi.sin());
            let Some(hit) = scene.first_hit(&origin, &dir) else {
                continue;
            };
            if hit.distance > pattern.max_range_m || scene.water_level.is_some_and(|w| hit.point.z < w) {
                continue;
            }
            out.push(CartesianPoint::from_vector(&to_sensor.apply_vector(&hit.point), hit.reflectivity));
        }
    }
    out
}
