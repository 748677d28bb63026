//! Trajectory replay, keyframe selection and assembly of the combined above/below-water map.

use std::collections::BTreeMap;

use log::warn;
use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::RigidTransform;
use crate::sonar::CartesianPoint;
use crate::{Error, Result};

/// Body pose in the world frame at a timestamp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub timestamp: f64,
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vector3<f64>,
}

impl Pose {
    pub fn new(timestamp: f64, rotation: UnitQuaternion<f64>, translation: Vector3<f64>) -> Self {
        Pose {
            timestamp,
            rotation,
            translation,
        }
    }

    pub fn identity(timestamp: f64) -> Self {
        Self::new(timestamp, UnitQuaternion::identity(), Vector3::zeros())
    }

    /// Body-to-world transform.
    pub fn to_transform(&self) -> RigidTransform {
        RigidTransform::new(self.rotation.to_rotation_matrix(), self.translation)
    }
}

/// Linear translation and shortest-arc rotation at `lambda = (t - t0) / (t1 - t0)`.
pub fn interpolate_pose(t: f64, p0: &Pose, p1: &Pose) -> Result<Pose> {
    if !(p0.timestamp < p1.timestamp) {
        return Err(Error::InvalidParams(format!(
            "bracket [{}, {}] is not increasing",
            p0.timestamp, p1.timestamp
        )));
    }
    if !(t >= p0.timestamp && t <= p1.timestamp) {
        return Err(Error::Extrapolation {
            t,
            start: p0.timestamp,
            end: p1.timestamp,
        });
    }
    if t == p0.timestamp {
        return Ok(*p0);
    }
    if t == p1.timestamp {
        return Ok(*p1);
    }
    let lambda = (t - p0.timestamp) / (p1.timestamp - p0.timestamp);
    let translation = p0.translation * (1.0 - lambda) + p1.translation * lambda;
    // powf follows the shortest arc: the relative rotation's angle is in [0, pi].
    let relative = p0.rotation.inverse() * p1.rotation;
    let rotation = p0.rotation * relative.powf(lambda);
    Ok(Pose::new(t, rotation, translation))
}

/// Poses with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    poses: Vec<Pose>,
}

impl Trajectory {
    pub fn new(poses: Vec<Pose>) -> Result<Self> {
        if poses.is_empty() {
            return Err(Error::InvalidParams("trajectory has no poses".into()));
        }
        if let Some(w) = poses.windows(2).find(|w| !(w[0].timestamp < w[1].timestamp)) {
            return Err(Error::InvalidParams(format!(
                "timestamps not strictly increasing at {}",
                w[1].timestamp
            )));
        }
        if poses.iter().any(|p| !p.timestamp.is_finite() || !p.translation.iter().all(|v| v.is_finite())) {
            return Err(Error::InvalidParams("non-finite pose".into()));
        }
        Ok(Trajectory { poses })
    }

    pub fn poses(&self) -> &[Pose] {
        &self.poses
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.poses[0].timestamp
    }

    pub fn end(&self) -> f64 {
        self.poses[self.poses.len() - 1].timestamp
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start() && t <= self.end()
    }

    /// Pose at `t`, interpolated between the two bracketing samples.
    pub fn pose_at(&self, t: f64) -> Result<Pose> {
        if !self.contains(t) {
            return Err(Error::Extrapolation {
                t,
                start: self.start(),
                end: self.end(),
            });
        }
        let k = self.poses.partition_point(|p| p.timestamp < t);
        if self.poses[k].timestamp == t {
            return Ok(self.poses[k]);
        }
        interpolate_pose(t, &self.poses[k - 1], &self.poses[k])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KeyframeConfig {
    pub translation_m: f64,
    pub rotation_rad: f64,
}

impl Default for KeyframeConfig {
    fn default() -> Self {
        KeyframeConfig {
            translation_m: 1.0,
            rotation_rad: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Keyframe {
    pub id: usize,
    pub pose: Pose,
    /// Index of the lidar scan attached to this keyframe, if any.
    pub lidar_scan: Option<usize>,
}

/// Whether `pose` has moved far enough from `last` to become a keyframe.
pub fn keyframe_due(last: &Pose, pose: &Pose, cfg: &KeyframeConfig) -> bool {
    (pose.translation - last.translation).norm() >= cfg.translation_m
        || last.rotation.angle_to(&pose.rotation) >= cfg.rotation_rad
}

/// Appends `pose` as a keyframe when due (always for the first) and returns its id.
pub fn insert_keyframe_if_due(keyframes: &mut Vec<Keyframe>, pose: &Pose, cfg: &KeyframeConfig) -> Option<usize> {
    let due = keyframes.last().is_none_or(|k| keyframe_due(&k.pose, pose, cfg));
    if !due {
        return None;
    }
    let id = keyframes.len();
    keyframes.push(Keyframe {
        id,
        pose: *pose,
        lidar_scan: None,
    });
    Some(id)
}

pub fn select_keyframes(trajectory: &Trajectory, cfg: &KeyframeConfig) -> Vec<Keyframe> {
    let mut out = Vec::new();
    for p in trajectory.poses() {
        insert_keyframe_if_due(&mut out, p, cfg);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapChannel {
    Lidar,
    Stereo,
    EdgeH,
    EdgeV,
}

impl MapChannel {
    pub const ALL: [MapChannel; 4] = [MapChannel::Lidar, MapChannel::Stereo, MapChannel::EdgeH, MapChannel::EdgeV];

    pub fn code(self) -> u8 {
        match self {
            MapChannel::Lidar => 0,
            MapChannel::Stereo => 1,
            MapChannel::EdgeH => 2,
            MapChannel::EdgeV => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.code() == code)
    }

    pub fn name(self) -> &'static str {
        match self {
            MapChannel::Lidar => "lidar",
            MapChannel::Stereo => "stereo",
            MapChannel::EdgeH => "edge_h",
            MapChannel::EdgeV => "edge_v",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapPoint {
    pub point: CartesianPoint,
    pub channel: MapChannel,
    pub timestamp: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AttachReport {
    pub accepted: usize,
    pub rejected: usize,
}

/// World-frame point cloud of all channels plus the keyframes they hang from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SeabedSkyMap {
    pub points: Vec<MapPoint>,
    pub keyframes: Vec<Keyframe>,
    lidar_scans: usize,
}

impl SeabedSkyMap {
    pub fn new(keyframes: Vec<Keyframe>) -> Self {
        SeabedSkyMap {
            points: Vec::new(),
            keyframes,
            lidar_scans: 0,
        }
    }

    /// Places timestamped sensor-frame points in the world using the pose
    /// interpolated at each point's own time. Points outside the trajectory
    /// span are dropped and counted.
    pub fn attach_sonar_data(
        &mut self,
        points: &[(CartesianPoint, f64)],
        channel: MapChannel,
        sensor_to_body: &RigidTransform,
        trajectory: &Trajectory,
    ) -> AttachReport {
        let mut report = AttachReport::default();
        for (p, t) in points {
            match trajectory.pose_at(*t) {
                Ok(pose) => {
                    let world = pose.to_transform().compose(sensor_to_body).apply(p);
                    self.points.push(MapPoint {
                        point: world,
                        channel,
                        timestamp: *t,
                    });
                    report.accepted += 1;
                }
                Err(_) => report.rejected += 1,
            }
        }
        if report.rejected > 0 {
            warn!(
                "{} {} points outside trajectory span [{}, {}] rejected",
                report.rejected,
                channel.name(),
                trajectory.start(),
                trajectory.end()
            );
        }
        report
    }

    /// Appends a lidar scan taken at `pose`; links it to the keyframe with the same timestamp, if any.
    pub fn attach_lidar_scan(&mut self, scan: &[CartesianPoint], pose: &Pose, sensor_to_body: &RigidTransform) -> usize {
        let to_world = pose.to_transform().compose(sensor_to_body);
        self.points.extend(scan.iter().map(|p| MapPoint {
            point: to_world.apply(p),
            channel: MapChannel::Lidar,
            timestamp: pose.timestamp,
        }));
        let id = self.lidar_scans;
        self.lidar_scans += 1;
        if let Some(k) = self.keyframes.iter_mut().find(|k| k.pose.timestamp == pose.timestamp) {
            k.lidar_scan = Some(id);
        }
        id
    }

    pub fn channel_counts(&self) -> BTreeMap<&'static str, usize> {
        let mut counts: BTreeMap<&'static str, usize> = MapChannel::ALL.iter().map(|c| (c.name(), 0)).collect();
        for p in &self.points {
            *counts.entry(p.channel.name()).or_default() += 1;
        }
        counts
    }

    pub fn channel_points(&self, channel: MapChannel) -> impl Iterator<Item = &MapPoint> {
        self.points.iter().filter(move |p| p.channel == channel)
    }
}
