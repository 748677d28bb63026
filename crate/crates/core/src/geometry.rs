//! Rigid transforms, vertical-to-horizontal sonar extrinsics and overlap trimming.
//!
//! Association runs in the horizontal sonar frame. Vertical sonar points are
//! brought into it with `p_h = R p_v + t`, where `R` defaults to a -90° roll
//! about x and `t` is the (arbitrary) position of the vertical head.

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::sonar::{CartesianPoint, SonarIntrinsics};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Rotation3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            rotation: Rotation3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Rotation3<f64>, translation: Vector3<f64>) -> Self {
        RigidTransform {
            rotation,
            translation,
        }
    }

    /// Builds a transform from a raw matrix, rejecting anything that is not a proper rotation.
    pub fn from_matrix(m: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let ortho = (m.transpose() * m - Matrix3::identity()).abs().max();
        if ortho > 1e-9 || (m.determinant() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParams("matrix is not a proper rotation".into()));
        }
        Ok(Self::new(Rotation3::from_matrix_unchecked(m), translation))
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self::new(Rotation3::identity(), t)
    }

    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64, translation: Vector3<f64>) -> Result<Self> {
        if axis.norm() < 1e-12 {
            return Err(Error::InvalidParams("rotation axis must be non-zero".into()));
        }
        let rot = Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle);
        Ok(Self::new(rot, translation))
    }

    pub fn apply_vector(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn apply(&self, p: &CartesianPoint) -> CartesianPoint {
        CartesianPoint::from_vector(&self.apply_vector(&p.vector()), p.intensity)
    }

    pub fn inverse(&self) -> Self {
        let rinv = self.rotation.inverse();
        Self::new(rinv, -(rinv * self.translation))
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> Self {
        Self::new(
            self.rotation * other.rotation,
            self.rotation * other.translation + self.translation,
        )
    }
}

/// JSON form of a rigid transform: axis-angle in degrees plus a translation in metres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformConfig {
    pub rotation_axis: [f64; 3],
    pub rotation_deg: f64,
    pub translation_m: [f64; 3],
}

impl TransformConfig {
    pub fn identity() -> Self {
        TransformConfig {
            rotation_axis: [0.0, 0.0, 1.0],
            rotation_deg: 0.0,
            translation_m: [0.0; 3],
        }
    }

    pub fn to_transform(&self) -> Result<RigidTransform> {
        RigidTransform::from_axis_angle(
            Vector3::from(self.rotation_axis),
            self.rotation_deg.to_radians(),
            Vector3::from(self.translation_m),
        )
    }
}

impl Default for TransformConfig {
    fn default() -> Self {
        Self::identity()
    }
}

/// Pose of the vertical sonar head expressed in the horizontal sonar frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SonarExtrinsics {
    pub vertical_to_horizontal: RigidTransform,
}

impl SonarExtrinsics {
    pub fn default_rotation() -> Rotation3<f64> {
        Rotation3::from_axis_angle(&Vector3::x_axis(), (-90f64).to_radians())
    }

    /// -90° about x with the vertical head at `translation` in the horizontal frame.
    pub fn orthogonal(translation: Vector3<f64>) -> Self {
        SonarExtrinsics {
            vertical_to_horizontal: RigidTransform::new(Self::default_rotation(), translation),
        }
    }

    /// Homogeneous form `[R 0; 0 1] [I t; 0 1]`: the offset is applied in the
    /// vertical frame before rotating, which is `R p + R t`.
    pub fn from_pre_rotation_offset(rotation: Rotation3<f64>, offset: Vector3<f64>) -> Self {
        SonarExtrinsics {
            vertical_to_horizontal: RigidTransform::new(rotation, rotation * offset),
        }
    }

    pub fn from_config(cfg: &TransformConfig) -> Result<Self> {
        Ok(SonarExtrinsics {
            vertical_to_horizontal: cfg.to_transform()?,
        })
    }

    pub fn to_horizontal(&self, p: &CartesianPoint) -> CartesianPoint {
        self.vertical_to_horizontal.apply(p)
    }
}

impl Default for SonarExtrinsics {
    fn default() -> Self {
        Self::orthogonal(Vector3::zeros())
    }
}

pub fn vertical_points_to_horizontal_frame(
    points: &[CartesianPoint],
    ext: &SonarExtrinsics,
) -> Vec<CartesianPoint> {
    points.iter().map(|p| ext.to_horizontal(p)).collect()
}

/// The ensonified volume of one sonar: bearing wedge x elevation wedge x range shell.
///
/// Membership uses half-space tests on the two bearing planes and a cone test
/// for the elevation limits, evaluated in the sonar's own frame.
#[derive(Debug, Clone, Copy)]
pub struct SonarFrustum {
    /// Maps the reference frame into this sonar's frame.
    sensor_from_reference: RigidTransform,
    lower_normal: Vector3<f64>,
    upper_normal: Vector3<f64>,
    convex_wedge: bool,
    tan_half_aperture: f64,
    min_range: f64,
    max_range: f64,
}

const FRUSTUM_EPS: f64 = 1e-9;

impl SonarFrustum {
    /// `sensor_in_reference` is this sonar's pose in the reference frame.
    pub fn new(intr: &SonarIntrinsics, sensor_in_reference: &RigidTransform) -> Self {
        let (a, b) = (intr.bearing_min(), intr.bearing_max());
        SonarFrustum {
            sensor_from_reference: sensor_in_reference.inverse(),
            // n·p >= 0 <=> bearing >= a
            lower_normal: Vector3::new(-a.sin(), a.cos(), 0.0),
            // n·p >= 0 <=> bearing <= b
            upper_normal: Vector3::new(b.sin(), -b.cos(), 0.0),
            convex_wedge: b - a <= std::f64::consts::PI,
            tan_half_aperture: (intr.vertical_aperture() / 2.0).tan(),
            min_range: intr.blanking(),
            max_range: intr.max_range(),
        }
    }

    pub fn contains(&self, p_ref: &Vector3<f64>) -> bool {
        let p = self.sensor_from_reference.apply_vector(p_ref);
        let r = p.norm();
        if r > self.max_range + FRUSTUM_EPS || r < self.min_range - FRUSTUM_EPS || r == 0.0 {
            return false;
        }
        let lo = self.lower_normal.dot(&p) >= -FRUSTUM_EPS;
        let hi = self.upper_normal.dot(&p) >= -FRUSTUM_EPS;
        let in_wedge = if self.convex_wedge { lo && hi } else { lo || hi };
        in_wedge && p.z.abs() <= self.tan_half_aperture * p.x.hypot(p.y) + FRUSTUM_EPS
    }
}

/// Intersection of the two sonar frusta, expressed in the horizontal frame.
#[derive(Debug, Clone, Copy)]
pub struct OverlapRegion {
    pub horizontal: SonarFrustum,
    pub vertical: SonarFrustum,
}

impl OverlapRegion {
    pub fn new(h: &SonarIntrinsics, v: &SonarIntrinsics, ext: &SonarExtrinsics) -> Self {
        OverlapRegion {
            horizontal: SonarFrustum::new(h, &RigidTransform::identity()),
            vertical: SonarFrustum::new(v, &ext.vertical_to_horizontal),
        }
    }

    pub fn contains(&self, p_h: &Vector3<f64>) -> bool {
        self.horizontal.contains(p_h) && self.vertical.contains(p_h)
    }
}

/// Keeps only the points of each set that lie in both sonars' frusta.
/// Both inputs are expected in the horizontal frame.
pub fn trim_to_overlap(
    h_points: &[CartesianPoint],
    v_points: &[CartesianPoint],
    ext: &SonarExtrinsics,
    h_intrinsics: &SonarIntrinsics,
    v_intrinsics: &SonarIntrinsics,
) -> (Vec<CartesianPoint>, Vec<CartesianPoint>) {
    let region = OverlapRegion::new(h_intrinsics, v_intrinsics, ext);
    let keep = |pts: &[CartesianPoint]| -> Vec<CartesianPoint> {
        pts.iter().copied().filter(|p| region.contains(&p.vector())).collect()
    };
    (keep(h_points), keep(v_points))
}
