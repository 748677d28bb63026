//! Feature detection on polar frames (SOCA-CFAR) and density clustering of the
//! resulting Cartesian features (DBSCAN).

mod cfar;
mod dbscan;

pub use cfar::{soca_cfar, CfarConfig};
pub use dbscan::{dbscan, dbscan_positions, DbscanConfig};

use nalgebra::Vector3;

use crate::sonar::{CartesianPoint, SonarSide};

/// A detected cell, located in the horizontal sonar frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeaturePoint {
    pub position: Vector3<f64>,
    pub intensity: f64,
    pub source: SonarSide,
    /// `(range_bin, column)` in the source frame.
    pub polar_origin: (usize, usize),
    pub cluster_id: Option<usize>,
}

impl FeaturePoint {
    pub fn new(point: CartesianPoint, source: SonarSide, polar_origin: (usize, usize)) -> Self {
        FeaturePoint {
            position: point.vector(),
            intensity: point.intensity,
            source,
            polar_origin,
            cluster_id: None,
        }
    }

    pub fn x(&self) -> f64 {
        self.position.x
    }

    pub fn to_cartesian(&self) -> CartesianPoint {
        CartesianPoint::from_vector(&self.position, self.intensity)
    }
}
