//! Leading edge extraction: for each beam, the nearest range whose intensity exceeds `tau`.

use serde::{Deserialize, Serialize};

use crate::sonar::{CartesianPoint, PolarSonarImage, SonarSide};

/// Default thresholds for 8-bit images.
pub const DEFAULT_TAU_HORIZONTAL: f64 = 80.0;
pub const DEFAULT_TAU_VERTICAL: f64 = 130.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LeadingEdgeConfig {
    pub horizontal: f64,
    pub vertical: f64,
}

impl Default for LeadingEdgeConfig {
    fn default() -> Self {
        LeadingEdgeConfig {
            horizontal: DEFAULT_TAU_HORIZONTAL,
            vertical: DEFAULT_TAU_VERTICAL,
        }
    }
}

impl LeadingEdgeConfig {
    pub fn tau(&self, side: SonarSide) -> f64 {
        match side {
            SonarSide::Horizontal => self.horizontal,
            SonarSide::Vertical => self.vertical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgePoint {
    pub point: CartesianPoint,
    pub bearing: f64,
    pub range_bin: usize,
    pub column: usize,
}

/// Planar line scan in the sonar's own frame, at most one point per beam.
#[derive(Debug, Clone, PartialEq)]
pub struct LineScan {
    pub source: SonarSide,
    pub timestamp: f64,
    pub points: Vec<EdgePoint>,
}

impl LineScan {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn cartesian(&self) -> impl Iterator<Item = CartesianPoint> + '_ {
        self.points.iter().map(|e| e.point)
    }
}

/// Index of the first bin in `column` with intensity strictly above `tau`.
pub fn edge_bin(img: &PolarSonarImage, column: usize, tau: f64) -> Option<usize> {
    img.data().column(column).iter().position(|&v| v > tau)
}

pub fn detect_leading_edge(img: &PolarSonarImage, tau: f64, source: SonarSide) -> LineScan {
    let intr = img.intrinsics();
    let points = (0..img.num_beams())
        .filter_map(|col| {
            let bin = edge_bin(img, col, tau)?;
            Some(EdgePoint {
                point: intr.project_cell(bin, col, img.get(bin, col)),
                bearing: intr.bearing_unchecked(col),
                range_bin: bin,
                column: col,
            })
        })
        .collect();
    LineScan {
        source,
        timestamp: img.timestamp(),
        points,
    }
}
