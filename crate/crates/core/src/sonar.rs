//! Beam-range sonar image model.
//!
//! A forward-looking sonar frame is a rectangular grid `I(R, θ)`: rows are range
//! bins (row 0 nearest the transducer), columns are beams ordered by increasing
//! bearing. Elevation is collapsed, so every cell is projected onto the sonar's
//! own `z = 0` plane.

use nalgebra::Vector3;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Slack allowed when testing whether a bearing or range lies inside the field of view.
const FOV_EPS: f64 = 1e-9;

/// Which of the two orthogonally mounted sonars a datum belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SonarSide {
    Horizontal,
    Vertical,
}

impl SonarSide {
    pub fn as_str(self) -> &'static str {
        match self {
            SonarSide::Horizontal => "horizontal",
            SonarSide::Vertical => "vertical",
        }
    }
}

/// Geometry and quantization of one sonar head.
///
/// Angles are radians internally; the serialized form uses degrees and the
/// same key names as the frame sidecar metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IntrinsicsRepr", into = "IntrinsicsRepr")]
pub struct SonarIntrinsics {
    num_beams: usize,
    num_range_bins: usize,
    max_range: f64,
    bearing_min: f64,
    bearing_max: f64,
    vertical_aperture: f64,
    bit_depth: u8,
    blanking: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct IntrinsicsRepr {
    num_beams: usize,
    num_range_bins: usize,
    max_range_m: f64,
    bearing_min_deg: f64,
    bearing_max_deg: f64,
    vertical_aperture_deg: f64,
    #[serde(default = "default_bit_depth")]
    bit_depth: u8,
    #[serde(default)]
    blanking_m: f64,
}

fn default_bit_depth() -> u8 {
    8
}

impl TryFrom<IntrinsicsRepr> for SonarIntrinsics {
    type Error = Error;

    fn try_from(r: IntrinsicsRepr) -> Result<Self> {
        SonarIntrinsics::new(
            r.num_beams,
            r.num_range_bins,
            r.max_range_m,
            r.bearing_min_deg.to_radians(),
            r.bearing_max_deg.to_radians(),
            r.vertical_aperture_deg.to_radians(),
            r.bit_depth,
        )?
        .with_blanking(r.blanking_m)
    }
}

impl From<SonarIntrinsics> for IntrinsicsRepr {
    fn from(i: SonarIntrinsics) -> Self {
        IntrinsicsRepr {
            num_beams: i.num_beams,
            num_range_bins: i.num_range_bins,
            max_range_m: i.max_range,
            bearing_min_deg: i.bearing_min.to_degrees(),
            bearing_max_deg: i.bearing_max.to_degrees(),
            vertical_aperture_deg: i.vertical_aperture.to_degrees(),
            bit_depth: i.bit_depth,
            blanking_m: i.blanking,
        }
    }
}

impl SonarIntrinsics {
    pub fn new(
        num_beams: usize,
        num_range_bins: usize,
        max_range: f64,
        bearing_min: f64,
        bearing_max: f64,
        vertical_aperture: f64,
        bit_depth: u8,
    ) -> Result<Self> {
        let bad = |msg: &str| Err(Error::InvalidIntrinsics(msg.to_string()));
        if num_beams < 2 {
            return bad("num_beams must be at least 2");
        }
        if num_range_bins == 0 {
            return bad("num_range_bins must be positive");
        }
        if !(max_range.is_finite() && max_range > 0.0) {
            return bad("max_range must be a positive finite number");
        }
        let pi = std::f64::consts::PI;
        if !(bearing_min >= -pi - FOV_EPS && bearing_max <= pi + FOV_EPS && bearing_min < bearing_max) {
            return bad("bearings must satisfy -pi <= bearing_min < bearing_max <= pi");
        }
        if !(vertical_aperture.is_finite() && vertical_aperture > 0.0 && vertical_aperture < pi) {
            return bad("vertical_aperture must lie in (0, pi)");
        }
        if bit_depth != 8 && bit_depth != 16 {
            return bad("bit_depth must be 8 or 16");
        }
        Ok(SonarIntrinsics {
            num_beams,
            num_range_bins,
            max_range,
            bearing_min,
            bearing_max,
            vertical_aperture,
            bit_depth,
            blanking: 0.0,
        })
    }

    /// Sets the range of the near edge of bin 0.
    pub fn with_blanking(mut self, blanking: f64) -> Result<Self> {
        if !(blanking.is_finite() && blanking >= 0.0 && blanking < self.max_range) {
            return Err(Error::InvalidIntrinsics(
                "blanking must lie in [0, max_range)".into(),
            ));
        }
        self.blanking = blanking;
        Ok(self)
    }

    pub fn with_bit_depth(mut self, bit_depth: u8) -> Result<Self> {
        if bit_depth != 8 && bit_depth != 16 {
            return Err(Error::InvalidIntrinsics("bit_depth must be 8 or 16".into()));
        }
        self.bit_depth = bit_depth;
        Ok(self)
    }

    pub fn with_range_bins(mut self, num_range_bins: usize) -> Result<Self> {
        if num_range_bins == 0 {
            return Err(Error::InvalidIntrinsics("num_range_bins must be positive".into()));
        }
        self.num_range_bins = num_range_bins;
        Ok(self)
    }

    /// Wide horizontal head: 130° field of view, 512 beams, 10 m, 20° vertical aperture.
    pub fn horizontal_default() -> Self {
        Self::new(512, 512, 10.0, (-65f64).to_radians(), 65f64.to_radians(), 20f64.to_radians(), 8)
            .expect("static intrinsics are valid")
    }

    /// Narrow vertical head: 45° field of view, 256 beams, 10 m, 20° vertical aperture.
    pub fn vertical_default() -> Self {
        Self::new(256, 512, 10.0, (-22.5f64).to_radians(), 22.5f64.to_radians(), 20f64.to_radians(), 8)
            .expect("static intrinsics are valid")
    }

    pub fn num_beams(&self) -> usize {
        self.num_beams
    }

    pub fn num_range_bins(&self) -> usize {
        self.num_range_bins
    }

    pub fn max_range(&self) -> f64 {
        self.max_range
    }

    pub fn bearing_min(&self) -> f64 {
        self.bearing_min
    }

    pub fn bearing_max(&self) -> f64 {
        self.bearing_max
    }

    pub fn vertical_aperture(&self) -> f64 {
        self.vertical_aperture
    }

    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    pub fn blanking(&self) -> f64 {
        self.blanking
    }

    /// Largest representable intensity, `2^bit_depth - 1`.
    pub fn full_scale(&self) -> f64 {
        ((1u32 << self.bit_depth) - 1) as f64
    }

    /// Radial size of one range bin.
    pub fn range_resolution(&self) -> f64 {
        (self.max_range - self.blanking) / self.num_range_bins as f64
    }

    pub fn bearing_step(&self) -> f64 {
        (self.bearing_max - self.bearing_min) / (self.num_beams - 1) as f64
    }

    pub fn bearing_of_column(&self, column: usize) -> Result<f64> {
        if column >= self.num_beams {
            return Err(Error::IndexOutOfRange {
                index: column,
                limit: self.num_beams,
            });
        }
        Ok(self.bearing_unchecked(column))
    }

    /// Linear interpolation written so both endpoints are hit exactly.
    pub(crate) fn bearing_unchecked(&self, column: usize) -> f64 {
        let f = column as f64 / (self.num_beams - 1) as f64;
        self.bearing_min * (1.0 - f) + self.bearing_max * f
    }

    /// Range at the centre of bin `bin`.
    pub fn range_of_bin(&self, bin: usize) -> Result<f64> {
        if bin >= self.num_range_bins {
            return Err(Error::IndexOutOfRange {
                index: bin,
                limit: self.num_range_bins,
            });
        }
        Ok(self.range_unchecked(bin))
    }

    pub(crate) fn range_unchecked(&self, bin: usize) -> f64 {
        self.blanking + (bin as f64 + 0.5) * self.range_resolution()
    }

    /// Nearest `(range_bin, column)` of a point in the sonar's own plane, or
    /// `None` when it falls outside `[blanking, max_range] x [bearing_min, bearing_max]`.
    ///
    /// Only `x` and `y` are used; callers are expected to pass `z = 0` points.
    pub fn polar_index_of(&self, point: &CartesianPoint) -> Option<(usize, usize)> {
        let range = point.x.hypot(point.y);
        if !range.is_finite() || range > self.max_range + FOV_EPS || range < self.blanking - FOV_EPS {
            return None;
        }
        let bearing = point.y.atan2(point.x);
        if bearing < self.bearing_min - FOV_EPS || bearing > self.bearing_max + FOV_EPS {
            return None;
        }
        let bin = ((range - self.blanking) / self.range_resolution()).floor().max(0.0) as usize;
        let bin = bin.min(self.num_range_bins - 1);
        let col = ((bearing - self.bearing_min) / self.bearing_step()).round().max(0.0) as usize;
        Some((bin, col.min(self.num_beams - 1)))
    }

    /// Bin index of a range, without bearing checks.
    pub fn bin_of_range(&self, range: f64) -> Option<usize> {
        if !(range >= self.blanking) || range >= self.max_range {
            return None;
        }
        let bin = ((range - self.blanking) / self.range_resolution()).floor() as usize;
        Some(bin.min(self.num_range_bins - 1))
    }

    /// Planar projection of the centre of cell `(bin, col)`.
    pub fn project_cell(&self, bin: usize, col: usize, intensity: f64) -> CartesianPoint {
        let mut p = project_planar(self.range_unchecked(bin), self.bearing_unchecked(col));
        p.intensity = intensity;
        p
    }
}

/// A point in a Cartesian sensor or world frame, carrying the intensity of the cell it came from.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CartesianPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub intensity: f64,
}

impl CartesianPoint {
    pub fn new(x: f64, y: f64, z: f64, intensity: f64) -> Self {
        CartesianPoint { x, y, z, intensity }
    }

    pub fn from_vector(v: &Vector3<f64>, intensity: f64) -> Self {
        CartesianPoint::new(v.x, v.y, v.z, intensity)
    }

    pub fn vector(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn norm(&self) -> f64 {
        self.vector().norm()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Polar to Cartesian conversion under the zero-elevation assumption:
/// `(R cos θ, R sin θ, 0)`.
pub fn project_planar(range: f64, bearing: f64) -> CartesianPoint {
    let (s, c) = bearing.sin_cos();
    CartesianPoint::new(range * c, range * s, 0.0, 0.0)
}

/// One sonar frame: `num_range_bins x num_beams` intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarSonarImage {
    intrinsics: SonarIntrinsics,
    data: Array2<f64>,
    timestamp: f64,
}

impl PolarSonarImage {
    pub fn new(intrinsics: SonarIntrinsics, data: Array2<f64>, timestamp: f64) -> Result<Self> {
        let (rows, cols) = data.dim();
        if rows != intrinsics.num_range_bins || cols != intrinsics.num_beams {
            return Err(Error::ShapeMismatch {
                rows,
                cols,
                expected_rows: intrinsics.num_range_bins,
                expected_cols: intrinsics.num_beams,
            });
        }
        if data.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParams(
                "image intensities must be finite and non-negative".into(),
            ));
        }
        Ok(PolarSonarImage {
            intrinsics,
            data,
            timestamp,
        })
    }

    pub fn zeros(intrinsics: SonarIntrinsics, timestamp: f64) -> Self {
        PolarSonarImage {
            data: Array2::zeros((intrinsics.num_range_bins, intrinsics.num_beams)),
            intrinsics,
            timestamp,
        }
    }

    /// Replaces the grid, keeping intrinsics and timestamp. The shape must not change.
    pub(crate) fn with_data(&self, data: Array2<f64>) -> Self {
        debug_assert_eq!(data.dim(), self.data.dim());
        PolarSonarImage {
            intrinsics: self.intrinsics,
            data,
            timestamp: self.timestamp,
        }
    }

    pub(crate) fn set_intrinsics(&mut self, intrinsics: SonarIntrinsics) {
        debug_assert_eq!(intrinsics.num_beams, self.intrinsics.num_beams);
        debug_assert_eq!(intrinsics.num_range_bins, self.intrinsics.num_range_bins);
        self.intrinsics = intrinsics;
    }

    pub fn intrinsics(&self) -> &SonarIntrinsics {
        &self.intrinsics
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_data(self) -> Array2<f64> {
        self.data
    }

    pub fn timestamp(&self) -> f64 {
        self.timestamp
    }

    pub fn set_timestamp(&mut self, timestamp: f64) {
        self.timestamp = timestamp;
    }

    pub fn get(&self, bin: usize, col: usize) -> f64 {
        self.data[[bin, col]]
    }

    pub fn num_range_bins(&self) -> usize {
        self.data.nrows()
    }

    pub fn num_beams(&self) -> usize {
        self.data.ncols()
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }
}
