use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::sonar::PolarSonarImage;
use crate::{Error, Result};

/// Seeded speckle and per-row bias, in image intensity units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    /// Fraction of pixels that receive speckle.
    pub speckle_density: f64,
    pub speckle_min: f64,
    pub speckle_max: f64,
    /// Every row gets a bias drawn uniformly from `[0, row_bias]`.
    pub row_bias: f64,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            speckle_density: 0.0,
            speckle_min: 20.0,
            speckle_max: 120.0,
            row_bias: 0.0,
            seed: 0,
        }
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.speckle_density) {
            return Err(Error::InvalidParams(format!("speckle density {} outside [0, 1]", self.speckle_density)));
        }
        if !(self.speckle_min >= 0.0 && self.speckle_min <= self.speckle_max && self.speckle_max.is_finite()) {
            return Err(Error::InvalidParams("speckle range must satisfy 0 <= min <= max".into()));
        }
        if !(self.row_bias >= 0.0 && self.row_bias.is_finite()) {
            return Err(Error::InvalidParams("row bias must be non-negative".into()));
        }
        Ok(())
    }
}

/// Adds `round(density * pixels)` speckles at distinct seeded positions, then the row bias.
/// Results are rounded and clipped to the image's full scale.
pub fn apply_noise(img: &PolarSonarImage, model: &NoiseModel) -> Result<PolarSonarImage> {
    model.validate()?;
    if model.speckle_density == 0.0 && model.row_bias == 0.0 {
        return Ok(img.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    let full = img.intrinsics().full_scale();
    let mut data = img.data().clone();
    let (rows, cols) = data.dim();
    let count = (model.speckle_density * (rows * cols) as f64).round() as usize;
    for idx in sample(&mut rng, rows * cols, count) {
        let v = if model.speckle_max > model.speckle_min {
            rng.random_range(model.speckle_min..=model.speckle_max)
        } else {
            model.speckle_min
        };
        data[[idx / cols, idx % cols]] += v;
    }
    if model.row_bias > 0.0 {
        for mut row in data.rows_mut() {
            let b = rng.random_range(0.0..=model.row_bias);
            row.mapv_inplace(|v| v + b);
        }
    }
    data.mapv_inplace(|v| v.round().clamp(0.0, full));
    PolarSonarImage::new(*img.intrinsics(), data, img.timestamp())
}
