//! Denoising chains for the two sonar heads.
//!
//! Horizontal head: row quantile subtraction, Otsu mask, 8-bit normalization, 3x1 opening.
//! Vertical head: row mean subtraction, low-intensity centre-beam mask, 8-bit
//! normalization, 3x3 median.
//!
//! Kernels are `(rows, cols)` = `(range bins, beams)`; borders replicate the edge value.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::sonar::{PolarSonarImage, SonarSide};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub chain: SonarSide,
    pub row_quantile: f64,
    /// Bearing interval (degrees) of the centre-beam mask.
    pub center_mask_bearings_deg: [f64; 2],
    /// Centre-beam mask threshold as a fraction of the image full scale.
    pub center_mask_threshold: f64,
    pub open_kernel: (usize, usize),
    pub median_kernel: (usize, usize),
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig::horizontal()
    }
}

impl PreprocessConfig {
    pub fn horizontal() -> Self {
        PreprocessConfig {
            chain: SonarSide::Horizontal,
            row_quantile: 0.10,
            center_mask_bearings_deg: [-10.0, 10.0],
            center_mask_threshold: 40.0 / 255.0,
            open_kernel: (3, 1),
            median_kernel: (3, 3),
        }
    }

    pub fn vertical() -> Self {
        PreprocessConfig {
            chain: SonarSide::Vertical,
            ..Self::horizontal()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.row_quantile) {
            return Err(Error::Config(format!(
                "row_quantile {} outside [0, 1]",
                self.row_quantile
            )));
        }
        let [lo, hi] = self.center_mask_bearings_deg;
        if !(lo <= hi) {
            return Err(Error::Config("center mask interval is reversed".into()));
        }
        if !(self.center_mask_threshold >= 0.0) {
            return Err(Error::Config("center mask threshold must be >= 0".into()));
        }
        check_kernel(self.open_kernel)?;
        check_kernel(self.median_kernel)
    }

    pub fn run(&self, img: &PolarSonarImage) -> Result<PolarSonarImage> {
        self.validate()?;
        match self.chain {
            SonarSide::Horizontal => preprocess_horizontal_with(img, self),
            SonarSide::Vertical => preprocess_vertical_with(img, self),
        }
    }
}

fn check_kernel((rows, cols): (usize, usize)) -> Result<()> {
    if rows % 2 == 1 && cols % 2 == 1 {
        Ok(())
    } else {
        Err(Error::InvalidKernel { rows, cols })
    }
}

/// Lower nearest-rank quantile of an ascending slice: element `ceil(q n) - 1`, clamped to the slice.
pub fn nearest_rank_quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty slice");
    let n = sorted.len();
    // 1e-9 absorbs products like 0.1 * 30 = 3.0000000000000004.
    let rank = (q * n as f64 - 1e-9).ceil().max(1.0) as usize;
    sorted[rank.min(n) - 1]
}

pub fn subtract_row_quantile(img: &PolarSonarImage, q: f64) -> PolarSonarImage {
    let mut out = img.data().clone();
    let mut scratch = Vec::with_capacity(out.ncols());
    for mut row in out.rows_mut() {
        scratch.clear();
        scratch.extend(row.iter().copied());
        scratch.sort_by(f64::total_cmp);
        let qv = nearest_rank_quantile(&scratch, q);
        row.mapv_inplace(|v| (v - qv).max(0.0));
    }
    img.with_data(out)
}

pub fn subtract_row_mean(img: &PolarSonarImage) -> PolarSonarImage {
    let mut out = img.data().clone();
    for mut row in out.rows_mut() {
        let mean = row.sum() / row.len() as f64;
        row.mapv_inplace(|v| (v - mean).max(0.0));
    }
    img.with_data(out)
}

/// Otsu threshold over the exact intensity histogram.
///
/// Returns the largest intensity assigned to the background class; the mask
/// keeps pixels strictly above it. Ties in between-class variance go to the
/// lowest threshold.
pub fn otsu_threshold(img: &PolarSonarImage) -> Result<f64> {
    let mut values: Vec<f64> = img.data().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    // (value, count) runs
    let mut hist: Vec<(f64, usize)> = Vec::new();
    for v in values {
        match hist.last_mut() {
            Some((last, count)) if *last == v => *count += 1,
            _ => hist.push((v, 1)),
        }
    }
    if hist.len() < 2 {
        return Err(Error::DegenerateHistogram);
    }
    let total_n: f64 = hist.iter().map(|&(_, c)| c as f64).sum();
    let total_sum: f64 = hist.iter().map(|&(v, c)| v * c as f64).sum();
    let mut best = (f64::NEG_INFINITY, hist[0].0);
    let (mut n0, mut s0) = (0.0, 0.0);
    for &(v, c) in &hist[..hist.len() - 1] {
        n0 += c as f64;
        s0 += v * c as f64;
        let n1 = total_n - n0;
        let mu0 = s0 / n0;
        let mu1 = (total_sum - s0) / n1;
        let w0 = n0 / total_n;
        let w1 = n1 / total_n;
        let between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if between > best.0 {
            best = (between, v);
        }
    }
    Ok(best.1)
}

/// Binary mask (`true` = keep) of pixels strictly above the Otsu threshold.
pub fn otsu_mask(img: &PolarSonarImage) -> Result<Array2<bool>> {
    let t = otsu_threshold(img)?;
    Ok(img.data().mapv(|v| v > t))
}

/// Zeroes pixels below `threshold` in columns whose bearing lies in `[lo, hi]` (radians).
pub fn mask_center_bearings(
    img: &PolarSonarImage,
    interval: (f64, f64),
    threshold: f64,
) -> Result<PolarSonarImage> {
    let intr = img.intrinsics();
    let (lo, hi) = interval;
    let eps = 1e-12;
    if lo > hi || lo < intr.bearing_min() - eps || hi > intr.bearing_max() + eps {
        return Err(Error::IntervalOutsideFov {
            lo,
            hi,
            min: intr.bearing_min(),
            max: intr.bearing_max(),
        });
    }
    let mut out = img.data().clone();
    for (col, mut column) in out.columns_mut().into_iter().enumerate() {
        let b = intr.bearing_unchecked(col);
        if b >= lo && b <= hi {
            column.mapv_inplace(|v| if v < threshold { 0.0 } else { v });
        }
    }
    Ok(img.with_data(out))
}

/// Linear min-max rescale to `[0, 255]` with half-up rounding; the result is tagged 8-bit.
///
/// An all-zero image is returned unchanged. A constant non-zero image maps to 255.
pub fn normalize_to_8bit(img: &PolarSonarImage) -> PolarSonarImage {
    let max = img.max_value();
    let mut out = if max <= 0.0 {
        img.clone()
    } else {
        let min = img.min_value();
        let span = max - min;
        let data = if span > 0.0 {
            img.data().mapv(|v| ((v - min) * 255.0 / span + 0.5).floor())
        } else {
            img.data().mapv(|_| 255.0)
        };
        img.with_data(data)
    };
    let intr = out
        .intrinsics()
        .with_bit_depth(8)
        .expect("8 is a valid bit depth");
    out.set_intrinsics(intr);
    out
}

fn window_fold(
    data: &Array2<f64>,
    (krows, kcols): (usize, usize),
    init: f64,
    f: impl Fn(f64, f64) -> f64,
) -> Array2<f64> {
    let (rows, cols) = data.dim();
    let (hr, hc) = (krows as isize / 2, kcols as isize / 2);
    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;
    Array2::from_shape_fn((rows, cols), |(r, c)| {
        let mut acc = init;
        for dr in -hr..=hr {
            let rr = clamp(r as isize + dr, rows);
            for dc in -hc..=hc {
                acc = f(acc, data[[rr, clamp(c as isize + dc, cols)]]);
            }
        }
        acc
    })
}

pub fn erode(img: &PolarSonarImage, kernel: (usize, usize)) -> Result<PolarSonarImage> {
    check_kernel(kernel)?;
    Ok(img.with_data(window_fold(img.data(), kernel, f64::INFINITY, f64::min)))
}

pub fn dilate(img: &PolarSonarImage, kernel: (usize, usize)) -> Result<PolarSonarImage> {
    check_kernel(kernel)?;
    Ok(img.with_data(window_fold(img.data(), kernel, f64::NEG_INFINITY, f64::max)))
}

/// Grayscale opening (erosion then dilation) with a flat rectangular element.
pub fn morphological_open(img: &PolarSonarImage, kernel: (usize, usize)) -> Result<PolarSonarImage> {
    dilate(&erode(img, kernel)?, kernel)
}

pub fn median_filter(img: &PolarSonarImage, kernel: (usize, usize)) -> Result<PolarSonarImage> {
    check_kernel(kernel)?;
    let (krows, kcols) = kernel;
    let data = img.data();
    let (rows, cols) = data.dim();
    let (hr, hc) = (krows as isize / 2, kcols as isize / 2);
    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;
    let mut window = Vec::with_capacity(krows * kcols);
    let mut out = Array2::zeros((rows, cols));
    for r in 0..rows {
        for c in 0..cols {
            window.clear();
            for dr in -hr..=hr {
                let rr = clamp(r as isize + dr, rows);
                for dc in -hc..=hc {
                    window.push(data[[rr, clamp(c as isize + dc, cols)]]);
                }
            }
            let mid = window.len() / 2;
            let (_, m, _) = window.select_nth_unstable_by(mid, f64::total_cmp);
            out[[r, c]] = *m;
        }
    }
    Ok(img.with_data(out))
}

pub fn preprocess_horizontal(img: &PolarSonarImage) -> Result<PolarSonarImage> {
    preprocess_horizontal_with(img, &PreprocessConfig::horizontal())
}

pub fn preprocess_vertical(img: &PolarSonarImage) -> Result<PolarSonarImage> {
    preprocess_vertical_with(img, &PreprocessConfig::vertical())
}

fn preprocess_horizontal_with(img: &PolarSonarImage, cfg: &PreprocessConfig) -> Result<PolarSonarImage> {
    let sub = subtract_row_quantile(img, cfg.row_quantile);
    // After quantile subtraction a constant image is necessarily all zero.
    let masked = if sub.max_value() <= 0.0 {
        sub
    } else {
        let mask = otsu_mask(&sub)?;
        let mut data = sub.data().clone();
        data.zip_mut_with(&mask, |v, &keep| {
            if !keep {
                *v = 0.0
            }
        });
        sub.with_data(data)
    };
    let norm = normalize_to_8bit(&masked);
    morphological_open(&norm, cfg.open_kernel)
}

fn preprocess_vertical_with(img: &PolarSonarImage, cfg: &PreprocessConfig) -> Result<PolarSonarImage> {
    let sub = subtract_row_mean(img);
    let [lo, hi] = cfg.center_mask_bearings_deg;
    let threshold = cfg.center_mask_threshold * img.intrinsics().full_scale();
    let masked = mask_center_bearings(&sub, (lo.to_radians(), hi.to_radians()), threshold)?;
    let norm = normalize_to_8bit(&masked);
    median_filter(&norm, cfg.median_kernel)
}
