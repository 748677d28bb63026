use serde::{Deserialize, Serialize};

use crate::sonar::PolarSonarImage;
use crate::{Error, Result};

/// Smallest-of cell-averaging CFAR parameters, applied along range within each beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CfarConfig {
    /// Reference cells per side.
    pub reference_cells: usize,
    /// Guard cells per side.
    pub guard_cells: usize,
    pub pfa: f64,
    pub min_intensity: f64,
}

impl CfarConfig {
    pub fn horizontal() -> Self {
        CfarConfig {
            reference_cells: 16,
            guard_cells: 8,
            pfa: 0.2,
            min_intensity: 100.0,
        }
    }

    pub fn vertical() -> Self {
        CfarConfig {
            reference_cells: 24,
            guard_cells: 8,
            pfa: 0.2,
            min_intensity: 130.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reference_cells == 0 {
            return Err(Error::Config("reference_cells must be positive".into()));
        }
        if !(self.pfa > 0.0 && self.pfa < 1.0) {
            return Err(Error::Config(format!("pfa {} outside (0, 1)", self.pfa)));
        }
        if !self.min_intensity.is_finite() {
            return Err(Error::Config("min_intensity must be finite".into()));
        }
        Ok(())
    }

    /// Threshold multiplier `N (pfa^(-1/N) - 1)` with `N = reference_cells`.
    pub fn alpha(&self) -> f64 {
        let n = self.reference_cells as f64;
        n * (self.pfa.powf(-1.0 / n) - 1.0)
    }

    /// Cells spanned by guard and reference windows on both sides plus the cell under test.
    pub fn window_len(&self) -> usize {
        2 * (self.reference_cells + self.guard_cells) + 1
    }

    /// Shortest column in which every cell has at least one complete reference window.
    pub fn min_rows(&self) -> usize {
        2 * (self.reference_cells + self.guard_cells)
    }
}

/// Returns `(range_bin, column)` of every detection, column-major then by bin.
///
/// For cell `i` the leading window is `[i-G-N, i-G-1]` and the lagging window
/// `[i+G+1, i+G+N]`. The noise estimate is the smaller window mean; near the
/// column ends only the window that fits is used.
pub fn soca_cfar(img: &PolarSonarImage, cfg: &CfarConfig) -> Result<Vec<(usize, usize)>> {
    cfg.validate()?;
    let rows = img.num_range_bins();
    if rows < cfg.min_rows() {
        return Err(Error::Config(format!(
            "CFAR needs at least {} range bins, image has {}",
            cfg.min_rows(),
            rows
        )));
    }
    let (n, g) = (cfg.reference_cells, cfg.guard_cells);
    let alpha = cfg.alpha();
    let mut out = Vec::new();
    let mut prefix = vec![0.0; rows + 1];
    for col in 0..img.num_beams() {
        let column = img.data().column(col);
        for (i, v) in column.iter().enumerate() {
            prefix[i + 1] = prefix[i] + v;
        }
        let sum = |a: usize, b: usize| prefix[b] - prefix[a];
        for (i, &v) in column.iter().enumerate() {
            if v < cfg.min_intensity {
                continue;
            }
            let leading = (i >= g + n).then(|| sum(i - g - n, i - g) / n as f64);
            let lagging = (i + g + n < rows).then(|| sum(i + g + 1, i + g + n + 1) / n as f64);
            let noise = match (leading, lagging) {
                (Some(a), Some(b)) => a.min(b),
                (Some(a), None) | (None, Some(a)) => a,
                (None, None) => unreachable!("column length checked above"),
            };
            if v > alpha * noise {
                out.push((i, col));
            }
        }
    }
    Ok(out)
}
