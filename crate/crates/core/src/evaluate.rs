//! Map quality metrics: rigid alignment, wall width, cosine similarity, KDE and Hellinger distance.

use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::spatial::VoxelGrid;
use crate::{Error, Result};

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
    pub residuals: Vec<f64>,
    pub mean_error: f64,
    /// Half-width of the 95% normal-approximation interval of the mean error.
    pub ci95_half_width: f64,
}

impl AlignmentResult {
    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }
}

/// Least-squares rotation and translation mapping `source[i]` onto `target[i]`.
pub fn rigid_align(source: &[Vector3<f64>], target: &[Vector3<f64>]) -> Result<AlignmentResult> {
    if source.len() != target.len() {
        return Err(Error::LengthMismatch(source.len(), target.len()));
    }
    let n = source.len();
    if n < 3 {
        return Err(Error::InsufficientPoints { required: 3, got: n });
    }
    let centroid = |pts: &[Vector3<f64>]| pts.iter().sum::<Vector3<f64>>() / n as f64;
    let (cs, ct) = (centroid(source), centroid(target));
    let mut cov = Matrix3::zeros();
    let mut spread = Matrix3::zeros();
    for (s, t) in source.iter().zip(target) {
        cov += (t - ct) * (s - cs).transpose();
        spread += (s - cs) * (s - cs).transpose();
    }
    let sv = spread.symmetric_eigenvalues();
    let (mut ev, max) = (sv.as_slice().to_vec(), sv.max());
    ev.sort_by(|a, b| b.total_cmp(a));
    if max <= 0.0 || ev[1] <= 1e-12 * max {
        return Err(Error::Collinear);
    }
    let svd = cov.svd(true, true);
    let (u, v_t) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let d = (u * v_t).determinant().signum();
    let rotation = u * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * v_t;
    let translation = ct - rotation * cs;
    let residuals: Vec<f64> = source
        .iter()
        .zip(target)
        .map(|(s, t)| (rotation * s + translation - t).norm())
        .collect();
    let mean_error = residuals.iter().sum::<f64>() / n as f64;
    let var = residuals.iter().map(|r| (r - mean_error).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok(AlignmentResult {
        rotation,
        translation,
        mean_error,
        ci95_half_width: Z95 * var.sqrt() / (n as f64).sqrt(),
        residuals,
    })
}

/// Maps world points into a frame with x along the wall, z up and y across the wall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallFrame {
    pub origin: [f64; 3],
    /// Horizontal direction of the wall.
    pub along: [f64; 3],
}

impl WallFrame {
    pub fn rotation(&self) -> Result<Rotation3<f64>> {
        let a = Vector3::new(self.along[0], self.along[1], 0.0);
        if a.norm() < 1e-12 {
            return Err(Error::InvalidParams("wall direction must have a horizontal component".into()));
        }
        let x = a.normalize();
        let z = Vector3::z();
        let y = z.cross(&x);
        Ok(Rotation3::from_matrix_unchecked(Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()])))
    }

    pub fn apply(&self, points: &[Vector3<f64>]) -> Result<Vec<Vector3<f64>>> {
        let r = self.rotation()?;
        let o = Vector3::from(self.origin);
        Ok(points.iter().map(|p| r * (p - o)).collect())
    }
}

/// Spread of y after discarding `trim_fraction` of the values at each end.
pub fn wall_width(points: &[Vector3<f64>], trim_fraction: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&trim_fraction) {
        return Err(Error::InvalidParams(format!("trim fraction {trim_fraction} outside [0, 0.5)")));
    }
    let mut ys: Vec<f64> = points.iter().map(|p| p.y).collect();
    ys.sort_by(f64::total_cmp);
    let k = (trim_fraction * ys.len() as f64).floor() as usize;
    let kept = &ys[k.min(ys.len())..ys.len().saturating_sub(k)];
    match (kept.first(), kept.last()) {
        (Some(lo), Some(hi)) => Ok(hi - lo),
        _ => Err(Error::EmptyAfterTrim),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correspondence {
    /// Each point of the first cloud pairs with its nearest neighbour in the second.
    #[default]
    NearestNeighbour,
    /// Points pair by index; clouds must have equal length.
    Ordered,
}

fn cosine(a: &Vector3<f64>, b: &Vector3<f64>) -> Option<f64> {
    let denom = (a.norm_squared() * b.norm_squared()).sqrt();
    (denom > 0.0).then(|| a.dot(b) / denom)
}

/// Mean cosine of the angle between corresponding position vectors.
/// Pairs involving the origin have no direction and are skipped.
pub fn mean_pairwise_cosine(a: &[Vector3<f64>], b: &[Vector3<f64>], mode: Correspondence) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let values: Vec<f64> = match mode {
        Correspondence::Ordered => {
            if a.len() != b.len() {
                return Err(Error::LengthMismatch(a.len(), b.len()));
            }
            a.iter().zip(b).filter_map(|(p, q)| cosine(p, q)).collect()
        }
        Correspondence::NearestNeighbour => {
            let grid = VoxelGrid::new(b, neighbour_cell(b));
            a.iter()
                .filter_map(|p| {
                    let (j, _) = grid.nearest(p)?;
                    cosine(p, &b[j])
                })
                .collect()
        }
    };
    if values.is_empty() {
        return Err(Error::EmptyCloud);
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Grid cell sized so that a cloud's bounding box holds about one point per cell.
fn neighbour_cell(points: &[Vector3<f64>]) -> f64 {
    let (lo, hi) = points.iter().fold(
        (Vector3::repeat(f64::INFINITY), Vector3::repeat(f64::NEG_INFINITY)),
        |(lo, hi), p| (lo.inf(p), hi.sup(p)),
    );
    let extent = (hi - lo).max();
    let cell = extent / (points.len() as f64).cbrt();
    if cell.is_finite() && cell > 1e-6 {
        cell
    } else {
        1.0
    }
}

/// Gaussian KDE sampled at bin centres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kde {
    pub centers: Vec<f64>,
    pub densities: Vec<f64>,
    pub bin_width: f64,
    pub bandwidth: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn linear_quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[i]
    }
}

/// `0.9 * min(std, IQR / 1.34) * n^(-1/5)`.
pub fn silverman_bandwidth(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::InsufficientPoints { required: 2, got: values.len() });
    }
    let (_, std) = mean_std(values);
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = linear_quantile(&sorted, 0.75) - linear_quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { std.min(iqr / 1.34) } else { std };
    if !(spread > 0.0) {
        return Err(Error::ZeroVariance);
    }
    Ok(0.9 * spread * (values.len() as f64).powf(-0.2))
}

/// KDE evaluated on `bins` centres evenly covering `[lo, hi]`, normalised so `Σ density * Δ = 1`.
pub fn kde_on_grid(values: &[f64], lo: f64, hi: f64, bins: usize, bandwidth: f64) -> Result<Kde> {
    if values.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if bins == 0 || !(hi > lo) || !(bandwidth > 0.0) {
        return Err(Error::InvalidParams(format!("bad KDE grid [{lo}, {hi}] x {bins}, bandwidth {bandwidth}")));
    }
    let dx = (hi - lo) / bins as f64;
    let centers: Vec<f64> = (0..bins).map(|i| lo + (i as f64 + 0.5) * dx).collect();
    let mut densities: Vec<f64> = centers
        .iter()
        .map(|c| values.iter().map(|v| (-0.5 * ((c - v) / bandwidth).powi(2)).exp()).sum::<f64>())
        .collect();
    let mass: f64 = densities.iter().sum::<f64>() * dx;
    if !(mass > 0.0) {
        return Err(Error::InvalidParams("KDE has no mass on the grid".into()));
    }
    densities.iter_mut().for_each(|d| *d /= mass);
    Ok(Kde {
        centers,
        densities,
        bin_width: dx,
        bandwidth,
    })
}

/// KDE over the data range; `bandwidth = None` uses Silverman's rule.
pub fn kde_1d(values: &[f64], bins: usize, bandwidth: Option<f64>) -> Result<Kde> {
    if values.len() < 2 {
        return Err(Error::InsufficientPoints { required: 2, got: values.len() });
    }
    let h = match bandwidth {
        Some(h) => h,
        None => silverman_bandwidth(values)?,
    };
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, u), v| (l.min(*v), u.max(*v)));
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 3.0 * h, hi + 3.0 * h) };
    kde_on_grid(values, lo, hi, bins, h)
}

/// Hellinger distance of two densities on the same bins.
///
/// Evaluated as `sqrt(Σ (sqrt p - sqrt q)^2 Δ / 2)`, which equals
/// `sqrt(1 - Σ sqrt(p q) Δ)` for normalised inputs and is exactly 0 for `p = q`.
pub fn hellinger(p: &[f64], q: &[f64], bin_width: f64) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::BinMismatch(format!("{} vs {} bins", p.len(), q.len())));
    }
    if !(bin_width > 0.0) {
        return Err(Error::BinMismatch(format!("bin width {bin_width}")));
    }
    let h2: f64 = 0.5 * p.iter().zip(q).map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2)).sum::<f64>() * bin_width;
    Ok(h2.sqrt().clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComparisonConfig {
    pub bins: usize,
    pub bandwidth: Option<f64>,
    pub trim_fraction: f64,
    pub correspondence: Correspondence,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        ComparisonConfig {
            bins: 100,
            bandwidth: None,
            trim_fraction: 0.05,
            correspondence: Correspondence::NearestNeighbour,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeReport {
    pub centers: Vec<f64>,
    pub density_a: Vec<f64>,
    pub density_b: Vec<f64>,
    pub bin_width: f64,
    pub bandwidth_a: f64,
    pub bandwidth_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionComparison {
    pub wall_width_a: f64,
    pub wall_width_b: f64,
    pub width_diff: f64,
    pub mean_cosine: f64,
    pub hellinger: f64,
    pub kde: KdeReport,
}

/// Compares two clouds already expressed in a wall-aligned frame. The KDEs are
/// taken along the wall (x) on a grid spanning both clouds.
pub fn compare_clouds(a: &[Vector3<f64>], b: &[Vector3<f64>], cfg: &ComparisonConfig) -> Result<DistributionComparison> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InsufficientPoints { required: 2, got: a.len().min(b.len()) });
    }
    let wall_width_a = wall_width(a, cfg.trim_fraction)?;
    let wall_width_b = wall_width(b, cfg.trim_fraction)?;
    let mean_cosine = mean_pairwise_cosine(a, b, cfg.correspondence)?;
    let xa: Vec<f64> = a.iter().map(|p| p.x).collect();
    let xb: Vec<f64> = b.iter().map(|p| p.x).collect();
    let (ha, hb) = match cfg.bandwidth {
        Some(h) => (h, h),
        None => (silverman_bandwidth(&xa)?, silverman_bandwidth(&xb)?),
    };
    let (lo, hi) = xa.iter().chain(&xb).fold((f64::INFINITY, f64::NEG_INFINITY), |(l, u), v| (l.min(*v), u.max(*v)));
    let ka = kde_on_grid(&xa, lo, hi, cfg.bins, ha)?;
    let kb = kde_on_grid(&xb, lo, hi, cfg.bins, hb)?;
    let hellinger = hellinger(&ka.densities, &kb.densities, ka.bin_width)?;
    Ok(DistributionComparison {
        wall_width_a,
        wall_width_b,
        width_diff: wall_width_a - wall_width_b,
        mean_cosine,
        hellinger,
        kde: KdeReport {
            centers: ka.centers,
            density_a: ka.densities,
            density_b: kb.densities,
            bin_width: ka.bin_width,
            bandwidth_a: ha,
            bandwidth_b: hb,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_distr::{Distribution, StandardNormal};

    fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(seed)
    }

    fn cloud(seed: u64, n: usize) -> Vec<Vector3<f64>> {
        let mut r = rng(seed);
        (0..n)
            .map(|_| Vector3::new(r.random_range(-2.0..2.0), r.random_range(-2.0..2.0), r.random_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn align_identity() {
        let a = cloud(1, 20);
        let r = rigid_align(&a, &a).unwrap();
        assert!((r.rotation - Matrix3::identity()).abs().max() < 1e-12);
        assert!(r.translation.norm() < 1e-12);
        assert!(r.residuals.iter().all(|e| *e < 1e-12));
    }

    #[test]
    fn align_recovers_known_transform() {
        let a = cloud(2, 30);
        let rot = Rotation3::from_axis_angle(&Vector3::z_axis(), std::f64::consts::FRAC_PI_2);
        let t = Vector3::new(1.0, 2.0, 0.0);
        let b: Vec<_> = a.iter().map(|p| rot * p + t).collect();
        let r = rigid_align(&a, &b).unwrap();
        assert!((r.rotation - rot.matrix()).abs().max() < 1e-9);
        assert!((r.translation - t).norm() < 1e-9);
        assert!(r.mean_error < 1e-9);
    }

    #[test]
    fn align_planar_set_is_proper_rotation() {
        let a: Vec<_> = cloud(3, 25).into_iter().map(|p| Vector3::new(p.x, p.y, 0.0)).collect();
        let b: Vec<_> = a.iter().map(|p| Vector3::new(p.x, p.y, 1e-6 * p.x)).collect();
        let r = rigid_align(&a, &b).unwrap();
        assert!((r.rotation.determinant() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn align_errors_and_interval() {
        let a = cloud(4, 2);
        assert!(matches!(rigid_align(&a, &a), Err(Error::InsufficientPoints { .. })));
        let line: Vec<_> = (0..5).map(|i| Vector3::new(i as f64, 2.0 * i as f64, 0.0)).collect();
        assert!(matches!(rigid_align(&line, &line), Err(Error::Collinear)));
        assert!(rigid_align(&cloud(5, 4), &cloud(6, 5)).is_err());
        // residual statistics: normal-approximation interval with sample std
        let src = cloud(7, 10);
        let mut r = rng(8);
        let dst: Vec<_> = src.iter().map(|p| p + Vector3::new(r.random_range(-0.1..0.1), r.random_range(-0.1..0.1), 0.0)).collect();
        let res = rigid_align(&src, &dst).unwrap();
        let n = res.residuals.len() as f64;
        let m = res.residuals.iter().sum::<f64>() / n;
        let s = (res.residuals.iter().map(|e| (e - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((res.ci95_half_width - 1.96 * s / n.sqrt()).abs() < 1e-4 * s);
    }

    #[test]
    fn width_cases() {
        let mut r = rng(9);
        let pts: Vec<_> = (0..1000).map(|_| Vector3::new(0.0, r.random_range(0.0..1.0), 0.0)).collect();
        let mut ys: Vec<f64> = pts.iter().map(|p| p.y).collect();
        ys.sort_by(f64::total_cmp);
        let w = wall_width(&pts, 0.05).unwrap();
        assert_eq!(w, ys[949] - ys[50]);
        assert!((w - 0.9).abs() < 0.03);
        assert_eq!(wall_width(&pts, 0.0).unwrap(), ys[999] - ys[0]);
        let flat = vec![Vector3::new(1.0, 0.3, 2.0); 10];
        assert_eq!(wall_width(&flat, 0.05).unwrap(), 0.0);
        assert!(matches!(wall_width(&[], 0.05), Err(Error::EmptyAfterTrim)));
    }

    #[test]
    fn wall_frame_axes() {
        let f = WallFrame { origin: [1.0, 0.0, 0.0], along: [0.0, 1.0, 0.0] };
        let p = f.apply(&[Vector3::new(1.0, 2.0, 3.0), Vector3::new(0.0, 0.0, 0.0)]).unwrap();
        assert!((p[0] - Vector3::new(2.0, 0.0, 3.0)).norm() < 1e-12);
        assert!((p[1] - Vector3::new(0.0, 1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn cosine_cases() {
        let a = cloud(10, 50);
        assert_eq!(mean_pairwise_cosine(&a, &a, Correspondence::NearestNeighbour).unwrap(), 1.0);
        let neg: Vec<_> = a.iter().map(|p| -p).collect();
        assert!((mean_pairwise_cosine(&a, &neg, Correspondence::Ordered).unwrap() + 1.0).abs() < 1e-15);
        let a3 = [Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.0, 2.0, 0.0), Vector3::new(1.0, 1.0, 0.0)];
        let b3 = [Vector3::new(1.0, 1.0, 0.0), Vector3::new(0.0, 1.0, 1.0), Vector3::new(-1.0, 1.0, 0.0)];
        let expected = (1.0 / 2f64.sqrt() + 1.0 / 2f64.sqrt() + 0.0) / 3.0;
        assert!((mean_pairwise_cosine(&a3, &b3, Correspondence::Ordered).unwrap() - expected).abs() < 1e-15);
        assert!(mean_pairwise_cosine(&[], &a3, Correspondence::Ordered).is_err());
    }

    #[test]
    fn nearest_neighbour_pairing() {
        let a = [Vector3::new(1.0, 0.0, 0.0)];
        let b = [Vector3::new(0.0, 5.0, 0.0), Vector3::new(1.1, 0.1, 0.0)];
        let got = mean_pairwise_cosine(&a, &b, Correspondence::NearestNeighbour).unwrap();
        assert!((got - 1.1 / (1.1f64 * 1.1 + 0.01).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn kde_normalisation_and_normal_peak() {
        let k = kde_1d(&[0.0, 1.0], 100, Some(10.0)).unwrap();
        assert!((k.densities.iter().sum::<f64>() * k.bin_width - 1.0).abs() < 1e-6);
        let spread = k.densities.iter().cloned().fold(f64::NEG_INFINITY, f64::max) / k.densities.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread < 1.01);
        let mut r = rng(11);
        let xs: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut r)).collect();
        let k = kde_1d(&xs, 100, None).unwrap();
        let i = k.centers.iter().enumerate().min_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).unwrap().0;
        assert!((k.densities[i] - 0.398_942_28).abs() < 0.15 * 0.398_942_28);
        assert!(matches!(kde_1d(&[2.0, 2.0, 2.0], 100, None), Err(Error::ZeroVariance)));
    }

    #[test]
    fn hellinger_cases() {
        let k = kde_1d(&[0.0, 0.3, 1.0, 2.0], 100, None).unwrap();
        assert_eq!(hellinger(&k.densities, &k.densities, k.bin_width).unwrap(), 0.0);
        let p = [2.0, 0.0];
        let q = [0.0, 2.0];
        assert_eq!(hellinger(&p, &q, 0.5).unwrap(), 1.0);
        assert!(matches!(hellinger(&p, &[1.0], 0.5), Err(Error::BinMismatch(_))));
    }

    #[test]
    fn hellinger_gaussian_pair() {
        let pdf = |x: f64, m: f64| (-0.5 * (x - m).powi(2)).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let (lo, hi, n) = (-10.0, 11.0, 4000);
        let dx = (hi - lo) / n as f64;
        let xs: Vec<f64> = (0..n).map(|i| lo + (i as f64 + 0.5) * dx).collect();
        let p: Vec<f64> = xs.iter().map(|&x| pdf(x, 0.0)).collect();
        let q: Vec<f64> = xs.iter().map(|&x| pdf(x, 1.0)).collect();
        let h = hellinger(&p, &q, dx).unwrap();
        // independent numeric integration of the Bhattacharyya coefficient (Simpson, fine grid)
        let m = 200_000;
        let step = (hi - lo) / m as f64;
        let f = |x: f64| (pdf(x, 0.0) * pdf(x, 1.0)).sqrt();
        let mut bc = f(lo) + f(hi);
        for i in 1..m {
            bc += f(lo + i as f64 * step) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        bc *= step / 3.0;
        let numeric = (1.0 - bc).sqrt();
        assert!((h - numeric).abs() < 1e-3);
        assert!((h - (1.0 - (-0.125f64).exp()).sqrt()).abs() < 1e-3);
        assert!((h - 0.3425).abs() < 1e-3);
    }

    #[test]
    fn compare_identical_clouds() {
        let a = cloud(12, 200);
        let c = compare_clouds(&a, &a, &ComparisonConfig::default()).unwrap();
        assert_eq!(c.hellinger, 0.0);
        assert_eq!(c.mean_cosine, 1.0);
        assert_eq!(c.width_diff, 0.0);
        assert_eq!(c.kde.centers.len(), 100);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn kde_integrates_to_one(vals in proptest::collection::vec(-100.0f64..100.0, 2..60), bins in 5usize..150) {
            prop_assume!(vals.iter().any(|v| *v != vals[0]));
            if let Ok(k) = kde_1d(&vals, bins, None) {
                prop_assert!(k.densities.iter().all(|d| *d >= 0.0));
                prop_assert!((k.densities.iter().sum::<f64>() * k.bin_width - 1.0).abs() < 1e-6);
            }
        }

        #[test]
        fn hellinger_symmetric_and_bounded(a in proptest::collection::vec(0.0f64..5.0, 30), b in proptest::collection::vec(0.0f64..5.0, 30)) {
            let sa: f64 = a.iter().sum::<f64>() * 0.1;
            let sb: f64 = b.iter().sum::<f64>() * 0.1;
            prop_assume!(sa > 0.0 && sb > 0.0);
            let p: Vec<f64> = a.iter().map(|v| v / sa).collect();
            let q: Vec<f64> = b.iter().map(|v| v / sb).collect();
            let h1 = hellinger(&p, &q, 0.1).unwrap();
            prop_assert_eq!(h1, hellinger(&q, &p, 0.1).unwrap());
            prop_assert!((0.0..=1.0).contains(&h1));
        }

        #[test]
        fn alignment_exact_on_rigid_copies(seed in 0u64..500, angle in -3.0f64..3.0, t in proptest::array::uniform3(-5.0f64..5.0)) {
            let a = cloud(seed, 12);
            let rot = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(Vector3::new(0.3, -0.5, 1.0)), angle);
            let b: Vec<_> = a.iter().map(|p| rot * p + Vector3::from(t)).collect();
            let r = rigid_align(&a, &b).unwrap();
            prop_assert!((r.rotation.determinant() - 1.0).abs() < 1e-9);
            prop_assert!((r.rotation.transpose() * r.rotation - Matrix3::identity()).abs().max() < 1e-9);
            prop_assert!(r.residuals.iter().all(|e| *e < 1e-9));
        }
    }
}
