//! Cross-sonar association: clusters are paired first, then features within each
//! cluster pair, and every matched feature pair is fused into one 3-D point.

use nalgebra::{SVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::assignment;
use crate::detect::{dbscan, soca_cfar, CfarConfig, DbscanConfig, FeaturePoint};
use crate::geometry::{OverlapRegion, SonarExtrinsics};
use crate::sonar::{PolarSonarImage, SonarSide};
use crate::{Error, Result};

type Descriptor = SVector<f64, 4>;

/// Summary of a cluster's extent along x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterDescriptor {
    pub mu: f64,
    /// Population variance.
    pub sigma2: f64,
    pub x_min: f64,
    pub x_max: f64,
}

impl ClusterDescriptor {
    pub fn vector(&self) -> Descriptor {
        Descriptor::new(self.mu, self.sigma2, self.x_min, self.x_max)
    }
}

pub fn cluster_descriptor(members: &[FeaturePoint]) -> Result<ClusterDescriptor> {
    if members.is_empty() {
        return Err(Error::EmptyCluster);
    }
    let n = members.len() as f64;
    let mu = members.iter().map(|f| f.x()).sum::<f64>() / n;
    let sigma2 = members.iter().map(|f| (f.x() - mu).powi(2)).sum::<f64>() / n;
    let (x_min, x_max) = members
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), f| (lo.min(f.x()), hi.max(f.x())));
    Ok(ClusterDescriptor {
        mu: mu.clamp(x_min, x_max),
        sigma2,
        x_min,
        x_max,
    })
}

/// Position, intensity and local intensity context of one feature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub x: f64,
    pub gamma: f64,
    pub gamma_bar_a: f64,
    pub gamma_bar_b: f64,
}

impl FeatureDescriptor {
    pub fn vector(&self) -> Descriptor {
        Descriptor::new(self.x, self.gamma, self.gamma_bar_a, self.gamma_bar_b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DescriptorConfig {
    /// Cells in each neighbourhood mean, centred on the feature (odd).
    pub window: usize,
    /// Divide each descriptor component by its standard deviation over both sides before matching.
    pub normalize: bool,
}

impl Default for DescriptorConfig {
    fn default() -> Self {
        DescriptorConfig {
            window: 3,
            normalize: false,
        }
    }
}

impl DescriptorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.window.is_multiple_of(2) {
            return Err(Error::Config(format!("descriptor window {} must be odd", self.window)));
        }
        Ok(())
    }
}

/// `gamma_bar_a` averages along range and `gamma_bar_b` along bearing for
/// horizontal features; vertical features carry the two means swapped.
/// Windows are clamped to the image (replicate padding).
pub fn feature_descriptor(f: &FeaturePoint, img: &PolarSonarImage, window: usize) -> FeatureDescriptor {
    let (bin, col) = f.polar_origin;
    let half = (window / 2) as isize;
    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;
    let (rows, cols) = (img.num_range_bins(), img.num_beams());
    let (mut along_range, mut along_bearing) = (0.0, 0.0);
    for k in -half..=half {
        along_range += img.get(clamp(bin as isize + k, rows), col);
        along_bearing += img.get(bin, clamp(col as isize + k, cols));
    }
    let w = (2 * half + 1) as f64;
    let (a, b) = (along_range / w, along_bearing / w);
    let (gamma_bar_a, gamma_bar_b) = match f.source {
        SonarSide::Horizontal => (a, b),
        SonarSide::Vertical => (b, a),
    };
    FeatureDescriptor {
        x: f.x(),
        gamma: img.get(bin, col),
        gamma_bar_a,
        gamma_bar_b,
    }
}

fn component_scale(h: &[Descriptor], v: &[Descriptor]) -> Descriptor {
    let all: Vec<&Descriptor> = h.iter().chain(v).collect();
    let n = all.len() as f64;
    let mean = all.iter().fold(Descriptor::zeros(), |acc, d| acc + *d) / n;
    let var = all
        .iter()
        .fold(Descriptor::zeros(), |acc, d| acc + (*d - mean).component_mul(&(*d - mean)))
        / n;
    var.map(|s2| if s2 > 0.0 { s2.sqrt() } else { 1.0 })
}

/// Minimum total L2 cost one-to-one pairing of descriptor vectors.
fn match_descriptors(h: &[Descriptor], v: &[Descriptor], normalize: bool) -> Result<Vec<(usize, usize)>> {
    if h.is_empty() || v.is_empty() {
        return Ok(Vec::new());
    }
    let scale = if normalize {
        component_scale(h, v)
    } else {
        Descriptor::repeat(1.0)
    };
    let mut cost = Vec::with_capacity(h.len() * v.len());
    for a in h {
        for b in v {
            cost.push((a - b).component_div(&scale).norm());
        }
    }
    Ok(assignment::solve(&cost, h.len(), v.len())?.pairs)
}

/// Pairs horizontal and vertical clusters; unmatched clusters on the larger side are dropped.
pub fn match_clusters(
    h: &[ClusterDescriptor],
    v: &[ClusterDescriptor],
    normalize: bool,
) -> Result<Vec<(usize, usize)>> {
    let hv: Vec<_> = h.iter().map(ClusterDescriptor::vector).collect();
    let vv: Vec<_> = v.iter().map(ClusterDescriptor::vector).collect();
    match_descriptors(&hv, &vv, normalize)
}

/// Pairs features of one matched cluster pair; returns indices into `h` and `v`.
pub fn match_features(
    h: &[FeaturePoint],
    v: &[FeaturePoint],
    h_img: &PolarSonarImage,
    v_img: &PolarSonarImage,
    cfg: &DescriptorConfig,
) -> Result<Vec<(usize, usize)>> {
    cfg.validate()?;
    let hd: Vec<_> = h.iter().map(|f| feature_descriptor(f, h_img, cfg.window).vector()).collect();
    let vd: Vec<_> = v.iter().map(|f| feature_descriptor(f, v_img, cfg.window).vector()).collect();
    match_descriptors(&hd, &vd, cfg.normalize)
}

/// A 3-D point reconstructed from one horizontal and one vertical feature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusedPoint {
    pub position: Vector3<f64>,
    pub intensity: f64,
    /// Indices of the source features in their side's feature list.
    pub horizontal_id: usize,
    pub vertical_id: usize,
}

/// Componentwise mean of the two feature positions.
pub fn fuse(h: &FeaturePoint, v: &FeaturePoint) -> Vector3<f64> {
    (h.position + v.position) * 0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StereoConfig {
    pub horizontal_cfar: CfarConfig,
    pub vertical_cfar: CfarConfig,
    pub dbscan: DbscanConfig,
    pub descriptor: DescriptorConfig,
}

impl Default for StereoConfig {
    fn default() -> Self {
        StereoConfig {
            horizontal_cfar: CfarConfig::horizontal(),
            vertical_cfar: CfarConfig::vertical(),
            dbscan: DbscanConfig::default(),
            descriptor: DescriptorConfig::default(),
        }
    }
}

/// Everything produced for one frame pair; feature positions are in the horizontal frame.
#[derive(Debug, Clone, Default)]
pub struct StereoOutput {
    pub horizontal: Vec<FeaturePoint>,
    pub vertical: Vec<FeaturePoint>,
    pub cluster_pairs: Vec<(usize, usize)>,
    pub fused: Vec<FusedPoint>,
}

/// CFAR detections of one image, projected into the horizontal frame and trimmed to the overlap.
pub fn overlap_features(
    img: &PolarSonarImage,
    side: SonarSide,
    cfar: &CfarConfig,
    ext: &SonarExtrinsics,
    region: &OverlapRegion,
) -> Result<Vec<FeaturePoint>> {
    let intr = img.intrinsics();
    let mut out = Vec::new();
    for (bin, col) in soca_cfar(img, cfar)? {
        let mut p = intr.project_cell(bin, col, img.get(bin, col));
        if side == SonarSide::Vertical {
            p = ext.to_horizontal(&p);
        }
        if region.contains(&p.vector()) {
            out.push(FeaturePoint::new(p, side, (bin, col)));
        }
    }
    Ok(out)
}

/// Member indices per cluster id, noise excluded.
pub fn cluster_members(features: &[FeaturePoint], count: usize) -> Vec<Vec<usize>> {
    let mut members = vec![Vec::new(); count];
    for (i, f) in features.iter().enumerate() {
        if let Some(c) = f.cluster_id {
            members[c].push(i);
        }
    }
    members
}

pub fn stereo_pipeline(
    h_img: &PolarSonarImage,
    v_img: &PolarSonarImage,
    ext: &SonarExtrinsics,
    cfg: &StereoConfig,
) -> Result<StereoOutput> {
    cfg.descriptor.validate()?;
    let region = OverlapRegion::new(h_img.intrinsics(), v_img.intrinsics(), ext);
    let mut h = overlap_features(h_img, SonarSide::Horizontal, &cfg.horizontal_cfar, ext, &region)?;
    let mut v = overlap_features(v_img, SonarSide::Vertical, &cfg.vertical_cfar, ext, &region)?;
    let hn = dbscan(&mut h, &cfg.dbscan)?;
    let vn = dbscan(&mut v, &cfg.dbscan)?;
    let h_members = cluster_members(&h, hn);
    let v_members = cluster_members(&v, vn);
    let gather = |feats: &[FeaturePoint], idx: &[usize]| -> Vec<FeaturePoint> { idx.iter().map(|&i| feats[i]).collect() };

    let h_desc = h_members
        .iter()
        .map(|m| cluster_descriptor(&gather(&h, m)))
        .collect::<Result<Vec<_>>>()?;
    let v_desc = v_members
        .iter()
        .map(|m| cluster_descriptor(&gather(&v, m)))
        .collect::<Result<Vec<_>>>()?;
    let cluster_pairs = match_clusters(&h_desc, &v_desc, cfg.descriptor.normalize)?;

    let mut fused = Vec::new();
    for &(hc, vc) in &cluster_pairs {
        let (hm, vm) = (&h_members[hc], &v_members[vc]);
        let pairs = match_features(&gather(&h, hm), &gather(&v, vm), h_img, v_img, &cfg.descriptor)?;
        for (a, b) in pairs {
            let (hi, vi) = (hm[a], vm[b]);
            fused.push(FusedPoint {
                position: fuse(&h[hi], &v[vi]),
                intensity: 0.5 * (h[hi].intensity + v[vi].intensity),
                horizontal_id: hi,
                vertical_id: vi,
            });
        }
    }
    Ok(StereoOutput {
        horizontal: h,
        vertical: v,
        cluster_pairs,
        fused,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sonar::{CartesianPoint, SonarIntrinsics};
    use ndarray::Array2;
    use proptest::prelude::*;

    fn feat(x: f64, y: f64, z: f64, side: SonarSide, origin: (usize, usize)) -> FeaturePoint {
        FeaturePoint::new(CartesianPoint::new(x, y, z, 150.0), side, origin)
    }

    fn xs(v: &[f64]) -> Vec<FeaturePoint> {
        v.iter().map(|&x| feat(x, 0.0, 0.0, SonarSide::Horizontal, (0, 0))).collect()
    }

    #[test]
    fn cluster_descriptor_cases() {
        let d = cluster_descriptor(&xs(&[2.0])).unwrap();
        assert_eq!((d.mu, d.sigma2, d.x_min, d.x_max), (2.0, 0.0, 2.0, 2.0));
        let d = cluster_descriptor(&xs(&[1.0, 3.0])).unwrap();
        assert_eq!((d.mu, d.sigma2, d.x_min, d.x_max), (2.0, 1.0, 1.0, 3.0));
        let d = cluster_descriptor(&xs(&[5.0, 5.0, 5.0])).unwrap();
        assert_eq!((d.mu, d.sigma2, d.x_min, d.x_max), (5.0, 0.0, 5.0, 5.0));
        assert!(matches!(cluster_descriptor(&[]), Err(Error::EmptyCluster)));
    }

    fn cd(mu: f64, sigma2: f64, x_min: f64, x_max: f64) -> ClusterDescriptor {
        ClusterDescriptor { mu, sigma2, x_min, x_max }
    }

    #[test]
    fn cluster_matching() {
        let h = [cd(0.0, 0.0, 0.0, 0.0)];
        let v = [cd(0.0, 0.0, 0.0, 0.0), cd(9.0, 0.0, 9.0, 9.0)];
        assert_eq!(match_clusters(&h, &v, false).unwrap(), vec![(0, 0)]);
        let same = [cd(1.0, 0.1, 0.5, 1.5), cd(3.0, 0.2, 2.5, 3.5), cd(6.0, 0.0, 6.0, 6.0)];
        assert_eq!(match_clusters(&same, &same, false).unwrap(), vec![(0, 0), (1, 1), (2, 2)]);
        assert!(match_clusters(&[], &same, false).unwrap().is_empty());
    }

    fn perms(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in perms(n - 1) {
            for k in 0..=p.len() {
                let mut q = p.clone();
                q.insert(k, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn three_by_three_matches_permutation_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let mut gen = || cd(rng.random_range(0.0..5.0), rng.random_range(0.0..1.0), rng.random_range(0.0..5.0), rng.random_range(0.0..5.0));
            let h: Vec<_> = (0..3).map(|_| gen()).collect();
            let v: Vec<_> = (0..3).map(|_| gen()).collect();
            let cost = |i: usize, j: usize| (h[i].vector() - v[j].vector()).norm();
            let best = perms(3)
                .iter()
                .map(|p| (0..3).map(|i| cost(i, p[i])).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            let got: f64 = match_clusters(&h, &v, false).unwrap().iter().map(|&(i, j)| cost(i, j)).sum();
            assert!((got - best).abs() < 1e-9);
        }
    }

    fn image(data: Array2<f64>) -> PolarSonarImage {
        let (r, c) = data.dim();
        let intr = SonarIntrinsics::new(c, r, 10.0, -0.5, 0.5, 0.3, 8).unwrap();
        PolarSonarImage::new(intr, data, 0.0).unwrap()
    }

    #[test]
    fn descriptor_constant_image() {
        let img = image(Array2::from_elem((8, 8), 42.0));
        let d = feature_descriptor(&feat(1.0, 0.0, 0.0, SonarSide::Horizontal, (3, 3)), &img, 3);
        assert_eq!((d.gamma, d.gamma_bar_a, d.gamma_bar_b), (42.0, 42.0, 42.0));
    }

    #[test]
    fn descriptor_axes_and_swap() {
        let mut data = Array2::zeros((8, 8));
        data[[2, 4]] = 10.0;
        data[[3, 4]] = 20.0;
        data[[4, 4]] = 30.0;
        data[[3, 3]] = 5.0;
        data[[3, 5]] = 5.0;
        let img = image(data);
        let h = feature_descriptor(&feat(1.0, 0.0, 0.0, SonarSide::Horizontal, (3, 4)), &img, 3);
        assert_eq!((h.gamma, h.gamma_bar_a, h.gamma_bar_b), (20.0, 20.0, 10.0));
        let v = feature_descriptor(&feat(1.0, 0.0, 0.0, SonarSide::Vertical, (3, 4)), &img, 3);
        assert_eq!((v.gamma_bar_a, v.gamma_bar_b), (10.0, 20.0));
    }

    #[test]
    fn descriptor_border_matches_padded_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let data = Array2::from_shape_fn((6, 5), |_| rng.random_range(0..256u32) as f64);
        let img = image(data.clone());
        // explicit replicate-padded copy
        let padded = Array2::from_shape_fn((8, 7), |(r, c)| data[[r.saturating_sub(1).min(5), c.saturating_sub(1).min(4)]]);
        for (bin, col) in [(0, 0), (5, 4), (0, 4), (5, 0), (2, 0)] {
            let d = feature_descriptor(&feat(0.0, 0.0, 0.0, SonarSide::Horizontal, (bin, col)), &img, 3);
            let (pr, pc) = (bin + 1, col + 1);
            let a = (padded[[pr - 1, pc]] + padded[[pr, pc]] + padded[[pr + 1, pc]]) / 3.0;
            let b = (padded[[pr, pc - 1]] + padded[[pr, pc]] + padded[[pr, pc + 1]]) / 3.0;
            assert!((d.gamma_bar_a - a).abs() < 1e-12 && (d.gamma_bar_b - b).abs() < 1e-12);
        }
    }

    #[test]
    fn feature_matching_size_law_and_singletons() {
        let img = image(Array2::from_elem((8, 8), 100.0));
        let h = [feat(1.0, 0.0, 0.0, SonarSide::Horizontal, (1, 1))];
        let v = [feat(1.0, 0.0, 0.3, SonarSide::Vertical, (1, 1))];
        let cfg = DescriptorConfig::default();
        assert_eq!(match_features(&h, &v, &img, &img, &cfg).unwrap(), vec![(0, 0)]);
        let h: Vec<_> = (0..3).map(|i| feat(i as f64, 0.0, 0.0, SonarSide::Horizontal, (i, 0))).collect();
        let v: Vec<_> = (0..5).map(|i| feat(10.0 + i as f64, 0.0, 0.0, SonarSide::Vertical, (i, 1))).collect();
        let pairs = match_features(&h, &v, &img, &img, &cfg).unwrap();
        assert_eq!(pairs.len(), 3);
    }

    #[test]
    fn fuse_cases() {
        let a = feat(1.0, 2.0, 3.0, SonarSide::Horizontal, (0, 0));
        let b = feat(3.0, 2.0, 1.0, SonarSide::Vertical, (0, 0));
        assert_eq!(fuse(&a, &b), Vector3::new(2.0, 2.0, 2.0));
        assert_eq!(fuse(&a, &a), a.position);
        let o = feat(0.0, 0.0, 0.0, SonarSide::Horizontal, (0, 0));
        let one = feat(1.0, 1.0, 1.0, SonarSide::Vertical, (0, 0));
        assert_eq!(fuse(&o, &one), Vector3::new(0.5, 0.5, 0.5));
    }

    #[test]
    fn empty_frames_give_empty_output() {
        let h = PolarSonarImage::zeros(SonarIntrinsics::horizontal_default(), 0.0);
        let v = PolarSonarImage::zeros(SonarIntrinsics::vertical_default(), 0.0);
        let out = stereo_pipeline(&h, &v, &SonarExtrinsics::default(), &StereoConfig::default()).unwrap();
        assert!(out.fused.is_empty() && out.horizontal.is_empty() && out.vertical.is_empty());
    }

    proptest! {
        #[test]
        fn fuse_symmetric(a in proptest::array::uniform3(-50.0f64..50.0), b in proptest::array::uniform3(-50.0f64..50.0)) {
            let fa = feat(a[0], a[1], a[2], SonarSide::Horizontal, (0, 0));
            let fb = feat(b[0], b[1], b[2], SonarSide::Vertical, (0, 0));
            prop_assert_eq!(fuse(&fa, &fb), fuse(&fb, &fa));
            prop_assert_eq!(fuse(&fa, &fa), fa.position);
        }

        #[test]
        fn feature_matching_is_injective_and_optimal(n in 1usize..7, m in 1usize..7, seed in 0u64..10_000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let data = Array2::from_shape_fn((12, 12), |_| rng.random_range(0..256u32) as f64);
            let img = image(data);
            let mut mk = |side, k: usize| -> Vec<FeaturePoint> {
                (0..k).map(|_| feat(rng.random_range(0.0..3.0), 0.0, 0.0, side, (rng.random_range(0..12), rng.random_range(0..12)))).collect()
            };
            let h = mk(SonarSide::Horizontal, n);
            let v = mk(SonarSide::Vertical, m);
            let cfg = DescriptorConfig::default();
            let pairs = match_features(&h, &v, &img, &img, &cfg).unwrap();
            prop_assert_eq!(pairs.len(), n.min(m));
            let hd: Vec<_> = h.iter().map(|f| feature_descriptor(f, &img, 3).vector()).collect();
            let vd: Vec<_> = v.iter().map(|f| feature_descriptor(f, &img, 3).vector()).collect();
            let cost = |i: usize, j: usize| (hd[i] - vd[j]).norm();
            let got: f64 = pairs.iter().map(|&(i, j)| cost(i, j)).sum();
            // exhaustive: permute the larger side, take the first min(n, m)
            let (small, large) = (n.min(m), n.max(m));
            let best = perms(large)
                .iter()
                .map(|p| (0..small).map(|k| if n <= m { cost(k, p[k]) } else { cost(p[k], k) }).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            prop_assert!((got - best).abs() < 1e-9);
            let mut hs: Vec<_> = pairs.iter().map(|p| p.0).collect();
            let mut vs: Vec<_> = pairs.iter().map(|p| p.1).collect();
            hs.sort_unstable(); hs.dedup(); vs.sort_unstable(); vs.dedup();
            prop_assert_eq!(hs.len(), pairs.len());
            prop_assert_eq!(vs.len(), pairs.len());
        }
    }
}
