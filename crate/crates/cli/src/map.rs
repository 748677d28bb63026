//! Frame pairing, per-frame processing and map assembly.

use std::collections::BTreeMap;

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use seasky_core::associate::{stereo_pipeline, FusedPoint};
use seasky_core::geometry::{RigidTransform, SonarExtrinsics};
use seasky_core::leading_edge::detect_leading_edge;
use seasky_core::mapping::{select_keyframes, MapChannel, SeabedSkyMap};
use seasky_core::preprocess::PreprocessConfig;
use seasky_core::{CartesianPoint, PolarSonarImage, SonarSide};

use crate::config::PipelineConfig;
use crate::dataset::Dataset;
use crate::CliError;

/// Pairs frames whose timestamps differ by at most `window`.
///
/// Candidates are taken in order of increasing gap; equal gaps go to the
/// earlier frames. Each frame is used at most once. Output is sorted by the
/// horizontal index.
pub fn pair_frames(horizontal: &[f64], vertical: &[f64], window: f64) -> Vec<(usize, usize)> {
    let mut candidates = Vec::new();
    for (i, th) in horizontal.iter().enumerate() {
        // vertical stamps are sorted: only a small neighbourhood can be in range
        let start = vertical.partition_point(|tv| *tv < th - window);
        for (j, tv) in vertical.iter().enumerate().skip(start) {
            if *tv > th + window {
                break;
            }
            candidates.push(((th - tv).abs(), i, j));
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)).then(a.1.cmp(&b.1)));
    let mut used_h = vec![false; horizontal.len()];
    let mut used_v = vec![false; vertical.len()];
    let mut pairs = Vec::new();
    for (_, i, j) in candidates {
        if !used_h[i] && !used_v[j] {
            used_h[i] = true;
            used_v[j] = true;
            pairs.push((i, j));
        }
    }
    pairs.sort_unstable();
    pairs
}

/// Everything computed from one frame pair, in sensor frames.
#[derive(Debug, Clone)]
pub struct PairResult {
    pub timestamp: f64,
    pub fused: Vec<FusedPoint>,
    pub horizontal_features: usize,
    pub vertical_features: usize,
}

fn preprocess(img: &PolarSonarImage, cfg: &PreprocessConfig, bypass: bool) -> seasky_core::Result<PolarSonarImage> {
    if bypass {
        Ok(img.clone())
    } else {
        cfg.run(img)
    }
}

/// Preprocessing, leading edges and stereo fusion for one frame pair.
pub fn process_pair(
    h: &PolarSonarImage,
    v: &PolarSonarImage,
    ext: &SonarExtrinsics,
    cfg: &PipelineConfig,
) -> seasky_core::Result<(PolarSonarImage, PolarSonarImage, PairResult)> {
    let hp = preprocess(h, &cfg.preprocess.horizontal, cfg.preprocess.bypass)?;
    let vp = preprocess(v, &cfg.preprocess.vertical, cfg.preprocess.bypass)?;
    let out = stereo_pipeline(&hp, &vp, ext, &cfg.stereo())?;
    let result = PairResult {
        timestamp: h.timestamp(),
        fused: out.fused,
        horizontal_features: out.horizontal.len(),
        vertical_features: out.vertical.len(),
    };
    Ok((hp, vp, result))
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct MapMetrics {
    pub poses: usize,
    pub keyframes: usize,
    pub horizontal_frames: usize,
    pub vertical_frames: usize,
    pub skipped_frames: usize,
    pub frame_pairs: usize,
    pub lidar_scans: usize,
    pub horizontal_features: usize,
    pub vertical_features: usize,
    pub fused_points: usize,
    pub rejected_points: BTreeMap<&'static str, usize>,
    pub channel_counts: BTreeMap<&'static str, usize>,
}

pub struct MapRun {
    pub map: SeabedSkyMap,
    pub metrics: MapMetrics,
    pub fused_by_pair: Vec<PairResult>,
}

struct Batch {
    timestamp: f64,
    channel: MapChannel,
    points: Vec<CartesianPoint>,
}

pub fn build_map(cfg: &PipelineConfig, data: &Dataset) -> Result<MapRun, CliError> {
    let frames = data.horizontal.len() + data.vertical.len();
    if frames == 0 {
        return Err(CliError::data(if data.skipped_frames > 0 {
            format!("all {} sonar frames were skipped", data.skipped_frames)
        } else {
            "dataset contains no sonar frames".to_string()
        }));
    }
    let ext = cfg.extrinsics();
    let traj = &data.trajectory;
    let keyframes = select_keyframes(traj, &cfg.keyframes);
    let mut map = SeabedSkyMap::new(keyframes);
    let mut metrics = MapMetrics {
        poses: traj.len(),
        keyframes: map.keyframes.len(),
        horizontal_frames: data.horizontal.len(),
        vertical_frames: data.vertical.len(),
        skipped_frames: data.skipped_frames,
        ..MapMetrics::default()
    };

    let mut scans: Vec<_> = data.lidar.iter().collect();
    scans.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    let lidar_mount = cfg.lidar_mount();
    for scan in scans {
        match traj.pose_at(scan.timestamp) {
            Ok(pose) => {
                map.attach_lidar_scan(&scan.points, &pose, &lidar_mount);
                metrics.lidar_scans += 1;
            }
            Err(e) => {
                warn!("lidar scan {} rejected: {e}", scan.index);
                *metrics.rejected_points.entry("lidar").or_default() += scan.points.len();
            }
        }
    }

    let edges = |side: SonarSide| -> seasky_core::Result<Vec<Batch>> {
        let (frames, pre, tau, channel) = match side {
            SonarSide::Horizontal => (&data.horizontal, &cfg.preprocess.horizontal, cfg.leading_edge.horizontal, MapChannel::EdgeH),
            SonarSide::Vertical => (&data.vertical, &cfg.preprocess.vertical, cfg.leading_edge.vertical, MapChannel::EdgeV),
        };
        frames
            .par_iter()
            .map(|f| {
                let img = preprocess(&f.image, pre, cfg.preprocess.bypass)?;
                let scan = detect_leading_edge(&img, tau, side);
                Ok(Batch {
                    timestamp: scan.timestamp,
                    channel,
                    points: scan.cartesian().collect(),
                })
            })
            .collect()
    };
    let mut batches = edges(SonarSide::Horizontal)?;
    batches.extend(edges(SonarSide::Vertical)?);

    let h_times: Vec<f64> = data.horizontal.iter().map(|f| f.image.timestamp()).collect();
    let v_times: Vec<f64> = data.vertical.iter().map(|f| f.image.timestamp()).collect();
    let pairs = pair_frames(&h_times, &v_times, cfg.pairing_window_s);
    metrics.frame_pairs = pairs.len();
    let results: Vec<PairResult> = pairs
        .par_iter()
        .map(|&(i, j)| process_pair(&data.horizontal[i].image, &data.vertical[j].image, &ext, cfg).map(|r| r.2))
        .collect::<seasky_core::Result<_>>()?;
    for r in &results {
        metrics.horizontal_features += r.horizontal_features;
        metrics.vertical_features += r.vertical_features;
        metrics.fused_points += r.fused.len();
        batches.push(Batch {
            timestamp: r.timestamp,
            channel: MapChannel::Stereo,
            points: r.fused.iter().map(|f| CartesianPoint::from_vector(&f.position, f.intensity)).collect(),
        });
    }

    batches.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp).then(a.channel.cmp(&b.channel)));
    let h_mount = cfg.horizontal_mount();
    let v_mount = cfg.vertical_mount();
    for b in &batches {
        let mount: &RigidTransform = if b.channel == MapChannel::EdgeV { &v_mount } else { &h_mount };
        let stamped: Vec<_> = b.points.iter().map(|p| (*p, b.timestamp)).collect();
        let report = map.attach_sonar_data(&stamped, b.channel, mount, traj);
        if report.rejected > 0 {
            *metrics.rejected_points.entry(b.channel.name()).or_default() += report.rejected;
        }
    }
    metrics.channel_counts = map.channel_counts();
    info!(
        "map: {} points from {} frame pairs, {} lidar scans",
        map.points.len(),
        metrics.frame_pairs,
        metrics.lidar_scans
    );
    Ok(MapRun {
        map,
        metrics,
        fused_by_pair: results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairing_fifteen_and_ten_hz() {
        let h: Vec<f64> = (0..15).map(|k| 2.0 * k as f64 / 30.0).collect();
        let v: Vec<f64> = (0..10).map(|k| 3.0 * k as f64 / 30.0).collect();
        let pairs = pair_frames(&h, &v, 0.075);
        assert_eq!(pairs.len(), 10);
        for (i, j) in &pairs {
            assert!((h[*i] - v[*j]).abs() <= 0.075);
        }
        let mut hs: Vec<_> = pairs.iter().map(|p| p.0).collect();
        hs.dedup();
        assert_eq!(hs.len(), 10);
    }

    #[test]
    fn pairing_tie_goes_to_earlier_and_window_is_respected() {
        assert_eq!(pair_frames(&[0.0, 2.0], &[1.0], 1.0), vec![(0, 0)]);
        assert!(pair_frames(&[0.0], &[0.2], 0.075).is_empty());
        // the closer horizontal frame wins the single vertical frame
        assert_eq!(pair_frames(&[0.0, 0.05], &[0.06], 0.075), vec![(1, 0)]);
    }
}
