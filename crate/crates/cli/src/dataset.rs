//! Simulated datasets: generation from a scene and trajectory, and their on-disk layout.
//!
//! ```text
//! <dir>/trajectory.csv
//! <dir>/frames/{horizontal,vertical}/<pose index>.pgm (+ .json sidecar)
//! <dir>/lidar/<pose index>.ply          lidar frame, channel lidar
//! <dir>/ground_truth/{horizontal,vertical}/<pose index>.csv
//! <dir>/manifest.json
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::warn;
use rayon::prelude::*;

use seasky_core::io::{self, FrameMeta};
use seasky_core::mapping::{MapChannel, MapPoint, Trajectory};
use seasky_core::simulate::{apply_noise, generate_trajectory, raycast_lidar, raycast_sonar, GroundTruthHit, NoiseModel};
use seasky_core::{CartesianPoint, PolarSonarImage, SonarSide};

use crate::config::PipelineConfig;
use crate::output::{write_atomic, write_json};
use crate::CliError;

#[derive(Debug, Clone)]
pub struct SonarFrame {
    pub index: usize,
    pub image: PolarSonarImage,
    pub hits: Vec<GroundTruthHit>,
}

#[derive(Debug, Clone)]
pub struct LidarScan {
    pub index: usize,
    pub timestamp: f64,
    pub points: Vec<CartesianPoint>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub trajectory: Trajectory,
    pub horizontal: Vec<SonarFrame>,
    pub vertical: Vec<SonarFrame>,
    pub lidar: Vec<LidarScan>,
    /// Frames that could not be loaded.
    pub skipped_frames: usize,
}

fn frame_seed(base: u64, side: SonarSide, index: usize) -> u64 {
    let lane = match side {
        SonarSide::Horizontal => 0,
        SonarSide::Vertical => 1,
    };
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ ((index as u64) << 1 | lane)
}

pub fn simulate(cfg: &PipelineConfig) -> Result<Dataset, CliError> {
    let spec = cfg
        .simulate
        .trajectory
        .as_ref()
        .ok_or_else(|| CliError::data("simulate.trajectory is not set"))?;
    let trajectory = generate_trajectory(spec).map_err(|e| CliError::data(format!("simulate.trajectory: {e}")))?;
    let sim = &cfg.simulate;
    let poses = trajectory.poses();
    let render = |side: SonarSide, every: usize| -> Result<Vec<SonarFrame>, CliError> {
        let (intr, mount) = match side {
            SonarSide::Horizontal => (cfg.sonar.horizontal, cfg.horizontal_mount()),
            SonarSide::Vertical => (cfg.sonar.vertical, cfg.vertical_mount()),
        };
        (0..poses.len())
            .step_by(every)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|k| {
                let pose = &poses[k];
                let to_world = pose.to_transform().compose(&mount);
                let cap = raycast_sonar(&sim.scene, &to_world, &intr, &sim.sonar, pose.timestamp)?;
                let noise = NoiseModel {
                    seed: frame_seed(cfg.seed ^ sim.noise.seed, side, k),
                    ..sim.noise
                };
                Ok(SonarFrame {
                    index: k,
                    image: apply_noise(&cap.image, &noise)?,
                    hits: cap.hits,
                })
            })
            .collect::<Result<Vec<_>, seasky_core::Error>>()
            .map_err(CliError::from)
    };
    let horizontal = render(SonarSide::Horizontal, sim.frames.horizontal_every)?;
    let vertical = render(SonarSide::Vertical, sim.frames.vertical_every)?;
    let lidar_mount = cfg.lidar_mount();
    let lidar = (0..poses.len())
        .step_by(sim.frames.lidar_every)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|k| LidarScan {
            index: k,
            timestamp: poses[k].timestamp,
            points: raycast_lidar(&sim.scene, &poses[k].to_transform().compose(&lidar_mount), &sim.lidar),
        })
        .collect();
    Ok(Dataset {
        trajectory,
        horizontal,
        vertical,
        lidar,
        skipped_frames: 0,
    })
}

fn side_dir(side: SonarSide) -> &'static str {
    side.as_str()
}

fn hits_csv(hits: &[GroundTruthHit]) -> String {
    let mut s = String::from("range_bin,column,x,y,z,surface\n");
    for h in hits {
        let _ = writeln!(s, "{},{},{},{},{},{}", h.range_bin, h.column, h.point.x, h.point.y, h.point.z, h.surface);
    }
    s
}

/// Writes every dataset file under `dir`, returning the relative paths written.
pub fn write_dataset(dir: &Path, data: &Dataset) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    let mut put = |rel: PathBuf, f: &dyn Fn(&mut dyn std::io::Write) -> std::io::Result<()>| -> Result<(), CliError> {
        write_atomic(&dir.join(&rel), |w| f(w))?;
        written.push(rel);
        Ok(())
    };
    put(PathBuf::from("trajectory.csv"), &|w| {
        io::write_trajectory(w, &data.trajectory).map_err(std::io::Error::other)
    })?;
    for (side, frames) in [(SonarSide::Horizontal, &data.horizontal), (SonarSide::Vertical, &data.vertical)] {
        for f in frames {
            let stem = format!("{:06}", f.index);
            let frame_rel = Path::new("frames").join(side_dir(side));
            put(frame_rel.join(format!("{stem}.pgm")), &|w| io::write_pgm(w, &f.image))?;
            let meta = FrameMeta {
                side,
                timestamp: f.image.timestamp(),
                intrinsics: *f.image.intrinsics(),
            };
            put(frame_rel.join(format!("{stem}.json")), &|w| {
                serde_json::to_writer_pretty(&mut *w, &meta).map_err(std::io::Error::other)?;
                w.write_all(b"\n")
            })?;
            let gt = hits_csv(&f.hits);
            put(Path::new("ground_truth").join(side_dir(side)).join(format!("{stem}.csv")), &|w| w.write_all(gt.as_bytes()))?;
        }
    }
    for scan in &data.lidar {
        let pts: Vec<MapPoint> = scan
            .points
            .iter()
            .map(|p| MapPoint {
                point: *p,
                channel: MapChannel::Lidar,
                timestamp: scan.timestamp,
            })
            .collect();
        put(Path::new("lidar").join(format!("{:06}.ply", scan.index)), &|w| io::write_ply(w, &pts))?;
    }
    Ok(written)
}

fn sorted_files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>, CliError> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::data(format!("cannot list {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == ext))
        .collect();
    out.sort();
    Ok(out)
}

fn index_of(path: &Path) -> usize {
    path.file_stem().and_then(|s| s.to_str()).and_then(|s| s.parse().ok()).unwrap_or(usize::MAX)
}

/// Loads a dataset directory. Frames with unreadable or inconsistent metadata
/// are skipped with a warning; a missing trajectory is an error.
pub fn read_dataset(dir: &Path) -> Result<Dataset, CliError> {
    let traj_path = dir.join("trajectory.csv");
    if !traj_path.is_file() {
        return Err(CliError::data(format!("missing trajectory file {}", traj_path.display())));
    }
    let trajectory = io::read_trajectory(&traj_path)?;
    let mut skipped = 0;
    let mut load = |side: SonarSide| -> Result<Vec<SonarFrame>, CliError> {
        let mut frames = Vec::new();
        for path in sorted_files(&dir.join("frames").join(side_dir(side)), "pgm")? {
            match io::read_frame(&path) {
                Ok((meta, image)) if meta.side == side => frames.push(SonarFrame {
                    index: index_of(&path),
                    image,
                    hits: Vec::new(),
                }),
                Ok((meta, _)) => {
                    warn!("skipping {}: metadata says {} sonar", path.display(), meta.side.as_str());
                    skipped += 1;
                }
                Err(e) => {
                    warn!("skipping {}: {e}", path.display());
                    skipped += 1;
                }
            }
        }
        frames.sort_by(|a, b| a.image.timestamp().total_cmp(&b.image.timestamp()));
        Ok(frames)
    };
    let horizontal = load(SonarSide::Horizontal)?;
    let vertical = load(SonarSide::Vertical)?;
    let mut lidar = Vec::new();
    for path in sorted_files(&dir.join("lidar"), "ply")? {
        let pts = io::read_ply(&path)?;
        let timestamp = pts.first().map_or_else(
            || trajectory.poses().get(index_of(&path)).map_or(f64::NAN, |p| p.timestamp),
            |p| p.timestamp,
        );
        lidar.push(LidarScan {
            index: index_of(&path),
            timestamp,
            points: pts.into_iter().map(|p| p.point).collect(),
        });
    }
    Ok(Dataset {
        trajectory,
        horizontal,
        vertical,
        lidar,
        skipped_frames: skipped,
    })
}

/// Frame counts implied by the trajectory length and frame policy.
pub fn expected_counts(poses: usize, cfg: &PipelineConfig) -> (usize, usize, usize) {
    let f = cfg.simulate.frames;
    let every = |n: usize| poses.div_ceil(n);
    (every(f.horizontal_every), every(f.vertical_every), every(f.lidar_every))
}

pub fn write_dataset_manifest(dir: &Path, cfg: &PipelineConfig, data: &Dataset, files: &[PathBuf]) -> Result<(), CliError> {
    let manifest = serde_json::json!({
        "tool": "seasky",
        "version": env!("CARGO_PKG_VERSION"),
        "command": "simulate",
        "config_sha256": cfg.hash(),
        "seed": cfg.seed,
        "counts": {
            "poses": data.trajectory.len(),
            "horizontal_frames": data.horizontal.len(),
            "vertical_frames": data.vertical.len(),
            "lidar_scans": data.lidar.len(),
        },
        "files": files.len(),
        "config": cfg,
    });
    write_json(&dir.join("manifest.json"), &manifest)
}
