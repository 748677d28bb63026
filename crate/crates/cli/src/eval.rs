//! Cloud-versus-cloud comparison and reference-point alignment.

use std::path::Path;

use nalgebra::Vector3;
use serde::Serialize;

use seasky_core::evaluate::{compare_clouds, rigid_align, DistributionComparison};
use seasky_core::io::{read_ply, read_xyz};
use seasky_core::mapping::MapChannel;

use crate::config::EvaluationConfig;
use crate::CliError;

/// Loads a `.ply` or `.xyz` cloud, keeping only `channels` when given (PLY only).
pub fn load_cloud(path: &Path, channels: &[MapChannel]) -> Result<Vec<Vector3<f64>>, CliError> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    match ext.as_str() {
        "ply" => Ok(read_ply(path)?
            .into_iter()
            .filter(|p| channels.is_empty() || channels.contains(&p.channel))
            .map(|p| p.point.vector())
            .collect()),
        "xyz" | "txt" => {
            if !channels.is_empty() {
                return Err(CliError::data(format!("{}: channel filters need a PLY cloud", path.display())));
            }
            Ok(read_xyz(path)?)
        }
        _ => Err(CliError::data(format!("{}: unsupported cloud format", path.display()))),
    }
}

/// Moves world points into the configured wall frame and applies the crops.
pub fn to_wall_frame(points: &[Vector3<f64>], cfg: &EvaluationConfig) -> Result<Vec<Vector3<f64>>, CliError> {
    let moved = match &cfg.wall_frame {
        Some(frame) => frame.apply(points)?,
        None => points.to_vec(),
    };
    let inside = |v: f64, r: &Option<[f64; 2]>| r.is_none_or(|[lo, hi]| (lo..=hi).contains(&v));
    Ok(moved
        .into_iter()
        .filter(|p| inside(p.x, &cfg.segment) && inside(p.z, &cfg.height))
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct CloudComparison {
    pub points_a: usize,
    pub points_b: usize,
    #[serde(flatten)]
    pub metrics: DistributionComparison,
}

/// Compares two world clouds in the wall frame.
pub fn compare_world(a: &[Vector3<f64>], b: &[Vector3<f64>], cfg: &EvaluationConfig) -> Result<CloudComparison, CliError> {
    let a = to_wall_frame(a, cfg)?;
    let b = to_wall_frame(b, cfg)?;
    let metrics = compare_clouds(&a, &b, &cfg.comparison)?;
    Ok(CloudComparison {
        points_a: a.len(),
        points_b: b.len(),
        metrics,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AlignmentReport {
    pub points: usize,
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
    pub residuals: Vec<f64>,
    pub mean_error: f64,
    pub ci95_half_width: f64,
}

/// Rigidly aligns `estimated` onto `reference`; the files must list corresponding points in order.
pub fn align_points(estimated: &Path, reference: &Path) -> Result<AlignmentReport, CliError> {
    let src = read_xyz(estimated)?;
    let dst = read_xyz(reference)?;
    if src.len() != dst.len() {
        return Err(CliError::data(format!(
            "point count mismatch: {} has {}, {} has {}",
            estimated.display(),
            src.len(),
            reference.display(),
            dst.len()
        )));
    }
    let r = rigid_align(&src, &dst)?;
    let m = r.rotation;
    Ok(AlignmentReport {
        points: src.len(),
        rotation: [0, 1, 2].map(|i| [m[(i, 0)], m[(i, 1)], m[(i, 2)]]),
        translation: r.translation.into(),
        residuals: r.residuals,
        mean_error: r.mean_error,
        ci95_half_width: r.ci95_half_width,
    })
}
