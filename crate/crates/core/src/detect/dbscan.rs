use std::collections::VecDeque;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::FeaturePoint;
use crate::spatial::VoxelGrid;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DbscanConfig {
    /// Neighbourhood radius in metres (inclusive).
    pub eps: f64,
    /// Neighbour count, the point itself included, needed for a core point.
    pub min_samples: usize,
}

impl Default for DbscanConfig {
    fn default() -> Self {
        DbscanConfig {
            eps: 0.20,
            min_samples: 20,
        }
    }
}

impl DbscanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Config(format!("eps {} must be positive", self.eps)));
        }
        if self.min_samples == 0 {
            return Err(Error::Config("min_samples must be positive".into()));
        }
        Ok(())
    }
}

fn lex_less(a: &Vector3<f64>, b: &Vector3<f64>) -> bool {
    (a.x, a.y, a.z) < (b.x, b.y, b.z)
}

/// Cluster labels per point (`None` for noise).
///
/// Clusters are the connected components of core points; labels follow the
/// lowest core index in each component. A border point joins the cluster of
/// its nearest core neighbour, ties going to the lexicographically smallest
/// core position, so the partition does not depend on input order.
pub fn dbscan_positions(points: &[Vector3<f64>], cfg: &DbscanConfig) -> Result<Vec<Option<usize>>> {
    cfg.validate()?;
    let n = points.len();
    let grid = VoxelGrid::new(points, cfg.eps);
    let core: Vec<bool> = points
        .iter()
        .map(|p| grid.within(p, cfg.eps).len() >= cfg.min_samples)
        .collect();

    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut next = 0;
    let mut queue = VecDeque::new();
    for seed in 0..n {
        if !core[seed] || labels[seed].is_some() {
            continue;
        }
        labels[seed] = Some(next);
        queue.push_back(seed);
        while let Some(i) = queue.pop_front() {
            for j in grid.within(&points[i], cfg.eps) {
                if core[j] && labels[j].is_none() {
                    labels[j] = Some(next);
                    queue.push_back(j);
                }
            }
        }
        next += 1;
    }

    for i in (0..n).filter(|&i| !core[i]) {
        let mut best: Option<(usize, f64)> = None;
        for j in grid.within(&points[i], cfg.eps) {
            if !core[j] {
                continue;
            }
            let d2 = (points[j] - points[i]).norm_squared();
            let take = match best {
                None => true,
                Some((b, bd)) => d2 < bd || (d2 == bd && lex_less(&points[j], &points[b])),
            };
            if take {
                best = Some((j, d2));
            }
        }
        labels[i] = best.and_then(|(j, _)| labels[j]);
    }
    Ok(labels)
}

/// Labels `features` in place and returns the number of clusters.
pub fn dbscan(features: &mut [FeaturePoint], cfg: &DbscanConfig) -> Result<usize> {
    let pts: Vec<Vector3<f64>> = features.iter().map(|f| f.position).collect();
    let labels = dbscan_positions(&pts, cfg)?;
    for (f, l) in features.iter_mut().zip(&labels) {
        f.cluster_id = *l;
    }
    Ok(labels.iter().flatten().max().map_or(0, |m| m + 1))
}
