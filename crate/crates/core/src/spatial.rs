//! Uniform voxel grid over 3-D points for radius and nearest-neighbour queries.

use std::collections::HashMap;

use nalgebra::Vector3;

type Cell = (i64, i64, i64);

pub struct VoxelGrid<'a> {
    points: &'a [Vector3<f64>],
    cell: f64,
    cells: HashMap<Cell, Vec<usize>>,
    lo: Cell,
    hi: Cell,
}

impl<'a> VoxelGrid<'a> {
    pub fn new(points: &'a [Vector3<f64>], cell: f64) -> Self {
        assert!(cell > 0.0 && cell.is_finite(), "cell size must be positive");
        let mut cells: HashMap<Cell, Vec<usize>> = HashMap::new();
        let mut lo = (i64::MAX, i64::MAX, i64::MAX);
        let mut hi = (i64::MIN, i64::MIN, i64::MIN);
        for (i, p) in points.iter().enumerate() {
            let k = Self::key(p, cell);
            lo = (lo.0.min(k.0), lo.1.min(k.1), lo.2.min(k.2));
            hi = (hi.0.max(k.0), hi.1.max(k.1), hi.2.max(k.2));
            cells.entry(k).or_default().push(i);
        }
        VoxelGrid {
            points,
            cell,
            cells,
            lo,
            hi,
        }
    }

    fn key(p: &Vector3<f64>, cell: f64) -> Cell {
        (
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        )
    }

    /// Indices of all points within `radius` (inclusive) of `q`, in ascending index order.
    pub fn within(&self, q: &Vector3<f64>, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        let reach = (radius / self.cell).ceil() as i64;
        let k = Self::key(q, self.cell);
        let r2 = radius * radius;
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                for dz in -reach..=reach {
                    if let Some(bucket) = self.cells.get(&(k.0 + dx, k.1 + dy, k.2 + dz)) {
                        out.extend(
                            bucket
                                .iter()
                                .copied()
                                .filter(|&i| (self.points[i] - q).norm_squared() <= r2),
                        );
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Nearest point to `q` (lowest index on exact ties), or `None` for an empty grid.
    pub fn nearest(&self, q: &Vector3<f64>) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let k = Self::key(q, self.cell);
        let mut best: Option<(usize, f64)> = None;
        // Chebyshev cell distance from the query cell to the occupied bounding box.
        let axis_gap = |c: i64, lo: i64, hi: i64| (lo - c).max(c - hi).max(0);
        let start = axis_gap(k.0, self.lo.0, self.hi.0)
            .max(axis_gap(k.1, self.lo.1, self.hi.1))
            .max(axis_gap(k.2, self.lo.2, self.hi.2));
        let max_ring = [
            (k.0 - self.lo.0).abs(),
            (k.0 - self.hi.0).abs(),
            (k.1 - self.lo.1).abs(),
            (k.1 - self.hi.1).abs(),
            (k.2 - self.lo.2).abs(),
            (k.2 - self.hi.2).abs(),
        ]
        .into_iter()
        .max()
        .unwrap_or(0);
        for ring in start..=max_ring {
            // Anything in ring r is at least (r - 1) * cell away.
            if let Some((_, d2)) = best {
                let gap = (ring - 1).max(0) as f64 * self.cell;
                if gap * gap > d2 {
                    break;
                }
            }
            let span = |c: i64, lo: i64, hi: i64| (lo - c).max(-ring)..=(hi - c).min(ring);
            for dx in span(k.0, self.lo.0, self.hi.0) {
                for dy in span(k.1, self.lo.1, self.hi.1) {
                    for dz in span(k.2, self.lo.2, self.hi.2) {
                        if dx.abs() != ring && dy.abs() != ring && dz.abs() != ring {
                            continue;
                        }
                        let Some(bucket) = self.cells.get(&(k.0 + dx, k.1 + dy, k.2 + dz)) else {
                            continue;
                        };
                        for &i in bucket {
                            let d2 = (self.points[i] - q).norm_squared();
                            let better = match best {
                                None => true,
                                Some((bi, bd)) => d2 < bd || (d2 == bd && i < bi),
                            };
                            if better {
                                best = Some((i, d2));
                            }
                        }
                    }
                }
            }
        }
        best.map(|(i, d2)| (i, d2.sqrt()))
    }
}
