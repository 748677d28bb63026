use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::Vector3;

use super::open;
use crate::associate::FusedPoint;
use crate::mapping::MapPoint;
use crate::{Error, Result};

/// One point per line: `x y z intensity channel timestamp`.
pub fn write_map_xyz<W: Write>(mut w: W, points: &[MapPoint]) -> std::io::Result<()> {
    for p in points {
        writeln!(
            w,
            "{} {} {} {} {} {}",
            p.point.x,
            p.point.y,
            p.point.z,
            p.point.intensity,
            p.channel.name(),
            p.timestamp
        )?;
    }
    w.flush()
}

/// `x y z # horizontal_id vertical_id`; the ids index the frame's feature lists.
pub fn write_fused_xyz<W: Write>(mut w: W, points: &[FusedPoint]) -> std::io::Result<()> {
    writeln!(w, "# x y z # horizontal_feature vertical_feature")?;
    for p in points {
        writeln!(
            w,
            "{} {} {} # {} {}",
            p.position.x, p.position.y, p.position.z, p.horizontal_id, p.vertical_id
        )?;
    }
    w.flush()
}

/// Reads the first three numeric columns of every non-comment line.
pub fn read_xyz(path: &Path) -> Result<Vec<Vector3<f64>>> {
    let r = open(path)?;
    let mut out = Vec::new();
    for (no, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let vals: Vec<f64> = body
            .split_whitespace()
            .take(3)
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::format("XYZ", path, format!("line {}: {e}", no + 1)))?;
        if vals.len() < 3 {
            return Err(Error::format("XYZ", path, format!("line {}: fewer than 3 columns", no + 1)));
        }
        out.push(Vector3::new(vals[0], vals[1], vals[2]));
    }
    Ok(out)
}
