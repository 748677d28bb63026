use std::io::Write;
use std::path::Path;

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::open;
use crate::mapping::{Pose, Trajectory};
use crate::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    t: f64,
    x: f64,
    y: f64,
    z: f64,
    qx: f64,
    qy: f64,
    qz: f64,
    qw: f64,
}

/// CSV with header `t,x,y,z,qx,qy,qz,qw`.
pub fn write_trajectory<W: Write>(w: W, trajectory: &Trajectory) -> std::result::Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    for p in trajectory.poses() {
        let q = p.rotation.quaternion();
        out.serialize(Row {
            t: p.timestamp,
            x: p.translation.x,
            y: p.translation.y,
            z: p.translation.z,
            qx: q.i,
            qy: q.j,
            qz: q.k,
            qw: q.w,
        })?;
    }
    out.flush()?;
    Ok(())
}

/// Quaternions are renormalised; their norm must be within 1e-6 of 1.
pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let mut reader = csv::Reader::from_reader(open(path)?);
    let mut poses = Vec::new();
    for (i, row) in reader.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| Error::format("trajectory CSV", path, e))?;
        let q = Quaternion::new(row.qw, row.qx, row.qy, row.qz);
        if (q.norm() - 1.0).abs() > 1e-6 {
            return Err(Error::format("trajectory CSV", path, format!("row {}: quaternion norm {}", i + 1, q.norm())));
        }
        poses.push(Pose::new(row.t, UnitQuaternion::from_quaternion(q), Vector3::new(row.x, row.y, row.z)));
    }
    Trajectory::new(poses).map_err(|e| Error::format("trajectory CSV", path, e))
}
