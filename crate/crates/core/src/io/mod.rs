//! File formats: PGM frames with JSON sidecars, PLY and XYZ point clouds, trajectory CSV.
//!
//! Writers take any `Write`, so callers can stage output in a temporary file.

mod pgm;
mod ply;
mod trajectory_csv;
mod xyz;

pub use pgm::{read_frame, read_pgm, sidecar_path, write_pgm, FrameMeta};
pub use ply::{read_ply, write_ply};
pub use trajectory_csv::{read_trajectory, write_trajectory};
pub use xyz::{read_xyz, write_fused_xyz, write_map_xyz};

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use crate::{Error, Result};

pub(crate) fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}
