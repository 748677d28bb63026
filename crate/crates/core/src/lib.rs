//! Dual orthogonal forward-looking sonar (FLS) processing and seabed-to-sky map assembly.
//!
//! The crate is organised along the processing chain:
//!
//! * [`sonar`] - beam-range image model, intrinsics and the planar polar projection.
//! * [`preprocess`] - the horizontal and vertical denoising chains.
//! * [`leading_edge`] - per-beam leading edge line scans.
//! * [`geometry`] - rigid transforms, inter-sonar extrinsics and overlap trimming.
//! * [`detect`] - SOCA-CFAR feature detection and DBSCAN clustering.
//! * [`associate`] - cluster/feature bijective association and stereo fusion.
//! * [`mapping`] - keyframes, pose interpolation and map assembly.
//! * [`simulate`] - synthetic scenes, trajectories and dual-sonar raycasting.
//! * [`evaluate`] - rigid alignment, wall width, cosine similarity, KDE and Hellinger distance.
//! * [`io`] - PGM frames with JSON sidecars, PLY / XYZ clouds and trajectory CSV.

// Negated float comparisons are how NaN parameters get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assignment;
pub mod associate;
pub mod detect;
pub mod error;
pub mod evaluate;
pub mod geometry;
pub mod io;
pub mod leading_edge;
pub mod mapping;
pub mod preprocess;
pub mod simulate;
pub mod sonar;
pub mod spatial;

pub use error::{Error, Result};
pub use sonar::{CartesianPoint, PolarSonarImage, SonarIntrinsics, SonarSide};
