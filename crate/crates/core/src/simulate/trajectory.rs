use std::f64::consts::PI;

use nalgebra::{UnitQuaternion, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::mapping::{Pose, Trajectory};
use crate::{Error, Result};

/// Horizontal path shapes; headings are yaw angles in degrees, counter-clockwise from +x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrajectoryKind {
    Line {
        length_m: f64,
    },
    /// Positive sweep turns left.
    Arc {
        radius_m: f64,
        sweep_deg: f64,
    },
    /// Parallel legs joined by half-circle turns, alternating left and right.
    Lawnmower {
        leg_length_m: f64,
        spacing_m: f64,
        legs: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySpec {
    #[serde(flatten)]
    pub kind: TrajectoryKind,
    pub start: [f64; 3],
    #[serde(default)]
    pub heading_deg: f64,
    pub speed_mps: f64,
    pub rate_hz: f64,
    #[serde(default)]
    pub start_time_s: f64,
}

#[derive(Debug, Clone, Copy)]
enum Segment {
    Straight { from: Vector2<f64>, heading: f64, length: f64 },
    Turn { center: Vector2<f64>, radius: f64, start_angle: f64, sweep: f64 },
}

impl Segment {
    fn length(&self) -> f64 {
        match *self {
            Segment::Straight { length, .. } => length,
            Segment::Turn { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    /// Position and heading at arc length `s` along the segment.
    fn at(&self, s: f64) -> (Vector2<f64>, f64) {
        match *self {
            Segment::Straight { from, heading, .. } => (from + Vector2::new(heading.cos(), heading.sin()) * s, heading),
            Segment::Turn { center, radius, start_angle, sweep } => {
                let a = start_angle + sweep.signum() * s / radius;
                let p = center + Vector2::new(a.cos(), a.sin()) * radius;
                (p, a + sweep.signum() * PI / 2.0)
            }
        }
    }

    fn end(&self) -> (Vector2<f64>, f64) {
        self.at(self.length())
    }
}

fn turn_from(p: Vector2<f64>, heading: f64, radius: f64, sweep: f64) -> Segment {
    // centre lies to the left for a left turn
    let side = sweep.signum();
    let normal = Vector2::new(-heading.sin(), heading.cos()) * side;
    let center = p + normal * radius;
    let start_angle = (p - center).y.atan2((p - center).x);
    Segment::Turn { center, radius, start_angle, sweep }
}

fn segments(spec: &TrajectorySpec) -> Result<Vec<Segment>> {
    let p0 = Vector2::new(spec.start[0], spec.start[1]);
    let h0 = spec.heading_deg.to_radians();
    let positive = |v: f64, what: &str| {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("{what} must be positive, got {v}")))
        }
    };
    match spec.kind {
        TrajectoryKind::Line { length_m } => {
            if !(length_m >= 0.0 && length_m.is_finite()) {
                return Err(Error::InvalidParams(format!("line length {length_m} must be non-negative")));
            }
            Ok(vec![Segment::Straight { from: p0, heading: h0, length: length_m }])
        }
        TrajectoryKind::Arc { radius_m, sweep_deg } => {
            positive(radius_m, "arc radius")?;
            if !sweep_deg.is_finite() {
                return Err(Error::InvalidParams("arc sweep must be finite".into()));
            }
            Ok(vec![turn_from(p0, h0, radius_m, sweep_deg.to_radians())])
        }
        TrajectoryKind::Lawnmower { leg_length_m, spacing_m, legs } => {
            positive(leg_length_m, "leg length")?;
            positive(spacing_m, "leg spacing")?;
            if legs == 0 {
                return Err(Error::InvalidParams("lawnmower needs at least one leg".into()));
            }
            let mut out = Vec::new();
            let (mut p, mut h) = (p0, h0);
            for leg in 0..legs {
                let s = Segment::Straight { from: p, heading: h, length: leg_length_m };
                (p, h) = s.end();
                out.push(s);
                if leg + 1 < legs {
                    let sweep = if leg % 2 == 0 { PI } else { -PI };
                    let t = turn_from(p, h, spacing_m / 2.0, sweep);
                    (p, h) = t.end();
                    out.push(t);
                }
            }
            Ok(out)
        }
    }
}

/// Samples the path at constant speed and rate; the final pose lands on the
/// last sample time that does not pass the end of the path.
pub fn generate_trajectory(spec: &TrajectorySpec) -> Result<Trajectory> {
    if !(spec.speed_mps > 0.0 && spec.speed_mps.is_finite()) || !(spec.rate_hz > 0.0 && spec.rate_hz.is_finite()) {
        return Err(Error::InvalidParams("speed and rate must be positive".into()));
    }
    if !spec.start.iter().all(|v| v.is_finite()) || !spec.heading_deg.is_finite() || !spec.start_time_s.is_finite() {
        return Err(Error::InvalidParams("start pose must be finite".into()));
    }
    let segs = segments(spec)?;
    let total: f64 = segs.iter().map(Segment::length).sum();
    let step = spec.speed_mps / spec.rate_hz;
    let count = (total / step + 1e-9).floor() as usize + 1;
    let mut poses = Vec::with_capacity(count);
    for k in 0..count {
        let mut s = (k as f64 * step).min(total);
        let mut seg = &segs[0];
        for candidate in &segs {
            seg = candidate;
            if s <= candidate.length() {
                break;
            }
            s -= candidate.length();
        }
        let (p, yaw) = seg.at(s.min(seg.length()));
        poses.push(Pose::new(
            spec.start_time_s + k as f64 / spec.rate_hz,
            UnitQuaternion::from_euler_angles(0.0, 0.0, yaw),
            Vector3::new(p.x, p.y, spec.start[2]),
        ));
    }
    Trajectory::new(poses)
}
