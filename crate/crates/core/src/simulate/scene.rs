use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const RAY_EPS: f64 = 1e-9;

/// A reflecting surface. Planes are parallelogram patches; boxes are axis-aligned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Surface {
    Plane {
        origin: [f64; 3],
        edges: [[f64; 3]; 2],
        reflectivity: f64,
    },
    Box {
        origin: [f64; 3],
        extent: [f64; 3],
        reflectivity: f64,
    },
}

impl Surface {
    pub fn plane(origin: Vector3<f64>, u: Vector3<f64>, v: Vector3<f64>, reflectivity: f64) -> Self {
        Surface::Plane {
            origin: origin.into(),
            edges: [u.into(), v.into()],
            reflectivity,
        }
    }

    pub fn aabb(origin: Vector3<f64>, extent: Vector3<f64>, reflectivity: f64) -> Self {
        Surface::Box {
            origin: origin.into(),
            extent: extent.into(),
            reflectivity,
        }
    }

    pub fn reflectivity(&self) -> f64 {
        match self {
            Surface::Plane { reflectivity, .. } | Surface::Box { reflectivity, .. } => *reflectivity,
        }
    }

    fn validate(&self) -> Result<()> {
        let r = self.reflectivity();
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::InvalidParams(format!("reflectivity {r} outside (0, 1]")));
        }
        match self {
            Surface::Plane { edges, .. } => {
                let n = Vector3::from(edges[0]).cross(&Vector3::from(edges[1]));
                if !(n.norm() > 1e-12) {
                    return Err(Error::InvalidParams("plane edges are degenerate".into()));
                }
            }
            Surface::Box { extent, .. } => {
                if !extent.iter().all(|e| *e > 0.0 && e.is_finite()) {
                    return Err(Error::InvalidParams("box extent must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// Distance along a unit ray to the first intersection beyond a small epsilon.
    fn intersect(&self, o: &Vector3<f64>, d: &Vector3<f64>) -> Option<(f64, Vector3<f64>)> {
        match self {
            Surface::Plane { origin, edges, .. } => {
                let (p0, u, v) = (Vector3::from(*origin), Vector3::from(edges[0]), Vector3::from(edges[1]));
                let n = u.cross(&v);
                let denom = n.dot(d);
                if denom.abs() < 1e-15 {
                    return None;
                }
                let t = n.dot(&(p0 - o)) / denom;
                if t <= RAY_EPS {
                    return None;
                }
                let w = o + d * t - p0;
                let (uu, uv, vv) = (u.dot(&u), u.dot(&v), v.dot(&v));
                let (wu, wv) = (w.dot(&u), w.dot(&v));
                let det = uu * vv - uv * uv;
                let a = (wu * vv - wv * uv) / det;
                let b = (wv * uu - wu * uv) / det;
                if !(-RAY_EPS..=1.0 + RAY_EPS).contains(&a) || !(-RAY_EPS..=1.0 + RAY_EPS).contains(&b) {
                    return None;
                }
                Some((t, o + d * t))
            }
            Surface::Box { origin, extent, .. } => {
                let lo = Vector3::from(*origin);
                let hi = lo + Vector3::from(*extent);
                let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
                let (mut axis0, mut axis1) = (0, 0);
                for k in 0..3 {
                    if d[k].abs() < 1e-15 {
                        if o[k] < lo[k] || o[k] > hi[k] {
                            return None;
                        }
                        continue;
                    }
                    let (mut a, mut b) = ((lo[k] - o[k]) / d[k], (hi[k] - o[k]) / d[k]);
                    if a > b {
                        std::mem::swap(&mut a, &mut b);
                    }
                    if a > t0 {
                        t0 = a;
                        axis0 = k;
                    }
                    if b < t1 {
                        t1 = b;
                        axis1 = k;
                    }
                }
                if t0 > t1 {
                    return None;
                }
                let (t, axis) = if t0 > RAY_EPS {
                    (t0, axis0)
                } else if t1 > RAY_EPS {
                    (t1, axis1)
                } else {
                    return None;
                };
                let mut p = o + d * t;
                // snap onto the face so the hit lies exactly on its plane
                p[axis] = if (p[axis] - lo[axis]).abs() <= (p[axis] - hi[axis]).abs() { lo[axis] } else { hi[axis] };
                Some((t, p))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub distance: f64,
    pub point: Vector3<f64>,
    pub surface: usize,
    pub reflectivity: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scene {
    pub surfaces: Vec<Surface>,
    /// Height of the water surface; `None` means everything is submerged.
    pub water_level: Option<f64>,
}

impl Scene {
    pub fn new(surfaces: Vec<Surface>, water_level: Option<f64>) -> Result<Self> {
        let scene = Scene { surfaces, water_level };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        for s in &self.surfaces {
            s.validate()?;
        }
        if let Some(w) = self.water_level {
            if !w.is_finite() {
                return Err(Error::InvalidParams("water level must be finite".into()));
            }
        }
        Ok(())
    }

    /// Nearest hit along a unit-direction ray in world coordinates.
    pub fn first_hit(&self, o: &Vector3<f64>, d: &Vector3<f64>) -> Option<RayHit> {
        let mut best: Option<RayHit> = None;
        for (i, s) in self.surfaces.iter().enumerate() {
            if let Some((t, p)) = s.intersect(o, d) {
                if best.is_none_or(|b| t < b.distance) {
                    best = Some(RayHit {
                        distance: t,
                        point: p,
                        surface: i,
                        reflectivity: s.reflectivity(),
                    });
                }
            }
        }
        best
    }

    /// Like [`Scene::first_hit`], but an underwater ray ends at the water surface.
    pub fn first_underwater_hit(&self, o: &Vector3<f64>, d: &Vector3<f64>) -> Option<RayHit> {
        let hit = self.first_hit(o, d)?;
        match self.water_level {
            Some(w) if hit.point.z > w => None,
            _ => Some(hit),
        }
    }

    /// Residual of `p` against the plane carrying `surface`'s hit face (0 on the surface).
    pub fn plane_residual(&self, surface: usize, p: &Vector3<f64>) -> f64 {
        match &self.surfaces[surface] {
            Surface::Plane { origin, edges, .. } => {
                let n = Vector3::from(edges[0]).cross(&Vector3::from(edges[1])).normalize();
                n.dot(&(p - Vector3::from(*origin)))
            }
            Surface::Box { origin, extent, .. } => {
                let lo = Vector3::from(*origin);
                let hi = lo + Vector3::from(*extent);
                (0..3)
                    .flat_map(|k| [(p[k] - lo[k]).abs(), (p[k] - hi[k]).abs()])
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_patch_hits_and_misses() {
        let s = Scene::new(
            vec![Surface::plane(Vector3::new(5.0, -1.0, -1.0), Vector3::new(0.0, 2.0, 0.0), Vector3::new(0.0, 0.0, 2.0), 1.0)],
            None,
        )
        .unwrap();
        let hit = s.first_hit(&Vector3::zeros(), &Vector3::x()).unwrap();
        assert!((hit.distance - 5.0).abs() < 1e-12);
        assert!(s.first_hit(&Vector3::zeros(), &-Vector3::x()).is_none());
        assert!(s.first_hit(&Vector3::zeros(), &Vector3::new(1.0, 1.0, 0.0).normalize()).is_none());
    }

    #[test]
    fn box_faces_and_inside() {
        let s = Scene::new(vec![Surface::aabb(Vector3::new(2.0, -1.0, -1.0), Vector3::new(1.0, 2.0, 2.0), 0.5)], None).unwrap();
        let hit = s.first_hit(&Vector3::zeros(), &Vector3::new(1.0, 0.2, 0.1).normalize()).unwrap();
        assert_eq!(hit.point.x, 2.0);
        assert_eq!(s.plane_residual(0, &hit.point), 0.0);
        let inside = s.first_hit(&Vector3::new(2.5, 0.0, 0.0), &Vector3::x()).unwrap();
        assert_eq!(inside.point.x, 3.0);
    }

    #[test]
    fn water_blocks_emerged_surfaces() {
        let s = Scene::new(
            vec![Surface::plane(Vector3::new(5.0, -1.0, 0.5), Vector3::new(0.0, 2.0, 0.0), Vector3::new(0.0, 0.0, 1.0), 1.0)],
            Some(0.0),
        )
        .unwrap();
        let up = Vector3::new(1.0, 0.0, 0.2).normalize();
        assert!(s.first_hit(&Vector3::zeros(), &up).is_some());
        assert!(s.first_underwater_hit(&Vector3::zeros(), &up).is_none());
    }

    #[test]
    fn invalid_surfaces() {
        assert!(Scene::new(vec![Surface::plane(Vector3::zeros(), Vector3::x(), Vector3::x() * 2.0, 1.0)], None).is_err());
        assert!(Scene::new(vec![Surface::aabb(Vector3::zeros(), Vector3::new(1.0, 0.0, 1.0), 1.0)], None).is_err());
        assert!(Scene::new(vec![Surface::aabb(Vector3::zeros(), Vector3::repeat(1.0), 0.0)], None).is_err());
    }

    #[test]
    fn json_form() {
        let s: Scene = serde_json::from_str(
            r#"{"surfaces":[{"type":"plane","origin":[1,0,0],"edges":[[0,1,0],[0,0,1]],"reflectivity":0.8},
                {"type":"box","origin":[0,0,0],"extent":[1,1,1],"reflectivity":1.0}],"water_level":0.0}"#,
        )
        .unwrap();
        assert_eq!(s.surfaces.len(), 2);
        assert_eq!(s.water_level, Some(0.0));
        s.validate().unwrap();
    }
}
