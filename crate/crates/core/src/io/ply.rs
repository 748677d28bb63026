use std::io::{BufRead, Read, Write};
use std::path::Path;

use super::open;
use crate::mapping::{MapChannel, MapPoint};
use crate::sonar::CartesianPoint;
use crate::{Error, Result};

/// Binary little-endian PLY: x, y, z, intensity, timestamp as doubles plus a channel byte.
pub fn write_ply<W: Write>(mut w: W, points: &[MapPoint]) -> std::io::Result<()> {
    write!(
        w,
        "ply\nformat binary_little_endian 1.0\ncomment channels 0=lidar 1=stereo 2=edge_h 3=edge_v\n\
         element vertex {}\nproperty double x\nproperty double y\nproperty double z\n\
         property double intensity\nproperty double timestamp\nproperty uchar channel\nend_header\n",
        points.len()
    )?;
    let mut buf = Vec::with_capacity(points.len() * 41);
    for p in points {
        for v in [p.point.x, p.point.y, p.point.z, p.point.intensity, p.timestamp] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        buf.push(p.channel.code());
    }
    w.write_all(&buf)?;
    w.flush()
}

#[derive(Clone, Copy)]
enum Scalar {
    U8,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "uchar" | "uint8" => Scalar::U8,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::U8 => 1,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn decode(self, b: &[u8]) -> f64 {
        match self {
            Scalar::U8 => b[0] as f64,
            Scalar::I32 => i32::from_le_bytes(b.try_into().unwrap()) as f64,
            Scalar::U32 => u32::from_le_bytes(b.try_into().unwrap()) as f64,
            Scalar::F32 => f32::from_le_bytes(b.try_into().unwrap()) as f64,
            Scalar::F64 => f64::from_le_bytes(b.try_into().unwrap()),
        }
    }
}

/// Reads a binary little-endian PLY vertex list. `x`, `y`, `z` are required;
/// `intensity`, `timestamp` and `channel` default to 0, 0 and lidar.
pub fn read_ply(path: &Path) -> Result<Vec<MapPoint>> {
    let mut r = open(path)?;
    let bad = |reason: String| Error::format("PLY", path, reason);
    let mut line = String::new();
    let mut next_line = |r: &mut dyn BufRead| -> Result<String> {
        line.clear();
        let n = r.read_line(&mut line).map_err(|e| bad(e.to_string()))?;
        if n == 0 {
            return Err(bad("unexpected end of header".into()));
        }
        Ok(line.trim().to_string())
    };
    if next_line(&mut r)? != "ply" {
        return Err(bad("missing ply magic".into()));
    }
    let mut count = None;
    let mut props: Vec<(String, Scalar)> = Vec::new();
    let mut in_vertex = false;
    loop {
        let l = next_line(&mut r)?;
        let parts: Vec<&str> = l.split_whitespace().collect();
        match parts.as_slice() {
            ["end_header"] => break,
            ["format", fmt, _] if *fmt != "binary_little_endian" => return Err(bad(format!("unsupported format {fmt}"))),
            ["element", "vertex", n] => {
                count = Some(n.parse::<usize>().map_err(|_| bad(format!("bad vertex count {n}")))?);
                in_vertex = true;
            }
            ["element", ..] => in_vertex = false,
            ["property", "list", ..] if in_vertex => return Err(bad("list properties are not supported".into())),
            ["property", ty, name] if in_vertex => {
                let s = Scalar::parse(ty).ok_or_else(|| bad(format!("unsupported type {ty}")))?;
                props.push((name.to_string(), s));
            }
            _ => {}
        }
    }
    let count = count.ok_or_else(|| bad("no vertex element".into()))?;
    let find = |name: &str| props.iter().position(|(n, _)| n == name);
    let (ix, iy, iz) = match (find("x"), find("y"), find("z")) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => return Err(bad("x, y and z are required".into())),
    };
    let (ii, it, ic) = (find("intensity"), find("timestamp"), find("channel"));
    let offsets: Vec<usize> = props
        .iter()
        .scan(0, |off, (_, s)| {
            let o = *off;
            *off += s.size();
            Some(o)
        })
        .collect();
    let stride: usize = props.iter().map(|(_, s)| s.size()).sum();
    let mut raw = vec![0u8; count * stride];
    r.read_exact(&mut raw).map_err(|e| bad(format!("truncated vertex data: {e}")))?;
    let mut out = Vec::with_capacity(count);
    for rec in raw.chunks_exact(stride) {
        let get = |k: usize| {
            let s = props[k].1;
            s.decode(&rec[offsets[k]..offsets[k] + s.size()])
        };
        let channel = match ic {
            Some(k) => {
                let code = get(k);
                MapChannel::from_code(code as u8).ok_or_else(|| bad(format!("unknown channel {code}")))?
            }
            None => MapChannel::Lidar,
        };
        out.push(MapPoint {
            point: CartesianPoint::new(get(ix), get(iy), get(iz), ii.map_or(0.0, get)),
            channel,
            timestamp: it.map_or(0.0, get),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ply");
        let pts: Vec<MapPoint> = (0..20)
            .map(|i| MapPoint {
                point: CartesianPoint::new(i as f64 * 0.1, -1.0 / (i + 1) as f64, 1e-7 * i as f64, 200.0),
                channel: MapChannel::ALL[i % 4],
                timestamp: 0.5 * i as f64,
            })
            .collect();
        write_ply(std::fs::File::create(&path).unwrap(), &pts).unwrap();
        assert_eq!(read_ply(&path).unwrap(), pts);
        write_ply(std::fs::File::create(&path).unwrap(), &[]).unwrap();
        assert!(read_ply(&path).unwrap().is_empty());
    }

    #[test]
    fn reads_minimal_float_cloud() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.ply");
        let mut bytes = b"ply\nformat binary_little_endian 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nend_header\n".to_vec();
        for v in [1.5f32, -2.0, 0.25] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::write(&path, bytes).unwrap();
        let pts = read_ply(&path).unwrap();
        assert_eq!(pts[0].point, CartesianPoint::new(1.5, -2.0, 0.25, 0.0));
        assert_eq!(pts[0].channel, MapChannel::Lidar);
    }

    #[test]
    fn rejects_ascii_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.ply");
        std::fs::write(&path, b"ply\nformat ascii 1.0\nelement vertex 0\nend_header\n").unwrap();
        assert!(matches!(read_ply(&path), Err(Error::Format { .. })));
        std::fs::write(&path, b"ply\nformat binary_little_endian 1.0\nelement vertex 2\nproperty double x\nproperty double y\nproperty double z\nend_header\n\0\0").unwrap();
        assert!(matches!(read_ply(&path), Err(Error::Format { .. })));
    }
}
