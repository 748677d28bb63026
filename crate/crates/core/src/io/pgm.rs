use std::io::{BufRead, Read, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::open;
use crate::sonar::{PolarSonarImage, SonarIntrinsics, SonarSide};
use crate::{Error, Result};

/// JSON sidecar stored next to each PGM frame: the intrinsics keys, `timestamp_s` and `side`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMeta {
    pub side: SonarSide,
    #[serde(rename = "timestamp_s")]
    pub timestamp: f64,
    #[serde(flatten)]
    pub intrinsics: SonarIntrinsics,
}

pub fn sidecar_path(pgm: &Path) -> PathBuf {
    pgm.with_extension("json")
}

/// Binary PGM (P5): rows are range bins, columns beams. 16-bit images are big-endian.
pub fn write_pgm<W: Write>(mut w: W, img: &PolarSonarImage) -> std::io::Result<()> {
    let max = img.intrinsics().full_scale();
    let (rows, cols) = img.data().dim();
    write!(w, "P5\n{cols} {rows}\n{max}\n")?;
    let wide = img.intrinsics().bit_depth() == 16;
    let mut buf = Vec::with_capacity(rows * cols * if wide { 2 } else { 1 });
    for v in img.data().iter() {
        let v = v.round().clamp(0.0, max) as u16;
        if wide {
            buf.extend_from_slice(&v.to_be_bytes());
        } else {
            buf.push(v as u8);
        }
    }
    w.write_all(&buf)?;
    w.flush()
}

fn header_token<R: BufRead>(r: &mut R) -> std::io::Result<String> {
    let mut tok = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        r.read_exact(&mut byte)?;
        match byte[0] {
            b'#' if tok.is_empty() => {
                let mut skip = Vec::new();
                r.read_until(b'\n', &mut skip)?;
            }
            b if b.is_ascii_whitespace() => {
                if !tok.is_empty() {
                    return Ok(String::from_utf8_lossy(&tok).into_owned());
                }
            }
            b => tok.push(b),
        }
    }
}

/// Reads a P5 file whose shape and depth must agree with `intrinsics`.
pub fn read_pgm(path: &Path, intrinsics: &SonarIntrinsics, timestamp: f64) -> Result<PolarSonarImage> {
    let mut r = open(path)?;
    let bad = |reason: String| Error::format("PGM", path, reason);
    let mut tokens = Vec::new();
    for _ in 0..4 {
        tokens.push(header_token(&mut r).map_err(|e| bad(format!("truncated header: {e}")))?);
    }
    if tokens[0] != "P5" {
        return Err(bad(format!("magic {:?} is not P5", tokens[0])));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("bad header number {s:?}")));
    let (cols, rows, max) = (num(&tokens[1])?, num(&tokens[2])?, num(&tokens[3])?);
    if rows != intrinsics.num_range_bins() || cols != intrinsics.num_beams() {
        return Err(bad(format!(
            "{rows}x{cols} image, metadata expects {}x{}",
            intrinsics.num_range_bins(),
            intrinsics.num_beams()
        )));
    }
    if max as f64 != intrinsics.full_scale() {
        return Err(bad(format!("maxval {max} does not match bit depth {}", intrinsics.bit_depth())));
    }
    let wide = max > 255;
    let mut raw = vec![0u8; rows * cols * if wide { 2 } else { 1 }];
    r.read_exact(&mut raw).map_err(|e| bad(format!("truncated pixel data: {e}")))?;
    let values: Vec<f64> = if wide {
        raw.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as f64).collect()
    } else {
        raw.iter().map(|&b| b as f64).collect()
    };
    let data = Array2::from_shape_vec((rows, cols), values).map_err(|e| bad(e.to_string()))?;
    PolarSonarImage::new(*intrinsics, data, timestamp)
}

/// Reads a PGM frame together with its sidecar metadata.
pub fn read_frame(pgm: &Path) -> Result<(FrameMeta, PolarSonarImage)> {
    let side = sidecar_path(pgm);
    let meta: FrameMeta = serde_json::from_reader(open(&side)?).map_err(|e| Error::format("frame metadata", &side, e))?;
    let img = read_pgm(pgm, &meta.intrinsics, meta.timestamp)?;
    Ok((meta, img))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image(bit_depth: u8) -> PolarSonarImage {
        let intr = SonarIntrinsics::new(5, 7, 10.0, -0.4, 0.4, 0.3, bit_depth).unwrap();
        let full = intr.full_scale();
        let data = Array2::from_shape_fn((7, 5), |(r, c)| ((r * 37 + c * 101) as f64 * 13.0) % (full + 1.0));
        PolarSonarImage::new(intr, data, 3.25).unwrap()
    }

    #[test]
    fn round_trip_both_depths() {
        let dir = tempfile::tempdir().unwrap();
        for depth in [8, 16] {
            let img = image(depth);
            let path = dir.path().join(format!("f{depth}.pgm"));
            write_pgm(std::fs::File::create(&path).unwrap(), &img).unwrap();
            let back = read_pgm(&path, img.intrinsics(), 3.25).unwrap();
            assert_eq!(back.data(), img.data());
        }
    }

    #[test]
    fn frame_with_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let img = image(8);
        let path = dir.path().join("h_000.pgm");
        write_pgm(std::fs::File::create(&path).unwrap(), &img).unwrap();
        let meta = FrameMeta { side: SonarSide::Horizontal, timestamp: 3.25, intrinsics: *img.intrinsics() };
        let text = serde_json::to_string(&meta).unwrap();
        let keys: serde_json::Value = serde_json::from_str(&text).unwrap();
        for k in ["side", "timestamp_s", "num_beams", "num_range_bins", "max_range_m", "bearing_min_deg", "vertical_aperture_deg"] {
            assert!(keys.get(k).is_some(), "sidecar lacks {k}");
        }
        std::fs::write(sidecar_path(&path), text).unwrap();
        let (m, back) = read_frame(&path).unwrap();
        assert_eq!((m.side, m.timestamp), (meta.side, meta.timestamp));
        // bearings are stored in degrees, so they round-trip to within an ulp or two
        assert!((m.intrinsics.bearing_min() - meta.intrinsics.bearing_min()).abs() < 1e-12);
        assert_eq!(m.intrinsics.num_beams(), meta.intrinsics.num_beams());
        assert_eq!(back.timestamp(), 3.25);
        assert_eq!(back.data(), img.data());
    }

    #[test]
    fn rejects_mismatch_and_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let img = image(8);
        let path = dir.path().join("x.pgm");
        write_pgm(std::fs::File::create(&path).unwrap(), &img).unwrap();
        let other = SonarIntrinsics::new(6, 7, 10.0, -0.4, 0.4, 0.3, 8).unwrap();
        assert!(matches!(read_pgm(&path, &other, 0.0), Err(Error::Format { .. })));
        std::fs::write(&path, b"P2\n1 1\n255\n0").unwrap();
        assert!(matches!(read_pgm(&path, img.intrinsics(), 0.0), Err(Error::Format { .. })));
        assert!(matches!(read_pgm(&dir.path().join("missing.pgm"), img.intrinsics(), 0.0), Err(Error::Io { .. })));
        std::fs::write(&path, b"P5\n5 7\n255\n\x01\x02").unwrap();
        assert!(matches!(read_pgm(&path, img.intrinsics(), 0.0), Err(Error::Format { .. })));
    }
}
