use std::path::{Path, PathBuf};

use seasky_cli::config::PipelineConfig;
use seasky_cli::dataset::expected_counts;
use seasky_cli::{run, EXIT_DATA, EXIT_OK, EXIT_USAGE};
use seasky_core::io::read_ply;
use seasky_core::mapping::MapChannel;
use seasky_core::simulate::{Scene, TrajectoryKind};

fn seasky(args: &[&str]) -> i32 {
    run(std::iter::once("seasky").chain(args.iter().copied()))
}

fn short_config(dir: &Path, length_m: f64) -> PathBuf {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/canal_wall.json");
    let mut cfg = PipelineConfig::load(&path).unwrap();
    cfg.simulate.trajectory.as_mut().unwrap().kind = TrajectoryKind::Line { length_m };
    cfg.io = Default::default();
    cfg.evaluation.segment = None;
    let out = dir.join("config.json");
    std::fs::write(&out, serde_json::to_vec_pretty(&cfg).unwrap()).unwrap();
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(p).unwrap()).unwrap()
}

#[test]
fn simulate_then_map_has_every_channel() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path(), 2.0);
    let data = dir.path().join("data");
    let out = dir.path().join("map");
    assert_eq!(seasky(&["simulate", "-c", s(&cfg), "--out", s(&data)]), EXIT_OK);

    let loaded = PipelineConfig::load(&cfg).unwrap();
    let manifest = read_json(&data.join("manifest.json"));
    let poses = manifest["counts"]["poses"].as_u64().unwrap() as usize;
    let (h, v, l) = expected_counts(poses, &loaded);
    assert_eq!(manifest["counts"]["horizontal_frames"], h);
    assert_eq!(manifest["counts"]["vertical_frames"], v);
    assert_eq!(manifest["counts"]["lidar_scans"], l);
    assert_eq!(manifest["config_sha256"], loaded.hash());
    // 2 m at 1 m/s and 30 Hz: 61 poses, every 2nd / 3rd / 30th
    assert_eq!((poses, h, v, l), (61, 31, 21, 3));

    assert_eq!(seasky(&["map", "-c", s(&cfg), "--dataset", s(&data), "--out", s(&out)]), EXIT_OK);
    let points = read_ply(&out.join("map.ply")).unwrap();
    for c in MapChannel::ALL {
        assert!(points.iter().any(|p| p.channel == c), "no {} points", c.name());
    }
    let metrics = read_json(&out.join("metrics.json"));
    assert_eq!(metrics["skipped_frames"], 0);
    let fused = seasky_core::io::read_xyz(&out.join("fused.xyz")).unwrap();
    assert_eq!(fused.len() as u64, metrics["fused_points"].as_u64().unwrap());
    assert_eq!(seasky_core::io::read_xyz(&out.join("map.xyz")).unwrap().len(), points.len());
    assert_eq!(metrics["channel_counts"]["stereo"], metrics["fused_points"]);
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["command"], "map");
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(manifest["counts"]["channels"]["lidar"], metrics["channel_counts"]["lidar"]);
}

#[test]
fn map_from_disk_matches_in_memory_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path(), 1.0);
    let data = dir.path().join("data");
    assert_eq!(seasky(&["simulate", "-c", s(&cfg), "--out", s(&data)]), EXIT_OK);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(seasky(&["map", "-c", s(&cfg), "--dataset", s(&data), "--out", s(&a)]), EXIT_OK);
    assert_eq!(seasky(&["map", "-c", s(&cfg), "--simulate", "--out", s(&b)]), EXIT_OK);
    // sidecar bearings are stored in degrees, so projections may differ in the last ulp
    let (pa, pb) = (read_ply(&a.join("map.ply")).unwrap(), read_ply(&b.join("map.ply")).unwrap());
    assert_eq!(pa.len(), pb.len());
    for (x, y) in pa.iter().zip(&pb) {
        assert_eq!(x.channel, y.channel);
        assert_eq!(x.timestamp, y.timestamp);
        assert!((x.point.vector() - y.point.vector()).norm() < 1e-9);
    }
}

#[test]
fn missing_trajectory_leaves_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path(), 1.0);
    let data = dir.path().join("data");
    let out = dir.path().join("map");
    assert_eq!(seasky(&["simulate", "-c", s(&cfg), "--out", s(&data)]), EXIT_OK);
    std::fs::remove_file(data.join("trajectory.csv")).unwrap();
    assert_eq!(seasky(&["map", "-c", s(&cfg), "--dataset", s(&data), "--out", s(&out)]), EXIT_DATA);
    assert!(!out.join("map.ply").exists());
    assert!(!out.exists() || std::fs::read_dir(&out).unwrap().next().is_none());
}

#[test]
fn malformed_frames_are_skipped_until_none_remain() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path(), 1.0);
    let data = dir.path().join("data");
    assert_eq!(seasky(&["simulate", "-c", s(&cfg), "--out", s(&data)]), EXIT_OK);
    let sidecars = |side: &str| -> Vec<PathBuf> {
        let mut v: Vec<PathBuf> = std::fs::read_dir(data.join("frames").join(side))
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        v.sort();
        v
    };
    std::fs::write(&sidecars("horizontal")[0], "{ not json").unwrap();
    let out = dir.path().join("one_bad");
    assert_eq!(seasky(&["map", "-c", s(&cfg), "--dataset", s(&data), "--out", s(&out)]), EXIT_OK);
    assert_eq!(read_json(&out.join("metrics.json"))["skipped_frames"], 1);

    for p in sidecars("horizontal").into_iter().chain(sidecars("vertical")) {
        std::fs::write(p, "{}").unwrap();
    }
    let out = dir.path().join("all_bad");
    assert_eq!(seasky(&["map", "-c", s(&cfg), "--dataset", s(&data), "--out", s(&out)]), EXIT_DATA);
    assert!(!out.join("map.ply").exists());
}

#[test]
fn seed_override_changes_noisy_dataset_only_through_seed() {
    let dir = tempfile::tempdir().unwrap();
    let base = short_config(dir.path(), 0.5);
    let mut cfg = PipelineConfig::load(&base).unwrap();
    cfg.simulate.noise.speckle_density = 0.01;
    std::fs::write(&base, serde_json::to_vec(&cfg).unwrap()).unwrap();
    let run_with = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        assert_eq!(seasky(&["simulate", "-c", s(&base), "--seed", seed, "--out", s(&out)]), EXIT_OK);
        std::fs::read(out.join("frames/horizontal/000000.pgm")).unwrap()
    };
    assert_eq!(run_with("a", "1"), run_with("b", "1"));
    assert_ne!(run_with("a", "1"), run_with("c", "2"));
}

#[test]
fn empty_scene_gives_blank_frames() {
    let dir = tempfile::tempdir().unwrap();
    let path = short_config(dir.path(), 0.2);
    let mut cfg = PipelineConfig::load(&path).unwrap();
    cfg.simulate.scene = Scene::default();
    std::fs::write(&path, serde_json::to_vec(&cfg).unwrap()).unwrap();
    let data = dir.path().join("data");
    assert_eq!(seasky(&["simulate", "-c", s(&path), "--out", s(&data)]), EXIT_OK);
    let (_, img) = seasky_core::io::read_frame(&data.join("frames/vertical/000000.pgm")).unwrap();
    assert_eq!(img.max_value(), 0.0);
}

#[test]
fn invalid_inputs_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"simulate": {"scene": {"surfaces": [{"type": "plane"}]}}}"#).unwrap();
    let out = dir.path().join("out");
    assert_eq!(seasky(&["simulate", "-c", s(&bad), "--out", s(&out)]), EXIT_DATA);
    assert_eq!(seasky(&["simulate", "-c", s(&dir.path().join("absent.json")), "--out", s(&out)]), EXIT_DATA);
    assert_eq!(seasky(&["map"]), EXIT_USAGE);
    assert_eq!(seasky(&["frobnicate"]), EXIT_USAGE);
    assert_eq!(seasky(&["--help"]), EXIT_OK);
    assert!(!out.exists());
}

#[test]
fn eval_self_comparison_and_alignment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path(), 1.0);
    let out = dir.path().join("map");
    assert_eq!(seasky(&["map", "-c", s(&cfg), "--simulate", "--out", s(&out)]), EXIT_OK);
    let ply = out.join("map.ply");

    let report = dir.path().join("self.json");
    assert_eq!(
        seasky(&["eval", "-c", s(&cfg), "--cloud", s(&ply), "--channels", "stereo", "--reference-channels", "stereo", "--out", s(&report)]),
        EXIT_OK
    );
    let r = read_json(&report);
    assert_eq!(r["comparison"]["hellinger"].as_f64().unwrap(), 0.0);
    assert!((r["comparison"]["mean_cosine"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let est = dir.path().join("est.xyz");
    let truth = dir.path().join("truth.xyz");
    std::fs::write(&truth, "0 0 0\n1 0 0\n0 1 0\n0 0 1\n").unwrap();
    std::fs::write(&est, "1 2 3\n2 2 3\n1 3 3\n1 2 4\n").unwrap();
    let report = dir.path().join("aligned.json");
    assert_eq!(
        seasky(&["eval", "-c", s(&cfg), "--cloud", s(&ply), "--align", s(&est), "--align-reference", s(&truth), "--out", s(&report)]),
        EXIT_OK
    );
    let r = read_json(&report);
    assert!(r["alignment"]["mean_error"].as_f64().unwrap() < 1e-9);
    assert!((r["alignment"]["translation"][0].as_f64().unwrap() + 1.0).abs() < 1e-9);

    std::fs::write(&truth, "0 0 0\n1 0 0\n0 1 0\n").unwrap();
    let report = dir.path().join("mismatch.json");
    assert_eq!(
        seasky(&["eval", "-c", s(&cfg), "--cloud", s(&ply), "--align", s(&est), "--align-reference", s(&truth), "--out", s(&report)]),
        EXIT_DATA
    );
    assert!(!report.exists());

    let missing = dir.path().join("missing.ply");
    assert_eq!(seasky(&["eval", "-c", s(&cfg), "--cloud", s(&missing), "--out", s(&report)]), EXIT_DATA);
    assert_eq!(seasky(&["eval", "-c", s(&cfg), "--cloud", s(&ply), "--channels", "sonar", "--out", s(&report)]), EXIT_USAGE);
}
