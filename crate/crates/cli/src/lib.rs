//! Batch entry points: `simulate` writes a synthetic dataset, `map` runs the
//! dual-sonar pipeline into a map, `eval` compares clouds.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or configuration error.

// Negated float comparisons are how NaN parameters get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dataset;
pub mod eval;
pub mod map;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde_json::json;

use seasky_core::associate::FusedPoint;
use seasky_core::io::{write_fused_xyz, write_map_xyz, write_ply};
use seasky_core::mapping::MapChannel;

use config::PipelineConfig;
use output::{write_atomic, write_json};

pub use map::pair_frames;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

impl From<seasky_core::Error> for CliError {
    fn from(e: seasky_core::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "seasky", version, about = "Dual orthogonal sonar mapping toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Pipeline configuration (JSON).
    #[arg(long, short)]
    pub config: PathBuf,
    /// Override the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a synthetic dataset from the configured scene and trajectory.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Dataset directory to write (overrides io.dataset_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the seabed-to-sky map from a dataset.
    Map {
        #[command(flatten)]
        common: Common,
        /// Dataset directory to read (overrides io.dataset_dir).
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Output directory (overrides io.output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Simulate the dataset in memory instead of reading one.
        #[arg(long)]
        simulate: bool,
    },
    /// Compare two clouds in the configured wall frame.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Cloud under test (.ply or .xyz).
        #[arg(long)]
        cloud: PathBuf,
        /// Reference cloud; defaults to the cloud under test.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Channels kept from the cloud under test (PLY only).
        #[arg(long, value_delimiter = ',', value_parser = parse_channel)]
        channels: Vec<MapChannel>,
        /// Channels kept from the reference cloud (PLY only).
        #[arg(long, value_delimiter = ',', value_parser = parse_channel)]
        reference_channels: Vec<MapChannel>,
        /// Ordered .xyz points to align onto `--align-reference`.
        #[arg(long, requires = "align_reference")]
        align: Option<PathBuf>,
        #[arg(long, requires = "align")]
        align_reference: Option<PathBuf>,
        /// Metrics file to write.
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_channel(s: &str) -> Result<MapChannel, String> {
    MapChannel::ALL
        .into_iter()
        .find(|c| c.name() == s)
        .ok_or_else(|| format!("unknown channel '{s}'"))
}

fn load_config(common: &Common) -> Result<PipelineConfig, CliError> {
    let mut cfg = PipelineConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn required_dir(flag: Option<PathBuf>, configured: &Option<PathBuf>, what: &str) -> Result<PathBuf, CliError> {
    flag.or_else(|| configured.clone())
        .ok_or_else(|| CliError::data(format!("no {what} directory: pass --{what} or set it in the config")))
}

fn manifest(command: &str, cfg: &PipelineConfig, counts: serde_json::Value) -> serde_json::Value {
    json!({
        "tool": "seasky",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config_sha256": cfg.hash(),
        "seed": cfg.seed,
        "counts": counts,
        "config": cfg,
    })
}

pub fn run_simulate(cfg: &PipelineConfig, out: &Path) -> Result<(), CliError> {
    let data = dataset::simulate(cfg)?;
    let files = dataset::write_dataset(out, &data)?;
    dataset::write_dataset_manifest(out, cfg, &data, &files)?;
    info!(
        "wrote {} horizontal, {} vertical frames and {} lidar scans to {}",
        data.horizontal.len(),
        data.vertical.len(),
        data.lidar.len(),
        out.display()
    );
    Ok(())
}

/// Runs the mapping pipeline and writes `map.ply`, `map.xyz`, `fused.xyz` (world frame),
/// `metrics.json` and `manifest.json` into `out`.
pub fn run_map(cfg: &PipelineConfig, data: &dataset::Dataset, out: &Path) -> Result<(), CliError> {
    let run = map::build_map(cfg, data)?;
    let mut metrics = serde_json::to_value(&run.metrics).expect("metrics serialise");
    if cfg.evaluation.wall_frame.is_some() {
        let pick = |c: MapChannel| run.map.channel_points(c).map(|p| p.point.vector()).collect::<Vec<_>>();
        match eval::compare_world(&pick(MapChannel::Stereo), &pick(MapChannel::Lidar), &cfg.evaluation) {
            Ok(cmp) => metrics["stereo_vs_lidar"] = serde_json::to_value(cmp).expect("comparison serialises"),
            Err(e) => warn!("stereo vs lidar evaluation skipped: {e}"),
        }
    }
    let h_mount = cfg.horizontal_mount();
    let fused_world: Vec<FusedPoint> = run
        .fused_by_pair
        .iter()
        .filter_map(|pair| {
            let to_world = data.trajectory.pose_at(pair.timestamp).ok()?.to_transform().compose(&h_mount);
            Some(pair.fused.iter().map(move |f| FusedPoint {
                position: to_world.apply_vector(&f.position),
                ..*f
            }))
        })
        .flatten()
        .collect();
    write_atomic(&out.join("map.ply"), |w| write_ply(w, &run.map.points))?;
    write_atomic(&out.join("map.xyz"), |w| write_map_xyz(w, &run.map.points))?;
    write_atomic(&out.join("fused.xyz"), |w| write_fused_xyz(w, &fused_world))?;
    write_json(&out.join("metrics.json"), &metrics)?;
    let counts = json!({
        "frame_pairs": run.metrics.frame_pairs,
        "skipped_frames": run.metrics.skipped_frames,
        "keyframes": run.metrics.keyframes,
        "channels": run.metrics.channel_counts,
    });
    write_json(&out.join("manifest.json"), &manifest("map", cfg, counts))?;
    info!("map with {} points written to {}", run.map.points.len(), out.display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { common, out } => {
            let cfg = load_config(&common)?;
            let out = required_dir(out, &cfg.io.dataset_dir, "out")?;
            run_simulate(&cfg, &out)
        }
        Command::Map {
            common,
            dataset,
            out,
            simulate,
        } => {
            let cfg = load_config(&common)?;
            let out = required_dir(out, &cfg.io.output_dir, "out")?;
            let data = if simulate {
                dataset::simulate(&cfg)?
            } else {
                dataset::read_dataset(&required_dir(dataset, &cfg.io.dataset_dir, "dataset")?)?
            };
            run_map(&cfg, &data, &out)
        }
        Command::Eval {
            common,
            cloud,
            reference,
            channels,
            reference_channels,
            align,
            align_reference,
            out,
        } => {
            let cfg = load_config(&common)?;
            let a = eval::load_cloud(&cloud, &channels)?;
            let b = match &reference {
                Some(r) => eval::load_cloud(r, &reference_channels)?,
                None => eval::load_cloud(&cloud, &reference_channels)?,
            };
            let mut report = json!({ "comparison": eval::compare_world(&a, &b, &cfg.evaluation)? });
            if let (Some(est), Some(reference)) = (align, align_reference) {
                report["alignment"] = serde_json::to_value(eval::align_points(&est, &reference)?).expect("alignment serialises");
            }
            write_json(&out, &report)
        }
    }
}

/// Parses `args` (including the program name) and runs the command, returning the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
