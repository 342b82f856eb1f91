//! `synthcd` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 input error, 3 generation error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{error, info, warn};
use synthcd_core::map_ingest::{load_elevation, load_map, validate_map, IngestOptions};
use synthcd_core::metrics::evaluate_dirs;
use synthcd_core::pipeline::{dataset_stats, generate_dataset, tile_dataset, GenerationConfig, PipelineError};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_GENERATION: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "synthcd", version, about = "Synthetic change-detection dataset generator")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a dataset from a TOML config.
    Generate {
        #[arg(long)]
        config: PathBuf,
        /// Override a config key, e.g. `render.msaa=3`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Shorthand for `run.master_seed=<SEED>`.
        #[arg(long)]
        seed: Option<u64>,
        /// Shorthand for `run.workers=<N>`.
        #[arg(long)]
        workers: Option<usize>,
        /// Print the effective config as TOML and exit.
        #[arg(long)]
        dump_config: bool,
    },
    /// Print QA statistics of a generated dataset as JSON.
    Stats {
        manifest: PathBuf,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cut every sample of a dataset into square patches.
    Tile {
        #[arg(long, default_value_t = 352)]
        size: usize,
        #[arg(long, default_value_t = 352)]
        stride: usize,
        manifest: PathBuf,
        outdir: PathBuf,
    },
    /// Score predicted confidence maps against ground-truth masks.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        /// Write the CSV table to this file instead of stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Parse a map (and optionally an elevation grid) and report findings.
    ValidateMap {
        map: PathBuf,
        #[arg(long)]
        elevation: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl ToString) -> Self {
        Self { code: EXIT_INPUT, message: message.to_string() }
    }

    fn generation(message: impl ToString) -> Self {
        Self { code: EXIT_GENERATION, message: message.to_string() }
    }

    fn pipeline(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(_) | PipelineError::Input(_) | PipelineError::Json(..) => Self::input(e),
            PipelineError::Generation(_) | PipelineError::Output(_) | PipelineError::Io { .. } => Self::generation(e),
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_env("SYNTHCD_LOG")
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .try_init();
}

fn parse_override(raw: &str) -> Result<(String, String), Failure> {
    match raw.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(Failure { code: EXIT_USAGE, message: format!("override `{raw}` is not KEY=VALUE") }),
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::generation(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| Failure::generation(format!("{}: {e}", path.display())))
}

fn generate(
    config: &Path,
    overrides: &[String],
    seed: Option<u64>,
    workers: Option<usize>,
    dump: bool,
) -> Result<(), Failure> {
    let text = fs::read_to_string(config).map_err(|e| Failure::input(format!("{}: {e}", config.display())))?;
    let mut pairs = overrides.iter().map(|o| parse_override(o)).collect::<Result<Vec<_>, _>>()?;
    if let Some(s) = seed {
        pairs.push(("run.master_seed".into(), s.to_string()));
    }
    if let Some(w) = workers {
        pairs.push(("run.workers".into(), w.to_string()));
    }
    let cfg = GenerationConfig::from_toml(&text, &pairs, config.parent()).map_err(Failure::pipeline)?;
    if dump {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let out = generate_dataset(&cfg).map_err(Failure::pipeline)?;
    println!("{}", out.manifest_path.display());
    info!("{} rendered, {} reused", out.rendered, out.skipped);
    if !out.manifest.errors.is_empty() {
        for e in &out.manifest.errors {
            error!("scene {} change {} condition {}: {}", e.scene_id, e.change_id, e.condition_index, e.message);
        }
        return Err(Failure::generation(format!("{} samples failed", out.manifest.errors.len())));
    }
    Ok(())
}

fn stats(manifest: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let report = dataset_stats(manifest).map_err(Failure::pipeline)?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    if report.containment_failures > 0 || report.missing_files > 0 {
        warn!("{} containment failures, {} missing files", report.containment_failures, report.missing_files);
    }
    if let Some(path) = out {
        write_text(path, &json)?;
    }
    print!("{json}");
    Ok(())
}

fn tile(manifest: &Path, outdir: &Path, size: usize, stride: usize) -> Result<(), Failure> {
    let report = tile_dataset(manifest, outdir, size, stride).map_err(Failure::pipeline)?;
    info!("{} patches written to {}", report.patches.len(), outdir.display());
    println!("{}", report.patches.len());
    Ok(())
}

fn eval(pred: &Path, gt: &Path, threshold: f64, csv: Option<&Path>) -> Result<(), Failure> {
    let report = evaluate_dirs(pred, gt, threshold).map_err(Failure::input)?;
    let table = report.to_csv().map_err(Failure::input)?;
    for r in [&report.micro, &report.macro_] {
        eprintln!(
            "{:<6} iou {:.4}  precision {:.4}  recall {:.4}  f1 {:.4}",
            r.name, r.iou, r.precision, r.recall, r.f1
        );
    }
    match csv {
        Some(path) => write_text(path, &table),
        None => {
            print!("{table}");
            Ok(())
        }
    }
}

fn validate(map: &Path, elevation: Option<&Path>) -> Result<(), Failure> {
    let doc = load_map(map, &IngestOptions::default()).map_err(|e| Failure::input(format!("{}: {e}", map.display())))?;
    if let Some(path) = elevation {
        load_elevation(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    }
    let report = validate_map(&doc);
    println!(
        "{} buildings, {} roads, {} landcover, {} findings",
        doc.buildings.len(),
        doc.roads.len(),
        doc.landcover.len(),
        report.findings.len()
    );
    for f in &report.findings {
        println!("{f}");
    }
    Ok(())
}

/// Runs the command line `argv` (program name first) and returns the exit
/// code.
pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    init_logging(cli.verbose);
    let result = match &cli.command {
        Command::Generate { config, overrides, seed, workers, dump_config } => {
            generate(config, overrides, *seed, *workers, *dump_config)
        }
        Command::Stats { manifest, out } => stats(manifest, out.as_deref()),
        Command::Tile { size, stride, manifest, outdir } => tile(manifest, outdir, *size, *stride),
        Command::Eval { pred, gt, threshold, csv } => eval(pred, gt, *threshold, csv.as_deref()),
        Command::ValidateMap { map, elevation } => validate(map, elevation.as_deref()),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("synthcd: {}", f.message);
            f.code
        }
    }
}

pub fn main_exit() -> ExitCode {
    ExitCode::from(run(std::env::args_os()))
}
