use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wilt_core::batch::{list_pngs, run_batch};
use wilt_core::calibrate::{calibration_histograms, histograms_to_csv};
use wilt_core::config::OutputConfig;
use wilt_core::pipeline::{detect_file, write_artifacts};
use wilt_core::synth::{generate_scene, SceneSpec, TruthSidecar};
use wilt_core::{load_image, save_image, Error, PipelineConfig};

const EXIT_USAGE: u8 = 1;
const EXIT_PROCESSING: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

/// Detect fusarium wilt patches in field images.
#[derive(Parser)]
#[command(name = "wiltscan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run detection on a single PNG.
    Detect(RunArgs),
    /// Run detection on every PNG in a directory.
    Batch(RunArgs),
    /// Generate synthetic scenes with ground truth sidecars.
    Gen(GenArgs),
    /// Write per-category H/S/V histograms as CSV.
    CalibrateReport(CalibrateArgs),
}

#[derive(Args)]
struct Overrides {
    /// TOML pipeline configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Pin k and skip the elbow scan.
    #[arg(long)]
    k: Option<usize>,
    /// Elbow scan range, e.g. 2..20 (inclusive).
    #[arg(long, value_parser = parse_range)]
    k_range: Option<[usize; 2]>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Smallest contour area kept.
    #[arg(long)]
    min_area: Option<usize>,
    /// Comma-separated artifacts: masks,frames,overlay,report.
    #[arg(long)]
    emit: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    /// Input PNG (detect) or directory (batch).
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads for batch mode; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value = "scenes")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 1024)]
    width: u32,
    #[arg(long, default_value_t = 768)]
    height: u32,
    /// Blob count range, e.g. 3..6 (inclusive).
    #[arg(long, value_parser = parse_range, default_value = "3..6")]
    blobs: [usize; 2],
    #[arg(long, default_value_t = 0.005)]
    noise_rate: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    min_area: usize,
}

#[derive(Args)]
struct CalibrateArgs {
    /// PNG file or directory of PNGs.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_range(s: &str) -> Result<[usize; 2], String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("expected <lo>..<hi>, got `{s}`"))?;
    let lo: usize = lo
        .trim()
        .parse()
        .map_err(|e| format!("bad lower bound: {e}"))?;
    let hi: usize = hi
        .trim()
        .parse()
        .map_err(|e| format!("bad upper bound: {e}"))?;
    if lo > hi {
        return Err(format!("range {lo}..{hi} is empty"));
    }
    Ok([lo, hi])
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(e: impl ToString) -> Self {
        Self {
            code: EXIT_USAGE,
            message: e.to_string(),
        }
    }

    fn processing(e: impl ToString) -> Self {
        Self {
            code: EXIT_PROCESSING,
            message: e.to_string(),
        }
    }
}

fn build_config(path: Option<&Path>, o: Option<&Overrides>) -> Result<PipelineConfig, Failure> {
    let mut cfg = match path {
        Some(p) => PipelineConfig::load(p).map_err(Failure::usage)?,
        None => PipelineConfig::default(),
    };
    if let Some(o) = o {
        if let Some(k) = o.k {
            cfg.cluster.k = Some(k);
        }
        if let Some(r) = o.k_range {
            cfg.cluster.k_range = r;
        }
        if let Some(n) = o.iterations {
            cfg.cluster.iterations = n;
        }
        if let Some(s) = o.seed {
            cfg.seed = s;
        }
        if let Some(a) = o.min_area {
            cfg.contour.min_area = a;
        }
        if let Some(list) = &o.emit {
            cfg.output =
                OutputConfig::from_emit_list(list, cfg.output.timings).map_err(Failure::usage)?;
        }
    }
    cfg.validate().map_err(Failure::usage)?;
    Ok(cfg)
}

fn detect(args: &RunArgs) -> Result<u8, Failure> {
    let cfg = build_config(args.overrides.config.as_deref(), Some(&args.overrides))?;
    let stem = args
        .input
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Failure::usage(format!("no file name in {}", args.input.display())))?;
    let out = detect_file(&args.input, &cfg).map_err(Failure::processing)?;
    let written =
        write_artifacts(&args.out_dir, stem, &out, &cfg.output).map_err(Failure::processing)?;
    println!(
        "{}: {} contour(s) kept, {} wilt pixel(s)",
        args.input.display(),
        out.report.contours.len(),
        out.report.wilt_pixels
    );
    for p in written {
        println!("  wrote {}", p.display());
    }
    Ok(0)
}

fn batch(args: &RunArgs) -> Result<u8, Failure> {
    let cfg = build_config(args.overrides.config.as_deref(), Some(&args.overrides))?;
    let summary = run_batch(&args.input, &cfg, &args.out_dir, args.jobs).map_err(|e| match e {
        Error::EmptyDirectory(_) | Error::FileNotFound(_) => Failure::usage(e),
        other => Failure::processing(other),
    })?;
    println!(
        "{} image(s): {} succeeded, {} failed, {} contour(s) kept",
        summary.image_count, summary.succeeded, summary.failed, summary.total_contours
    );
    for f in &summary.failures {
        eprintln!("  failed {}: {}", f.image, f.error);
    }
    Ok(if summary.failed > 0 { EXIT_PARTIAL } else { 0 })
}

fn gen(args: &GenArgs) -> Result<u8, Failure> {
    std::fs::create_dir_all(&args.out_dir).map_err(Failure::processing)?;
    for i in 0..args.count {
        let mut spec = SceneSpec::new(args.width, args.height, args.seed.wrapping_add(i as u64));
        spec.noise_rate = args.noise_rate;
        spec.min_area = args.min_area;
        let spec = spec
            .with_random_blobs(args.blobs[0], args.blobs[1])
            .map_err(Failure::usage)?;
        let (img, truth) = generate_scene(&spec).map_err(Failure::usage)?;
        let stem = format!("scene-{i:03}");
        let png = args.out_dir.join(format!("{stem}.png"));
        save_image(&img, &png).map_err(Failure::processing)?;
        let sidecar = TruthSidecar::new(&spec, &truth)
            .to_json()
            .map_err(Failure::processing)?;
        std::fs::write(args.out_dir.join(format!("{stem}.truth.json")), sidecar)
            .map_err(Failure::processing)?;
        println!("wrote {} ({} blob(s))", png.display(), truth.blobs.len());
    }
    Ok(0)
}

fn calibrate(args: &CalibrateArgs) -> Result<u8, Failure> {
    let cfg = build_config(args.config.as_deref(), None)?;
    let paths = if args.input.is_dir() {
        list_pngs(&args.input).map_err(Failure::usage)?
    } else {
        vec![args.input.clone()]
    };
    if paths.is_empty() {
        return Err(Failure::usage(Error::EmptyDirectory(args.input.clone())));
    }
    let images = paths
        .iter()
        .map(load_image)
        .collect::<Result<Vec<_>, _>>()
        .map_err(Failure::processing)?;
    let hists = calibration_histograms(&images, &cfg).map_err(Failure::processing)?;
    let csv = histograms_to_csv(&hists);
    match &args.out {
        Some(p) => std::fs::write(p, csv).map_err(Failure::processing)?,
        None => print!("{csv}"),
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Detect(a) => detect(a),
        Command::Batch(a) => batch(a),
        Command::Gen(a) => gen(a),
        Command::CalibrateReport(a) => calibrate(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
