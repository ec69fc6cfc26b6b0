mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use roicodec::image_io::{read_pgm, read_probability_map, write_pgm};
use roicodec::metrics::MetricsRecord;
use roicodec::pipeline::{compress_as, with_workers};
use roicodec::sweep::{load_corpus, sweep, synthetic_corpus, write_corpus, SweepConfig};
use roicodec::{decompress, jpegls, BudgetRule, CompressionParams, JpeglsParams, RoiMask};

use config::Config;

#[derive(Parser, Debug)]
#[command(name = "roicodec", version, about = "ROI-preserving JPEG-LS compression of grayscale images")]
struct Cli {
    /// key = value file; command-line flags take precedence
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads (output is identical for any count)
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compress an image, keeping the ROI of a probability map lossless
    Compress(CompressArgs),
    /// Decode a JPEG-LS stream to PGM
    Decompress {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// ROI distortion and compression ratio of a processed image
    Metrics {
        original: PathBuf,
        processed: PathBuf,
        ground_truth: PathBuf,
    },
    /// Sweep gamma0 over a corpus and write per-image and mean rows as CSV
    Sweep(SweepArgs),
    /// Write a synthetic corpus (image, probability map, ground truth)
    Synth {
        /// Inclusive range `a..b`, `a..=b`, or a comma list
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long)]
        size: Option<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Default)]
struct PipelineFlags {
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, overrides_with = "edges")]
    no_edges: bool,
    #[arg(long, overrides_with = "no_edges")]
    edges: bool,
    /// Skip background smoothing
    #[arg(long, overrides_with = "smoothing")]
    no_smoothing: bool,
    #[arg(long, overrides_with = "no_smoothing")]
    smoothing: bool,
    /// Also reduce 4x4 background blocks inside split 8x8 blocks
    #[arg(long = "truncate-4x4")]
    truncate_4x4: bool,
    #[arg(long, value_name = "min|max")]
    eq1: Option<BudgetRule>,
    #[arg(long)]
    canny_high: Option<f64>,
    #[arg(long)]
    canny_low_ratio: Option<f64>,
    #[arg(long)]
    canny_sigma: Option<f64>,
    #[arg(long)]
    prob_threshold: Option<f64>,
}

#[derive(Args, Debug)]
struct CompressArgs {
    image: PathBuf,
    probability: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    gamma0: Option<usize>,
    #[command(flatten)]
    pipeline: PipelineFlags,
    #[arg(long, value_name = "CSV")]
    dump_plan: Option<PathBuf>,
    #[arg(long, value_name = "PGM")]
    dump_edges: Option<PathBuf>,
    #[arg(long, value_name = "PGM")]
    dump_processed: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    corpus: PathBuf,
    /// Comma-separated budgets
    #[arg(long)]
    gamma0: Option<String>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    gt_dir: Option<PathBuf>,
    /// Run with edges on and off in one sweep
    #[arg(long)]
    compare_edges: bool,
    #[command(flatten)]
    pipeline: PipelineFlags,
}

fn tagged<T, E: std::fmt::Display>(stage: &str, r: std::result::Result<T, E>) -> Result<T> {
    r.map_err(|e| anyhow!("{stage}: {e}"))
}

fn read(stage: &str, path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("{stage}: {}", path.display()))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("output: {}", path.display()))
}

fn resolve_params(flags: &PipelineFlags, cfg: &Config, gamma0: Option<usize>) -> Result<CompressionParams> {
    let d = CompressionParams::default();
    let params = CompressionParams {
        gamma0: cfg.pick(gamma0, "gamma0")?.unwrap_or(d.gamma0),
        sigma: cfg.pick(flags.sigma, "sigma")?.unwrap_or(d.sigma),
        smoothing: cfg.switch(flags.smoothing, flags.no_smoothing, "smoothing", d.smoothing)?,
        canny_high: cfg.pick(flags.canny_high, "canny-high")?.unwrap_or(d.canny_high),
        canny_low_ratio: cfg.pick(flags.canny_low_ratio, "canny-low-ratio")?.unwrap_or(d.canny_low_ratio),
        canny_sigma: cfg.pick(flags.canny_sigma, "canny-sigma")?.unwrap_or(d.canny_sigma),
        prob_threshold: cfg.pick(flags.prob_threshold, "prob-threshold")?.unwrap_or(d.prob_threshold),
        use_edges: cfg.switch(flags.edges, flags.no_edges, "edges", d.use_edges)?,
        truncate_4x4: cfg.flag(flags.truncate_4x4, "truncate-4x4")?,
        eq1: cfg.pick(flags.eq1, "eq1")?.unwrap_or(d.eq1),
        jpegls: JpeglsParams::default(),
    };
    tagged("validate", params.validate())?;
    Ok(params)
}

fn resolve_workers(cli: Option<usize>, cfg: &Config) -> Result<usize> {
    let workers = cfg.pick(cli, "workers")?.unwrap_or(1);
    if workers == 0 {
        bail!("validate: workers must be at least 1");
    }
    Ok(workers)
}

fn output_path(flag: Option<PathBuf>, cfg: &Config) -> Result<PathBuf> {
    cfg.pick(flag, "output")?
        .ok_or_else(|| anyhow!("args: an output path is required (-o)"))
}

fn parse_gamma_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|e| anyhow!("args: gamma0 `{t}`: {e}"))
        })
        .collect()
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = |e: std::num::ParseIntError| anyhow!("args: seeds `{s}`: {e}");
    let seeds: Vec<u64> = if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(bad)?;
        let b: u64 = b.trim().trim_start_matches('=').parse().map_err(bad)?;
        (a..=b).collect()
    } else {
        s.split(',')
            .map(|t| t.trim().parse::<u64>().map_err(bad))
            .collect::<Result<_>>()?
    };
    if seeds.is_empty() {
        bail!("args: seeds `{s}` is empty");
    }
    Ok(seeds)
}

fn run_compress(args: CompressArgs, cfg: &Config, workers: usize) -> Result<()> {
    let params = resolve_params(&args.pipeline, cfg, args.gamma0)?;
    let output = output_path(args.output, cfg)?;
    let image = tagged("input", read_pgm(&read("input", &args.image)?))?;
    let prob = tagged("input", read_probability_map(&read("input", &args.probability)?))?;

    let (prepared, result) = with_workers(workers, || compress_as::<f64>(&image, &prob, &params))
        .map_err(|e| anyhow!("validate: {e}"))?
        .map_err(|e| anyhow!("{e}"))?;
    write(&output, &result.stream)?;

    if let Some(path) = cfg.pick(args.dump_plan, "dump-plan")? {
        let mut buf = Vec::new();
        prepared.plan().write_csv(&mut buf).context("output: plan")?;
        write(&path, &buf)?;
    }
    if let Some(path) = cfg.pick(args.dump_edges, "dump-edges")? {
        write(&path, &write_pgm(&prepared.edges().to_image()))?;
    }
    if let Some(path) = cfg.pick(args.dump_processed, "dump-processed")? {
        write(&path, &write_pgm(&result.processed))?;
    }

    let m = &result.metrics;
    let s = &result.summary;
    println!(
        "n_o={} n_b={} cr={:.4} roi_pixels={} nroi_8x8={} roi_8x8_split={} nroi_4x4={} roi_4x4={}",
        m.n_o,
        m.n_b,
        m.cr,
        prepared.mask().count(),
        s.nroi_8x8,
        s.roi_8x8_split,
        s.nroi_4x4,
        s.roi_4x4
    );
    Ok(())
}

fn run_metrics(original: &Path, processed: &Path, ground_truth: &Path) -> Result<()> {
    let orig = tagged("input", read_pgm(&read("input", original)?))?;
    let proc = tagged("input", read_pgm(&read("input", processed)?))?;
    let gt = tagged("input", RoiMask::from_pgm(&read("input", ground_truth)?))?;
    let n_o = tagged("encode", jpegls::encode(&orig, &JpeglsParams::default()))?.len();
    let n_b = tagged("encode", jpegls::encode(&proc, &JpeglsParams::default()))?.len();
    let m = tagged("metrics", MetricsRecord::<f64>::evaluate(&orig, &proc, &gt, n_o, n_b))?;
    let fmt = |v: Option<String>| v.unwrap_or_else(|| "n/a".into());
    println!("n_o={}", m.n_o);
    println!("n_b={}", m.n_b);
    println!("cr={:.6}", m.cr);
    println!("n_g={}", m.n_g);
    println!("mse={}", fmt(m.mse.map(|v| format!("{v:.6}"))));
    println!(
        "psnr={}",
        fmt(m.psnr.map(|p| match p.finite() {
            Some(v) => format!("{v:.4}"),
            None => p.to_string(),
        }))
    );
    Ok(())
}

fn run_sweep(args: SweepArgs, cfg: &Config, workers: usize) -> Result<()> {
    let params = resolve_params(&args.pipeline, cfg, None)?;
    let gammas = match cfg.pick(args.gamma0, "gamma0")? {
        Some(list) => parse_gamma_list(&list)?,
        None => vec![1, 4, 8, 16, 32, 64],
    };
    let output = output_path(args.output, cfg)?;
    let gt_dir = cfg.pick(args.gt_dir, "gt-dir")?;
    let corpus = tagged("input", load_corpus(&args.corpus, gt_dir.as_deref()))?;

    let mut config = SweepConfig::new(gammas, params);
    config.workers = workers;
    if cfg.flag(args.compare_edges, "compare-edges")? {
        config.edge_modes = vec![true, false];
    }
    let outcome = tagged("sweep", sweep(&corpus, &config))?;

    let mut buf = Vec::new();
    outcome.write_csv(&mut buf).context("output: csv")?;
    write(&output, &buf)?;
    for &edges in &config.edge_modes {
        let mode = if edges { "on" } else { "off" };
        match outcome.recommended_gamma0(edges) {
            Some(g) => println!("edges={mode} recommended_gamma0={g}"),
            None => println!("edges={mode} recommended_gamma0=n/a"),
        }
    }
    Ok(())
}

fn run_synth(seeds: Option<String>, size: Option<usize>, output: Option<PathBuf>, cfg: &Config) -> Result<()> {
    let seeds = parse_seeds(&cfg.pick(seeds, "seeds")?.unwrap_or_else(|| "0..19".into()))?;
    let size = cfg.pick(size, "size")?.unwrap_or(512);
    let dir = output_path(output, cfg)?;
    let items = tagged("synth", synthetic_corpus(seeds, size))?;
    fs::create_dir_all(&dir).with_context(|| format!("output: {}", dir.display()))?;
    write_corpus(&dir, &items).with_context(|| format!("output: {}", dir.display()))?;
    println!("wrote {} images to {}", items.len(), dir.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let workers = resolve_workers(cli.workers, &cfg)?;
    match cli.command {
        Command::Compress(args) => run_compress(args, &cfg, workers),
        Command::Decompress { input, output } => {
            let image = tagged("decode", decompress(&read("input", &input)?))?;
            write(&output, &write_pgm(&image))
        }
        Command::Metrics {
            original,
            processed,
            ground_truth,
        } => run_metrics(&original, &processed, &ground_truth),
        Command::Sweep(args) => run_sweep(args, &cfg, workers),
        Command::Synth { seeds, size, output } => run_synth(seeds, size, output, &cfg),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("roicodec: {e:#}");
            ExitCode::FAILURE
        }
    }
}
