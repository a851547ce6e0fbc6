use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use costfuse_core::fusion::Normalization;
use costfuse_core::pipeline::{init_thread_pool, run_all, run_stage, RunConfig, Stage};
use costfuse_core::synthgen::{
    gen_dataset, gen_texture_standin_dataset, ingest_texture_dir, ColorTable, Subtype,
};
use costfuse_core::{Error, Result};

/// Color/shape/texture dictionary features fused with a supervised backend.
#[derive(Parser, Debug)]
#[command(name = "costfuse", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate datasets from a config, or one subtype directly with --subtype.
    Gen(GenArgs),
    /// Learn one dictionary per subtype.
    LearnDict(StageArgs),
    /// Per-class centroids in each dictionary's code space.
    Centroids(StageArgs),
    /// Encode identity images as distance-to-centroid vectors.
    Encode(StageArgs),
    /// Train the classifier on encoded vectors.
    TrainCost(StageArgs),
    /// Train the reference backend or import a precomputed score table.
    TrainBackend(StageArgs),
    /// Score verification pairs and gallery/probe matrices.
    Score(StageArgs),
    /// Grid-search α on validation pairs and refuse the scores.
    Fuse(StageArgs),
    /// ROC curves and GAR at 1% and 0.1% FAR.
    EvalVerify(StageArgs),
    /// CMC curves.
    EvalIdentify(StageArgs),
    /// Every stage listed in the config, in order.
    RunAll(StageArgs),
}

#[derive(Args, Debug)]
struct StageArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Worker threads; results are reproducible at a fixed count.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides `out_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fuse raw distances without per-channel min-max scaling.
    #[arg(long)]
    raw_fusion: bool,
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Run the config's gen stage instead of generating one subtype.
    #[arg(long, conflicts_with = "subtype")]
    config: Option<PathBuf>,
    /// Worker threads; results are reproducible at a fixed count.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory; overrides `out_dir` when used with --config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// color, shape or texture.
    #[arg(long)]
    subtype: Option<Subtype>,
    /// Images per class.
    #[arg(long, default_value_t = 1000)]
    per_class: usize,
    /// Square image side in pixels.
    #[arg(long, default_value_t = 64)]
    size: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sample red with unconstrained green and blue.
    #[arg(long)]
    wide_red: bool,
    /// Stand-in texture classes.
    #[arg(long, default_value_t = 47)]
    classes: usize,
    /// Ingest `<dir>/<class>/<image>` instead of generating textures.
    #[arg(long)]
    texture_dir: Option<PathBuf>,
}

fn load_config(path: &Path, out: Option<PathBuf>, raw_fusion: bool) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(out) = out {
        cfg.out_dir = out;
    }
    if raw_fusion {
        cfg.fusion.normalization = Normalization::None;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn threads(n: Option<usize>) -> Result<()> {
    match n {
        Some(0) => Err(Error::Config { field: "--threads".into(), msg: "must be ≥ 1".into() }),
        Some(n) => init_thread_pool(n),
        None => Ok(()),
    }
}

fn stage(args: &StageArgs, stage: Option<Stage>) -> Result<()> {
    threads(args.threads)?;
    let cfg = load_config(&args.config, args.out.clone(), args.raw_fusion)?;
    match stage {
        Some(s) => {
            let rec = run_stage(&cfg, s)?;
            println!("{s}: {} artifacts in {:.1}s", rec.artifacts.len(), rec.seconds);
        }
        None => {
            let m = run_all(&cfg)?;
            for r in &m.stages {
                println!("{}: {} artifacts in {:.1}s", r.stage, r.artifacts.len(), r.seconds);
            }
            println!("manifest: {}", cfg.out_dir.join(costfuse_core::pipeline::MANIFEST_FILE).display());
        }
    }
    Ok(())
}

fn gen(args: &GenArgs) -> Result<()> {
    threads(args.threads)?;
    if let Some(config) = &args.config {
        let cfg = load_config(config, args.out.clone(), false)?;
        let rec = run_stage(&cfg, Stage::Gen)?;
        println!("gen: {} artifacts in {:.1}s", rec.artifacts.len(), rec.seconds);
        return Ok(());
    }
    let subtype = args.subtype.ok_or_else(|| Error::Config {
        field: "--subtype".into(),
        msg: "required without --config".into(),
    })?;
    let out = args.out.clone().ok_or_else(|| Error::Config {
        field: "--out".into(),
        msg: "required without --config".into(),
    })?;
    let table = if args.wide_red { ColorTable::WideRed } else { ColorTable::Separable };
    let manifest = match (subtype, &args.texture_dir) {
        (Subtype::Texture, Some(dir)) => {
            let report = ingest_texture_dir(dir, args.size, &out)?;
            report.manifest.write_csv(&out.join("texture_manifest.csv"))?;
            if !report.skipped.is_empty() {
                eprintln!("skipped {} unreadable images", report.skipped.len());
            }
            report.manifest
        }
        (Subtype::Texture, None) => gen_texture_standin_dataset(args.classes, args.per_class, args.seed, args.size, &out)?,
        _ => gen_dataset(subtype, args.per_class, args.seed, args.size, &out, table)?,
    };
    println!("{subtype}: {} images, manifest {}", manifest.entries.len(), out.join(format!("{subtype}_manifest.csv")).display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let result = match &cli.command {
        Command::Gen(a) => gen(a),
        Command::LearnDict(a) => stage(a, Some(Stage::LearnDict)),
        Command::Centroids(a) => stage(a, Some(Stage::Centroids)),
        Command::Encode(a) => stage(a, Some(Stage::Encode)),
        Command::TrainCost(a) => stage(a, Some(Stage::TrainCost)),
        Command::TrainBackend(a) => stage(a, Some(Stage::TrainBackend)),
        Command::Score(a) => stage(a, Some(Stage::Score)),
        Command::Fuse(a) => stage(a, Some(Stage::Fuse)),
        Command::EvalVerify(a) => stage(a, Some(Stage::EvalVerify)),
        Command::EvalIdentify(a) => stage(a, Some(Stage::EvalIdentify)),
        Command::RunAll(a) => stage(a, None),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
