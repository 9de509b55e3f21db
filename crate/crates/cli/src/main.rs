//! `capmorph`: metamorphic testing of image captioning systems.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use capmorph_core::analysis::LexiconTagger;
use capmorph_core::audit::AuditOptions;
use capmorph_core::oracle::OracleOptions;
use capmorph_core::pipeline::{self, PipelineConfig};
use capmorph_core::pool::{self, ClassFilter, PoolManifest};
use capmorph_core::provider::{load_provider_config, CaptionCache, CaptionError, CaptionService, RetryPolicy};
use capmorph_core::report::{render_report, ReportFormat};
use capmorph_core::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

const EXIT_VIOLATIONS: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_PROVIDER: u8 = 3;

#[derive(Parser)]
#[command(name = "capmorph", version, about = "Metamorphic testing for image captioning systems")]
struct Cli {
    /// Pipeline config (TOML). Relative paths inside resolve against its directory.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for image stages (0 = all cores); overrides the config.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Class lexicon JSON; overrides the bundled one.
    #[arg(long, global = true)]
    lexicon: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Object pool management.
    Pool {
        #[command(subcommand)]
        command: PoolCommand,
    },
    /// Sample background-object pairs and write one image per overlap interval.
    Synthesize(SynthesizeArgs),
    /// Caption every background and synthesized image.
    Caption(CaptionArgs),
    /// Evaluate the metamorphic relations and write suspicious issues.
    Check(CheckArgs),
    /// Flag ground-truth captions that omit classes the captioner reliably sees.
    Audit(AuditArgs),
    /// Merge human labels into the issues and compute precision.
    Eval(EvalArgs),
    /// Render the latest run summary.
    Report(ReportArgs),
}

#[derive(Subcommand)]
enum PoolCommand {
    /// Cut annotated instances into an object pool and index the backgrounds.
    Build(PoolBuildArgs),
}

#[derive(Args)]
struct PoolBuildArgs {
    /// COCO instance annotation file.
    #[arg(long)]
    annotations: PathBuf,
    /// Directory holding the annotated images.
    #[arg(long)]
    images: PathBuf,
    /// Keep only these classes (comma separated).
    #[arg(long, value_delimiter = ',')]
    classes: Vec<String>,
    /// Mark background boxes as detector output rather than ground truth.
    #[arg(long)]
    detector: bool,
}

#[derive(Args)]
struct SynthesizeArgs {
    #[arg(long)]
    pairs: Option<usize>,
    /// Number of overlap intervals, including the zero interval.
    #[arg(long)]
    n: Option<usize>,
    /// Write label-preserving baseline transforms of backgrounds instead.
    #[arg(long)]
    baseline: bool,
}

#[derive(Args)]
struct CaptionArgs {
    /// Provider config; overrides the config file.
    #[arg(long)]
    provider: Option<PathBuf>,
    #[arg(long)]
    max_in_flight: Option<usize>,
    /// Skip the on-disk caption cache.
    #[arg(long)]
    no_cache: bool,
}

#[derive(Args)]
struct CheckArgs {
    /// Compare captions of baseline transforms instead.
    #[arg(long)]
    baseline: bool,
    /// Ignore classes that appear only in the synthesized caption.
    #[arg(long)]
    relaxed: bool,
}

#[derive(Args)]
struct AuditArgs {
    /// COCO caption annotation file with the ground-truth captions.
    #[arg(long)]
    ground_truth: PathBuf,
    #[arg(long, default_value = "coco")]
    source: String,
    /// Compare classes directly instead of super-categories.
    #[arg(long)]
    no_super_categories: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
    Markdown,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Text => ReportFormat::Text,
            Format::Json => ReportFormat::Json,
            Format::Markdown => ReportFormat::Markdown,
        }
    }
}

#[derive(Args)]
struct EvalArgs {
    /// Labels JSONL: {"id", "error", "notes"} per line.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Compute precision over the labeled subset only.
    #[arg(long)]
    partial: bool,
    /// Evaluate the baseline issues instead.
    #[arg(long)]
    baseline: bool,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

enum Failure {
    Input(Error),
    Provider(CaptionError),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Caption(c) => Failure::Provider(c),
            other => Failure::Input(other),
        }
    }
}

impl From<CaptionError> for Failure {
    fn from(e: CaptionError) -> Self {
        Failure::Provider(e)
    }
}

type Outcome = Result<u8, Failure>;

fn load_config(cli: &Cli) -> Result<PipelineConfig, Error> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    if let Some(o) = &cli.out {
        cfg.paths.out = o.clone();
    }
    if let Some(l) = &cli.lexicon {
        cfg.paths.lexicon = Some(l.clone());
    }
    Ok(cfg)
}

fn absolute(p: &Path) -> Result<PathBuf, Error> {
    std::path::absolute(p).map_err(|e| Error::io(p, e))
}

fn pool_build(cfg: &PipelineConfig, args: &PoolBuildArgs) -> Outcome {
    let filter = if args.classes.is_empty() {
        ClassFilter::AllSingleWord
    } else {
        ClassFilter::only(&args.classes)
    };
    let mut ingestion = pool::ingest_annotations(&args.annotations, &absolute(&args.images)?, &filter)?;
    if args.detector {
        for r in &mut ingestion.records {
            r.provenance = capmorph_core::geometry::Provenance::Detector;
        }
    }
    let built = pool::build_pool(&ingestion.records, &cfg.paths.pool)?;
    let backgrounds = pool::background_index(&ingestion.records);
    pool::write_backgrounds(&cfg.backgrounds_path(), &backgrounds)?;
    println!(
        "pool: {} objects in {} classes ({} skipped, {} multi-word annotations dropped); {} backgrounds",
        built.manifest.len(),
        built.manifest.class_index.len(),
        built.skipped.len(),
        ingestion.dropped_multi_word,
        backgrounds.len()
    );
    Ok(0)
}

fn synthesize(cfg: &mut PipelineConfig, args: &SynthesizeArgs) -> Outcome {
    if let Some(p) = args.pairs {
        cfg.pairs = p;
    }
    if let Some(n) = args.n {
        cfg.tuning.n = n;
    }
    let backgrounds = pool::load_backgrounds(&cfg.backgrounds_path())?;
    if args.baseline {
        let m = pipeline::synthesize_baseline(&backgrounds, cfg)?;
        println!("baseline: {} transformed images of {} backgrounds", m.entries.len(), m.backgrounds.len());
        return Ok(0);
    }
    let pool = PoolManifest::load(&cfg.paths.pool)?;
    let m = pipeline::synthesize(&pool, &backgrounds, cfg)?;
    let images: usize = m.pairs.iter().map(|p| p.images.len()).sum();
    println!(
        "synthesized {images} images from {} pairs ({} backgrounds); {} infeasible draws resampled",
        m.pairs.len(),
        m.backgrounds.len(),
        m.rejected_infeasible
    );
    Ok(0)
}

fn caption(cfg: &PipelineConfig, args: &CaptionArgs) -> Outcome {
    let provider_path = args
        .provider
        .clone()
        .or_else(|| cfg.provider.clone())
        .ok_or_else(|| Error::InvalidInput("no provider config; pass --provider or set `provider`".into()))?;
    let provider_cfg = load_provider_config(&provider_path)?;
    let provider = provider_cfg.build()?;
    let cache = if args.no_cache {
        None
    } else {
        Some(CaptionCache::open(&cfg.paths.cache, provider.id())?)
    };
    let service = CaptionService::new(Arc::clone(&provider), cache, RetryPolicy::default());
    let run = pipeline::caption_images(&cfg.paths.out, &service, args.max_in_flight.unwrap_or(cfg.max_in_flight))?;
    println!(
        "captioned {} images ({} requests, {} from cache, {} failed)",
        run.records.len(),
        run.requests_made(),
        run.records.len() - run.requests_made(),
        run.failures.len()
    );
    if let Some((id, e)) = run.failures.into_iter().next() {
        eprintln!("error: {id}: {e}");
        return Err(Failure::Provider(e));
    }
    Ok(0)
}

fn check(cfg: &PipelineConfig, args: &CheckArgs) -> Outcome {
    let run = if args.baseline {
        pipeline::check_baseline_run(&cfg.paths.out)?
    } else {
        let lexicon = cfg.lexicon()?;
        let tagger = LexiconTagger::new(lexicon.clone());
        let options = OracleOptions {
            relaxed_mr1: args.relaxed || cfg.relaxed_mr1,
        };
        pipeline::check(&cfg.paths.out, &lexicon, &tagger, options)?
    };
    let pairs: usize = run.summary.pairs_per_interval.iter().sum();
    println!("{} suspicious issue(s) among {pairs} caption pairs", run.issues.len());
    Ok(if run.issues.is_empty() { 0 } else { EXIT_VIOLATIONS })
}

fn audit(cfg: &PipelineConfig, args: &AuditArgs) -> Outcome {
    let lexicon = cfg.lexicon()?;
    let tagger = LexiconTagger::new(lexicon.clone());
    let options = AuditOptions {
        super_categories: cfg.audit_super_categories && !args.no_super_categories,
    };
    let report = pipeline::audit(&cfg.paths.out, &args.ground_truth, &args.source, &lexicon, &tagger, options)?;
    print!("{}", capmorph_core::audit::render_audit_summary(&report));
    Ok(0)
}

fn eval(cfg: &PipelineConfig, args: &EvalArgs) -> Outcome {
    let run = pipeline::eval(&cfg.paths.out, args.labels.as_deref(), args.partial, args.baseline)?;
    if let Some(m) = &run.merge {
        info!("applied {} label(s); {} duplicate id(s)", m.applied, m.duplicates.len());
    }
    print!("{}", render_report(&run.summary, args.format.into()));
    Ok(0)
}

fn report(cfg: &PipelineConfig, args: &ReportArgs) -> Outcome {
    let summary = pipeline::load_summary(&cfg.paths.out)?;
    let doc = render_report(&summary, args.format.into());
    match &args.output {
        Some(p) => capmorph_core::io::write_bytes(p, doc.as_bytes())?,
        None => print!("{doc}"),
    }
    Ok(0)
}

fn run(cli: &Cli) -> Outcome {
    let mut cfg = load_config(cli)?;
    match &cli.command {
        Command::Pool {
            command: PoolCommand::Build(args),
        } => pool_build(&cfg, args),
        Command::Synthesize(args) => synthesize(&mut cfg, args),
        Command::Caption(args) => caption(&cfg, args),
        Command::Check(args) => check(&cfg, args),
        Command::Audit(args) => audit(&cfg, args),
        Command::Eval(args) => eval(&cfg, args),
        Command::Report(args) => report(&cfg, args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Provider(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_PROVIDER)
        }
    }
}
