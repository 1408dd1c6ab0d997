//! `msie`: run pipeline stages over a JSON config.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use msie_core::eval::Variant;
use msie_core::pipeline::{Pipeline, PipelineConfig, PipelineError, Stage};

#[derive(Parser)]
#[command(name = "msie", version, about = "Multi-source listing price pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON configuration file; every key is optional.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for artifacts (overrides `out_dir` in the config).
    #[arg(short, long, global = true)]
    out_dir: Option<PathBuf>,

    /// Global seed (overrides `seed` in the config).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Feature blocks for train, evaluate and predict.
    #[arg(long, global = true, value_parser = parse_variant)]
    variant: Option<Variant>,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse()
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Generate a seeded synthetic dataset under <out>/data.
    Synth,
    /// Validate inputs and write the temporal train/test split.
    Ingest,
    /// Dataset summary statistics.
    Stats,
    /// Impute, standardize and select statistical features.
    SelectFeatures,
    /// Train CBOW word vectors and embed listing texts.
    TrainText,
    /// Score reviews with naive Bayes and average per listing.
    Sentiment,
    /// Write per-category listing/POI proximity graphs.
    BuildGraphs,
    /// Train per-category graph autoencoders and embed listings.
    EmbedSpatial,
    /// Align all feature blocks into the fused matrix.
    Fuse,
    /// Train the price regressor.
    Train,
    /// Score the trained regressor on the train and test splits.
    Evaluate,
    /// Retrain and score each feature-block variant.
    Ablate,
    /// Predict prices for every listing.
    Predict,
    /// Run every stage in order.
    All,
}

impl Command {
    fn stage(self) -> Option<Stage> {
        Some(match self {
            Command::Synth => Stage::Synth,
            Command::Ingest => Stage::Ingest,
            Command::Stats => Stage::Stats,
            Command::SelectFeatures => Stage::SelectFeatures,
            Command::TrainText => Stage::TrainText,
            Command::Sentiment => Stage::Sentiment,
            Command::BuildGraphs => Stage::BuildGraphs,
            Command::EmbedSpatial => Stage::EmbedSpatial,
            Command::Fuse => Stage::Fuse,
            Command::Train => Stage::Train,
            Command::Evaluate => Stage::Evaluate,
            Command::Ablate => Stage::Ablate,
            Command::Predict => Stage::Predict,
            Command::All => return None,
        })
    }
}

fn run(cli: &Cli) -> Result<PathBuf, PipelineError> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let out_dir = cli
        .out_dir
        .clone()
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("msie-out"));
    let mut pipeline = Pipeline::new(config, out_dir.clone())?;
    if let Some(v) = cli.variant {
        pipeline = pipeline.with_variant(v);
    }
    match cli.command.stage() {
        Some(stage) => pipeline.run(stage)?,
        None => pipeline.run_all()?,
    }
    Ok(out_dir)
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
    match run(&cli) {
        Ok(out) => {
            eprintln!("msie: done, artifacts in {}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("msie: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
