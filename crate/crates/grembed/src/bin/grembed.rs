use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use grembed::config::PipelineConfig;
use grembed::embed::Method;
use grembed::pipeline::{run_stage, Stage};
use grembed::synth::write_synthetic;
use grembed::Error;

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// JSON pipeline configuration; defaults apply when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed, overriding the config value
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Artifact directory, overriding the config value
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Restrict embed/cluster/recommend to one method
    #[arg(long, global = true, value_parser = ["node2vec", "spectral", "hope"])]
    method: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse reviews and friendships, filter active users
    Ingest,
    /// Build the similarity-weighted social graph
    Graph,
    /// Embed the graph (node2vec, spectral, hope)
    Embed,
    /// Cluster embedding rows with elbow-selected k
    Cluster,
    /// Neighbor-vote recommendations for the cohort
    Recommend,
    /// Train the fusion network and emit fused recommendations
    Hybrid,
    /// MAE and coverage tables for every recommender
    Evaluate,
    /// Run the whole chain
    All,
    /// Generate a planted-community dataset in ingest format
    Synth,
}

/// Graph-embedding social recommender pipeline.
#[derive(Parser, Debug)]
#[command(name = "grembed", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: CommonArgs,
}

fn effective_config(common: &CommonArgs) -> Result<PipelineConfig, Error> {
    let mut config = match &common.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
        config.synth.seed = seed;
    }
    if let Some(out) = &common.out {
        config.out_dir = out.clone();
    }
    Ok(config)
}

fn run(cli: &Cli) -> Result<(), Error> {
    let config = effective_config(&cli.common)?;
    let method = cli
        .common
        .method
        .as_deref()
        .map(|m| m.parse::<Method>().expect("validated by clap"));
    let stage = match cli.command {
        Command::Ingest => Stage::Ingest,
        Command::Graph => Stage::Graph,
        Command::Embed => Stage::Embed,
        Command::Cluster => Stage::Cluster,
        Command::Recommend => Stage::Recommend,
        Command::Hybrid => Stage::Hybrid,
        Command::Evaluate => Stage::Evaluate,
        Command::All => Stage::All,
        Command::Synth => {
            config.synth.validate()?;
            write_synthetic(&config.synth, &config.out_dir)?;
            return Ok(());
        }
    };
    run_stage(stage, &config, method)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::ConfigValidation(_)
                | Error::MalformedLine { .. }
                | Error::MissingField { .. }
                | Error::EmptyInput(_) => 2,
                Error::MissingArtifact(_) => 3,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}
