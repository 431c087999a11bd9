//! Batch CLI over the item-network pipeline. Every stage subcommand runs
//! the stage's dependency closure; content-digest caching keeps already
//! computed stages from being redone.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use itemnet::fixtures::{self, FixtureSpec};
use itemnet::pipeline::{self, PipelineError, RunConfig, RunManifest, Stage};
use itemnet::types::MeasureKind;

#[derive(Parser)]
#[command(
    name = "itemnet",
    version,
    about = "Extract subject-area article networks and measure their cross-language similarity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse the dumps and induce per-language item networks
    Extract(StageArgs),
    /// Compute per-article feature matrices for the enabled views
    Features(StageArgs),
    /// Run all pairwise similarity comparisons
    Compare(StageArgs),
    /// Compute randomized lower bounds and observed upper-bound curves
    Baseline(StageArgs),
    /// Correlation and language-network analytics
    Analyze(StageArgs),
    /// Render similarity heatmaps
    Report(StageArgs),
    /// Run every stage end to end
    Run(StageArgs),
    /// Generate a synthetic corpus with known similarity expectations
    Fixture(FixtureArgs),
}

#[derive(Args)]
struct StageArgs {
    /// Path to the JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Override the configured seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated measure subset: ges,ejs,deltacon,cgs,sv1,sv2,sv3
    #[arg(long, value_delimiter = ',')]
    measures: Option<Vec<String>>,
    /// Worker threads (defaults to all cores)
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct FixtureArgs {
    /// Full fixture specification as JSON; overrides the preset flags
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Built-in regime: twins, strangers or half-twins
    #[arg(long, default_value = "twins")]
    preset: String,
    #[arg(long, default_value_t = 3)]
    languages: usize,
    #[arg(long, default_value_t = 2)]
    areas: usize,
    #[arg(long, default_value_t = 6)]
    members: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Directory receiving items.jsonl, articles.jsonl and expected.json
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Extract(args) => run_stage(args, Stage::Extract),
        Command::Features(args) => run_stage(args, Stage::Features),
        Command::Compare(args) => run_stage(args, Stage::Compare),
        Command::Baseline(args) => run_stage(args, Stage::Baseline),
        Command::Analyze(args) => run_stage(args, Stage::Analyze),
        Command::Report(args) => run_stage(args, Stage::Report),
        Command::Run(args) => {
            let config = load_config(&args)?;
            let manifest = pipeline::run(&config)?;
            print_summary(&manifest, &config);
            Ok(())
        }
        Command::Fixture(args) => generate_fixture(args),
    }
}

fn run_stage(args: StageArgs, stage: Stage) -> Result<(), PipelineError> {
    let config = load_config(&args)?;
    let manifest = pipeline::run_until(&config, stage, false)?;
    print_summary(&manifest, &config);
    Ok(())
}

fn load_config(args: &StageArgs) -> Result<RunConfig, PipelineError> {
    let mut config = RunConfig::from_file(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.out {
        config.out_dir = out.clone();
    }
    if let Some(jobs) = args.jobs {
        config.jobs = Some(jobs);
    }
    if let Some(measures) = &args.measures {
        let parsed: Result<Vec<MeasureKind>, String> =
            measures.iter().map(|m| m.parse::<MeasureKind>()).collect();
        config.measures = parsed.map_err(PipelineError::Config)?;
    }
    config.validate()?;
    Ok(config)
}

fn print_summary(manifest: &RunManifest, config: &RunConfig) {
    for stage in &manifest.stages {
        let status =
            if stage.cached { "cached".to_owned() } else { format!("{} ms", stage.duration_ms) };
        let counters: Vec<String> =
            stage.counters.iter().map(|(k, v)| format!("{k}={v}")).collect();
        println!("{:<10} {:<10} {}", stage.name, status, counters.join(" "));
    }
    println!(
        "done: {} comparisons, outputs in {}",
        manifest.counter("comparisons_executed"),
        config.out_dir.display()
    );
}

fn generate_fixture(args: FixtureArgs) -> Result<(), PipelineError> {
    let spec: FixtureSpec = match &args.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                PipelineError::Config(format!("cannot read spec {}: {e}", path.display()))
            })?;
            serde_json::from_str(&text)
                .map_err(|e| PipelineError::Config(format!("invalid fixture spec: {e}")))?
        }
        None => match args.preset.as_str() {
            "twins" => FixtureSpec::twins(args.languages, args.areas, args.members, args.seed),
            "strangers" => {
                FixtureSpec::strangers(args.languages, args.areas, args.members, args.seed)
            }
            "half-twins" => {
                FixtureSpec::half_twins(args.languages, args.areas, args.members, args.seed)
            }
            other => {
                return Err(PipelineError::Config(format!(
                    "unknown preset `{other}` (expected twins, strangers or half-twins)"
                )))
            }
        },
    };
    let files = fixtures::generate(&spec, &args.out)?;
    let expected = fixtures::expectations(&spec);
    println!("items:     {}", files.items.display());
    println!("articles:  {}", files.articles.display());
    println!("expected:  {} ({} forced values)", files.expected.display(), expected.cases.len());
    println!("languages: {}", expected.languages.join(","));
    println!("roots:     {}", expected.oecd_roots.join(","));
    Ok(())
}
