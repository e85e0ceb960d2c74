use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use leaderboard_extract::config::RunConfig;
use leaderboard_extract::context::ContextKind;
use leaderboard_extract::metrics::OverallMode;
use leaderboard_extract::pipeline::{self, Outcome};
use leaderboard_extract::Result;

/// LaTeX papers to (Task, Dataset, Metric, Score) leaderboards: corpus
/// preparation, prompt datasets, inference and evaluation.
#[derive(Parser)]
#[command(name = "lbx", version)]
struct Cli {
    /// JSON run configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    outdir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Corpus manifest (JSON Lines).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Merge each paper's LaTeX project into one file.
    Flatten,
    /// Extract DocTAET / DocREC / DocFULL contexts.
    Context(ContextArgs),
    /// Print corpus statistics per split.
    Stats,
    /// Build prompt datasets from context dumps.
    Dataset(DatasetArgs),
    /// Query a chat-completions endpoint over a dataset (resumable).
    Infer(InferArgs),
    /// Score predictions and write the report.
    Eval(EvalArgs),
    /// Re-render a saved report.json.
    Report(ReportArgs),
}

#[derive(Args)]
struct ContextArgs {
    #[arg(long = "kind", value_parser = parse_kind)]
    kinds: Vec<ContextKind>,
    /// External converter command, e.g. "pandoc --to=plain".
    #[arg(long, conflicts_with = "builtin_converter")]
    converter: Option<String>,
    /// Use the built-in markup stripper.
    #[arg(long)]
    builtin_converter: bool,
}

#[derive(Args)]
struct DatasetArgs {
    #[arg(long = "kind", value_parser = parse_kind)]
    kinds: Vec<ContextKind>,
    /// Directory holding <Kind>.jsonl context dumps.
    #[arg(long)]
    contexts: Option<PathBuf>,
    #[arg(long)]
    fraction: Option<f64>,
    #[arg(long)]
    budget: Option<usize>,
}

#[derive(Args)]
struct InferArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Predictions file, also used as the checkpoint.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    max_in_flight: Option<usize>,
    /// Only run these template ids.
    #[arg(long = "template")]
    templates: Vec<u32>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OverallArg {
    Macro,
    Micro,
}

#[derive(Args)]
struct EvalArgs {
    /// Prediction file as KIND=PATH, or a path named after its kind.
    #[arg(long = "predictions", required = true)]
    predictions: Vec<String>,
    #[arg(long)]
    threshold: Option<f64>,
    /// Score only these template ids.
    #[arg(long = "template", conflicts_with = "all_templates")]
    templates: Vec<u32>,
    #[arg(long)]
    all_templates: bool,
    #[arg(long, value_enum)]
    overall: Option<OverallArg>,
}

#[derive(Args)]
struct ReportArgs {
    /// A report.json written by `eval`.
    #[arg(long)]
    input: PathBuf,
    /// Output directory; defaults to the input's directory.
    #[arg(long)]
    dir: Option<PathBuf>,
}

fn parse_kind(s: &str) -> std::result::Result<ContextKind, String> {
    s.parse().map_err(|e: leaderboard_extract::Error| e.to_string())
}

fn effective_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(o) = &cli.outdir {
        cfg.outdir = o.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(m) = &cli.manifest {
        cfg.manifest = Some(m.clone());
    }
    match &cli.command {
        Command::Context(a) => {
            if !a.kinds.is_empty() {
                cfg.contexts = a.kinds.clone();
            }
            if a.builtin_converter {
                cfg.converter = None;
            } else if let Some(c) = &a.converter {
                cfg.converter = Some(c.clone());
            }
        }
        Command::Dataset(a) => {
            if !a.kinds.is_empty() {
                cfg.contexts = a.kinds.clone();
            }
            if let Some(f) = a.fraction {
                cfg.sample_fraction = f;
            }
            if let Some(b) = a.budget {
                cfg.budget_words = b;
            }
        }
        Command::Infer(a) => {
            if let Some(e) = &a.endpoint {
                cfg.inference.endpoint_url = e.clone();
            }
            if let Some(m) = &a.model {
                cfg.inference.model_name = m.clone();
            }
            if let Some(n) = a.max_in_flight {
                cfg.inference.max_in_flight = n;
            }
        }
        Command::Eval(a) => {
            if let Some(t) = a.threshold {
                cfg.eval.partial_threshold = t;
            }
            if a.all_templates {
                cfg.eval.template_filter = None;
            } else if !a.templates.is_empty() {
                cfg.eval.template_filter = Some(a.templates.clone());
            }
            if let Some(o) = a.overall {
                cfg.eval.overall_mode = match o {
                    OverallArg::Macro => OverallMode::Macro,
                    OverallArg::Micro => OverallMode::Micro,
                };
            }
        }
        Command::Flatten | Command::Stats | Command::Report(_) => {}
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = effective_config(cli)?;
    match &cli.command {
        Command::Flatten => pipeline::cmd_flatten(&cfg),
        Command::Context(_) => pipeline::cmd_context(&cfg),
        Command::Stats => {
            let (out, md) = pipeline::cmd_stats(&cfg)?;
            print!("{md}");
            Ok(out)
        }
        Command::Dataset(a) => pipeline::cmd_dataset(&cfg, a.contexts.as_deref()),
        Command::Infer(a) => {
            let templates = (!a.templates.is_empty()).then_some(a.templates.as_slice());
            pipeline::cmd_infer(&cfg, &a.dataset, a.output.as_deref(), templates)
        }
        Command::Eval(a) => {
            let sources = a
                .predictions
                .iter()
                .map(|s| pipeline::parse_prediction_source(s))
                .collect::<Result<Vec<_>>>()?;
            pipeline::cmd_eval(&cfg, &sources).map(|(out, _)| out)
        }
        Command::Report(a) => pipeline::cmd_report(&a.input, a.dir.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            for f in &out.files {
                println!("{}", f.display());
            }
            if !out.warnings.is_empty() {
                eprintln!("{} warning(s)", out.warnings.len());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
