//! `converge` CLI: graph validation, retrieval, annotation, evaluation,
//! and synthetic data generation as inspectable pipeline stages.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::PipelineArgs;

#[derive(Debug, Parser)]
#[command(
    name = "converge",
    version,
    about = "Convergence-centric retrieval over typed knowledge graphs"
)]
struct Cli {
    /// TOML config file with defaults; command-line flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a graph or print its statistics.
    Graph(GraphArgs),
    /// Run retrieval (no LLM) and dump ranked candidates as JSON.
    Retrieve(RetrieveArgs),
    /// Annotate samples with one LLM call each; write results JSONL.
    Annotate(AnnotateArgs),
    /// Score a results file against the dataset and ontology.
    Eval(EvalArgs),
    /// Generate a synthetic graph, dataset, ontology, and manifest.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct GraphArgs {
    #[command(subcommand)]
    action: GraphAction,
}

#[derive(Debug, Subcommand)]
enum GraphAction {
    /// Load and validate the node/edge files; nonzero exit on any error.
    Validate(GraphPaths),
    /// Print node, edge, per-type, per-relation counts and mean degree.
    Stats(GraphPaths),
    /// Emit an OBO ontology as graph TSV fragments (CellType nodes plus
    /// IS_A edges) so graph nodes and ontology terms share identifiers.
    FromObo(FromOboArgs),
}

#[derive(Debug, Args)]
struct FromOboArgs {
    #[arg(long)]
    obo: Option<PathBuf>,
    /// Semantic type assigned to the emitted nodes.
    #[arg(long, default_value = "CellType")]
    node_type: String,
    #[arg(long)]
    out_nodes: PathBuf,
    #[arg(long)]
    out_edges: PathBuf,
}

#[derive(Debug, Args)]
struct GraphPaths {
    #[arg(long)]
    graph_nodes: Option<PathBuf>,
    #[arg(long)]
    graph_edges: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RetrieveArgs {
    #[arg(long)]
    graph_nodes: Option<PathBuf>,
    #[arg(long)]
    graph_edges: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Retrieve a single sample by cell id.
    #[arg(long, conflicts_with = "all")]
    cell_id: Option<String>,
    /// Retrieve every sample in the dataset.
    #[arg(long)]
    all: bool,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Attach the full support-table dump to every record.
    #[arg(long)]
    dump_support: bool,
    /// Output file (JSONL); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Parallel sample workers.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Debug, Args)]
struct AnnotateArgs {
    #[arg(long)]
    graph_nodes: Option<PathBuf>,
    #[arg(long)]
    graph_edges: Option<PathBuf>,
    #[arg(long)]
    obo: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Use the deterministic mock client instead of an HTTP endpoint.
    #[arg(long)]
    mock: bool,
    /// Assemble and save prompts, make zero LLM calls.
    #[arg(long)]
    dry_run: bool,
    /// Directory for --dry-run prompt files.
    #[arg(long, default_value = "prompts")]
    prompt_dir: PathBuf,
    /// Append traversal paths to each evidence block.
    #[arg(long)]
    include_paths: bool,
    /// List all cell-type names from the graph in the prompt.
    #[arg(long)]
    label_space: bool,
    /// Chat-completion endpoint base URL.
    #[arg(long)]
    base_url: Option<String>,
    /// Model name sent to the endpoint.
    #[arg(long)]
    model: Option<String>,
    /// Decoding temperature.
    #[arg(long)]
    temperature: Option<f64>,
    /// Transport retry budget per sample.
    #[arg(long)]
    max_retries: Option<u32>,
    /// HTTP timeout in seconds.
    #[arg(long)]
    timeout_secs: Option<u64>,
    /// Output results file (JSONL); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Parallel in-flight annotations.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Results JSONL produced by `annotate`.
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    obo: Option<PathBuf>,
    /// Write the JSON report here; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Generator spec (JSON). Mutually exclusive with --cell-kg-profile.
    #[arg(long, conflicts_with = "cell_kg_profile")]
    spec: Option<PathBuf>,
    /// Use the built-in large-graph profile spec.
    #[arg(long)]
    cell_kg_profile: bool,
    /// Seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for the generated files.
    #[arg(long)]
    out: PathBuf,
}

/// Failure classes map to documented exit codes: 1 validation/data,
/// 2 configuration, 3 transport.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Config(String),
    Transport(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Config(_) => 2,
            CliError::Transport(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Config(m) | CliError::Transport(m) => m,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let file_config = match config::FileConfig::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}", e.message());
            return ExitCode::from(e.exit_code());
        }
    };
    let outcome = match cli.command {
        Command::Graph(args) => commands::run_graph(args, &file_config),
        Command::Retrieve(args) => commands::run_retrieve(args, &file_config),
        Command::Annotate(args) => commands::run_annotate(args, &file_config),
        Command::Eval(args) => commands::run_eval(args, &file_config),
        Command::Synth(args) => commands::run_synth(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
