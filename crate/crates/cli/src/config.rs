//! Layered run configuration: a TOML file supplies defaults, command-line
//! flags override field by field. Secrets never live in the file; the API
//! token comes from the `CONVERGE_LLM_API_KEY` environment variable.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use converge_core::grounding::FilterConfig;
use converge_core::pipeline::PipelineConfig;
use converge_core::scoring::{AlphaSpec, ScoringConfig};
use converge_core::traversal::TraversalConfig;

use crate::CliError;

/// Environment variable holding the LLM API token.
pub const TOKEN_ENV_VAR: &str = "CONVERGE_LLM_API_KEY";

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub paths: PathsSection,
    #[serde(default)]
    pub traversal: TraversalSection,
    #[serde(default)]
    pub scoring: ScoringSection,
    #[serde(default)]
    pub grounding: GroundingSection,
    #[serde(default)]
    pub annotate: AnnotateSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    pub graph_nodes: Option<PathBuf>,
    pub graph_edges: Option<PathBuf>,
    pub obo: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraversalSection {
    pub k: Option<usize>,
    pub target_type: Option<String>,
    pub enforce_type_alternation: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoringSection {
    pub gamma: Option<f64>,
    pub alpha: Option<Vec<f64>>,
    pub top_k: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundingSection {
    pub housekeeping_prefixes: Option<Vec<String>>,
    pub case_sensitive: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotateSection {
    pub base_url: Option<String>,
    pub model: Option<String>,
    pub temperature: Option<f64>,
    pub include_paths: Option<bool>,
    pub max_retries: Option<u32>,
    pub timeout_secs: Option<u64>,
    pub jobs: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig, CliError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let raw = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        toml::from_str(&raw)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
    }
}

/// Pipeline-knob flags shared by `retrieve` and `annotate`.
#[derive(Debug, Clone, clap::Args)]
pub struct PipelineArgs {
    /// Traversal horizon in hops.
    #[arg(long)]
    pub k: Option<usize>,
    /// Semantic type of candidate targets.
    #[arg(long)]
    pub target_type: Option<String>,
    /// Disable the consecutive-type constraint (ablation only).
    #[arg(long)]
    pub no_type_alternation: bool,
    /// Geometric hop-decay factor in (0, 1].
    #[arg(long, conflicts_with = "alpha")]
    pub gamma: Option<f64>,
    /// Explicit hop-decay weights, comma separated (e.g. "1.0,0.5").
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    /// Number of convergence nodes kept as evidence.
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Housekeeping symbol prefixes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub housekeeping: Option<Vec<String>>,
}

impl PipelineArgs {
    pub fn resolve(&self, file: &FileConfig) -> Result<PipelineConfig, CliError> {
        let defaults = PipelineConfig::default();
        let filter = FilterConfig {
            housekeeping_prefixes: self
                .housekeeping
                .clone()
                .or_else(|| file.grounding.housekeeping_prefixes.clone())
                .unwrap_or(defaults.filter.housekeeping_prefixes),
            case_sensitive: file
                .grounding
                .case_sensitive
                .unwrap_or(defaults.filter.case_sensitive),
        };
        filter.validate().map_err(CliError::Config)?;
        let traversal = TraversalConfig {
            k: self.k.or(file.traversal.k).unwrap_or(defaults.traversal.k),
            target_type: self
                .target_type
                .clone()
                .or_else(|| file.traversal.target_type.clone())
                .unwrap_or(defaults.traversal.target_type),
            enforce_type_alternation: if self.no_type_alternation {
                false
            } else {
                file.traversal
                    .enforce_type_alternation
                    .unwrap_or(defaults.traversal.enforce_type_alternation)
            },
        };
        if traversal.k < 1 {
            return Err(CliError::Config("k must be at least 1".into()));
        }
        let alpha = match (&self.alpha, self.gamma) {
            (Some(list), _) => AlphaSpec::Explicit(list.clone()),
            (None, Some(gamma)) => AlphaSpec::Geometric(gamma),
            (None, None) => match (&file.scoring.alpha, file.scoring.gamma) {
                (Some(list), _) => AlphaSpec::Explicit(list.clone()),
                (None, Some(gamma)) => AlphaSpec::Geometric(gamma),
                (None, None) => defaults.scoring.alpha,
            },
        };
        let scoring = ScoringConfig {
            alpha,
            top_k: self
                .top_k
                .or(file.scoring.top_k)
                .unwrap_or(defaults.scoring.top_k),
        };
        scoring
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(PipelineConfig {
            filter,
            traversal,
            scoring,
        })
    }
}

/// Required-path resolution: flag wins, then config file.
pub fn require_path(
    flag: Option<&Path>,
    file_value: Option<&Path>,
    what: &str,
) -> Result<PathBuf, CliError> {
    flag.or(file_value)
        .map(Path::to_path_buf)
        .ok_or_else(|| CliError::Config(format!("missing {what} (flag or config file)")))
}
