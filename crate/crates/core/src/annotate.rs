//! Evidence assembly, prompt construction, and the single LLM call.
//!
//! Retrieval never touches the network: the client enters the picture only
//! after the prompt is fully assembled, and exactly one completed call is
//! made per annotated sample. Transport retries re-issue the same request
//! and are accounted separately from `llm_calls`.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::PropertyGraph;
use crate::grounding::{CellSentence, GroundedGeneSet};
use crate::obo::OntologyDag;
use crate::pipeline::{retrieve, PipelineConfig, Retrieval, RetrieveError};
use crate::scoring::{ScoredCandidate, Supporter};
use crate::traversal::{distances_from, representative_path_with, TraversalConfig};

/// Version tag of the prompt template produced by [`assemble_prompt`].
pub const PROMPT_TEMPLATE_VERSION: &str = "evidence-v1";

/// First line of every assembled user prompt; the instrumented client uses
/// it to verify it is never invoked with a half-built request.
pub const PROMPT_MARKER: &str = "Ranked genes (most discriminative first):";

/// One rendered traversal path attached to an evidence entry.
#[derive(Debug, Clone, Serialize)]
pub struct EvidencePath {
    pub symbol: String,
    pub rendered: String,
}

/// One convergence node presented to the LLM.
#[derive(Debug, Clone, Serialize)]
pub struct EvidenceEntry {
    pub target_id: String,
    pub target_name: String,
    pub score: f64,
    pub supporters: std::collections::BTreeMap<u8, Vec<Supporter>>,
    pub paths: Vec<EvidencePath>,
}

/// Compressed evidence context: at most `top_k` entries, in rank order.
#[derive(Debug, Clone, Serialize)]
pub struct EvidenceContext {
    pub entries: Vec<EvidenceEntry>,
    pub include_paths: bool,
}

/// Builds the evidence context from the selected candidates. With
/// `include_paths`, one minimal traversal path is rendered per
/// (supporter, target) pair, chosen deterministically.
pub fn build_evidence(
    graph: &PropertyGraph,
    grounded: &GroundedGeneSet,
    top: &[ScoredCandidate],
    traversal: &TraversalConfig,
    include_paths: bool,
) -> EvidenceContext {
    let mut source_dists = HashMap::new();
    if include_paths {
        for gene in &grounded.genes {
            if let Some(idx) = graph.node_index(&gene.node_id) {
                source_dists
                    .entry(gene.rank)
                    .or_insert_with(|| (idx, distances_from(graph, idx, traversal)));
            }
        }
    }
    let mut entries = Vec::with_capacity(top.len());
    for candidate in top {
        let mut paths = Vec::new();
        if include_paths {
            let target_idx = graph
                .node_index(&candidate.target_id)
                .expect("scored candidate refers to a graph node");
            let target_dist = distances_from(graph, target_idx, traversal);
            for supporters in candidate.supporters.values() {
                for supporter in supporters {
                    let Some((source_idx, source_dist)) = source_dists.get(&supporter.rank)
                    else {
                        continue;
                    };
                    if let Some(path) = representative_path_with(
                        graph,
                        *source_idx,
                        target_idx,
                        traversal,
                        source_dist,
                        &target_dist,
                    ) {
                        paths.push(EvidencePath {
                            symbol: supporter.symbol.clone(),
                            rendered: path.render(graph),
                        });
                    }
                }
            }
        }
        entries.push(EvidenceEntry {
            target_id: candidate.target_id.clone(),
            target_name: candidate.name.clone(),
            score: candidate.score,
            supporters: candidate.supporters.clone(),
            paths,
        });
    }
    EvidenceContext {
        entries,
        include_paths,
    }
}

/// One chat-completion request. `temperature` defaults to 0 so repeated
/// runs are reproducible.
#[derive(Debug, Clone, Serialize)]
pub struct LlmRequest {
    pub model: String,
    pub system_prompt: String,
    pub user_prompt: String,
    pub temperature: f64,
}

/// Raw completion text plus token usage when the endpoint reports it.
#[derive(Debug, Clone, Default)]
pub struct LlmResponse {
    pub text: String,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
}

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("HTTP status {status}: {body}")]
    Http { status: u16, body: String },
    #[error("network error: {0}")]
    Network(String),
    #[error("unusable completion response: {0}")]
    InvalidResponse(String),
}

impl TransportError {
    /// Whether a retry can plausibly succeed. Malformed-but-delivered
    /// responses are not retried; repeating them would loop on the same
    /// payload.
    pub fn is_retriable(&self) -> bool {
        match self {
            TransportError::Http { status, .. } => *status == 429 || *status >= 500,
            TransportError::Network(_) => true,
            TransportError::InvalidResponse(_) => false,
        }
    }
}

/// Chat-completion transport. `sample_id` identifies the sample being
/// annotated so deterministic mocks can key canned answers on it; real
/// transports ignore it.
pub trait ChatClient: Send + Sync {
    fn complete(&self, sample_id: &str, request: &LlmRequest) -> Result<LlmResponse, TransportError>;
}

/// HTTP chat-completion client (OpenAI-style JSON wire format).
pub struct HttpChatClient {
    base_url: String,
    api_token: Option<String>,
    agent: ureq::Agent,
}

impl HttpChatClient {
    pub fn new(base_url: impl Into<String>, api_token: Option<String>, timeout: Duration) -> Self {
        HttpChatClient {
            base_url: base_url.into(),
            api_token,
            agent: ureq::AgentBuilder::new()
                .timeout(timeout)
                .build(),
        }
    }
}

impl ChatClient for HttpChatClient {
    fn complete(&self, _sample_id: &str, request: &LlmRequest) -> Result<LlmResponse, TransportError> {
        let url = format!("{}/chat/completions", self.base_url.trim_end_matches('/'));
        let body = serde_json::json!({
            "model": request.model,
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {"role": "user", "content": request.user_prompt},
            ],
            "temperature": request.temperature,
        });
        let mut http = self.agent.post(&url).set("content-type", "application/json");
        if let Some(token) = &self.api_token {
            http = http.set("authorization", &format!("Bearer {token}"));
        }
        let response = match http.send_json(body) {
            Ok(r) => r,
            Err(ureq::Error::Status(status, r)) => {
                let body = r.into_string().unwrap_or_default();
                return Err(TransportError::Http { status, body });
            }
            Err(ureq::Error::Transport(t)) => {
                return Err(TransportError::Network(t.to_string()));
            }
        };
        let value: serde_json::Value = response
            .into_json()
            .map_err(|e| TransportError::InvalidResponse(e.to_string()))?;
        let text = value
            .pointer("/choices/0/message/content")
            .and_then(|v| v.as_str())
            .ok_or_else(|| {
                TransportError::InvalidResponse("missing choices[0].message.content".into())
            })?
            .to_string();
        Ok(LlmResponse {
            text,
            prompt_tokens: value.pointer("/usage/prompt_tokens").and_then(|v| v.as_u64()),
            completion_tokens: value
                .pointer("/usage/completion_tokens")
                .and_then(|v| v.as_u64()),
        })
    }
}

/// Deterministic stand-in client used by tests and `--mock` runs.
pub enum MockChatClient {
    /// Always answers with the same text.
    Fixed(String),
    /// Canned answer per sample id, with a fallback for unknown ids.
    ByCellId {
        responses: HashMap<String, String>,
        default: String,
    },
    /// Echoes the name of the strongest evidence entry in the prompt, or
    /// "unknown" when the prompt carries no evidence.
    TopEvidence,
}

impl ChatClient for MockChatClient {
    fn complete(&self, sample_id: &str, request: &LlmRequest) -> Result<LlmResponse, TransportError> {
        let text = match self {
            MockChatClient::Fixed(text) => text.clone(),
            MockChatClient::ByCellId { responses, default } => responses
                .get(sample_id)
                .cloned()
                .unwrap_or_else(|| default.clone()),
            MockChatClient::TopEvidence => top_evidence_name(&request.user_prompt)
                .unwrap_or_else(|| "unknown".to_string()),
        };
        Ok(LlmResponse {
            text,
            prompt_tokens: None,
            completion_tokens: None,
        })
    }
}

fn top_evidence_name(user_prompt: &str) -> Option<String> {
    // First evidence block looks like `1. <name> [<id>] score=...`.
    let line = user_prompt.lines().find(|l| l.starts_with("1. "))?;
    let rest = line.strip_prefix("1. ")?;
    let name = rest.rsplit_once(" [")?.0;
    Some(name.to_string())
}

/// Counting wrapper around any client. Panics if it ever receives a
/// request without a fully assembled prompt, which pins the "no LLM calls
/// during retrieval" claim in tests.
pub struct CountingClient<C> {
    inner: C,
    calls: AtomicUsize,
}

impl<C> CountingClient<C> {
    pub fn new(inner: C) -> Self {
        CountingClient {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<C: ChatClient> ChatClient for CountingClient<C> {
    fn complete(&self, sample_id: &str, request: &LlmRequest) -> Result<LlmResponse, TransportError> {
        assert!(
            request.user_prompt.starts_with(PROMPT_MARKER),
            "chat client invoked before prompt assembly completed"
        );
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.complete(sample_id, request)
    }
}

/// Annotation knobs beyond the retrieval pipeline itself.
#[derive(Debug, Clone)]
pub struct AnnotateOptions {
    pub model: String,
    pub temperature: f64,
    pub include_paths: bool,
    /// Optional list of candidate cell-type names appended to the prompt.
    pub label_space_hint: Option<Vec<String>>,
    /// Transport retry budget per sample (completed calls stay at one).
    pub max_retries: u32,
}

impl Default for AnnotateOptions {
    fn default() -> Self {
        AnnotateOptions {
            model: "mock".to_string(),
            temperature: 0.0,
            include_paths: false,
            label_space_hint: None,
            max_retries: 2,
        }
    }
}

/// Renders the deterministic prompt for one sample: ranked genes, then one
/// block per convergence node with hop-binned supporters (and paths when
/// enabled), then the answer instruction.
pub fn assemble_prompt(
    context: &EvidenceContext,
    sentence: &CellSentence,
    options: &AnnotateOptions,
) -> LlmRequest {
    let mut user = String::new();
    user.push_str(PROMPT_MARKER);
    user.push(' ');
    user.push_str(&sentence.gene_symbols.join(", "));
    user.push('\n');
    if context.entries.is_empty() {
        user.push_str("No knowledge-graph evidence was found for this cell.\n");
    } else {
        user.push_str("Knowledge-graph convergence evidence (strongest first):\n");
        for (i, entry) in context.entries.iter().enumerate() {
            user.push_str(&format!(
                "{}. {} [{}] score={:.4} supporters={}\n",
                i + 1,
                entry.target_name,
                entry.target_id,
                entry.score,
                entry.supporters.values().map(|v| v.len()).sum::<usize>(),
            ));
            for (hop, supporters) in &entry.supporters {
                let rendered: Vec<String> = supporters
                    .iter()
                    .map(|s| format!("{} (rank {}, weight {:.4})", s.symbol, s.rank, s.weight))
                    .collect();
                user.push_str(&format!("   hop {}: {}\n", hop, rendered.join("; ")));
            }
            if context.include_paths && !entry.paths.is_empty() {
                user.push_str("   paths:\n");
                for path in &entry.paths {
                    user.push_str(&format!("     {}\n", path.rendered));
                }
            }
        }
    }
    if let Some(hint) = &options.label_space_hint {
        user.push_str(&format!("Candidate cell types: {}\n", hint.join("; ")));
    }
    user.push_str("Answer with a single Cell Ontology term name.");

    LlmRequest {
        model: options.model.clone(),
        system_prompt: "You are an expert in cell biology annotating single cells. \
                        Identify the cell type from the ranked marker genes and the \
                        knowledge-graph evidence. Reply with exactly one Cell Ontology \
                        term name and nothing else."
            .to_string(),
        user_prompt: user,
        temperature: options.temperature,
    }
}

/// Per-sample annotation outcome and call accounting.
#[derive(Debug, Clone)]
pub struct AnnotationResult {
    pub cell_id: String,
    pub predicted_term: Option<String>,
    pub gold_label: Option<String>,
    pub raw_answer: String,
    pub llm_calls: u32,
    pub evidence_count: usize,
    pub grounded_count: usize,
    /// Transport retries consumed; not part of the result record.
    pub retries: u32,
    /// Set when the prompt carried no evidence entries.
    pub no_evidence: bool,
}

/// The JSONL wire form of one annotation result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultRecord {
    pub cell_id: String,
    pub predicted: Option<String>,
    pub gold: Option<String>,
    pub llm_calls: u32,
    pub evidence_count: usize,
    pub grounded_count: usize,
    pub raw_answer: String,
}

impl AnnotationResult {
    pub fn record(&self) -> ResultRecord {
        ResultRecord {
            cell_id: self.cell_id.clone(),
            predicted: self.predicted_term.clone(),
            gold: self.gold_label.clone(),
            llm_calls: self.llm_calls,
            evidence_count: self.evidence_count,
            grounded_count: self.grounded_count,
            raw_answer: self.raw_answer.clone(),
        }
    }

    pub fn from_record(record: ResultRecord) -> AnnotationResult {
        AnnotationResult {
            cell_id: record.cell_id,
            predicted_term: record.predicted,
            gold_label: record.gold,
            raw_answer: record.raw_answer,
            llm_calls: record.llm_calls,
            evidence_count: record.evidence_count,
            grounded_count: record.grounded_count,
            retries: 0,
            no_evidence: record.evidence_count == 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum AnnotateError {
    #[error(transparent)]
    Retrieve(#[from] RetrieveError),
    #[error("transport failed after {retries} retries: {source}")]
    Transport {
        retries: u32,
        #[source]
        source: TransportError,
    },
}

/// Retrieval plus the assembled request, before any client involvement.
pub struct PreparedSample {
    pub retrieval: Retrieval,
    pub context: EvidenceContext,
    pub request: LlmRequest,
}

/// Runs retrieval and prompt assembly without any client. Dry runs stop
/// here; [`annotate`] continues with the single call.
pub fn prepare_sample(
    sentence: &CellSentence,
    graph: &PropertyGraph,
    resolver: &crate::grounding::GeneResolver,
    config: &PipelineConfig,
    options: &AnnotateOptions,
) -> Result<PreparedSample, RetrieveError> {
    let retrieval = retrieve(graph, resolver, sentence, config)?;
    let context = build_evidence(
        graph,
        &retrieval.grounded,
        &retrieval.top,
        &config.traversal,
        options.include_paths,
    );
    let request = assemble_prompt(&context, sentence, options);
    Ok(PreparedSample {
        retrieval,
        context,
        request,
    })
}

/// Maps a raw completion to an ontology term: the whole answer first, then
/// each line in order. `None` when nothing matches.
pub fn resolve_response(dag: &OntologyDag, raw: &str) -> Option<String> {
    if let Some(id) = dag.resolve_label(raw) {
        return Some(id.to_string());
    }
    for line in raw.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(id) = dag.resolve_label(line) {
            return Some(id.to_string());
        }
    }
    None
}

/// Annotates one sample with exactly one completed LLM call: retrieval,
/// evidence assembly, prompt, call (with transport retries), and answer
/// resolution. An empty grounded set still produces one call; the prompt
/// states that no evidence was found.
pub fn annotate(
    sentence: &CellSentence,
    graph: &PropertyGraph,
    resolver: &crate::grounding::GeneResolver,
    dag: &OntologyDag,
    config: &PipelineConfig,
    options: &AnnotateOptions,
    client: &dyn ChatClient,
) -> Result<AnnotationResult, AnnotateError> {
    let prepared = prepare_sample(sentence, graph, resolver, config, options)?;
    let mut retries = 0u32;
    let response = loop {
        match client.complete(&sentence.cell_id, &prepared.request) {
            Ok(response) => break response,
            Err(err) if err.is_retriable() && retries < options.max_retries => {
                retries += 1;
                log::warn!(
                    "retrying sample {} after transport error ({retries}/{}): {err}",
                    sentence.cell_id,
                    options.max_retries
                );
            }
            Err(source) => return Err(AnnotateError::Transport { retries, source }),
        }
    };
    let predicted_term = resolve_response(dag, &response.text);
    Ok(AnnotationResult {
        cell_id: sentence.cell_id.clone(),
        predicted_term,
        gold_label: sentence.gold_label.clone(),
        raw_answer: response.text,
        llm_calls: 1,
        evidence_count: prepared.context.entries.len(),
        grounded_count: prepared.retrieval.grounded.len(),
        retries,
        no_evidence: prepared.context.entries.is_empty(),
    })
}

/// Dry-run annotation: everything up to and including the prompt, zero
/// calls. Returns the result shell and the request for inspection.
pub fn annotate_dry_run(
    sentence: &CellSentence,
    graph: &PropertyGraph,
    resolver: &crate::grounding::GeneResolver,
    config: &PipelineConfig,
    options: &AnnotateOptions,
) -> Result<(AnnotationResult, LlmRequest), RetrieveError> {
    let prepared = prepare_sample(sentence, graph, resolver, config, options)?;
    let result = AnnotationResult {
        cell_id: sentence.cell_id.clone(),
        predicted_term: None,
        gold_label: sentence.gold_label.clone(),
        raw_answer: String::new(),
        llm_calls: 0,
        evidence_count: prepared.context.entries.len(),
        grounded_count: prepared.retrieval.grounded.len(),
        retries: 0,
        no_evidence: prepared.context.entries.is_empty(),
    };
    Ok((result, prepared.request))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{GraphBuilder, SemanticTypeSet};
    use crate::grounding::{FilterConfig, GeneResolver};
    use crate::obo::OntologyDag;
    use crate::scoring::ScoringConfig;

    fn toy_graph() -> PropertyGraph {
        let mut b = GraphBuilder::new(SemanticTypeSet::default());
        b.add_node("G:1", "Gene", "G", vec![]).unwrap();
        b.add_node("BP:1", "BiologicalProcess", "P", vec![]).unwrap();
        b.add_node("CL:1", "CellType", "C", vec![]).unwrap();
        b.add_node("CL:2", "CellType", "D", vec![]).unwrap();
        b.add_edge("G:1", "PARTICIPATES_IN", "BP:1").unwrap();
        b.add_edge("CL:1", "CAPABLE_OF", "BP:1").unwrap();
        b.add_edge("G:1", "IS_MARKER_FOR", "CL:2").unwrap();
        b.freeze()
    }

    fn toy_dag() -> OntologyDag {
        OntologyDag::parse_str(
            "[Term]\nid: CL:1\nname: C\n\n[Term]\nid: CL:2\nname: D\nis_a: CL:1\n",
        )
        .unwrap()
    }

    fn sentence(genes: &[&str]) -> CellSentence {
        CellSentence {
            cell_id: "cell-1".into(),
            gene_symbols: genes.iter().map(|s| s.to_string()).collect(),
            gold_label: Some("CL:2".into()),
        }
    }

    #[test]
    fn prompt_is_deterministic() {
        let graph = toy_graph();
        let resolver = GeneResolver::new(&graph);
        let cfg = PipelineConfig::default();
        let opts = AnnotateOptions::default();
        let s = sentence(&["G"]);
        let a = prepare_sample(&s, &graph, &resolver, &cfg, &opts).unwrap();
        let b = prepare_sample(&s, &graph, &resolver, &cfg, &opts).unwrap();
        assert_eq!(a.request.user_prompt, b.request.user_prompt);
        assert_eq!(a.request.system_prompt, b.request.system_prompt);
    }

    #[test]
    fn prompt_contains_one_block_per_entry() {
        let graph = toy_graph();
        let resolver = GeneResolver::new(&graph);
        let cfg = PipelineConfig::default();
        let opts = AnnotateOptions::default();
        let prepared = prepare_sample(&sentence(&["G"]), &graph, &resolver, &cfg, &opts).unwrap();
        assert_eq!(prepared.context.entries.len(), 2);
        assert!(prepared.request.user_prompt.contains("1. "));
        assert!(prepared.request.user_prompt.contains("2. "));
        assert!(!prepared.request.user_prompt.contains("paths:"));
    }

    #[test]
    fn include_paths_renders_path_lines() {
        let graph = toy_graph();
        let resolver = GeneResolver::new(&graph);
        let cfg = PipelineConfig::default();
        let opts = AnnotateOptions {
            include_paths: true,
            ..Default::default()
        };
        let prepared = prepare_sample(&sentence(&["G"]), &graph, &resolver, &cfg, &opts).unwrap();
        assert!(prepared.request.user_prompt.contains("paths:"));
        assert!(prepared
            .request
            .user_prompt
            .contains("G -PARTICIPATES_IN-> P <-CAPABLE_OF- C"));
        assert!(prepared.request.user_prompt.contains("G -IS_MARKER_FOR-> D"));
    }

    #[test]
    fn empty_grounded_set_still_annotates_with_warning() {
        let graph = toy_graph();
        let resolver = GeneResolver::new(&graph);
        let dag = toy_dag();
        let cfg = PipelineConfig::default();
        let opts = AnnotateOptions::default();
        let client = CountingClient::new(MockChatClient::Fixed("C".into()));
        let result = annotate(
            &sentence(&["NOSUCH"]),
            &graph,
            &resolver,
            &dag,
            &cfg,
            &opts,
            &client,
        )
        .unwrap();
        assert_eq!(result.llm_calls, 1);
        assert_eq!(client.calls(), 1);
        assert!(result.no_evidence);
        assert_eq!(result.evidence_count, 0);
        assert_eq!(result.predicted_term.as_deref(), Some("CL:1"));
    }

    #[test]
    fn gibberish_answer_resolves_to_none() {
        let graph = toy_graph();
        let resolver = GeneResolver::new(&graph);
        let dag = toy_dag();
        let cfg = PipelineConfig::default();
        let opts = AnnotateOptions::default();
        let client = MockChatClient::Fixed("flux capacitor".into());
        let result = annotate(&sentence(&["G"]), &graph, &resolver, &dag, &cfg, &opts, &client)
            .unwrap();
        assert_eq!(result.predicted_term, None);
        assert_eq!(result.llm_calls, 1);
        assert_eq!(result.raw_answer, "flux capacitor");
    }

    #[test]
    fn top_evidence_mock_echoes_best_candidate() {
        let graph = toy_graph();
        let resolver = GeneResolver::new(&graph);
        let dag = toy_dag();
        let cfg = PipelineConfig::default();
        let opts = AnnotateOptions::default();
        let client = MockChatClient::TopEvidence;
        let result = annotate(&sentence(&["G"]), &graph, &resolver, &dag, &cfg, &opts, &client)
            .unwrap();
        // D is the 1-hop marker target and outranks the 2-hop C.
        assert_eq!(result.raw_answer, "D");
        assert_eq!(result.predicted_term.as_deref(), Some("CL:2"));
    }

    #[test]
    fn by_cell_id_mock_uses_canned_answers() {
        let client = MockChatClient::ByCellId {
            responses: [("cell-1".to_string(), "T cell".to_string())].into(),
            default: "unknown".into(),
        };
        let req = LlmRequest {
            model: "mock".into(),
            system_prompt: String::new(),
            user_prompt: format!("{PROMPT_MARKER} X"),
            temperature: 0.0,
        };
        assert_eq!(client.complete("cell-1", &req).unwrap().text, "T cell");
        assert_eq!(client.complete("cell-2", &req).unwrap().text, "unknown");
    }

    #[test]
    fn dry_run_makes_zero_calls() {
        let graph = toy_graph();
        let resolver = GeneResolver::new(&graph);
        let cfg = PipelineConfig::default();
        let opts = AnnotateOptions::default();
        let (result, request) =
            annotate_dry_run(&sentence(&["G"]), &graph, &resolver, &cfg, &opts).unwrap();
        assert_eq!(result.llm_calls, 0);
        assert!(request.user_prompt.starts_with(PROMPT_MARKER));
    }

    #[test]
    fn evidence_respects_top_k() {
        let graph = toy_graph();
        let resolver = GeneResolver::new(&graph);
        let cfg = PipelineConfig {
            scoring: ScoringConfig {
                top_k: 1,
                ..Default::default()
            },
            ..Default::default()
        };
        let opts = AnnotateOptions::default();
        let prepared = prepare_sample(&sentence(&["G"]), &graph, &resolver, &cfg, &opts).unwrap();
        assert_eq!(prepared.context.entries.len(), 1);
        assert_eq!(prepared.retrieval.ranked.len(), 2);
    }

    #[test]
    fn filter_is_applied_before_grounding() {
        let graph = toy_graph();
        let resolver = GeneResolver::new(&graph);
        let cfg = PipelineConfig {
            filter: FilterConfig {
                housekeeping_prefixes: vec!["G".into()],
                case_sensitive: false,
            },
            ..Default::default()
        };
        let opts = AnnotateOptions::default();
        let prepared = prepare_sample(&sentence(&["G"]), &graph, &resolver, &cfg, &opts).unwrap();
        assert_eq!(prepared.retrieval.grounded.len(), 0);
        assert!(prepared
            .request
            .user_prompt
            .contains("No knowledge-graph evidence was found"));
    }

    #[test]
    fn result_record_roundtrip() {
        let result = AnnotationResult {
            cell_id: "c".into(),
            predicted_term: Some("CL:1".into()),
            gold_label: Some("CL:2".into()),
            raw_answer: "C".into(),
            llm_calls: 1,
            evidence_count: 2,
            grounded_count: 3,
            retries: 1,
            no_evidence: false,
        };
        let json = serde_json::to_string(&result.record()).unwrap();
        let back = AnnotationResult::from_record(serde_json::from_str(&json).unwrap());
        assert_eq!(back.cell_id, "c");
        assert_eq!(back.predicted_term.as_deref(), Some("CL:1"));
        assert_eq!(back.llm_calls, 1);
        assert_eq!(back.grounded_count, 3);
    }

    #[test]
    fn counting_client_rejects_unassembled_prompts() {
        let client = CountingClient::new(MockChatClient::Fixed("x".into()));
        let bogus = LlmRequest {
            model: "mock".into(),
            system_prompt: String::new(),
            user_prompt: "not a prompt".into(),
            temperature: 0.0,
        };
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
            let _ = client.complete("c", &bogus);
        }));
        assert!(outcome.is_err());
        assert_eq!(client.calls(), 0);
    }

    #[test]
    fn label_space_hint_is_rendered() {
        let ctx = EvidenceContext {
            entries: vec![],
            include_paths: false,
        };
        let opts = AnnotateOptions {
            label_space_hint: Some(vec!["T cell".into(), "B cell".into()]),
            ..Default::default()
        };
        let req = assemble_prompt(&ctx, &sentence(&["G"]), &opts);
        assert!(req.user_prompt.contains("Candidate cell types: T cell; B cell"));
    }
}
