//! Subcommand implementations.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Duration;

use serde::Serialize;

use converge_core::annotate::{
    annotate, annotate_dry_run, AnnotateError, AnnotateOptions, ChatClient, HttpChatClient,
    MockChatClient,
};
use converge_core::eval::evaluate;
use converge_core::graph::PropertyGraph;
use converge_core::grounding::{parse_cell_sentences, CellSentence, GeneResolver, GroundedGene};
use converge_core::obo::OntologyDag;
use converge_core::pipeline::retrieve;
use converge_core::scoring::ScoredCandidate;
use converge_core::synth::{generate, SynthSpec};
use converge_core::AnnotationResult;

use crate::config::{require_path, FileConfig, TOKEN_ENV_VAR};
use crate::{AnnotateArgs, CliError, EvalArgs, GraphAction, GraphArgs, RetrieveArgs, SynthArgs};

impl From<converge_core::graph::LoadError> for CliError {
    fn from(e: converge_core::graph::LoadError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<converge_core::grounding::DatasetError> for CliError {
    fn from(e: converge_core::grounding::DatasetError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<converge_core::obo::OboError> for CliError {
    fn from(e: converge_core::obo::OboError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<converge_core::eval::EvalError> for CliError {
    fn from(e: converge_core::eval::EvalError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<converge_core::synth::SynthError> for CliError {
    fn from(e: converge_core::synth::SynthError) -> Self {
        match e {
            converge_core::synth::SynthError::Infeasible(_) => CliError::Config(e.to_string()),
            converge_core::synth::SynthError::Io { .. } => CliError::Validation(e.to_string()),
        }
    }
}

impl From<converge_core::pipeline::RetrieveError> for CliError {
    fn from(e: converge_core::pipeline::RetrieveError) -> Self {
        CliError::Validation(e.to_string())
    }
}

/// Runs `f` over the items with up to `jobs` workers; the result vector
/// keeps input order regardless of scheduling.
fn parallel_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let jobs = jobs.max(1).min(items.len().max(1));
    if jobs <= 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, R)>();
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            let tx = tx.clone();
            let next = &next;
            let f = &f;
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= items.len() {
                    break;
                }
                if tx.send((i, f(&items[i]))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        let mut slots: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
        for (i, r) in rx {
            slots[i] = Some(r);
        }
        slots
            .into_iter()
            .map(|r| r.expect("worker produced every slot"))
            .collect()
    })
}

/// Writes to stdout, treating a closed pipe (e.g. `| head`) as a normal
/// early exit rather than an error.
fn emit(content: &str) -> Result<(), CliError> {
    let mut stdout = std::io::stdout().lock();
    match stdout.write_all(content.as_bytes()).and_then(|_| stdout.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => std::process::exit(0),
        other => other.map_err(Into::into),
    }
}

fn emit_line(content: &str) -> Result<(), CliError> {
    emit(content)?;
    emit("\n")
}

fn write_output(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            std::fs::write(path, content)?;
            Ok(())
        }
        None => emit(content),
    }
}

fn load_graph(
    args_nodes: Option<&Path>,
    args_edges: Option<&Path>,
    file: &FileConfig,
) -> Result<PropertyGraph, CliError> {
    let nodes = require_path(args_nodes, file.paths.graph_nodes.as_deref(), "--graph-nodes")?;
    let edges = require_path(args_edges, file.paths.graph_edges.as_deref(), "--graph-edges")?;
    Ok(PropertyGraph::load(nodes, edges)?)
}

pub fn run_graph(args: GraphArgs, file: &FileConfig) -> Result<(), CliError> {
    match args.action {
        GraphAction::Validate(paths) => {
            let graph = load_graph(paths.graph_nodes.as_deref(), paths.graph_edges.as_deref(), file)?;
            emit_line(&format!(
                "ok: {} nodes, {} edges",
                graph.node_count(),
                graph.edge_count()
            ))?;
        }
        GraphAction::Stats(paths) => {
            let graph = load_graph(paths.graph_nodes.as_deref(), paths.graph_edges.as_deref(), file)?;
            let stats = graph.stats();
            emit_line(&serde_json::to_string_pretty(&stats).expect("stats serialize"))?;
        }
        GraphAction::FromObo(args) => {
            let obo_path = require_path(args.obo.as_deref(), file.paths.obo.as_deref(), "--obo")?;
            let dag = OntologyDag::parse_obo(obo_path)?;
            let mut nodes = String::from("id\tsemantic_type\tname\tsynonyms\n");
            let mut edges = String::from("source\trelation\ttarget\n");
            let mut edge_count = 0usize;
            for term in dag.terms() {
                nodes.push_str(&format!(
                    "{}\t{}\t{}\t{}\n",
                    term.id,
                    args.node_type,
                    term.name,
                    term.synonyms.join("|")
                ));
                for parent in &term.parents {
                    edges.push_str(&format!("{}\tIS_A\t{}\n", term.id, parent));
                    edge_count += 1;
                }
            }
            write_output(Some(&args.out_nodes), &nodes)?;
            write_output(Some(&args.out_edges), &edges)?;
            emit_line(&format!("wrote {} nodes, {} edges", dag.len(), edge_count))?;
        }
    }
    Ok(())
}

/// One line of `retrieve` output.
#[derive(Serialize)]
struct RetrieveRecord<'a> {
    cell_id: &'a str,
    grounded_count: usize,
    grounded: &'a [GroundedGene],
    housekeeping_dropped: &'a [String],
    unmatched: &'a [String],
    candidate_count: usize,
    candidates: &'a [ScoredCandidate],
    #[serde(skip_serializing_if = "Option::is_none")]
    warning: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    support: Option<BTreeMap<String, BTreeMap<String, Vec<String>>>>,
}

fn select_samples(
    sentences: Vec<CellSentence>,
    cell_id: Option<&str>,
    all: bool,
) -> Result<Vec<CellSentence>, CliError> {
    match (cell_id, all) {
        (Some(id), false) => {
            let found: Vec<CellSentence> = sentences
                .into_iter()
                .filter(|s| s.cell_id == id)
                .collect();
            if found.is_empty() {
                return Err(CliError::Validation(format!("unknown cell id {id:?}")));
            }
            Ok(found)
        }
        (None, true) => Ok(sentences),
        _ => Err(CliError::Config(
            "pass either --cell-id <ID> or --all".into(),
        )),
    }
}

pub fn run_retrieve(args: RetrieveArgs, file: &FileConfig) -> Result<(), CliError> {
    let pipeline = args.pipeline.resolve(file)?;
    let graph = load_graph(args.graph_nodes.as_deref(), args.graph_edges.as_deref(), file)?;
    if graph.type_set().get(&pipeline.traversal.target_type).is_none() {
        return Err(CliError::Config(format!(
            "target type {:?} is not in the graph's semantic type set",
            pipeline.traversal.target_type
        )));
    }
    let dataset_path = require_path(args.dataset.as_deref(), file.paths.dataset.as_deref(), "--dataset")?;
    let sentences = parse_cell_sentences(dataset_path)?;
    let samples = select_samples(sentences, args.cell_id.as_deref(), args.all)?;
    let resolver = GeneResolver::new(&graph);

    let lines = parallel_map(&samples, args.jobs, |sentence| -> Result<String, CliError> {
        let retrieval = retrieve(&graph, &resolver, sentence, &pipeline)?;
        let support = args
            .dump_support
            .then(|| retrieval.table.dump(&graph, &retrieval.grounded));
        let record = RetrieveRecord {
            cell_id: &sentence.cell_id,
            grounded_count: retrieval.grounded.len(),
            grounded: &retrieval.grounded.genes,
            housekeeping_dropped: &retrieval.grounded.housekeeping_dropped,
            unmatched: &retrieval.grounded.unmatched,
            candidate_count: retrieval.table.candidate_count(),
            candidates: &retrieval.top,
            warning: retrieval
                .grounded
                .is_empty()
                .then_some("no groundable genes"),
            support,
        };
        Ok(serde_json::to_string(&record).expect("record serializes"))
    });

    let mut out = String::new();
    for line in lines {
        out.push_str(&line?);
        out.push('\n');
    }
    write_output(args.out.as_deref(), &out)
}

pub fn run_annotate(args: AnnotateArgs, file: &FileConfig) -> Result<(), CliError> {
    let pipeline = args.pipeline.resolve(file)?;
    let graph = load_graph(args.graph_nodes.as_deref(), args.graph_edges.as_deref(), file)?;
    if graph.type_set().get(&pipeline.traversal.target_type).is_none() {
        return Err(CliError::Config(format!(
            "target type {:?} is not in the graph's semantic type set",
            pipeline.traversal.target_type
        )));
    }
    let dataset_path = require_path(args.dataset.as_deref(), file.paths.dataset.as_deref(), "--dataset")?;
    let samples = parse_cell_sentences(dataset_path)?;
    let obo_path = require_path(args.obo.as_deref(), file.paths.obo.as_deref(), "--obo")?;
    let dag = OntologyDag::parse_obo(obo_path)?;
    let resolver = GeneResolver::new(&graph);

    let label_space_hint = args.label_space.then(|| {
        let ty = graph
            .type_set()
            .get(&pipeline.traversal.target_type)
            .expect("target type checked above");
        let mut names: Vec<String> = graph
            .nodes()
            .filter(|n| n.semantic_type == ty)
            .map(|n| n.name.clone())
            .collect();
        names.sort_unstable();
        names.dedup();
        names
    });
    let options = AnnotateOptions {
        model: args
            .model
            .clone()
            .or_else(|| file.annotate.model.clone())
            .unwrap_or_else(|| "mock".to_string()),
        temperature: args
            .temperature
            .or(file.annotate.temperature)
            .unwrap_or(0.0),
        include_paths: args.include_paths || file.annotate.include_paths.unwrap_or(false),
        label_space_hint,
        max_retries: args.max_retries.or(file.annotate.max_retries).unwrap_or(2),
    };
    let jobs = args.jobs.or(file.annotate.jobs).unwrap_or(1);

    if args.dry_run {
        std::fs::create_dir_all(&args.prompt_dir)?;
        let mut out = String::new();
        for sentence in &samples {
            let (result, request) =
                annotate_dry_run(sentence, &graph, &resolver, &pipeline, &options)?;
            let prompt_path = args.prompt_dir.join(format!("{}.txt", sentence.cell_id));
            std::fs::write(
                &prompt_path,
                format!("{}\n---\n{}\n", request.system_prompt, request.user_prompt),
            )?;
            out.push_str(&serde_json::to_string(&result.record()).expect("record serializes"));
            out.push('\n');
        }
        write_output(args.out.as_deref(), &out)?;
        eprintln!(
            "dry run: {} prompts written to {}, 0 LLM calls",
            samples.len(),
            args.prompt_dir.display()
        );
        return Ok(());
    }

    let client: Box<dyn ChatClient> = if args.mock {
        Box::new(MockChatClient::TopEvidence)
    } else {
        let base_url = args
            .base_url
            .clone()
            .or_else(|| file.annotate.base_url.clone())
            .ok_or_else(|| {
                CliError::Config("missing --base-url (or [annotate].base_url, or --mock)".into())
            })?;
        if args.model.is_none() && file.annotate.model.is_none() {
            return Err(CliError::Config(
                "missing --model (or [annotate].model) for a live endpoint".into(),
            ));
        }
        let timeout = args
            .timeout_secs
            .or(file.annotate.timeout_secs)
            .unwrap_or(30);
        Box::new(HttpChatClient::new(
            base_url,
            std::env::var(TOKEN_ENV_VAR).ok(),
            Duration::from_secs(timeout),
        ))
    };

    let outcomes = parallel_map(&samples, jobs, |sentence| {
        annotate(
            sentence,
            &graph,
            &resolver,
            &dag,
            &pipeline,
            &options,
            client.as_ref(),
        )
    });

    let mut out = String::new();
    let mut results: Vec<AnnotationResult> = Vec::with_capacity(samples.len());
    let mut failures = 0usize;
    for (sentence, outcome) in samples.iter().zip(outcomes) {
        match outcome {
            Ok(result) => {
                out.push_str(&serde_json::to_string(&result.record()).expect("record serializes"));
                out.push('\n');
                results.push(result);
            }
            Err(AnnotateError::Transport { retries, source }) => {
                failures += 1;
                eprintln!(
                    "sample {}: transport failure after {} retries: {}",
                    sentence.cell_id, retries, source
                );
            }
            Err(AnnotateError::Retrieve(e)) => return Err(e.into()),
        }
    }
    write_output(args.out.as_deref(), &out)?;

    if !results.is_empty() {
        let n = results.len() as f64;
        let avg_calls: f64 = results.iter().map(|r| f64::from(r.llm_calls)).sum::<f64>() / n;
        let avg_evidence: f64 =
            results.iter().map(|r| r.evidence_count as f64).sum::<f64>() / n;
        let retries: u32 = results.iter().map(|r| r.retries).sum();
        eprintln!(
            "annotated {} samples: avg_calls={avg_calls:.1} avg_evidence={avg_evidence:.1} retries={retries}",
            results.len()
        );
    }
    if failures > 0 {
        return Err(CliError::Transport(format!(
            "{failures} sample(s) failed on transport"
        )));
    }
    Ok(())
}

pub fn run_eval(args: EvalArgs, file: &FileConfig) -> Result<(), CliError> {
    let raw = std::fs::read_to_string(&args.results)?;
    let mut results = Vec::new();
    for (lineno, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: converge_core::ResultRecord = serde_json::from_str(line).map_err(|e| {
            CliError::Validation(format!(
                "{}:{}: malformed result line: {e}",
                args.results.display(),
                lineno + 1
            ))
        })?;
        results.push(AnnotationResult::from_record(record));
    }
    let dataset_path = require_path(args.dataset.as_deref(), file.paths.dataset.as_deref(), "--dataset")?;
    let dataset = parse_cell_sentences(dataset_path)?;
    let obo_path = require_path(args.obo.as_deref(), file.paths.obo.as_deref(), "--obo")?;
    let dag = OntologyDag::parse_obo(obo_path)?;

    let report = evaluate(&results, &dataset, &dag)?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    match &args.out {
        Some(path) => {
            write_output(Some(path), &json)?;
            emit(&report.table())?;
        }
        None => {
            emit_line(&json)?;
            eprint!("{}", report.table());
        }
    }
    Ok(())
}

pub fn run_synth(args: SynthArgs) -> Result<(), CliError> {
    let mut spec = if args.cell_kg_profile {
        SynthSpec::cell_kg_profile(args.seed.unwrap_or(1))
    } else {
        let path = args.spec.ok_or_else(|| {
            CliError::Config("pass either --spec <FILE> or --cell-kg-profile".into())
        })?;
        let raw = std::fs::read_to_string(&path)?;
        serde_json::from_str(&raw).map_err(|e| {
            CliError::Config(format!("invalid synth spec {}: {e}", path.display()))
        })?
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    std::fs::create_dir_all(&args.out)?;
    let output = generate(&spec, &args.out)?;
    emit_line(
        &serde_json::json!({
            "nodes": output.nodes_path,
            "edges": output.edges_path,
            "dataset": output.dataset_path,
            "obo": output.obo_path,
            "manifest": output.manifest_path,
            "node_count": output.manifest.node_count,
            "edge_count": output.manifest.edge_count,
            "samples": output.manifest.samples.len(),
        })
        .to_string(),
    )
}
