//! Black-box CLI tests: exit codes, config layering, and file outputs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_converge"))
}

fn run(args: &[&str], cwd: &Path) -> Output {
    bin().args(args).current_dir(cwd).output().expect("binary runs")
}

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

/// A small planted graph with dataset, ontology, and manifest.
fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let spec = converge_core::synth::SynthSpec {
        marker_density: 0.02,
        function_fanout: 1.0,
        n_function_nodes: 40,
        filler_genes: 2,
        ..converge_core::synth::SynthSpec::planted(5, 8, 3, 2)
    };
    converge_core::synth::generate(&spec, &root).unwrap();
    Fixture { _dir: dir, root }
}

#[test]
fn graph_validate_ok_and_stats() {
    let fx = fixture();
    let out = run(
        &[
            "graph",
            "validate",
            "--graph-nodes",
            "nodes.tsv",
            "--graph-edges",
            "edges.tsv",
        ],
        &fx.root,
    );
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("ok: "));

    let out = run(
        &[
            "graph",
            "stats",
            "--graph-nodes",
            "nodes.tsv",
            "--graph-edges",
            "edges.tsv",
        ],
        &fx.root,
    );
    assert!(out.status.success());
    let stats: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(stats["node_count"].as_u64().unwrap() > 0);
    assert!(stats["nodes_per_type"]["Gene"].as_u64().unwrap() > 0);
}

#[test]
fn duplicate_node_id_exits_one_and_names_line() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("nodes.tsv"),
        "id\tsemantic_type\tname\tsynonyms\nA:1\tGene\ta\t\nA:1\tGene\ta2\t\n",
    )
    .unwrap();
    std::fs::write(dir.path().join("edges.tsv"), "source\trelation\ttarget\n").unwrap();
    let out = run(
        &[
            "graph",
            "validate",
            "--graph-nodes",
            "nodes.tsv",
            "--graph-edges",
            "edges.tsv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("A:1"), "stderr: {stderr}");
    assert!(stderr.contains(":3"), "stderr should name line 3: {stderr}");
}

#[test]
fn missing_selection_is_config_error() {
    let fx = fixture();
    let out = run(
        &[
            "retrieve",
            "--graph-nodes",
            "nodes.tsv",
            "--graph-edges",
            "edges.tsv",
            "--dataset",
            "dataset.jsonl",
        ],
        &fx.root,
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_supplies_paths_and_flags_override() {
    let fx = fixture();
    std::fs::write(
        fx.root.join("run.toml"),
        "[paths]\ngraph_nodes = \"nodes.tsv\"\ngraph_edges = \"edges.tsv\"\n\
         dataset = \"dataset.jsonl\"\nobo = \"ontology.obo\"\n\n[scoring]\ntop_k = 3\n",
    )
    .unwrap();
    let out = run(&["--config", "run.toml", "retrieve", "--all"], &fx.root);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let first: serde_json::Value = serde_json::from_str(
        String::from_utf8(out.stdout).unwrap().lines().next().unwrap(),
    )
    .unwrap();
    assert!(first["candidates"].as_array().unwrap().len() <= 3);

    // A flag overrides the file value.
    let out = run(
        &["--config", "run.toml", "retrieve", "--all", "--top-k", "1"],
        &fx.root,
    );
    assert!(out.status.success());
    let first: serde_json::Value = serde_json::from_str(
        String::from_utf8(out.stdout).unwrap().lines().next().unwrap(),
    )
    .unwrap();
    assert_eq!(first["candidates"].as_array().unwrap().len(), 1);
}

#[test]
fn bad_gamma_is_config_error() {
    let fx = fixture();
    let out = run(
        &[
            "retrieve",
            "--graph-nodes",
            "nodes.tsv",
            "--graph-edges",
            "edges.tsv",
            "--dataset",
            "dataset.jsonl",
            "--all",
            "--gamma",
            "1.5",
        ],
        &fx.root,
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn annotate_mock_then_eval_roundtrip() {
    let fx = fixture();
    let out = run(
        &[
            "annotate",
            "--graph-nodes",
            "nodes.tsv",
            "--graph-edges",
            "edges.tsv",
            "--dataset",
            "dataset.jsonl",
            "--obo",
            "ontology.obo",
            "--mock",
            "--out",
            "results.jsonl",
        ],
        &fx.root,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = String::from_utf8(out.stderr).unwrap();
    assert!(summary.contains("avg_calls=1.0"), "summary: {summary}");

    let out = run(
        &[
            "eval",
            "--results",
            "results.jsonl",
            "--dataset",
            "dataset.jsonl",
            "--obo",
            "ontology.obo",
            "--out",
            "report.json",
        ],
        &fx.root,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fx.root.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["n_samples"], 8);
    assert_eq!(report["avg_calls"], 1.0);
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("Exact"));
}

#[test]
fn dry_run_writes_prompts_and_zero_calls() {
    let fx = fixture();
    let out = run(
        &[
            "annotate",
            "--graph-nodes",
            "nodes.tsv",
            "--graph-edges",
            "edges.tsv",
            "--dataset",
            "dataset.jsonl",
            "--obo",
            "ontology.obo",
            "--dry-run",
            "--prompt-dir",
            "prompts",
            "--out",
            "dry.jsonl",
        ],
        &fx.root,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let prompt_files = std::fs::read_dir(fx.root.join("prompts")).unwrap().count();
    assert_eq!(prompt_files, 8);
    for line in std::fs::read_to_string(fx.root.join("dry.jsonl"))
        .unwrap()
        .lines()
    {
        let record: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(record["llm_calls"], 0);
    }
}

#[test]
fn synth_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let spec = serde_json::json!({
        "seed": 1,
        "n_genes": 30,
        "n_celltypes": 6,
        "n_function_nodes": 12,
        "marker_density": 0.05,
        "function_fanout": 1.0,
        "noise_fraction": 0.2,
        "planted": [
            {"celltype": 0, "supporters": [{"gene": 0, "hop": 1}, {"gene": 1, "hop": 2}]}
        ]
    });
    std::fs::write(dir.path().join("spec.json"), spec.to_string()).unwrap();
    for sub in ["a", "b"] {
        let out = run(
            &[
                "synth",
                "--spec",
                "spec.json",
                "--seed",
                "9",
                "--out",
                sub,
            ],
            dir.path(),
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["nodes.tsv", "edges.tsv", "dataset.jsonl", "ontology.obo", "manifest.json"] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }
}

#[test]
fn from_obo_emits_loadable_tsv() {
    let fx = fixture();
    let out = run(
        &[
            "graph",
            "from-obo",
            "--obo",
            "ontology.obo",
            "--out-nodes",
            "cl_nodes.tsv",
            "--out-edges",
            "cl_edges.tsv",
        ],
        &fx.root,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(
        &[
            "graph",
            "validate",
            "--graph-nodes",
            "cl_nodes.tsv",
            "--graph-edges",
            "cl_edges.tsv",
        ],
        &fx.root,
    );
    assert!(out.status.success());
    // Node ids match the ontology term ids (shared identifiers).
    let nodes = std::fs::read_to_string(fx.root.join("cl_nodes.tsv")).unwrap();
    assert!(nodes.contains("SYN-CL:000000\tCellType\t"));
}

#[test]
fn unknown_target_type_is_config_error() {
    let fx = fixture();
    let out = run(
        &[
            "retrieve",
            "--graph-nodes",
            "nodes.tsv",
            "--graph-edges",
            "edges.tsv",
            "--dataset",
            "dataset.jsonl",
            "--all",
            "--target-type",
            "Widget",
        ],
        &fx.root,
    );
    assert_eq!(out.status.code(), Some(2));
}
