//! Synthetic typed graphs and datasets with planted convergence structure.
//!
//! The generator emits the same TSV/JSONL/OBO formats the engine consumes,
//! plus a ground-truth manifest recording every planted target with its
//! supporter set and minimal hops. Output is a pure function of the spec
//! (fixed seed, fixed iteration order), so repeated runs are byte-identical.
//!
//! Planted support uses the two path shapes the schema models: a direct
//! marker edge (hop 1) and a functional bridge `Gene -> process <- CellType`
//! (hop 2). Background and noise edges never connect a planted supporter
//! directly to its target, so the manifest hops stay exact at any noise
//! level.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One planted supporter: gene index and the hop its planted path uses.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantedSupporter {
    pub gene: usize,
    pub hop: u8,
}

/// One planted convergence target with its supporting coalition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantedTarget {
    pub celltype: usize,
    pub supporters: Vec<PlantedSupporter>,
}

/// Generator parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSpec {
    pub seed: u64,
    pub n_genes: usize,
    pub n_celltypes: usize,
    pub n_function_nodes: usize,
    /// Probability of a background Gene->CellType marker edge per pair.
    pub marker_density: f64,
    /// Mean background Gene->Function and CellType->Function degree.
    pub function_fanout: f64,
    /// Extra random cross-type edges, as a fraction of planted edge count.
    #[serde(default)]
    pub noise_fraction: f64,
    /// Real filler genes appended to each sentence after the supporters.
    #[serde(default)]
    pub filler_genes: usize,
    /// Symbols per sentence that deliberately match no graph node.
    #[serde(default)]
    pub fake_genes: usize,
    pub planted: Vec<PlantedTarget>,
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("infeasible spec: {0}")]
    Infeasible(String),
    #[error("failed to write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Where the generated artifacts were written, plus the parsed manifest.
#[derive(Debug)]
pub struct SynthOutput {
    pub nodes_path: PathBuf,
    pub edges_path: PathBuf,
    pub dataset_path: PathBuf,
    pub obo_path: PathBuf,
    pub manifest_path: PathBuf,
    pub manifest: Manifest,
}

/// Ground truth for one generated sentence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestSample {
    pub cell_id: String,
    pub target_id: String,
    pub supporters: Vec<ManifestSupporter>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestSupporter {
    pub symbol: String,
    pub node_id: String,
    pub hop: u8,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub node_count: usize,
    pub edge_count: usize,
    pub samples: Vec<ManifestSample>,
}

impl SynthSpec {
    /// A compact planted spec: `n_targets` cell types, each supported by
    /// `hop1` direct markers and `hop2` functional bridges, drawn from a
    /// shared gene pool without overlap inside one target.
    pub fn planted(seed: u64, n_targets: usize, hop1: usize, hop2: usize) -> SynthSpec {
        let per = hop1 + hop2;
        let n_genes = (n_targets * per).max(1);
        let mut planted = Vec::with_capacity(n_targets);
        for t in 0..n_targets {
            let base = t * per;
            let mut supporters = Vec::with_capacity(per);
            for j in 0..hop1 {
                supporters.push(PlantedSupporter {
                    gene: base + j,
                    hop: 1,
                });
            }
            for j in 0..hop2 {
                supporters.push(PlantedSupporter {
                    gene: base + hop1 + j,
                    hop: 2,
                });
            }
            planted.push(PlantedTarget {
                celltype: t,
                supporters,
            });
        }
        SynthSpec {
            seed,
            n_genes,
            n_celltypes: n_targets,
            n_function_nodes: 0,
            marker_density: 0.0,
            function_fanout: 0.0,
            noise_fraction: 0.0,
            filler_genes: 0,
            fake_genes: 0,
            planted,
        }
    }

    /// A profile that lands near the reference graph shape: 240K+ nodes,
    /// ~2.5M edges, mean degree around 21, with 1000 planted sentences of
    /// 50 genes each.
    pub fn cell_kg_profile(seed: u64) -> SynthSpec {
        let n_genes = 45_000;
        let n_celltypes = 3_000;
        let mut spec = SynthSpec {
            seed,
            n_genes,
            n_celltypes,
            n_function_nodes: 192_000,
            marker_density: 400_000.0 / (n_genes as f64 * n_celltypes as f64),
            function_fanout: 43.5,
            noise_fraction: 0.0,
            filler_genes: 40,
            fake_genes: 0,
            planted: Vec::new(),
        };
        // Planted coalitions use a reserved slice of the gene pool so
        // sentences never share supporters.
        let per = 10;
        for t in 0..1_000 {
            let base = t * per;
            let mut supporters = Vec::with_capacity(per);
            for j in 0..per {
                supporters.push(PlantedSupporter {
                    gene: base + j,
                    hop: if j < 5 { 1 } else { 2 },
                });
            }
            spec.planted.push(PlantedTarget {
                celltype: t % n_celltypes,
                supporters,
            });
        }
        spec
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if !(0.0..=1.0).contains(&self.marker_density) {
            return Err(SynthError::Infeasible(format!(
                "marker_density must be in [0, 1], got {}",
                self.marker_density
            )));
        }
        if self.function_fanout < 0.0 || self.noise_fraction < 0.0 {
            return Err(SynthError::Infeasible(
                "function_fanout and noise_fraction must be non-negative".into(),
            ));
        }
        for (i, target) in self.planted.iter().enumerate() {
            if target.celltype >= self.n_celltypes {
                return Err(SynthError::Infeasible(format!(
                    "planted target {i} names cell type {} but only {} exist",
                    target.celltype, self.n_celltypes
                )));
            }
            let mut seen = HashSet::new();
            for supporter in &target.supporters {
                if supporter.gene >= self.n_genes {
                    return Err(SynthError::Infeasible(format!(
                        "planted target {i} names gene {} but only {} exist",
                        supporter.gene, self.n_genes
                    )));
                }
                if !matches!(supporter.hop, 1 | 2) {
                    return Err(SynthError::Infeasible(format!(
                        "planted target {i} asks for hop {}, but only 1-hop marker and \
                         2-hop functional paths can be constructed",
                        supporter.hop
                    )));
                }
                if !seen.insert(supporter.gene) {
                    return Err(SynthError::Infeasible(format!(
                        "planted target {i} repeats gene {}",
                        supporter.gene
                    )));
                }
            }
        }
        Ok(())
    }
}

fn gene_id(i: usize) -> String {
    format!("SYN-G:{i:06}")
}

fn gene_symbol(i: usize) -> String {
    format!("SG{i}")
}

fn celltype_id(i: usize) -> String {
    format!("SYN-CL:{i:06}")
}

fn celltype_name(i: usize) -> String {
    format!("synthetic cell type {i}")
}

fn function_id(i: usize) -> String {
    format!("SYN-BP:{i:06}")
}

fn bridge_id(i: usize) -> String {
    format!("SYN-BPP:{i:06}")
}

struct FileSink {
    path: PathBuf,
    writer: BufWriter<File>,
}

impl FileSink {
    fn create(dir: &Path, name: &str) -> Result<FileSink, SynthError> {
        let path = dir.join(name);
        let file = File::create(&path).map_err(|source| SynthError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(FileSink {
            path,
            writer: BufWriter::new(file),
        })
    }

    fn line(&mut self, line: &str) -> Result<(), SynthError> {
        self.writer
            .write_all(line.as_bytes())
            .and_then(|_| self.writer.write_all(b"\n"))
            .map_err(|source| SynthError::Io {
                path: self.path.display().to_string(),
                source,
            })
    }

    fn finish(mut self) -> Result<PathBuf, SynthError> {
        self.writer.flush().map_err(|source| SynthError::Io {
            path: self.path.display().to_string(),
            source,
        })?;
        Ok(self.path)
    }
}

/// Generates graph, dataset, ontology, and manifest files under `out_dir`.
pub fn generate(spec: &SynthSpec, out_dir: impl AsRef<Path>) -> Result<SynthOutput, SynthError> {
    spec.validate()?;
    let out_dir = out_dir.as_ref();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Bridges exist only for planted targets with hop-2 supporters.
    let needs_bridge: Vec<bool> = spec
        .planted
        .iter()
        .map(|t| t.supporters.iter().any(|s| s.hop == 2))
        .collect();

    // ---- nodes.tsv ----
    let mut nodes = FileSink::create(out_dir, "nodes.tsv")?;
    nodes.line("id\tsemantic_type\tname\tsynonyms")?;
    let mut node_count = 0usize;
    for i in 0..spec.n_genes {
        let synonyms = if i % 5 == 0 {
            format!("{}-ALT", gene_symbol(i))
        } else {
            String::new()
        };
        nodes.line(&format!(
            "{}\tGene\t{}\t{}",
            gene_id(i),
            gene_symbol(i),
            synonyms
        ))?;
        node_count += 1;
    }
    for i in 0..spec.n_celltypes {
        nodes.line(&format!(
            "{}\tCellType\t{}\t",
            celltype_id(i),
            celltype_name(i)
        ))?;
        node_count += 1;
    }
    for i in 0..spec.n_function_nodes {
        nodes.line(&format!(
            "{}\tBiologicalProcess\tsynthetic process {}\t",
            function_id(i),
            i
        ))?;
        node_count += 1;
    }
    for (i, &needed) in needs_bridge.iter().enumerate() {
        if needed {
            nodes.line(&format!(
                "{}\tBiologicalProcess\tplanted process {}\t",
                bridge_id(i),
                i
            ))?;
            node_count += 1;
        }
    }
    let nodes_path = nodes.finish()?;

    // ---- edges.tsv ----
    // No background or noise edge may directly join a planted supporter to
    // its own target, otherwise the manifest's hop-2 records would break.
    let mut forbidden_direct: HashSet<(usize, usize)> = HashSet::new();
    for target in &spec.planted {
        for supporter in &target.supporters {
            forbidden_direct.insert((supporter.gene, target.celltype));
        }
    }

    let mut edges = FileSink::create(out_dir, "edges.tsv")?;
    edges.line("source\trelation\ttarget")?;
    let mut edge_count = 0usize;

    // Planted structure first.
    for (i, target) in spec.planted.iter().enumerate() {
        let ct = celltype_id(target.celltype);
        for supporter in &target.supporters {
            match supporter.hop {
                1 => {
                    edges.line(&format!(
                        "{}\tIS_MARKER_FOR\t{}",
                        gene_id(supporter.gene),
                        ct
                    ))?;
                    edge_count += 1;
                }
                _ => {
                    edges.line(&format!(
                        "{}\tPARTICIPATES_IN\t{}",
                        gene_id(supporter.gene),
                        bridge_id(i)
                    ))?;
                    edge_count += 1;
                }
            }
        }
        if needs_bridge[i] {
            edges.line(&format!("{}\tCAPABLE_OF\t{}", ct, bridge_id(i)))?;
            edge_count += 1;
        }
    }
    let planted_edge_count = edge_count;

    // Background marker edges.
    let marker_target = (spec.marker_density * spec.n_genes as f64 * spec.n_celltypes as f64)
        .round() as usize;
    if marker_target > 0 && spec.n_genes > 0 && spec.n_celltypes > 0 {
        let mut placed: HashSet<(usize, usize)> = HashSet::with_capacity(marker_target);
        let mut attempts = 0usize;
        while placed.len() < marker_target && attempts < marker_target.saturating_mul(20) {
            attempts += 1;
            let g = rng.gen_range(0..spec.n_genes);
            let c = rng.gen_range(0..spec.n_celltypes);
            if forbidden_direct.contains(&(g, c)) || !placed.insert((g, c)) {
                continue;
            }
            edges.line(&format!("{}\tIS_MARKER_FOR\t{}", gene_id(g), celltype_id(c)))?;
            edge_count += 1;
        }
    }

    // Background functional edges.
    if spec.n_function_nodes > 0 {
        let gene_fn_target = (spec.function_fanout * spec.n_genes as f64).round() as usize;
        let mut placed: HashSet<(usize, usize)> = HashSet::with_capacity(gene_fn_target);
        let mut attempts = 0usize;
        while placed.len() < gene_fn_target && attempts < gene_fn_target.saturating_mul(20) {
            attempts += 1;
            let g = rng.gen_range(0..spec.n_genes);
            let f = rng.gen_range(0..spec.n_function_nodes);
            if !placed.insert((g, f)) {
                continue;
            }
            edges.line(&format!(
                "{}\tPARTICIPATES_IN\t{}",
                gene_id(g),
                function_id(f)
            ))?;
            edge_count += 1;
        }
        let ct_fn_target = (spec.function_fanout * spec.n_celltypes as f64).round() as usize;
        let mut placed: HashSet<(usize, usize)> = HashSet::with_capacity(ct_fn_target);
        let mut attempts = 0usize;
        while placed.len() < ct_fn_target && attempts < ct_fn_target.saturating_mul(20) {
            attempts += 1;
            let c = rng.gen_range(0..spec.n_celltypes);
            let f = rng.gen_range(0..spec.n_function_nodes);
            if !placed.insert((c, f)) {
                continue;
            }
            edges.line(&format!("{}\tCAPABLE_OF\t{}", celltype_id(c), function_id(f)))?;
            edge_count += 1;
        }
    }

    // Noise edges: random cross-type pairs.
    let noise_target = (spec.noise_fraction * planted_edge_count as f64).round() as usize;
    if noise_target > 0 {
        #[derive(Clone, Copy, PartialEq)]
        enum Kind {
            Gene,
            CellType,
            Function,
        }
        let mut pools: Vec<(Kind, usize)> = Vec::new();
        if spec.n_genes > 0 {
            pools.push((Kind::Gene, spec.n_genes));
        }
        if spec.n_celltypes > 0 {
            pools.push((Kind::CellType, spec.n_celltypes));
        }
        if spec.n_function_nodes > 0 {
            pools.push((Kind::Function, spec.n_function_nodes));
        }
        if pools.len() >= 2 {
            let id_of = |kind: Kind, i: usize| match kind {
                Kind::Gene => gene_id(i),
                Kind::CellType => celltype_id(i),
                Kind::Function => function_id(i),
            };
            let mut placed = 0usize;
            let mut attempts = 0usize;
            while placed < noise_target && attempts < noise_target.saturating_mul(50) {
                attempts += 1;
                let (ka, na) = pools[rng.gen_range(0..pools.len())];
                let (kb, nb) = pools[rng.gen_range(0..pools.len())];
                if ka == kb {
                    continue;
                }
                let a = rng.gen_range(0..na);
                let b = rng.gen_range(0..nb);
                let gene_ct = match (ka, kb) {
                    (Kind::Gene, Kind::CellType) => Some((a, b)),
                    (Kind::CellType, Kind::Gene) => Some((b, a)),
                    _ => None,
                };
                if let Some(pair) = gene_ct {
                    if forbidden_direct.contains(&pair) {
                        continue;
                    }
                }
                edges.line(&format!(
                    "{}\tASSOCIATED_WITH\t{}",
                    id_of(ka, a),
                    id_of(kb, b)
                ))?;
                edge_count += 1;
                placed += 1;
            }
        }
    }
    let edges_path = edges.finish()?;

    // ---- dataset.jsonl + manifest ----
    let mut dataset = FileSink::create(out_dir, "dataset.jsonl")?;
    let mut samples = Vec::with_capacity(spec.planted.len());
    for (i, target) in spec.planted.iter().enumerate() {
        let cell_id = format!("SYN-CELL:{i:04}");
        let mut symbols: Vec<String> = Vec::new();
        let mut used: HashSet<usize> = HashSet::new();
        let mut supporters = Vec::with_capacity(target.supporters.len());
        for hop in [1u8, 2u8] {
            for supporter in target.supporters.iter().filter(|s| s.hop == hop) {
                symbols.push(gene_symbol(supporter.gene));
                used.insert(supporter.gene);
                supporters.push(ManifestSupporter {
                    symbol: gene_symbol(supporter.gene),
                    node_id: gene_id(supporter.gene),
                    hop,
                });
            }
        }
        let mut filler_placed = 0usize;
        let mut attempts = 0usize;
        while filler_placed < spec.filler_genes
            && used.len() < spec.n_genes
            && attempts < spec.filler_genes.saturating_mul(50).max(64)
        {
            attempts += 1;
            let g = rng.gen_range(0..spec.n_genes);
            if !used.insert(g) {
                continue;
            }
            symbols.push(gene_symbol(g));
            filler_placed += 1;
        }
        for j in 0..spec.fake_genes {
            symbols.push(format!("SYN-FAKE{i}X{j}"));
        }
        let record = serde_json::json!({
            "cell_id": cell_id,
            "genes": symbols,
            "label": celltype_id(target.celltype),
        });
        dataset.line(&record.to_string())?;
        samples.push(ManifestSample {
            cell_id,
            target_id: celltype_id(target.celltype),
            supporters,
        });
    }
    let dataset_path = dataset.finish()?;

    // ---- ontology.obo: a random is_a tree over the cell types ----
    let mut obo = FileSink::create(out_dir, "ontology.obo")?;
    obo.line("format-version: 1.2")?;
    for i in 0..spec.n_celltypes {
        obo.line("")?;
        obo.line("[Term]")?;
        obo.line(&format!("id: {}", celltype_id(i)))?;
        obo.line(&format!("name: {}", celltype_name(i)))?;
        if i > 0 {
            let parent = rng.gen_range(0..i);
            obo.line(&format!("is_a: {} ! {}", celltype_id(parent), celltype_name(parent)))?;
        }
    }
    let obo_path = obo.finish()?;

    // ---- manifest.json ----
    let manifest = Manifest {
        seed: spec.seed,
        node_count,
        edge_count,
        samples,
    };
    let mut sink = FileSink::create(out_dir, "manifest.json")?;
    sink.line(
        &serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    let manifest_path = sink.finish()?;

    Ok(SynthOutput {
        nodes_path,
        edges_path,
        dataset_path,
        obo_path,
        manifest_path,
        manifest,
    })
}
