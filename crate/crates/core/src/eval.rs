//! Evaluation metrics: exact match, ancestor match, call and evidence
//! accounting.
//!
//! Predictions that never resolved to an ontology term count as misses in
//! both metrics; excluding them would inflate accuracy. Ancestor match
//! credits a prediction on the same root-to-leaf `is_a` path as the gold
//! label, so an exact hit is always also an ancestor hit.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::annotate::AnnotationResult;
use crate::grounding::CellSentence;
use crate::obo::{OboError, OntologyDag};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("result for unknown cell id {0:?}")]
    UnknownCell(String),
    #[error("dataset cell {0:?} has no result")]
    MissingResult(String),
    #[error("duplicate result for cell id {0:?}")]
    DuplicateResult(String),
    #[error("cell {cell_id:?}: gold label {label:?} does not resolve in the ontology")]
    UnresolvedGold { cell_id: String, label: String },
    #[error("cell {0:?} has no gold label")]
    MissingGold(String),
    #[error(transparent)]
    Obo(#[from] OboError),
}

/// Aggregate metrics over one evaluated dataset.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub n_samples: usize,
    /// Exact-match accuracy, percent, two decimals.
    pub exact_pct: f64,
    /// Ancestor-match accuracy, percent, two decimals.
    pub ancestor_pct: f64,
    pub avg_calls: f64,
    pub avg_evidence: f64,
    /// gold term -> predicted term (or "(unresolved)") -> count.
    pub per_class_confusion: BTreeMap<String, BTreeMap<String, usize>>,
    pub unresolved_predictions: usize,
}

impl MetricsReport {
    /// Plain-text table with the familiar four metric columns.
    pub fn table(&self) -> String {
        format!(
            "{:>8}  {:>6}  {:>6}  {:>5}  {:>5}\n{:>8}  {:>6.2}  {:>6.2}  {:>5.1}  {:>5.1}\n",
            "Samples", "Exact", "Anc.", "Calls", "Evid.",
            self.n_samples, self.exact_pct, self.ancestor_pct, self.avg_calls, self.avg_evidence,
        )
    }
}

/// True iff the prediction resolved and equals the gold term.
pub fn exact_match(pred: Option<&str>, gold: &str) -> bool {
    pred == Some(gold)
}

/// True iff the prediction resolved and shares a root-to-leaf path with
/// the gold term (equal, ancestor, or descendant).
pub fn ancestor_match(
    pred: Option<&str>,
    gold: &str,
    dag: &OntologyDag,
) -> Result<bool, OboError> {
    match pred {
        Some(p) if dag.contains(p) => dag.on_same_path(p, gold),
        _ => Ok(false),
    }
}

const UNRESOLVED_KEY: &str = "(unresolved)";

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Aggregates results against the dataset. Results and dataset must cover
/// the same cell ids one-to-one; every gold label must resolve in the
/// ontology.
pub fn evaluate(
    results: &[AnnotationResult],
    dataset: &[CellSentence],
    dag: &OntologyDag,
) -> Result<MetricsReport, EvalError> {
    let mut by_cell: HashMap<&str, &CellSentence> = HashMap::with_capacity(dataset.len());
    for sentence in dataset {
        by_cell.insert(sentence.cell_id.as_str(), sentence);
    }

    let mut seen: HashMap<&str, ()> = HashMap::with_capacity(results.len());
    let mut exact_hits = 0usize;
    let mut ancestor_hits = 0usize;
    let mut unresolved = 0usize;
    let mut total_calls = 0u64;
    let mut total_evidence = 0usize;
    let mut confusion: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();

    for result in results {
        let sentence = by_cell
            .get(result.cell_id.as_str())
            .ok_or_else(|| EvalError::UnknownCell(result.cell_id.clone()))?;
        if seen.insert(result.cell_id.as_str(), ()).is_some() {
            return Err(EvalError::DuplicateResult(result.cell_id.clone()));
        }
        let gold_raw = sentence
            .gold_label
            .as_deref()
            .ok_or_else(|| EvalError::MissingGold(result.cell_id.clone()))?;
        let gold = dag
            .resolve_label(gold_raw)
            .ok_or_else(|| EvalError::UnresolvedGold {
                cell_id: result.cell_id.clone(),
                label: gold_raw.to_string(),
            })?;

        let pred = result.predicted_term.as_deref();
        if exact_match(pred, gold) {
            exact_hits += 1;
        }
        if ancestor_match(pred, gold, dag)? {
            ancestor_hits += 1;
        }
        if pred.is_none() || pred.is_some_and(|p| !dag.contains(p)) {
            unresolved += 1;
        }
        total_calls += u64::from(result.llm_calls);
        total_evidence += result.evidence_count;
        *confusion
            .entry(gold.to_string())
            .or_default()
            .entry(pred.unwrap_or(UNRESOLVED_KEY).to_string())
            .or_insert(0) += 1;
    }
    for sentence in dataset {
        if !seen.contains_key(sentence.cell_id.as_str()) {
            return Err(EvalError::MissingResult(sentence.cell_id.clone()));
        }
    }

    let n = results.len();
    let pct = |hits: usize| {
        if n == 0 {
            0.0
        } else {
            round2(100.0 * hits as f64 / n as f64)
        }
    };
    Ok(MetricsReport {
        n_samples: n,
        exact_pct: pct(exact_hits),
        ancestor_pct: pct(ancestor_hits),
        avg_calls: if n == 0 { 0.0 } else { total_calls as f64 / n as f64 },
        avg_evidence: if n == 0 {
            0.0
        } else {
            total_evidence as f64 / n as f64
        },
        per_class_confusion: confusion,
        unresolved_predictions: unresolved,
    })
}
