//! Minimal OBO parser and cell-type DAG queries.
//!
//! Only `[Term]` stanzas are interpreted, and within them only the `id:`,
//! `name:`, `is_a:`, and `synonym:` tags; everything else is skipped. The
//! `is_a` hierarchy must be acyclic. The parsed DAG answers
//! ancestor/descendant queries and resolves free-text labels to term ids.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use log::warn;
use thiserror::Error;

/// One ontology term: CURIE id, label, direct `is_a` parents, synonyms.
#[derive(Debug, Clone)]
pub struct OntologyTerm {
    pub id: String,
    pub name: String,
    pub parents: Vec<String>,
    pub synonyms: Vec<String>,
}

#[derive(Debug, Error)]
pub enum OboError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed stanza: {reason}")]
    MalformedStanza {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("{path}:{line}: duplicate term id {id:?}")]
    DuplicateTermId {
        path: String,
        line: usize,
        id: String,
    },
    #[error("term {id:?} has is_a reference to unknown term {parent:?}")]
    UnknownParent { id: String, parent: String },
    #[error("is_a cycle involving term {0:?}")]
    Cycle(String),
    #[error("unknown term id {0:?}")]
    UnknownTerm(String),
}

/// Parsed ontology with a precomputed transitive `is_a` closure.
#[derive(Debug)]
pub struct OntologyDag {
    terms: Vec<OntologyTerm>,
    id_index: HashMap<String, usize>,
    // Per term, sorted indices of all transitive ancestors (never self).
    ancestors: Vec<Vec<u32>>,
    by_norm_id: HashMap<String, usize>,
    by_norm_name: HashMap<String, usize>,
    by_norm_synonym: HashMap<String, usize>,
}

/// Normalization applied before label matching: trim, lowercase, collapse
/// internal whitespace, strip trailing punctuation.
pub fn normalize_label(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(word.chars().flat_map(|c| c.to_lowercase()));
    }
    while out.ends_with(['.', ',', ';', ':', '!', '?']) {
        out.pop();
    }
    while out.ends_with(' ') {
        out.pop();
    }
    out
}

impl OntologyDag {
    /// Parses an OBO file into a validated DAG.
    pub fn parse_obo(path: impl AsRef<Path>) -> Result<OntologyDag, OboError> {
        let path = path.as_ref();
        let path_str = path.display().to_string();
        let file = File::open(path).map_err(|source| OboError::Io {
            path: path_str.clone(),
            source,
        })?;
        let mut lines = Vec::new();
        for line in BufReader::new(file).lines() {
            lines.push(line.map_err(|source| OboError::Io {
                path: path_str.clone(),
                source,
            })?);
        }
        Self::parse_lines(&path_str, &lines)
    }

    /// Parses OBO content already split into lines (used by the file
    /// entry point and by tests/generators).
    pub fn parse_str(content: &str) -> Result<OntologyDag, OboError> {
        let lines: Vec<String> = content.lines().map(|l| l.to_string()).collect();
        Self::parse_lines("<string>", &lines)
    }

    fn parse_lines(path: &str, lines: &[String]) -> Result<OntologyDag, OboError> {
        #[derive(Default)]
        struct Stanza {
            start_line: usize,
            id: Option<String>,
            name: Option<String>,
            parents: Vec<String>,
            synonyms: Vec<String>,
        }

        enum State {
            Preamble,
            InTerm(Stanza),
            InOther,
        }

        let mut state = State::Preamble;
        let mut raw_terms: Vec<(usize, OntologyTerm)> = Vec::new();

        let finish =
            |stanza: Stanza, raw_terms: &mut Vec<(usize, OntologyTerm)>| -> Result<(), OboError> {
                let id = stanza.id.ok_or_else(|| OboError::MalformedStanza {
                    path: path.to_string(),
                    line: stanza.start_line,
                    reason: "term stanza has no id".into(),
                })?;
                let name = stanza.name.ok_or_else(|| OboError::MalformedStanza {
                    path: path.to_string(),
                    line: stanza.start_line,
                    reason: format!("term {id:?} has no name"),
                })?;
                raw_terms.push((
                    stanza.start_line,
                    OntologyTerm {
                        id,
                        name,
                        parents: stanza.parents,
                        synonyms: stanza.synonyms,
                    },
                ));
                Ok(())
            };

        for (lineno, raw) in lines.iter().enumerate() {
            let lineno = lineno + 1;
            let line = raw.trim_end();
            if line.starts_with('!') {
                continue;
            }
            if line.starts_with('[') {
                if let State::InTerm(stanza) = std::mem::replace(&mut state, State::InOther) {
                    finish(stanza, &mut raw_terms)?;
                }
                state = if line == "[Term]" {
                    State::InTerm(Stanza {
                        start_line: lineno,
                        ..Default::default()
                    })
                } else {
                    State::InOther
                };
                continue;
            }
            let State::InTerm(ref mut stanza) = state else {
                continue;
            };
            if line.is_empty() {
                continue;
            }
            let Some((tag, value)) = line.split_once(':') else {
                return Err(OboError::MalformedStanza {
                    path: path.to_string(),
                    line: lineno,
                    reason: format!("expected `tag: value`, found {line:?}"),
                });
            };
            let value = value.trim();
            match tag.trim() {
                "id" => {
                    if stanza.id.is_some() {
                        return Err(OboError::MalformedStanza {
                            path: path.to_string(),
                            line: lineno,
                            reason: "stanza has more than one id tag".into(),
                        });
                    }
                    if value.is_empty() {
                        return Err(OboError::MalformedStanza {
                            path: path.to_string(),
                            line: lineno,
                            reason: "empty id".into(),
                        });
                    }
                    stanza.id = Some(value.to_string());
                }
                "name" => {
                    stanza.name = Some(value.to_string());
                }
                "is_a" => {
                    // `is_a: CL:0000000 ! cell` — strip the trailing comment.
                    let parent = value.split('!').next().unwrap_or("").trim();
                    if parent.is_empty() {
                        return Err(OboError::MalformedStanza {
                            path: path.to_string(),
                            line: lineno,
                            reason: "empty is_a target".into(),
                        });
                    }
                    stanza.parents.push(parent.to_string());
                }
                "synonym" => {
                    // `synonym: "T-cell" EXACT []` — take the quoted text.
                    let Some(text) = extract_quoted(value) else {
                        return Err(OboError::MalformedStanza {
                            path: path.to_string(),
                            line: lineno,
                            reason: "synonym value is not quoted".into(),
                        });
                    };
                    stanza.synonyms.push(text);
                }
                _ => {}
            }
        }
        if let State::InTerm(stanza) = state {
            finish(stanza, &mut raw_terms)?;
        }

        Self::from_terms(path, raw_terms)
    }

    fn from_terms(path: &str, raw_terms: Vec<(usize, OntologyTerm)>) -> Result<OntologyDag, OboError> {
        let mut terms = Vec::with_capacity(raw_terms.len());
        let mut id_index: HashMap<String, usize> = HashMap::new();
        for (line, term) in raw_terms {
            if id_index.contains_key(&term.id) {
                return Err(OboError::DuplicateTermId {
                    path: path.to_string(),
                    line,
                    id: term.id,
                });
            }
            id_index.insert(term.id.clone(), terms.len());
            terms.push(term);
        }
        for term in &terms {
            for parent in &term.parents {
                if !id_index.contains_key(parent) {
                    return Err(OboError::UnknownParent {
                        id: term.id.clone(),
                        parent: parent.clone(),
                    });
                }
            }
        }

        // Kahn's algorithm over parent edges: detects cycles and yields an
        // order where parents precede children, which lets the closure be
        // built in one pass.
        let n = terms.len();
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut pending_parents: Vec<usize> = vec![0; n];
        for (i, term) in terms.iter().enumerate() {
            pending_parents[i] = term.parents.len();
            for parent in &term.parents {
                children[id_index[parent]].push(i);
            }
        }
        let mut queue: Vec<usize> = (0..n).filter(|&i| pending_parents[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = queue.pop() {
            order.push(i);
            for &c in &children[i] {
                pending_parents[c] -= 1;
                if pending_parents[c] == 0 {
                    queue.push(c);
                }
            }
        }
        if order.len() != n {
            let culprit = (0..n)
                .find(|&i| pending_parents[i] > 0)
                .expect("some term is on a cycle");
            return Err(OboError::Cycle(terms[culprit].id.clone()));
        }

        let mut ancestors: Vec<Vec<u32>> = vec![Vec::new(); n];
        for &i in &order {
            let mut set: BTreeSet<u32> = BTreeSet::new();
            for parent in &terms[i].parents {
                let p = id_index[parent];
                set.insert(p as u32);
                set.extend(ancestors[p].iter().copied());
            }
            ancestors[i] = set.into_iter().collect();
        }

        let mut dag = OntologyDag {
            terms,
            id_index,
            ancestors,
            by_norm_id: HashMap::new(),
            by_norm_name: HashMap::new(),
            by_norm_synonym: HashMap::new(),
        };
        dag.build_label_maps();
        Ok(dag)
    }

    fn build_label_maps(&mut self) {
        // Collisions resolve to the lexicographically smallest term id.
        fn insert(
            map: &mut HashMap<String, usize>,
            terms: &[OntologyTerm],
            key: String,
            idx: usize,
            kind: &str,
        ) {
            if key.is_empty() {
                return;
            }
            match map.get(&key) {
                Some(&existing) if terms[existing].id <= terms[idx].id => {
                    if existing != idx {
                        warn!(
                            "{kind} {key:?} is ambiguous between {} and {}; keeping {}",
                            terms[existing].id, terms[idx].id, terms[existing].id
                        );
                    }
                }
                Some(&existing) => {
                    warn!(
                        "{kind} {key:?} is ambiguous between {} and {}; keeping {}",
                        terms[existing].id, terms[idx].id, terms[idx].id
                    );
                    map.insert(key, idx);
                }
                None => {
                    map.insert(key, idx);
                }
            }
        }
        for i in 0..self.terms.len() {
            insert(
                &mut self.by_norm_id,
                &self.terms,
                normalize_label(&self.terms[i].id),
                i,
                "term id",
            );
            insert(
                &mut self.by_norm_name,
                &self.terms,
                normalize_label(&self.terms[i].name),
                i,
                "term name",
            );
            for s in self.terms[i].synonyms.clone() {
                insert(
                    &mut self.by_norm_synonym,
                    &self.terms,
                    normalize_label(&s),
                    i,
                    "synonym",
                );
            }
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = &OntologyTerm> {
        self.terms.iter()
    }

    pub fn term(&self, id: &str) -> Option<&OntologyTerm> {
        self.id_index.get(id).map(|&i| &self.terms[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.id_index.contains_key(id)
    }

    /// All transitive `is_a` ancestors of a term, never including itself.
    pub fn ancestors(&self, id: &str) -> Result<Vec<&str>, OboError> {
        let &i = self
            .id_index
            .get(id)
            .ok_or_else(|| OboError::UnknownTerm(id.to_string()))?;
        Ok(self.ancestors[i]
            .iter()
            .map(|&a| self.terms[a as usize].id.as_str())
            .collect())
    }

    fn index_of(&self, id: &str) -> Result<usize, OboError> {
        self.id_index
            .get(id)
            .copied()
            .ok_or_else(|| OboError::UnknownTerm(id.to_string()))
    }

    /// True iff the two terms are equal or one is a transitive `is_a`
    /// ancestor of the other (shared root-to-leaf path).
    pub fn on_same_path(&self, a: &str, b: &str) -> Result<bool, OboError> {
        let ia = self.index_of(a)?;
        let ib = self.index_of(b)?;
        if ia == ib {
            return Ok(true);
        }
        Ok(self.ancestors[ib].binary_search(&(ia as u32)).is_ok()
            || self.ancestors[ia].binary_search(&(ib as u32)).is_ok())
    }

    /// Resolves free text to a term id: normalized match against ids, then
    /// names, then synonyms. `None` when nothing matches.
    pub fn resolve_label(&self, text: &str) -> Option<&str> {
        let key = normalize_label(text);
        if key.is_empty() {
            return None;
        }
        self.by_norm_id
            .get(&key)
            .or_else(|| self.by_norm_name.get(&key))
            .or_else(|| self.by_norm_synonym.get(&key))
            .map(|&i| self.terms[i].id.as_str())
    }
}

fn extract_quoted(value: &str) -> Option<String> {
    let start = value.find('"')?;
    let rest = &value[start + 1..];
    let mut out = String::new();
    let mut chars = rest.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => {
                let escaped = chars.next()?;
                out.push(escaped);
            }
            '"' => return Some(out),
            _ => out.push(c),
        }
    }
    None
}
