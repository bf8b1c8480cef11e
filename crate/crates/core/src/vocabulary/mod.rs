//! Column vocabulary: hint harvesting, approximate label matching, and the
//! host-scoped dictionary of learned definitions.

mod dictionary;
mod hints;
mod score;

use std::path::PathBuf;

use serde::Serialize;

pub use dictionary::{Dictionary, LoadReport, Provenance, SharedDictionary, VocabularyEntry};
pub use hints::{harvest_hints, HintSource, VocabHint};
pub(crate) use hints::hints_from_header;
pub use score::{normalize, score_match, EDIT_DISTANCE_CAP, EXACT_SCORE, PREFIX_SCORE, SUBSEQUENCE_SCORE};

use crate::page_model::ColumnDescriptor;

/// Minimum score for a hint to be accepted as the column's term.
pub const ACCEPT_THRESHOLD: f64 = 0.75;
/// Candidates within this distance of the best one make the result ambiguous.
pub const AMBIGUITY_BAND: f64 = 0.05;

#[derive(Debug, thiserror::Error)]
pub enum VocabError {
    #[error("cannot access dictionary file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("dictionary file {path} is not valid JSON: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("cannot define {label:?} as {term:?}: label and term must be non-empty")]
    InvalidDefinition { label: String, term: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ResolutionResult {
    Resolved {
        term: String,
        confidence: f64,
        provenance: Provenance,
    },
    Ambiguous {
        candidates: Vec<(String, f64)>,
    },
    Unknown,
}

impl ResolutionResult {
    pub fn term(&self) -> Option<&str> {
        match self {
            ResolutionResult::Resolved { term, .. } => Some(term),
            _ => None,
        }
    }
}

/// Ranks `(term, score)` pairs and applies the accept threshold and ambiguity band.
pub(crate) fn decide<T: Clone + Ord>(mut scored: Vec<(T, f64)>) -> Decision<T> {
    // Keep the best score per candidate, then rank.
    scored.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| b.1.total_cmp(&a.1)));
    scored.dedup_by(|later, earlier| later.0 == earlier.0);
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let accepted: Vec<(T, f64)> = scored
        .iter()
        .filter(|(_, s)| *s >= ACCEPT_THRESHOLD)
        .cloned()
        .collect();
    match accepted.as_slice() {
        [] => Decision::None {
            best: scored.first().cloned(),
        },
        [only] => Decision::One(only.clone()),
        [best, second, ..] if best.1 - second.1 > AMBIGUITY_BAND => Decision::One(best.clone()),
        [best, ..] => Decision::Tied(
            accepted
                .iter()
                .filter(|(_, s)| best.1 - *s <= AMBIGUITY_BAND)
                .cloned()
                .collect(),
        ),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Decision<T> {
    One((T, f64)),
    Tied(Vec<(T, f64)>),
    None { best: Option<(T, f64)> },
}

/// Maps a raw column label to a human term.
///
/// A dictionary entry for `(scope_host, label)` always wins. Otherwise the
/// label is scored against every hint except its own header text. A label
/// that no hint explains but that is itself a plain word (four or more
/// letters) stands for itself.
pub fn resolve_label(
    label: &str,
    hints: &[VocabHint],
    dictionary: &Dictionary,
    scope_host: &str,
) -> ResolutionResult {
    if let Some(entry) = dictionary.get(scope_host, label) {
        return ResolutionResult::Resolved {
            term: entry.term,
            confidence: entry.confidence,
            provenance: entry.provenance,
        };
    }
    let norm = normalize(label);
    let scored: Vec<(String, f64)> = hints
        .iter()
        .filter(|h| h.source != HintSource::HeaderText && normalize(&h.text) != norm)
        .map(|h| (h.text.to_lowercase(), score_match(label, &h.text)))
        .collect();
    match decide(scored) {
        Decision::One((term, confidence)) => ResolutionResult::Resolved {
            term,
            confidence,
            provenance: Provenance::Inferred,
        },
        Decision::Tied(candidates) => ResolutionResult::Ambiguous { candidates },
        Decision::None { .. } if is_plain_word(label) => ResolutionResult::Resolved {
            term: label.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase(),
            confidence: 1.0,
            provenance: Provenance::Exact,
        },
        Decision::None { .. } => ResolutionResult::Unknown,
    }
}

fn is_plain_word(label: &str) -> bool {
    let norm = normalize(label);
    norm.chars().count() >= 4
        && label
            .chars()
            .all(|c| c.is_alphabetic() || c.is_whitespace() || c == '-' || c == '\'')
}

pub fn resolve_column(column: &ColumnDescriptor, dictionary: &Dictionary, scope_host: &str) -> ResolutionResult {
    resolve_label(&column.raw_label, &column.hints, dictionary, scope_host)
}

/// Stores a user definition; it shadows any inference for the same host and label.
pub fn learn_definition(
    dictionary: &SharedDictionary,
    scope_host: &str,
    label: &str,
    term: &str,
) -> Result<VocabularyEntry, VocabError> {
    dictionary.learn(scope_host, label, term, chrono::Utc::now())
}
