use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use parking_lot::RwLock;
use serde::{Deserialize, Serialize};

use super::score::normalize;
use super::VocabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Exact,
    Inferred,
    User,
}

/// One learned or inferred label mapping, keyed by `(scope_host, raw_label_norm)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VocabularyEntry {
    pub scope_host: String,
    pub raw_label_norm: String,
    pub term: String,
    pub provenance: Provenance,
    pub confidence: f64,
    pub updated_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Record {
    term: String,
    provenance: Provenance,
    confidence: f64,
    updated_at: DateTime<Utc>,
}

impl Record {
    fn validate(&self) -> Result<(), String> {
        if self.term.trim().is_empty() {
            return Err("empty term".into());
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(format!("confidence {} outside [0, 1]", self.confidence));
        }
        if self.provenance == Provenance::User && self.confidence != 1.0 {
            return Err("user entries must have confidence 1.0".into());
        }
        Ok(())
    }
}

/// Host-scoped label dictionary.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dictionary {
    hosts: BTreeMap<String, BTreeMap<String, Record>>,
}

#[derive(Debug, Default)]
pub struct LoadReport {
    pub dictionary: Dictionary,
    pub diagnostics: Vec<String>,
}

impl Dictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.hosts.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, scope_host: &str, label: &str) -> Option<VocabularyEntry> {
        let host = scope_host.to_lowercase();
        let norm = normalize(label);
        let rec = self.hosts.get(&host)?.get(&norm)?;
        Some(VocabularyEntry {
            scope_host: host,
            raw_label_norm: norm,
            term: rec.term.clone(),
            provenance: rec.provenance,
            confidence: rec.confidence,
            updated_at: rec.updated_at,
        })
    }

    pub fn entries(&self) -> impl Iterator<Item = VocabularyEntry> + '_ {
        self.hosts.iter().flat_map(|(host, labels)| {
            labels.iter().map(move |(norm, rec)| VocabularyEntry {
                scope_host: host.clone(),
                raw_label_norm: norm.clone(),
                term: rec.term.clone(),
                provenance: rec.provenance,
                confidence: rec.confidence,
                updated_at: rec.updated_at,
            })
        })
    }

    /// Inserts or replaces the entry under its key.
    pub fn upsert(&mut self, entry: VocabularyEntry) {
        self.hosts.entry(entry.scope_host).or_default().insert(
            entry.raw_label_norm,
            Record {
                term: entry.term,
                provenance: entry.provenance,
                confidence: entry.confidence,
                updated_at: entry.updated_at,
            },
        );
    }

    /// Records a user-supplied definition with full confidence.
    pub fn learn(
        &mut self,
        scope_host: &str,
        label: &str,
        term: &str,
        now: DateTime<Utc>,
    ) -> Result<VocabularyEntry, VocabError> {
        let host = scope_host.trim().to_lowercase();
        let norm = normalize(label);
        let term = term.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
        if host.is_empty() || norm.is_empty() || term.is_empty() {
            return Err(VocabError::InvalidDefinition {
                label: label.to_string(),
                term,
            });
        }
        let entry = VocabularyEntry {
            scope_host: host,
            raw_label_norm: norm,
            term,
            provenance: Provenance::User,
            confidence: 1.0,
            updated_at: now,
        };
        self.upsert(entry.clone());
        Ok(entry)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.hosts).expect("dictionary serializes")
    }

    /// Parses the file format, skipping (and reporting) malformed records.
    pub fn from_json_str(text: &str) -> Result<LoadReport, serde_json::Error> {
        let raw: BTreeMap<String, serde_json::Value> = serde_json::from_str(text)?;
        let mut report = LoadReport::default();
        for (host, labels) in raw {
            let host_norm = host.trim().to_lowercase();
            let Some(labels) = labels.as_object() else {
                report
                    .diagnostics
                    .push(format!("host {host:?}: expected an object of records"));
                continue;
            };
            if host_norm.is_empty() {
                report.diagnostics.push("record group with empty host skipped".into());
                continue;
            }
            for (label, value) in labels {
                let rec = serde_json::from_value::<Record>(value.clone())
                    .map_err(|e| e.to_string())
                    .and_then(|r| r.validate().map(|_| r));
                match rec {
                    Ok(rec) if !normalize(label).is_empty() => {
                        report
                            .dictionary
                            .hosts
                            .entry(host_norm.clone())
                            .or_default()
                            .insert(normalize(label), rec);
                    }
                    Ok(_) => report
                        .diagnostics
                        .push(format!("{host}/{label:?}: label is empty after normalization")),
                    Err(e) => report.diagnostics.push(format!("{host}/{label}: {e}")),
                }
            }
        }
        Ok(report)
    }

    pub fn load(path: &Path) -> Result<LoadReport, VocabError> {
        let text = std::fs::read_to_string(path).map_err(|source| VocabError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&text).map_err(|source| VocabError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Writes the file through a sibling temp file and an atomic rename.
    pub fn save(&self, path: &Path) -> Result<(), VocabError> {
        let io_err = |source| VocabError::Io {
            path: path.to_path_buf(),
            source,
        };
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io_err)?;
        let body = serde_json::to_string_pretty(&self.hosts).expect("dictionary serializes");
        tmp.write_all(body.as_bytes()).map_err(io_err)?;
        tmp.write_all(b"\n").map_err(io_err)?;
        tmp.as_file().sync_all().map_err(io_err)?;
        tmp.persist(path).map_err(|e| io_err(e.error))?;
        Ok(())
    }
}

/// The dictionary shared by every session: concurrent readers, serialized writers.
///
/// Writers build the new state under the write lock, so readers observe
/// either the old or the new dictionary, never a partial update.
#[derive(Debug, Clone, Default)]
pub struct SharedDictionary {
    inner: Arc<RwLock<Dictionary>>,
    path: Option<PathBuf>,
}

impl SharedDictionary {
    pub fn new(dictionary: Dictionary) -> Self {
        Self {
            inner: Arc::new(RwLock::new(dictionary)),
            path: None,
        }
    }

    /// Loads `path` if it exists and persists every later write back to it.
    pub fn with_file(path: impl Into<PathBuf>) -> Result<(Self, Vec<String>), VocabError> {
        let path = path.into();
        let (dictionary, diagnostics) = if path.exists() {
            let report = Dictionary::load(&path)?;
            (report.dictionary, report.diagnostics)
        } else {
            (Dictionary::new(), Vec::new())
        };
        Ok((
            Self {
                inner: Arc::new(RwLock::new(dictionary)),
                path: Some(path),
            },
            diagnostics,
        ))
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn snapshot(&self) -> Dictionary {
        self.inner.read().clone()
    }

    pub fn read<R>(&self, f: impl FnOnce(&Dictionary) -> R) -> R {
        f(&self.inner.read())
    }

    /// Learns a definition and, when file-backed, saves while still holding the lock.
    pub fn learn(
        &self,
        scope_host: &str,
        label: &str,
        term: &str,
        now: DateTime<Utc>,
    ) -> Result<VocabularyEntry, VocabError> {
        let mut guard = self.inner.write();
        let mut next = guard.clone();
        let entry = next.learn(scope_host, label, term, now)?;
        if let Some(path) = &self.path {
            next.save(path)?;
        }
        *guard = next;
        Ok(entry)
    }

    /// Replaces the contents with what is stored at `path`.
    pub fn reload(&self, path: &Path) -> Result<Vec<String>, VocabError> {
        let report = Dictionary::load(path)?;
        *self.inner.write() = report.dictionary;
        Ok(report.diagnostics)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn t0() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap()
    }

    #[test]
    fn learn_is_user_with_full_confidence() {
        let mut d = Dictionary::new();
        let e = d.learn("ESPN.com", "A", "Assists", t0()).unwrap();
        assert_eq!(e.provenance, Provenance::User);
        assert_eq!(e.confidence, 1.0);
        assert_eq!(e.term, "assists");
        assert_eq!(e.scope_host, "espn.com");
        assert_eq!(e.raw_label_norm, "a");
    }

    #[test]
    fn redefinition_overwrites() {
        let mut d = Dictionary::new();
        d.learn("espn.com", "A", "assists", t0()).unwrap();
        let later = t0() + chrono::Duration::hours(1);
        d.learn("espn.com", "a.", "attempts", later).unwrap();
        assert_eq!(d.len(), 1);
        let e = d.get("espn.com", "A").unwrap();
        assert_eq!(e.term, "attempts");
        assert_eq!(e.updated_at, later);
    }

    #[test]
    fn empty_definition_rejected() {
        let mut d = Dictionary::new();
        assert!(d.learn("espn.com", "--", "x", t0()).is_err());
        assert!(d.learn("espn.com", "A", "  ", t0()).is_err());
    }

    #[test]
    fn file_format_matches_documented_shape() {
        let mut d = Dictionary::new();
        d.learn("espn.com", "A", "assists", t0()).unwrap();
        let v = d.to_json();
        assert_eq!(
            v,
            serde_json::json!({"espn.com":{"a":{"term":"assists","provenance":"user","confidence":1.0,"updated_at":"2024-01-01T00:00:00Z"}}})
        );
    }

    #[test]
    fn save_and_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.json");
        let mut d = Dictionary::new();
        d.learn("espn.com", "A", "assists", t0()).unwrap();
        d.upsert(VocabularyEntry {
            scope_host: "example.org".into(),
            raw_label_norm: "gs".into(),
            term: "games started".into(),
            provenance: Provenance::Inferred,
            confidence: 0.8,
            updated_at: t0(),
        });
        d.save(&path).unwrap();
        let report = Dictionary::load(&path).unwrap();
        assert!(report.diagnostics.is_empty());
        assert_eq!(report.dictionary, d);
    }

    #[test]
    fn empty_dictionary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.json");
        Dictionary::new().save(&path).unwrap();
        let report = Dictionary::load(&path).unwrap();
        assert!(report.dictionary.is_empty());
        assert_eq!(std::fs::read_to_string(&path).unwrap().trim(), "{}");
    }

    #[test]
    fn malformed_record_skipped() {
        let text = r#"{"espn.com":{
            "a":{"term":"assists","provenance":"user","confidence":1.0,"updated_at":"2024-01-01T00:00:00Z"},
            "g":{"term":"goals","provenance":"bogus","confidence":1.0,"updated_at":"2024-01-01T00:00:00Z"},
            "app":{"term":"appearances","provenance":"inferred","confidence":0.9,"updated_at":"2024-01-01T00:00:00Z"}}}"#;
        let report = Dictionary::from_json_str(text).unwrap();
        assert_eq!(report.dictionary.len(), 2);
        assert_eq!(report.diagnostics.len(), 1);
        assert!(report.diagnostics[0].contains("espn.com/g"));
    }

    #[test]
    fn user_confidence_enforced_on_load() {
        let text = r#"{"h":{"a":{"term":"x","provenance":"user","confidence":0.5,"updated_at":"2024-01-01T00:00:00Z"}}}"#;
        let report = Dictionary::from_json_str(text).unwrap();
        assert!(report.dictionary.is_empty());
        assert_eq!(report.diagnostics.len(), 1);
    }

    #[test]
    fn missing_file_names_path() {
        let err = Dictionary::load(Path::new("/nonexistent/dir/vocab.json")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/vocab.json"));
    }

    #[test]
    fn shared_writes_persist() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.json");
        let (shared, diags) = SharedDictionary::with_file(&path).unwrap();
        assert!(diags.is_empty());
        shared.learn("espn.com", "A", "assists", t0()).unwrap();
        let reloaded = Dictionary::load(&path).unwrap().dictionary;
        assert_eq!(reloaded, shared.snapshot());
    }
}
