//! Page snapshots, table detection and normalization, and binding manifests.

mod manifest;
mod parse;
mod rebind;

use rust_decimal::Decimal;
use serde::{Serialize, Serializer};

use crate::vocabulary::VocabHint;

pub use manifest::{build_binding_manifest, BindingManifest, ElementRole, ManifestDiff, ManifestEntry};
pub use parse::{element_text, infer_column_type, parse_page, parse_page_with, resolve_path};
pub use rebind::rebind_snapshot;

/// Minimum share of non-empty cells that must parse for a column to be numeric.
pub const NUMERIC_COLUMN_SHARE: f64 = 0.9;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PageError {
    #[error("invalid page URL {url:?}: {reason}")]
    InvalidUrl { url: String, reason: String },
}

/// The post-load document state submitted by the overlay.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PageSnapshot {
    pub snapshot_id: String,
    pub url: String,
    pub host: String,
    pub html_text: String,
    pub received_at: i64,
}

impl PageSnapshot {
    /// Builds a snapshot, deriving `host` from the URL.
    pub fn new(
        snapshot_id: impl Into<String>,
        url: &str,
        html_text: impl Into<String>,
        received_at: i64,
    ) -> Result<Self, PageError> {
        let parsed = url::Url::parse(url).map_err(|e| PageError::InvalidUrl {
            url: url.to_string(),
            reason: e.to_string(),
        })?;
        let host = parsed
            .host_str()
            .filter(|h| !h.is_empty())
            .ok_or_else(|| PageError::InvalidUrl {
                url: url.to_string(),
                reason: "URL has no host".into(),
            })?
            .to_lowercase();
        Ok(Self {
            snapshot_id: snapshot_id.into(),
            url: url.to_string(),
            host,
            html_text: html_text.into(),
            received_at,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnType {
    Numeric,
    Text,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnDescriptor {
    pub index: usize,
    pub raw_label: String,
    pub hints: Vec<VocabHint>,
    pub resolved_term: Option<String>,
    pub col_type: ColumnType,
    /// Identifier bound to the header element of this column.
    pub header_uuid: String,
    /// Locator of the header element (the header row when the column is padding).
    pub header_path: String,
}

impl ColumnDescriptor {
    /// The term used when talking about this column.
    pub fn display_term(&self) -> &str {
        match &self.resolved_term {
            Some(t) => t,
            None if self.raw_label.is_empty() => "unnamed column",
            None => &self.raw_label,
        }
    }

    pub fn is_numeric(&self) -> bool {
        self.col_type == ColumnType::Numeric
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Cell {
    pub uuid: String,
    pub row_index: usize,
    pub col_index: usize,
    pub raw_text: String,
    #[serde(serialize_with = "serialize_opt_decimal")]
    pub numeric_value: Option<Decimal>,
    /// Locator of the element holding this cell's text.
    pub path: String,
}

fn serialize_opt_decimal<S: Serializer>(v: &Option<Decimal>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(d) => crate::numeric::to_json_number(*d).serialize(s),
        None => s.serialize_none(),
    }
}

/// A bound element that is not a cell: the table itself or one of its rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Binding {
    pub uuid: String,
    pub path: String,
}

/// A detected data table, normalized to a rectangular grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableModel {
    pub table_id: String,
    pub source_path: String,
    pub table_uuid: String,
    pub columns: Vec<ColumnDescriptor>,
    pub rows: Vec<Vec<Cell>>,
    pub row_bindings: Vec<Binding>,
}

impl TableModel {
    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn column_count(&self) -> usize {
        self.columns.len()
    }

    pub fn column_by_label(&self, raw_label: &str) -> Option<&ColumnDescriptor> {
        self.columns.iter().find(|c| c.raw_label == raw_label)
    }

    /// Cell texts, row-major.
    pub fn text_grid(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|c| c.raw_text.clone()).collect())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PageModel {
    pub snapshot_id: String,
    pub url: String,
    pub host: String,
    pub tables: Vec<TableModel>,
    pub diagnostics: Vec<String>,
}

impl PageModel {
    pub fn empty(snapshot: &PageSnapshot) -> Self {
        Self {
            snapshot_id: snapshot.snapshot_id.clone(),
            url: snapshot.url.clone(),
            host: snapshot.host.clone(),
            tables: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    pub fn table(&self, table_id: &str) -> Option<&TableModel> {
        self.tables.iter().find(|t| t.table_id == table_id)
    }

    pub fn cell_uuids(&self) -> Vec<&str> {
        self.tables
            .iter()
            .flat_map(|t| t.rows.iter().flatten().map(|c| c.uuid.as_str()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn host_is_derived_and_lowercased() {
        let s = PageSnapshot::new("s1", "https://WWW.ESPN.com/soccer/team?id=1", "", 0).unwrap();
        assert_eq!(s.host, "www.espn.com");
    }

    #[test]
    fn url_without_host_rejected() {
        assert!(PageSnapshot::new("s1", "file:///tmp/x.html", "", 0).is_err());
        assert!(PageSnapshot::new("s1", "not a url", "", 0).is_err());
    }
}
