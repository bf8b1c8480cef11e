use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::PageModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementRole {
    Cell,
    Header,
    Row,
    Table,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub uuid: String,
    pub selector: String,
    pub role: ElementRole,
    pub table_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub col_index: Option<usize>,
}

/// Which elements the overlay must tag and listen on.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BindingManifest {
    pub snapshot_id: String,
    pub entries: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ManifestDiff {
    pub add: Vec<ManifestEntry>,
    pub remove: Vec<ManifestEntry>,
}

impl ManifestDiff {
    pub fn is_empty(&self) -> bool {
        self.add.is_empty() && self.remove.is_empty()
    }
}

impl BindingManifest {
    pub fn contains_uuid(&self, uuid: &str) -> bool {
        self.entries.iter().any(|e| e.uuid == uuid)
    }

    pub fn count_role(&self, role: ElementRole) -> usize {
        self.entries.iter().filter(|e| e.role == role).count()
    }

    /// Entries present only in `next` are added, entries present only in `self` removed.
    pub fn diff(&self, next: &BindingManifest) -> ManifestDiff {
        let old: HashSet<&ManifestEntry> = self.entries.iter().collect();
        let new: HashSet<&ManifestEntry> = next.entries.iter().collect();
        ManifestDiff {
            add: next.entries.iter().filter(|e| !old.contains(e)).cloned().collect(),
            remove: self.entries.iter().filter(|e| !new.contains(e)).cloned().collect(),
        }
    }
}

/// One entry per table, column header, row and grid cell.
///
/// Grid positions produced by a spanning cell share that cell's uuid and selector.
pub fn build_binding_manifest(model: &PageModel) -> BindingManifest {
    let mut entries = Vec::new();
    for table in &model.tables {
        let entry = |uuid: &str, selector: &str, role, row_index, col_index| ManifestEntry {
            uuid: uuid.to_string(),
            selector: selector.to_string(),
            role,
            table_id: table.table_id.clone(),
            row_index,
            col_index,
        };
        entries.push(entry(&table.table_uuid, &table.source_path, ElementRole::Table, None, None));
        for col in &table.columns {
            entries.push(entry(
                &col.header_uuid,
                &col.header_path,
                ElementRole::Header,
                None,
                Some(col.index),
            ));
        }
        for (r, (row, binding)) in table.rows.iter().zip(&table.row_bindings).enumerate() {
            entries.push(entry(&binding.uuid, &binding.path, ElementRole::Row, Some(r), None));
            for cell in row {
                entries.push(entry(
                    &cell.uuid,
                    &cell.path,
                    ElementRole::Cell,
                    Some(cell.row_index),
                    Some(cell.col_index),
                ));
            }
        }
    }
    BindingManifest {
        snapshot_id: model.snapshot_id.clone(),
        entries,
    }
}
