use std::collections::{HashMap, HashSet};

use super::{build_binding_manifest, parse_page_with, BindingManifest, PageModel, PageSnapshot};
use crate::ids::IdGen;

/// Re-parses a changed page and carries identifiers over from the previous model.
///
/// A cell keeps its uuid iff table ordinal, row, column and text all match.
/// Tables keep theirs by ordinal, rows by `(ordinal, row)`, headers by
/// `(ordinal, column, label)`. Resolved terms carry over by raw label.
pub fn rebind_snapshot(
    old: &PageModel,
    new_snapshot: &PageSnapshot,
    ids: &mut IdGen,
) -> (PageModel, BindingManifest) {
    let mut model = parse_page_with(new_snapshot, ids);
    if new_snapshot.host != old.host {
        let manifest = build_binding_manifest(&model);
        return (model, manifest);
    }

    // A previous uuid is handed out at most once.
    let mut claimed: HashSet<String> = HashSet::new();
    let claim = |candidate: &str, claimed: &mut HashSet<String>| claimed.insert(candidate.to_string());

    for (ordinal, table) in model.tables.iter_mut().enumerate() {
        let Some(prev) = old.tables.get(ordinal) else {
            continue;
        };
        if claim(&prev.table_uuid, &mut claimed) {
            table.table_uuid = prev.table_uuid.clone();
        }

        for col in &mut table.columns {
            if let Some(p) = prev.columns.get(col.index) {
                if p.raw_label == col.raw_label && claim(&p.header_uuid, &mut claimed) {
                    col.header_uuid = p.header_uuid.clone();
                }
            }
            if col.resolved_term.is_none() {
                col.resolved_term = prev
                    .column_by_label(&col.raw_label)
                    .or_else(|| {
                        old.tables
                            .iter()
                            .find_map(|t| t.column_by_label(&col.raw_label))
                    })
                    .and_then(|p| p.resolved_term.clone());
            }
        }

        for (r, binding) in table.row_bindings.iter_mut().enumerate() {
            if let Some(p) = prev.row_bindings.get(r) {
                if claim(&p.uuid, &mut claimed) {
                    binding.uuid = p.uuid.clone();
                }
            }
        }

        // Spanning cells share one uuid across positions; remap it once.
        let mut remap: HashMap<String, String> = HashMap::new();
        for row in &mut table.rows {
            for cell in row.iter_mut() {
                if let Some(mapped) = remap.get(&cell.uuid) {
                    cell.uuid = mapped.clone();
                    continue;
                }
                let prev_cell = prev
                    .rows
                    .get(cell.row_index)
                    .and_then(|r| r.get(cell.col_index))
                    .filter(|p| p.raw_text == cell.raw_text);
                if let Some(p) = prev_cell {
                    if claim(&p.uuid, &mut claimed) {
                        remap.insert(cell.uuid.clone(), p.uuid.clone());
                        cell.uuid = p.uuid.clone();
                    }
                }
            }
        }
    }

    let manifest = build_binding_manifest(&model);
    (model, manifest)
}
