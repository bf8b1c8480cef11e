use ego_tree::NodeRef;
use scraper::{ElementRef, Html, Node};

use super::{
    Binding, Cell, ColumnDescriptor, ColumnType, PageModel, PageSnapshot, TableModel,
    NUMERIC_COLUMN_SHARE,
};
use crate::ids::IdGen;
use crate::numeric::parse_number;
use crate::vocabulary::{hints_from_header, HintSource, VocabHint};

const MAX_COLSPAN: usize = 1000;
const MAX_ROWSPAN: usize = 65534;

/// `Numeric` iff at least 90% of the non-empty texts parse as numbers.
pub fn infer_column_type<S: AsRef<str>>(cells: &[S]) -> ColumnType {
    let non_empty: Vec<&str> = cells
        .iter()
        .map(|c| c.as_ref().trim())
        .filter(|c| !c.is_empty())
        .collect();
    if non_empty.is_empty() {
        return ColumnType::Text;
    }
    let numeric = non_empty.iter().filter(|c| parse_number(c).is_some()).count();
    if numeric as f64 >= NUMERIC_COLUMN_SHARE * non_empty.len() as f64 {
        ColumnType::Numeric
    } else {
        ColumnType::Text
    }
}

/// Parses with freshly generated identifiers.
pub fn parse_page(snapshot: &PageSnapshot) -> PageModel {
    parse_page_with(snapshot, &mut IdGen::from_entropy())
}

pub fn parse_page_with(snapshot: &PageSnapshot, ids: &mut IdGen) -> PageModel {
    let doc = Html::parse_document(&snapshot.html_text);
    let mut model = PageModel::empty(snapshot);

    let candidates: Vec<(ElementRef, TableKind)> = doc
        .tree
        .nodes()
        .filter_map(ElementRef::wrap)
        .filter_map(|el| table_kind(&el).map(|k| (el, k)))
        .collect();
    if candidates.is_empty() {
        model.diagnostics.push("no tables detected".into());
        return model;
    }

    for (el, kind) in candidates {
        let path = element_path(el);
        match build_table(&doc, el, kind, model.tables.len(), ids) {
            Ok(table) => model.tables.push(table),
            Err(reason) => model
                .diagnostics
                .push(format!("table at {path} excluded: {reason}")),
        }
    }
    model
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TableKind {
    Markup,
    Aria,
}

fn table_kind(el: &ElementRef) -> Option<TableKind> {
    let role = el.value().attr("role").map(str::trim);
    if el.value().name() == "table" {
        return match role {
            Some("presentation" | "none") => None,
            _ => Some(TableKind::Markup),
        };
    }
    match role {
        Some("table" | "grid" | "treegrid") => Some(TableKind::Aria),
        _ => None,
    }
}

fn role_of<'a>(el: &'a ElementRef) -> Option<&'a str> {
    el.value().attr("role").map(str::trim)
}

struct SourceRow<'a> {
    element: ElementRef<'a>,
    cells: Vec<ElementRef<'a>>,
    in_head: bool,
}

impl SourceRow<'_> {
    fn is_header(&self) -> bool {
        self.in_head || (!self.cells.is_empty() && self.cells.iter().all(is_header_cell))
    }
}

fn is_header_cell(el: &ElementRef) -> bool {
    el.value().name() == "th" || role_of(el) == Some("columnheader")
}

fn element_children<'a>(el: ElementRef<'a>) -> impl Iterator<Item = ElementRef<'a>> {
    el.children().filter_map(ElementRef::wrap)
}

fn collect_rows<'a>(table: ElementRef<'a>, kind: TableKind) -> Vec<SourceRow<'a>> {
    let mut rows = Vec::new();
    match kind {
        TableKind::Markup => {
            for child in element_children(table) {
                match child.value().name() {
                    "tr" => rows.push(markup_row(child, false)),
                    section @ ("thead" | "tbody" | "tfoot") => {
                        for tr in element_children(child).filter(|e| e.value().name() == "tr") {
                            rows.push(markup_row(tr, section == "thead"));
                        }
                    }
                    _ => {}
                }
            }
        }
        TableKind::Aria => {
            for el in table.descendants().skip(1).filter_map(ElementRef::wrap) {
                if role_of(&el) == Some("row") && nearest_table(el).map(|t| t.id()) == Some(table.id()) {
                    let cells = element_children(el)
                        .filter(|c| {
                            matches!(
                                role_of(c),
                                Some("cell" | "gridcell" | "columnheader" | "rowheader")
                            )
                        })
                        .collect();
                    rows.push(SourceRow {
                        element: el,
                        cells,
                        in_head: false,
                    });
                }
            }
        }
    }
    rows
}

fn markup_row(tr: ElementRef, in_head: bool) -> SourceRow {
    SourceRow {
        element: tr,
        cells: element_children(tr)
            .filter(|e| matches!(e.value().name(), "td" | "th"))
            .collect(),
        in_head,
    }
}

fn nearest_table(el: ElementRef) -> Option<ElementRef> {
    el.ancestors()
        .filter_map(ElementRef::wrap)
        .find(|a| table_kind(a).is_some())
}

fn span(el: &ElementRef, markup: &str, aria: &str, max: usize) -> Option<usize> {
    el.value()
        .attr(markup)
        .or_else(|| el.value().attr(aria))
        .and_then(|v| v.trim().parse::<usize>().ok())
        .map(|v| v.min(max))
}

/// Expands colspan/rowspan into a rectangular occupancy grid of source-cell indices.
fn expand_grid<'a>(rows: &[SourceRow<'a>]) -> (Vec<Vec<Option<usize>>>, Vec<ElementRef<'a>>) {
    let mut grid: Vec<Vec<Option<usize>>> = vec![Vec::new(); rows.len()];
    let mut sources = Vec::new();
    for (r, row) in rows.iter().enumerate() {
        let mut col = 0;
        for cell in &row.cells {
            while grid[r].get(col).copied().flatten().is_some() {
                col += 1;
            }
            let colspan = span(cell, "colspan", "aria-colspan", MAX_COLSPAN)
                .unwrap_or(1)
                .max(1);
            let remaining = rows.len() - r;
            let rowspan = match span(cell, "rowspan", "aria-rowspan", MAX_ROWSPAN) {
                Some(0) => remaining,
                Some(n) => n.min(remaining),
                None => 1,
            };
            let idx = sources.len();
            sources.push(*cell);
            for grid_row in grid.iter_mut().skip(r).take(rowspan) {
                if grid_row.len() < col + colspan {
                    grid_row.resize(col + colspan, None);
                }
                for slot in &mut grid_row[col..col + colspan] {
                    *slot = Some(idx);
                }
            }
            col += colspan;
        }
    }
    (grid, sources)
}

fn build_table(
    doc: &Html,
    table: ElementRef,
    kind: TableKind,
    ordinal: usize,
    ids: &mut IdGen,
) -> Result<TableModel, String> {
    let rows = collect_rows(table, kind);
    if rows.is_empty() {
        return Err("0 data rows".into());
    }
    let (grid, sources) = expand_grid(&rows);

    // Header: the last row of the first run of header-tagged rows, else row 0.
    let header = match rows.iter().position(SourceRow::is_header) {
        Some(first) => {
            let run = rows[first..].iter().take_while(|r| r.is_header()).count();
            first + run - 1
        }
        None => 0,
    };
    let data: Vec<usize> = ((header + 1)..rows.len())
        .filter(|&r| !grid[r].is_empty())
        .collect();
    let width = std::iter::once(header)
        .chain(data.iter().copied())
        .map(|r| grid[r].len())
        .max()
        .unwrap_or(0);
    if width < 2 {
        return Err(format!("fewer than 2 columns ({width})"));
    }
    if data.is_empty() {
        return Err("0 data rows".into());
    }

    let texts: Vec<String> = sources.iter().map(|e| element_text(*e)).collect();
    let mut source_uuid: Vec<Option<String>> = vec![None; sources.len()];
    let mut uuid_for = |idx: usize, ids: &mut IdGen| -> String {
        source_uuid[idx].get_or_insert_with(|| ids.next_uuid()).clone()
    };

    let table_uuid = ids.next_uuid();
    let header_row_path = element_path(rows[header].element);
    let mut columns = Vec::with_capacity(width);
    for c in 0..width {
        let (raw_label, hints, header_uuid, header_path) = match grid[header].get(c).copied().flatten() {
            Some(idx) => (
                texts[idx].clone(),
                hints_from_header(doc, sources[idx]),
                uuid_for(idx, ids),
                element_path(sources[idx]),
            ),
            None => (String::new(), Vec::new(), ids.next_uuid(), header_row_path.clone()),
        };
        let hints = if hints.is_empty() {
            VocabHint::new(HintSource::HeaderText, &raw_label).into_iter().collect()
        } else {
            hints
        };
        columns.push(ColumnDescriptor {
            index: c,
            raw_label,
            hints,
            resolved_term: None,
            col_type: ColumnType::Text,
            header_uuid,
            header_path,
        });
    }

    let mut out_rows = Vec::with_capacity(data.len());
    let mut row_bindings = Vec::with_capacity(data.len());
    for (row_index, &r) in data.iter().enumerate() {
        let row_path = element_path(rows[r].element);
        row_bindings.push(Binding {
            uuid: ids.next_uuid(),
            path: row_path.clone(),
        });
        let mut cells = Vec::with_capacity(width);
        for col_index in 0..width {
            let cell = match grid[r].get(col_index).copied().flatten() {
                Some(idx) => Cell {
                    uuid: uuid_for(idx, ids),
                    row_index,
                    col_index,
                    raw_text: texts[idx].clone(),
                    numeric_value: None,
                    path: element_path(sources[idx]),
                },
                None => Cell {
                    uuid: ids.next_uuid(),
                    row_index,
                    col_index,
                    raw_text: String::new(),
                    numeric_value: None,
                    path: row_path.clone(),
                },
            };
            cells.push(cell);
        }
        out_rows.push(cells);
    }

    for column in &mut columns {
        let col_texts: Vec<&str> = out_rows
            .iter()
            .map(|r: &Vec<Cell>| r[column.index].raw_text.as_str())
            .collect();
        column.col_type = infer_column_type(&col_texts);
        if column.is_numeric() {
            for row in &mut out_rows {
                let cell = &mut row[column.index];
                cell.numeric_value = parse_number(&cell.raw_text);
            }
        }
    }

    Ok(TableModel {
        table_id: format!("t{ordinal}"),
        source_path: element_path(table),
        table_uuid,
        columns,
        rows: out_rows,
        row_bindings,
    })
}

/// Child-element index path from the document root, e.g. `0/1/3/0`.
pub fn element_path(el: ElementRef) -> String {
    let mut parts = Vec::new();
    let mut node: NodeRef<Node> = *el;
    loop {
        let index = node
            .prev_siblings()
            .filter(|n| n.value().is_element())
            .count();
        parts.push(index.to_string());
        match node.parent() {
            Some(p) if p.value().is_element() => node = p,
            _ => break,
        }
    }
    parts.reverse();
    parts.join("/")
}

/// Resolves a locator produced by [`element_path`].
pub fn resolve_path<'a>(doc: &'a Html, path: &str) -> Option<ElementRef<'a>> {
    if path.is_empty() {
        return None;
    }
    let mut node = doc.tree.root();
    for part in path.split('/') {
        let index: usize = part.parse().ok()?;
        node = node
            .children()
            .filter(|n| n.value().is_element())
            .nth(index)?;
    }
    ElementRef::wrap(node)
}

/// Visible text of an element with whitespace runs collapsed.
pub fn element_text(el: ElementRef) -> String {
    let mut out = String::new();
    collect_text(*el, &mut out);
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn collect_text(node: NodeRef<Node>, out: &mut String) {
    for child in node.children() {
        match child.value() {
            Node::Text(t) => out.push_str(t),
            Node::Element(e) => {
                if matches!(e.name(), "script" | "style" | "template" | "noscript") {
                    continue;
                }
                if matches!(e.name(), "br" | "p" | "div" | "li" | "tr" | "td" | "th") {
                    out.push(' ');
                }
                collect_text(child, out);
                if matches!(e.name(), "p" | "div" | "li" | "tr" | "td" | "th") {
                    out.push(' ');
                }
            }
            _ => {}
        }
    }
}
