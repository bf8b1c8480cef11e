use scraper::{ElementRef, Html};
use serde::{Deserialize, Serialize};

use crate::page_model::{element_text, resolve_path, ColumnDescriptor, PageSnapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HintSource {
    Tooltip,
    AbbrTag,
    AriaLabel,
    HeaderText,
}

/// A candidate human term found in or around a column header.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabHint {
    pub source: HintSource,
    pub text: String,
}

impl VocabHint {
    pub fn new(source: HintSource, text: impl AsRef<str>) -> Option<Self> {
        let text = collapse(text.as_ref());
        (!text.is_empty()).then_some(Self { source, text })
    }
}

const TOOLTIP_ATTRS: &[&str] = &["title", "data-tooltip", "data-original-title", "data-title"];

/// Hints for the column whose header the snapshot locates at `column.header_path`.
///
/// Columns without a header element (padding) only carry their label.
pub fn harvest_hints(column: &ColumnDescriptor, snapshot: &PageSnapshot) -> Vec<VocabHint> {
    let doc = Html::parse_document(&snapshot.html_text);
    match resolve_path(&doc, &column.header_path) {
        Some(el) if is_header_like(&el) => hints_from_header(&doc, el),
        _ => VocabHint::new(HintSource::HeaderText, &column.raw_label)
            .into_iter()
            .collect(),
    }
}

fn is_header_like(el: &ElementRef) -> bool {
    matches!(el.value().name(), "th" | "td")
        || matches!(
            el.value().attr("role"),
            Some("columnheader" | "cell" | "gridcell" | "rowheader")
        )
}

/// Tooltips first, then abbreviation expansions, accessibility labels and the
/// header text itself; duplicates are dropped case-insensitively.
pub(crate) fn hints_from_header(doc: &Html, header: ElementRef) -> Vec<VocabHint> {
    let mut tooltips = Vec::new();
    let mut abbrs = Vec::new();
    let mut aria = Vec::new();

    for el in std::iter::once(header).chain(header.descendants().filter_map(ElementRef::wrap).skip(1)) {
        let v = el.value();
        if v.name() == "abbr" {
            if let Some(t) = v.attr("title") {
                abbrs.extend(VocabHint::new(HintSource::AbbrTag, t));
            }
        } else {
            for attr in TOOLTIP_ATTRS {
                if let Some(t) = v.attr(attr) {
                    tooltips.extend(VocabHint::new(HintSource::Tooltip, t));
                }
            }
        }
        if let Some(t) = v.attr("aria-label") {
            aria.extend(VocabHint::new(HintSource::AriaLabel, t));
        }
        for attr in ["aria-labelledby", "aria-describedby"] {
            if let Some(ids) = v.attr(attr) {
                for id in ids.split_whitespace() {
                    if let Some(target) = find_by_id(doc, id) {
                        aria.extend(VocabHint::new(HintSource::AriaLabel, element_text(target)));
                    }
                }
            }
        }
    }

    let own = VocabHint::new(HintSource::HeaderText, element_text(header));
    let mut out: Vec<VocabHint> = Vec::new();
    for hint in tooltips.into_iter().chain(abbrs).chain(aria).chain(own) {
        let key = hint.text.to_lowercase();
        if !out.iter().any(|h| h.text.to_lowercase() == key) {
            out.push(hint);
        }
    }
    out
}

fn find_by_id<'a>(doc: &'a Html, id: &str) -> Option<ElementRef<'a>> {
    doc.tree
        .nodes()
        .filter_map(ElementRef::wrap)
        .find(|e| e.value().id() == Some(id))
}

fn collapse(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}
