//! Outcomes to user-facing text and pages.

use serde::{Deserialize, Serialize};

use crate::command::{Action, AggFn, CommandError, Literal, SortOrder, TargetMode};
use crate::engine::{EngineError, Outcome, ResultTable, Scalar, ScalarSource};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchEntry {
    pub row_index: usize,
    pub visible: bool,
    pub order: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Clarification {
    pub prompt_id: String,
    pub prompt: String,
}

/// What the user sees and hears for one utterance.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Response {
    pub speech: String,
    pub page_html: Option<String>,
    pub patch: Option<Vec<PatchEntry>>,
    pub clarification: Option<Clarification>,
}

impl Response {
    pub fn speech(text: impl Into<String>) -> Self {
        Self {
            speech: text.into(),
            ..Self::default()
        }
    }
}

pub const HELP_TEXT: &str = "I can filter, sort, total up, look up and rename columns. Try: \
\"show in a new table rows where appearances is greater than 35\", \
\"sort by goals descending\", \"what is the average appearances\", \
\"what is this\" while pointing at a cell, or \
\"assign attribute assists to this column\" while pointing at a header.";

/// Builds the full response for an outcome.
pub fn respond(outcome: &Outcome) -> Response {
    let mut response = Response::speech(compose_speech(outcome));
    if let Outcome::ResultTable(rt) = outcome {
        match rt.command.action.target() {
            Some(TargetMode::InPlace) => response.patch = Some(in_place_patch(rt)),
            _ => response.page_html = Some(render_result_page(rt)),
        }
    }
    response
}

fn plural(n: usize, one: &str, many: &str) -> String {
    if n == 1 {
        format!("1 {one}")
    } else {
        format!("{n} {many}")
    }
}

/// The command in words, used as page title and caption.
pub fn describe(rt: &ResultTable) -> String {
    match &rt.command.action {
        Action::Filter {
            column, cmp, literal, ..
        } => format!(
            "Rows where {} is {} {}",
            rt.column_term(*column),
            cmp.words(),
            literal.spoken()
        ),
        Action::Sort { column, order, .. } => {
            format!("Rows sorted by {}, {}", rt.column_term(*column), order_word(*order))
        }
        _ => "Result".to_string(),
    }
}

fn order_word(order: SortOrder) -> &'static str {
    match order {
        SortOrder::Asc => "ascending",
        SortOrder::Desc => "descending",
    }
}

pub fn compose_speech(outcome: &Outcome) -> String {
    match outcome {
        Outcome::ResultTable(rt) => table_speech(rt),
        Outcome::Scalar(s) => scalar_speech(s),
        Outcome::Ack { term, .. } => format!("Okay — I'll call that column {term}."),
        Outcome::NeedsClarification { .. } => "I need a column definition before I can do that.".to_string(),
    }
}

fn table_speech(rt: &ResultTable) -> String {
    let mut text = match &rt.command.action {
        Action::Filter {
            column, cmp, literal, ..
        } => {
            let n = rt.rows.len();
            let subject = match n {
                0 => "No rows have".to_string(),
                1 => "1 row has".to_string(),
                n => format!("{n} rows have"),
            };
            format!(
                "{subject} {} {} {}.",
                rt.column_term(*column),
                cmp.words(),
                literal.spoken()
            )
        }
        Action::Sort { column, order, .. } => format!(
            "Sorted {} by {}, {}.",
            plural(rt.rows.len(), "row", "rows"),
            rt.column_term(*column),
            order_word(*order)
        ),
        _ => format!("{}.", plural(rt.rows.len(), "row", "rows")),
    };
    if rt.skipped > 0 {
        let verb = if rt.skipped == 1 { "was" } else { "were" };
        text.push_str(&format!(
            " {} without a number {verb} skipped.",
            plural(rt.skipped, "cell", "cells")
        ));
    }
    text
}

fn scalar_speech(s: &Scalar) -> String {
    let value = s.value.spoken();
    let mut text = match &s.source {
        ScalarSource::Aggregate(AggFn::Average) => format!("The average {} is {value}.", s.units_label),
        ScalarSource::Aggregate(AggFn::Sum) => format!("The sum of {} is {value}.", s.units_label),
        ScalarSource::Aggregate(AggFn::Min) => format!("The minimum {} is {value}.", s.units_label),
        ScalarSource::Aggregate(AggFn::Max) => format!("The maximum {} is {value}.", s.units_label),
        ScalarSource::Aggregate(AggFn::Count) => match &s.value {
            Literal::Number(n) if *n == 1.into() => "There is 1 row.".to_string(),
            _ => format!("There are {value} rows."),
        },
        ScalarSource::Cell { row, .. } if value.trim().is_empty() => {
            format!("The {} in row {} is empty.", s.units_label, row + 1)
        }
        ScalarSource::Cell { row, .. } => format!("The {} in row {} is {value}.", s.units_label, row + 1),
    };
    if s.skipped > 0 {
        let verb = if s.skipped == 1 { "was" } else { "were" };
        text.push_str(&format!(
            " {} without a number {verb} skipped.",
            plural(s.skipped, "cell", "cells")
        ));
    }
    text
}

pub fn speak_engine_error(err: &EngineError) -> String {
    match err {
        EngineError::UnsupportedComparison { column, cmp } => {
            format!("I can only compare numbers with {cmp}, and {column} holds text.")
        }
        EngineError::NotNumeric { column, func } => {
            format!("I can't take the {func} of {column} because it holds text.")
        }
        EngineError::EmptyAggregate { column } => format!("There are no numbers in {column} to work with."),
        EngineError::RowOutOfRange { row, rows } => {
            format!("Row {} doesn't exist; the table has {}.", row + 1, plural(*rows, "row", "rows"))
        }
        EngineError::ColOutOfRange { column, columns } => format!(
            "Column {} doesn't exist; the table has {}.",
            column + 1,
            plural(*columns, "column", "columns")
        ),
        EngineError::WrongTable { .. } => "That table is no longer on the page.".to_string(),
        EngineError::Vocabulary(e) => format!("I couldn't save that definition: {e}."),
    }
}

pub fn speak_command_error(err: &CommandError) -> String {
    match err {
        CommandError::NotUnderstood { .. } => format!("Sorry, I didn't understand that. {HELP_TEXT}"),
        CommandError::UnknownColumn { term } => format!("I don't know which column you mean by {term}."),
        CommandError::StaleDeixis { slot } => format!(
            "I'm not sure which {} you mean. Point at it and say that again.",
            match slot.as_str() {
                "literal" => "value",
                other => other,
            }
        ),
        CommandError::IncompleteFrame { missing } => format!(
            "I need more detail: {}.",
            missing.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
        ),
        CommandError::NoTable => "I don't see a table on this page.".to_string(),
    }
}

/// A "which did you mean" question for a term matching several columns.
pub fn compose_disambiguation(term: &str, candidates: &[String]) -> String {
    match candidates {
        [] => format!("I don't know which column you mean by {term}."),
        [one] => format!("By {term}, did you mean {one}? Say it again using that name."),
        many => format!(
            "By {term}, did you mean {}? Say it again using one of those names.",
            or_list(many)
        ),
    }
}

fn or_list(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} or {last}", init.join(", ")),
    }
}

/// Asks the user to define an unresolved column label by pointing at it.
pub fn compose_clarification(raw_label: &str, candidates: &[String]) -> String {
    let ask = format!(
        "Please mouse over the column labeled {raw_label} and say: assign attribute <name> to this column."
    );
    if candidates.is_empty() {
        ask
    } else {
        format!(
            "The column labeled {raw_label} could mean {}. {ask}",
            or_list(&candidates[..candidates.len().min(3)])
        )
    }
}

/// Row visibility and order instructions that realize `rt` on the live page.
/// Result rows come first in result order, hidden rows follow in source order.
pub fn in_place_patch(rt: &ResultTable) -> Vec<PatchEntry> {
    let mut patch: Vec<PatchEntry> = rt
        .source_rows
        .iter()
        .enumerate()
        .map(|(order, &row_index)| PatchEntry {
            row_index,
            visible: true,
            order,
        })
        .collect();
    let mut shown = vec![false; rt.source_row_count];
    for &r in &rt.source_rows {
        shown[r] = true;
    }
    let first_hidden = patch.len();
    let hidden: Vec<usize> = (0..shown.len()).filter(|&r| !shown[r]).collect();
    for (k, row_index) in hidden.into_iter().enumerate() {
        patch.push(PatchEntry {
            row_index,
            visible: false,
            order: first_hidden + k,
        });
    }
    patch.sort_by_key(|p| p.row_index);
    patch
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

/// A static, script-free document holding the result table.
pub fn render_result_page(rt: &ResultTable) -> String {
    let caption = escape(&describe(rt));
    let mut html = String::new();
    html.push_str("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n");
    html.push_str(&format!("<title>{caption}</title>\n</head>\n<body>\n<h1>{caption}</h1>\n"));
    html.push_str(&format!("<table>\n<caption>{caption}</caption>\n<thead>\n<tr>"));
    for (i, col) in rt.columns.iter().enumerate() {
        let term = rt.column_term(i);
        if term == col.label {
            html.push_str(&format!("<th>{}</th>", escape(term)));
        } else {
            html.push_str(&format!(
                "<th title=\"{}\">{}</th>",
                escape(&col.label),
                escape(term)
            ));
        }
    }
    html.push_str("</tr>\n</thead>\n<tbody>\n");
    for row in &rt.rows {
        html.push_str("<tr>");
        for cell in row {
            html.push_str(&format!("<td>{}</td>", escape(cell)));
        }
        html.push_str("</tr>\n");
    }
    html.push_str("</tbody>\n</table>\n");
    if rt.rows.is_empty() {
        html.push_str("<p>No matching rows</p>\n");
    }
    html.push_str("</body>\n</html>\n");
    html
}
