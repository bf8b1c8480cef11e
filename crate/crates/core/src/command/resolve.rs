use super::{
    Action, ColumnRef, Command, CommandError, Intent, IntentFrame, Literal, LiteralRef, RowRef,
    Slot, SlotValue,
};
use crate::event_buffer::EventBuffer;
use crate::numeric::parse_number;
use crate::page_model::{ElementRole, PageModel, TableModel};
use crate::vocabulary::{decide, normalize, score_match, Decision, Dictionary};

/// Below this best score a term is treated as matching nothing at all.
pub const UNKNOWN_FLOOR: f64 = 0.5;

/// A column term the vocabulary could not pin to one column.
#[derive(Debug, Clone, PartialEq)]
pub struct UnresolvedTerm {
    pub term: String,
    /// `(column index, column term, score)`, best first.
    pub candidates: Vec<(usize, String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnResolution {
    Ready(IntentFrame),
    Clarify(UnresolvedTerm),
}

/// The table of the newest fresh pointer event, else the first table.
pub fn select_table<'a>(model: &'a PageModel, buffer: &EventBuffer, now: i64) -> Option<&'a TableModel> {
    buffer
        .most_recent(None, None, buffer.window_ms(), now)
        .and_then(|e| model.table(&e.table_id))
        .or_else(|| model.tables.first())
}

/// Maps every `ColumnRef::ByTerm` to a column index of `table`.
pub fn resolve_columns(
    mut frame: IntentFrame,
    table: &TableModel,
    dictionary: &Dictionary,
    scope_host: &str,
) -> Result<ColumnResolution, CommandError> {
    let Some(SlotValue::Column(ColumnRef::ByTerm(term))) = frame.get(Slot::Column).cloned() else {
        return Ok(ColumnResolution::Ready(frame));
    };
    match match_column(&term, table, dictionary, scope_host)? {
        ColumnMatch::One(index) => {
            frame.set(Slot::Column, SlotValue::Column(ColumnRef::Index(index)));
            Ok(ColumnResolution::Ready(frame))
        }
        ColumnMatch::Unclear(candidates) => Ok(ColumnResolution::Clarify(UnresolvedTerm { term, candidates })),
    }
}

enum ColumnMatch {
    One(usize),
    Unclear(Vec<(usize, String, f64)>),
}

fn match_column(
    term: &str,
    table: &TableModel,
    dictionary: &Dictionary,
    scope_host: &str,
) -> Result<ColumnMatch, CommandError> {
    let norm = normalize(term);
    if norm.is_empty() {
        return Err(CommandError::UnknownColumn { term: term.to_string() });
    }

    let exact: Vec<usize> = table
        .columns
        .iter()
        .filter(|c| c.resolved_term.as_deref().map(normalize).as_deref() == Some(norm.as_str()))
        .map(|c| c.index)
        .collect();
    if let [only] = exact.as_slice() {
        return Ok(ColumnMatch::One(*only));
    }

    let learned: Vec<usize> = table
        .columns
        .iter()
        .filter(|c| {
            dictionary
                .get(scope_host, &c.raw_label)
                .is_some_and(|e| normalize(&e.term) == norm)
        })
        .map(|c| c.index)
        .collect();
    if let [only] = learned.as_slice() {
        return Ok(ColumnMatch::One(*only));
    }

    let scored: Vec<(usize, f64)> = table
        .columns
        .iter()
        .map(|c| {
            let best = c
                .resolved_term
                .iter()
                .map(String::as_str)
                .chain(std::iter::once(c.raw_label.as_str()))
                .chain(c.hints.iter().map(|h| h.text.as_str()))
                .map(|cand| score_match(term, cand))
                .fold(0.0, f64::max);
            (c.index, best)
        })
        .collect();
    let describe = |(i, s): (usize, f64)| (i, table.columns[i].display_term().to_string(), s);
    match decide(scored) {
        Decision::One((index, _)) => Ok(ColumnMatch::One(index)),
        Decision::Tied(tied) => Ok(ColumnMatch::Unclear(tied.into_iter().map(describe).collect())),
        Decision::None { best: Some(best) } if best.1 >= UNKNOWN_FLOOR => {
            Ok(ColumnMatch::Unclear(vec![describe(best)]))
        }
        Decision::None { .. } => Err(CommandError::UnknownColumn { term: term.to_string() }),
    }
}

/// Fills deictic and missing column/literal/row slots from recent pointer events on `table`.
pub fn resolve_deixis(
    mut frame: IntentFrame,
    table: &TableModel,
    buffer: &EventBuffer,
    now: i64,
) -> Result<IntentFrame, CommandError> {
    let table_id = Some(table.table_id.as_str());
    let wants = |frame: &IntentFrame, slot: Slot| {
        frame.get(slot).is_some_and(SlotValue::is_deictic) || frame.missing.contains(&slot)
    };

    if wants(&frame, Slot::Column) {
        let col = buffer
            .latest(&[ElementRole::Header, ElementRole::Cell], table_id, now)
            .and_then(|e| e.col_index)
            .filter(|c| *c < table.column_count())
            .ok_or(CommandError::StaleDeixis { slot: Slot::Column })?;
        frame.set(Slot::Column, SlotValue::Column(ColumnRef::Index(col)));
    }

    if frame.intent == Intent::FilterRows && wants(&frame, Slot::Literal) {
        let text = buffer
            .latest(&[ElementRole::Cell], table_id, now)
            .and_then(|e| e.value_text.clone())
            .ok_or(CommandError::StaleDeixis { slot: Slot::Literal })?;
        let numeric_column = match frame.get(Slot::Column) {
            Some(SlotValue::Column(ColumnRef::Index(i))) => table.columns.get(*i).is_some_and(|c| c.is_numeric()),
            _ => false,
        };
        let literal = match parse_number(&text) {
            Some(n) if numeric_column => Literal::Number(n),
            _ => Literal::Text(text),
        };
        frame.set(Slot::Literal, SlotValue::Literal(LiteralRef::Value(literal)));
    }

    if wants(&frame, Slot::Row) {
        let row = buffer
            .latest(&[ElementRole::Cell, ElementRole::Row], table_id, now)
            .and_then(|e| e.row_index)
            .filter(|r| *r < table.row_count())
            .ok_or(CommandError::StaleDeixis { slot: Slot::Row })?;
        frame.set(Slot::Row, SlotValue::Row(RowRef::Index(row)));
    }

    Ok(frame)
}

/// Turns a fully resolved frame into a command on `table_id`.
pub fn build_command(frame: &IntentFrame, table_id: &str) -> Result<Command, CommandError> {
    let mut unresolved: Vec<Slot> = frame.missing.clone();
    for slot in frame.intent.required_slots() {
        let ok = match frame.get(*slot) {
            None => false,
            Some(SlotValue::Column(c)) => matches!(c, ColumnRef::Index(_)),
            Some(SlotValue::Literal(l)) => matches!(l, LiteralRef::Value(_)),
            Some(SlotValue::Row(r)) => matches!(r, RowRef::Index(_)),
            Some(_) => true,
        };
        if !ok && !unresolved.contains(slot) {
            unresolved.push(*slot);
        }
    }
    if !unresolved.is_empty() {
        unresolved.sort();
        return Err(CommandError::IncompleteFrame { missing: unresolved });
    }

    let column = || match frame.get(Slot::Column) {
        Some(SlotValue::Column(ColumnRef::Index(i))) => *i,
        _ => unreachable!("checked above"),
    };
    let action = match frame.intent {
        Intent::FilterRows => {
            let (Some(SlotValue::Comparator(cmp)), Some(SlotValue::Literal(LiteralRef::Value(literal))), Some(SlotValue::Target(target))) =
                (frame.get(Slot::Cmp), frame.get(Slot::Literal), frame.get(Slot::Target))
            else {
                unreachable!("checked above")
            };
            Action::Filter {
                column: column(),
                cmp: *cmp,
                literal: literal.clone(),
                target: *target,
            }
        }
        Intent::SortRows => {
            let (Some(SlotValue::Order(order)), Some(SlotValue::Target(target))) =
                (frame.get(Slot::Order), frame.get(Slot::Target))
            else {
                unreachable!("checked above")
            };
            Action::Sort {
                column: column(),
                order: *order,
                target: *target,
            }
        }
        Intent::Aggregate => {
            let Some(SlotValue::Fn(func)) = frame.get(Slot::Fn) else {
                unreachable!("checked above")
            };
            Action::Aggregate {
                func: *func,
                column: column(),
            }
        }
        Intent::QueryCell => {
            let Some(SlotValue::Row(RowRef::Index(row))) = frame.get(Slot::Row) else {
                unreachable!("checked above")
            };
            Action::QueryCell {
                row: *row,
                column: column(),
            }
        }
        Intent::DefineAttribute => {
            let Some(SlotValue::Term(term)) = frame.get(Slot::Term) else {
                unreachable!("checked above")
            };
            Action::DefineAttribute {
                column: column(),
                term: term.clone(),
            }
        }
    };
    Ok(Command {
        table_id: table_id.to_string(),
        action,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::command::{extract_slots, AggFn, Comparator, TargetMode};
    use crate::event_buffer::{PointerEvent, PointerKind};
    use crate::ids::IdGen;
    use crate::page_model::{parse_page_with, PageSnapshot};

    const PAGE: &str = r#"<table><thead><tr><th>NAME</th><th title="Position">POS</th><th title="Appearances">APP</th><th><abbr title="Goals">G</abbr></th><th>A</th></tr></thead>
        <tbody><tr><td>Ann</td><td>M</td><td>35</td><td>4</td><td>2</td></tr><tr><td>Bea</td><td>D</td><td>40</td><td>1</td><td>5</td></tr></tbody></table>"#;

    fn table() -> TableModel {
        let snap = PageSnapshot::new("s1", "http://espn.com/x", PAGE, 0).unwrap();
        let mut model = parse_page_with(&snap, &mut IdGen::seeded(5));
        let t = &mut model.tables[0];
        t.columns[0].resolved_term = Some("name".into());
        t.columns[1].resolved_term = Some("position".into());
        t.columns[2].resolved_term = Some("appearances".into());
        t.columns[3].resolved_term = Some("goals".into());
        model.tables.remove(0)
    }

    fn cell_event(ts: i64, row: usize, col: usize, text: &str) -> PointerEvent {
        PointerEvent {
            ts,
            uuid: format!("c{row}{col}"),
            role: ElementRole::Cell,
            table_id: "t0".into(),
            row_index: Some(row),
            col_index: Some(col),
            value_text: Some(text.into()),
            kind: PointerKind::Hover,
        }
    }

    fn header_event(ts: i64, col: usize) -> PointerEvent {
        PointerEvent {
            ts,
            uuid: format!("h{col}"),
            role: ElementRole::Header,
            table_id: "t0".into(),
            row_index: None,
            col_index: Some(col),
            value_text: None,
            kind: PointerKind::Hover,
        }
    }

    fn ready(r: ColumnResolution) -> IntentFrame {
        match r {
            ColumnResolution::Ready(f) => f,
            other => panic!("expected ready frame, got {other:?}"),
        }
    }

    #[test]
    fn term_maps_to_resolved_column() {
        let f = extract_slots("rows where appearances is greater than 35", Intent::FilterRows);
        let f = ready(resolve_columns(f, &table(), &Dictionary::new(), "espn.com").unwrap());
        assert_eq!(f.get(Slot::Column), Some(&SlotValue::Column(ColumnRef::Index(2))));
    }

    #[test]
    fn learned_entry_maps_directly() {
        let mut d = Dictionary::new();
        d.learn("espn.com", "A", "assists", chrono::Utc::now()).unwrap();
        let f = extract_slots("what is the average assists", Intent::Aggregate);
        let f = ready(resolve_columns(f, &table(), &d, "espn.com").unwrap());
        assert_eq!(f.get(Slot::Column), Some(&SlotValue::Column(ColumnRef::Index(4))));
    }

    #[test]
    fn bogus_term_is_unknown() {
        let f = extract_slots("sort by bogus", Intent::SortRows);
        let err = resolve_columns(f, &table(), &Dictionary::new(), "espn.com").unwrap_err();
        assert_eq!(err, CommandError::UnknownColumn { term: "bogus".into() });
    }

    #[test]
    fn raw_labels_also_match() {
        let f = extract_slots("sort by app", Intent::SortRows);
        let f = ready(resolve_columns(f, &table(), &Dictionary::new(), "espn.com").unwrap());
        assert_eq!(f.get(Slot::Column), Some(&SlotValue::Column(ColumnRef::Index(2))));
        let f = extract_slots("assign attribute assists to column a", Intent::DefineAttribute);
        let f = ready(resolve_columns(f, &table(), &Dictionary::new(), "espn.com").unwrap());
        assert_eq!(f.get(Slot::Column), Some(&SlotValue::Column(ColumnRef::Index(4))));
    }

    #[test]
    fn near_miss_asks_for_clarification() {
        let mut t = table();
        t.columns[3].resolved_term = Some("goals".into());
        t.columns[1].resolved_term = Some("goalie".into());
        let f = extract_slots("sort by goal", Intent::SortRows);
        match resolve_columns(f, &t, &Dictionary::new(), "espn.com").unwrap() {
            ColumnResolution::Clarify(u) => {
                assert_eq!(u.term, "goal");
                assert_eq!(u.candidates.len(), 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn deictic_column_and_literal() {
        let mut b = EventBuffer::default();
        b.push_event(header_event(1000, 2));
        b.push_event(cell_event(1100, 0, 2, "35"));
        let f = extract_slots("rows with this column greater than this", Intent::FilterRows);
        let f = resolve_deixis(f, &table(), &b, 1500).unwrap();
        let cmd = build_command(&f, "t0").unwrap();
        assert_eq!(
            cmd.action,
            Action::Filter {
                column: 2,
                cmp: Comparator::Gt,
                literal: Literal::Number(35.into()),
                target: TargetMode::InPlace
            }
        );
    }

    #[test]
    fn empty_buffer_is_stale() {
        let f = extract_slots("rows with this column greater than this", Intent::FilterRows);
        let err = resolve_deixis(f, &table(), &EventBuffer::default(), 0).unwrap_err();
        assert_eq!(err, CommandError::StaleDeixis { slot: Slot::Column });
    }

    #[test]
    fn later_cell_wins() {
        let mut b = EventBuffer::default();
        b.push_event(cell_event(1000, 0, 3, "4"));
        b.push_event(cell_event(1200, 1, 1, "D"));
        let f = extract_slots("what is this", Intent::QueryCell);
        let f = resolve_deixis(f, &table(), &b, 1300).unwrap();
        let cmd = build_command(&f, "t0").unwrap();
        assert_eq!(cmd.action, Action::QueryCell { row: 1, column: 1 });
    }

    #[test]
    fn missing_column_filled_from_pointing() {
        let mut b = EventBuffer::default();
        b.push_event(header_event(1000, 3));
        let f = extract_slots("what is the average", Intent::Aggregate);
        let f = resolve_deixis(f, &table(), &b, 1000).unwrap();
        assert_eq!(
            build_command(&f, "t0").unwrap().action,
            Action::Aggregate {
                func: AggFn::Average,
                column: 3
            }
        );
    }

    #[test]
    fn incomplete_frame_reports_slots() {
        let f = extract_slots("what is the average", Intent::Aggregate);
        assert_eq!(
            build_command(&f, "t0").unwrap_err(),
            CommandError::IncompleteFrame { missing: vec![Slot::Column] }
        );
    }

    #[test]
    fn define_command() {
        let mut b = EventBuffer::default();
        b.push_event(header_event(1000, 4));
        let f = extract_slots("watson assign attribute assists to this column", Intent::DefineAttribute);
        let f = resolve_deixis(f, &table(), &b, 1000).unwrap();
        assert_eq!(
            build_command(&f, "t0").unwrap().action,
            Action::DefineAttribute {
                column: 4,
                term: "assists".into()
            }
        );
    }

    #[test]
    fn events_on_other_tables_ignored() {
        let mut b = EventBuffer::default();
        let mut e = header_event(1000, 1);
        e.table_id = "t1".into();
        b.push_event(e);
        let f = extract_slots("sort by this column", Intent::SortRows);
        assert!(resolve_deixis(f, &table(), &b, 1000).is_err());
    }
}
