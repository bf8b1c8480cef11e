//! Utterance → parameterized command: intent grammar, slot extraction,
//! vocabulary-backed column resolution and deixis filling.

mod grammar;
mod resolve;

use std::collections::BTreeMap;
use std::fmt;

use rust_decimal::Decimal;
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

pub use grammar::{classify_intent, extract_slots, Grammar, DEFAULT_WAKE_WORD};
pub use resolve::{
    build_command, resolve_columns, resolve_deixis, select_table, ColumnResolution, UnresolvedTerm,
};

use crate::numeric::to_json_number;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Intent {
    FilterRows,
    SortRows,
    Aggregate,
    QueryCell,
    DefineAttribute,
}

impl Intent {
    pub const ALL: [Intent; 5] = [
        Intent::FilterRows,
        Intent::SortRows,
        Intent::Aggregate,
        Intent::QueryCell,
        Intent::DefineAttribute,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Intent::FilterRows => "filter_rows",
            Intent::SortRows => "sort_rows",
            Intent::Aggregate => "aggregate",
            Intent::QueryCell => "query_cell",
            Intent::DefineAttribute => "define_attribute",
        }
    }

    pub fn required_slots(self) -> &'static [Slot] {
        match self {
            Intent::FilterRows => &[Slot::Column, Slot::Cmp, Slot::Literal, Slot::Target],
            Intent::SortRows => &[Slot::Column, Slot::Order, Slot::Target],
            Intent::Aggregate => &[Slot::Fn, Slot::Column],
            Intent::QueryCell => &[Slot::Row, Slot::Column],
            Intent::DefineAttribute => &[Slot::Column, Slot::Term],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    Column,
    Cmp,
    Literal,
    Target,
    Order,
    Fn,
    Row,
    Term,
}

impl Slot {
    pub fn as_str(self) -> &'static str {
        match self {
            Slot::Column => "column",
            Slot::Cmp => "cmp",
            Slot::Literal => "literal",
            Slot::Target => "target",
            Slot::Order => "order",
            Slot::Fn => "fn",
            Slot::Row => "row",
            Slot::Term => "term",
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Comparator {
    Gt,
    Lt,
    Eq,
}

impl Comparator {
    pub fn words(self) -> &'static str {
        match self {
            Comparator::Gt => "greater than",
            Comparator::Lt => "less than",
            Comparator::Eq => "equal to",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SortOrder {
    Asc,
    Desc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggFn {
    Average,
    Sum,
    Min,
    Max,
    Count,
}

impl AggFn {
    pub fn as_str(self) -> &'static str {
        match self {
            AggFn::Average => "average",
            AggFn::Sum => "sum",
            AggFn::Min => "min",
            AggFn::Max => "max",
            AggFn::Count => "count",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMode {
    NewTable,
    InPlace,
}

/// A comparison operand as typed or pointed at.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Literal {
    Number(Decimal),
    Text(String),
}

impl Literal {
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Literal::Number(d) => to_json_number(*d),
            Literal::Text(s) => serde_json::Value::String(s.clone()),
        }
    }

    pub fn spoken(&self) -> String {
        match self {
            Literal::Number(d) => crate::numeric::format_spoken(*d),
            Literal::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnRef {
    ByTerm(String),
    ByDeixis,
    Index(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LiteralRef {
    Value(Literal),
    ByDeixis,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RowRef {
    ByDeixis,
    Index(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SlotValue {
    Column(ColumnRef),
    Comparator(Comparator),
    Literal(LiteralRef),
    Order(SortOrder),
    Fn(AggFn),
    Target(TargetMode),
    Term(String),
    Row(RowRef),
}

impl SlotValue {
    pub fn is_deictic(&self) -> bool {
        matches!(
            self,
            SlotValue::Column(ColumnRef::ByDeixis)
                | SlotValue::Literal(LiteralRef::ByDeixis)
                | SlotValue::Row(RowRef::ByDeixis)
        )
    }
}

/// Intent plus whatever slots the surface text supplied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntentFrame {
    pub intent: Intent,
    pub slots: BTreeMap<Slot, SlotValue>,
    pub missing: Vec<Slot>,
}

impl IntentFrame {
    pub fn new(intent: Intent) -> Self {
        Self {
            intent,
            slots: BTreeMap::new(),
            missing: Vec::new(),
        }
    }

    pub fn set(&mut self, slot: Slot, value: SlotValue) {
        self.missing.retain(|s| *s != slot);
        self.slots.insert(slot, value);
    }

    pub fn get(&self, slot: Slot) -> Option<&SlotValue> {
        self.slots.get(&slot)
    }

    /// Recomputes `missing` from the intent's required slots.
    pub fn refresh_missing(&mut self) {
        self.missing = self
            .intent
            .required_slots()
            .iter()
            .copied()
            .filter(|s| !self.slots.contains_key(s))
            .collect();
    }

    pub fn deictic_slots(&self) -> Vec<Slot> {
        self.slots
            .iter()
            .filter(|(_, v)| v.is_deictic())
            .map(|(k, _)| *k)
            .collect()
    }
}

/// A fully specified command against one table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Command {
    pub table_id: String,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Filter {
        column: usize,
        cmp: Comparator,
        literal: Literal,
        target: TargetMode,
    },
    Sort {
        column: usize,
        order: SortOrder,
        target: TargetMode,
    },
    Aggregate {
        func: AggFn,
        column: usize,
    },
    QueryCell {
        row: usize,
        column: usize,
    },
    DefineAttribute {
        column: usize,
        term: String,
    },
}

impl Action {
    pub fn intent(&self) -> Intent {
        match self {
            Action::Filter { .. } => Intent::FilterRows,
            Action::Sort { .. } => Intent::SortRows,
            Action::Aggregate { .. } => Intent::Aggregate,
            Action::QueryCell { .. } => Intent::QueryCell,
            Action::DefineAttribute { .. } => Intent::DefineAttribute,
        }
    }

    pub fn target(&self) -> Option<TargetMode> {
        match self {
            Action::Filter { target, .. } | Action::Sort { target, .. } => Some(*target),
            _ => None,
        }
    }
}

impl Command {
    /// Canonical JSON: intent, table_id, then the slot fields in a fixed order.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("command serializes")
    }

    pub fn to_canonical_string(&self) -> String {
        serde_json::to_string(self).expect("command serializes")
    }
}

fn enum_str<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("enum serializes")
}

impl Serialize for Command {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(None)?;
        map.serialize_entry("intent", self.action.intent().as_str())?;
        map.serialize_entry("table_id", &self.table_id)?;
        match &self.action {
            Action::Filter {
                column,
                cmp,
                literal,
                target,
            } => {
                map.serialize_entry("column", column)?;
                map.serialize_entry("cmp", &enum_str(cmp))?;
                map.serialize_entry("literal", &literal.to_json())?;
                map.serialize_entry("target", &enum_str(target))?;
            }
            Action::Sort { column, order, target } => {
                map.serialize_entry("column", column)?;
                map.serialize_entry("order", &enum_str(order))?;
                map.serialize_entry("target", &enum_str(target))?;
            }
            Action::Aggregate { func, column } => {
                map.serialize_entry("fn", func.as_str())?;
                map.serialize_entry("column", column)?;
            }
            Action::QueryCell { row, column } => {
                map.serialize_entry("row", row)?;
                map.serialize_entry("column", column)?;
            }
            Action::DefineAttribute { column, term } => {
                map.serialize_entry("column", column)?;
                map.serialize_entry("term", term)?;
            }
        }
        map.end()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CommandError {
    #[error("no intent pattern matches {text:?}")]
    NotUnderstood { text: String },
    #[error("no column matches {term:?}")]
    UnknownColumn { term: String },
    #[error("no recent pointing event can fill the {slot} slot")]
    StaleDeixis { slot: Slot },
    #[error("unresolved slots: {}", .missing.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", "))]
    IncompleteFrame { missing: Vec<Slot> },
    #[error("the page has no table to act on")]
    NoTable,
}
