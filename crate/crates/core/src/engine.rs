//! Executes resolved commands against a table model.

use std::cmp::Ordering;

use rust_decimal::Decimal;
use serde::Serialize;

use crate::command::{Action, AggFn, Command, Comparator, Literal, SortOrder, TargetMode};
use crate::page_model::{ColumnType, TableModel};
use crate::vocabulary::{learn_definition, SharedDictionary, VocabError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultColumn {
    pub label: String,
    pub term: Option<String>,
    #[serde(rename = "type")]
    pub col_type: ColumnType,
}

/// Rows selected or reordered from a source table. Columns are never projected.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultTable {
    pub columns: Vec<ResultColumn>,
    pub rows: Vec<Vec<String>>,
    pub command: Command,
    /// Source row index of each result row.
    #[serde(skip)]
    pub source_rows: Vec<usize>,
    #[serde(skip)]
    pub source_row_count: usize,
    /// Cells of a numeric column that could not take part in a comparison.
    #[serde(skip)]
    pub skipped: usize,
}

impl ResultTable {
    fn new(table: &TableModel, command: Command, source_rows: Vec<usize>, skipped: usize) -> Self {
        Self {
            columns: table
                .columns
                .iter()
                .map(|c| ResultColumn {
                    label: c.raw_label.clone(),
                    term: c.resolved_term.clone(),
                    col_type: c.col_type,
                })
                .collect(),
            rows: source_rows
                .iter()
                .map(|r| table.rows[*r].iter().map(|c| c.raw_text.clone()).collect())
                .collect(),
            command,
            source_rows,
            source_row_count: table.row_count(),
            skipped,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("result table serializes")
    }

    pub fn column_term(&self, index: usize) -> &str {
        let c = &self.columns[index];
        c.term.as_deref().unwrap_or(&c.label)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScalarSource {
    Aggregate(AggFn),
    Cell { row: usize, column: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scalar {
    pub value: Literal,
    pub units_label: String,
    pub skipped: usize,
    pub source: ScalarSource,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    ResultTable(ResultTable),
    Scalar(Scalar),
    Ack { description: String, column: usize, term: String },
    NeedsClarification { prompt_id: String },
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("{cmp} comparisons need a numeric column but {column} holds text")]
    UnsupportedComparison { column: String, cmp: &'static str },
    #[error("the {func} of {column} needs numbers but the column holds text")]
    NotNumeric { column: String, func: &'static str },
    #[error("no cell in {column} holds a number")]
    EmptyAggregate { column: String },
    #[error("row {row} is out of range ({rows} rows)")]
    RowOutOfRange { row: usize, rows: usize },
    #[error("column {column} is out of range ({columns} columns)")]
    ColOutOfRange { column: usize, columns: usize },
    #[error("command targets table {wanted} but was run on {actual}")]
    WrongTable { wanted: String, actual: String },
    #[error(transparent)]
    Vocabulary(#[from] VocabError),
}

fn check_column(table: &TableModel, column: usize) -> Result<(), EngineError> {
    if column >= table.column_count() {
        return Err(EngineError::ColOutOfRange {
            column,
            columns: table.column_count(),
        });
    }
    Ok(())
}

fn text_eq(a: &str, b: &str) -> bool {
    a.trim().to_lowercase() == b.trim().to_lowercase()
}

fn filter_command(table: &TableModel, column: usize, cmp: Comparator, literal: &Literal) -> Command {
    Command {
        table_id: table.table_id.clone(),
        action: Action::Filter {
            column,
            cmp,
            literal: literal.clone(),
            target: TargetMode::NewTable,
        },
    }
}

/// Rows whose cell at `column` satisfies `cmp literal`, in source order.
pub fn filter_rows(
    table: &TableModel,
    column: usize,
    cmp: Comparator,
    literal: &Literal,
) -> Result<ResultTable, EngineError> {
    check_column(table, column)?;
    let desc = &table.columns[column];
    let ordered = cmp != Comparator::Eq;
    if ordered && (!desc.is_numeric() || matches!(literal, Literal::Text(_))) {
        return Err(EngineError::UnsupportedComparison {
            column: desc.display_term().to_string(),
            cmp: cmp.words(),
        });
    }

    let mut keep = Vec::new();
    let mut skipped = 0;
    for (r, row) in table.rows.iter().enumerate() {
        let cell = &row[column];
        let hit = match (literal, cell.numeric_value) {
            (Literal::Number(n), Some(v)) => match cmp {
                Comparator::Gt => v > *n,
                Comparator::Lt => v < *n,
                Comparator::Eq => v == *n,
            },
            (Literal::Number(_), None) if desc.is_numeric() => {
                skipped += 1;
                false
            }
            (Literal::Number(n), None) => text_eq(&cell.raw_text, &n.normalize().to_string()),
            (Literal::Text(t), _) => text_eq(&cell.raw_text, t),
        };
        if hit {
            keep.push(r);
        }
    }
    Ok(ResultTable::new(table, filter_command(table, column, cmp, literal), keep, skipped))
}

/// Stable sort on `column`. Numeric columns order by value with unparseable
/// cells last; text columns order case-insensitively.
pub fn sort_rows(table: &TableModel, column: usize, order: SortOrder) -> Result<ResultTable, EngineError> {
    check_column(table, column)?;
    let numeric = table.columns[column].is_numeric();
    let mut idx: Vec<usize> = (0..table.row_count()).collect();
    let key = |r: usize| &table.rows[r][column];
    idx.sort_by(|&a, &b| {
        let (ca, cb) = (key(a), key(b));
        if numeric {
            match (ca.numeric_value, cb.numeric_value) {
                (Some(x), Some(y)) => directed(x.cmp(&y), order),
                (Some(_), None) => Ordering::Less,
                (None, Some(_)) => Ordering::Greater,
                (None, None) => Ordering::Equal,
            }
        } else {
            directed(ca.raw_text.to_lowercase().cmp(&cb.raw_text.to_lowercase()), order)
        }
    });
    let command = Command {
        table_id: table.table_id.clone(),
        action: Action::Sort {
            column,
            order,
            target: TargetMode::NewTable,
        },
    };
    Ok(ResultTable::new(table, command, idx, 0))
}

fn directed(o: Ordering, order: SortOrder) -> Ordering {
    match order {
        SortOrder::Asc => o,
        SortOrder::Desc => o.reverse(),
    }
}

/// Applies `func` to the parseable cells of `column`; `count` counts rows.
pub fn aggregate(table: &TableModel, func: AggFn, column: usize) -> Result<Scalar, EngineError> {
    check_column(table, column)?;
    let desc = &table.columns[column];
    let units_label = desc.display_term().to_string();
    let source = ScalarSource::Aggregate(func);
    if func == AggFn::Count {
        return Ok(Scalar {
            value: Literal::Number(Decimal::from(table.row_count())),
            units_label,
            skipped: 0,
            source,
        });
    }
    if !desc.is_numeric() {
        return Err(EngineError::NotNumeric {
            column: units_label,
            func: func.as_str(),
        });
    }
    let values: Vec<Decimal> = table.rows.iter().filter_map(|r| r[column].numeric_value).collect();
    let skipped = table.row_count() - values.len();
    if values.is_empty() {
        return Err(EngineError::EmptyAggregate { column: units_label });
    }
    let sum = || values.iter().copied().sum::<Decimal>();
    let value = match func {
        AggFn::Sum => sum(),
        AggFn::Average => sum() / Decimal::from(values.len()),
        AggFn::Min => *values.iter().min().expect("non-empty"),
        AggFn::Max => *values.iter().max().expect("non-empty"),
        AggFn::Count => unreachable!(),
    };
    Ok(Scalar {
        value: Literal::Number(value.normalize()),
        units_label,
        skipped,
        source,
    })
}

pub fn query_cell(table: &TableModel, row: usize, column: usize) -> Result<Scalar, EngineError> {
    check_column(table, column)?;
    let cell = table.rows.get(row).ok_or(EngineError::RowOutOfRange {
        row,
        rows: table.row_count(),
    })?;
    Ok(Scalar {
        value: Literal::Text(cell[column].raw_text.clone()),
        units_label: table.columns[column].display_term().to_string(),
        skipped: 0,
        source: ScalarSource::Cell { row, column },
    })
}

/// Runs `command` on `table`. Definitions are written to `dictionary` under `scope_host`.
pub fn execute(
    command: &Command,
    table: &TableModel,
    dictionary: &SharedDictionary,
    scope_host: &str,
) -> Result<Outcome, EngineError> {
    if command.table_id != table.table_id {
        return Err(EngineError::WrongTable {
            wanted: command.table_id.clone(),
            actual: table.table_id.clone(),
        });
    }
    let with_command = |mut rt: ResultTable| {
        rt.command = command.clone();
        Outcome::ResultTable(rt)
    };
    Ok(match &command.action {
        Action::Filter {
            column, cmp, literal, ..
        } => with_command(filter_rows(table, *column, *cmp, literal)?),
        Action::Sort { column, order, .. } => with_command(sort_rows(table, *column, *order)?),
        Action::Aggregate { func, column } => Outcome::Scalar(aggregate(table, *func, *column)?),
        Action::QueryCell { row, column } => Outcome::Scalar(query_cell(table, *row, *column)?),
        Action::DefineAttribute { column, term } => {
            check_column(table, *column)?;
            let entry = learn_definition(dictionary, scope_host, &table.columns[*column].raw_label, term)?;
            Outcome::Ack {
                description: format!("{} assigned", entry.term),
                column: *column,
                term: entry.term,
            }
        }
    })
}
