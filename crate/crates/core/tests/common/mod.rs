//! Independent reference implementations used to check the engine.
//!
//! Nothing here calls into the page parser or the table engine: fixture rows
//! are read with plain regexes and numbers are handled as `f64`.

#![allow(dead_code)]

use std::path::PathBuf;

use std::sync::OnceLock;

use regex::Regex;

fn cached(cell: &'static OnceLock<Regex>, pattern: &str) -> &'static Regex {
    cell.get_or_init(|| Regex::new(pattern).unwrap())
}

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn scenarios_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/scenarios")
}

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixtures_dir().join(name)).expect("fixture readable")
}

fn strip_tags(s: &str) -> String {
    static TAGS: OnceLock<Regex> = OnceLock::new();
    let tags = cached(&TAGS, r"<[^>]*>");
    let text = tags.replace_all(s, " ");
    let text = text
        .replace("&amp;", "&")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&#39;", "'");
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Body rows of the first `<tbody>` as cell texts.
pub fn tbody_rows(html: &str) -> Vec<Vec<String>> {
    let body = Regex::new(r"(?s)<tbody>(.*?)</tbody>").unwrap();
    let row = Regex::new(r"(?s)<tr[^>]*>(.*?)</tr>").unwrap();
    let cell = Regex::new(r"(?s)<t[dh][^>]*>(.*?)</t[dh]>").unwrap();
    let Some(b) = body.captures(html) else { return Vec::new() };
    row.captures_iter(&b[1])
        .map(|r| cell.captures_iter(&r[1]).map(|c| strip_tags(&c[1])).collect())
        .collect()
}

/// Header cell texts of the first `<thead>`.
pub fn thead_labels(html: &str) -> Vec<String> {
    let head = Regex::new(r"(?s)<thead>(.*?)</thead>").unwrap();
    let cell = Regex::new(r"(?s)<th[^>]*>(.*?)</th>").unwrap();
    head.captures(html)
        .map(|h| cell.captures_iter(&h[1]).map(|c| strip_tags(&c[1])).collect())
        .unwrap_or_default()
}

/// Reads a displayed number the way a person would: optional sign, thousands
/// commas, optional fraction, optional trailing percent.
pub fn oracle_number(text: &str) -> Option<f64> {
    let t = text.trim();
    static SHAPE: OnceLock<Regex> = OnceLock::new();
    let shape = cached(&SHAPE, r"^[+-]?(\d{1,3}(,\d{3})+|\d+)(\.\d+)?%?$");
    if !shape.is_match(t) {
        return None;
    }
    let plain = t.trim_end_matches('%').replace(',', "");
    // Shift by exponent so the percent value is rounded once, like a literal.
    if t.ends_with('%') {
        format!("{plain}e-2").parse().ok()
    } else {
        plain.parse().ok()
    }
}

pub fn oracle_is_numeric_column(cells: &[&str]) -> bool {
    let filled: Vec<&&str> = cells.iter().filter(|c| !c.trim().is_empty()).collect();
    if filled.is_empty() {
        return false;
    }
    let parsed = filled.iter().filter(|c| oracle_number(c).is_some()).count();
    parsed as f64 / filled.len() as f64 >= 0.9
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleCmp {
    Gt,
    Lt,
    Eq,
}

/// Row indices passing the predicate, by plain scan.
pub fn oracle_filter(rows: &[Vec<String>], col: usize, cmp: OracleCmp, literal: f64) -> Vec<usize> {
    let mut out = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        if let Some(v) = oracle_number(&row[col]) {
            let keep = match cmp {
                OracleCmp::Gt => v > literal,
                OracleCmp::Lt => v < literal,
                OracleCmp::Eq => v == literal,
            };
            if keep {
                out.push(i);
            }
        }
    }
    out
}

pub fn oracle_filter_text(rows: &[Vec<String>], col: usize, literal: &str) -> Vec<usize> {
    let want = literal.trim().to_lowercase();
    (0..rows.len())
        .filter(|&i| rows[i][col].trim().to_lowercase() == want)
        .collect()
}

/// Insertion sort, stable by construction. Non-numbers go last in numeric columns.
pub fn oracle_sort(rows: &[Vec<String>], col: usize, numeric: bool, descending: bool) -> Vec<usize> {
    let mut order: Vec<usize> = Vec::new();
    let before = |a: usize, b: usize| -> bool {
        if numeric {
            match (oracle_number(&rows[a][col]), oracle_number(&rows[b][col])) {
                (Some(x), Some(y)) => {
                    if descending {
                        x > y
                    } else {
                        x < y
                    }
                }
                (Some(_), None) => true,
                _ => false,
            }
        } else {
            let (x, y) = (rows[a][col].to_lowercase(), rows[b][col].to_lowercase());
            if descending {
                x > y
            } else {
                x < y
            }
        }
    };
    for i in 0..rows.len() {
        let mut pos = order.len();
        while pos > 0 && before(i, order[pos - 1]) {
            pos -= 1;
        }
        order.insert(pos, i);
    }
    order
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleAgg {
    Average,
    Sum,
    Min,
    Max,
    Count,
}

/// `(value, skipped)`; `None` when a non-count aggregate has nothing to work on.
pub fn oracle_aggregate(rows: &[Vec<String>], col: usize, agg: OracleAgg) -> Option<(f64, usize)> {
    if agg == OracleAgg::Count {
        return Some((rows.len() as f64, 0));
    }
    let values: Vec<f64> = rows.iter().filter_map(|r| oracle_number(&r[col])).collect();
    let skipped = rows.len() - values.len();
    if values.is_empty() {
        return None;
    }
    let v = match agg {
        OracleAgg::Sum => values.iter().sum(),
        OracleAgg::Average => values.iter().sum::<f64>() / values.len() as f64,
        OracleAgg::Min => values.iter().cloned().fold(f64::INFINITY, f64::min),
        OracleAgg::Max => values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        OracleAgg::Count => unreachable!(),
    };
    Some((v, skipped))
}

pub fn close(a: f64, b: f64) -> bool {
    if a == b {
        return true;
    }
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

/// Picks rows out of `rows` by index.
pub fn select(rows: &[Vec<String>], idx: &[usize]) -> Vec<Vec<String>> {
    idx.iter().map(|&i| rows[i].clone()).collect()
}

#[derive(Debug, Clone, serde::Deserialize)]
pub struct GoldenCase {
    #[serde(default)]
    pub steps: Vec<tabletalk::scenario::Step>,
    pub say: String,
    pub expect: serde_json::Value,
}

pub fn golden_cases() -> Vec<GoldenCase> {
    let text = std::fs::read_to_string(data_dir().join("golden.json")).expect("corpus readable");
    serde_json::from_str(&text).expect("corpus parses")
}

/// Runs one corpus case in a fresh session on the roster fixture and
/// returns the canonical command text.
pub fn run_golden(case: &GoldenCase) -> Result<String, String> {
    use tabletalk::scenario::{Scenario, ScenarioRunner, Step};
    use tabletalk::session::EngineConfig;

    let scenario = Scenario {
        page: "roster.html".into(),
        url: None,
        steps: Vec::new(),
    };
    let mut runner =
        ScenarioRunner::start(&scenario, &fixtures_dir(), EngineConfig::default()).map_err(|e| e.to_string())?;
    for (i, step) in case.steps.iter().enumerate() {
        runner.step(i, step).map_err(|e| e.to_string())?;
    }
    runner
        .step(case.steps.len(), &Step::Say(case.say.clone()))
        .map_err(|e| e.to_string())?;
    let last = runner.last().expect("utterance ran");
    match &last.command {
        Some(c) => Ok(c.to_canonical_string()),
        None => Err(format!("no command; said {:?}", last.response.speech)),
    }
}

/// A generated table: header labels plus body cell texts.
#[derive(Debug, Clone)]
pub struct RandomTable {
    pub labels: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

const WORDS: &[&str] = &["alpha", "Beta", "gamma", "DELTA", "beta", "Omega", "kappa", "Alpha", "zeta", "eta"];

#[derive(Debug, Clone, Copy)]
enum Kind {
    Int,
    Fraction,
    Percent,
    Thousands,
    Text,
}

fn random_cell(rng: &mut impl rand::Rng, kind: Kind) -> String {
    if !matches!(kind, Kind::Text) {
        match rng.gen_range(0..20) {
            0 => return "DNP".into(),
            1 => return String::new(),
            _ => {}
        }
    }
    match kind {
        Kind::Int => rng.gen_range(-20i64..=60).to_string(),
        Kind::Fraction => format!("{}.{}", rng.gen_range(0..100), rng.gen_range(0..100)),
        Kind::Percent => format!("{}.{}%", rng.gen_range(0..100), rng.gen_range(0..10)),
        Kind::Thousands => {
            let v: i64 = rng.gen_range(0..3_000_000);
            let digits = v.to_string();
            let mut out = String::new();
            for (i, ch) in digits.chars().enumerate() {
                if i > 0 && (digits.len() - i).is_multiple_of(3) {
                    out.push(',');
                }
                out.push(ch);
            }
            out
        }
        Kind::Text => WORDS[rng.gen_range(0..WORDS.len())].to_string(),
    }
}

/// Between 1 and 10 body rows and 2 to 10 columns of mixed kinds.
pub fn random_table(rng: &mut impl rand::Rng) -> RandomTable {
    let cols = rng.gen_range(2..=10);
    let nrows = rng.gen_range(1..=10);
    let kinds: Vec<Kind> = (0..cols)
        .map(|_| match rng.gen_range(0..5) {
            0 => Kind::Int,
            1 => Kind::Fraction,
            2 => Kind::Percent,
            3 => Kind::Thousands,
            _ => Kind::Text,
        })
        .collect();
    let rows = (0..nrows)
        .map(|_| kinds.iter().map(|k| random_cell(rng, *k)).collect())
        .collect();
    RandomTable {
        labels: (0..cols).map(|c| format!("Field{c}")).collect(),
        rows,
    }
}

impl RandomTable {
    pub fn to_html(&self) -> String {
        let mut s = String::from("<html><body><table><thead><tr>");
        for l in &self.labels {
            s.push_str(&format!("<th>{l}</th>"));
        }
        s.push_str("</tr></thead><tbody>");
        for r in &self.rows {
            s.push_str("<tr>");
            for c in r {
                s.push_str(&format!("<td>{c}</td>"));
            }
            s.push_str("</tr>");
        }
        s.push_str("</tbody></table></body></html>");
        s
    }
}

fn decimal_f64(d: &rust_decimal::Decimal) -> f64 {
    d.to_string().parse().expect("decimal renders as a float")
}

/// Runs every filter, sort and aggregate on `html` through the engine and
/// compares against the plain-scan implementations above. Returns the number
/// of commands checked.
pub fn check_against_oracles(html: &str) -> Result<usize, String> {
    use std::str::FromStr;

    use rust_decimal::Decimal;
    use tabletalk::command::{Action, AggFn, Command, Comparator, Literal, SortOrder, TargetMode};
    use tabletalk::engine::{execute, EngineError, Outcome};
    use tabletalk::page_model::{parse_page, PageSnapshot};
    use tabletalk::vocabulary::SharedDictionary;

    let grid = tbody_rows(html);
    let snapshot = PageSnapshot::new("oracle", "http://oracle.test/", html, 0).map_err(|e| e.to_string())?;
    let model = parse_page(&snapshot);
    let table = model.tables.first().ok_or("no table parsed")?;
    if table.text_grid() != grid {
        return Err(format!("grid mismatch: {:?} vs {:?}", table.text_grid(), grid));
    }
    let dict = SharedDictionary::default();
    let run = |action: Action| {
        execute(
            &Command {
                table_id: table.table_id.clone(),
                action,
            },
            table,
            &dict,
            "oracle.test",
        )
    };
    let mut checked = 0;
    let ncols = grid.first().map(|r| r.len()).unwrap_or(0);
    for col in 0..ncols {
        let cells: Vec<&str> = grid.iter().map(|r| r[col].as_str()).collect();
        let numeric = oracle_is_numeric_column(&cells);
        let ctx = |what: &str| format!("column {col} ({}) {what}", if numeric { "numeric" } else { "text" });

        for order in [SortOrder::Asc, SortOrder::Desc] {
            let want = oracle_sort(&grid, col, numeric, order == SortOrder::Desc);
            match run(Action::Sort {
                column: col,
                order,
                target: TargetMode::NewTable,
            }) {
                Ok(Outcome::ResultTable(rt)) if rt.source_rows == want && rt.rows == select(&grid, &want) => {}
                other => return Err(format!("{}: sort {order:?} got {other:?}, want {want:?}", ctx("sort"))),
            }
            checked += 1;
        }

        for (func, agg) in [
            (AggFn::Average, OracleAgg::Average),
            (AggFn::Sum, OracleAgg::Sum),
            (AggFn::Min, OracleAgg::Min),
            (AggFn::Max, OracleAgg::Max),
            (AggFn::Count, OracleAgg::Count),
        ] {
            let got = run(Action::Aggregate { func, column: col });
            let want = oracle_aggregate(&grid, col, agg);
            let ok = match (&got, want) {
                (Err(EngineError::NotNumeric { .. }), _) => !numeric && agg != OracleAgg::Count,
                (Err(EngineError::EmptyAggregate { .. }), None) => numeric,
                (Ok(Outcome::Scalar(s)), Some((v, skipped))) => match &s.value {
                    Literal::Number(d) => {
                        (numeric || agg == OracleAgg::Count) && s.skipped == skipped && {
                            let scale = grid
                                .iter()
                                .filter_map(|r| oracle_number(&r[col]))
                                .fold(v.abs(), |m, x| m.max(x.abs()));
                            let got = decimal_f64(d);
                            got == v || (got - v).abs() <= 1e-9 * scale
                        }
                    }
                    Literal::Text(_) => false,
                },
                _ => false,
            };
            if !ok {
                return Err(format!("{}: {func:?} got {got:?}, want {want:?}", ctx("aggregate")));
            }
            checked += 1;
        }

        if numeric {
            let mut literals: Vec<String> = grid
                .iter()
                .filter_map(|r| {
                    let t = r[col].trim();
                    oracle_number(t)?;
                    let plain = t.trim_end_matches('%').replace(',', "");
                    let d = Decimal::from_str(&plain).ok()?;
                    Some(if t.ends_with('%') { (d / Decimal::ONE_HUNDRED).to_string() } else { plain })
                })
                .collect();
            literals.extend(["-3", "0", "25", "41.5"].map(String::from));
            for lit in &literals {
                let value: f64 = lit.parse().expect("literal parses");
                let decimal = Decimal::from_str(lit).expect("literal is decimal");
                for (cmp, ocmp) in [
                    (Comparator::Gt, OracleCmp::Gt),
                    (Comparator::Lt, OracleCmp::Lt),
                    (Comparator::Eq, OracleCmp::Eq),
                ] {
                    let want = oracle_filter(&grid, col, ocmp, value);
                    let skipped = grid.iter().filter(|r| oracle_number(&r[col]).is_none()).count();
                    match run(Action::Filter {
                        column: col,
                        cmp,
                        literal: Literal::Number(decimal),
                        target: TargetMode::NewTable,
                    }) {
                        Ok(Outcome::ResultTable(rt))
                            if rt.source_rows == want && rt.rows == select(&grid, &want) && rt.skipped == skipped => {}
                        other => {
                            return Err(format!("{}: {cmp:?} {lit} got {other:?}, want {want:?}", ctx("filter")))
                        }
                    }
                    checked += 1;
                }
            }
        } else {
            let mut literals: Vec<String> = grid.iter().map(|r| r[col].to_lowercase()).collect();
            literals.push("absent".into());
            for lit in &literals {
                let want = oracle_filter_text(&grid, col, lit);
                match run(Action::Filter {
                    column: col,
                    cmp: Comparator::Eq,
                    literal: Literal::Text(lit.clone()),
                    target: TargetMode::NewTable,
                }) {
                    Ok(Outcome::ResultTable(rt)) if rt.source_rows == want && rt.rows == select(&grid, &want) => {}
                    other => return Err(format!("{}: eq {lit:?} got {other:?}, want {want:?}", ctx("filter"))),
                }
                checked += 1;
            }
            for cmp in [Comparator::Gt, Comparator::Lt] {
                match run(Action::Filter {
                    column: col,
                    cmp,
                    literal: Literal::Number(Decimal::from(1)),
                    target: TargetMode::NewTable,
                }) {
                    Err(EngineError::UnsupportedComparison { .. }) => {}
                    other => return Err(format!("{}: {cmp:?} on text got {other:?}", ctx("filter"))),
                }
                checked += 1;
            }
        }
    }
    Ok(checked)
}
