//! Deterministic intent grammar: anchored patterns over normalized text plus
//! synonym tables for comparators, aggregates and sort orders.

use std::sync::OnceLock;

use regex::{Captures, Regex};

use super::{
    AggFn, ColumnRef, CommandError, Comparator, Intent, IntentFrame, Literal, LiteralRef, RowRef,
    Slot, SlotValue, SortOrder, TargetMode,
};
use crate::numeric::parse_number;

pub const DEFAULT_WAKE_WORD: &str = "watson";

struct Pattern {
    id: &'static str,
    intent: Intent,
    re: Regex,
}

const ORDER_WORDS: &str = r"ascending|descending|asc|desc|increasing|decreasing|(?:from\s+)?(?:highest|largest|biggest|most)(?:\s+to\s+(?:lowest|smallest|least)|\s+first)|(?:from\s+)?(?:lowest|smallest|least|fewest)(?:\s+to\s+(?:highest|largest|most)|\s+first)";
const ROW_NOUNS: &str = r"rows|players|entries|records|lines|items";

fn patterns() -> &'static [Pattern] {
    static PATTERNS: OnceLock<Vec<Pattern>> = OnceLock::new();
    PATTERNS.get_or_init(|| {
        let order = format!(r"(?:\s+(?:in\s+)?(?P<order>{ORDER_WORDS})(?:\s+order)?)?");
        let specs: Vec<(&str, Intent, String)> = vec![
            (
                "define.assign",
                Intent::DefineAttribute,
                r"^(?:assign|give|set)\s+(?:the\s+)?(?:attribute|name|term|label)\s+(?P<term>.+?)\s+(?:to|for)\s+(?P<col>.+)$".into(),
            ),
            (
                "define.call",
                Intent::DefineAttribute,
                r"^(?:call|name|label)\s+(?P<col>this column|that column|this|that)\s+(?P<term>.+)$".into(),
            ),
            (
                "define.means",
                Intent::DefineAttribute,
                r"^(?P<col>this column|that column|column\s+.+?|the column labeled\s+.+?)\s+(?:means|stands for|is called|is named)\s+(?P<term>.+)$".into(),
            ),
            (
                "sort.verb",
                Intent::SortRows,
                format!(r"^(?:(?:show|display|list|give)\s+(?:me\s+)?)?(?:sort|order|rank|arrange)\s+(?:(?:the|all|all the)\s+)?(?:(?:{ROW_NOUNS}|table|data|them|it)\s+)?by\s+(?P<col>.+?){order}$"),
            ),
            (
                "sort.sorted",
                Intent::SortRows,
                format!(r"^(?:(?:show|display|list|give)\s+(?:me\s+)?)?(?:(?:the|all|all the)\s+)?(?:{ROW_NOUNS}|table|data)\s+(?:sorted|ordered|ranked)\s+by\s+(?P<col>.+?){order}$"),
            ),
            (
                "filter.rows",
                Intent::FilterRows,
                format!(r"^(?:(?:show|display|list|find|get|give|filter|keep|select)\s+(?:me\s+)?)?(?:(?:the|all|all the|only|only the)\s+)?(?:{ROW_NOUNS})\s+(?:where|with|whose|that have|that has|having|in which|for which)\s+(?P<cond>.+)$"),
            ),
            (
                "filter.verb",
                Intent::FilterRows,
                format!(r"^(?:filter|keep|select)\s+(?:(?:the\s+)?(?:{ROW_NOUNS}|table)\s+)?(?:where|to|by|on|for|with)\s+(?P<cond>.+)$"),
            ),
            (
                "filter.which",
                Intent::FilterRows,
                format!(r"^(?:which|what)\s+(?:{ROW_NOUNS})\s+(?:have|has|had)\s+(?P<cond>.+)$"),
            ),
            (
                "aggregate.fn",
                Intent::Aggregate,
                r"^(?:(?:what(?:'s|\s+is|\s+are|\s+was)|tell me|give me|show me|show|compute|calculate|find|get)\s+)?(?:the\s+)?(?P<fn>average|mean|sum|total|minimum|min|lowest|smallest|maximum|max|highest|largest|count|number)(?:\s+(?:value\s+)?(?:of|for|in|across))?(?:\s+(?:the\s+)?(?P<col>.+?))?$".into(),
            ),
            (
                "aggregate.how_many",
                Intent::Aggregate,
                format!(r"^how many(?:\s+(?:{ROW_NOUNS}))?(?:\s+(?:are there|are in (?:the|this) table|do we have|in (?:the|this) table|are listed))?$"),
            ),
            (
                "aggregate.count",
                Intent::Aggregate,
                format!(r"^count(?:\s+(?:the|all|all the))?\s+(?:{ROW_NOUNS})$"),
            ),
            (
                "query.of_row",
                Intent::QueryCell,
                r"^(?:what(?:'s|\s+is|\s+are|\s+was)|tell me|show me|read|give me)\s+(?:the\s+)?(?P<col>.+?)\s+(?:of|for|in|at)\s+(?P<row>this row|that row|this player|that player|this one|this|row\s+\d+)$".into(),
            ),
            (
                "query.cell",
                Intent::QueryCell,
                r"^(?:what(?:'s|\s+is)|read|tell me)\s+(?:me\s+)?(?:the\s+)?(?:value\s+(?:of|in)\s+)?(?:this cell|that cell|this value|this)$".into(),
            ),
        ];
        specs
            .into_iter()
            .map(|(id, intent, src)| Pattern {
                id,
                intent,
                re: Regex::new(&src).unwrap_or_else(|e| panic!("pattern {id}: {e}")),
            })
            .collect()
    })
}

const NEW_TABLE_PHRASES: &[&str] = &[
    "in a new table",
    "as a new table",
    "into a new table",
    "in a separate table",
    "in new table",
    "in a new page",
];

/// Wake-word-aware classifier and slot extractor.
#[derive(Debug, Clone)]
pub struct Grammar {
    wake_word: String,
}

impl Default for Grammar {
    fn default() -> Self {
        Self::new(DEFAULT_WAKE_WORD)
    }
}

struct Normalized {
    text: String,
    new_table: bool,
}

impl Grammar {
    pub fn new(wake_word: &str) -> Self {
        Self {
            wake_word: wake_word.trim().to_lowercase(),
        }
    }

    pub fn wake_word(&self) -> &str {
        &self.wake_word
    }

    fn normalize(&self, text: &str) -> Normalized {
        let mut t = text.to_lowercase().replace(['\u{2019}', '\u{2018}'], "'");
        t = drop_separator_commas(&t);
        let mut t = t
            .trim()
            .trim_end_matches(['.', '?', '!', ' '])
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ");
        if !self.wake_word.is_empty() {
            if let Some(rest) = t.strip_prefix(&self.wake_word) {
                if rest.is_empty() || rest.starts_with(' ') {
                    t = rest.trim_start().to_string();
                }
            }
        }
        for filler in ["please ", "can you ", "could you "] {
            if let Some(rest) = t.strip_prefix(filler) {
                t = rest.to_string();
            }
        }
        if let Some(rest) = t.strip_suffix(" please") {
            t = rest.to_string();
        }
        let mut new_table = false;
        for phrase in NEW_TABLE_PHRASES {
            if let Some(pos) = find_phrase(&t, phrase) {
                new_table = true;
                t = format!("{} {}", &t[..pos], &t[pos + phrase.len()..])
                    .split_whitespace()
                    .collect::<Vec<_>>()
                    .join(" ");
            }
        }
        Normalized { text: t, new_table }
    }

    fn matching(&self, text: &str) -> Option<(&'static Pattern, Normalized)> {
        let norm = self.normalize(text);
        patterns()
            .iter()
            .find(|p| p.re.is_match(&norm.text))
            .map(|p| (p, norm))
    }

    /// The intent of `text` and the id of the pattern that matched.
    pub fn classify(&self, text: &str) -> Result<(Intent, &'static str), CommandError> {
        self.matching(text)
            .map(|(p, _)| (p.intent, p.id))
            .ok_or_else(|| CommandError::NotUnderstood {
                text: text.trim().to_string(),
            })
    }

    /// Fills slots from the surface text; slots it cannot fill are listed as missing.
    pub fn extract(&self, text: &str, intent: Intent) -> IntentFrame {
        let norm = self.normalize(text);
        let mut frame = IntentFrame::new(intent);
        let caps = patterns()
            .iter()
            .filter(|p| p.intent == intent)
            .find_map(|p| p.re.captures(&norm.text));
        if let Some(caps) = caps {
            fill(&mut frame, &caps, norm.new_table);
        } else if matches!(intent, Intent::FilterRows | Intent::SortRows) {
            frame.set(Slot::Target, SlotValue::Target(target(norm.new_table)));
        }
        frame.refresh_missing();
        frame
    }
}

/// Commas are separators except between digits, as in 1,200.
fn drop_separator_commas(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    chars
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let in_number = i > 0
                && chars[i - 1].is_ascii_digit()
                && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit());
            if c == ',' && !in_number {
                ' '
            } else {
                c
            }
        })
        .collect()
}

fn find_phrase(text: &str, phrase: &str) -> Option<usize> {
    let mut start = 0;
    while let Some(off) = text[start..].find(phrase) {
        let pos = start + off;
        let end = pos + phrase.len();
        let before_ok = pos == 0 || text.as_bytes()[pos - 1] == b' ';
        let after_ok = end == text.len() || text.as_bytes()[end] == b' ';
        if before_ok && after_ok {
            return Some(pos);
        }
        start = pos + 1;
    }
    None
}

fn target(new_table: bool) -> TargetMode {
    if new_table {
        TargetMode::NewTable
    } else {
        TargetMode::InPlace
    }
}

fn fill(frame: &mut IntentFrame, caps: &Captures, new_table: bool) {
    let group = |name: &str| caps.name(name).map(|m| m.as_str().trim()).filter(|s| !s.is_empty());
    match frame.intent {
        Intent::FilterRows => {
            frame.set(Slot::Target, SlotValue::Target(target(new_table)));
            if let Some(cond) = group("cond") {
                fill_condition(frame, cond);
            }
        }
        Intent::SortRows => {
            frame.set(Slot::Target, SlotValue::Target(target(new_table)));
            if let Some(col) = group("col") {
                frame.set(Slot::Column, SlotValue::Column(column_ref(col)));
            }
            let order = group("order").map(sort_order).unwrap_or(SortOrder::Asc);
            frame.set(Slot::Order, SlotValue::Order(order));
        }
        Intent::Aggregate => {
            let func = group("fn").map(agg_fn).unwrap_or(AggFn::Count);
            frame.set(Slot::Fn, SlotValue::Fn(func));
            let col = group("col").filter(|c| {
                !(func == AggFn::Count && ROW_NOUNS.split('|').any(|n| strip_article(c) == n))
            });
            match col {
                Some(col) => frame.set(Slot::Column, SlotValue::Column(column_ref(col))),
                // Counting rows does not depend on the column.
                None if func == AggFn::Count => frame.set(Slot::Column, SlotValue::Column(ColumnRef::Index(0))),
                None => {}
            }
        }
        Intent::QueryCell => {
            match group("col") {
                Some(col) => frame.set(Slot::Column, SlotValue::Column(column_ref(col))),
                None => frame.set(Slot::Column, SlotValue::Column(ColumnRef::ByDeixis)),
            }
            let row = match group("row") {
                Some(r) => row_ref(r),
                None => RowRef::ByDeixis,
            };
            frame.set(Slot::Row, SlotValue::Row(row));
        }
        Intent::DefineAttribute => {
            if let Some(term) = group("term") {
                let term = strip_quotes(strip_article(term));
                if !term.is_empty() {
                    frame.set(Slot::Term, SlotValue::Term(term.to_string()));
                }
            }
            if let Some(col) = group("col") {
                frame.set(Slot::Column, SlotValue::Column(column_ref(col)));
            }
        }
    }
}

/// Comparator phrases, matched at word boundaries; the earliest (then longest) wins.
const COMPARATORS: &[(&str, Comparator)] = &[
    ("greater than", Comparator::Gt),
    ("more than", Comparator::Gt),
    ("over", Comparator::Gt),
    ("above", Comparator::Gt),
    ("exceeds", Comparator::Gt),
    ("less than", Comparator::Lt),
    ("fewer than", Comparator::Lt),
    ("under", Comparator::Lt),
    ("below", Comparator::Lt),
    ("equal to", Comparator::Eq),
    ("equals", Comparator::Eq),
    ("is", Comparator::Eq),
];

fn fill_condition(frame: &mut IntentFrame, cond: &str) {
    let words: Vec<&str> = cond.split(' ').collect();
    let mut found: Option<(usize, usize, Comparator)> = None;
    for i in 0..words.len() {
        // Copulas before a comparator belong to the comparator ("is greater than").
        let mut best: Option<(usize, Comparator)> = None;
        for skip in [0usize, 1] {
            if skip == 1 && !matches!(words[i], "is" | "are" | "was" | "were") {
                continue;
            }
            for (phrase, cmp) in COMPARATORS {
                let n = phrase.split(' ').count();
                let start = i + skip;
                if start + n <= words.len() && words[start..start + n].join(" ") == *phrase {
                    let len = skip + n;
                    if best.is_none_or(|(l, _)| len > l) {
                        best = Some((len, *cmp));
                    }
                }
            }
        }
        if let Some((len, cmp)) = best {
            found = Some((i, len, cmp));
            break;
        }
    }
    match found {
        Some((i, len, cmp)) => {
            let col = words[..i].join(" ");
            let lit = words[i + len..].join(" ");
            if !col.trim().is_empty() {
                frame.set(Slot::Column, SlotValue::Column(column_ref(&col)));
            }
            frame.set(Slot::Cmp, SlotValue::Comparator(cmp));
            let lit = lit.trim();
            if !lit.is_empty() {
                frame.set(Slot::Literal, SlotValue::Literal(literal_ref(lit)));
            }
        }
        None => frame.set(Slot::Column, SlotValue::Column(column_ref(cond))),
    }
}

const COLUMN_DEIXIS: &[&str] = &["this column", "that column", "this", "that", "this one", "here", "this header"];
const LITERAL_DEIXIS: &[&str] = &[
    "this",
    "that",
    "this value",
    "that value",
    "this one",
    "this number",
    "that number",
    "this cell",
    "it",
];

fn strip_article(s: &str) -> &str {
    s.strip_prefix("the ").unwrap_or(s).trim()
}

fn strip_quotes(s: &str) -> &str {
    s.trim_matches(|c| c == '"' || c == '\'' || c == '\u{201c}' || c == '\u{201d}')
        .trim()
}

fn column_ref(raw: &str) -> ColumnRef {
    let s = strip_article(raw.trim());
    if COLUMN_DEIXIS.contains(&s) {
        return ColumnRef::ByDeixis;
    }
    let s = s
        .strip_prefix("column labeled ")
        .or_else(|| s.strip_prefix("column labelled "))
        .or_else(|| s.strip_prefix("column named "))
        .or_else(|| s.strip_prefix("column "))
        .unwrap_or(s);
    let s = s.strip_suffix(" column").unwrap_or(s);
    let s = s.strip_suffix(" values").unwrap_or(s);
    ColumnRef::ByTerm(strip_quotes(s).to_string())
}

fn literal_ref(raw: &str) -> LiteralRef {
    let s = raw.trim();
    if LITERAL_DEIXIS.contains(&s) {
        return LiteralRef::ByDeixis;
    }
    match parse_number(s) {
        Some(n) => LiteralRef::Value(Literal::Number(n)),
        None => LiteralRef::Value(Literal::Text(strip_quotes(s).to_string())),
    }
}

fn row_ref(raw: &str) -> RowRef {
    raw.strip_prefix("row ")
        .and_then(|n| n.trim().parse::<usize>().ok())
        .filter(|n| *n >= 1)
        .map(|n| RowRef::Index(n - 1))
        .unwrap_or(RowRef::ByDeixis)
}

fn sort_order(word: &str) -> SortOrder {
    let w = word.trim_start_matches("from ").trim();
    if w.starts_with("desc")
        || w == "decreasing"
        || ["highest", "largest", "biggest", "most"].iter().any(|p| w.starts_with(p))
    {
        SortOrder::Desc
    } else {
        SortOrder::Asc
    }
}

fn agg_fn(word: &str) -> AggFn {
    match word {
        "average" | "mean" => AggFn::Average,
        "sum" | "total" => AggFn::Sum,
        "minimum" | "min" | "lowest" | "smallest" => AggFn::Min,
        "maximum" | "max" | "highest" | "largest" => AggFn::Max,
        _ => AggFn::Count,
    }
}

/// [`Grammar::classify`] with the default wake word.
pub fn classify_intent(text: &str) -> Result<(Intent, &'static str), CommandError> {
    Grammar::default().classify(text)
}

/// [`Grammar::extract`] with the default wake word.
pub fn extract_slots(text: &str, intent: Intent) -> IntentFrame {
    Grammar::default().extract(text, intent)
}
