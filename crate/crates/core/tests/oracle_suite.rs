mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use tabletalk::command::{Action, Command, Comparator, Literal, SortOrder, TargetMode};
use tabletalk::engine::{execute, Outcome, ResultTable};
use tabletalk::page_model::{parse_page, PageSnapshot, TableModel};
use tabletalk::responder::render_result_page;
use tabletalk::vocabulary::SharedDictionary;

use common::*;

fn table_of(html: &str) -> TableModel {
    let snap = PageSnapshot::new("suite", "http://suite.test/", html, 0).unwrap();
    parse_page(&snap).tables.into_iter().next().expect("table")
}

fn run(table: &TableModel, action: Action) -> ResultTable {
    let command = Command {
        table_id: table.table_id.clone(),
        action,
    };
    match execute(&command, table, &SharedDictionary::default(), "suite.test").unwrap() {
        Outcome::ResultTable(rt) => rt,
        other => panic!("expected rows, got {other:?}"),
    }
}

fn sort(column: usize, order: SortOrder) -> Action {
    Action::Sort {
        column,
        order,
        target: TargetMode::NewTable,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn engine_agrees_with_oracles(seed in any::<u64>()) {
        let table = random_table(&mut ChaCha20Rng::seed_from_u64(seed));
        let checked = check_against_oracles(&table.to_html());
        prop_assert!(checked.is_ok(), "{}", checked.unwrap_err());
    }

    #[test]
    fn sort_is_a_permutation_and_idempotent(seed in any::<u64>(), desc in any::<bool>()) {
        let generated = random_table(&mut ChaCha20Rng::seed_from_u64(seed));
        let table = table_of(&generated.to_html());
        let order = if desc { SortOrder::Desc } else { SortOrder::Asc };
        for col in 0..table.column_count() {
            let once = run(&table, sort(col, order));
            let mut seen = once.source_rows.clone();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..table.row_count()).collect::<Vec<_>>());

            let page = render_result_page(&once);
            let resorted = run(&table_of(&page), sort(col, order));
            prop_assert_eq!(&resorted.rows, &once.rows);
        }
    }

    #[test]
    fn filters_partition_numeric_rows(seed in any::<u64>(), pick in 0usize..100) {
        let generated = random_table(&mut ChaCha20Rng::seed_from_u64(seed));
        let table = table_of(&generated.to_html());
        for col in (0..table.column_count()).filter(|&c| table.columns[c].is_numeric()) {
            let values: Vec<_> = table.rows.iter().filter_map(|r| r[col].numeric_value).collect();
            if values.is_empty() {
                continue;
            }
            let literal = Literal::Number(values[pick % values.len()]);
            let filter = |cmp| run(&table, Action::Filter { column: col, cmp, literal: literal.clone(), target: TargetMode::NewTable });
            let (gt, lt, eq) = (filter(Comparator::Gt), filter(Comparator::Lt), filter(Comparator::Eq));
            prop_assert!(!eq.source_rows.is_empty());
            let mut all: Vec<usize> = gt.source_rows.iter().chain(&lt.source_rows).chain(&eq.source_rows).copied().collect();
            all.sort_unstable();
            let numeric_rows: Vec<usize> = (0..table.row_count()).filter(|&r| table.rows[r][col].numeric_value.is_some()).collect();
            prop_assert_eq!(all, numeric_rows);
            prop_assert_eq!(gt.skipped, table.row_count() - values.len());
        }
    }
}

#[test]
fn roster_aggregates_match_hand_counts() {
    let html = fixture("roster.html");
    let grid = tbody_rows(&html);
    assert_eq!(oracle_aggregate(&grid, 4, OracleAgg::Sum), Some((65.0, 0)));
    assert_eq!(oracle_aggregate(&grid, 3, OracleAgg::Sum), Some((75.0, 0)));
    assert_eq!(oracle_aggregate(&grid, 4, OracleAgg::Average), Some((3.25, 0)));
    assert_eq!(check_against_oracles(&html).map(|n| n > 0), Ok(true));
}

#[test]
fn column_of_placeholders_is_text() {
    let html = "<table><tr><th>Who</th><th>Score</th></tr>\
                <tr><td>a</td><td>DNP</td></tr><tr><td>b</td><td>-</td></tr></table>";
    assert!(!oracle_is_numeric_column(&["DNP", "-"]));
    let table = table_of(html);
    assert!(!table.columns[1].is_numeric());
    let html = format!("<html><body><table><thead><tr><th>Who</th><th>Score</th></tr></thead><tbody>{}</tbody></table></body></html>",
        "<tr><td>a</td><td>DNP</td></tr><tr><td>b</td><td>-</td></tr>");
    check_against_oracles(&html).unwrap();
}

#[test]
fn thousands_and_percent_cells() {
    let html = "<html><body><table><thead><tr><th>City</th><th>Pop</th><th>Share</th></tr></thead><tbody>\
        <tr><td>Avon</td><td>1,204,000</td><td>12.5%</td></tr>\
        <tr><td>Brill</td><td>98,100</td><td>3%</td></tr>\
        <tr><td>Cray</td><td>DNP</td><td>0.25%</td></tr>\
        </tbody></table></body></html>";
    assert_eq!(oracle_number("1,204,000"), Some(1_204_000.0));
    assert_eq!(oracle_number("12.5%"), Some(0.125));
    check_against_oracles(html).unwrap();
}
