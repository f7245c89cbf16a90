//! Reproduction of the published tables against the values in
//! `data/reference_tables.toml`.

use serde::{Deserialize, Serialize};
use seqvcg::rational::format_rational;
use seqvcg::sequential::run_sequential;
use seqvcg::{Decision, Rational, TypeProfile};

use crate::config::{parse_ordering, rational_value, ScenarioConfig};
use crate::render::{aligned, csv_string};
use crate::{CliError, CommandOutput, Format, Status};

pub const REFERENCE: &str = include_str!("../data/reference_tables.toml");

/// The built-in scenario files, by name.
pub const SCENARIOS: [(&str, &str); 4] = [
    ("example1", include_str!("../data/example1.toml")),
    ("example2", include_str!("../data/example2.toml")),
    ("example3", include_str!("../data/example3.toml")),
    ("example4", include_str!("../data/example4.toml")),
];

pub fn builtin_scenario(name: &str) -> Result<ScenarioConfig, CliError> {
    let (_, text) = SCENARIOS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| CliError::Config(format!("unknown built-in scenario {name:?}")))?;
    ScenarioConfig::parse(text)
}

#[derive(Debug, Deserialize)]
struct Reference {
    simultaneous: Vec<SimultaneousTable>,
    sequential: Vec<SequentialTable>,
}

#[derive(Debug, Deserialize)]
struct SimultaneousTable {
    id: String,
    scenario: String,
    caption: String,
    players: Vec<String>,
    tax: Vec<toml::Value>,
    cost_share: Option<Vec<toml::Value>>,
    utility: Vec<toml::Value>,
    utility_column: UtilityColumn,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
enum UtilityColumn {
    VUtility,
    UUtility,
}

#[derive(Debug, Deserialize)]
struct SequentialTable {
    id: String,
    scenario: String,
    caption: String,
    rows: Vec<SequentialRow>,
}

#[derive(Debug, Deserialize)]
struct SequentialRow {
    ordering: String,
    taxes: Vec<toml::Value>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Cell {
    pub row: String,
    pub column: String,
    #[serde(serialize_with = "as_text")]
    pub expected: Rational,
    #[serde(serialize_with = "as_text")]
    pub computed: Rational,
}

fn as_text<S: serde::Serializer>(x: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_rational(x))
}

impl Cell {
    pub fn matches(&self) -> bool {
        self.expected == self.computed
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TableResult {
    pub id: String,
    pub caption: String,
    pub cells: Vec<Cell>,
}

impl TableResult {
    pub fn all_match(&self) -> bool {
        self.cells.iter().all(Cell::matches)
    }

    pub fn mismatches(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(|c| !c.matches())
    }
}

pub const TABLE_IDS: [&str; 8] = ["1", "1a", "2", "2a", "3", "3a", "4", "4a"];

fn values(list: &[toml::Value], field: &str) -> Result<Vec<Rational>, CliError> {
    list.iter().map(|v| rational_value(v, field)).collect()
}

fn simultaneous(table: &SimultaneousTable) -> Result<TableResult, CliError> {
    let config = builtin_scenario(&table.scenario)?;
    let mech = &config.mechanism;
    let truth: &TypeProfile = &config.truth;
    let outcome = mech.outcome(truth, truth)?;
    let field = |name: &str| format!("table {} {name}", table.id);
    let tax = values(&table.tax, &field("tax"))?;
    let utility = values(&table.utility, &field("utility"))?;
    let share = table.cost_share.as_ref().map(|c| values(c, &field("cost_share"))).transpose()?;
    let mut cells = Vec::new();
    for (i, label) in table.players.iter().enumerate() {
        let player = config
            .labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| CliError::Config(format!("{}: unknown player {label}", field("players"))))?;
        cells.push(Cell {
            row: label.clone(),
            column: "tax".into(),
            expected: tax[i].clone(),
            computed: outcome.taxes[player].clone(),
        });
        if let Some(share) = &share {
            // the cost share actually paid: c/n when the project is built
            let seqvcg::Valuation::PublicProject { cost_share } = mech.problem().valuation() else {
                return Err(CliError::Config(format!("{}: scenario has no cost share", field("cost_share"))));
            };
            let paid = if outcome.decision == Decision::new(1) { cost_share.clone() } else { Rational::from_integer(0.into()) };
            cells.push(Cell { row: label.clone(), column: "cost_share".into(), expected: share[i].clone(), computed: paid });
        }
        let (column, computed) = match table.utility_column {
            UtilityColumn::VUtility => ("utility (v_utility)", &outcome.valuation_utility[player]),
            UtilityColumn::UUtility => ("utility (u_utility)", &outcome.full_utility[player]),
        };
        cells.push(Cell { row: label.clone(), column: column.into(), expected: utility[i].clone(), computed: computed.clone() });
    }
    Ok(TableResult { id: table.id.clone(), caption: table.caption.clone(), cells })
}

fn sequential(table: &SequentialTable) -> Result<TableResult, CliError> {
    let config = builtin_scenario(&table.scenario)?;
    let mut cells = Vec::new();
    for row in &table.rows {
        let ordering = parse_ordering(&row.ordering, &config.labels)?;
        let run = run_sequential(&config.mechanism, &ordering, &config.strategies, &config.truth)?;
        let expected = values(&row.taxes, &format!("table {} row {}", table.id, row.ordering))?;
        for (player, label) in config.labels.iter().enumerate() {
            cells.push(Cell {
                row: row.ordering.clone(),
                column: format!("t_{label}"),
                expected: expected[player].clone(),
                computed: run.outcome.taxes[player].clone(),
            });
        }
    }
    Ok(TableResult { id: table.id.clone(), caption: table.caption.clone(), cells })
}

/// Recomputes the selected tables (all when `filter` is `None`), in publication order.
pub fn reproduce(filter: Option<&str>) -> Result<Vec<TableResult>, CliError> {
    if let Some(id) = filter {
        if !TABLE_IDS.contains(&id) {
            return Err(CliError::Config(format!("unknown table {id:?}; expected one of {}", TABLE_IDS.join(", "))));
        }
    }
    let reference: Reference = toml::from_str(REFERENCE).map_err(|e| CliError::Config(e.to_string()))?;
    let mut results = Vec::new();
    for id in TABLE_IDS.iter().filter(|id| filter.is_none_or(|f| f == **id)) {
        if let Some(t) = reference.simultaneous.iter().find(|t| t.id == *id) {
            results.push(simultaneous(t)?);
        } else if let Some(t) = reference.sequential.iter().find(|t| t.id == *id) {
            results.push(sequential(t)?);
        } else {
            return Err(CliError::Config(format!("reference data has no table {id}")));
        }
    }
    Ok(results)
}

fn marker(cell: &Cell) -> String {
    if cell.matches() {
        "ok".into()
    } else {
        "MISMATCH".into()
    }
}

pub fn render_tables(results: &[TableResult], format: Format) -> Result<String, CliError> {
    let headers = ["row", "column", "expected", "computed", "match"];
    let rows = |t: &TableResult| -> Vec<Vec<String>> {
        t.cells
            .iter()
            .map(|c| {
                vec![c.row.clone(), c.column.clone(), format_rational(&c.expected), format_rational(&c.computed), marker(c)]
            })
            .collect()
    };
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(results)? + "\n"),
        Format::Csv => {
            let blocks = results
                .iter()
                .map(|t| {
                    let with_id: Vec<Vec<String>> =
                        rows(t).into_iter().map(|r| std::iter::once(t.id.clone()).chain(r).collect()).collect();
                    csv_string(&["table", "row", "column", "expected", "computed", "match"], &with_id)
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(blocks.join("\n"))
        }
        Format::Text => {
            let mut out = String::new();
            for t in results {
                let status = if t.all_match() { "all cells match".to_string() } else {
                    format!("{} mismatching cell(s)", t.mismatches().count())
                };
                out.push_str(&format!("Table {}: {} ({status})\n", t.id, t.caption));
                out.push_str(&aligned(&headers, &rows(t)));
                out.push('\n');
            }
            let total: usize = results.iter().map(|t| t.cells.len()).sum();
            let bad: usize = results.iter().map(|t| t.mismatches().count()).sum();
            out.push_str(&format!("{} of {total} cells match\n", total - bad));
            Ok(out)
        }
    }
}

pub fn cmd_tables(filter: Option<&str>, format: Format) -> Result<CommandOutput, CliError> {
    let results = reproduce(filter)?;
    let status = if results.iter().all(TableResult::all_match) { Status::Ok } else { Status::Refuted };
    Ok(CommandOutput { text: render_tables(&results, format)?, status })
}
