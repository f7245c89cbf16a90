use serde::Serialize;
use seqvcg::rational::format_rational;
use seqvcg::sequential::RunReport;

use crate::config::ScenarioConfig;
use crate::{CliError, Format};

pub const CSV_COLUMNS: [&str; 6] = ["ordering", "player", "announced", "tax", "v_utility", "u_utility"];

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PlayerRow {
    pub player: String,
    pub strategy: String,
    pub true_type: String,
    pub announced: String,
    pub transfer: String,
    pub tax: String,
    pub v_utility: String,
    pub u_utility: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunView {
    pub ordering: String,
    pub decision: String,
    pub players: Vec<PlayerRow>,
}

impl RunView {
    pub fn new(config: &ScenarioConfig, run: &RunReport) -> Self {
        let problem = config.mechanism.problem();
        let players = problem
            .player_ids()
            .map(|p| {
                let i = p.index();
                PlayerRow {
                    player: config.label(p).to_string(),
                    strategy: config.strategy_names[i].clone(),
                    true_type: config.truth.get(p).to_string(),
                    announced: run.announced.get(p).to_string(),
                    transfer: format_rational(&run.outcome.transfers[i]),
                    tax: format_rational(&run.outcome.taxes[i]),
                    v_utility: format_rational(&run.outcome.valuation_utility[i]),
                    u_utility: format_rational(&run.outcome.full_utility[i]),
                }
            })
            .collect();
        RunView {
            ordering: config.ordering_label(&run.ordering),
            decision: problem.decision_label(run.outcome.decision).to_string(),
            players,
        }
    }
}

/// Left-aligned columns separated by two spaces.
pub fn aligned(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        padded.join("  ").trim_end().to_string()
    };
    let mut out = line(headers.to_vec());
    out.push('\n');
    for row in rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

pub fn csv_string(headers: &[&str], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(headers)?;
    for row in rows {
        writer.write_record(row)?;
    }
    let bytes = writer.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn render_runs(runs: &[RunView], format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(runs)? + "\n"),
        Format::Csv => {
            let rows: Vec<Vec<String>> = runs
                .iter()
                .flat_map(|r| {
                    r.players.iter().map(|p| {
                        vec![
                            r.ordering.clone(),
                            p.player.clone(),
                            p.announced.clone(),
                            p.tax.clone(),
                            p.v_utility.clone(),
                            p.u_utility.clone(),
                        ]
                    })
                })
                .collect();
            csv_string(&CSV_COLUMNS, &rows)
        }
        Format::Text => {
            let headers =
                ["ordering", "decision", "player", "strategy", "type", "announced", "tax", "v_utility", "u_utility"];
            let rows: Vec<Vec<String>> = runs
                .iter()
                .flat_map(|r| {
                    r.players.iter().map(|p| {
                        vec![
                            r.ordering.clone(),
                            r.decision.clone(),
                            p.player.clone(),
                            p.strategy.clone(),
                            p.true_type.clone(),
                            p.announced.clone(),
                            p.tax.clone(),
                            p.v_utility.clone(),
                            p.u_utility.clone(),
                        ]
                    })
                })
                .collect();
            Ok(aligned(&headers, &rows))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alignment_pads_columns() {
        let out = aligned(&["a", "bbb"], &[vec!["xyz".into(), "1".into()]]);
        assert_eq!(out, "a    bbb\nxyz  1\n");
    }

    #[test]
    fn csv_quotes_vectors() {
        let out = csv_string(&["announced"], &[vec!["(6,9)".into()]]).unwrap();
        assert_eq!(out, "announced\n\"(6,9)\"\n");
    }
}
