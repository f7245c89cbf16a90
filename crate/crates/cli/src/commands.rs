use clap::ValueEnum;
use serde::Serialize;
use seqvcg::mechanism::{self, construct_truthfulness_witness, ValuationQuadruple};
use seqvcg::oracle::{exhaustive_dominance, verify_projection_equivalence, verify_tax_minimality, Verdict, Violation};
use seqvcg::problem::Check;
use seqvcg::rational::format_rational;
use seqvcg::sequential::{classify_by_preservation, run_sequential, DominanceVerdict, DominanceWitness};
use seqvcg::{Error, Rational, TypeProfile, TypeValue};

use crate::config::{OrderingSelection, ScenarioConfig};
use crate::render::{aligned, csv_string, render_runs, RunView};
use crate::{CliError, CommandOutput, Format, Status};

pub fn cmd_run(
    config: &ScenarioConfig,
    orderings: Option<&OrderingSelection>,
    format: Format,
) -> Result<CommandOutput, CliError> {
    let views = config
        .selected_orderings(orderings)?
        .iter()
        .map(|o| {
            run_sequential(&config.mechanism, o, &config.strategies, &config.truth).map(|r| RunView::new(config, &r))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CommandOutput::ok(render_runs(&views, format)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ClaimKind {
    Dominance,
    TaxMinimality,
    StrategyProof,
    ProjectionEquivalence,
}

#[derive(Clone, Debug, Serialize)]
struct CheckLine {
    ordering: String,
    player: String,
    holds: bool,
    detail: String,
}

#[derive(Clone, Debug, Serialize)]
struct VerifyReport {
    claim: String,
    grid_profiles: String,
    holds: bool,
    checks: Vec<CheckLine>,
}

fn profile_text(config: &ScenarioConfig, profile: &TypeProfile) -> String {
    config
        .labels
        .iter()
        .zip(profile.values())
        .map(|(l, v)| format!("{l}={v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn dominance_text(config: &ScenarioConfig, verdict: &DominanceVerdict) -> String {
    match verdict {
        DominanceVerdict::NotDominant(DominanceWitness {
            player,
            profile,
            announcement,
            better,
            strategy_utility,
            better_utility,
            ..
        }) => format!(
            "NotDominant: at true types [{}] player {} announces {} with utility {}, but announcing {} yields {}",
            profile_text(config, profile),
            config.label(*player),
            announcement,
            format_rational(strategy_utility),
            better,
            format_rational(better_utility)
        ),
        DominanceVerdict::LemmaInconclusive { profile, announcement } => format!(
            "Inconclusive: announcing {announcement} at [{}] changes the decision without changing welfare",
            profile_text(config, profile)
        ),
        other => other.to_string(),
    }
}

pub fn cmd_verify(
    config: &ScenarioConfig,
    claim: ClaimKind,
    orderings: Option<&OrderingSelection>,
    step: Option<&Rational>,
    cap: Option<u128>,
    format: Format,
) -> Result<CommandOutput, CliError> {
    let spec = config.grid_spec(step, cap)?;
    let mech = &config.mechanism;
    let mut checks = Vec::new();
    match claim {
        ClaimKind::Dominance | ClaimKind::TaxMinimality => {
            for ordering in config.selected_orderings(orderings)? {
                for player in mech.problem().player_ids() {
                    let strategy = &config.strategies[player.index()];
                    let (holds, detail) = if claim == ClaimKind::Dominance {
                        let lemma = classify_by_preservation(mech, strategy, &ordering, player, spec.grid())?;
                        let exhaustive = exhaustive_dominance(mech, strategy, &ordering, player, &spec)?;
                        let contradiction = matches!(
                            (&lemma, exhaustive.is_dominant()),
                            (DominanceVerdict::Dominant { .. }, false) | (DominanceVerdict::NotDominant(_), true)
                        );
                        let mut detail = format!(
                            "{}; exhaustive check: {}",
                            dominance_text(config, &lemma),
                            dominance_text(config, &exhaustive)
                        );
                        if contradiction {
                            detail.push_str("; the two checks disagree");
                        }
                        (exhaustive.is_dominant() && !contradiction, detail)
                    } else {
                        let report = verify_tax_minimality(mech, strategy, &ordering, player, &spec)?;
                        let detail = match &report.verdict {
                            Verdict::Fails(Violation::Tax(w)) => format!(
                                "fails at true types [{}]: {} announces {} leaving {} a transfer of {}, \
                                 but announcing {} keeps the decision and gives {}",
                                profile_text(config, &w.profile),
                                config.label(w.deviator),
                                w.announcement,
                                config.label(w.target),
                                format_rational(&w.announcement_transfer),
                                w.better,
                                format_rational(&w.better_transfer)
                            ),
                            _ => report.to_string(),
                        };
                        (report.holds(), detail)
                    };
                    checks.push(CheckLine {
                        ordering: config.ordering_label(&ordering),
                        player: config.label(player).to_string(),
                        holds,
                        detail,
                    });
                }
            }
        }
        ClaimKind::StrategyProof => {
            let check = mechanism::is_strategy_proof(mech, spec.grid())?;
            let detail = match &check {
                Check::Holds { profiles } => format!("strategy-proof on {profiles} profiles"),
                Check::Fails(w) => format!(
                    "not strategy-proof: at true types [{}] player {} gains by announcing {} ({} instead of {})",
                    profile_text(config, &w.profile),
                    config.label(w.player),
                    w.deviation,
                    format_rational(&w.deviation_utility),
                    format_rational(&w.truthful_utility)
                ),
            };
            checks.push(CheckLine { ordering: "-".into(), player: "all".into(), holds: check.holds(), detail });
        }
        ClaimKind::ProjectionEquivalence => {
            let report = verify_projection_equivalence(mech, &spec)?;
            let sp = report.strategy_proof.holds();
            let dominant: Vec<String> = report
                .projections
                .iter()
                .zip(&config.labels)
                .map(|(v, l)| format!("{l}: {}", if v.is_dominant() { "dominant" } else { "not dominant" }))
                .collect();
            let detail = format!(
                "{}; direct rule strategy-proof: {sp}; truthful projections: {}",
                report.report,
                dominant.join(", ")
            );
            checks.push(CheckLine { ordering: "-".into(), player: "all".into(), holds: report.report.holds(), detail });
        }
    }
    let holds = checks.iter().all(|c| c.holds);
    let report = VerifyReport {
        claim: claim.to_possible_value().expect("named claim").get_name().to_string(),
        grid_profiles: spec.profile_count().to_string(),
        holds,
        checks,
    };
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&report)? + "\n",
        Format::Csv => {
            let rows: Vec<Vec<String>> = report
                .checks
                .iter()
                .map(|c| vec![report.claim.clone(), c.ordering.clone(), c.player.clone(), c.holds.to_string(), c.detail.clone()])
                .collect();
            csv_string(&["claim", "ordering", "player", "holds", "detail"], &rows)?
        }
        Format::Text => {
            let rows: Vec<Vec<String>> = report
                .checks
                .iter()
                .map(|c| vec![c.ordering.clone(), c.player.clone(), if c.holds { "holds" } else { "FAILS" }.into(), c.detail.clone()])
                .collect();
            format!(
                "claim: {} on {} grid profiles\n{}verdict: {}\n",
                report.claim,
                report.grid_profiles,
                aligned(&["ordering", "player", "result", "detail"], &rows),
                if holds { "holds" } else { "refuted" }
            )
        }
    };
    Ok(CommandOutput { text, status: if holds { Status::Ok } else { Status::Refuted } })
}

#[derive(Clone, Debug, Serialize)]
struct WitnessView {
    players: usize,
    q: String,
    slack: String,
    epsilon: String,
    partner_value_d: String,
    partner_value_alt: String,
    efficient: bool,
    truthful_utility: String,
    deviation_utility: String,
    utility_loss: String,
    sound: bool,
}

/// Builds the adversarial valuation for the deviator's four values
/// `v(d,θ)`, `v(d,θ')`, `v(d',θ)`, `v(d',θ')`.
pub fn cmd_witness(
    players: usize,
    truth: TypeValue,
    deviation: TypeValue,
    values: ValuationQuadruple,
    format: Format,
) -> Result<CommandOutput, CliError> {
    let w = match construct_truthfulness_witness(players, truth, deviation, &values) {
        Ok(w) => w,
        Err(Error::PreconditionViolated(reason)) => {
            return Ok(CommandOutput {
                text: format!(
                    "no construction exists: {reason}\n\
                     whatever the other players' valuations, truth-telling cannot be made strictly better than this deviation\n"
                ),
                status: Status::Refuted,
            })
        }
        Err(e) => return Err(e.into()),
    };
    let view = WitnessView {
        players,
        q: format_rational(&w.q),
        slack: format_rational(&w.slack),
        epsilon: format_rational(&w.epsilon),
        partner_value_d: format_rational(&w.partner_value_d),
        partner_value_alt: format_rational(&w.partner_value_alt),
        efficient: w.efficiency.holds(),
        truthful_utility: format_rational(&w.truthful_utility),
        deviation_utility: format_rational(&w.deviation_utility),
        utility_loss: format_rational(&w.utility_loss()),
        sound: w.is_sound(),
    };
    let status = if view.sound { Status::Ok } else { Status::Refuted };
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&view)? + "\n",
        Format::Csv => {
            let rows = vec![vec![
                view.q.clone(),
                view.slack.clone(),
                view.epsilon.clone(),
                view.partner_value_d.clone(),
                view.partner_value_alt.clone(),
                view.efficient.to_string(),
                view.utility_loss.clone(),
            ]];
            csv_string(&["q", "slack", "epsilon", "v_j_d", "v_j_alt", "efficient", "utility_loss"], &rows)?
        }
        Format::Text => format!(
            "players: {players} (player 1 deviates, player 2 carries the constructed valuation)\n\
             q = v(d',θ) - v(d,θ) = {}\n\
             slack = {}\n\
             epsilon = slack/2 = {}\n\
             constructed v_j(d) = q + epsilon = {}, v_j(d') = {}\n\
             decision rule efficient on both profiles: {}\n\
             deviator utility: truthful {} vs deviating {} (loss {}, expected epsilon)\n\
             construction sound: {}\n",
            view.q,
            view.slack,
            view.epsilon,
            view.partner_value_d,
            view.partner_value_alt,
            view.efficient,
            view.truthful_utility,
            view.deviation_utility,
            view.utility_loss,
            view.sound
        ),
    };
    Ok(CommandOutput { text, status })
}
