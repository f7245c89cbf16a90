//! Scenario files.
//!
//! A scenario is a TOML document with top-level settings and one
//! `[player.<label>]` table per player, in play-label order:
//!
//! ```toml
//! scenario = "public_project_1"   # public_project_2 | choose_project | explicit_table
//! cost = 300
//! ordering = "all"                # or "A C B", or a list of such strings
//!
//! [player.A]
//! type = 60
//! strategy = "dominant"           # truth | dominant | constant:<value>
//!
//! [grid]
//! points = [0, 60, 70, 250, 300]  # or: step = 50
//! ```
//!
//! Numbers may be TOML integers, decimals, or strings holding an integer, a
//! decimal or a fraction `p/q`. Vector types are arrays (`type = [6, 9]`).

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;
use serde::Deserialize;
use seqvcg::oracle::{box_points, scalar_points, GridSpec};
use seqvcg::problem::DEFAULT_PROFILE_CAP;
use seqvcg::rational::{int, parse_rational};
use seqvcg::scenarios::{
    build_choose_project, build_public_project_1, build_public_project_2, ChooseProjectParams,
    PublicProject1Params, PublicProject2Params,
};
use seqvcg::sequential::DEFAULT_ORDERING_CAP;
use seqvcg::{
    Decision, DecisionProblem, DecisionRule, Grid, Mechanism, Ordering, PlayerId, Rational, SequentialStrategy,
    TypeProfile, TypeSpace, TypeValue, Valuation,
};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    #[serde(rename = "public_project_1")]
    PublicProject1,
    #[serde(rename = "public_project_2")]
    PublicProject2,
    ChooseProject,
    ExplicitTable,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Transfers {
    #[default]
    Clarke,
    None,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: ScenarioKind,
    cost: Option<toml::Value>,
    #[serde(default)]
    transfers: Transfers,
    ordering: Option<toml::Value>,
    decisions: Option<Vec<String>>,
    #[serde(default)]
    table: Vec<RawTableRow>,
    grid: Option<RawGrid>,
    player: IndexMap<String, RawPlayer>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlayer {
    #[serde(rename = "type")]
    ty: toml::Value,
    bound: Option<toml::Value>,
    strategy: Option<String>,
    grid: Option<toml::Value>,
    types: Option<Vec<toml::Value>>,
    values: Option<Vec<Vec<toml::Value>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    points: Option<Vec<toml::Value>>,
    step: Option<toml::Value>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTableRow {
    profile: Vec<toml::Value>,
    decision: String,
}

/// Which orderings a command should use.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OrderingSelection {
    All,
    Listed(Vec<Ordering>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum GridSource {
    PerPlayer(Vec<Vec<TypeValue>>),
    Step(Rational),
    Default,
}

/// A fully validated scenario.
#[derive(Clone, Debug)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub labels: Vec<String>,
    pub mechanism: Mechanism,
    pub truth: TypeProfile,
    pub strategies: Vec<SequentialStrategy>,
    pub strategy_names: Vec<String>,
    pub orderings: OrderingSelection,
    cost: Option<Rational>,
    scalar_bounds: Option<Vec<Rational>>,
    vector_bounds: Option<Vec<Vec<Rational>>>,
    grid: GridSource,
}

fn field_err(field: impl fmt::Display, message: impl fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {message}"))
}

pub fn rational_value(value: &toml::Value, field: &str) -> Result<Rational, CliError> {
    let text = match value {
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        toml::Value::String(s) => s.clone(),
        other => return Err(field_err(field, format!("expected a number, found {}", other.type_str()))),
    };
    parse_rational(&text).map_err(|e| field_err(field, e))
}

fn type_value(value: &toml::Value, field: &str) -> Result<TypeValue, CliError> {
    match value {
        toml::Value::Array(items) => Ok(TypeValue::Vector(
            items
                .iter()
                .enumerate()
                .map(|(k, x)| rational_value(x, &format!("{field}[{k}]")))
                .collect::<Result<_, _>>()?,
        )),
        toml::Value::String(s) if s.trim_start().starts_with('(') => {
            parse_type_value(s).map_err(|e| field_err(field, e))
        }
        other => rational_value(other, field).map(TypeValue::Scalar),
    }
}

/// Parses `60`, `1/2`, `0.25` or a vector `(6,9)`.
pub fn parse_type_value(text: &str) -> Result<TypeValue, CliError> {
    let t = text.trim();
    if let Some(inner) = t.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
        return inner
            .split(',')
            .map(|x| parse_rational(x).map_err(|e| CliError::Config(e.to_string())))
            .collect::<Result<Vec<_>, _>>()
            .map(TypeValue::Vector);
    }
    parse_rational(t).map(TypeValue::Scalar).map_err(|e| CliError::Config(e.to_string()))
}

fn scalar(value: &TypeValue, field: &str) -> Result<Rational, CliError> {
    value.as_scalar().cloned().ok_or_else(|| field_err(field, "expected a scalar"))
}

fn vector(value: &TypeValue, field: &str) -> Result<Vec<Rational>, CliError> {
    value.as_vector().map(<[Rational]>::to_vec).ok_or_else(|| field_err(field, "expected an array"))
}

/// Parses an ordering such as `A C B`, `A,C,B` or `ACB` against player labels.
pub fn parse_ordering(text: &str, labels: &[String]) -> Result<Ordering, CliError> {
    let mut tokens: Vec<&str> = text.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).collect();
    if tokens.len() == 1 && labels.len() > 1 && labels.iter().all(|l| l.chars().count() == 1) {
        tokens = tokens[0].char_indices().map(|(k, c)| &tokens[0][k..k + c.len_utf8()]).collect();
    }
    let players = tokens
        .iter()
        .map(|t| {
            labels
                .iter()
                .position(|l| l == t)
                .map(PlayerId::new)
                .ok_or_else(|| CliError::Config(format!("ordering {text:?}: unknown player {t:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if players.len() != labels.len() {
        return Err(CliError::Config(format!("ordering {text:?} must list all {} players", labels.len())));
    }
    Ordering::new(players).map_err(|e| CliError::Config(format!("ordering {text:?}: {e}")))
}

pub fn parse_ordering_selection(text: &str, labels: &[String]) -> Result<OrderingSelection, CliError> {
    if text.trim() == "all" {
        return Ok(OrderingSelection::All);
    }
    text.split(';').map(|o| parse_ordering(o, labels)).collect::<Result<_, _>>().map(OrderingSelection::Listed)
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Self::from_raw(raw)
    }

    fn from_raw(raw: RawConfig) -> Result<Self, CliError> {
        if raw.player.is_empty() {
            return Err(CliError::Config("at least one [player.<id>] table is required".into()));
        }
        let labels: Vec<String> = raw.player.keys().cloned().collect();
        let truth = TypeProfile::new(
            raw.player
                .iter()
                .map(|(id, p)| type_value(&p.ty, &format!("player.{id}.type")))
                .collect::<Result<_, _>>()?,
        );
        let cost = raw.cost.as_ref().map(|c| rational_value(c, "cost")).transpose()?;
        let require_cost = || cost.clone().ok_or_else(|| field_err("cost", "required for this scenario"));
        let bounds = |id: &str, p: &RawPlayer| -> Result<TypeValue, CliError> {
            let field = format!("player.{id}.bound");
            p.bound.as_ref().ok_or_else(|| field_err(&field, "required for this scenario")).and_then(|b| type_value(b, &field))
        };

        let mut scalar_bounds = None;
        let mut vector_bounds = None;
        let problem = match raw.scenario {
            ScenarioKind::PublicProject1 => {
                build_public_project_1(&PublicProject1Params::unbounded(labels.len(), require_cost()?))
            }
            ScenarioKind::PublicProject2 => {
                let b = raw
                    .player
                    .iter()
                    .map(|(id, p)| scalar(&bounds(id, p)?, &format!("player.{id}.bound")))
                    .collect::<Result<Vec<_>, _>>()?;
                scalar_bounds = Some(b.clone());
                build_public_project_2(&PublicProject2Params { cost: require_cost()?, bounds: b })
            }
            ScenarioKind::ChooseProject => {
                let b = raw
                    .player
                    .iter()
                    .map(|(id, p)| vector(&bounds(id, p)?, &format!("player.{id}.bound")))
                    .collect::<Result<Vec<_>, _>>()?;
                vector_bounds = Some(b.clone());
                build_choose_project(&ChooseProjectParams { bounds: b })
            }
            ScenarioKind::ExplicitTable => explicit_problem(&raw, &labels),
        }
        .map_err(|e| CliError::Config(e.to_string()))?;
        problem.validate_profile(&truth).map_err(|e| field_err("player.*.type", e))?;

        let mechanism = match raw.transfers {
            Transfers::Clarke => Mechanism::clarke(problem),
            Transfers::None => Mechanism::without_transfers(problem),
        };

        let mut strategies = Vec::with_capacity(labels.len());
        let mut strategy_names = Vec::with_capacity(labels.len());
        for (id, p) in &raw.player {
            let name = p.strategy.clone().unwrap_or_else(|| "truth".into());
            let field = format!("player.{id}.strategy");
            let strategy = match name.as_str() {
                "truth" => SequentialStrategy::TruthTelling,
                "dominant" => match raw.scenario {
                    ScenarioKind::PublicProject1 => SequentialStrategy::PublicProject { cost: require_cost()? },
                    ScenarioKind::PublicProject2 => SequentialStrategy::BoundedPublicProject {
                        cost: require_cost()?,
                        bounds: scalar_bounds.clone().expect("set above"),
                    },
                    ScenarioKind::ChooseProject => {
                        SequentialStrategy::ChooseProject { bounds: vector_bounds.clone().expect("set above") }
                    }
                    ScenarioKind::ExplicitTable => SequentialStrategy::TruthTelling,
                },
                other => match other.strip_prefix("constant:") {
                    Some(value) => {
                        let value = parse_type_value(value).map_err(|e| field_err(&field, e))?;
                        let label = format!("constant {value}");
                        SequentialStrategy::Custom { name: label, announce: Arc::new(move |_| value.clone()) }
                    }
                    None => {
                        return Err(field_err(&field, format!("unknown strategy {other:?} (truth | dominant | constant:<value>)")))
                    }
                },
            };
            strategies.push(strategy);
            strategy_names.push(name);
        }

        let orderings = match &raw.ordering {
            None => OrderingSelection::All,
            Some(toml::Value::String(s)) => parse_ordering_selection(s, &labels)?,
            Some(toml::Value::Array(items)) => OrderingSelection::Listed(
                items
                    .iter()
                    .map(|v| match v {
                        toml::Value::String(s) => parse_ordering(s, &labels),
                        _ => Err(field_err("ordering", "expected strings")),
                    })
                    .collect::<Result<_, _>>()?,
            ),
            Some(_) => return Err(field_err("ordering", "expected \"all\", an ordering string, or a list of them")),
        };

        let grid = grid_source(&raw)?;
        Ok(ScenarioConfig {
            kind: raw.scenario,
            labels,
            mechanism,
            truth,
            strategies,
            strategy_names,
            orderings,
            cost,
            scalar_bounds,
            vector_bounds,
            grid,
        })
    }

    pub fn players(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, player: PlayerId) -> &str {
        &self.labels[player.index()]
    }

    pub fn ordering_label(&self, ordering: &Ordering) -> String {
        ordering.players().iter().map(|p| self.label(*p)).collect::<Vec<_>>().join(" ")
    }

    pub fn selected_orderings(&self, override_: Option<&OrderingSelection>) -> Result<Vec<Ordering>, CliError> {
        match override_.unwrap_or(&self.orderings) {
            OrderingSelection::All => Ordering::all(self.players(), DEFAULT_ORDERING_CAP).map_err(CliError::from),
            OrderingSelection::Listed(list) => Ok(list.clone()),
        }
    }

    /// Points every verification grid must contain for `player`.
    fn required_points(&self, player: PlayerId) -> Vec<TypeValue> {
        let mut points = vec![self.truth.get(player).clone()];
        match self.kind {
            ScenarioKind::PublicProject1 => {
                let c = self.cost.clone().expect("validated");
                points.extend([TypeValue::Scalar(int(0)), TypeValue::Scalar(c)]);
            }
            ScenarioKind::PublicProject2 => {
                let r = self.scalar_bounds.as_ref().expect("validated")[player.index()].clone();
                points.extend([TypeValue::Scalar(int(0)), TypeValue::Scalar(r)]);
            }
            ScenarioKind::ChooseProject => {
                let r = self.vector_bounds.as_ref().expect("validated")[player.index()].clone();
                points.extend([TypeValue::Vector(vec![int(0); r.len()]), TypeValue::Vector(r)]);
            }
            ScenarioKind::ExplicitTable => {}
        }
        points
    }

    fn generated_points(&self, player: PlayerId, step: Option<&Rational>) -> Result<Vec<TypeValue>, CliError> {
        let fraction = |upper: &Rational, parts: i64| upper / int(parts);
        let mut points = match self.kind {
            ScenarioKind::PublicProject1 => {
                let c = self.cost.clone().expect("validated");
                scalar_points(&c, &step.cloned().unwrap_or_else(|| fraction(&c, 4)))?
            }
            ScenarioKind::PublicProject2 => {
                let r = &self.scalar_bounds.as_ref().expect("validated")[player.index()];
                if r == &int(0) {
                    vec![TypeValue::Scalar(int(0))]
                } else {
                    scalar_points(r, &step.cloned().unwrap_or_else(|| fraction(r, 4)))?
                }
            }
            ScenarioKind::ChooseProject => {
                let r = &self.vector_bounds.as_ref().expect("validated")[player.index()];
                let own = vector(self.truth.get(player), "type")?;
                let coords = r
                    .iter()
                    .zip(&own)
                    .map(|(upper, t)| {
                        let mut c: Vec<Rational> = if upper == &int(0) {
                            vec![int(0)]
                        } else {
                            scalar_points(upper, &step.cloned().unwrap_or_else(|| fraction(upper, 2)))?
                                .into_iter()
                                .map(|v| v.as_scalar().cloned().expect("scalar points"))
                                .collect()
                        };
                        c.push(t.clone());
                        c.sort();
                        c.dedup();
                        Ok(c)
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                box_points(&coords)
            }
            ScenarioKind::ExplicitTable => match self.mechanism.problem().type_space(player) {
                TypeSpace::FiniteSet(values) => values.clone(),
                _ => unreachable!("explicit tables use finite type sets"),
            },
        };
        points.extend(self.required_points(player));
        Ok(points)
    }

    /// The verification grid, honouring an optional step override and profile cap.
    pub fn grid_spec(&self, step: Option<&Rational>, cap: Option<u128>) -> Result<GridSpec, CliError> {
        let players = self.mechanism.problem().player_ids();
        let rows = match (&self.grid, step) {
            (_, Some(step)) => players.map(|p| self.generated_points(p, Some(step))).collect::<Result<Vec<_>, _>>()?,
            (GridSource::Step(step), None) => {
                players.map(|p| self.generated_points(p, Some(step))).collect::<Result<Vec<_>, _>>()?
            }
            (GridSource::Default, None) => {
                players.map(|p| self.generated_points(p, None)).collect::<Result<Vec<_>, _>>()?
            }
            (GridSource::PerPlayer(rows), None) => rows.clone(),
        };
        let grid = Grid::new(rows)?.with_cap(cap.unwrap_or(DEFAULT_PROFILE_CAP));
        grid.check_within(self.mechanism.problem())?;
        let required = self.mechanism.problem().player_ids().map(|p| self.required_points(p)).collect();
        Ok(GridSpec::new(grid, required)?)
    }
}

fn grid_source(raw: &RawConfig) -> Result<GridSource, CliError> {
    let per_player: Vec<Option<Vec<TypeValue>>> = raw
        .player
        .iter()
        .map(|(id, p)| {
            let field = format!("player.{id}.grid");
            p.grid.as_ref().map(|g| player_grid(g, &field)).transpose()
        })
        .collect::<Result<_, _>>()?;
    let common = match &raw.grid {
        Some(RawGrid { points: Some(_), step: Some(_) }) => {
            return Err(field_err("grid", "give either points or step, not both"))
        }
        Some(RawGrid { points: Some(points), .. }) => Some(
            points
                .iter()
                .enumerate()
                .map(|(k, v)| type_value(v, &format!("grid.points[{k}]")))
                .collect::<Result<Vec<_>, _>>()?,
        ),
        Some(RawGrid { step: Some(step), .. }) => {
            if per_player.iter().any(Option::is_some) {
                return Err(field_err("grid.step", "cannot be combined with per-player grids"));
            }
            return Ok(GridSource::Step(rational_value(step, "grid.step")?));
        }
        _ => None,
    };
    if common.is_none() && per_player.iter().all(Option::is_none) {
        return Ok(GridSource::Default);
    }
    let rows = per_player
        .into_iter()
        .zip(raw.player.keys())
        .map(|(row, id)| {
            row.or_else(|| common.clone())
                .ok_or_else(|| field_err(format!("player.{id}.grid"), "missing (no [grid] points to fall back on)"))
        })
        .collect::<Result<_, _>>()?;
    Ok(GridSource::PerPlayer(rows))
}

/// A player grid is either a list of values, or for vector types a table
/// `{ coordinates = [[...], [...]] }` whose product is taken.
fn player_grid(value: &toml::Value, field: &str) -> Result<Vec<TypeValue>, CliError> {
    match value {
        toml::Value::Array(items) => {
            items.iter().enumerate().map(|(k, v)| type_value(v, &format!("{field}[{k}]"))).collect()
        }
        toml::Value::Table(t) => {
            let coords = t
                .get("coordinates")
                .and_then(toml::Value::as_array)
                .ok_or_else(|| field_err(field, "expected an array or { coordinates = [...] }"))?;
            let coords = coords
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    let f = format!("{field}.coordinates[{k}]");
                    c.as_array()
                        .ok_or_else(|| field_err(&f, "expected an array"))?
                        .iter()
                        .map(|x| rational_value(x, &f))
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(box_points(&coords))
        }
        _ => Err(field_err(field, "expected an array")),
    }
}

fn explicit_problem(raw: &RawConfig, labels: &[String]) -> seqvcg::Result<DecisionProblem> {
    use seqvcg::Error;
    let decisions = raw
        .decisions
        .clone()
        .ok_or_else(|| Error::InvalidParameters("decisions: required for explicit_table".into()))?;
    let config = |e: CliError| Error::InvalidParameters(e.to_string());
    let mut spaces = Vec::new();
    let mut rows = Vec::new();
    for (id, p) in &raw.player {
        let types = p
            .types
            .as_ref()
            .ok_or_else(|| Error::InvalidParameters(format!("player.{id}.types: required for explicit_table")))?
            .iter()
            .enumerate()
            .map(|(k, v)| type_value(v, &format!("player.{id}.types[{k}]")))
            .collect::<Result<Vec<_>, _>>()
            .map_err(config)?;
        let values = p
            .values
            .as_ref()
            .ok_or_else(|| Error::InvalidParameters(format!("player.{id}.values: required for explicit_table")))?;
        if values.len() != types.len() {
            return Err(Error::InvalidParameters(format!("player.{id}.values: need one row per type")));
        }
        let mut row = BTreeMap::new();
        for (k, (ty, vals)) in types.iter().zip(values).enumerate() {
            let vals = vals
                .iter()
                .map(|v| rational_value(v, &format!("player.{id}.values[{k}]")))
                .collect::<Result<Vec<_>, _>>()
                .map_err(config)?;
            row.insert(ty.clone(), vals);
        }
        spaces.push(TypeSpace::finite(types)?);
        rows.push(row);
    }
    let rule = if raw.table.is_empty() {
        DecisionRule::EfficientArgmax
    } else {
        let mut table = BTreeMap::new();
        for (k, entry) in raw.table.iter().enumerate() {
            let field = format!("table[{k}]");
            let profile = TypeProfile::new(
                entry
                    .profile
                    .iter()
                    .map(|v| type_value(v, &field))
                    .collect::<Result<_, _>>()
                    .map_err(config)?,
            );
            let d = decisions
                .iter()
                .position(|x| *x == entry.decision)
                .ok_or_else(|| Error::InvalidParameters(format!("{field}: unknown decision {:?}", entry.decision)))?;
            table.insert(profile, Decision::new(d));
        }
        DecisionRule::Table(table)
    };
    debug_assert_eq!(rows.len(), labels.len());
    DecisionProblem::new(decisions, spaces, Valuation::Table(rows), rule)
}
