use thiserror::Error;

use crate::problem::{PlayerId, TypeValue};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("decision set is empty")]
    EmptyDecisionSet,

    #[error("unknown decision index {0}")]
    UnknownDecision(usize),

    #[error("profile has {found} entries, problem has {expected} players")]
    ProfileLength { expected: usize, found: usize },

    #[error("type {value} is not in the type space of player {player}")]
    TypeOutsideSpace { player: PlayerId, value: TypeValue },

    #[error("valuation is undefined for player {player} at type {value}")]
    ValuationUndefined { player: PlayerId, value: TypeValue },

    #[error("decision table has no entry for profile {0}")]
    MissingTableEntry(String),

    #[error("{rule} rule cannot evaluate this profile: {reason}")]
    RuleNotApplicable { rule: &'static str, reason: String },

    #[error("search cap exceeded: {required} {what} requested, cap is {cap}")]
    SearchCapExceeded { what: &'static str, required: u128, cap: u128 },

    #[error("grid for player {player} is missing required point {value}")]
    GridMissingPoint { player: PlayerId, value: TypeValue },

    #[error("invalid ordering: {0}")]
    InvalidOrdering(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
}
