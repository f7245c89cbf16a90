//! Sequential Vickrey-Clarke-Groves mechanisms in exact rational arithmetic.
//!
//! A [`DecisionProblem`] fixes decisions, type spaces, valuations and a
//! decision rule. Wrapping it in a [`Mechanism`] adds Clarke (or custom)
//! transfers. The [`sequential`] module lets players announce in turn with
//! prefix-dependent strategies, [`scenarios`] builds the public-project and
//! choose-a-project families together with their non-truthful dominant
//! strategies, and [`oracle`] checks claims by exhaustive enumeration over
//! finite grids.

pub mod error;
pub mod mechanism;
pub mod oracle;
pub mod problem;
pub mod rational;
pub mod scenarios;
pub mod sequential;

pub use error::{Error, Result};
pub use mechanism::{Mechanism, Outcome, TransferScheme};
pub use oracle::GridSpec;
pub use problem::{
    Decision, DecisionProblem, DecisionRule, Grid, PlayerId, TypeProfile, TypeSpace, TypeValue, Valuation,
};
pub use rational::Rational;
pub use sequential::{DominanceVerdict, Ordering, SequentialStrategy};
