//! The three public-project families and their tax-reducing dominant
//! strategies for the sequential Clarke mechanism.
//!
//! * public project with unbounded types: `D = {0, 1}`,
//!   `v_i(d, θ_i) = d(θ_i − c/n)`, `f(θ) = 1` iff `Σθ_i ≥ c`;
//! * the same with `Θ_i = [0, r_i]`;
//! * choosing one of `m` projects: `v_i(d, θ_i) = θ_{id}`, `f` = argmax of
//!   the column sums (lowest project index on ties).
//!
//! Each strategy sees the announced prefix (earlier players in play order)
//! and its own true type, and only deviates from the truth when the prefix
//! already pins down the decision.

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::problem::{DecisionProblem, DecisionRule, TypeSpace, TypeValue, Valuation};
use crate::rational::{format_rational, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicProject1Params {
    pub cost: Rational,
    /// Each space must contain both 0 and `cost`.
    pub type_spaces: Vec<TypeSpace>,
}

impl PublicProject1Params {
    /// `n` players, each with type space `R+`.
    pub fn unbounded(players: usize, cost: Rational) -> Self {
        PublicProject1Params { cost, type_spaces: vec![TypeSpace::NonNegative; players] }
    }

    pub fn players(&self) -> usize {
        self.type_spaces.len()
    }

    pub fn cost_share(&self) -> Rational {
        &self.cost / Rational::from_integer(self.players().into())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicProject2Params {
    pub cost: Rational,
    /// `r_i`, one per player.
    pub bounds: Vec<Rational>,
}

impl PublicProject2Params {
    pub fn players(&self) -> usize {
        self.bounds.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChooseProjectParams {
    /// `r_ik`: one row per player, one column per project.
    pub bounds: Vec<Vec<Rational>>,
}

impl ChooseProjectParams {
    pub fn players(&self) -> usize {
        self.bounds.len()
    }

    pub fn projects(&self) -> usize {
        self.bounds.first().map_or(0, Vec::len)
    }
}

fn check_cost(cost: &Rational) -> Result<()> {
    if cost.is_positive() {
        Ok(())
    } else {
        Err(Error::InvalidParameters(format!("cost must be positive, got {}", format_rational(cost))))
    }
}

fn binary_public_project(
    cost: &Rational,
    type_spaces: Vec<TypeSpace>,
) -> Result<DecisionProblem> {
    let players = Rational::from_integer(type_spaces.len().into());
    DecisionProblem::new(
        vec!["0".into(), "1".into()],
        type_spaces,
        Valuation::PublicProject { cost_share: cost / players },
        DecisionRule::Threshold { cost: cost.clone() },
    )
}

pub fn build_public_project_1(params: &PublicProject1Params) -> Result<DecisionProblem> {
    check_cost(&params.cost)?;
    if params.type_spaces.is_empty() {
        return Err(Error::InvalidParameters("at least one player is required".into()));
    }
    let zero = TypeValue::Scalar(Rational::zero());
    let cost = TypeValue::Scalar(params.cost.clone());
    for (i, space) in params.type_spaces.iter().enumerate() {
        if !space.contains(&zero) || !space.contains(&cost) {
            return Err(Error::InvalidParameters(format!(
                "type space {space} of player {} must contain 0 and the cost {cost}",
                i + 1
            )));
        }
    }
    binary_public_project(&params.cost, params.type_spaces.clone())
}

pub fn build_public_project_2(params: &PublicProject2Params) -> Result<DecisionProblem> {
    check_cost(&params.cost)?;
    if params.bounds.is_empty() {
        return Err(Error::InvalidParameters("at least one player is required".into()));
    }
    let spaces = params
        .bounds
        .iter()
        .map(|r| TypeSpace::interval(r.clone()))
        .collect::<Result<Vec<_>>>()?;
    binary_public_project(&params.cost, spaces)
}

pub fn build_choose_project(params: &ChooseProjectParams) -> Result<DecisionProblem> {
    let m = params.projects();
    if params.bounds.is_empty() {
        return Err(Error::InvalidParameters("at least one player is required".into()));
    }
    if m < 2 {
        return Err(Error::InvalidParameters("choosing a project needs at least two projects".into()));
    }
    if params.bounds.iter().any(|row| row.len() != m) {
        return Err(Error::InvalidParameters("every player needs one bound per project".into()));
    }
    let spaces = params
        .bounds
        .iter()
        .map(|row| TypeSpace::boxed(row.clone()))
        .collect::<Result<Vec<_>>>()?;
    DecisionProblem::new(
        (1..=m).map(|k| k.to_string()).collect(),
        spaces,
        Valuation::ProjectChoice,
        DecisionRule::EfficientArgmax,
    )
}

/// Which case of a closed-form strategy produced an announcement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    /// Decision still open: report the true type.
    Truthful,
    /// Project surely cancelled: report 0.
    Withdraw,
    /// Decision surely made: report the extreme value that keeps it (`c`,
    /// `r_i`, or all weight on the winning project).
    Commit,
    /// Choosing-a-project only: neither listed case applies, report the truth.
    TruthfulFallback,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Announcement<T> {
    pub value: T,
    pub branch: Branch,
}

/// Unbounded public project. `position` is zero-based.
///
/// With `S` the announced prefix plus the own type: `c` once `S ≥ c`;
/// otherwise the truth, except that the last player reports 0.
pub fn public_project_announcement(
    prefix: &[Rational],
    own: &Rational,
    cost: &Rational,
    position: usize,
    players: usize,
) -> Announcement<Rational> {
    let total: Rational = prefix.iter().sum::<Rational>() + own;
    if &total >= cost {
        Announcement { value: cost.clone(), branch: Branch::Commit }
    } else if position + 1 == players {
        Announcement { value: Rational::zero(), branch: Branch::Withdraw }
    } else {
        Announcement { value: own.clone(), branch: Branch::Truthful }
    }
}

/// Bounded public project. `later_bounds` are the `r_j` of the players who
/// announce after this one.
pub fn bounded_public_project_announcement(
    prefix: &[Rational],
    own: &Rational,
    cost: &Rational,
    own_bound: &Rational,
    later_bounds: &[Rational],
) -> Announcement<Rational> {
    let total: Rational = prefix.iter().sum::<Rational>() + own;
    let reachable: Rational = later_bounds.iter().sum();
    if &total >= cost {
        Announcement { value: own_bound.clone(), branch: Branch::Commit }
    } else if &(&total + reachable) < cost {
        Announcement { value: Rational::zero(), branch: Branch::Withdraw }
    } else {
        Announcement { value: own.clone(), branch: Branch::Truthful }
    }
}

/// Choosing a project. Reports the vector that puts `r_{il̄}` on project `l̄`
/// and 0 elsewhere when `l̄` beats every other project even if all later
/// players put their maximum on that other project; otherwise the truth.
pub fn choose_project_announcement(
    prefix: &[Vec<Rational>],
    own: &[Rational],
    own_bounds: &[Rational],
    later_bounds: &[Vec<Rational>],
) -> Announcement<Vec<Rational>> {
    let m = own.len();
    let announced: Vec<Rational> = (0..m)
        .map(|l| prefix.iter().map(|v| &v[l]).sum::<Rational>() + &own[l])
        .collect();
    let reachable: Vec<Rational> =
        (0..m).map(|l| later_bounds.iter().map(|r| &r[l]).sum()).collect();

    let beats = |winner: usize, other: usize| announced[winner] > &announced[other] + &reachable[other];
    let sure_winner = (0..m).find(|&w| (0..m).filter(|&l| l != w).all(|l| beats(w, l)));
    if let Some(w) = sure_winner {
        let mut value = vec![Rational::zero(); m];
        value[w] = own_bounds[w].clone();
        return Announcement { value, branch: Branch::Commit };
    }
    let open = (0..m).all(|w| (0..m).filter(|&l| l != w).all(|l| !beats(w, l)));
    let branch = if open { Branch::Truthful } else { Branch::TruthfulFallback };
    Announcement { value: own.to_vec(), branch }
}
