//! Decision problems `(D, Θ_1..Θ_n, v_1..v_n, f)`.
//!
//! A [`DecisionProblem`] bundles a finite decision set, one type space per
//! player, a valuation `v_i(d, θ_i)` and a decision rule `f`. The free
//! functions [`is_efficient`] and [`is_strategy_proof`] check the two
//! classical properties of `f` by enumerating a finite [`Grid`] of profiles.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use itertools::Itertools;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{format_rational, Rational};

/// Default upper bound on the number of profiles an exhaustive search visits.
pub const DEFAULT_PROFILE_CAP: u128 = 10_000_000;

/// Zero-based player index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlayerId(usize);

impl PlayerId {
    pub const fn new(index: usize) -> Self {
        PlayerId(index)
    }

    pub const fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0 + 1)
    }
}

/// Index into [`DecisionProblem::decision_labels`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Decision(usize);

impl Decision {
    pub const fn new(index: usize) -> Self {
        Decision(index)
    }

    pub const fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d{}", self.0)
    }
}

/// A reported or received type: a single number, or one number per project.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TypeValue {
    Scalar(Rational),
    Vector(Vec<Rational>),
}

impl TypeValue {
    pub fn as_scalar(&self) -> Option<&Rational> {
        match self {
            TypeValue::Scalar(x) => Some(x),
            TypeValue::Vector(_) => None,
        }
    }

    pub fn as_vector(&self) -> Option<&[Rational]> {
        match self {
            TypeValue::Vector(v) => Some(v),
            TypeValue::Scalar(_) => None,
        }
    }
}

impl From<Rational> for TypeValue {
    fn from(value: Rational) -> Self {
        TypeValue::Scalar(value)
    }
}

impl From<Vec<Rational>> for TypeValue {
    fn from(value: Vec<Rational>) -> Self {
        TypeValue::Vector(value)
    }
}

impl fmt::Display for TypeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeValue::Scalar(x) => write!(f, "{}", format_rational(x)),
            TypeValue::Vector(v) => {
                write!(f, "({})", v.iter().map(format_rational).join(","))
            }
        }
    }
}

/// The set `Θ_i` of types a player may receive or announce.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TypeSpace {
    /// An explicit list of distinct values.
    FiniteSet(Vec<TypeValue>),
    /// All non-negative reals.
    NonNegative,
    /// The interval `[0, upper]`.
    Interval { upper: Rational },
    /// The box `[0, upper_1] × … × [0, upper_m]`.
    Box { upper: Vec<Rational> },
}

impl TypeSpace {
    /// Finite type space; rejects duplicates.
    pub fn finite(values: Vec<TypeValue>) -> Result<Self> {
        if values.iter().duplicates().next().is_some() {
            return Err(Error::InvalidParameters(
                "finite type space contains duplicate values".into(),
            ));
        }
        Ok(TypeSpace::FiniteSet(values))
    }

    pub fn interval(upper: Rational) -> Result<Self> {
        if upper.is_negative() {
            return Err(Error::InvalidParameters(format!(
                "interval upper bound {} is negative",
                format_rational(&upper)
            )));
        }
        Ok(TypeSpace::Interval { upper })
    }

    pub fn boxed(upper: Vec<Rational>) -> Result<Self> {
        if upper.iter().any(Signed::is_negative) {
            return Err(Error::InvalidParameters("box bound is negative".into()));
        }
        Ok(TypeSpace::Box { upper })
    }

    pub fn contains(&self, value: &TypeValue) -> bool {
        match (self, value) {
            (TypeSpace::FiniteSet(values), _) => values.contains(value),
            (TypeSpace::NonNegative, TypeValue::Scalar(x)) => !x.is_negative(),
            (TypeSpace::Interval { upper }, TypeValue::Scalar(x)) => {
                !x.is_negative() && x <= upper
            }
            (TypeSpace::Box { upper }, TypeValue::Vector(v)) => {
                v.len() == upper.len()
                    && v.iter().zip(upper).all(|(x, u)| !x.is_negative() && x <= u)
            }
            _ => false,
        }
    }
}

impl fmt::Display for TypeSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeSpace::FiniteSet(values) => write!(f, "{{{}}}", values.iter().join(", ")),
            TypeSpace::NonNegative => write!(f, "R+"),
            TypeSpace::Interval { upper } => write!(f, "[0,{}]", format_rational(upper)),
            TypeSpace::Box { upper } => write!(
                f,
                "{}",
                upper.iter().map(|u| format!("[0,{}]", format_rational(u))).join("x")
            ),
        }
    }
}

/// One type per player, indexed by [`PlayerId`].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypeProfile(Vec<TypeValue>);

impl TypeProfile {
    pub fn new(values: Vec<TypeValue>) -> Self {
        TypeProfile(values)
    }

    pub fn scalars(values: impl IntoIterator<Item = Rational>) -> Self {
        TypeProfile(values.into_iter().map(TypeValue::Scalar).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, player: PlayerId) -> &TypeValue {
        &self.0[player.index()]
    }

    pub fn values(&self) -> &[TypeValue] {
        &self.0
    }

    pub fn into_values(self) -> Vec<TypeValue> {
        self.0
    }

    /// `(θ'_i, θ_{-i})`.
    pub fn with(&self, player: PlayerId, value: TypeValue) -> TypeProfile {
        let mut values = self.0.clone();
        values[player.index()] = value;
        TypeProfile(values)
    }

    /// `θ_{-i}` in player order.
    pub fn without(&self, player: PlayerId) -> Vec<TypeValue> {
        self.0
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != player.index())
            .map(|(_, v)| v.clone())
            .collect()
    }
}

impl fmt::Display for TypeProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.0.iter().join(", "))
    }
}

pub type ValuationFn = dyn Fn(Decision, PlayerId, &TypeValue) -> Option<Rational> + Send + Sync;

/// The valuation family `v_i(d, θ_i)`.
#[derive(Clone)]
pub enum Valuation {
    /// `v_i(d, θ_i) = d · (θ_i − share)` for scalar types.
    PublicProject { cost_share: Rational },
    /// `v_i(d, θ_i) = θ_i[d]` for vector types.
    ProjectChoice,
    /// Per player: type → value of each decision.
    Table(Vec<BTreeMap<TypeValue, Vec<Rational>>>),
    Custom(Arc<ValuationFn>),
}

impl fmt::Debug for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::PublicProject { cost_share } => f
                .debug_struct("PublicProject")
                .field("cost_share", &format_rational(cost_share))
                .finish(),
            Valuation::ProjectChoice => f.write_str("ProjectChoice"),
            Valuation::Table(rows) => f.debug_tuple("Table").field(rows).finish(),
            Valuation::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// How `f` picks a decision from an announced profile.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DecisionRule {
    /// Welfare maximizer; ties go to the lowest decision index.
    EfficientArgmax,
    /// Decision 1 when the scalar types sum to at least `cost`, else decision 0.
    Threshold { cost: Rational },
    /// Explicit profile → decision table.
    Table(BTreeMap<TypeProfile, Decision>),
}

#[derive(Clone, Debug)]
pub struct DecisionProblem {
    decisions: Vec<String>,
    type_spaces: Vec<TypeSpace>,
    valuation: Valuation,
    rule: DecisionRule,
}

impl DecisionProblem {
    pub fn new(
        decisions: Vec<String>,
        type_spaces: Vec<TypeSpace>,
        valuation: Valuation,
        rule: DecisionRule,
    ) -> Result<Self> {
        if decisions.is_empty() {
            return Err(Error::EmptyDecisionSet);
        }
        if type_spaces.is_empty() {
            return Err(Error::InvalidParameters("a problem needs at least one player".into()));
        }
        let problem = DecisionProblem { decisions, type_spaces, valuation, rule };
        problem.check_rule()?;
        Ok(problem)
    }

    fn check_rule(&self) -> Result<()> {
        match &self.rule {
            DecisionRule::EfficientArgmax => Ok(()),
            DecisionRule::Threshold { .. } if self.decisions.len() != 2 => {
                Err(Error::InvalidParameters("threshold rule needs exactly two decisions".into()))
            }
            DecisionRule::Threshold { .. } => Ok(()),
            DecisionRule::Table(table) => {
                for (profile, d) in table {
                    self.check_decision(*d)?;
                    self.validate_profile(profile)?;
                }
                Ok(())
            }
        }
    }

    /// Same problem with a different decision rule.
    pub fn with_rule(self, rule: DecisionRule) -> Result<Self> {
        DecisionProblem::new(self.decisions, self.type_spaces, self.valuation, rule)
    }

    pub fn players(&self) -> usize {
        self.type_spaces.len()
    }

    pub fn player_ids(&self) -> impl Iterator<Item = PlayerId> + Clone {
        (0..self.players()).map(PlayerId::new)
    }

    pub fn decisions(&self) -> impl Iterator<Item = Decision> + Clone {
        (0..self.decisions.len()).map(Decision::new)
    }

    pub fn decision_labels(&self) -> &[String] {
        &self.decisions
    }

    pub fn decision_label(&self, d: Decision) -> &str {
        &self.decisions[d.index()]
    }

    pub fn type_space(&self, player: PlayerId) -> &TypeSpace {
        &self.type_spaces[player.index()]
    }

    pub fn type_spaces(&self) -> &[TypeSpace] {
        &self.type_spaces
    }

    pub fn valuation(&self) -> &Valuation {
        &self.valuation
    }

    pub fn rule(&self) -> &DecisionRule {
        &self.rule
    }

    pub fn check_decision(&self, d: Decision) -> Result<()> {
        if d.index() < self.decisions.len() {
            Ok(())
        } else {
            Err(Error::UnknownDecision(d.index()))
        }
    }

    pub fn check_type(&self, player: PlayerId, value: &TypeValue) -> Result<()> {
        if self.type_space(player).contains(value) {
            Ok(())
        } else {
            Err(Error::TypeOutsideSpace { player, value: value.clone() })
        }
    }

    pub fn validate_profile(&self, profile: &TypeProfile) -> Result<()> {
        if profile.len() != self.players() {
            return Err(Error::ProfileLength { expected: self.players(), found: profile.len() });
        }
        self.player_ids().try_for_each(|p| self.check_type(p, profile.get(p)))
    }

    /// `v_i(d, θ_i)`. Does not check that `θ_i ∈ Θ_i`.
    pub fn value(&self, d: Decision, player: PlayerId, ty: &TypeValue) -> Result<Rational> {
        self.check_decision(d)?;
        let undefined = || Error::ValuationUndefined { player, value: ty.clone() };
        match &self.valuation {
            Valuation::PublicProject { cost_share } => {
                let theta = ty.as_scalar().ok_or_else(undefined)?;
                Ok(Rational::from_integer(d.index().into()) * (theta - cost_share))
            }
            Valuation::ProjectChoice => {
                let theta = ty.as_vector().ok_or_else(undefined)?;
                theta.get(d.index()).cloned().ok_or_else(undefined)
            }
            Valuation::Table(rows) => rows
                .get(player.index())
                .and_then(|row| row.get(ty))
                .and_then(|values| values.get(d.index()))
                .cloned()
                .ok_or_else(undefined),
            Valuation::Custom(v) => v(d, player, ty).ok_or_else(undefined),
        }
    }

    /// `Σ_i v_i(d, θ_i)`.
    pub fn social_welfare(&self, d: Decision, profile: &TypeProfile) -> Result<Rational> {
        self.validate_profile(profile)?;
        self.welfare_unchecked(d, profile)
    }

    pub(crate) fn welfare_unchecked(&self, d: Decision, profile: &TypeProfile) -> Result<Rational> {
        self.player_ids().try_fold(Rational::zero(), |acc, p| {
            Ok(acc + self.value(d, p, profile.get(p))?)
        })
    }

    /// Welfare maximizer, lowest decision index on ties.
    pub fn efficient_decision(&self, profile: &TypeProfile) -> Result<Decision> {
        self.validate_profile(profile)?;
        self.argmax_unchecked(profile)
    }

    fn argmax_unchecked(&self, profile: &TypeProfile) -> Result<Decision> {
        let mut best: Option<(Decision, Rational)> = None;
        for d in self.decisions() {
            let w = self.welfare_unchecked(d, profile)?;
            if best.as_ref().is_none_or(|(_, bw)| w > *bw) {
                best = Some((d, w));
            }
        }
        best.map(|(d, _)| d).ok_or(Error::EmptyDecisionSet)
    }

    /// `f(θ)` according to the problem's rule.
    pub fn decide(&self, profile: &TypeProfile) -> Result<Decision> {
        self.validate_profile(profile)?;
        match &self.rule {
            DecisionRule::EfficientArgmax => self.argmax_unchecked(profile),
            DecisionRule::Threshold { cost } => {
                let mut total = Rational::zero();
                for v in profile.values() {
                    total += v.as_scalar().ok_or_else(|| Error::RuleNotApplicable {
                        rule: "threshold",
                        reason: format!("type {v} is not a scalar"),
                    })?;
                }
                Ok(Decision::new(usize::from(&total >= cost)))
            }
            DecisionRule::Table(table) => table
                .get(profile)
                .copied()
                .ok_or_else(|| Error::MissingTableEntry(profile.to_string())),
        }
    }
}

/// Finite per-player value lists over which universally quantified claims
/// are checked. Values are kept sorted and deduplicated so enumeration order
/// is lexicographic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grid {
    values: Vec<Vec<TypeValue>>,
    cap: u128,
}

impl Grid {
    pub fn new(values: Vec<Vec<TypeValue>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameters("grid has no players".into()));
        }
        let mut values = values;
        for (i, row) in values.iter_mut().enumerate() {
            if row.is_empty() {
                return Err(Error::InvalidParameters(format!(
                    "grid for player {} is empty",
                    PlayerId::new(i)
                )));
            }
            row.sort();
            row.dedup();
        }
        Ok(Grid { values, cap: DEFAULT_PROFILE_CAP })
    }

    /// The same value list for every one of `players`.
    pub fn uniform(players: usize, values: Vec<TypeValue>) -> Result<Self> {
        Grid::new(vec![values; players])
    }

    pub fn with_cap(mut self, cap: u128) -> Self {
        self.cap = cap;
        self
    }

    pub fn cap(&self) -> u128 {
        self.cap
    }

    pub fn players(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self, player: PlayerId) -> &[TypeValue] {
        &self.values[player.index()]
    }

    pub fn contains(&self, player: PlayerId, value: &TypeValue) -> bool {
        self.values[player.index()].binary_search(value).is_ok()
    }

    pub fn profile_count(&self) -> u128 {
        self.values.iter().fold(1u128, |acc, row| acc.saturating_mul(row.len() as u128))
    }

    /// Errors when the profile count exceeds the cap.
    pub fn check_cap(&self) -> Result<u128> {
        let count = self.profile_count();
        if count > self.cap {
            return Err(Error::SearchCapExceeded { what: "profiles", required: count, cap: self.cap });
        }
        Ok(count)
    }

    /// All profiles in lexicographic order (player 1 varies slowest).
    pub fn profiles(&self) -> Result<impl Iterator<Item = TypeProfile> + '_> {
        self.check_cap()?;
        Ok(self
            .values
            .iter()
            .map(|row| row.iter().cloned())
            .multi_cartesian_product()
            .map(TypeProfile::new))
    }

    /// Checks the grid shape and that every value lies in the problem's type spaces.
    pub fn check_within(&self, problem: &DecisionProblem) -> Result<()> {
        if self.players() != problem.players() {
            return Err(Error::ProfileLength { expected: problem.players(), found: self.players() });
        }
        for p in problem.player_ids() {
            for v in self.values(p) {
                problem.check_type(p, v)?;
            }
        }
        Ok(())
    }

    /// Grid with player `player`'s values replaced.
    pub fn with_values(&self, player: PlayerId, values: Vec<TypeValue>) -> Result<Self> {
        let mut rows = self.values.clone();
        rows[player.index()] = values;
        Ok(Grid::new(rows)?.with_cap(self.cap))
    }
}

/// Result of a brute-force check: either it holds on every enumerated
/// profile, or the first (lexicographic) counterexample.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Check<W> {
    Holds { profiles: u128 },
    Fails(W),
}

impl<W> Check<W> {
    pub fn holds(&self) -> bool {
        matches!(self, Check::Holds { .. })
    }

    pub fn witness(&self) -> Option<&W> {
        match self {
            Check::Holds { .. } => None,
            Check::Fails(w) => Some(w),
        }
    }
}

/// `f(θ)` is beaten in welfare by `better` at `profile`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EfficiencyViolation {
    pub profile: TypeProfile,
    pub chosen: Decision,
    pub better: Decision,
    pub chosen_welfare: Rational,
    pub better_welfare: Rational,
}

/// Player `player` with true profile `profile` gains by announcing `deviation`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManipulationWitness {
    pub player: PlayerId,
    pub profile: TypeProfile,
    pub deviation: TypeValue,
    pub truthful_utility: Rational,
    pub deviation_utility: Rational,
}

pub fn is_efficient(problem: &DecisionProblem, grid: &Grid) -> Result<Check<EfficiencyViolation>> {
    grid.check_within(problem)?;
    let mut count = 0u128;
    for profile in grid.profiles()? {
        count += 1;
        let chosen = problem.decide(&profile)?;
        let chosen_welfare = problem.welfare_unchecked(chosen, &profile)?;
        for d in problem.decisions() {
            let w = problem.welfare_unchecked(d, &profile)?;
            if w > chosen_welfare {
                return Ok(Check::Fails(EfficiencyViolation {
                    profile,
                    chosen,
                    better: d,
                    chosen_welfare,
                    better_welfare: w,
                }));
            }
        }
    }
    Ok(Check::Holds { profiles: count })
}

/// Strategy-proofness of `f` alone: `v_i(f(θ), θ_i) ≥ v_i(f(θ'_i, θ_{-i}), θ_i)`.
pub fn is_strategy_proof(
    problem: &DecisionProblem,
    grid: &Grid,
) -> Result<Check<ManipulationWitness>> {
    find_manipulation(problem, grid, |announced, player, truth| {
        let d = problem.decide(announced)?;
        problem.value(d, player, truth)
    })
}

/// Shared enumeration for strategy-proofness under an arbitrary utility
/// `utility(announced profile, player, true type)`.
pub(crate) fn find_manipulation(
    problem: &DecisionProblem,
    grid: &Grid,
    utility: impl Fn(&TypeProfile, PlayerId, &TypeValue) -> Result<Rational>,
) -> Result<Check<ManipulationWitness>> {
    grid.check_within(problem)?;
    let mut count = 0u128;
    for profile in grid.profiles()? {
        count += 1;
        for player in problem.player_ids() {
            let truth = profile.get(player);
            let truthful_utility = utility(&profile, player, truth)?;
            for deviation in grid.values(player) {
                if deviation == truth {
                    continue;
                }
                let announced = profile.with(player, deviation.clone());
                let deviation_utility = utility(&announced, player, truth)?;
                if deviation_utility > truthful_utility {
                    return Ok(Check::Fails(ManipulationWitness {
                        player,
                        profile,
                        deviation: deviation.clone(),
                        truthful_utility,
                        deviation_utility,
                    }));
                }
            }
        }
    }
    Ok(Check::Holds { profiles: count })
}
