//! Sequential play: players announce one at a time in a given [`Ordering`],
//! each seeing the announcements made before them.
//!
//! Besides running a mechanism sequentially, this module holds the cheap
//! dominance test ([`classify_by_preservation`]): a strategy that never changes the
//! decision truth-telling would produce is dominant under any VCG mechanism,
//! and one that changes it at a profile where welfare differs is not.

use std::fmt;
use std::sync::Arc;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::mechanism::{Mechanism, Outcome};
use crate::problem::{Grid, PlayerId, TypeProfile, TypeValue};
use crate::rational::Rational;
use crate::scenarios::{
    bounded_public_project_announcement, choose_project_announcement, public_project_announcement,
};

/// Largest player count for which [`run_all_orderings`] enumerates `n!` orderings.
pub const DEFAULT_ORDERING_CAP: usize = 8;

/// The order in which players announce: `ordering[k]` plays at position `k`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ordering(Vec<PlayerId>);

impl Ordering {
    pub fn new(players: Vec<PlayerId>) -> Result<Self> {
        let n = players.len();
        if n == 0 {
            return Err(Error::InvalidOrdering("empty ordering".into()));
        }
        let mut seen = vec![false; n];
        for p in &players {
            match seen.get_mut(p.index()) {
                Some(slot) if !*slot => *slot = true,
                _ => {
                    return Err(Error::InvalidOrdering(format!(
                        "{} is not a permutation of {n} players",
                        players.iter().join(" ")
                    )))
                }
            }
        }
        Ok(Ordering(players))
    }

    pub fn identity(players: usize) -> Self {
        Ordering((0..players).map(PlayerId::new).collect())
    }

    /// All `n!` orderings in lexicographic order.
    pub fn all(players: usize, cap: usize) -> Result<Vec<Ordering>> {
        if players > cap {
            return Err(Error::SearchCapExceeded {
                what: "players for ordering enumeration",
                required: players as u128,
                cap: cap as u128,
            });
        }
        Ok((0..players)
            .map(PlayerId::new)
            .permutations(players)
            .map(Ordering)
            .collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn players(&self) -> &[PlayerId] {
        &self.0
    }

    pub fn position_of(&self, player: PlayerId) -> Option<usize> {
        self.0.iter().position(|p| *p == player)
    }

    /// Players announcing after `player`.
    pub fn after(&self, player: PlayerId) -> &[PlayerId] {
        match self.position_of(player) {
            Some(k) => &self.0[k + 1..],
            None => &[],
        }
    }

    /// Players announcing before `player`.
    pub fn before(&self, player: PlayerId) -> &[PlayerId] {
        match self.position_of(player) {
            Some(k) => &self.0[..k],
            None => &[],
        }
    }
}

impl fmt::Display for Ordering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.iter().join(" "))
    }
}

/// What a player knows when it is their turn.
#[derive(Clone, Copy, Debug)]
pub struct StrategyContext<'a> {
    pub player: PlayerId,
    /// Zero-based position in the ordering.
    pub position: usize,
    pub players: usize,
    /// Announcements of the earlier players, in play order.
    pub prefix: &'a [TypeValue],
    pub own: &'a TypeValue,
    /// Players still to announce, in play order.
    pub later: &'a [PlayerId],
}

pub type StrategyFn = dyn Fn(&StrategyContext<'_>) -> TypeValue + Send + Sync;

/// A prefix-dependent strategy `s_i(θ_1, …, θ_i)`.
#[derive(Clone)]
pub enum SequentialStrategy {
    /// Announce the true type regardless of the prefix.
    TruthTelling,
    /// Unbounded public project: truth, 0 for the last player once the
    /// project is out of reach, `c` once it is assured.
    PublicProject { cost: Rational },
    /// Bounded public project with per-player bounds `r_i` (indexed by player).
    BoundedPublicProject { cost: Rational, bounds: Vec<Rational> },
    /// Choosing a project with per-player bound vectors (indexed by player).
    ChooseProject { bounds: Vec<Vec<Rational>> },
    Custom { name: String, announce: Arc<StrategyFn> },
}

impl fmt::Debug for SequentialStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

fn scalars(values: &[TypeValue]) -> Result<Vec<Rational>> {
    values
        .iter()
        .map(|v| {
            v.as_scalar()
                .cloned()
                .ok_or_else(|| Error::InvalidParameters(format!("expected a scalar type, got {v}")))
        })
        .collect()
}

fn vectors(values: &[TypeValue]) -> Result<Vec<Vec<Rational>>> {
    values
        .iter()
        .map(|v| {
            v.as_vector()
                .map(<[Rational]>::to_vec)
                .ok_or_else(|| Error::InvalidParameters(format!("expected a vector type, got {v}")))
        })
        .collect()
}

fn bound<T: Clone>(bounds: &[T], player: PlayerId) -> Result<T> {
    bounds
        .get(player.index())
        .cloned()
        .ok_or_else(|| Error::InvalidParameters(format!("no bound for player {player}")))
}

impl SequentialStrategy {
    pub fn custom(
        name: impl Into<String>,
        announce: impl Fn(&StrategyContext<'_>) -> TypeValue + Send + Sync + 'static,
    ) -> Self {
        SequentialStrategy::Custom { name: name.into(), announce: Arc::new(announce) }
    }

    pub fn name(&self) -> String {
        match self {
            SequentialStrategy::TruthTelling => "truth-telling".into(),
            SequentialStrategy::PublicProject { .. } => "public-project".into(),
            SequentialStrategy::BoundedPublicProject { .. } => "bounded-public-project".into(),
            SequentialStrategy::ChooseProject { .. } => "choose-project".into(),
            SequentialStrategy::Custom { name, .. } => name.clone(),
        }
    }

    pub fn announce(&self, ctx: &StrategyContext<'_>) -> Result<TypeValue> {
        match self {
            SequentialStrategy::TruthTelling => Ok(ctx.own.clone()),
            SequentialStrategy::PublicProject { cost } => {
                let own = scalars(std::slice::from_ref(ctx.own))?.remove(0);
                let prefix = scalars(ctx.prefix)?;
                Ok(public_project_announcement(&prefix, &own, cost, ctx.position, ctx.players).value.into())
            }
            SequentialStrategy::BoundedPublicProject { cost, bounds } => {
                let own = scalars(std::slice::from_ref(ctx.own))?.remove(0);
                let prefix = scalars(ctx.prefix)?;
                let later = ctx.later.iter().map(|p| bound(bounds, *p)).collect::<Result<Vec<_>>>()?;
                let own_bound = bound(bounds, ctx.player)?;
                Ok(bounded_public_project_announcement(&prefix, &own, cost, &own_bound, &later).value.into())
            }
            SequentialStrategy::ChooseProject { bounds } => {
                let own = vectors(std::slice::from_ref(ctx.own))?.remove(0);
                let prefix = vectors(ctx.prefix)?;
                let later = ctx.later.iter().map(|p| bound(bounds, *p)).collect::<Result<Vec<_>>>()?;
                let own_bounds = bound(bounds, ctx.player)?;
                if prefix.iter().chain(&later).chain([&own_bounds]).any(|v| v.len() != own.len()) {
                    return Err(Error::InvalidParameters("project vectors differ in length".into()));
                }
                Ok(choose_project_announcement(&prefix, &own, &own_bounds, &later).value.into())
            }
            SequentialStrategy::Custom { announce, .. } => Ok(announce(ctx)),
        }
    }
}

/// The announcement `s_i(θ_1, …, θ_i)` when every player before `player` in
/// `ordering` announced exactly their entry of `profile`.
pub fn announce_at(
    strategy: &SequentialStrategy,
    ordering: &Ordering,
    player: PlayerId,
    profile: &TypeProfile,
) -> Result<TypeValue> {
    let position = ordering
        .position_of(player)
        .ok_or_else(|| Error::InvalidOrdering(format!("{player} is not in ordering {ordering}")))?;
    let prefix: Vec<TypeValue> = ordering.before(player).iter().map(|p| profile.get(*p).clone()).collect();
    strategy.announce(&StrategyContext {
        player,
        position,
        players: ordering.len(),
        prefix: &prefix,
        own: profile.get(player),
        later: ordering.after(player),
    })
}

/// One sequential round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunReport {
    pub ordering: Ordering,
    /// Announced types indexed by player.
    pub announced: TypeProfile,
    pub outcome: Outcome,
    /// Whether each player (by index) announced something other than their true type.
    pub deviated: Vec<bool>,
}

pub fn run_sequential(
    mech: &Mechanism,
    ordering: &Ordering,
    strategies: &[SequentialStrategy],
    truth: &TypeProfile,
) -> Result<RunReport> {
    let problem = mech.problem();
    let n = problem.players();
    if ordering.len() != n || strategies.len() != n {
        return Err(Error::InvalidParameters(format!(
            "{n} players, but ordering has {} entries and {} strategies were given",
            ordering.len(),
            strategies.len()
        )));
    }
    problem.validate_profile(truth)?;
    let mut announced: Vec<Option<TypeValue>> = vec![None; n];
    let mut prefix: Vec<TypeValue> = Vec::with_capacity(n);
    for (position, &player) in ordering.players().iter().enumerate() {
        let ctx = StrategyContext {
            player,
            position,
            players: n,
            prefix: &prefix,
            own: truth.get(player),
            later: &ordering.players()[position + 1..],
        };
        let value = strategies[player.index()].announce(&ctx)?;
        problem.check_type(player, &value)?;
        prefix.push(value.clone());
        announced[player.index()] = Some(value);
    }
    let announced = TypeProfile::new(announced.into_iter().map(|v| v.expect("every player announces")).collect());
    let outcome = mech.outcome(&announced, truth)?;
    let deviated = problem.player_ids().map(|p| announced.get(p) != truth.get(p)).collect();
    Ok(RunReport { ordering: ordering.clone(), announced, outcome, deviated })
}

/// One report per ordering, in lexicographic ordering order.
pub fn run_all_orderings(
    mech: &Mechanism,
    strategies: &[SequentialStrategy],
    truth: &TypeProfile,
    cap: usize,
) -> Result<Vec<RunReport>> {
    Ordering::all(mech.problem().players(), cap)?
        .iter()
        .map(|o| run_sequential(mech, o, strategies, truth))
        .collect()
}

/// How a dominance verdict was reached.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Certificate {
    /// The strategy never changes the truthful decision.
    DecisionPreserved,
    /// Every deviation was compared by utility.
    Exhaustive,
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Certificate::DecisionPreserved => f.write_str("decision preserved"),
            Certificate::Exhaustive => f.write_str("exhaustive"),
        }
    }
}

/// Evidence that a strategy is not dominant: at `profile` the player would
/// have done better announcing `better` than the strategy's `announcement`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DominanceWitness {
    pub player: PlayerId,
    pub ordering: Ordering,
    pub profile: TypeProfile,
    pub announcement: TypeValue,
    pub better: TypeValue,
    pub strategy_utility: Rational,
    pub better_utility: Rational,
}

impl DominanceWitness {
    /// Re-evaluates both utilities from scratch; true when the violation reproduces.
    pub fn replay(&self, mech: &Mechanism, strategy: &SequentialStrategy) -> Result<bool> {
        let announcement = announce_at(strategy, &self.ordering, self.player, &self.profile)?;
        let truth = self.profile.get(self.player);
        let ours = mech.utility(self.player, &self.profile.with(self.player, announcement.clone()), truth)?;
        let theirs = mech.utility(self.player, &self.profile.with(self.player, self.better.clone()), truth)?;
        Ok(announcement == self.announcement && ours < theirs)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DominanceVerdict {
    Dominant { certificate: Certificate, profiles: u128 },
    NotDominant(DominanceWitness),
    /// Only decision flips at which welfare ties were found; the decision
    /// test says nothing either way.
    LemmaInconclusive { profile: TypeProfile, announcement: TypeValue },
}

impl DominanceVerdict {
    pub fn is_dominant(&self) -> bool {
        matches!(self, DominanceVerdict::Dominant { .. })
    }
}

impl fmt::Display for DominanceVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DominanceVerdict::Dominant { certificate, profiles } => {
                write!(f, "Dominant ({certificate}), {profiles} profiles")
            }
            DominanceVerdict::NotDominant(w) => write!(
                f,
                "NotDominant: at profile {} player {} announces {} (utility {}) but {} yields {}",
                w.profile, w.player, w.announcement, w.strategy_utility, w.better, w.better_utility
            ),
            DominanceVerdict::LemmaInconclusive { profile, announcement } => write!(
                f,
                "Inconclusive: announcing {announcement} at {profile} changes the decision without changing welfare"
            ),
        }
    }
}

/// Decision-preservation test for `player` playing `strategy` in `ordering`,
/// over every profile of `grid`. Returns the first welfare-changing flip in
/// lexicographic order as a witness (against truthful reporting).
pub fn classify_by_preservation(
    mech: &Mechanism,
    strategy: &SequentialStrategy,
    ordering: &Ordering,
    player: PlayerId,
    grid: &Grid,
) -> Result<DominanceVerdict> {
    let problem = mech.problem();
    grid.check_within(problem)?;
    let mut inconclusive = None;
    let mut count = 0u128;
    for profile in grid.profiles()? {
        count += 1;
        let announcement = announce_at(strategy, ordering, player, &profile)?;
        problem.check_type(player, &announcement)?;
        let played = profile.with(player, announcement.clone());
        let truthful_decision = problem.decide(&profile)?;
        let played_decision = problem.decide(&played)?;
        if truthful_decision == played_decision {
            continue;
        }
        if problem.social_welfare(truthful_decision, &profile)? != problem.social_welfare(played_decision, &profile)? {
            let truth = profile.get(player).clone();
            let strategy_utility = mech.utility(player, &played, &truth)?;
            let better_utility = mech.utility(player, &profile, &truth)?;
            return Ok(DominanceVerdict::NotDominant(DominanceWitness {
                player,
                ordering: ordering.clone(),
                profile,
                announcement,
                better: truth,
                strategy_utility,
                better_utility,
            }));
        }
        if inconclusive.is_none() {
            inconclusive = Some((profile, announcement));
        }
    }
    Ok(match inconclusive {
        Some((profile, announcement)) => DominanceVerdict::LemmaInconclusive { profile, announcement },
        None => DominanceVerdict::Dominant { certificate: Certificate::DecisionPreserved, profiles: count },
    })
}

/// Among the `candidates` for player `deviator` that keep `f(θ)` unchanged,
/// the one maximizing `t_target`. Ties go to the smallest candidate.
pub fn decision_preserving_tax_max(
    mech: &Mechanism,
    deviator: PlayerId,
    target: PlayerId,
    profile: &TypeProfile,
    candidates: &[TypeValue],
) -> Result<(TypeValue, Rational)> {
    if deviator == target {
        return Err(Error::PreconditionViolated("deviator and taxed player must differ".into()));
    }
    if !candidates.contains(profile.get(deviator)) {
        return Err(Error::PreconditionViolated(format!(
            "candidate list must contain the true type {}",
            profile.get(deviator)
        )));
    }
    let problem = mech.problem();
    let decision = problem.decide(profile)?;
    let mut sorted: Vec<&TypeValue> = candidates.iter().collect();
    sorted.sort();
    let mut best: Option<(TypeValue, Rational)> = None;
    for candidate in sorted {
        let varied = profile.with(deviator, candidate.clone());
        if problem.decide(&varied)? != decision {
            continue;
        }
        let t = mech.transfer(target, &varied)?;
        if best.as_ref().is_none_or(|(_, b)| t > *b) {
            best = Some((candidate.clone(), t));
        }
    }
    Ok(best.expect("the true type is always feasible"))
}
