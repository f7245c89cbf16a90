//! Brute-force verification on finite grids.
//!
//! Everything here enumerates the full quantifier domain and compares
//! utilities or transfers directly; nothing relies on the decision
//! preservation shortcut used by [`crate::sequential::classify_by_preservation`].
//! Witnesses are always the first violation in lexicographic profile order.

use std::fmt;

use itertools::Itertools;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::mechanism::{self, Mechanism};
use crate::problem::{Check, Grid, ManipulationWitness, PlayerId, TypeProfile, TypeValue};
use crate::rational::Rational;
use crate::sequential::{
    announce_at, Certificate, DominanceVerdict, DominanceWitness, Ordering, SequentialStrategy,
};

/// A grid together with the points it is required to contain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridSpec {
    grid: Grid,
    required: Vec<Vec<TypeValue>>,
}

impl GridSpec {
    /// `required[i]` lists the values player `i`'s row must contain
    /// (typically 0, the cost or bound, and the true type).
    pub fn new(grid: Grid, required: Vec<Vec<TypeValue>>) -> Result<Self> {
        if required.len() != grid.players() {
            return Err(Error::ProfileLength { expected: grid.players(), found: required.len() });
        }
        for (i, points) in required.iter().enumerate() {
            let player = PlayerId::new(i);
            if let Some(missing) = points.iter().find(|v| !grid.contains(player, v)) {
                return Err(Error::GridMissingPoint { player, value: missing.clone() });
            }
        }
        grid.check_cap()?;
        Ok(GridSpec { grid, required })
    }

    /// Same required points for every player, plus each player's entry of `truth`.
    pub fn with_truth(grid: Grid, common: &[TypeValue], truth: &TypeProfile) -> Result<Self> {
        let required = truth
            .values()
            .iter()
            .map(|t| common.iter().cloned().chain([t.clone()]).collect())
            .collect();
        GridSpec::new(grid, required)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn required(&self, player: PlayerId) -> &[TypeValue] {
        &self.required[player.index()]
    }

    pub fn profile_count(&self) -> u128 {
        self.grid.profile_count()
    }
}

/// `0, step, 2·step, …` up to `upper`, with `upper` itself always included.
pub fn scalar_points(upper: &Rational, step: &Rational) -> Result<Vec<TypeValue>> {
    if !step.is_positive() || upper.is_negative() {
        return Err(Error::InvalidParameters(format!("grid step {step} with upper bound {upper}")));
    }
    let mut points = Vec::new();
    let mut x = Rational::zero();
    while &x < upper {
        points.push(TypeValue::Scalar(x.clone()));
        x += step;
    }
    points.push(TypeValue::Scalar(upper.clone()));
    Ok(points)
}

/// Cartesian product of per-coordinate value lists, as vector types.
pub fn box_points(coordinates: &[Vec<Rational>]) -> Vec<TypeValue> {
    coordinates
        .iter()
        .map(|c| c.iter().cloned())
        .multi_cartesian_product()
        .map(TypeValue::Vector)
        .collect()
}

/// Checks `u_i(s_i(θ_1..θ_i), θ_{-i}) ≥ u_i(θ'_i, θ_{-i})` for every grid
/// profile `θ` and every grid deviation `θ'_i`.
pub fn exhaustive_dominance(
    mech: &Mechanism,
    strategy: &SequentialStrategy,
    ordering: &Ordering,
    player: PlayerId,
    spec: &GridSpec,
) -> Result<DominanceVerdict> {
    let problem = mech.problem();
    let grid = spec.grid();
    grid.check_within(problem)?;
    let mut count = 0u128;
    for profile in grid.profiles()? {
        count += 1;
        let truth = profile.get(player).clone();
        let announcement = announce_at(strategy, ordering, player, &profile)?;
        problem.check_type(player, &announcement)?;
        let strategy_utility = mech.utility(player, &profile.with(player, announcement.clone()), &truth)?;
        for deviation in grid.values(player) {
            let u = mech.utility(player, &profile.with(player, deviation.clone()), &truth)?;
            if u > strategy_utility {
                return Ok(DominanceVerdict::NotDominant(DominanceWitness {
                    player,
                    ordering: ordering.clone(),
                    profile,
                    announcement,
                    better: deviation.clone(),
                    strategy_utility,
                    better_utility: u,
                }));
            }
        }
    }
    Ok(DominanceVerdict::Dominant { certificate: Certificate::Exhaustive, profiles: count })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Claim {
    TaxMinimality,
    ProjectionEquivalence,
}

impl fmt::Display for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Claim::TaxMinimality => f.write_str("tax minimality"),
            Claim::ProjectionEquivalence => f.write_str("projection equivalence"),
        }
    }
}

/// Player `deviator`'s strategic announcement leaves `target` with a lower
/// transfer than the decision-preserving alternative `better`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaxWitness {
    pub deviator: PlayerId,
    pub target: PlayerId,
    pub ordering: Ordering,
    pub profile: TypeProfile,
    pub announcement: TypeValue,
    pub announcement_transfer: Rational,
    pub better: TypeValue,
    pub better_transfer: Rational,
}

impl TaxWitness {
    pub fn replay(&self, mech: &Mechanism, strategy: &SequentialStrategy) -> Result<bool> {
        let problem = mech.problem();
        let announcement = announce_at(strategy, &self.ordering, self.deviator, &self.profile)?;
        let alternative = self.profile.with(self.deviator, self.better.clone());
        let preserved = problem.decide(&alternative)? == problem.decide(&self.profile)?;
        let ours = mech.transfer(self.target, &self.profile.with(self.deviator, announcement.clone()))?;
        let theirs = mech.transfer(self.target, &alternative)?;
        Ok(announcement == self.announcement && self.profile.get(self.deviator) != &announcement && preserved && ours < theirs)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Tax(TaxWitness),
    /// Strategy-proofness of the direct rule and dominance of truthful
    /// projections disagree.
    Disagreement { strategy_proof: bool, projections_dominant: bool },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails(Violation),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationReport {
    pub claim: Claim,
    /// Number of grid profiles quantified over.
    pub domain_size: u128,
    /// Number of individual comparisons performed.
    pub evaluations: u128,
    pub verdict: Verdict,
}

impl VerificationReport {
    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.claim)?;
        match &self.verdict {
            Verdict::Holds => write!(
                f,
                "holds on {} profiles ({} comparisons)",
                self.domain_size, self.evaluations
            ),
            Verdict::Fails(Violation::Tax(w)) => write!(
                f,
                "fails at profile {}: player {} announces {} giving player {} transfer {}, \
                 but announcing {} keeps the decision and gives {}",
                w.profile, w.deviator, w.announcement, w.target, w.announcement_transfer, w.better, w.better_transfer
            ),
            Verdict::Fails(Violation::Disagreement { strategy_proof, projections_dominant }) => write!(
                f,
                "fails: direct rule strategy-proof = {strategy_proof}, truthful projections dominant = {projections_dominant}"
            ),
        }
    }
}

/// Whenever the strategy departs from the truth, no decision-preserving grid
/// deviation gives any other player a higher transfer.
pub fn verify_tax_minimality(
    mech: &Mechanism,
    strategy: &SequentialStrategy,
    ordering: &Ordering,
    deviator: PlayerId,
    spec: &GridSpec,
) -> Result<VerificationReport> {
    let problem = mech.problem();
    let grid = spec.grid();
    grid.check_within(problem)?;
    let mut domain_size = 0u128;
    let mut evaluations = 0u128;
    for profile in grid.profiles()? {
        domain_size += 1;
        let announcement = announce_at(strategy, ordering, deviator, &profile)?;
        if &announcement == profile.get(deviator) {
            continue;
        }
        problem.check_type(deviator, &announcement)?;
        let decision = problem.decide(&profile)?;
        let played = profile.with(deviator, announcement.clone());
        let preserving: Vec<(TypeValue, TypeProfile)> = grid
            .values(deviator)
            .iter()
            .map(|v| (v.clone(), profile.with(deviator, v.clone())))
            .filter_map(|(v, p)| match problem.decide(&p) {
                Ok(d) if d == decision => Some(Ok((v, p))),
                Ok(_) => None,
                Err(e) => Some(Err(e)),
            })
            .collect::<Result<_>>()?;
        for target in problem.player_ids().filter(|j| *j != deviator) {
            let announcement_transfer = mech.transfer(target, &played)?;
            for (value, alternative) in &preserving {
                evaluations += 1;
                let t = mech.transfer(target, alternative)?;
                if t > announcement_transfer {
                    return Ok(VerificationReport {
                        claim: Claim::TaxMinimality,
                        domain_size: grid.profile_count(),
                        evaluations,
                        verdict: Verdict::Fails(Violation::Tax(TaxWitness {
                            deviator,
                            target,
                            ordering: ordering.clone(),
                            profile,
                            announcement,
                            announcement_transfer,
                            better: value.clone(),
                            better_transfer: t,
                        })),
                    });
                }
            }
        }
    }
    Ok(VerificationReport { claim: Claim::TaxMinimality, domain_size, evaluations, verdict: Verdict::Holds })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProjectionReport {
    pub report: VerificationReport,
    /// Strategy-proofness of the direct rule, judged by the mechanism's utilities.
    pub strategy_proof: Check<ManipulationWitness>,
    /// Exhaustive dominance of truth-telling for each player.
    pub projections: Vec<DominanceVerdict>,
}

/// Strategy-proofness of the direct rule holds exactly when truthful
/// projections are dominant for every player in the sequential game.
/// Projections ignore the prefix, so the identity ordering suffices.
pub fn verify_projection_equivalence(mech: &Mechanism, spec: &GridSpec) -> Result<ProjectionReport> {
    let strategy_proof = mechanism::is_strategy_proof(mech, spec.grid())?;
    let n = mech.problem().players();
    let ordering = Ordering::identity(n);
    let projections: Vec<DominanceVerdict> = mech
        .problem()
        .player_ids()
        .map(|p| exhaustive_dominance(mech, &SequentialStrategy::TruthTelling, &ordering, p, spec))
        .collect::<Result<_>>()?;
    let sp = strategy_proof.holds();
    let dominant = projections.iter().all(DominanceVerdict::is_dominant);
    let per_check = spec.profile_count() * spec.grid().players() as u128;
    let report = VerificationReport {
        claim: Claim::ProjectionEquivalence,
        domain_size: spec.profile_count(),
        evaluations: 2 * per_check,
        verdict: if sp == dominant {
            Verdict::Holds
        } else {
            Verdict::Fails(Violation::Disagreement { strategy_proof: sp, projections_dominant: dominant })
        },
    };
    Ok(ProjectionReport { report, strategy_proof, projections })
}
