//! VCG transfers, Clarke taxes and the truthfulness analysis of a single
//! (simultaneous) round.
//!
//! A VCG transfer is `t_i(θ) = h_i(θ_{-i}) + Σ_{j≠i} v_j(f(θ), θ_j)`. The
//! Clarke pivot `h_i(θ_{-i}) = −max_d Σ_{j≠i} v_j(d, θ_j)` makes every
//! transfer non-positive; its magnitude is the player's tax.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::problem::{
    find_manipulation, is_efficient, Check, Decision, DecisionProblem, DecisionRule,
    EfficiencyViolation, Grid, ManipulationWitness, PlayerId, TypeProfile, TypeSpace, TypeValue,
    Valuation,
};
use crate::rational::{int, Rational};

/// `h_i` as a function of the player and `θ_{-i}` (in player order, with
/// player `i` removed). The signature makes independence from `θ_i` structural.
pub type PivotFn = dyn Fn(PlayerId, &[TypeValue]) -> Rational + Send + Sync;

#[derive(Clone)]
pub enum TransferScheme {
    Clarke,
    CustomPivot(Arc<PivotFn>),
    /// No transfers at all: utilities are valuations only.
    None,
}

impl fmt::Debug for TransferScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransferScheme::Clarke => f.write_str("Clarke"),
            TransferScheme::CustomPivot(_) => f.write_str("CustomPivot(..)"),
            TransferScheme::None => f.write_str("None"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Mechanism {
    problem: DecisionProblem,
    scheme: TransferScheme,
}

/// Result of one round: decision from the announced profile, transfers from
/// the announced profile, valuations at the true types.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub decision: Decision,
    pub transfers: Vec<Rational>,
    /// `max(0, −t_i)`; for Clarke this is exactly `−t_i`.
    pub taxes: Vec<Rational>,
    pub valuation_utility: Vec<Rational>,
    /// `v_i + t_i`.
    pub full_utility: Vec<Rational>,
}

impl Mechanism {
    pub fn clarke(problem: DecisionProblem) -> Self {
        Mechanism { problem, scheme: TransferScheme::Clarke }
    }

    pub fn with_pivot(problem: DecisionProblem, pivot: Arc<PivotFn>) -> Self {
        Mechanism { problem, scheme: TransferScheme::CustomPivot(pivot) }
    }

    pub fn without_transfers(problem: DecisionProblem) -> Self {
        Mechanism { problem, scheme: TransferScheme::None }
    }

    pub fn problem(&self) -> &DecisionProblem {
        &self.problem
    }

    pub fn scheme(&self) -> &TransferScheme {
        &self.scheme
    }

    /// `h_i(θ_{-i})`. Errors for the transfer-free scheme.
    pub fn pivot(&self, player: PlayerId, others: &[TypeValue]) -> Result<Rational> {
        match &self.scheme {
            TransferScheme::Clarke => {
                if others.len() + 1 != self.problem.players() {
                    return Err(Error::ProfileLength {
                        expected: self.problem.players() - 1,
                        found: others.len(),
                    });
                }
                let mut best: Option<Rational> = None;
                for d in self.problem.decisions() {
                    let mut sum = Rational::zero();
                    for (k, ty) in others.iter().enumerate() {
                        let j = if k < player.index() { k } else { k + 1 };
                        sum += self.problem.value(d, PlayerId::new(j), ty)?;
                    }
                    if best.as_ref().is_none_or(|b| sum > *b) {
                        best = Some(sum);
                    }
                }
                Ok(-best.ok_or(Error::EmptyDecisionSet)?)
            }
            TransferScheme::CustomPivot(h) => Ok(h(player, others)),
            TransferScheme::None => Err(Error::PreconditionViolated(
                "mechanism without transfers has no pivot terms".into(),
            )),
        }
    }

    fn transfer_at(&self, player: PlayerId, decision: Decision, announced: &TypeProfile) -> Result<Rational> {
        if matches!(self.scheme, TransferScheme::None) {
            return Ok(Rational::zero());
        }
        let mut others_welfare = Rational::zero();
        for j in self.problem.player_ids().filter(|j| *j != player) {
            others_welfare += self.problem.value(decision, j, announced.get(j))?;
        }
        Ok(self.pivot(player, &announced.without(player))? + others_welfare)
    }

    /// `t_i(θ)` for every player, computed from announced types only.
    pub fn transfers(&self, announced: &TypeProfile) -> Result<Vec<Rational>> {
        let decision = self.problem.decide(announced)?;
        self.problem
            .player_ids()
            .map(|p| self.transfer_at(p, decision, announced))
            .collect()
    }

    pub fn transfer(&self, player: PlayerId, announced: &TypeProfile) -> Result<Rational> {
        let decision = self.problem.decide(announced)?;
        self.transfer_at(player, decision, announced)
    }

    /// `u_i((f,t)(announced), θ_i) = v_i(f(announced), θ_i) + t_i(announced)`.
    pub fn utility(&self, player: PlayerId, announced: &TypeProfile, truth: &TypeValue) -> Result<Rational> {
        let decision = self.problem.decide(announced)?;
        Ok(self.problem.value(decision, player, truth)? + self.transfer_at(player, decision, announced)?)
    }

    pub fn outcome(&self, announced: &TypeProfile, truth: &TypeProfile) -> Result<Outcome> {
        self.problem.validate_profile(truth)?;
        let decision = self.problem.decide(announced)?;
        let transfers: Vec<Rational> = self
            .problem
            .player_ids()
            .map(|p| self.transfer_at(p, decision, announced))
            .collect::<Result<_>>()?;
        let valuation_utility: Vec<Rational> = self
            .problem
            .player_ids()
            .map(|p| self.problem.value(decision, p, truth.get(p)))
            .collect::<Result<_>>()?;
        let taxes = transfers
            .iter()
            .map(|t| if t.is_negative() { -t.clone() } else { Rational::zero() })
            .collect();
        let full_utility = valuation_utility.iter().zip(&transfers).map(|(v, t)| v + t).collect();
        Ok(Outcome { decision, transfers, taxes, valuation_utility, full_utility })
    }
}

/// Strategy-proofness of the transfer-based rule `(f, t)`, judged by `u_i`.
pub fn is_strategy_proof(mech: &Mechanism, grid: &Grid) -> Result<Check<ManipulationWitness>> {
    find_manipulation(mech.problem(), grid, |announced, player, truth| {
        mech.utility(player, announced, truth)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeviationClass {
    /// The deviation leaves the decision unchanged; utilities coincide.
    SameDecisionEqualUtility,
    /// The decision changes and society is not indifferent: the deviator loses.
    DifferentDecisionStrictLoss,
    /// The decision changes but welfare ties; no conclusion is drawn.
    DifferentDecisionEqualWelfare,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeviationReport {
    pub class: DeviationClass,
    pub truthful_decision: Decision,
    pub deviation_decision: Decision,
    pub truthful_utility: Rational,
    pub deviation_utility: Rational,
}

/// Classifies a unilateral deviation by decision change and welfare gap
/// (both welfares evaluated at the true profile). `f` should be efficient.
pub fn classify_deviation(
    mech: &Mechanism,
    profile: &TypeProfile,
    player: PlayerId,
    deviation: &TypeValue,
) -> Result<DeviationReport> {
    let problem = mech.problem();
    problem.check_type(player, deviation)?;
    let announced = profile.with(player, deviation.clone());
    let truthful_decision = problem.decide(profile)?;
    let deviation_decision = problem.decide(&announced)?;
    let truth = profile.get(player);
    let truthful_utility = mech.utility(player, profile, truth)?;
    let deviation_utility = mech.utility(player, &announced, truth)?;
    let class = if truthful_decision == deviation_decision {
        DeviationClass::SameDecisionEqualUtility
    } else if problem.social_welfare(truthful_decision, profile)?
        != problem.social_welfare(deviation_decision, profile)?
    {
        DeviationClass::DifferentDecisionStrictLoss
    } else {
        DeviationClass::DifferentDecisionEqualWelfare
    };
    Ok(DeviationReport { class, truthful_decision, deviation_decision, truthful_utility, deviation_utility })
}

/// The deviator's valuations at the two decisions `d = f(θ_i, θ_{-i})` and
/// `d' = f(θ'_i, θ_{-i})`, each at the true type and the deviation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValuationQuadruple {
    /// `v_i(d, θ_i)`
    pub d_at_truth: Rational,
    /// `v_i(d, θ'_i)`
    pub d_at_deviation: Rational,
    /// `v_i(d', θ_i)`
    pub alt_at_truth: Rational,
    /// `v_i(d', θ'_i)`
    pub alt_at_deviation: Rational,
}

impl ValuationQuadruple {
    /// `v_i(d,θ_i) + v_i(d',θ'_i) − v_i(d,θ'_i) − v_i(d',θ_i)`.
    pub fn slack(&self) -> Rational {
        &self.d_at_truth + &self.alt_at_deviation - &self.d_at_deviation - &self.alt_at_truth
    }
}

/// `v_i(d,θ'_i) + v_i(d',θ_i) < v_i(d,θ_i) + v_i(d',θ'_i)`.
pub fn bigger_condition_holds(values: &ValuationQuadruple) -> bool {
    values.slack().is_positive()
}

/// Two-profile problem in which truth-telling is strictly better for the
/// deviator, built from the deviator's four valuations alone.
#[derive(Clone, Debug)]
pub struct WitnessConstruction {
    pub deviator: PlayerId,
    pub partner: PlayerId,
    /// `v_i(d',θ_i) − v_i(d,θ_i)`
    pub q: Rational,
    pub slack: Rational,
    /// Chosen as `slack / 2`.
    pub epsilon: Rational,
    /// `v_j(d, θ_j) = q + ε`
    pub partner_value_d: Rational,
    /// `v_j(d', θ_j) = 0`
    pub partner_value_alt: Rational,
    pub problem: DecisionProblem,
    pub truthful_profile: TypeProfile,
    pub deviation_profile: TypeProfile,
    /// Efficiency of the table rule over both profiles.
    pub efficiency: Check<EfficiencyViolation>,
    pub truthful_utility: Rational,
    pub deviation_utility: Rational,
}

impl WitnessConstruction {
    pub fn utility_loss(&self) -> Rational {
        &self.truthful_utility - &self.deviation_utility
    }

    /// Efficient on both profiles, and the deviation loses exactly `ε`.
    pub fn is_sound(&self) -> bool {
        self.efficiency.holds() && self.epsilon.is_positive() && self.utility_loss() == self.epsilon
    }
}

/// Builds the witness problem for `players ≥ 2` players. Player 1 deviates,
/// player 2 carries the constructed valuation, everyone else values every
/// decision at 0. Refuses inputs for which no such problem can exist.
pub fn construct_truthfulness_witness(
    players: usize,
    truth: TypeValue,
    deviation: TypeValue,
    values: &ValuationQuadruple,
) -> Result<WitnessConstruction> {
    if players < 2 {
        return Err(Error::InvalidParameters("witness construction needs at least two players".into()));
    }
    if !bigger_condition_holds(values) {
        return Err(Error::PreconditionViolated(format!(
            "v_i(d,θ'_i) + v_i(d',θ_i) < v_i(d,θ_i) + v_i(d',θ'_i) fails (slack {}); \
             no utilities for the other players make truth-telling strictly better",
            values.slack()
        )));
    }
    let deviator = PlayerId::new(0);
    let partner = PlayerId::new(1);
    let slack = values.slack();
    let epsilon = &slack / int(2);
    let q = &values.alt_at_truth - &values.d_at_truth;
    let partner_value_d = &q + &epsilon;
    let partner_value_alt = Rational::zero();

    let d = Decision::new(0);
    let alt = Decision::new(1);
    let filler = TypeValue::Scalar(Rational::zero());
    let mut rows = vec![BTreeMap::from([(filler.clone(), vec![Rational::zero(), Rational::zero()])]); players];
    rows[deviator.index()] = BTreeMap::from([
        (truth.clone(), vec![values.d_at_truth.clone(), values.alt_at_truth.clone()]),
        (deviation.clone(), vec![values.d_at_deviation.clone(), values.alt_at_deviation.clone()]),
    ]);
    rows[partner.index()] =
        BTreeMap::from([(filler.clone(), vec![partner_value_d.clone(), partner_value_alt.clone()])]);

    let mut truthful = vec![filler.clone(); players];
    truthful[deviator.index()] = truth.clone();
    let truthful_profile = TypeProfile::new(truthful);
    let deviation_profile = truthful_profile.with(deviator, deviation.clone());

    let mut spaces = vec![TypeSpace::finite(vec![filler])?; players];
    spaces[deviator.index()] = TypeSpace::finite(vec![truth, deviation])?;
    let rule = DecisionRule::Table(BTreeMap::from([
        (truthful_profile.clone(), d),
        (deviation_profile.clone(), alt),
    ]));
    let problem = DecisionProblem::new(vec!["d".into(), "d'".into()], spaces, Valuation::Table(rows), rule)?;

    let grid = Grid::new(
        problem
            .type_spaces()
            .iter()
            .map(|s| match s {
                TypeSpace::FiniteSet(v) => v.clone(),
                _ => unreachable!("witness spaces are finite"),
            })
            .collect(),
    )?;
    let efficiency = is_efficient(&problem, &grid)?;
    let mech = Mechanism::clarke(problem.clone());
    let true_type = truthful_profile.get(deviator);
    let truthful_utility = mech.utility(deviator, &truthful_profile, true_type)?;
    let deviation_utility = mech.utility(deviator, &deviation_profile, true_type)?;

    Ok(WitnessConstruction {
        deviator,
        partner,
        q,
        slack,
        epsilon,
        partner_value_d,
        partner_value_alt,
        problem,
        truthful_profile,
        deviation_profile,
        efficiency,
        truthful_utility,
        deviation_utility,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::TypeSpace;
    use crate::rational::int;

    fn quad(a: i64, b: i64, c: i64, d: i64) -> ValuationQuadruple {
        ValuationQuadruple { d_at_truth: int(a), d_at_deviation: int(b), alt_at_truth: int(c), alt_at_deviation: int(d) }
    }

    fn zero_problem() -> DecisionProblem {
        DecisionProblem::new(
            vec!["a".into(), "b".into()],
            vec![TypeSpace::NonNegative; 3],
            Valuation::PublicProject { cost_share: int(0) },
            DecisionRule::Table(
                [(TypeProfile::scalars([int(0), int(0), int(0)]), Decision::new(0))].into(),
            ),
        )
        .unwrap()
    }

    #[test]
    fn zero_valuations_give_zero_outcome() {
        let mech = Mechanism::clarke(zero_problem());
        let p = TypeProfile::scalars([int(0), int(0), int(0)]);
        let out = mech.outcome(&p, &p).unwrap();
        assert!(out.transfers.iter().chain(&out.full_utility).all(Zero::is_zero));
    }

    #[test]
    fn custom_pivot_sees_only_others() {
        let pivot: Arc<PivotFn> = Arc::new(|_, others: &[TypeValue]| {
            others.iter().map(|t| t.as_scalar().unwrap().clone()).sum()
        });
        let problem = zero_problem()
            .with_rule(DecisionRule::EfficientArgmax)
            .unwrap();
        let mech = Mechanism::with_pivot(problem, pivot);
        let p = TypeProfile::scalars([int(1), int(2), int(3)]);
        // v_i = d·θ_i picks b; t_i = h_i + Σ_{j≠i} θ_j = 2·Σ_{j≠i} θ_j
        assert_eq!(mech.transfers(&p).unwrap(), vec![int(10), int(8), int(6)]);
        let out = mech.outcome(&p, &p).unwrap();
        assert!(out.taxes.iter().all(Zero::is_zero));
    }

    #[test]
    fn no_transfer_scheme_has_no_pivot() {
        let mech = Mechanism::without_transfers(zero_problem());
        assert!(mech.pivot(PlayerId::new(0), &[]).is_err());
        let p = TypeProfile::scalars([int(0), int(0), int(0)]);
        assert!(mech.transfers(&p).unwrap().iter().all(Zero::is_zero));
    }

    #[test]
    fn bigger_condition_examples() {
        assert!(bigger_condition_holds(&quad(5, 0, 0, 5)));
        assert!(!bigger_condition_holds(&quad(3, 3, 3, 3)));
        // v_i(d,θ) = d(θ − 100), d = 1, d' = 0, θ_i = 150, θ'_i = 0
        assert!(bigger_condition_holds(&quad(50, -100, 0, 0)));
    }

    #[test]
    fn witness_for_symmetric_quadruple() {
        let w = construct_truthfulness_witness(2, int(1).into(), int(2).into(), &quad(5, 0, 0, 5)).unwrap();
        assert_eq!((w.q.clone(), w.slack.clone(), w.epsilon.clone()), (int(-5), int(10), int(5)));
        assert_eq!((w.partner_value_d.clone(), w.partner_value_alt.clone()), (int(0), int(0)));
        assert!(w.is_sound());
    }

    #[test]
    fn witness_for_public_project_instance() {
        let w = construct_truthfulness_witness(3, int(150).into(), int(0).into(), &quad(50, -100, 0, 0))
            .unwrap();
        assert_eq!(w.q, int(-50));
        assert_eq!(w.slack, int(150));
        assert_eq!(w.epsilon, int(75));
        assert_eq!(w.partner_value_d, int(25));
        assert!(w.is_sound());
    }

    #[test]
    fn witness_refused_without_strict_condition() {
        let err = construct_truthfulness_witness(2, int(1).into(), int(2).into(), &quad(4, 4, 4, 4)).unwrap_err();
        assert!(matches!(err, Error::PreconditionViolated(_)));
    }
}
