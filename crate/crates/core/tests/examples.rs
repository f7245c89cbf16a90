//! Worked examples for every public operation. Values that are not read off
//! the published tables are recomputed by the small integer oracle below,
//! which shares no code with the library.

use seqvcg::mechanism::{
    bigger_condition_holds, classify_deviation, construct_truthfulness_witness, is_strategy_proof as mech_sp,
    DeviationClass, ValuationQuadruple,
};
use seqvcg::oracle::{exhaustive_dominance, verify_projection_equivalence, verify_tax_minimality, GridSpec};
use seqvcg::problem::{is_efficient, is_strategy_proof, Check};
use seqvcg::rational::int;
use seqvcg::scenarios::{
    build_choose_project, build_public_project_1, build_public_project_2, ChooseProjectParams,
    PublicProject1Params, PublicProject2Params,
};
use seqvcg::sequential::{
    decision_preserving_tax_max, classify_by_preservation, run_all_orderings, run_sequential, Certificate,
    DEFAULT_ORDERING_CAP,
};
use seqvcg::*;

mod naive {
    /// Clarke taxes for the binary public project with equal cost shares.
    pub fn public_project_taxes(theta: &[i64], cost: i64) -> Vec<i64> {
        let n = theta.len() as i64;
        assert_eq!(cost % n, 0);
        let share = cost / n;
        let built = theta.iter().sum::<i64>() >= cost;
        (0..theta.len())
            .map(|i| {
                let others: i64 = (0..theta.len()).filter(|&j| j != i).map(|j| theta[j] - share).sum();
                let pivot = -(others.max(0));
                let transfer = pivot + if built { others } else { 0 };
                -transfer
            })
            .collect()
    }

    /// Clarke taxes for choosing among projects; ties to the lowest index.
    pub fn choice_taxes(theta: &[Vec<i64>]) -> Vec<i64> {
        let m = theta[0].len();
        let welfare = |skip: Option<usize>, d: usize| -> i64 {
            theta.iter().enumerate().filter(|(j, _)| Some(*j) != skip).map(|(_, t)| t[d]).sum()
        };
        let mut chosen = 0;
        for d in 1..m {
            if welfare(None, d) > welfare(None, chosen) {
                chosen = d;
            }
        }
        (0..theta.len())
            .map(|i| {
                let best = (0..m).map(|d| welfare(Some(i), d)).max().unwrap();
                best - welfare(Some(i), chosen)
            })
            .collect()
    }
}

fn s(x: i64) -> TypeValue {
    TypeValue::Scalar(int(x))
}

fn v(xs: &[i64]) -> TypeValue {
    TypeValue::Vector(xs.iter().map(|x| int(*x)).collect())
}

fn scalars(xs: &[i64]) -> TypeProfile {
    TypeProfile::scalars(xs.iter().map(|x| int(*x)))
}

fn ints(xs: &[i64]) -> Vec<Rational> {
    xs.iter().map(|x| int(*x)).collect()
}

fn p(i: usize) -> PlayerId {
    PlayerId::new(i)
}

fn pp1(n: usize, cost: i64) -> Mechanism {
    Mechanism::clarke(build_public_project_1(&PublicProject1Params::unbounded(n, int(cost))).unwrap())
}

fn pp2() -> Mechanism {
    Mechanism::clarke(
        build_public_project_2(&PublicProject2Params { cost: int(300), bounds: ints(&[100, 80, 150]) }).unwrap(),
    )
}

fn choice_bounds() -> Vec<Vec<Rational>> {
    vec![ints(&[9, 10]), ints(&[12, 2]), ints(&[34, 40])]
}

fn choice() -> Mechanism {
    Mechanism::clarke(build_choose_project(&ChooseProjectParams { bounds: choice_bounds() }).unwrap())
}

fn example4() -> TypeProfile {
    TypeProfile::new(vec![v(&[6, 9]), v(&[12, 1]), v(&[30, 40])])
}

fn ordering(labels: &str) -> Ordering {
    Ordering::new(labels.bytes().map(|b| p((b - b'A') as usize)).collect()).unwrap()
}

const ORDERINGS: [&str; 6] = ["ABC", "ACB", "BAC", "BCA", "CAB", "CBA"];

#[test]
fn social_welfare_examples() {
    let m = pp1(3, 300);
    assert_eq!(m.problem().social_welfare(Decision::new(1), &scalars(&[60, 70, 250])).unwrap(), int(80));
    assert_eq!(m.problem().social_welfare(Decision::new(0), &scalars(&[60, 70, 250])).unwrap(), int(0));
    assert_eq!(choice().problem().social_welfare(Decision::new(1), &example4()).unwrap(), int(50));
}

#[test]
fn efficient_decision_examples() {
    let m = pp1(3, 300);
    assert_eq!(m.problem().efficient_decision(&scalars(&[60, 70, 250])).unwrap(), Decision::new(1));
    assert_eq!(m.problem().efficient_decision(&scalars(&[60, 70, 150])).unwrap(), Decision::new(0));
    assert_eq!(choice().problem().efficient_decision(&example4()).unwrap(), Decision::new(1));
}

#[test]
fn scenario_rules_are_efficient_on_grids() {
    let grid = Grid::uniform(3, [0, 50, 100, 150, 200, 250, 300].map(s).to_vec()).unwrap();
    assert!(is_efficient(pp1(3, 300).problem(), &grid).unwrap().holds());
    let grid = Grid::new(vec![
        [0, 50, 100].map(s).to_vec(),
        [0, 40, 80].map(s).to_vec(),
        [0, 75, 150].map(s).to_vec(),
    ])
    .unwrap();
    assert!(is_efficient(pp2().problem(), &grid).unwrap().holds());
}

#[test]
fn raw_public_project_is_not_strategy_proof() {
    let m = pp1(2, 300);
    let grid = Grid::uniform(2, [0, 100, 200, 300].map(s).to_vec()).unwrap();
    let Check::Fails(w) = is_strategy_proof(m.problem(), &grid).unwrap() else { panic!("expected a manipulation") };
    // independent search: v_i = d(θ_i − 150), d = [Σ ≥ 300]
    let value = |t: [i64; 2], truth: i64| if t[0] + t[1] >= 300 { truth - 150 } else { 0 };
    let mut first = None;
    'search: for a in [0, 100, 200, 300] {
        for b in [0, 100, 200, 300] {
            for i in 0..2 {
                let truth = [a, b];
                for dev in [0, 100, 200, 300] {
                    let mut announced = truth;
                    announced[i] = dev;
                    if value(announced, truth[i]) > value(truth, truth[i]) {
                        first = Some((truth, i, dev));
                        break 'search;
                    }
                }
            }
        }
    }
    let (truth, i, dev) = first.unwrap();
    assert_eq!((w.profile, w.player, w.deviation), (scalars(&truth), p(i), s(dev)));
    assert!(w.deviation_utility > w.truthful_utility);
    assert!(mech_sp(&m, &grid).unwrap().holds());
}

#[test]
fn clarke_transfers_match_tables() {
    for (theta, expected) in [([60, 70, 250], [0, 0, 70]), ([60, 70, 150], [20, 10, 0])] {
        let taxes = pp1(3, 300).outcome(&scalars(&theta), &scalars(&theta)).unwrap().taxes;
        assert_eq!(taxes, ints(&expected));
        assert_eq!(naive::public_project_taxes(&theta, 300), expected.to_vec());
    }
    let out = choice().outcome(&example4(), &example4()).unwrap();
    assert_eq!(out.taxes, ints(&[1, 0, 8]));
    assert_eq!(naive::choice_taxes(&[vec![6, 9], vec![12, 1], vec![30, 40]]), vec![1, 0, 8]);
    assert_eq!(out.full_utility, ints(&[8, 1, 32]));
}

#[test]
fn outcome_when_a_player_overstates_to_cost() {
    let truth = scalars(&[60, 70, 250]);
    // C announcing 300 keeps C's own tax at 70
    let out = pp1(3, 300).outcome(&scalars(&[60, 70, 300]), &truth).unwrap();
    assert_eq!(out.decision, Decision::new(1));
    assert_eq!(out.taxes, ints(&[0, 0, 70]));
    assert_eq!(naive::public_project_taxes(&[60, 70, 300], 300), vec![0, 0, 70]);
    // A announcing 300 removes C's tax
    let out = pp1(3, 300).outcome(&scalars(&[300, 70, 250]), &truth).unwrap();
    assert_eq!(out.taxes, ints(&[0, 0, 0]));
    assert_eq!(naive::public_project_taxes(&[300, 70, 250], 300), vec![0, 0, 0]);
}

#[test]
fn deviation_classes() {
    let m = pp1(3, 300);
    let r = classify_deviation(&m, &scalars(&[60, 70, 250]), p(2), &s(300)).unwrap();
    assert_eq!(r.class, DeviationClass::SameDecisionEqualUtility);
    assert_eq!(r.truthful_utility, r.deviation_utility);
    let r = classify_deviation(&m, &scalars(&[60, 70, 250]), p(0), &s(60)).unwrap();
    assert_eq!(r.class, DeviationClass::SameDecisionEqualUtility);
    let r = classify_deviation(&m, &scalars(&[60, 70, 150]), p(2), &s(300)).unwrap();
    assert_eq!(r.class, DeviationClass::DifferentDecisionStrictLoss);
    // truthful: v = 0, t = 0. Deviating: v = 50, t = h + v_A + v_B = −0 + (−40 − 30)
    assert_eq!((r.truthful_utility, r.deviation_utility), (int(0), int(-20)));
}

#[test]
fn witness_examples() {
    let quad = |a, b, c, d| ValuationQuadruple {
        d_at_truth: int(a),
        d_at_deviation: int(b),
        alt_at_truth: int(c),
        alt_at_deviation: int(d),
    };
    let q = quad(5, 0, 0, 5);
    assert!(bigger_condition_holds(&q));
    let w = construct_truthfulness_witness(3, s(1), s(2), &q).unwrap();
    assert_eq!((w.q.clone(), w.slack.clone(), w.epsilon.clone()), (int(-5), int(10), int(5)));
    assert_eq!((w.partner_value_d.clone(), w.partner_value_alt.clone()), (int(0), int(0)));
    assert!(w.is_sound());

    // public project, θ = 150, θ' = 0, share 100: v(1,150) = 50, v(1,0) = −100, v(0,·) = 0
    let q = quad(50, -100, 0, 0);
    assert!(bigger_condition_holds(&q));
    let w = construct_truthfulness_witness(3, s(150), s(0), &q).unwrap();
    assert_eq!((w.q.clone(), w.slack.clone(), w.epsilon.clone()), (int(-50), int(150), int(75)));
    assert_eq!(w.partner_value_d, int(25));
    assert!(w.is_sound());

    assert!(!bigger_condition_holds(&quad(3, 3, 3, 3)));
    assert!(matches!(
        construct_truthfulness_witness(3, s(1), s(2), &quad(3, 3, 3, 3)),
        Err(Error::PreconditionViolated(_))
    ));
}

fn table_taxes(m: &Mechanism, strategy: SequentialStrategy, truth: &TypeProfile) -> Vec<Vec<Rational>> {
    let runs = run_all_orderings(m, &vec![strategy; 3], truth, DEFAULT_ORDERING_CAP).unwrap();
    assert_eq!(runs.iter().map(|r| r.ordering.clone()).collect::<Vec<_>>(), ORDERINGS.map(ordering).to_vec());
    runs.into_iter().map(|r| r.outcome.taxes).collect()
}

fn rows(table: [[i64; 3]; 6]) -> Vec<Vec<Rational>> {
    table.iter().map(|r| ints(r)).collect()
}

#[test]
fn sequential_table_one() {
    let taxes = table_taxes(&pp1(3, 300), SequentialStrategy::PublicProject { cost: int(300) }, &scalars(&[60, 70, 250]));
    assert_eq!(taxes, rows([[0, 0, 70], [0, 0, 0], [0, 0, 70], [0, 0, 0], [0, 0, 0], [0, 0, 0]]));
}

#[test]
fn sequential_table_two() {
    let taxes = table_taxes(&pp1(3, 300), SequentialStrategy::PublicProject { cost: int(300) }, &scalars(&[60, 70, 150]));
    assert_eq!(taxes, rows([[0, 0, 0], [0, 10, 0], [0, 0, 0], [20, 0, 0], [0, 10, 0], [20, 0, 0]]));
}

#[test]
fn sequential_table_three() {
    let strategy = SequentialStrategy::BoundedPublicProject { cost: int(300), bounds: ints(&[100, 80, 150]) };
    let taxes = table_taxes(&pp2(), strategy, &scalars(&[60, 70, 150]));
    assert_eq!(taxes, rows([[0, 0, 0], [0, 0, 0], [0, 0, 0], [20, 0, 0], [0, 0, 0], [20, 0, 0]]));
}

#[test]
fn sequential_table_four() {
    let taxes = table_taxes(&choice(), SequentialStrategy::ChooseProject { bounds: choice_bounds() }, &example4());
    assert_eq!(taxes, rows([[0, 0, 8], [0, 0, 0], [0, 0, 8], [1, 0, 1], [0, 0, 0], [1, 0, 1]]));
}

#[test]
fn sequential_runs_recompute_with_naive_taxes() {
    let m = pp1(3, 300);
    let strategies = vec![SequentialStrategy::PublicProject { cost: int(300) }; 3];
    for truth in [[60, 70, 250], [60, 70, 150], [0, 300, 10], [100, 100, 100]] {
        for run in run_all_orderings(&m, &strategies, &scalars(&truth), 8).unwrap() {
            let announced: Vec<i64> = run
                .announced
                .values()
                .iter()
                .map(|t| t.as_scalar().unwrap().to_integer().try_into().unwrap())
                .collect();
            assert_eq!(run.outcome.taxes, ints(&naive::public_project_taxes(&announced, 300)));
        }
    }
}

#[test]
fn example_four_deviations() {
    let m = choice();
    let strategies = vec![SequentialStrategy::ChooseProject { bounds: choice_bounds() }; 3];
    let run = run_sequential(&m, &ordering("BCA"), &strategies, &example4()).unwrap();
    assert_eq!(run.announced, TypeProfile::new(vec![v(&[0, 10]), v(&[12, 1]), v(&[30, 40])]));
    let run = run_sequential(&m, &ordering("ABC"), &strategies, &example4()).unwrap();
    assert_eq!(run.announced.get(p(2)), &v(&[0, 40]));
}

#[test]
fn preservation_classification_of_prescribed_strategies() {
    let m = pp1(3, 300);
    let grid = Grid::uniform(3, [0, 50, 100, 150, 200, 250, 300].map(s).to_vec()).unwrap();
    let strategy = SequentialStrategy::PublicProject { cost: int(300) };
    for o in ORDERINGS {
        for i in 0..3 {
            let verdict = classify_by_preservation(&m, &strategy, &ordering(o), p(i), &grid).unwrap();
            assert_eq!(verdict, DominanceVerdict::Dominant { certificate: Certificate::DecisionPreserved, profiles: 343 });
        }
    }
}

#[test]
fn exhaustive_dominance_examples() {
    let m = pp1(3, 300);
    let spec = GridSpec::new(Grid::uniform(3, [0, 50, 100, 150, 200, 250, 300].map(s).to_vec()).unwrap(), vec![vec![s(0), s(300)]; 3])
        .unwrap();
    for i in 0..3 {
        for strategy in [SequentialStrategy::PublicProject { cost: int(300) }, SequentialStrategy::TruthTelling] {
            let verdict = exhaustive_dominance(&m, &strategy, &Ordering::identity(3), p(i), &spec).unwrap();
            assert_eq!(verdict, DominanceVerdict::Dominant { certificate: Certificate::Exhaustive, profiles: 343 });
        }
    }
    let always_c = SequentialStrategy::custom("always-cost", |_| s(300));
    let verdict = exhaustive_dominance(&m, &always_c, &Ordering::identity(3), p(0), &spec).unwrap();
    let DominanceVerdict::NotDominant(w) = verdict else { panic!("expected refutation") };
    assert!(w.replay(&m, &always_c).unwrap());
}

#[test]
fn tax_minimality_examples() {
    let m = pp1(3, 300);
    let points = [0, 60, 70, 250, 300].map(s).to_vec();
    let truth = scalars(&[60, 70, 250]);
    let spec = GridSpec::with_truth(Grid::uniform(3, points).unwrap(), &[s(0), s(300)], &truth).unwrap();
    let strategy = SequentialStrategy::PublicProject { cost: int(300) };
    for o in ORDERINGS {
        for i in 0..3 {
            assert!(verify_tax_minimality(&m, &strategy, &ordering(o), p(i), &spec).unwrap().holds());
        }
    }

    let m = pp2();
    let grid = Grid::new(vec![
        [0, 25, 50, 60, 75, 100].map(s).to_vec(),
        [0, 20, 40, 60, 70, 80].map(s).to_vec(),
        [0, 37, 75, 112, 150].map(s).to_vec(),
    ])
    .unwrap();
    let spec = GridSpec::new(grid, vec![vec![s(0), s(60), s(100)], vec![s(0), s(70), s(80)], vec![s(0), s(150)]]).unwrap();
    let strategy = SequentialStrategy::BoundedPublicProject { cost: int(300), bounds: ints(&[100, 80, 150]) };
    for o in ORDERINGS {
        for i in 0..3 {
            assert!(verify_tax_minimality(&m, &strategy, &ordering(o), p(i), &spec).unwrap().holds());
        }
    }
}

#[test]
fn eq7_maximizer_examples() {
    let m = pp1(3, 300);
    let grid: Vec<TypeValue> = (0..=5).map(|k| s(60 * k)).collect();
    let (best, t) = decision_preserving_tax_max(&m, p(0), p(2), &scalars(&[60, 70, 250]), &grid).unwrap();
    assert_eq!(t, int(0));
    // t_C(θ'_A) = min(0, θ'_A − 130): every grid value from 180 up attains 0
    assert_eq!(best, s(180));
    let transfer_at_300 = m.transfer(p(2), &scalars(&[300, 70, 250])).unwrap();
    assert_eq!(transfer_at_300, t);

    let grid: Vec<TypeValue> = (0..=6).map(|k| s(50 * k)).collect();
    let (best, t) = decision_preserving_tax_max(&m, p(2), p(0), &scalars(&[60, 70, 150]), &grid).unwrap();
    assert_eq!((best, t), (s(0), int(0)));
    assert_eq!(naive::public_project_taxes(&[60, 70, 0], 300)[0], 0);
}

#[test]
fn projection_equivalence_examples() {
    let spec = GridSpec::new(Grid::uniform(3, [0, 100, 200, 300].map(s).to_vec()).unwrap(), vec![vec![]; 3]).unwrap();
    let report = verify_projection_equivalence(&pp1(3, 300), &spec).unwrap();
    assert!(report.report.holds() && report.strategy_proof.holds());

    let raw = Mechanism::without_transfers(build_public_project_1(&PublicProject1Params::unbounded(2, int(300))).unwrap());
    let spec = GridSpec::new(Grid::uniform(2, [0, 100, 200, 300].map(s).to_vec()).unwrap(), vec![vec![]; 2]).unwrap();
    let report = verify_projection_equivalence(&raw, &spec).unwrap();
    assert!(report.report.holds());
    assert!(!report.strategy_proof.holds());
    assert!(report.projections.iter().any(|v| !v.is_dominant()));
}
