//! Acceptance suite. Each criterion prints one `PASS`/`FAIL` line (written
//! straight to stdout so it shows even when test output is captured) and
//! fails its test when the criterion is not met.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seqvcg::mechanism::{
    self, classify_deviation, construct_truthfulness_witness, DeviationClass, ValuationQuadruple,
};
use seqvcg::oracle::{exhaustive_dominance, verify_projection_equivalence, verify_tax_minimality, GridSpec, Verdict, Violation};
use seqvcg::problem::is_efficient;
use seqvcg::rational::{int, ratio};
use seqvcg::scenarios::{choose_project_announcement, public_project_announcement, Branch};
use seqvcg::sequential::{classify_by_preservation, Certificate, StrategyContext, DEFAULT_ORDERING_CAP};
use seqvcg::*;
use seqvcg_cli::config::ScenarioConfig;
use seqvcg_cli::tables::{builtin_scenario, reproduce, TableResult};

fn report(number: u32, name: &str, result: Result<String, String>) {
    let line = match &result {
        Ok(detail) => format!("acceptance criterion {number} ({name}): PASS - {detail}\n"),
        Err(detail) => format!("acceptance criterion {number} ({name}): FAIL - {detail}\n"),
    };
    std::io::stdout().write_all(line.as_bytes()).unwrap();
    if let Err(detail) = result {
        panic!("criterion {number} failed: {detail}");
    }
}

fn table(results: &[TableResult], id: &str) -> TableResult {
    results.iter().find(|t| t.id == id).cloned().expect("table present")
}

fn cell(t: &TableResult, row: &str, column: &str) -> (Rational, Rational) {
    let c = t.cells.iter().find(|c| c.row == row && c.column == column).expect("cell present");
    (c.expected.clone(), c.computed.clone())
}

const EXAMPLES: [&str; 4] = ["example1", "example2", "example3", "example4"];

#[test]
fn criterion_1_simultaneous_clarke_taxes() {
    let result = (|| {
        let results = reproduce(None).map_err(|e| e.to_string())?;
        let mut checked = 0;
        let mut failures = Vec::new();
        let mut check = |id: &str, row: &str, column: &str, published: i64| {
            let (expected, computed) = cell(&table(&results, id), row, column);
            assert_eq!(expected, int(published), "reference data transcription");
            checked += 1;
            if computed != expected {
                failures.push(format!("table {id} {row} {column}: published {expected}, computed {computed}"));
            }
        };
        for (id, taxes) in [("1", [0, 0, 70]), ("2", [20, 10, 0]), ("3", [20, 10, 0]), ("4", [1, 0, 8])] {
            for (row, tax) in ["A", "B", "C"].iter().zip(taxes) {
                check(id, row, "tax", tax);
            }
        }
        for (row, u) in ["A", "B", "C"].iter().zip([8, 0, 32]) {
            check("4", row, "utility (u_utility)", u);
        }
        if failures.is_empty() {
            Ok(format!("{checked} cells exact"))
        } else {
            Err(format!("{} of {checked} cells differ: {}", failures.len(), failures.join("; ")))
        }
    })();
    report(1, "simultaneous Clarke taxes", result);
}

#[test]
fn criterion_2_sequential_tables() {
    let result = (|| {
        let results = reproduce(None).map_err(|e| e.to_string())?;
        let mut problems = Vec::new();
        let mut exact = 0;
        for id in ["1a", "2a", "3a", "4a"] {
            let t = table(&results, id);
            let rows: Vec<&str> = t.cells.iter().map(|c| c.row.as_str()).collect();
            if rows.len() != 18 {
                problems.push(format!("table {id} has {} cells", rows.len()));
            }
            exact += t.cells.iter().filter(|c| c.matches()).count();
            problems.extend(t.mismatches().map(|c| format!("table {id} {} {}", c.row, c.column)));
        }
        let zero_rows = |id: &str| {
            let t = table(&results, id);
            let mut by_row: BTreeMap<&str, bool> = BTreeMap::new();
            for c in &t.cells {
                *by_row.entry(c.row.as_str()).or_insert(true) &= c.computed == int(0);
            }
            by_row.values().filter(|z| **z).count()
        };
        for (id, expected) in [("1a", 4), ("2a", 2), ("3a", 4)] {
            if zero_rows(id) != expected {
                problems.push(format!("table {id}: {} all-zero orderings, expected {expected}", zero_rows(id)));
            }
        }
        let t3 = table(&results, "3a");
        for row in ["B C A", "C B A"] {
            if cell(&t3, row, "t_A").1 != int(20) {
                problems.push(format!("table 3a {row}: t_A is not 20"));
            }
        }
        if problems.is_empty() {
            Ok(format!("{exact}/72 cells exact, all-zero ordering counts 4/2/4, t_A = 20 persists in 3a"))
        } else {
            Err(problems.join("; "))
        }
    })();
    report(2, "sequential tables", result);
}

#[test]
fn criterion_3_dominance_certification() {
    let result = (|| {
        let mut certified = 0;
        for name in EXAMPLES {
            let config = builtin_scenario(name).map_err(|e| e.to_string())?;
            let spec = config.grid_spec(None, None).map_err(|e| e.to_string())?;
            for p in config.mechanism.problem().player_ids() {
                if spec.grid().values(p).len() < 5 {
                    return Err(format!("{name}: grid of {p} has fewer than 5 points"));
                }
            }
            for ordering in Ordering::all(3, DEFAULT_ORDERING_CAP).unwrap() {
                for p in config.mechanism.problem().player_ids() {
                    let strategy = &config.strategies[p.index()];
                    let lemma = classify_by_preservation(&config.mechanism, strategy, &ordering, p, spec.grid())
                        .map_err(|e| e.to_string())?;
                    let exhaustive = exhaustive_dominance(&config.mechanism, strategy, &ordering, p, &spec)
                        .map_err(|e| e.to_string())?;
                    if !matches!(lemma, DominanceVerdict::Dominant { certificate: Certificate::DecisionPreserved, .. }) {
                        return Err(format!("{name} ordering {ordering} player {p}: {lemma}"));
                    }
                    if !exhaustive.is_dominant() {
                        return Err(format!("{name} ordering {ordering} player {p}: exhaustive {exhaustive}"));
                    }
                    certified += 1;
                }
            }
        }
        Ok(format!("{certified} (scenario, ordering, position) triples certified by both checks"))
    })();
    report(3, "dominance certification", result);
}

/// A random finite problem with table valuations: `n ≤ 3` players, `|D| ≤ 3`, `|Θ_i| ≤ 3`.
fn random_problem(rng: &mut ChaCha8Rng, rule: impl FnOnce(&mut ChaCha8Rng, &Grid, usize) -> DecisionRule) -> (DecisionProblem, Grid) {
    let n = rng.gen_range(1..=3);
    let m = rng.gen_range(1..=3);
    let mut spaces = Vec::new();
    let mut rows = Vec::new();
    let mut grid_rows = Vec::new();
    for _ in 0..n {
        let k = rng.gen_range(1..=3);
        let types: Vec<TypeValue> = (0..k).map(|t| TypeValue::Scalar(int(t))).collect();
        let row: BTreeMap<TypeValue, Vec<Rational>> =
            types.iter().map(|t| (t.clone(), (0..m).map(|_| int(rng.gen_range(-6..=6))).collect())).collect();
        spaces.push(TypeSpace::finite(types.clone()).unwrap());
        rows.push(row);
        grid_rows.push(types);
    }
    let grid = Grid::new(grid_rows).unwrap();
    let rule = rule(rng, &grid, m);
    let labels = (0..m).map(|d| format!("d{d}")).collect();
    (DecisionProblem::new(labels, spaces, Valuation::Table(rows), rule).unwrap(), grid)
}

#[test]
fn criterion_4_vcg_property_suite() {
    let result = (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut checks = 0;
        for k in 0..50 {
            let (problem, grid) = random_problem(&mut rng, |_, _, _| DecisionRule::EfficientArgmax);
            if !is_efficient(&problem, &grid).map_err(|e| e.to_string())?.holds() {
                return Err(format!("problem {k}: argmax rule not efficient"));
            }
            let mech = Mechanism::clarke(problem);
            let n = mech.problem().players();
            let spec = GridSpec::new(grid, vec![vec![]; n]).map_err(|e| e.to_string())?;
            for p in mech.problem().player_ids() {
                let v = exhaustive_dominance(&mech, &SequentialStrategy::TruthTelling, &Ordering::identity(n), p, &spec)
                    .map_err(|e| e.to_string())?;
                if !v.is_dominant() {
                    return Err(format!("problem {k}: {v}"));
                }
                checks += 1;
            }
        }
        Ok(format!("50 problems, {checks} player checks, zero violations"))
    })();
    report(4, "VCG property suite", result);
}

fn scalar_of(v: &TypeValue) -> Rational {
    v.as_scalar().cloned().expect("scalar type")
}

fn mutation_witness(
    mech: &Mechanism,
    strategy: &SequentialStrategy,
    spec: &GridSpec,
) -> Result<Option<(Ordering, PlayerId, String)>, String> {
    for ordering in Ordering::all(mech.problem().players(), DEFAULT_ORDERING_CAP).unwrap() {
        for p in mech.problem().player_ids() {
            let report = verify_tax_minimality(mech, strategy, &ordering, p, spec).map_err(|e| e.to_string())?;
            if let Verdict::Fails(Violation::Tax(w)) = &report.verdict {
                if !w.replay(mech, strategy).map_err(|e| e.to_string())? {
                    return Err(format!("witness does not replay: {report}"));
                }
                return Ok(Some((ordering, p, report.to_string())));
            }
        }
    }
    Ok(None)
}

#[test]
fn criterion_5_tax_minimality() {
    let result = (|| {
        let mut verified = 0;
        for name in EXAMPLES {
            let config = builtin_scenario(name).map_err(|e| e.to_string())?;
            let spec = config.grid_spec(None, None).map_err(|e| e.to_string())?;
            for ordering in Ordering::all(3, DEFAULT_ORDERING_CAP).unwrap() {
                for p in config.mechanism.problem().player_ids() {
                    let r = verify_tax_minimality(&config.mechanism, &config.strategies[p.index()], &ordering, p, &spec)
                        .map_err(|e| e.to_string())?;
                    if !r.holds() {
                        return Err(format!("{name} ordering {ordering} player {p}: {r}"));
                    }
                    verified += 1;
                }
            }
        }

        let cost = int(300);
        let pp1 = builtin_scenario("example1").map_err(|e| e.to_string())?.mechanism;
        let coarse = GridSpec::new(
            Grid::uniform(3, (0..=6).map(|k| TypeValue::Scalar(int(50 * k))).collect()).unwrap(),
            vec![vec![TypeValue::Scalar(int(0)), TypeValue::Scalar(cost.clone())]; 3],
        )
        .map_err(|e| e.to_string())?;
        let example1_spec = builtin_scenario("example1").and_then(|c| c.grid_spec(None, None)).map_err(|e| e.to_string())?;

        let c = cost.clone();
        let half_commit = SequentialStrategy::custom("commit with c/2", move |ctx: &StrategyContext<'_>| {
            let prefix: Vec<Rational> = ctx.prefix.iter().map(scalar_of).collect();
            let a = public_project_announcement(&prefix, &scalar_of(ctx.own), &c, ctx.position, ctx.players);
            let value = if a.branch == Branch::Commit { &c / int(2) } else { a.value };
            TypeValue::Scalar(value)
        });
        let c = cost.clone();
        let half_withdraw = SequentialStrategy::custom("withdraw with θ/2", move |ctx: &StrategyContext<'_>| {
            let prefix: Vec<Rational> = ctx.prefix.iter().map(scalar_of).collect();
            let own = scalar_of(ctx.own);
            let a = public_project_announcement(&prefix, &own, &c, ctx.position, ctx.players);
            let value = if a.branch == Branch::Withdraw { own / int(2) } else { a.value };
            TypeValue::Scalar(value)
        });
        let example4 = builtin_scenario("example4").map_err(|e| e.to_string())?;
        let bounds: Vec<Vec<Rational>> = [[9, 10], [12, 2], [34, 40]].iter().map(|r| r.map(int).to_vec()).collect();
        let keep_others = SequentialStrategy::custom("commit keeping other entries", move |ctx: &StrategyContext<'_>| {
            let prefix: Vec<Vec<Rational>> = ctx.prefix.iter().map(|v| v.as_vector().unwrap().to_vec()).collect();
            let own = ctx.own.as_vector().unwrap().to_vec();
            let later: Vec<Vec<Rational>> = ctx.later.iter().map(|p| bounds[p.index()].clone()).collect();
            let a = choose_project_announcement(&prefix, &own, &bounds[ctx.player.index()], &later);
            if a.branch != Branch::Commit {
                return TypeValue::Vector(a.value);
            }
            let mut value = own;
            for (l, x) in a.value.iter().enumerate() {
                if x != &int(0) {
                    value[l] = x.clone();
                }
            }
            TypeValue::Vector(value)
        });
        let example4_spec = example4.grid_spec(None, None).map_err(|e| e.to_string())?;

        let mutants: [(&str, &Mechanism, &SequentialStrategy, &GridSpec); 3] = [
            ("public project, commit announces c/2", &pp1, &half_commit, &example1_spec),
            ("public project, withdraw announces θ/2", &pp1, &half_withdraw, &coarse),
            ("project choice, commit keeps other entries", &example4.mechanism, &keep_others, &example4_spec),
        ];
        let mut refuted = Vec::new();
        for (label, mech, strategy, spec) in mutants {
            match mutation_witness(mech, strategy, spec)? {
                Some((ordering, p, text)) => refuted.push(format!("[{label}] ordering {ordering}, player {p}: {text}")),
                None => return Err(format!("mutant '{label}' was not refuted")),
            }
        }
        for line in &refuted {
            std::io::stdout().write_all(format!("  mutant refuted {line}\n").as_bytes()).unwrap();
        }
        Ok(format!("{verified} prescribed-strategy checks hold; {} of {} mutants refuted with replayable witnesses", refuted.len(), refuted.len()))
    })();
    report(5, "tax minimality", result);
}

#[test]
fn criterion_6_witness_generator() {
    let result = (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (mut built, mut refused) = (0, 0);
        while built < 100 || refused < 100 {
            let mut r = || ratio(rng.gen_range(-60..=60), rng.gen_range(1..=4));
            let quad = ValuationQuadruple { d_at_truth: r(), d_at_deviation: r(), alt_at_truth: r(), alt_at_deviation: r() };
            let holds = quad.slack() > int(0);
            let players = 2 + (built + refused) % 3;
            match (holds, construct_truthfulness_witness(players, TypeValue::Scalar(int(1)), TypeValue::Scalar(int(2)), &quad)) {
                (true, Ok(w)) => {
                    let grid = Grid::new(
                        w.problem
                            .type_spaces()
                            .iter()
                            .map(|s| match s {
                                TypeSpace::FiniteSet(v) => v.clone(),
                                _ => unreachable!(),
                            })
                            .collect(),
                    )
                    .unwrap();
                    if !is_efficient(&w.problem, &grid).map_err(|e| e.to_string())?.holds() {
                        return Err(format!("{quad:?}: constructed rule not efficient"));
                    }
                    if w.utility_loss() != &quad.slack() / int(2) || !w.is_sound() {
                        return Err(format!("{quad:?}: loss {} instead of {}", w.utility_loss(), &quad.slack() / int(2)));
                    }
                    built += 1;
                }
                (false, Err(Error::PreconditionViolated(_))) => refused += 1,
                (true, Err(e)) => return Err(format!("{quad:?}: refused although the condition holds: {e}")),
                (false, other) => return Err(format!("{quad:?}: not refused: {other:?}")),
            }
        }
        Ok(format!("{built} constructions sound with loss = slack/2, {refused} invalid inputs refused"))
    })();
    report(6, "truthfulness witness generator", result);
}

#[test]
fn criterion_7_projection_equivalence() {
    let result = (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (mut sp, mut not_sp) = (0, 0);
        for k in 0..50 {
            // every fifth rule is constant, the rest are arbitrary tables
            let (problem, grid) = random_problem(&mut rng, |rng, grid, m| {
                let constant = rng.gen_range(0..m);
                let arbitrary = k % 5 != 0;
                DecisionRule::Table(
                    grid.profiles()
                        .unwrap()
                        .map(|p| (p, Decision::new(if arbitrary { rng.gen_range(0..m) } else { constant })))
                        .collect(),
                )
            });
            let n = problem.players();
            let mech = Mechanism::without_transfers(problem);
            let spec = GridSpec::new(grid, vec![vec![]; n]).map_err(|e| e.to_string())?;
            let r = verify_projection_equivalence(&mech, &spec).map_err(|e| e.to_string())?;
            let direct = mechanism::is_strategy_proof(&mech, spec.grid()).map_err(|e| e.to_string())?.holds();
            let projections = r.projections.iter().all(DominanceVerdict::is_dominant);
            if !r.report.holds() || direct != projections {
                return Err(format!("problem {k}: direct rule strategy-proof = {direct}, projections dominant = {projections}"));
            }
            if direct {
                sp += 1
            } else {
                not_sp += 1
            }
        }
        if sp == 0 || not_sp == 0 {
            return Err(format!("only one direction exercised ({sp} strategy-proof, {not_sp} not)"));
        }
        Ok(format!("50 problems agree ({sp} strategy-proof, {not_sp} manipulable)"))
    })();
    report(7, "projection equivalence", result);
}

#[test]
fn criterion_8_deviation_classification() {
    let result = (|| {
        let (mut same, mut loss, mut tie) = (0u64, 0u64, 0u64);
        for name in EXAMPLES {
            let config: ScenarioConfig = builtin_scenario(name).map_err(|e| e.to_string())?;
            let spec = config.grid_spec(None, None).map_err(|e| e.to_string())?;
            let mech = &config.mechanism;
            for profile in spec.grid().profiles().map_err(|e| e.to_string())? {
                for p in mech.problem().player_ids() {
                    for dev in spec.grid().values(p) {
                        let r = classify_deviation(mech, &profile, p, dev).map_err(|e| e.to_string())?;
                        match r.class {
                            DeviationClass::SameDecisionEqualUtility => {
                                if r.truthful_utility != r.deviation_utility {
                                    return Err(format!("{name} {profile} {p} -> {dev}: utilities differ"));
                                }
                                same += 1;
                            }
                            DeviationClass::DifferentDecisionStrictLoss => {
                                if r.deviation_utility >= r.truthful_utility {
                                    return Err(format!("{name} {profile} {p} -> {dev}: no strict loss"));
                                }
                                loss += 1;
                            }
                            DeviationClass::DifferentDecisionEqualWelfare => tie += 1,
                        }
                    }
                }
            }
        }
        Ok(format!("{same} same-decision and {loss} strict-loss deviations, zero exceptions ({tie} welfare ties)"))
    })();
    report(8, "deviation classification", result);
}
