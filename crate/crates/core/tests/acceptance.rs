//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use avrisk::baselines;
use avrisk::catalog;
use avrisk::cli::{self, CommandKind, OutputFormat, RunConfig};
use avrisk::dsl;
use avrisk::fairness::{self, FairnessPolicy};
use avrisk::risk;
use avrisk::scenario::{AttrValue, Consequence, Outcome, Party, Probability, Role, Scenario, Unit};
use avrisk::simulate::{self, SimulationOptions};
use avrisk::valuation::{self, CertaintyWeighting, MagnitudeSchedule, WeightingMode};
use common::rel_close;
use proptest::strategy::Strategy;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

type Verdict = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Verdict);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        max_global_rejects: cases * 4,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn property<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

fn tce(msg: String) -> TestCaseError {
    TestCaseError::fail(msg)
}

fn truck_penalties(turn_planned: f64) -> Result<(Vec<f64>, f64, String), String> {
    let text = catalog::source("lane_change_truck").unwrap();
    let params = BTreeMap::from([("turn_planned".to_string(), turn_planned)]);
    let s: Scenario<f64> = dsl::parse_with_params(text, &params).map_err(|d| format!("{d:?}"))?;
    let d = risk::decide(&s).map_err(|e| e.to_string())?;
    let penalties = d.trace.for_action("change_lane").map(|e| e.contribution).collect();
    Ok((penalties, d.per_action["change_lane"].penalty, d.chosen_action))
}

fn ac1() -> Verdict {
    let start = Instant::now();
    for (turn, expected, total, choice) in [
        (1.0, [0.5, 2.0, 3.0, 1.0, 1.0, 0.5, 50.0], 58.0, "stay_behind_truck"),
        (0.0, [0.5, 2.0, 3.0, 1.0, 1.0, 0.5, 0.0], 8.0, "change_lane"),
    ] {
        let (penalties, sum, chosen) = truck_penalties(turn)?;
        ensure(penalties.len() == 7, || format!("{} outcomes", penalties.len()))?;
        for (got, want) in penalties.iter().zip(expected) {
            ensure(rel_close(*got, want, 1e-9), || format!("penalty {got} != {want}"))?;
        }
        ensure(rel_close(sum, total, 1e-9), || format!("total {sum} != {total}"))?;
        ensure(chosen == choice, || format!("chose {chosen}"))?;
    }
    let mut config = RunConfig::new(CommandKind::Evaluate, "lane_change_truck");
    config.format = OutputFormat::Csv;
    let out = cli::run(&config);
    ensure(out.exit_code == 0, || out.stderr.clone())?;
    ensure(out.stdout.contains("change_lane,total,cumulative risk,,,58,"), || {
        out.stdout.clone()
    })?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("penalties 0.5 2 3 1 1 0.5 50|0, totals 58|8, {elapsed:.2?}"))
}

fn ac2() -> Verdict {
    let penalty = |m: f64, p: f64| {
        let o = Outcome::new("o", m, p).unwrap().with_unit(Unit::StatisticalLives);
        risk::risk_penalty(&o)
    };
    let (a, b) = (penalty(10_000.0, 0.0001), penalty(200.0, 0.01));
    ensure(a == 1.0, || format!("10000 x 0.0001 = {a}"))?;
    ensure(b == 2.0, || format!("200 x 0.01 = {b}"))?;
    Ok("1 and 2 statistical lives, exact".into())
}

fn ac3() -> Verdict {
    let schedule = MagnitudeSchedule::<f64>::default();
    let death = valuation::monetize(
        &Consequence {
            fatalities: 1.0,
            ..Default::default()
        },
        &schedule,
    )
    .map_err(|e| e.to_string())?;
    let hour = valuation::monetize(
        &Consequence {
            person_hours: 1.0,
            ..Default::default()
        },
        &schedule,
    )
    .map_err(|e| e.to_string())?;
    ensure(death.value == 9_400_000.0, || format!("fatality {}", death.value))?;
    ensure(hour.value == 13.30, || format!("person-hour {}", hour.value))?;
    ensure(death.unit == Unit::Usd && hour.unit == Unit::Usd, || "unit".into())?;
    Ok("9400000 per fatality, 13.30 per person-hour".into())
}

fn ac4() -> Verdict {
    let table = valuation::default_modifier_table::<f64>();
    let base = Probability::new(0.1).unwrap();
    let apply = |party: &Party, p: Probability<f64>| valuation::apply_fatality_modifiers(p, party, &table).value();
    let plain = Party::new("x", Role::Pedestrian);
    let drunk = plain.clone().with_attr("intoxicated", AttrValue::Bool(true));
    let female = plain.clone().with_attr("sex", AttrValue::Text("female".into()));
    let at = |age: f64| plain.clone().with_attr("age", AttrValue::Number(age));

    ensure(apply(&plain, base) == 0.1, || "unmodified party changed".into())?;
    let d = apply(&drunk, base);
    ensure(d == 0.1 * 2.0, || format!("intoxicated {d}"))?;
    let f = apply(&female, base);
    ensure(f == 0.1 * 1.28, || format!("female {f}"))?;
    let (young, old) = (apply(&at(20.0), base), apply(&at(70.0), base));
    ensure(old == 3.0 * young, || format!("age 70 {old} vs age 20 {young}"))?;
    ensure(table.age_factor(70.0) == 3.0 * table.age_factor(20.0), || {
        "age anchors".into()
    })?;
    let everything = drunk
        .with_attr("sex", AttrValue::Text("female".into()))
        .with_attr("age", AttrValue::Number(70.0));
    let clamped = apply(&everything, Probability::new(0.2).unwrap());
    ensure(clamped == 1.0, || format!("0.2 x 2 x 1.28 x 3 gave {clamped}"))?;
    Ok("x2.0, x1.28, age 70 = 3 x age 20, clamp at 1".into())
}

fn ac5() -> Verdict {
    let start = Instant::now();
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for (name, s) in catalog::catalog::<f64>() {
        let report = simulate::consistency_check(&s, 200_000, 20_260_101).map_err(|e| e.to_string())?;
        for row in &report.rows {
            checked += 1;
            worst = worst.max(row.z_score.abs());
            ensure(row.pass, || format!("{name}/{}: z = {}", row.action, row.z_score))?;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("{checked} actions, max |z| {worst:.2}, {elapsed:.2?}"))
}

fn ac6() -> Verdict {
    let s = common::load_fixture("accelerate_or_brake.scn");
    let deon = baselines::decide_deontological(&s, &baselines::Hierarchy::default()).map_err(|e| e.to_string())?;
    let risk = risk::select_action(&risk::prepare(&s).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    ensure(deon.chosen_action == "accelerate", || {
        format!("deontological chose {}", deon.chosen_action)
    })?;
    ensure(risk.chosen_action == "brake", || {
        format!("risk chose {}", risk.chosen_action)
    })?;
    let report = baselines::compare(&s).map_err(|e| e.to_string())?;
    ensure(report.gap == 0.99 * 20_000.0 - 500.0, || format!("gap {}", report.gap))?;
    ensure(report.gap == 19_300.0, || format!("gap {}", report.gap))?;
    Ok("gamble vs low-speed crash, gap 19300".into())
}

fn perturbation_values(attribute: &str) -> Vec<AttrValue> {
    match attribute {
        "helmet" => vec![AttrValue::Bool(true), AttrValue::Bool(false)],
        "sex" => vec![AttrValue::Text("female".into()), AttrValue::Text("male".into())],
        "age" => vec![AttrValue::Number(6.0), AttrValue::Number(35.0), AttrValue::Number(80.0)],
        "vehicle_cost_class" => vec![AttrValue::Text("low".into()), AttrValue::Text("high".into())],
        other => panic!("no perturbation values for {other}"),
    }
}

fn ac7() -> Verdict {
    let cases = 1000;
    property(cases, common::scenario(), |s| {
        for attribute in &s.fairness_policy.excluded_attributes {
            let report = fairness::exclusion_invariance_check(&s, attribute, &perturbation_values(attribute))
                .map_err(|e| tce(e.to_string()))?;
            if !report.invariant {
                return Err(tce(format!("{attribute} changed the choice: {:?}", report.witnesses)));
            }
        }
        Ok(())
    })?;

    let helmets = catalog::load::<f64>("motorcyclists_helmet")
        .unwrap()
        .map_err(|d| format!("{d:?}"))?;
    let values = perturbation_values("helmet");
    let excluded = fairness::exclusion_invariance_check(&helmets, "helmet", &values).map_err(|e| e.to_string())?;
    ensure(excluded.invariant, || "helmet excluded but choice varies".into())?;

    let mut open = helmets.clone();
    open.fairness_policy = FairnessPolicy::empty();
    let report = fairness::exclusion_invariance_check(&open, "helmet", &values).map_err(|e| e.to_string())?;
    ensure(!report.invariant, || "empty policy yet helmet never mattered".into())?;
    let mut split_runs = 0;
    for (assignment, chosen) in &report.runs {
        let left = assignment["rider_left"] == AttrValue::Bool(true);
        let right = assignment["rider_right"] == AttrValue::Bool(true);
        if left != right {
            split_runs += 1;
            let target = if left { "swerve_left" } else { "swerve_right" };
            ensure(chosen == target, || format!("{assignment:?} chose {chosen}"))?;
        }
    }
    ensure(split_runs == 2, || format!("{split_runs} split assignments"))?;
    Ok(format!(
        "{cases} generated scenarios invariant; helmet scenario targets the helmeted rider only without the policy"
    ))
}

fn ac8() -> Verdict {
    let grid: Vec<f64> = (1..=1000).map(|i| i as f64 / 1000.0).collect();
    let (linear, zero) = (CertaintyWeighting::linear(), CertaintyWeighting::exponential(0.0));
    for &p in &grid {
        let pr = Probability::new(p).unwrap();
        let a = valuation::certainty_weighted_penalty(pr, 9_400_000.0, &linear);
        let b = valuation::certainty_weighted_penalty(pr, 9_400_000.0, &zero);
        ensure(rel_close(a, b, 1e-12), || format!("p = {p}: {a} vs {b}"))?;
    }
    for gamma in [0.1, 10f64.ln(), 3.0] {
        let w = CertaintyWeighting::exponential(gamma);
        let ratio = |p: f64| valuation::certainty_weighted_penalty(Probability::new(p).unwrap(), 1.0, &w) / p;
        for pair in grid.windows(2) {
            ensure(ratio(pair[1]) > ratio(pair[0]), || {
                format!("gamma {gamma}: not superlinear at p = {}", pair[1])
            })?;
        }
    }

    let tunnel = catalog::load::<f64>("tunnel_child")
        .unwrap()
        .map_err(|d| format!("{d:?}"))?;
    let vsl = valuation::DEFAULT_VSL_USD;
    let lin = risk::decide(&tunnel).map_err(|e| e.to_string())?;
    ensure(rel_close(lin.per_action["stay"].penalty, 0.95 * vsl, 1e-9), || {
        "linear stay".into()
    })?;
    ensure(rel_close(lin.per_action["balance"].penalty, vsl, 1e-9), || {
        "linear balance".into()
    })?;
    ensure(lin.chosen_action != "balance", || {
        "balance chosen under linear weighting".into()
    })?;
    let mut weighted = tunnel.clone();
    weighted.weighting = CertaintyWeighting {
        mode: WeightingMode::Exponential,
        gamma: 10f64.ln(),
    };
    let exp = risk::decide(&weighted).map_err(|e| e.to_string())?;
    let stay = 0.95 * vsl * 10f64.powf(0.95);
    let balance = vsl * 10f64.sqrt();
    ensure(rel_close(exp.per_action["stay"].penalty, stay, 1e-9), || {
        "weighted stay".into()
    })?;
    ensure(rel_close(exp.per_action["balance"].penalty, balance, 1e-9), || {
        "weighted balance".into()
    })?;
    ensure(exp.chosen_action == "balance", || {
        format!("chose {}", exp.chosen_action)
    })?;
    Ok(format!(
        "grid of {}; tunnel balance {:.0} < stay {:.0} under ln 10, {} chosen when linear",
        grid.len(),
        balance,
        stay,
        lin.chosen_action
    ))
}

fn ac9() -> Verdict {
    let cases = 500;
    property(cases, common::trolley_scenario(), |s| {
        let trolley = baselines::decide_trolley(&s).map_err(|e| tce(e.to_string()))?;
        let risk =
            risk::select_action(&risk::prepare(&s).map_err(|e| tce(e.to_string()))?).map_err(|e| tce(e.to_string()))?;
        if trolley.chosen_action != risk.chosen_action {
            return Err(tce(format!(
                "trolley {} vs risk {}",
                trolley.chosen_action, risk.chosen_action
            )));
        }
        Ok(())
    })?;
    Ok(format!("{cases} generated instances agree"))
}

fn round_trip(s: &Scenario<f64>) -> Result<(), String> {
    let text = dsl::serialize(s);
    let back: Scenario<f64> = dsl::parse(&text).map_err(|d| format!("{d:?}"))?;
    ensure(back == *s, || format!("structure changed:\n{text}"))
}

fn ac10() -> Verdict {
    for (name, s) in catalog::catalog::<f64>() {
        round_trip(&s).map_err(|e| format!("{name}: {e}"))?;
    }
    let cases = 1000;
    property(cases, common::scenario_for_round_trip(), |s| {
        round_trip(&s).map_err(tce)
    })?;

    let junk = [
        "probability = 1.3",
        "magnitude = -inf",
        "[outcome]",
        "party = nobody",
        "fatalities = x",
        "[zzz",
    ];
    let corrupted = (
        common::scenario(),
        proptest::prelude::any::<proptest::sample::Index>(),
        0..junk.len(),
    );
    let reported = std::cell::Cell::new(0usize);
    property(cases, corrupted, |(s, at, j)| {
        let text = dsl::serialize(&s);
        let mut lines: Vec<&str> = text.lines().collect();
        let i = at.index(lines.len());
        lines[i] = junk[j];
        let out = dsl::parse_document::<f64>(&lines.join("\n"), &BTreeMap::new());
        for d in &out.diagnostics {
            let ok = d.span.line >= 1
                && d.span.line <= lines.len()
                && d.span.column >= 1
                && d.span.column <= lines[d.span.line - 1].chars().count() + 1;
            if !ok {
                return Err(tce(format!("bad span on {d}")));
            }
        }
        reported.set(reported.get() + out.diagnostics.len());
        Ok(())
    })?;
    let reported = reported.get();
    ensure(reported > 0, || "corruption never produced a diagnostic".into())?;
    Ok(format!(
        "5 catalog + {cases} generated round trips; {reported} diagnostics all located"
    ))
}

fn ac11() -> Verdict {
    let mut outputs = Vec::new();
    for name in catalog::names() {
        for workers in [1, 2, 8] {
            let mut config = RunConfig::new(CommandKind::Simulate, name);
            config.trials = 50_000;
            config.seed = 99;
            config.workers = Some(workers);
            config.format = OutputFormat::Json;
            let out = cli::run(&config);
            ensure(out.exit_code == 0, || out.stderr.clone())?;
            outputs.push((name, workers, out.stdout));
        }
    }
    for chunk in outputs.chunks(3) {
        let (name, _, base) = &chunk[0];
        for (_, workers, other) in &chunk[1..] {
            ensure(other == base, || format!("{name}: {workers} workers differ"))?;
        }
    }
    let s = common::load_fixture("accelerate_or_brake.scn");
    let prepared = risk::prepare(&s).map_err(|e| e.to_string())?;
    let action = prepared.action("accelerate").unwrap();
    let runs: Vec<_> = [1, 2, 8]
        .into_iter()
        .map(|w| simulate::simulate_with(action, 100_000, 5, &SimulationOptions::with_workers(w)))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    ensure(runs.iter().all(|r| *r == runs[0]), || "library estimates differ".into())?;
    Ok("byte-identical JSON at 1, 2 and 8 workers for every catalog scenario".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("AC1", "lane change penalties", ac1),
        ("AC2", "expectation arithmetic", ac2),
        ("AC3", "monetization constants", ac3),
        ("AC4", "fatality modifiers", ac4),
        ("AC5", "Monte Carlo consistency", ac5),
        ("AC6", "deontological pathology", ac6),
        ("AC7", "exclusion invariance", ac7),
        ("AC8", "certainty weighting", ac8),
        ("AC9", "trolley degeneracy", ac9),
        ("AC10", "format round trip", ac10),
        ("AC11", "determinism", ac11),
    ];
    let mut failed = 0;
    for (id, title, check) in criteria {
        match check() {
            Ok(detail) => println!("{id} PASS {title}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("{id} FAIL {title}: {why}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
