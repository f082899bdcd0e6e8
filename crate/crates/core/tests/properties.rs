//! Property suites for the invariants every module promises.

mod common;

use std::collections::BTreeMap;

use avrisk::audit::{self, RiskDistribution};
use avrisk::baselines::{self, Hierarchy};
use avrisk::dsl;
use avrisk::fairness::{self, FairnessPolicy};
use avrisk::risk::{self, cumulative_risk, risk_penalty};
use avrisk::scenario::{AttrValue, Consequence, Outcome, Party, Probability, Role, Scenario, SelectionMode};
use avrisk::simulate::{self, SimulationOptions};
use avrisk::valuation::{self, AttributeFactor, CertaintyWeighting, ModifierTable};
use common::{rel_close, scenario};
use proptest::prelude::*;

fn penalty(m: f64, p: f64, gamma: f64) -> f64 {
    let mut o = Outcome::new("o", m, p).unwrap();
    o.certainty_gamma = gamma;
    risk_penalty(&o)
}

proptest! {
    #[test]
    fn totality(s in scenario()) {
        let d = risk::decide(&s).unwrap();
        prop_assert!(s.action(&d.chosen_action).is_some());
        prop_assert_eq!(d.per_action.len(), s.actions.len());
        let raw = risk::select_action(&s).unwrap();
        prop_assert!(s.action(&raw.chosen_action).is_some());
    }

    #[test]
    fn zero_law(m in common::magnitude(), p in common::probability(), gamma in 0.0..4.0f64) {
        prop_assert_eq!(penalty(m, 0.0, gamma), 0.0);
        prop_assert_eq!(penalty(0.0, p, gamma), 0.0);
    }

    #[test]
    fn bilinearity(m in 1.0..1e6f64, p in 0.0..=1.0f64, c in 0.0..10.0f64) {
        prop_assert!(rel_close(penalty(c * m, p, 0.0), c * penalty(m, p, 0.0), 1e-12));
        let cp = (c * p).min(1.0);
        let c_eff = if p > 0.0 { cp / p } else { 0.0 };
        prop_assert!(rel_close(penalty(m, cp, 0.0), c_eff * penalty(m, p, 0.0), 1e-12));
    }

    #[test]
    fn argmin_invariance(s in scenario(), c in prop_oneof![Just(2.0), Just(0.5), 1e-3..1e3f64]) {
        let before = risk::decide(&s).unwrap();
        let after = risk::decide(&s.scale_magnitudes(c)).unwrap();
        prop_assert_eq!(&before.chosen_action, &after.chosen_action);
        prop_assert_eq!(before.tie_broken, after.tie_broken);
    }

    #[test]
    fn monotonicity(mut s in scenario(), pick in any::<prop::sample::Index>(), bump in 0.0..=1.0f64) {
        s.selection_mode = SelectionMode::Expected;
        let harmful: Vec<(usize, usize)> = s.actions.iter().enumerate()
            .flat_map(|(ai, a)| a.outcomes.iter().enumerate()
                .filter(|(_, o)| o.magnitude.value > 0.0)
                .map(move |(oi, _)| (ai, oi)))
            .collect();
        prop_assume!(!harmful.is_empty());
        let (ai, oi) = *pick.get(&harmful);
        let id = s.actions[ai].id.clone();
        let before = risk::decide(&s).unwrap();
        let o = &mut s.actions[ai].outcomes[oi];
        let p = o.probability.value();
        o.probability = Probability::new(p + (1.0 - p) * bump).unwrap();
        o.uncertainty = None;
        let after = risk::decide(&s).unwrap();
        prop_assert!(after.per_action[&id].penalty >= before.per_action[&id].penalty);
        if before.chosen_action != id {
            prop_assert_ne!(after.chosen_action, id);
        }
    }

    #[test]
    fn trace_conservation_and_interval_soundness(s in scenario()) {
        let d = risk::decide(&s).unwrap();
        for a in &d.actions {
            let sum: f64 = d.trace.for_action(&a.id).map(|e| e.contribution).sum();
            prop_assert!(rel_close(sum, a.risk.penalty, 1e-9) || (sum - a.risk.penalty).abs() < 1e-12);
            let (lo, hi) = a.risk.interval;
            prop_assert!(lo <= a.risk.penalty && a.risk.penalty <= hi);
        }
    }

    #[test]
    fn f32_agrees_when_gap_is_clear(s in scenario()) {
        let wide = risk::decide(&s).unwrap();
        let mut ranked: Vec<f64> = wide.per_action.values().map(|r| match s.selection_mode {
            SelectionMode::Expected => r.penalty,
            SelectionMode::RobustWorstCase => r.interval.1,
        }).collect();
        ranked.sort_by(f64::total_cmp);
        prop_assume!(ranked.len() == 1 || !rel_close(ranked[0], ranked[1], 1e-3));
        let narrow = risk::decide(&s.cast::<f32>()).unwrap();
        prop_assert_eq!(wide.chosen_action, narrow.chosen_action);
    }

    #[test]
    fn weighting_increasing_and_superlinear(v in 1.0..1e7f64, p1 in 1e-6..1.0f64, dp in 1e-3..1.0f64, gamma in 0.01..4.0f64) {
        let p2 = (p1 + dp).min(1.0);
        prop_assume!(p2 > p1);
        for w in [CertaintyWeighting::linear(), CertaintyWeighting::exponential(gamma)] {
            let f = |p: f64| valuation::certainty_weighted_penalty(Probability::new(p).unwrap(), v, &w);
            prop_assert!(f(p2) > f(p1));
        }
        let exp = CertaintyWeighting::exponential(gamma);
        let ratio = |p: f64| valuation::certainty_weighted_penalty(Probability::new(p).unwrap(), v, &exp) / p;
        prop_assert!(ratio(p2) > ratio(p1));
        let zero = CertaintyWeighting::exponential(0.0);
        let lin = CertaintyWeighting::linear();
        let pr = Probability::new(p1).unwrap();
        prop_assert_eq!(
            valuation::certainty_weighted_penalty(pr, v, &zero),
            valuation::certainty_weighted_penalty(pr, v, &lin)
        );
    }

    #[test]
    fn modifier_commutativity_and_clamping(
        base in 0.0..=1.0f64,
        age in 0.0..100.0f64,
        order in Just((0..4).collect::<Vec<usize>>()).prop_shuffle(),
        intoxicated in any::<bool>(),
        female in any::<bool>(),
    ) {
        let table = common::rich_modifier_table();
        let mut shuffled = ModifierTable { factors: Vec::new(), age_curve: table.age_curve };
        for i in order {
            shuffled.factors.push(table.factors[i].clone());
        }
        let party = Party::new("x", Role::Cyclist)
            .with_attr("age", AttrValue::Number(age))
            .with_attr("helmet", AttrValue::Bool(true))
            .with_attr("intoxicated", AttrValue::Bool(intoxicated))
            .with_attr("sex", AttrValue::Text(if female { "female" } else { "male" }.into()))
            .with_attr("vehicle_cost_class", AttrValue::Text("low".into()));
        let p = Probability::new(base).unwrap();
        let a = valuation::apply_fatality_modifiers(p, &party, &table).value();
        let b = valuation::apply_fatality_modifiers(p, &party, &shuffled).value();
        prop_assert_eq!(a, b);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn monetization_additivity(
        f in (0u32..5, 0u32..5), h in (0.0..100.0f64, 0.0..100.0f64), i in (0u32..4, 0u32..4),
    ) {
        let mut schedule = valuation::MagnitudeSchedule::<f64>::default();
        schedule.injury_costs.insert("serious".into(), 250_000.0);
        let c = |fat: u32, hours: f64, inj: u32| {
            let mut c = Consequence { fatalities: fat as f64, person_hours: hours, ..Default::default() };
            c.injuries.insert("serious".into(), inj as f64);
            c
        };
        let a = valuation::monetize(&c(f.0, h.0, i.0), &schedule).unwrap().value;
        let b = valuation::monetize(&c(f.1, h.1, i.1), &schedule).unwrap().value;
        let sum = valuation::monetize(&c(f.0 + f.1, h.0 + h.1, i.0 + i.1), &schedule).unwrap().value;
        prop_assert!(rel_close(a + b, sum, 1e-12));
    }

    #[test]
    fn redact_idempotent_and_local(s in scenario()) {
        let once = fairness::redact(&s).unwrap();
        prop_assert_eq!(&fairness::redact(&once).unwrap(), &once);
        prop_assert_eq!(&once.actions, &s.actions);
        // parties without excluded attributes see exactly the unredacted valuation
        let mut open = s.clone();
        open.fairness_policy = FairnessPolicy::empty();
        let redacted = risk::prepare(&s).unwrap();
        let plain = risk::prepare(&open).unwrap();
        let excluded = &s.fairness_policy.excluded_attributes;
        for (a, b) in redacted.actions.iter().zip(&plain.actions) {
            for (x, y) in a.outcomes.iter().zip(&b.outcomes) {
                let untouched = x.affected_party.as_deref().and_then(|id| s.party(id))
                    .is_none_or(|p| !p.attributes.keys().any(|k| excluded.contains(k)));
                if untouched {
                    prop_assert_eq!(x, y);
                }
            }
        }
    }

    #[test]
    fn serialization_is_deterministic_and_round_trips(s in common::scenario_for_round_trip()) {
        let text = dsl::serialize(&s);
        prop_assert_eq!(&text, &dsl::serialize(&s));
        let back = dsl::parse::<f64>(&text).map_err(|d| TestCaseError::fail(format!("{d:?}")))?;
        prop_assert_eq!(back, s);
    }

    #[test]
    fn trolley_agrees_with_expected_risk(s in common::trolley_scenario()) {
        let trolley = baselines::decide_trolley(&s).unwrap();
        let expected = risk::decide(&s).unwrap();
        prop_assert_eq!(trolley.chosen_action, expected.chosen_action);
    }

    #[test]
    fn diagnostics_point_into_the_text(
        s in scenario(),
        line in any::<prop::sample::Index>(),
        junk in prop_oneof![
            Just("probability = 1.3"), Just("magnitude = inf"), Just("[outcome]"),
            Just("party = nobody"), Just("= 3"), Just("[party p0]"), Just("group = g"),
        ],
    ) {
        let text = dsl::serialize(&s);
        let mut lines: Vec<&str> = text.lines().collect();
        let at = line.index(lines.len());
        lines[at] = junk;
        let corrupted = lines.join("\n");
        let out = dsl::parse_document::<f64>(&corrupted, &BTreeMap::new());
        for d in &out.diagnostics {
            prop_assert!(d.span.line >= 1 && d.span.line <= lines.len(), "{d}");
            prop_assert!(d.span.column >= 1);
            let row = lines[d.span.line - 1];
            prop_assert!(d.span.column <= row.chars().count() + 1, "{d} on `{row}`");
        }
    }

    #[test]
    fn class_dominance(s in scenario(), pick in any::<prop::sample::Index>(), cut in 0.0..1.0f64) {
        let h = Hierarchy::default();
        let chosen = baselines::decide_deontological(&s, &h).unwrap().chosen_action;
        let mut improved = s.clone();
        let action = improved.actions.iter_mut().find(|a| a.id == chosen).unwrap();
        let harms: Vec<usize> = action.outcomes.iter().enumerate()
            .filter(|(_, o)| o.magnitude.value > 0.0 && o.affected_party.is_some())
            .map(|(i, _)| i)
            .collect();
        if harms.is_empty() {
            return Ok(());
        }
        let o = &mut action.outcomes[*pick.get(&harms)];
        o.probability = Probability::new(o.probability.value() * cut).unwrap();
        o.uncertainty = None;
        prop_assert_eq!(baselines::decide_deontological(&improved, &h).unwrap().chosen_action, chosen);
    }

    #[test]
    fn distribution_conservation_and_antisymmetry(s in scenario()) {
        let prepared_total = |id: &str| cumulative_risk(risk::prepare(&s).unwrap().action(id).unwrap()).penalty;
        for a in &s.actions {
            let d = audit::risk_distribution(&s, &a.id).unwrap();
            let sum: f64 = d.shares.values().sum();
            let scale = d.shares.values().map(|v| v.abs()).sum::<f64>().max(1e-300);
            prop_assert!((sum - d.total).abs() <= 1e-9 * scale, "{sum} vs {}", d.total);
            prop_assert_eq!(d.total, prepared_total(&a.id));
            for b in &s.actions {
                let ab = audit::risk_transfer(&s, &a.id, &b.id).unwrap();
                let ba = audit::risk_transfer(&s, &b.id, &a.id).unwrap();
                for (k, v) in &ab {
                    prop_assert_eq!(*v, -ba[k]);
                }
            }
        }
    }

    #[test]
    fn fairness_index_bounds(shares in proptest::collection::vec(prop_oneof![Just(0.0), Just(3.0), 0.0..100.0f64], 1..6)) {
        let d = RiskDistribution {
            action: "a".into(),
            shares: shares.iter().enumerate().map(|(i, v)| (format!("p{i}"), *v)).collect(),
            total: shares.iter().sum(),
            unassigned: vec![],
        };
        let positive: Vec<f64> = shares.iter().copied().filter(|v| *v > 0.0).collect();
        match audit::fairness_index(&d) {
            Ok(ix) => {
                prop_assert!(ix >= 1.0);
                prop_assert_eq!(ix == 1.0, positive.iter().all(|v| *v == positive[0]));
            }
            Err(_) => prop_assert!(positive.is_empty()),
        }
    }

    #[test]
    fn hansson_always_seven(s in scenario()) {
        let d = risk::decide(&s).unwrap();
        let r = audit::hansson_report(&s, &d).unwrap();
        prop_assert_eq!(r.entries.len(), 7);
        for (i, e) in r.entries.iter().enumerate() {
            prop_assert_eq!(e.number, i + 1);
            prop_assert_eq!(e.question, audit::HANSSON_QUESTIONS[i]);
        }
    }

    #[test]
    fn compare_penalties_match_cumulative_risk(s in scenario()) {
        let report = baselines::compare(&s).unwrap();
        let prepared = risk::prepare(&s).unwrap();
        for row in &report.rows {
            prop_assert_eq!(row.expected_penalty, cumulative_risk(prepared.action(&row.chosen_action).unwrap()).penalty);
        }
        prop_assert!(report.gap >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn simulation_independent_of_workers(s in scenario(), seed in any::<u64>()) {
        let prepared = risk::prepare(&s).unwrap();
        for a in &prepared.actions {
            let run = |w| simulate::simulate_with(a, 3000, seed, &SimulationOptions { workers: Some(w), chunk_size: 256 }).unwrap();
            let one = run(1);
            prop_assert_eq!(one, run(3));
            prop_assert!(one.stderr >= 0.0);
        }
    }

    #[test]
    fn exposure_decomposes(mut s in scenario(), seed in any::<u64>()) {
        let first = s.parties[0].id.clone();
        for o in s.actions.iter_mut().flat_map(|a| a.outcomes.iter_mut()) {
            o.affected_party.get_or_insert_with(|| first.clone());
        }
        for a in &s.actions {
            let e = simulate::party_exposure(&s, &a.id, 2000, seed).unwrap();
            prop_assert!(e.unassigned.is_empty());
            let sum: f64 = e.per_party.values().sum();
            let scale = e.per_party.values().map(|v| v.abs()).sum::<f64>();
            prop_assert!((sum - e.mean).abs() <= 1e-9 * scale.max(1e-300), "{sum} vs {}", e.mean);
        }
    }
}

#[test]
fn stderr_scales_with_inverse_root_n() {
    let s = common::load_fixture("accelerate_or_brake.scn");
    let prepared = risk::prepare(&s).unwrap();
    let a = prepared.action("accelerate").unwrap();
    for seed in [1, 2, 3] {
        let small = simulate::simulate(a, 20_000, seed).unwrap();
        let large = simulate::simulate(a, 80_000, seed).unwrap();
        let ratio = large.stderr / small.stderr;
        assert!((ratio - 0.5).abs() <= 0.1, "seed {seed}: ratio {ratio}");
    }
}

#[test]
fn unassigned_outcomes_are_reported() {
    let s = Scenario::<f64>::new("u")
        .with_party(Party::new("lonely", Role::Pedestrian))
        .with_action(avrisk::scenario::ActionAlternative::new("a").with_outcome(Outcome::new("o", 5.0, 1.0).unwrap()));
    let e = simulate::party_exposure(&s, "a", 10, 1).unwrap();
    assert_eq!(e.unassigned, vec!["o".to_string()]);
    assert_eq!(e.per_party["lonely"], 0.0);
    assert_eq!(e.mean, 5.0);
}

#[test]
fn modifier_factor_lookup_respects_withheld() {
    let mut table = ModifierTable::<f64>::empty();
    table.factors.push(AttributeFactor {
        attribute: "helmet".into(),
        value: AttrValue::Bool(true),
        factor: 0.5,
    });
    let mut p = Party::new("r", Role::Cyclist).with_attr("helmet", AttrValue::Bool(true));
    assert_eq!(table.matching_factors(&p).len(), 1);
    p.withheld.insert("helmet".into());
    assert!(table.matching_factors(&p).is_empty());
}
