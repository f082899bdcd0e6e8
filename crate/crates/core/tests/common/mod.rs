#![allow(dead_code)]

use std::collections::BTreeMap;

use avrisk::dsl;
use avrisk::fairness::FairnessPolicy;
use avrisk::scenario::{
    ActionAlternative, AttrValue, Consequence, Outcome, Party, Probability, Role, Scenario, SelectionMode, Unit,
};
use avrisk::valuation::{self, AttributeFactor, CertaintyWeighting, ModifierTable};
use proptest::prelude::*;

pub fn catalog_path(name: &str) -> String {
    format!("{}/catalog/{name}.scn", env!("CARGO_MANIFEST_DIR"))
}

pub fn fixture_path(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

pub fn load_fixture(name: &str) -> Scenario<f64> {
    let text = std::fs::read_to_string(fixture_path(name)).unwrap();
    dsl::parse(&text).unwrap()
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    a == b || (a - b).abs() <= rel * a.abs().max(b.abs())
}

/// Probability with extra weight on the exact endpoints.
pub fn probability() -> impl Strategy<Value = f64> {
    prop_oneof![
        1 => Just(0.0),
        1 => Just(1.0),
        6 => 0.0..=1.0f64,
    ]
}

pub fn magnitude() -> impl Strategy<Value = f64> {
    prop_oneof![
        1 => Just(0.0),
        3 => 1.0..1e6f64,
        2 => (1u32..200).prop_map(f64::from),
        1 => -1e3..0.0f64,
    ]
}

fn attributes() -> impl Strategy<Value = BTreeMap<String, AttrValue>> {
    (
        proptest::option::of(any::<bool>()),
        proptest::option::of(prop_oneof![Just(6.0), Just(20.0), 15.0..95.0f64]),
        proptest::option::of(prop_oneof![Just("female"), Just("male")]),
        proptest::option::of(any::<bool>()),
        proptest::option::of(prop_oneof![Just("low"), Just("high")]),
    )
        .prop_map(|(helmet, age, sex, intoxicated, cost)| {
            let mut m = BTreeMap::new();
            if let Some(h) = helmet {
                m.insert("helmet".to_string(), AttrValue::Bool(h));
            }
            if let Some(a) = age {
                m.insert("age".to_string(), AttrValue::Number(a.round()));
            }
            if let Some(s) = sex {
                m.insert("sex".to_string(), AttrValue::Text(s.to_string()));
            }
            if let Some(i) = intoxicated {
                m.insert("intoxicated".to_string(), AttrValue::Bool(i));
            }
            if let Some(c) = cost {
                m.insert("vehicle_cost_class".to_string(), AttrValue::Text(c.to_string()));
            }
            m
        })
}

fn party(index: usize) -> impl Strategy<Value = Party> {
    (
        prop::sample::select(Role::ALL.to_vec()),
        attributes(),
        any::<[bool; 4]>(),
    )
        .prop_map(move |(role, attributes, flags)| {
            let mut p = Party::new(format!("p{index}"), role);
            p.attributes = attributes;
            p.voluntary_exposure = flags[0];
            p.informed = flags[1];
            p.is_beneficiary = flags[2];
            p.is_decision_maker = flags[3];
            p
        })
}

#[derive(Debug, Clone)]
struct OutcomeSeed {
    magnitude: f64,
    p: f64,
    party: Option<usize>,
    fatal: bool,
    spread: Option<(f64, f64)>,
}

fn outcome_seed() -> impl Strategy<Value = OutcomeSeed> {
    (
        magnitude(),
        probability(),
        proptest::option::of(0usize..8),
        any::<bool>(),
        proptest::option::of((0.0..=1.0f64, 0.0..=1.0f64)),
    )
        .prop_map(|(magnitude, p, party, fatal, spread)| OutcomeSeed {
            magnitude,
            p,
            party,
            fatal,
            spread,
        })
}

fn action_seed() -> impl Strategy<Value = (Vec<OutcomeSeed>, bool)> {
    (proptest::collection::vec(outcome_seed(), 0..5), any::<bool>())
}

/// Modifier table with a factor for each default-excluded attribute, so
/// redaction has something to neutralize.
pub fn rich_modifier_table() -> ModifierTable<f64> {
    let mut t = valuation::default_modifier_table::<f64>();
    t.factors.push(AttributeFactor {
        attribute: "helmet".into(),
        value: AttrValue::Bool(true),
        factor: 0.63,
    });
    t.factors.push(AttributeFactor {
        attribute: "vehicle_cost_class".into(),
        value: AttrValue::Text("low".into()),
        factor: 1.5,
    });
    t
}

/// Valid scenarios covering every file-format feature except consequences.
pub fn scenario() -> impl Strategy<Value = Scenario<f64>> {
    (
        1usize..=4,
        proptest::collection::vec(action_seed(), 1..=4),
        proptest::option::of(0usize..4),
        prop_oneof![Just(Unit::Abstract), Just(Unit::StatisticalLives), Just(Unit::Usd)],
        prop_oneof![Just(SelectionMode::Expected), Just(SelectionMode::RobustWorstCase)],
        proptest::option::of(0.0..3.0f64),
        any::<bool>(),
    )
        .prop_flat_map(|(n_parties, actions, hold, unit, mode, gamma, rich)| {
            let parties: Vec<_> = (0..n_parties).map(party).collect();
            (parties, Just((actions, hold, unit, mode, gamma, rich)))
        })
        .prop_map(|(parties, (actions, hold, unit, mode, gamma, rich))| {
            let mut s = Scenario::new("generated");
            s.unit = unit;
            s.selection_mode = mode;
            s.parties = parties;
            if let Some(g) = gamma {
                s.weighting = CertaintyWeighting::exponential(g);
            }
            if rich {
                s.modifiers = rich_modifier_table();
            }
            let n_parties = s.parties.len();
            for (ai, (outcomes, grouped)) in actions.into_iter().enumerate() {
                let mut a = ActionAlternative::new(format!("a{ai}")).labeled(format!("action {ai}"));
                a.is_hold_course = hold == Some(ai);
                // a grouped action splits at most probability 1 across its outcomes
                let mass: f64 = outcomes.iter().map(|o| o.p).sum();
                let shrink = if grouped && mass > 1.0 { 1.0 / mass } else { 1.0 };
                for (oi, seed) in outcomes.into_iter().enumerate() {
                    let p = (seed.p * shrink).min(1.0);
                    let mut o = Outcome::new(format!("o{oi}"), seed.magnitude, p)
                        .unwrap()
                        .with_unit(unit)
                        .describe(format!("outcome {oi} of action {ai}"));
                    if let Some(k) = seed.party {
                        if k < n_parties {
                            o = o.affecting(format!("p{k}"));
                        }
                    }
                    if seed.fatal {
                        o = o.fatal();
                    }
                    if let Some((lo, hi)) = seed.spread {
                        o = o.with_uncertainty(p * lo, (p + (1.0 - p) * hi).min(1.0)).unwrap();
                    }
                    if grouped {
                        o = o.in_group("g");
                    }
                    a = a.with_outcome(o);
                }
                s = s.with_action(a);
            }
            s
        })
}

/// Like [`scenario`], sometimes with consequence-based magnitudes in a USD
/// scenario, parameters and probability expressions.
pub fn scenario_for_round_trip() -> impl Strategy<Value = Scenario<f64>> {
    (
        scenario(),
        any::<bool>(),
        0.0..1.0f64,
        proptest::option::of(0.0..5.0f64),
    )
        .prop_map(|(mut s, monetized, param, injury_cost)| {
            if monetized {
                s.unit = Unit::Usd;
                if let Some(cost) = injury_cost {
                    s.schedule.injury_costs.insert("minor".into(), cost * 1000.0);
                }
                for (i, o) in s.actions.iter_mut().flat_map(|a| a.outcomes.iter_mut()).enumerate() {
                    o.magnitude.unit = Unit::Usd;
                    if i % 2 == 0 {
                        let mut c = Consequence {
                            fatalities: (i % 3) as f64,
                            person_hours: i as f64 * 0.5,
                            ..Default::default()
                        };
                        if injury_cost.is_some() {
                            c.injuries.insert("minor".into(), 1.0);
                        }
                        o.magnitude = valuation::monetize(&c, &s.schedule).unwrap();
                        o.consequence = Some(c);
                    }
                }
            }
            s.params.insert("q".into(), param);
            if let Some(o) = s.actions.iter_mut().flat_map(|a| a.outcomes.iter_mut()).next() {
                o.probability = Probability::new(param).unwrap();
                o.probability_expr = Some("q".into());
                o.uncertainty = None;
                // keep any exclusive group within probability 1
                o.exclusive_group = None;
            }
            s.fairness_policy = FairnessPolicy::excluding(["helmet", "sex"]);
            s
        })
}

/// Two actions with certain-or-impossible fatal outcomes of one magnitude
/// per fatality.
pub fn trolley_scenario() -> impl Strategy<Value = Scenario<f64>> {
    (
        proptest::collection::vec(prop_oneof![Just(0.0), Just(1.0)], 0..6),
        proptest::collection::vec(prop_oneof![Just(0.0), Just(1.0)], 0..6),
        proptest::option::of(0usize..2),
        prop_oneof![Just(1.0), Just(9_400_000.0), 1.0..1e7f64],
        proptest::option::of(0.0..3.0f64),
    )
        .prop_map(|(a, b, hold, per_fatality, gamma)| {
            let mut s = Scenario::new("trolley");
            if let Some(g) = gamma {
                s.weighting = CertaintyWeighting::exponential(g);
            }
            for (ai, (name, ps)) in [("stay", a), ("pull", b)].into_iter().enumerate() {
                let mut action = ActionAlternative::new(name);
                action.is_hold_course = hold == Some(ai);
                for (i, p) in ps.into_iter().enumerate() {
                    action = action.with_outcome(Outcome::new(format!("v{i}"), per_fatality, p).unwrap().fatal());
                }
                s = s.with_action(action);
            }
            s
        })
}
