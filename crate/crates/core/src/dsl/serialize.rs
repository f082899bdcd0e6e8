use std::fmt::Write as _;

use crate::scalar::Scalar;
use crate::scenario::Scenario;

fn n<T: Scalar>(x: T) -> String {
    format!("{}", x.as_f64())
}

/// Canonical text form: scenario header, parties, actions with their
/// outcomes, then policy, weighting, schedule and modifiers. Every setting
/// is written out, so the text does not depend on parser defaults.
///
/// Decision-time state (withheld attributes, certainty exponents,
/// adjustment notes) is not part of the file format and is dropped.
pub fn serialize<T: Scalar>(scenario: &Scenario<T>) -> String {
    let mut out = String::new();
    let w = &mut out;

    let _ = writeln!(w, "[scenario]");
    let _ = writeln!(w, "name = {}", scenario.name);
    let _ = writeln!(w, "unit = {}", scenario.unit);
    let _ = writeln!(w, "selection = {}", scenario.selection_mode);
    if !scenario.attributes.is_empty() {
        let attrs: Vec<&str> = scenario.attributes.iter().map(String::as_str).collect();
        let _ = writeln!(w, "attributes = {}", attrs.join(", "));
    }
    for (name, value) in &scenario.params {
        let _ = writeln!(w, "param.{name} = {}", n(*value));
    }

    for party in &scenario.parties {
        let _ = writeln!(w, "\n[party {}]", party.id);
        let _ = writeln!(w, "role = {}", party.role);
        let _ = writeln!(w, "voluntary = {}", party.voluntary_exposure);
        let _ = writeln!(w, "informed = {}", party.informed);
        let _ = writeln!(w, "beneficiary = {}", party.is_beneficiary);
        let _ = writeln!(w, "decision_maker = {}", party.is_decision_maker);
        for (key, value) in &party.attributes {
            let _ = writeln!(w, "attr.{key} = {value}");
        }
    }

    for action in &scenario.actions {
        let _ = writeln!(w, "\n[action {}]", action.id);
        let _ = writeln!(w, "label = {}", action.label);
        let _ = writeln!(w, "hold_course = {}", action.is_hold_course);
        for o in &action.outcomes {
            let _ = writeln!(w, "\n[outcome {}]", o.id);
            let _ = writeln!(w, "description = {}", o.description);
            match &o.consequence {
                Some(c) => {
                    let _ = writeln!(w, "fatalities = {}", n(c.fatalities));
                    let _ = writeln!(w, "person_hours = {}", n(c.person_hours));
                    for (class, count) in &c.injuries {
                        let _ = writeln!(w, "injury.{class} = {}", n(*count));
                    }
                }
                None => {
                    let _ = writeln!(w, "magnitude = {}", n(o.magnitude.value));
                    if o.magnitude.unit != scenario.unit {
                        let _ = writeln!(w, "unit = {}", o.magnitude.unit);
                    }
                }
            }
            match &o.probability_expr {
                Some(expr) => {
                    let _ = writeln!(w, "probability = {expr}");
                }
                None => {
                    let _ = writeln!(w, "probability = {}", n(o.probability.value()));
                }
            }
            if let Some(u) = o.uncertainty {
                let _ = writeln!(w, "uncertainty = {} .. {}", n(u.lo.value()), n(u.hi.value()));
            }
            if let Some(p) = &o.affected_party {
                let _ = writeln!(w, "party = {p}");
            }
            if let Some(g) = &o.exclusive_group {
                let _ = writeln!(w, "group = {g}");
            }
            let _ = writeln!(w, "fatal = {}", o.fatal);
        }
    }

    let policy = &scenario.fairness_policy;
    let _ = writeln!(w, "\n[policy]");
    let excluded: Vec<&str> = policy.excluded_attributes.iter().map(String::as_str).collect();
    let _ = writeln!(w, "exclude = {}", excluded.join(", "));
    for (key, text) in &policy.rationale {
        let _ = writeln!(w, "rationale.{key} = {text}");
    }

    let _ = writeln!(w, "\n[weighting]");
    let _ = writeln!(w, "mode = {}", scenario.weighting.mode);
    let _ = writeln!(w, "gamma = {}", n(scenario.weighting.gamma));

    let schedule = &scenario.schedule;
    let _ = writeln!(w, "\n[schedule]");
    let _ = writeln!(w, "vsl_usd = {}", n(schedule.vsl_usd));
    let _ = writeln!(
        w,
        "travel_time_usd_per_person_hour = {}",
        n(schedule.travel_time_usd_per_person_hour)
    );
    for (class, cost) in &schedule.injury_costs {
        let _ = writeln!(w, "injury.{class} = {}", n(*cost));
    }

    let modifiers = &scenario.modifiers;
    let _ = writeln!(w, "\n[modifiers]");
    let _ = writeln!(w, "base = none");
    match modifiers.age_curve {
        Some(c) => {
            let _ = writeln!(
                w,
                "age_curve = {}:{}, {}:{}",
                c.young_age,
                n(c.young_factor),
                c.old_age,
                n(c.old_factor)
            );
        }
        None => {
            let _ = writeln!(w, "age_curve = none");
        }
    }
    for f in &modifiers.factors {
        let _ = writeln!(w, "factor.{}.{} = {}", f.attribute, f.value, n(f.factor));
    }

    out
}
