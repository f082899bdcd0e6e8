use std::collections::{BTreeMap, BTreeSet};

use super::{Diagnostic, DiagnosticCode as Code, SourceMap};
use crate::scalar::Scalar;
use crate::scenario::Scenario;

/// Tolerance on exclusive-group probability sums.
const GROUP_SUM_SLACK: f64 = 1e-12;

/// Checks every scenario invariant; empty output means the scenario is valid.
/// Diagnostics point at the file start when no source map is available.
pub fn validate<T: Scalar>(scenario: &Scenario<T>) -> Vec<Diagnostic> {
    validate_with(scenario, &SourceMap::default())
}

pub fn validate_with<T: Scalar>(scenario: &Scenario<T>, map: &SourceMap) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let schema = scenario.attribute_schema();

    if scenario.actions.is_empty() {
        out.push(Diagnostic::error(
            Code::EmptyActionSet,
            map.locate("scenario", None),
            "scenario has no actions",
        ));
    }

    let mut party_ids = BTreeSet::new();
    for party in &scenario.parties {
        let key = format!("party:{}", party.id);
        if !party_ids.insert(party.id.as_str()) {
            out.push(Diagnostic::error(
                Code::DuplicateId,
                map.locate(&key, None),
                format!("duplicate party id `{}`", party.id),
            ));
        }
        for attr in party.attributes.keys() {
            if !schema.contains(attr) {
                out.push(Diagnostic::error(
                    Code::UnknownAttribute,
                    map.locate(&key, Some(&format!("attr.{attr}"))),
                    format!("party `{}` uses undeclared attribute `{attr}`", party.id),
                ));
            }
        }
    }

    for key in &scenario.fairness_policy.excluded_attributes {
        if !schema.contains(key) {
            out.push(Diagnostic::error(
                Code::UnknownAttribute,
                map.locate("policy", Some("exclude")),
                format!("policy excludes undeclared attribute `{key}`"),
            ));
        }
    }

    let holds: Vec<&str> = scenario
        .actions
        .iter()
        .filter(|a| a.is_hold_course)
        .map(|a| a.id.as_str())
        .collect();
    if holds.len() > 1 {
        out.push(Diagnostic::error(
            Code::MultipleHoldCourse,
            map.locate(&format!("action:{}", holds[1]), Some("hold_course")),
            format!("more than one hold-course action: {}", holds.join(", ")),
        ));
    }

    let mut action_ids = BTreeSet::new();
    for action in &scenario.actions {
        let akey = format!("action:{}", action.id);
        if !action_ids.insert(action.id.as_str()) {
            out.push(Diagnostic::error(
                Code::DuplicateId,
                map.locate(&akey, None),
                format!("duplicate action id `{}`", action.id),
            ));
        }
        let mut outcome_ids = BTreeSet::new();
        let mut groups: BTreeMap<&str, (T, String)> = BTreeMap::new();
        for outcome in &action.outcomes {
            let okey = format!("outcome:{}/{}", action.id, outcome.id);
            if !outcome_ids.insert(outcome.id.as_str()) {
                out.push(Diagnostic::error(
                    Code::DuplicateId,
                    map.locate(&okey, None),
                    format!("duplicate outcome id `{}` in action `{}`", outcome.id, action.id),
                ));
            }
            let p = outcome.probability.value();
            if !(p >= T::zero() && p <= T::one()) {
                out.push(Diagnostic::error(
                    Code::ProbabilityOutOfRange,
                    map.locate(&okey, Some("probability")),
                    format!("probability {p} of `{}` is outside [0, 1]", outcome.id),
                ));
            }
            if let Some(u) = outcome.uncertainty {
                if !(u.lo.value() <= p && p <= u.hi.value()) {
                    out.push(Diagnostic::error(
                        Code::ProbabilityOutOfRange,
                        map.locate(&okey, Some("uncertainty")),
                        format!(
                            "uncertainty [{}, {}] of `{}` does not contain probability {p}",
                            u.lo.value(),
                            u.hi.value(),
                            outcome.id
                        ),
                    ));
                }
            }
            if !outcome.magnitude.value.is_finite() {
                out.push(Diagnostic::error(
                    Code::InvalidValue,
                    map.locate(&okey, Some("magnitude")),
                    format!("magnitude of `{}` is not finite", outcome.id),
                ));
            }
            if outcome.magnitude.unit != scenario.unit {
                out.push(Diagnostic::error(
                    Code::UnitMismatch,
                    map.locate(&okey, Some("unit")),
                    format!(
                        "outcome `{}` is in {} but the scenario uses {}",
                        outcome.id, outcome.magnitude.unit, scenario.unit
                    ),
                ));
            }
            if let Some(party) = &outcome.affected_party {
                if scenario.party(party).is_none() {
                    out.push(Diagnostic::error(
                        Code::UnknownReference,
                        map.locate(&okey, Some("party")),
                        format!("outcome `{}` names unknown party `{party}`", outcome.id),
                    ));
                }
            }
            if let Some(c) = &outcome.consequence {
                let negative = c.fatalities < T::zero()
                    || c.person_hours < T::zero()
                    || c.injuries.values().any(|v| *v < T::zero());
                if negative {
                    out.push(Diagnostic::error(
                        Code::InvalidValue,
                        map.locate(&okey, None),
                        format!("consequences of `{}` must be non-negative", outcome.id),
                    ));
                }
                for class in c.injuries.keys() {
                    if !scenario.schedule.injury_costs.contains_key(class) {
                        out.push(Diagnostic::error(
                            Code::UnknownInjuryClass,
                            map.locate(&okey, Some(&format!("injury.{class}"))),
                            format!("injury class `{class}` is missing from the magnitude schedule"),
                        ));
                    }
                }
            }
            if let Some(group) = &outcome.exclusive_group {
                let slot = groups.entry(group.as_str()).or_insert((T::zero(), okey.clone()));
                slot.0 = slot.0 + p;
            }
        }
        for (group, (sum, first_key)) in groups {
            if sum.as_f64() > 1.0 + GROUP_SUM_SLACK {
                out.push(Diagnostic::error(
                    Code::GroupSumExceeded,
                    map.locate(&first_key, Some("group")),
                    format!(
                        "exclusive group `{group}` in action `{}` has total probability {} > 1",
                        action.id, sum
                    ),
                ));
            }
        }
    }

    let schedule = &scenario.schedule;
    let bad_schedule = [schedule.vsl_usd, schedule.travel_time_usd_per_person_hour]
        .into_iter()
        .chain(schedule.injury_costs.values().copied())
        .any(|v| !(v.is_finite() && v >= T::zero()));
    if bad_schedule {
        out.push(Diagnostic::error(
            Code::InvalidValue,
            map.locate("schedule", None),
            "schedule entries must be finite and non-negative",
        ));
    }

    let modifiers = &scenario.modifiers;
    let mut factors: Vec<T> = modifiers.factors.iter().map(|f| f.factor).collect();
    if let Some(c) = modifiers.age_curve {
        factors.extend([c.young_factor, c.old_factor]);
        if !(c.young_age.is_finite() && c.old_age.is_finite() && c.young_age < c.old_age) {
            out.push(Diagnostic::error(
                Code::InvalidValue,
                map.locate("modifiers", Some("age_curve")),
                "age curve anchors must be finite and increasing",
            ));
        }
    }
    if factors.iter().any(|f| !(f.is_finite() && *f > T::zero())) {
        out.push(Diagnostic::error(
            Code::InvalidValue,
            map.locate("modifiers", None),
            "modifier factors must be finite and positive",
        ));
    }

    let gamma = scenario.weighting.gamma;
    if !(gamma.is_finite() && gamma >= T::zero()) {
        out.push(Diagnostic::error(
            Code::InvalidValue,
            map.locate("weighting", Some("gamma")),
            "gamma must be finite and non-negative",
        ));
    }

    out
}
