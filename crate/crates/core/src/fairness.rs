//! Attribute-exclusion policies and decision-invariance checks.
//!
//! Redaction does not delete attributes. It marks them as withheld on each
//! party, so modifier lookups made on behalf of a decision see them as
//! absent while the true values stay available to simulation.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::risk;
use crate::scalar::Scalar;
use crate::scenario::{AttrValue, Scenario};

/// Maximum number of attribute assignments enumerated exhaustively.
const MAX_ASSIGNMENTS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FairnessPolicy {
    pub excluded_attributes: BTreeSet<String>,
    pub rationale: BTreeMap<String, String>,
}

impl Default for FairnessPolicy {
    fn default() -> Self {
        let entries = [
            ("age", "fatality risk by age must not decide who is exposed"),
            (
                "helmet",
                "protective equipment must not make a road user the preferred target",
            ),
            ("sex", "fatality risk by sex must not decide who is exposed"),
            (
                "vehicle_cost_class",
                "vehicle price must not steer risk toward lower-income road users",
            ),
        ];
        Self {
            excluded_attributes: entries.iter().map(|(k, _)| k.to_string()).collect(),
            rationale: entries.iter().map(|(k, r)| (k.to_string(), r.to_string())).collect(),
        }
    }
}

impl FairnessPolicy {
    pub fn empty() -> Self {
        Self {
            excluded_attributes: BTreeSet::new(),
            rationale: BTreeMap::new(),
        }
    }

    pub fn excluding<I, S>(keys: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            excluded_attributes: keys.into_iter().map(Into::into).collect(),
            rationale: BTreeMap::new(),
        }
    }
}

/// Withholds every excluded attribute from decision logic.
pub fn redact<T: Scalar>(scenario: &Scenario<T>) -> Result<Scenario<T>> {
    let schema = scenario.attribute_schema();
    let policy = &scenario.fairness_policy;
    if let Some(unknown) = policy.excluded_attributes.iter().find(|k| !schema.contains(*k)) {
        return Err(Error::UnknownAttribute(unknown.clone()));
    }
    let mut out = scenario.clone();
    for party in &mut out.parties {
        for key in &policy.excluded_attributes {
            if party.attributes.contains_key(key) {
                party.withheld.insert(key.clone());
            }
        }
    }
    Ok(out)
}

/// Attribute values given to each perturbed party in one run.
pub type Assignment = BTreeMap<String, AttrValue>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub baseline: Assignment,
    pub baseline_choice: String,
    pub perturbed: Assignment,
    pub perturbed_choice: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub attribute: String,
    pub invariant: bool,
    /// Every run performed, in enumeration order.
    pub runs: Vec<(Assignment, String)>,
    pub witnesses: Vec<Witness>,
}

/// Perturbs `attribute` over `values` on every party that carries it (all
/// parties when none does), runs the full decision pipeline for each
/// assignment, and reports whether the chosen action ever changes.
pub fn exclusion_invariance_check<T: Scalar>(
    scenario: &Scenario<T>,
    attribute: &str,
    values: &[AttrValue],
) -> Result<InvarianceReport> {
    if !scenario.attribute_schema().contains(attribute) {
        return Err(Error::UnknownAttribute(attribute.to_string()));
    }
    if values.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "invariance check on `{attribute}` needs at least two values"
        )));
    }

    let mut targets: Vec<String> = scenario
        .parties
        .iter()
        .filter(|p| p.attributes.contains_key(attribute))
        .map(|p| p.id.clone())
        .collect();
    if targets.is_empty() {
        targets = scenario.parties.iter().map(|p| p.id.clone()).collect();
    }

    let mut runs = Vec::new();
    for assignment in assignments(scenario, attribute, &targets, values) {
        let mut perturbed = scenario.clone();
        for party in &mut perturbed.parties {
            if let Some(v) = assignment.get(&party.id) {
                party.attributes.insert(attribute.to_string(), v.clone());
            }
        }
        let decision = risk::decide(&perturbed)?;
        runs.push((assignment, decision.chosen_action));
    }

    let witnesses: Vec<Witness> = match runs.first() {
        Some((base, base_choice)) => runs
            .iter()
            .skip(1)
            .filter(|(_, choice)| choice != base_choice)
            .map(|(a, choice)| Witness {
                baseline: base.clone(),
                baseline_choice: base_choice.clone(),
                perturbed: a.clone(),
                perturbed_choice: choice.clone(),
            })
            .collect(),
        None => Vec::new(),
    };

    Ok(InvarianceReport {
        attribute: attribute.to_string(),
        invariant: witnesses.is_empty(),
        runs,
        witnesses,
    })
}

/// Full Cartesian product of values over targets when small enough,
/// otherwise one-party-at-a-time perturbations around the current values.
fn assignments<T: Scalar>(
    scenario: &Scenario<T>,
    attribute: &str,
    targets: &[String],
    values: &[AttrValue],
) -> Vec<Assignment> {
    let full = values
        .len()
        .checked_pow(targets.len() as u32)
        .filter(|n| *n <= MAX_ASSIGNMENTS);
    if let Some(total) = full {
        return (0..total)
            .map(|mut idx| {
                targets
                    .iter()
                    .map(|t| {
                        let v = values[idx % values.len()].clone();
                        idx /= values.len();
                        (t.clone(), v)
                    })
                    .collect()
            })
            .collect();
    }

    let current: Assignment = targets
        .iter()
        .map(|t| {
            let v = scenario
                .party(t)
                .and_then(|p| p.attributes.get(attribute).cloned())
                .unwrap_or_else(|| values[0].clone());
            (t.clone(), v)
        })
        .collect();
    let mut out = vec![current.clone()];
    for t in targets {
        for v in values {
            let mut a = current.clone();
            a.insert(t.clone(), v.clone());
            if !out.contains(&a) {
                out.push(a);
            }
        }
    }
    out
}
