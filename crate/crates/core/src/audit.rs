//! Who bears the risk: per-party penalty shares, transfers between
//! alternatives, and a report built around Hansson's seven questions on the
//! ethics of risk (Hansson 2007, "Risk and Ethics: Three Approaches").

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::format::num;
use crate::risk::{self, cumulative_risk, risk_penalty, DecisionResult};
use crate::scalar::Scalar;
use crate::scenario::Scenario;

/// Pseudo-party that collects outcomes naming no party.
pub const ENVIRONMENT_PARTY: &str = "environment";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskDistribution<T> {
    pub action: String,
    /// Expected penalty per party that any outcome of the action names.
    pub shares: BTreeMap<String, T>,
    /// Cumulative risk of the action.
    pub total: T,
    /// Outcomes pooled under [`ENVIRONMENT_PARTY`].
    pub unassigned: Vec<String>,
}

/// Analytic per-party penalty sums under `action` in the decision view of
/// `scenario` (see [`risk::prepare`]).
pub fn risk_distribution<T: Scalar>(scenario: &Scenario<T>, action: &str) -> Result<RiskDistribution<T>> {
    let prepared = risk::prepare(scenario)?;
    distribution_of(&prepared, action)
}

fn distribution_of<T: Scalar>(prepared: &Scenario<T>, action: &str) -> Result<RiskDistribution<T>> {
    let act = prepared.require_action(action)?;
    let mut shares = BTreeMap::new();
    let mut unassigned = Vec::new();
    for o in &act.outcomes {
        let party = match o.affected_party.as_deref() {
            Some(p) => p,
            None => {
                unassigned.push(o.id.clone());
                ENVIRONMENT_PARTY
            }
        };
        let slot = shares.entry(party.to_string()).or_insert(T::zero());
        *slot = *slot + risk_penalty(o);
    }
    Ok(RiskDistribution {
        action: act.id.clone(),
        shares,
        total: cumulative_risk(act).penalty,
        unassigned,
    })
}

/// Share under `action_b` minus share under `action_a`, for every party
/// named under either. Positive means risk moved onto that party.
pub fn risk_transfer<T: Scalar>(scenario: &Scenario<T>, action_a: &str, action_b: &str) -> Result<BTreeMap<String, T>> {
    let prepared = risk::prepare(scenario)?;
    let a = distribution_of(&prepared, action_a)?;
    let b = distribution_of(&prepared, action_b)?;
    Ok(transfer_between(&a, &b))
}

fn transfer_between<T: Scalar>(a: &RiskDistribution<T>, b: &RiskDistribution<T>) -> BTreeMap<String, T> {
    let parties: BTreeSet<&String> = a.shares.keys().chain(b.shares.keys()).collect();
    parties
        .into_iter()
        .map(|p| {
            let share = |d: &RiskDistribution<T>| d.shares.get(p).copied().unwrap_or(T::zero());
            (p.clone(), share(b) - share(a))
        })
        .collect()
}

/// Largest positive share over smallest positive share; 1 means even.
pub fn fairness_index<T: Scalar>(distribution: &RiskDistribution<T>) -> Result<T> {
    let positive = distribution.shares.values().copied().filter(|s| *s > T::zero());
    let (lo, hi) = positive.fold((T::infinity(), T::neg_infinity()), |(lo, hi), s| (lo.min(s), hi.max(s)));
    if hi < lo {
        return Err(Error::NoExposedParties);
    }
    Ok(hi / lo)
}

/// Hansson's questions, in his order and wording. The third reads "less
/// fair" where "more fair" is the evident intent; it is kept as written.
pub const HANSSON_QUESTIONS: [&str; 7] = [
    "To what extent do the risk-exposed benefit from the risk exposure?",
    "Is the distribution of risks and benefits fair?",
    "Can the distribution of risks and benefits be made less fair by redistribution or by compensation?",
    "To what extent is the risk exposure decided by those who run the risk?",
    "Do the risk-exposed have access to all relevant information about the risk?",
    "Are there risk-exposed persons who cannot be informed or included in the decision process?",
    "Does the decision-maker benefit from other people's risk exposure?",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HanssonEntry {
    pub number: usize,
    pub question: &'static str,
    /// Named facts computed from the scenario, in display order.
    pub inputs: Vec<(String, String)>,
    /// Numeric answer where the question has one (the fairness index).
    pub value: Option<f64>,
    /// Summary where the flags settle the question, otherwise a prompt
    /// for the designer.
    pub answer: String,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HanssonReport {
    pub scenario: String,
    pub action: String,
    pub entries: Vec<HanssonEntry>,
}

fn list(ids: &[&str]) -> String {
    if ids.is_empty() {
        "none".to_string()
    } else {
        ids.join(", ")
    }
}

/// Seven entries about the action `decision` chose. A party counts as
/// risk-exposed when its share under that action is positive.
pub fn hansson_report<T: Scalar>(scenario: &Scenario<T>, decision: &DecisionResult<T>) -> Result<HanssonReport> {
    let prepared = risk::prepare(scenario)?;
    let chosen = decision.chosen_action.as_str();
    let dist = distribution_of(&prepared, chosen)?;
    let exposed: Vec<&str> = dist
        .shares
        .iter()
        .filter(|(id, s)| **s > T::zero() && id.as_str() != ENVIRONMENT_PARTY)
        .map(|(id, _)| id.as_str())
        .collect();
    let party = |id: &str| prepared.party(id).expect("shares name declared parties");
    let flagged = |f: fn(&crate::scenario::Party) -> bool| -> Vec<&str> {
        exposed.iter().copied().filter(|id| f(party(id))).collect()
    };
    let entry = |number: usize| HanssonEntry {
        number,
        question: HANSSON_QUESTIONS[number - 1],
        inputs: Vec::new(),
        value: None,
        answer: String::new(),
        note: None,
    };
    let mut entries = Vec::with_capacity(7);

    let mut q1 = entry(1);
    for (id, share) in &dist.shares {
        let role = match prepared.party(id) {
            Some(p) if p.is_beneficiary => "beneficiary",
            Some(_) => "not a beneficiary",
            None => "no party",
        };
        q1.inputs
            .push((id.clone(), format!("share {}, {role}", num(share.as_f64()))));
    }
    let non_beneficiaries = flagged(|p| !p.is_beneficiary);
    q1.answer = if exposed.is_empty() {
        "no party is exposed under the chosen action".to_string()
    } else if non_beneficiaries.is_empty() {
        "every risk-exposed party benefits".to_string()
    } else {
        format!("exposed without benefit: {}", list(&non_beneficiaries))
    };
    entries.push(q1);

    let mut q2 = entry(2);
    q2.inputs.push(("total".to_string(), num(dist.total.as_f64())));
    match fairness_index(&dist) {
        Ok(index) => {
            q2.value = Some(index.as_f64());
            q2.inputs.push(("fairness_index".to_string(), num(index.as_f64())));
            q2.answer = format!("max/min positive share ratio {} (1 = even)", num(index.as_f64()));
        }
        Err(_) => {
            q2.inputs.push(("fairness_index".to_string(), "undefined".to_string()));
            q2.answer = "no party carries positive risk".to_string();
        }
    }
    entries.push(q2);

    let mut q3 = entry(3);
    for alt in prepared.actions.iter().filter(|a| a.id != chosen) {
        let other = distribution_of(&prepared, &alt.id)?;
        let deltas: Vec<String> = transfer_between(&dist, &other)
            .into_iter()
            .map(|(p, d)| format!("{p} {}", num(d.as_f64())))
            .collect();
        q3.inputs.push((format!("transfer to {}", alt.id), deltas.join(", ")));
    }
    q3.answer = "designer to assess: would shifting risk to another alternative, or compensating the \
                 exposed, improve the distribution?"
        .to_string();
    q3.note = Some("the question is quoted as written; \"more fair\" is the likely intended wording".to_string());
    entries.push(q3);

    let mut q4 = entry(4);
    let involuntary = flagged(|p| !p.voluntary_exposure);
    q4.inputs
        .push(("voluntary".to_string(), list(&flagged(|p| p.voluntary_exposure))));
    q4.inputs.push(("involuntary".to_string(), list(&involuntary)));
    q4.answer = if involuntary.is_empty() {
        "all risk-exposed parties chose their exposure".to_string()
    } else {
        format!("exposure not chosen by: {}", list(&involuntary))
    };
    entries.push(q4);

    let mut q5 = entry(5);
    let uninformed = flagged(|p| !p.informed);
    q5.inputs.push(("informed".to_string(), list(&flagged(|p| p.informed))));
    q5.inputs.push(("uninformed".to_string(), list(&uninformed)));
    q5.answer = if uninformed.is_empty() {
        "all informed".to_string()
    } else {
        format!("uninformed: {}", list(&uninformed))
    };
    entries.push(q5);

    let mut q6 = entry(6);
    let excluded = flagged(|p| !p.informed && !p.is_decision_maker);
    q6.inputs
        .push(("neither informed nor deciding".to_string(), list(&excluded)));
    q6.answer = if excluded.is_empty() {
        "every risk-exposed party is informed or takes part in the decision".to_string()
    } else {
        format!("outside the decision process: {}", list(&excluded))
    };
    entries.push(q6);

    let mut q7 = entry(7);
    let both: Vec<&str> = prepared
        .parties
        .iter()
        .filter(|p| p.is_decision_maker && p.is_beneficiary)
        .map(|p| p.id.as_str())
        .collect();
    let others: Vec<&str> = exposed.iter().copied().filter(|id| !both.contains(id)).collect();
    q7.inputs
        .push(("decision-maker and beneficiary".to_string(), list(&both)));
    q7.inputs.push(("exposed others".to_string(), list(&others)));
    q7.answer = if both.is_empty() {
        "no decision-maker is also a beneficiary".to_string()
    } else if others.is_empty() {
        "the benefiting decision-makers expose no one else".to_string()
    } else {
        format!(
            "decision-making beneficiaries: {}; others at risk: {}",
            list(&both),
            list(&others)
        )
    };
    entries.push(q7);

    Ok(HanssonReport {
        scenario: scenario.name.clone(),
        action: chosen.to_string(),
        entries,
    })
}
