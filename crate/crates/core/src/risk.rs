//! Expectation-value risk: per-outcome penalties, cumulative per-action
//! risk, and minimum-risk action selection with a full trace.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fairness;
use crate::format::{num, percent};
use crate::scalar::{approx_eq, Scalar, TIE_TOLERANCE};
use crate::scenario::{ActionAlternative, Outcome, Scenario, SelectionMode};
use crate::valuation::{self, weighted_penalty};

/// `magnitude × probability`, with the outcome's certainty weighting.
pub fn risk_penalty<T: Scalar>(outcome: &Outcome<T>) -> T {
    weighted_penalty(
        outcome.magnitude.value,
        outcome.probability.value(),
        outcome.certainty_gamma,
    )
}

/// Magnitude actually multiplied by the probability: `penalty / p` when
/// certainty weighting is active.
pub fn effective_magnitude<T: Scalar>(outcome: &Outcome<T>) -> T {
    let gamma = outcome.certainty_gamma;
    if gamma == T::zero() {
        outcome.magnitude.value
    } else {
        outcome.magnitude.value * (gamma * outcome.probability.value()).exp()
    }
}

/// Penalty range implied by the probability uncertainty, ordered `lo ≤ hi`.
pub fn penalty_interval<T: Scalar>(outcome: &Outcome<T>) -> (T, T) {
    let Some(u) = outcome.uncertainty else {
        let p = risk_penalty(outcome);
        return (p, p);
    };
    let m = outcome.magnitude.value;
    let gamma = outcome.certainty_gamma;
    let a = weighted_penalty(m, u.lo.value(), gamma);
    let b = weighted_penalty(m, u.hi.value(), gamma);
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActionRisk<T> {
    pub penalty: T,
    pub interval: (T, T),
}

/// Sum of outcome penalties and component-wise sum of their intervals.
pub fn cumulative_risk<T: Scalar>(action: &ActionAlternative<T>) -> ActionRisk<T> {
    let mut penalty = T::zero();
    let (mut lo, mut hi) = (T::zero(), T::zero());
    for outcome in &action.outcomes {
        penalty = penalty + risk_penalty(outcome);
        let (a, b) = penalty_interval(outcome);
        lo = lo + a;
        hi = hi + b;
    }
    // keep the point inside its interval despite summation rounding
    ActionRisk {
        penalty,
        interval: (lo.min(penalty), hi.max(penalty)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry<T> {
    pub action: String,
    pub outcome: String,
    pub description: String,
    pub magnitude: T,
    pub probability: T,
    pub modifiers: Vec<String>,
    pub contribution: T,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct DecisionTrace<T> {
    pub entries: Vec<TraceEntry<T>>,
}

impl<T: Scalar> DecisionTrace<T> {
    pub fn for_action<'a>(&'a self, action: &'a str) -> impl Iterator<Item = &'a TraceEntry<T>> + 'a {
        self.entries.iter().filter(move |e| e.action == action)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionSummary<T> {
    pub id: String,
    pub label: String,
    pub is_hold_course: bool,
    #[serde(flatten)]
    pub risk: ActionRisk<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecisionResult<T> {
    pub chosen_action: String,
    pub mode: SelectionMode,
    pub per_action: BTreeMap<String, ActionRisk<T>>,
    /// Actions in scenario order.
    pub actions: Vec<ActionSummary<T>>,
    pub tie_broken: bool,
    pub rationale: String,
    pub trace: DecisionTrace<T>,
}

impl<T: Scalar> DecisionResult<T> {
    pub fn chosen(&self) -> &ActionRisk<T> {
        &self.per_action[&self.chosen_action]
    }
}

fn criterion<T: Scalar>(risk: &ActionRisk<T>, mode: SelectionMode) -> T {
    match mode {
        SelectionMode::Expected => risk.penalty,
        SelectionMode::RobustWorstCase => risk.interval.1,
    }
}

/// Orders tied candidates: hold-course first, then lexicographic id.
pub(crate) fn tie_winner<'a, T>(
    tied: impl IntoIterator<Item = &'a ActionAlternative<T>>,
) -> Option<&'a ActionAlternative<T>>
where
    T: 'a,
{
    tied.into_iter()
        .min_by(|a, b| b.is_hold_course.cmp(&a.is_hold_course).then_with(|| a.id.cmp(&b.id)))
}

/// Selects the action minimizing expected penalty (or the interval upper
/// bound in robust mode). Consumes the scenario as given; see [`decide`] for
/// the full pipeline including redaction and valuation.
pub fn select_action<T: Scalar>(scenario: &Scenario<T>) -> Result<DecisionResult<T>> {
    if scenario.actions.is_empty() {
        return Err(Error::EmptyActionSet);
    }
    let mode = scenario.selection_mode;

    let mut trace = DecisionTrace::default();
    let mut per_action = BTreeMap::new();
    let mut actions = Vec::with_capacity(scenario.actions.len());
    for action in &scenario.actions {
        for outcome in &action.outcomes {
            trace.entries.push(TraceEntry {
                action: action.id.clone(),
                outcome: outcome.id.clone(),
                description: outcome.description.clone(),
                magnitude: effective_magnitude(outcome),
                probability: outcome.probability.value(),
                modifiers: outcome.adjustments.clone(),
                contribution: risk_penalty(outcome),
            });
        }
        let risk = cumulative_risk(action);
        per_action.insert(action.id.clone(), risk);
        actions.push(ActionSummary {
            id: action.id.clone(),
            label: action.label.clone(),
            is_hold_course: action.is_hold_course,
            risk,
        });
    }

    let best = scenario
        .actions
        .iter()
        .map(|a| criterion(&per_action[&a.id], mode))
        .fold(T::infinity(), |acc, c| acc.min(c));
    let tied: Vec<&ActionAlternative<T>> = scenario
        .actions
        .iter()
        .filter(|a| approx_eq(criterion(&per_action[&a.id], mode), best, TIE_TOLERANCE))
        .collect();
    let chosen = tie_winner(tied.iter().copied()).expect("at least one action attains the minimum");
    let tie_broken = tied.len() > 1;

    let what = match mode {
        SelectionMode::Expected => "expected penalty",
        SelectionMode::RobustWorstCase => "worst-case penalty",
    };
    let mut rationale = format!("chose `{}`: lowest {what} {}", chosen.id, num(best.as_f64()));
    if tie_broken {
        let ids: Vec<&str> = tied.iter().map(|a| a.id.as_str()).collect();
        let rule = if chosen.is_hold_course && tied.iter().filter(|a| a.is_hold_course).count() == 1 {
            "hold-course preference"
        } else {
            "lexicographic action id"
        };
        let _ = write!(rationale, "; tie among [{}] broken by {rule}", ids.join(", "));
    } else if let Some(runner_up) = scenario.actions.iter().filter(|a| a.id != chosen.id).min_by(|a, b| {
        criterion(&per_action[&a.id], mode)
            .partial_cmp(&criterion(&per_action[&b.id], mode))
            .unwrap_or(std::cmp::Ordering::Equal)
    }) {
        let _ = write!(
            rationale,
            "; next best `{}` at {}",
            runner_up.id,
            num(criterion(&per_action[&runner_up.id], mode).as_f64())
        );
    }

    Ok(DecisionResult {
        chosen_action: chosen.id.clone(),
        mode,
        per_action,
        actions,
        tie_broken,
        rationale,
        trace,
    })
}

/// Decision view of a scenario: excluded attributes withheld, fatality
/// modifiers and certainty weighting applied.
pub fn prepare<T: Scalar>(scenario: &Scenario<T>) -> Result<Scenario<T>> {
    let redacted = fairness::redact(scenario)?;
    Ok(valuation::effective_scenario(&redacted))
}

/// Redacts, values and selects in one step.
pub fn decide<T: Scalar>(scenario: &Scenario<T>) -> Result<DecisionResult<T>> {
    select_action(&prepare(scenario)?)
}

/// Human-readable per-action tables (event, magnitude, probability,
/// penalty) followed by the selection rationale.
pub fn render_trace<T: Scalar>(result: &DecisionResult<T>) -> String {
    let mut out = String::new();
    for action in &result.actions {
        let marker = if action.id == result.chosen_action { " *" } else { "" };
        let hold = if action.is_hold_course { " [hold course]" } else { "" };
        if action.label.is_empty() {
            let _ = writeln!(out, "action {}{hold}{marker}", action.id);
        } else {
            let _ = writeln!(out, "action {} ({}){hold}{marker}", action.id, action.label);
        }
        let rows: Vec<[String; 4]> = result
            .trace
            .for_action(&action.id)
            .map(|e| {
                let mut event = if e.description.is_empty() {
                    e.outcome.clone()
                } else {
                    e.description.clone()
                };
                if !e.modifiers.is_empty() {
                    let _ = write!(event, " [{}]", e.modifiers.join("; "));
                }
                [
                    event,
                    num(e.magnitude.as_f64()),
                    percent(e.probability.as_f64()),
                    num(e.contribution.as_f64()),
                ]
            })
            .collect();
        let header = [
            "event".to_string(),
            "magnitude".to_string(),
            "probability".to_string(),
            "penalty".to_string(),
        ];
        let mut widths = header.each_ref().map(|h| h.chars().count());
        for row in &rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let line = |cells: &[String; 4]| {
            format!(
                "  {:<w0$}  {:>w1$}  {:>w2$}  {:>w3$}",
                cells[0],
                cells[1],
                cells[2],
                cells[3],
                w0 = widths[0],
                w1 = widths[1],
                w2 = widths[2],
                w3 = widths[3]
            )
        };
        let _ = writeln!(out, "{}", line(&header));
        for row in &rows {
            let _ = writeln!(out, "{}", line(row));
        }
        let risk = &action.risk;
        let _ = writeln!(
            out,
            "  total penalty {} (interval [{}, {}])",
            num(risk.penalty.as_f64()),
            num(risk.interval.0.as_f64()),
            num(risk.interval.1.as_f64())
        );
        out.push('\n');
    }
    let _ = writeln!(out, "{}", result.rationale);
    out
}
