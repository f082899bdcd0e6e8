//! Baseline deciders for side-by-side comparison with risk management: a
//! deontological class hierarchy and a trolley-problem chooser.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::format::num;
use crate::risk::{self, cumulative_risk, tie_winner};
use crate::scalar::{approx_eq, Scalar, TIE_TOLERANCE};
use crate::scenario::{ActionAlternative, Role, Scenario, SelectionMode};

/// Protected road-user classes, most protected first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Hierarchy {
    classes: Vec<BTreeSet<Role>>,
}

impl Default for Hierarchy {
    fn default() -> Self {
        Self {
            classes: vec![
                [Role::Pedestrian, Role::Cyclist].into(),
                [Role::OtherDriver, Role::Occupant].into(),
                [Role::Object].into(),
            ],
        }
    }
}

impl Hierarchy {
    /// Classes must be disjoint and together cover every role.
    pub fn new(classes: Vec<BTreeSet<Role>>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for role in classes.iter().flatten() {
            if !seen.insert(*role) {
                return Err(Error::InvalidArgument(format!("role `{role}` appears in two classes")));
            }
        }
        if let Some(missing) = Role::ALL.iter().find(|r| !seen.contains(*r)) {
            return Err(Error::InvalidArgument(format!("role `{missing}` belongs to no class")));
        }
        Ok(Self { classes })
    }

    pub fn classes(&self) -> &[BTreeSet<Role>] {
        &self.classes
    }

    pub fn class_of(&self, role: Role) -> usize {
        self.classes
            .iter()
            .position(|c| c.contains(&role))
            .expect("hierarchy covers every role")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DeontologicalOptions {
    /// Break ties left after the last class by expected penalty before
    /// the hold-course and id rules.
    pub expected_cost_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BaselineDecision {
    pub chosen_action: String,
    pub rationale: String,
}

/// Probability that `action` harms no party of class `class`. Outcomes with
/// non-positive magnitude are not harms; an exclusive group spares the
/// class with probability `1 − Σ p` over its harming members.
pub fn zero_harm_probability<T: Scalar>(
    scenario: &Scenario<T>,
    action: &ActionAlternative<T>,
    hierarchy: &Hierarchy,
    class: usize,
) -> T {
    let harms = |o: &&crate::scenario::Outcome<T>| {
        o.magnitude.value > T::zero()
            && o.affected_party
                .as_deref()
                .and_then(|id| scenario.party(id))
                .is_some_and(|p| hierarchy.class_of(p.role) == class)
    };
    let mut spared = T::one();
    let mut group_mass: Vec<(&str, T)> = Vec::new();
    for o in action.outcomes.iter().filter(harms) {
        let p = o.probability.value();
        match o.exclusive_group.as_deref() {
            None => spared = spared * (T::one() - p),
            Some(g) => match group_mass.iter_mut().find(|(name, _)| *name == g) {
                Some(slot) => slot.1 = slot.1 + p,
                None => group_mass.push((g, p)),
            },
        }
    }
    for (_, mass) in group_mass {
        spared = spared * (T::one() - mass).max(T::zero());
    }
    spared
}

pub fn decide_deontological<T: Scalar>(scenario: &Scenario<T>, hierarchy: &Hierarchy) -> Result<BaselineDecision> {
    decide_deontological_with(scenario, hierarchy, DeontologicalOptions::default())
}

/// Keeps, class by class from the most protected, the actions with the
/// highest probability of sparing that class. Classes no action exposes
/// are skipped. Expected cost is ignored unless the fallback is enabled.
///
/// Works on the decision view of `scenario` (see [`risk::prepare`]).
pub fn decide_deontological_with<T: Scalar>(
    scenario: &Scenario<T>,
    hierarchy: &Hierarchy,
    options: DeontologicalOptions,
) -> Result<BaselineDecision> {
    if scenario.actions.is_empty() {
        return Err(Error::EmptyActionSet);
    }
    let prepared = risk::prepare(scenario)?;
    let mut candidates: Vec<&ActionAlternative<T>> = prepared.actions.iter().collect();
    let mut rationale = String::new();

    for (class, roles) in hierarchy.classes().iter().enumerate() {
        let spared: Vec<T> = candidates
            .iter()
            .map(|a| zero_harm_probability(&prepared, a, hierarchy, class))
            .collect();
        if spared.iter().all(|p| *p == T::one()) {
            continue;
        }
        let best = spared.iter().fold(T::neg_infinity(), |acc, p| acc.max(*p));
        let names: Vec<&str> = roles.iter().map(|r| r.as_str()).collect();
        let _ = write!(rationale, "{{{}}}: ", names.join(", "));
        let scored: Vec<String> = candidates
            .iter()
            .zip(&spared)
            .map(|(a, p)| format!("{} {}", a.id, num(p.as_f64())))
            .collect();
        let _ = write!(rationale, "P(no harm) {}; ", scored.join(", "));
        candidates = candidates
            .into_iter()
            .zip(spared)
            .filter(|(_, p)| approx_eq(*p, best, TIE_TOLERANCE))
            .map(|(a, _)| a)
            .collect();
        if candidates.len() == 1 {
            break;
        }
    }

    if candidates.len() > 1 && options.expected_cost_fallback {
        let penalties: Vec<T> = candidates.iter().map(|a| cumulative_risk(a).penalty).collect();
        let best = penalties.iter().fold(T::infinity(), |acc, p| acc.min(*p));
        candidates = candidates
            .into_iter()
            .zip(penalties)
            .filter(|(_, p)| approx_eq(*p, best, TIE_TOLERANCE))
            .map(|(a, _)| a)
            .collect();
        let _ = write!(rationale, "expected-cost fallback {}; ", num(best.as_f64()));
    }

    let tied = candidates.len() > 1;
    let chosen = tie_winner(candidates).expect("candidate set never empties");
    if rationale.is_empty() {
        rationale.push_str("no protected class is exposed; ");
    }
    let _ = write!(rationale, "chose `{}`", chosen.id);
    if tied {
        rationale.push_str(" by tie policy");
    }
    Ok(BaselineDecision {
        chosen_action: chosen.id.clone(),
        rationale,
    })
}

/// Fatalities certain under `action`: consequence counts where given,
/// otherwise one per fatal outcome. Zero-probability outcomes add nothing.
fn certain_fatalities<T: Scalar>(action: &ActionAlternative<T>) -> T {
    action
        .outcomes
        .iter()
        .filter(|o| o.probability.value() == T::one())
        .map(|o| match &o.consequence {
            Some(c) => c.fatalities,
            None if o.fatal => T::one(),
            None => T::zero(),
        })
        .fold(T::zero(), |acc, x| acc + x)
}

/// Chooses the action with fewer certain fatalities; ties go to the tie
/// policy. Requires exactly two actions whose outcome probabilities are
/// all 0 or 1.
pub fn decide_trolley<T: Scalar>(scenario: &Scenario<T>) -> Result<BaselineDecision> {
    if scenario.actions.len() != 2 {
        return Err(Error::NotATrolleyScenario(format!(
            "{} actions, a trolley problem has exactly two",
            scenario.actions.len()
        )));
    }
    for action in &scenario.actions {
        if let Some(o) = action
            .outcomes
            .iter()
            .find(|o| o.probability.value() != T::zero() && o.probability.value() != T::one())
        {
            return Err(Error::NotATrolleyScenario(format!(
                "outcome `{}` of `{}` has probability {}",
                o.id,
                action.id,
                o.probability.value()
            )));
        }
    }
    let counts: Vec<T> = scenario.actions.iter().map(certain_fatalities).collect();
    let best = counts[0].min(counts[1]);
    let tied: Vec<&ActionAlternative<T>> = scenario
        .actions
        .iter()
        .zip(&counts)
        .filter(|(_, c)| approx_eq(**c, best, TIE_TOLERANCE))
        .map(|(a, _)| a)
        .collect();
    let by_tie = tied.len() > 1;
    let chosen = tie_winner(tied).expect("one count is the minimum");
    let mut rationale = format!(
        "certain fatalities: {} {}, {} {}; chose `{}`",
        scenario.actions[0].id,
        num(counts[0].as_f64()),
        scenario.actions[1].id,
        num(counts[1].as_f64()),
        chosen.id
    );
    if by_tie {
        rationale.push_str(" by tie policy");
    }
    Ok(BaselineDecision {
        chosen_action: chosen.id.clone(),
        rationale,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow<T> {
    pub decider: String,
    pub chosen_action: String,
    /// Expected penalty of the chosen action, as computed by risk management.
    pub expected_penalty: T,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport<T> {
    pub scenario: String,
    pub rows: Vec<ComparisonRow<T>>,
    /// Some decider chose differently from expected-penalty minimization.
    pub divergence: bool,
    /// Largest expected penalty among the chosen actions minus the minimum.
    pub gap: T,
}

pub fn compare<T: Scalar>(scenario: &Scenario<T>) -> Result<ComparisonReport<T>> {
    compare_with(scenario, &Hierarchy::default(), DeontologicalOptions::default())
}

/// Runs expected and robust risk management, the deontological hierarchy,
/// and the trolley chooser when the scenario qualifies.
pub fn compare_with<T: Scalar>(
    scenario: &Scenario<T>,
    hierarchy: &Hierarchy,
    options: DeontologicalOptions,
) -> Result<ComparisonReport<T>> {
    let prepared = risk::prepare(scenario)?;
    let penalty_of = |id: &str| -> Result<T> { Ok(cumulative_risk(prepared.require_action(id)?).penalty) };

    let mut rows = Vec::new();
    for (name, mode) in [
        ("risk_expected", SelectionMode::Expected),
        ("risk_robust", SelectionMode::RobustWorstCase),
    ] {
        let mut view = prepared.clone();
        view.selection_mode = mode;
        let d = risk::select_action(&view)?;
        rows.push(ComparisonRow {
            decider: name.to_string(),
            expected_penalty: penalty_of(&d.chosen_action)?,
            chosen_action: d.chosen_action,
            rationale: d.rationale,
        });
    }
    let d = decide_deontological_with(scenario, hierarchy, options)?;
    rows.push(ComparisonRow {
        decider: "deontological".to_string(),
        expected_penalty: penalty_of(&d.chosen_action)?,
        chosen_action: d.chosen_action,
        rationale: d.rationale,
    });
    match decide_trolley(scenario) {
        Ok(d) => rows.push(ComparisonRow {
            decider: "trolley".to_string(),
            expected_penalty: penalty_of(&d.chosen_action)?,
            chosen_action: d.chosen_action,
            rationale: d.rationale,
        }),
        Err(Error::NotATrolleyScenario(_)) => {}
        Err(e) => return Err(e),
    }

    let reference = &rows[0];
    let divergence = rows.iter().any(|r| r.chosen_action != reference.chosen_action);
    let worst = rows
        .iter()
        .fold(reference.expected_penalty, |acc, r| acc.max(r.expected_penalty));
    let gap = worst - reference.expected_penalty;
    Ok(ComparisonReport {
        scenario: scenario.name.clone(),
        rows,
        divergence,
        gap,
    })
}
