//! Monetization of consequences, fatality-probability modifiers drawn from
//! party attributes, and certainty weighting of fatality value.
//!
//! Certainty weighting replaces the linear penalty `V·p` with `V·p·e^(γp)`
//! for fatality outcomes. At `γ = 0` the two coincide exactly; for `γ > 0`
//! the effective value of a life grows with the probability of death, so a
//! near-certain fatality weighs up to `e^γ` times the low-probability rate.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::scenario::{AttrValue, Consequence, Magnitude, Party, Probability, Scenario, Unit};

/// USD value of preventing one statistical fatality.
pub const DEFAULT_VSL_USD: f64 = 9_400_000.0;
/// USD value of one person-hour of travel time.
pub const DEFAULT_TRAVEL_TIME_USD_PER_PERSON_HOUR: f64 = 13.30;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MagnitudeSchedule<T> {
    pub vsl_usd: T,
    pub travel_time_usd_per_person_hour: T,
    /// Cost per injury of each class; user supplied.
    pub injury_costs: BTreeMap<String, T>,
}

impl<T: Scalar> Default for MagnitudeSchedule<T> {
    fn default() -> Self {
        Self {
            vsl_usd: T::lit(DEFAULT_VSL_USD),
            travel_time_usd_per_person_hour: T::lit(DEFAULT_TRAVEL_TIME_USD_PER_PERSON_HOUR),
            injury_costs: BTreeMap::new(),
        }
    }
}

impl<T: Scalar> MagnitudeSchedule<T> {
    pub fn cast<U: Scalar>(&self) -> MagnitudeSchedule<U> {
        MagnitudeSchedule {
            vsl_usd: U::lit(self.vsl_usd.as_f64()),
            travel_time_usd_per_person_hour: U::lit(self.travel_time_usd_per_person_hour.as_f64()),
            injury_costs: self
                .injury_costs
                .iter()
                .map(|(k, v)| (k.clone(), U::lit(v.as_f64())))
                .collect(),
        }
    }
}

/// Converts consequences into a USD magnitude.
pub fn monetize<T: Scalar>(consequence: &Consequence<T>, schedule: &MagnitudeSchedule<T>) -> Result<Magnitude<T>> {
    let mut total = consequence.fatalities * schedule.vsl_usd;
    for (class, count) in &consequence.injuries {
        let cost = schedule
            .injury_costs
            .get(class)
            .ok_or_else(|| Error::UnknownInjuryClass(class.clone()))?;
        total = total + *count * *cost;
    }
    total = total + consequence.person_hours * schedule.travel_time_usd_per_person_hour;
    Magnitude::new(total, Unit::Usd)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightingMode {
    #[default]
    Linear,
    Exponential,
}

impl WeightingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            WeightingMode::Linear => "linear",
            WeightingMode::Exponential => "exponential",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "linear" => Some(WeightingMode::Linear),
            "exponential" => Some(WeightingMode::Exponential),
            _ => None,
        }
    }
}

impl fmt::Display for WeightingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertaintyWeighting<T> {
    pub mode: WeightingMode,
    /// Only consulted in exponential mode.
    pub gamma: T,
}

impl<T: Scalar> Default for CertaintyWeighting<T> {
    fn default() -> Self {
        Self {
            mode: WeightingMode::Linear,
            gamma: T::lit(std::f64::consts::LN_10),
        }
    }
}

impl<T: Scalar> CertaintyWeighting<T> {
    pub fn linear() -> Self {
        Self::default()
    }

    pub fn exponential(gamma: T) -> Self {
        Self {
            mode: WeightingMode::Exponential,
            gamma,
        }
    }

    /// Exponent actually applied: zero in linear mode.
    pub fn effective_gamma(&self) -> T {
        match self.mode {
            WeightingMode::Linear => T::zero(),
            WeightingMode::Exponential => self.gamma,
        }
    }

    pub fn cast<U: Scalar>(&self) -> CertaintyWeighting<U> {
        CertaintyWeighting {
            mode: self.mode,
            gamma: U::lit(self.gamma.as_f64()),
        }
    }
}

/// `value · p · e^(gamma·p)`; exactly `value · p` when `gamma` is zero.
pub(crate) fn weighted_penalty<T: Scalar>(value: T, p: T, gamma: T) -> T {
    if gamma == T::zero() {
        value * p
    } else {
        value * p * (gamma * p).exp()
    }
}

/// Penalty of a fatality of value `base_value` occurring with probability `p`.
pub fn certainty_weighted_penalty<T: Scalar>(p: Probability<T>, base_value: T, weighting: &CertaintyWeighting<T>) -> T {
    weighted_penalty(base_value, p.value(), weighting.effective_gamma())
}

/// Multiplicative factor applied when a party attribute equals `value`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttributeFactor<T> {
    pub attribute: String,
    pub value: AttrValue,
    pub factor: T,
}

/// Geometric interpolation of a fatality factor between two age anchors,
/// clamped outside them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AgeCurve<T> {
    pub young_age: f64,
    pub young_factor: T,
    pub old_age: f64,
    pub old_factor: T,
}

impl<T: Scalar> AgeCurve<T> {
    pub fn factor(&self, age: f64) -> T {
        let span = self.old_age - self.young_age;
        if span <= 0.0 {
            return self.young_factor;
        }
        let t = ((age - self.young_age) / span).clamp(0.0, 1.0);
        if t == 0.0 {
            self.young_factor
        } else if t == 1.0 {
            self.old_factor
        } else {
            self.young_factor * (self.old_factor / self.young_factor).powf(T::lit(t))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModifierTable<T> {
    pub factors: Vec<AttributeFactor<T>>,
    pub age_curve: Option<AgeCurve<T>>,
}

impl<T: Scalar> Default for ModifierTable<T> {
    fn default() -> Self {
        default_modifier_table()
    }
}

/// Fatality relative risks: intoxicated ×2.0, female ×1.28, and an age
/// curve running from 1.0 at 20 to 3.0 at 70.
pub fn default_modifier_table<T: Scalar>() -> ModifierTable<T> {
    ModifierTable {
        factors: vec![
            AttributeFactor {
                attribute: "intoxicated".into(),
                value: AttrValue::Bool(true),
                factor: T::lit(2.0),
            },
            AttributeFactor {
                attribute: "sex".into(),
                value: AttrValue::Text("female".into()),
                factor: T::lit(1.28),
            },
        ],
        age_curve: Some(AgeCurve {
            young_age: 20.0,
            young_factor: T::one(),
            old_age: 70.0,
            old_factor: T::lit(3.0),
        }),
    }
}

impl<T: Scalar> ModifierTable<T> {
    pub fn empty() -> Self {
        Self {
            factors: Vec::new(),
            age_curve: None,
        }
    }

    pub fn age_factor(&self, age: f64) -> T {
        self.age_curve.map_or(T::one(), |c| c.factor(age))
    }

    /// Factors matching the attributes the decision may see, with labels.
    pub fn matching_factors(&self, party: &Party) -> Vec<(String, T)> {
        let mut out = Vec::new();
        for f in &self.factors {
            if party.decision_attr(&f.attribute) == Some(&f.value) {
                out.push((format!("{}={}", f.attribute, f.value), f.factor));
            }
        }
        if let (Some(_), Some(age)) = (
            self.age_curve,
            party.decision_attr("age").and_then(AttrValue::as_number),
        ) {
            out.push((format!("age={age}"), self.age_factor(age)));
        }
        out
    }

    pub fn cast<U: Scalar>(&self) -> ModifierTable<U> {
        ModifierTable {
            factors: self
                .factors
                .iter()
                .map(|f| AttributeFactor {
                    attribute: f.attribute.clone(),
                    value: f.value.clone(),
                    factor: U::lit(f.factor.as_f64()),
                })
                .collect(),
            age_curve: self.age_curve.map(|c| AgeCurve {
                young_age: c.young_age,
                young_factor: U::lit(c.young_factor.as_f64()),
                old_age: c.old_age,
                old_factor: U::lit(c.old_factor.as_f64()),
            }),
        }
    }
}

/// Product of matched factors taken in ascending order, so the result does
/// not depend on table or attribute ordering.
fn combined_factor<T: Scalar>(mut factors: Vec<T>) -> T {
    factors.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    factors.into_iter().fold(T::one(), |acc, f| acc * f)
}

/// Scales a base fatality probability by every factor matching the party,
/// clamped to `[0, 1]`.
pub fn apply_fatality_modifiers<T: Scalar>(
    base_p: Probability<T>,
    party: &Party,
    table: &ModifierTable<T>,
) -> Probability<T> {
    let factor = combined_factor(table.matching_factors(party).into_iter().map(|(_, f)| f).collect());
    Probability::saturating(base_p.value() * factor)
}

/// Decision view of a scenario: fatality outcomes carry modifier-adjusted
/// probabilities and the scenario's certainty-weighting exponent.
///
/// Withheld attributes (see [`crate::fairness::redact`]) contribute no factor.
pub fn effective_scenario<T: Scalar>(scenario: &Scenario<T>) -> Scenario<T> {
    let mut out = scenario.clone();
    let gamma = scenario.weighting.effective_gamma();
    for action in &mut out.actions {
        for outcome in &mut action.outcomes {
            if !outcome.fatal {
                continue;
            }
            if let Some(party) = outcome.affected_party.as_deref().and_then(|id| scenario.party(id)) {
                let matched = scenario.modifiers.matching_factors(party);
                if !matched.is_empty() {
                    let factor = combined_factor(matched.iter().map(|(_, f)| *f).collect());
                    outcome.probability = Probability::saturating(outcome.probability.value() * factor);
                    if let Some(u) = outcome.uncertainty.as_mut() {
                        u.lo = Probability::saturating(u.lo.value() * factor);
                        u.hi = Probability::saturating(u.hi.value() * factor);
                    }
                    for (label, f) in matched {
                        outcome.adjustments.push(format!("{label} x{f}"));
                    }
                }
            }
            if gamma != T::zero() && outcome.magnitude.value >= T::zero() {
                outcome.certainty_gamma = gamma;
                outcome.adjustments.push(format!("certainty gamma={gamma}"));
            }
        }
    }
    out
}
