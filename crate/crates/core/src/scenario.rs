//! Scenario data model: parties, maneuver alternatives and their outcomes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fairness::FairnessPolicy;
use crate::scalar::Scalar;
use crate::valuation::{CertaintyWeighting, MagnitudeSchedule, ModifierTable};

/// Attribute keys every scenario schema accepts without declaring them.
pub const BUILTIN_ATTRIBUTES: [&str; 6] = [
    "age",
    "helmet",
    "intoxicated",
    "sex",
    "vehicle_cost_class",
    "vehicle_mass_class",
];

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize)]
#[serde(transparent)]
pub struct Probability<T>(T);

impl<T: Scalar> Probability<T> {
    pub fn new(value: T) -> Result<Self> {
        if value >= T::zero() && value <= T::one() {
            Ok(Self(value))
        } else {
            Err(Error::ProbabilityOutOfRange(value.as_f64()))
        }
    }

    /// Clamps into `[0, 1]`; NaN maps to zero.
    pub fn saturating(value: T) -> Self {
        if value.is_nan() {
            Self(T::zero())
        } else {
            Self(value.max(T::zero()).min(T::one()))
        }
    }

    pub fn zero() -> Self {
        Self(T::zero())
    }

    pub fn one() -> Self {
        Self(T::one())
    }

    pub fn value(self) -> T {
        self.0
    }

    pub fn cast<U: Scalar>(self) -> Probability<U> {
        Probability(U::lit(self.0.as_f64()))
    }
}

/// Unit a magnitude is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    #[default]
    Abstract,
    Usd,
    StatisticalLives,
}

impl Unit {
    pub const ALL: [Unit; 3] = [Unit::Abstract, Unit::Usd, Unit::StatisticalLives];

    pub fn as_str(self) -> &'static str {
        match self {
            Unit::Abstract => "abstract",
            Unit::Usd => "usd",
            Unit::StatisticalLives => "statistical_lives",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|u| u.as_str() == s)
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Severity of an outcome should it occur. Negative values are benefits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Magnitude<T> {
    pub value: T,
    pub unit: Unit,
}

impl<T: Scalar> Magnitude<T> {
    pub fn new(value: T, unit: Unit) -> Result<Self> {
        if value.is_finite() {
            Ok(Self { value, unit })
        } else {
            Err(Error::NonFiniteMagnitude(value.as_f64()))
        }
    }

    pub fn abstract_units(value: T) -> Self {
        Self {
            value,
            unit: Unit::Abstract,
        }
    }
}

/// Bounds on how well the point probability of an outcome is known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbabilityUncertainty<T> {
    pub lo: Probability<T>,
    pub hi: Probability<T>,
}

/// Physical consequences that are monetized into a USD magnitude.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Consequence<T> {
    pub fatalities: T,
    pub injuries: BTreeMap<String, T>,
    pub person_hours: T,
}

impl<T: Scalar> Consequence<T> {
    pub fn cast<U: Scalar>(&self) -> Consequence<U> {
        Consequence {
            fatalities: U::lit(self.fatalities.as_f64()),
            injuries: self
                .injuries
                .iter()
                .map(|(k, v)| (k.clone(), U::lit(v.as_f64())))
                .collect(),
            person_hours: U::lit(self.person_hours.as_f64()),
        }
    }
}

/// One possible event under an action.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome<T> {
    pub id: String,
    pub description: String,
    pub magnitude: Magnitude<T>,
    pub probability: Probability<T>,
    /// Source expression the probability was evaluated from, when it was not a literal.
    pub probability_expr: Option<String>,
    pub uncertainty: Option<ProbabilityUncertainty<T>>,
    pub affected_party: Option<String>,
    pub exclusive_group: Option<String>,
    /// Fatality outcomes receive party modifiers and certainty weighting.
    pub fatal: bool,
    /// When present, `magnitude` was monetized from it.
    pub consequence: Option<Consequence<T>>,
    /// Certainty-weighting exponent; zero is linear. Set when preparing a decision.
    #[serde(skip)]
    pub certainty_gamma: T,
    /// Human-readable record of adjustments applied while preparing a decision.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub adjustments: Vec<String>,
}

impl<T: Scalar> Outcome<T> {
    pub fn new(id: impl Into<String>, magnitude: T, probability: T) -> Result<Self> {
        Ok(Self {
            id: id.into(),
            description: String::new(),
            magnitude: Magnitude::new(magnitude, Unit::Abstract)?,
            probability: Probability::new(probability)?,
            probability_expr: None,
            uncertainty: None,
            affected_party: None,
            exclusive_group: None,
            fatal: false,
            consequence: None,
            certainty_gamma: T::zero(),
            adjustments: Vec::new(),
        })
    }

    pub fn describe(mut self, description: impl Into<String>) -> Self {
        self.description = description.into();
        self
    }

    pub fn affecting(mut self, party: impl Into<String>) -> Self {
        self.affected_party = Some(party.into());
        self
    }

    pub fn in_group(mut self, group: impl Into<String>) -> Self {
        self.exclusive_group = Some(group.into());
        self
    }

    pub fn fatal(mut self) -> Self {
        self.fatal = true;
        self
    }

    pub fn with_unit(mut self, unit: Unit) -> Self {
        self.magnitude.unit = unit;
        self
    }

    pub fn with_uncertainty(mut self, lo: T, hi: T) -> Result<Self> {
        self.uncertainty = Some(ProbabilityUncertainty {
            lo: Probability::new(lo)?,
            hi: Probability::new(hi)?,
        });
        Ok(self)
    }

    pub fn cast<U: Scalar>(&self) -> Outcome<U> {
        Outcome {
            id: self.id.clone(),
            description: self.description.clone(),
            magnitude: Magnitude {
                value: U::lit(self.magnitude.value.as_f64()),
                unit: self.magnitude.unit,
            },
            probability: self.probability.cast(),
            probability_expr: self.probability_expr.clone(),
            uncertainty: self.uncertainty.map(|u| ProbabilityUncertainty {
                lo: u.lo.cast(),
                hi: u.hi.cast(),
            }),
            affected_party: self.affected_party.clone(),
            exclusive_group: self.exclusive_group.clone(),
            fatal: self.fatal,
            consequence: self.consequence.as_ref().map(Consequence::cast),
            certainty_gamma: U::lit(self.certainty_gamma.as_f64()),
            adjustments: self.adjustments.clone(),
        }
    }
}

/// A named maneuver owning a set of outcomes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionAlternative<T> {
    pub id: String,
    pub label: String,
    pub is_hold_course: bool,
    pub outcomes: Vec<Outcome<T>>,
}

impl<T: Scalar> ActionAlternative<T> {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            label: String::new(),
            is_hold_course: false,
            outcomes: Vec::new(),
        }
    }

    pub fn hold_course(mut self) -> Self {
        self.is_hold_course = true;
        self
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_outcome(mut self, outcome: Outcome<T>) -> Self {
        self.outcomes.push(outcome);
        self
    }

    pub fn outcome(&self, id: &str) -> Option<&Outcome<T>> {
        self.outcomes.iter().find(|o| o.id == id)
    }

    pub fn cast<U: Scalar>(&self) -> ActionAlternative<U> {
        ActionAlternative {
            id: self.id.clone(),
            label: self.label.clone(),
            is_hold_course: self.is_hold_course,
            outcomes: self.outcomes.iter().map(Outcome::cast).collect(),
        }
    }
}

/// Road-user role of a party.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Occupant,
    Pedestrian,
    Cyclist,
    OtherDriver,
    Object,
}

impl Role {
    pub const ALL: [Role; 5] = [
        Role::Occupant,
        Role::Pedestrian,
        Role::Cyclist,
        Role::OtherDriver,
        Role::Object,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Occupant => "occupant",
            Role::Pedestrian => "pedestrian",
            Role::Cyclist => "cyclist",
            Role::OtherDriver => "other_driver",
            Role::Object => "object",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.as_str() == s)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Value of a party attribute.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum AttrValue {
    Bool(bool),
    Number(f64),
    Text(String),
}

impl AttrValue {
    /// Interprets a raw token: `true`/`false`, a finite number, or text.
    pub fn parse(raw: &str) -> Self {
        match raw {
            "true" => AttrValue::Bool(true),
            "false" => AttrValue::Bool(false),
            _ => match raw.parse::<f64>() {
                Ok(x) if x.is_finite() => AttrValue::Number(x),
                _ => AttrValue::Text(raw.to_string()),
            },
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            AttrValue::Number(x) => Some(*x),
            _ => None,
        }
    }
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::Bool(b) => write!(f, "{b}"),
            AttrValue::Number(x) => write!(f, "{x}"),
            AttrValue::Text(s) => f.write_str(s),
        }
    }
}

/// A road user exposed to, benefiting from, or deciding on risk.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Party {
    pub id: String,
    pub role: Role,
    pub attributes: BTreeMap<String, AttrValue>,
    pub voluntary_exposure: bool,
    pub informed: bool,
    pub is_beneficiary: bool,
    pub is_decision_maker: bool,
    /// Attributes the decision must not use. Populated by fairness redaction.
    #[serde(skip_serializing_if = "BTreeSet::is_empty")]
    pub withheld: BTreeSet<String>,
}

impl Party {
    pub fn new(id: impl Into<String>, role: Role) -> Self {
        Self {
            id: id.into(),
            role,
            attributes: BTreeMap::new(),
            voluntary_exposure: false,
            informed: false,
            is_beneficiary: false,
            is_decision_maker: false,
            withheld: BTreeSet::new(),
        }
    }

    pub fn with_attr(mut self, key: impl Into<String>, value: AttrValue) -> Self {
        self.attributes.insert(key.into(), value);
        self
    }

    /// Attribute visible to decision logic (withheld attributes read as absent).
    pub fn decision_attr(&self, key: &str) -> Option<&AttrValue> {
        if self.withheld.contains(key) {
            None
        } else {
            self.attributes.get(key)
        }
    }
}

/// Criterion used to rank actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    #[default]
    Expected,
    RobustWorstCase,
}

impl SelectionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SelectionMode::Expected => "expected",
            SelectionMode::RobustWorstCase => "robust_worst_case",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "expected" => Some(SelectionMode::Expected),
            "robust_worst_case" | "robust" => Some(SelectionMode::RobustWorstCase),
            _ => None,
        }
    }
}

impl fmt::Display for SelectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parties, actions, policies and valuation settings: the unit of parsing,
/// evaluation and simulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario<T> {
    pub name: String,
    pub unit: Unit,
    /// Attribute keys declared in addition to [`BUILTIN_ATTRIBUTES`].
    pub attributes: BTreeSet<String>,
    /// Named values probability expressions may refer to.
    pub params: BTreeMap<String, T>,
    pub parties: Vec<Party>,
    pub actions: Vec<ActionAlternative<T>>,
    pub fairness_policy: FairnessPolicy,
    pub weighting: CertaintyWeighting<T>,
    pub schedule: MagnitudeSchedule<T>,
    pub modifiers: ModifierTable<T>,
    pub selection_mode: SelectionMode,
}

impl<T: Scalar> Scenario<T> {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            unit: Unit::Abstract,
            attributes: BTreeSet::new(),
            params: BTreeMap::new(),
            parties: Vec::new(),
            actions: Vec::new(),
            fairness_policy: FairnessPolicy::default(),
            weighting: CertaintyWeighting::default(),
            schedule: MagnitudeSchedule::default(),
            modifiers: ModifierTable::default(),
            selection_mode: SelectionMode::Expected,
        }
    }

    pub fn with_party(mut self, party: Party) -> Self {
        self.parties.push(party);
        self
    }

    pub fn with_action(mut self, action: ActionAlternative<T>) -> Self {
        self.actions.push(action);
        self
    }

    pub fn party(&self, id: &str) -> Option<&Party> {
        self.parties.iter().find(|p| p.id == id)
    }

    pub fn action(&self, id: &str) -> Option<&ActionAlternative<T>> {
        self.actions.iter().find(|a| a.id == id)
    }

    pub fn require_action(&self, id: &str) -> Result<&ActionAlternative<T>> {
        self.action(id).ok_or_else(|| Error::UnknownAction(id.to_string()))
    }

    /// Every attribute key this scenario accepts.
    pub fn attribute_schema(&self) -> BTreeSet<String> {
        BUILTIN_ATTRIBUTES
            .iter()
            .map(|s| s.to_string())
            .chain(self.attributes.iter().cloned())
            .collect()
    }

    /// Multiplies every outcome magnitude by `factor`.
    pub fn scale_magnitudes(&self, factor: T) -> Self {
        let mut out = self.clone();
        for outcome in out.actions.iter_mut().flat_map(|a| a.outcomes.iter_mut()) {
            outcome.magnitude.value = outcome.magnitude.value * factor;
        }
        out
    }

    pub fn cast<U: Scalar>(&self) -> Scenario<U> {
        Scenario {
            name: self.name.clone(),
            unit: self.unit,
            attributes: self.attributes.clone(),
            params: self
                .params
                .iter()
                .map(|(k, v)| (k.clone(), U::lit(v.as_f64())))
                .collect(),
            parties: self.parties.clone(),
            actions: self.actions.iter().map(ActionAlternative::cast).collect(),
            fairness_policy: self.fairness_policy.clone(),
            weighting: self.weighting.cast(),
            schedule: self.schedule.cast(),
            modifiers: self.modifiers.cast(),
            selection_mode: self.selection_mode,
        }
    }
}
